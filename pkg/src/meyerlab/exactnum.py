"""Exact arithmetic over Q and real number fields.

Everything here is built on arbitrary-precision rationals: polynomial
arithmetic, Sturm sequences, isolating intervals for real roots, interval
evaluation of real embeddings, and exact p-adic valuations on Q.  No float
ever enters a value that feeds a certificate.
"""

from __future__ import annotations

import enum
import math
import os
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

from .errors import PrecisionExhausted, UsageError

# Canonical exact rational type.  fractions.Fraction already maintains
# gcd(|num|, den) = 1 and den >= 1, which is the full Rational contract.
Rational = Fraction

_ENV_PRECISION = "MEYERLAB_MAX_PRECISION"


def default_max_precision() -> int:
    """Precision cap in bits, overridable via MEYERLAB_MAX_PRECISION."""
    raw = os.environ.get(_ENV_PRECISION)
    if raw is None:
        return 256
    try:
        bits = int(raw)
    except ValueError as exc:
        raise UsageError(f"{_ENV_PRECISION} must be an integer, got {raw!r}") from exc
    if bits < 8:
        raise UsageError(f"{_ENV_PRECISION} must be >= 8")
    return bits


def frac_str(q: Fraction) -> str:
    return str(Fraction(q))


def str_frac(s: str) -> Fraction:
    return Fraction(s)


# ---------------------------------------------------------------------------
# Dense univariate polynomials over Q: tuple of Fractions, low degree first.
# ---------------------------------------------------------------------------


def poly_trim(cs: Sequence[Fraction]) -> tuple[Fraction, ...]:
    cs = list(cs)
    while cs and cs[-1] == 0:
        cs.pop()
    return tuple(cs)


def poly_deg(cs: Sequence[Fraction]) -> int:
    return len(cs) - 1


def poly_add(a, b):
    n = max(len(a), len(b))
    return poly_trim(
        [(a[i] if i < len(a) else 0) + (b[i] if i < len(b) else 0) for i in range(n)]
    )


def poly_neg(a):
    return tuple(-c for c in a)


def poly_mul(a, b):
    if not a or not b:
        return ()
    out = [Fraction(0)] * (len(a) + len(b) - 1)
    for i, ca in enumerate(a):
        if ca == 0:
            continue
        for j, cb in enumerate(b):
            out[i + j] += ca * cb
    return poly_trim(out)


def poly_divmod(a, b):
    if not b:
        raise ZeroDivisionError("polynomial division by zero")
    a = list(a)
    q = [Fraction(0)] * max(0, len(a) - len(b) + 1)
    lead = b[-1]
    while len(a) >= len(b) and poly_trim(a):
        a = list(poly_trim(a))
        if len(a) < len(b):
            break
        shift = len(a) - len(b)
        coeff = a[-1] / lead
        q[shift] = coeff
        for i, cb in enumerate(b):
            a[shift + i] -= coeff * cb
        a.pop()
    return poly_trim(q), poly_trim(a)


def poly_eval(cs: Sequence[Fraction], x: Fraction) -> Fraction:
    acc = Fraction(0)
    for c in reversed(cs):
        acc = acc * x + c
    return acc


def poly_deriv(cs):
    return poly_trim([i * cs[i] for i in range(1, len(cs))])


def sturm_chain(cs) -> list[tuple[Fraction, ...]]:
    """Sturm sequence of a squarefree polynomial."""
    chain = [poly_trim(cs), poly_deriv(cs)]
    while chain[-1]:
        _, rem = poly_divmod(chain[-2], chain[-1])
        if not rem:
            break
        chain.append(poly_neg(rem))
    return [p for p in chain if p]


def _sign_variations(values: Iterable[Fraction]) -> int:
    signs = [1 if v > 0 else -1 for v in values if v != 0]
    return sum(1 for s, t in zip(signs, signs[1:]) if s != t)


def sturm_variations_at(chain, x: Fraction) -> int:
    return _sign_variations(poly_eval(p, x) for p in chain)


def sturm_variations_at_infinity(chain, positive: bool) -> int:
    vals = []
    for p in chain:
        lead = p[-1]
        if positive:
            vals.append(lead)
        else:
            vals.append(lead if (len(p) - 1) % 2 == 0 else -lead)
    return _sign_variations(vals)


def count_roots_in(chain, lo: Fraction, hi: Fraction) -> int:
    """Number of distinct real roots in (lo, hi]; endpoints must not be roots."""
    return sturm_variations_at(chain, lo) - sturm_variations_at(chain, hi)


# ---------------------------------------------------------------------------
# Rational intervals with exact endpoints.
# ---------------------------------------------------------------------------


def iv_add(a, b):
    return (a[0] + b[0], a[1] + b[1])


def iv_neg(a):
    return (-a[1], -a[0])


def iv_sub(a, b):
    return iv_add(a, iv_neg(b))


def iv_mul(a, b):
    ps = (a[0] * b[0], a[0] * b[1], a[1] * b[0], a[1] * b[1])
    return (min(ps), max(ps))


def iv_abs(a):
    lo, hi = a
    if lo >= 0:
        return (lo, hi)
    if hi <= 0:
        return (-hi, -lo)
    return (Fraction(0), max(-lo, hi))


def iv_width(a) -> Fraction:
    return a[1] - a[0]


def iv_contains(outer, inner) -> bool:
    return outer[0] <= inner[0] and inner[1] <= outer[1]


# ---------------------------------------------------------------------------
# Number fields K = Q(theta), power basis coordinates.
# ---------------------------------------------------------------------------


def _integer_roots(poly: Sequence[int]) -> list[int]:
    """Integer roots of a monic integer polynomial (all rational roots)."""
    c0 = poly[0]
    if c0 == 0:
        return [0]
    roots = []
    d = 1
    while d * d <= abs(c0):
        if c0 % d == 0:
            for cand in {d, -d, c0 // d, -(c0 // d)}:
                if sum(c * cand**i for i, c in enumerate(poly)) == 0:
                    roots.append(cand)
        d += 1
    return sorted(set(roots))


def _is_perfect_square(n: int) -> bool:
    if n < 0:
        return False
    r = math.isqrt(n)
    return r * r == n


def _quartic_has_quadratic_factor(poly: Sequence[int]) -> bool:
    """Monic integer quartic: test factorization into two monic quadratics."""
    c0, c1, c2, c3, _ = poly
    divisors = []
    d = 1
    while d * d <= abs(c0):
        if c0 % d == 0:
            divisors.extend({d, -d, c0 // d, -(c0 // d)})
        d += 1
    if c0 == 0:
        return True  # X divides, caught earlier anyway
    for q in sorted(set(divisors)):
        if q == 0 or c0 % q != 0:
            continue
        s = c0 // q
        # (X^2+pX+q)(X^2+rX+s): p+r=c3, q+s+pr=c2, ps+qr=c1
        pr = c2 - q - s
        disc = c3 * c3 - 4 * pr
        if not _is_perfect_square(disc):
            continue
        root = math.isqrt(disc)
        for p in {(c3 + root), (c3 - root)}:
            if p % 2 != 0:
                continue
            p //= 2
            r = c3 - p
            if p * s + q * r == c1:
                return True
    return False


def _check_irreducible(poly: Sequence[int]) -> None:
    d = len(poly) - 1
    if d == 1:
        return
    if _integer_roots(poly):
        raise UsageError(f"minimal polynomial {list(poly)} has a rational root")
    if d == 4 and _quartic_has_quadratic_factor(poly):
        raise UsageError(f"minimal polynomial {list(poly)} splits into quadratics")
    # d in {2,3}: no rational root suffices; d > 4: rational-root precheck only,
    # full irreducibility is the caller's precondition.


class NumberField:
    """K = Q(theta) for theta a root of a monic irreducible integer polynomial.

    Coordinates are always in the power basis 1, theta, ..., theta^(d-1).
    The rationals are the degree-1 field with minimal polynomial X.
    """

    def __init__(self, min_poly: Sequence[int], name: str | None = None):
        coeffs = tuple(int(c) for c in min_poly)
        if len(coeffs) < 2:
            raise UsageError("minimal polynomial must have degree >= 1")
        if coeffs[-1] != 1:
            raise UsageError("minimal polynomial must be monic")
        _check_irreducible(coeffs)
        self.min_poly: tuple[int, ...] = coeffs
        self.degree: int = len(coeffs) - 1
        self.name = name
        self._real_roots: list[RealEmbeddingInterval] | None = None
        # canonical refinement chain per root: raw isolating interval plus one
        # memoised interval per power-of-two level.  Every refinement result is
        # a pure function of (root, level), never of cache warmth, so values
        # derived from embeddings are identical across sessions and replays.
        self._root_bases: dict[int, tuple[Fraction, Fraction]] = {}
        self._refine_cache: dict[tuple[int, int], "RealEmbeddingInterval"] = {}

    def __repr__(self):
        return f"NumberField({list(self.min_poly)})"

    def __eq__(self, other):
        return isinstance(other, NumberField) and self.min_poly == other.min_poly

    def __hash__(self):
        return hash(self.min_poly)

    @property
    def is_rational_field(self) -> bool:
        return self.degree == 1

    def min_poly_fractions(self) -> tuple[Fraction, ...]:
        return tuple(Fraction(c) for c in self.min_poly)

    def elem(self, coeffs) -> "NFElem":
        cs = [Fraction(c) for c in coeffs]
        if len(cs) > self.degree:
            raise UsageError("coefficient vector longer than field degree")
        cs += [Fraction(0)] * (self.degree - len(cs))
        return NFElem(self, tuple(cs))

    def zero(self) -> "NFElem":
        return self.elem([])

    def one(self) -> "NFElem":
        return self.elem([1])

    def gen(self) -> "NFElem":
        if self.degree == 1:
            return self.elem([-self.min_poly[0]])
        return self.elem([0, 1])

    def from_rational(self, q) -> "NFElem":
        return self.elem([Fraction(q)])

    def real_roots(self) -> list["RealEmbeddingInterval"]:
        """Isolating intervals for the real roots, ascending, pairwise disjoint."""
        if self._real_roots is None:
            self._real_roots = _isolate_real_roots(self)
        return list(self._real_roots)

    def real_root_count(self) -> int:
        return len(self.real_roots())

    def to_dict(self) -> dict:
        return {"min_poly": list(self.min_poly)}

    @staticmethod
    def from_dict(data: dict) -> "NumberField":
        return NumberField(data["min_poly"])


RATIONAL_FIELD = NumberField([0, 1], name="Q")


def golden_field() -> NumberField:
    """Q(sqrt 5) generated by the golden ratio, X^2 - X - 1."""
    return NumberField([-1, -1, 1], name="golden")


def sqrt2_field() -> NumberField:
    return NumberField([-2, 0, 1], name="sqrt2")


@dataclass(frozen=True)
class RealEmbeddingInterval:
    """Isolating interval for one real root of a field's minimal polynomial.

    The open interval (lo, hi) contains exactly one root and the polynomial
    changes sign across it; lo == hi encodes an exact rational root (degree-1
    fields).  Refinement bisects and never loses the root.
    """

    field: NumberField
    root_index: int
    lo: Fraction
    hi: Fraction
    precision_bits: int

    @property
    def is_exact(self) -> bool:
        return self.lo == self.hi

    def width(self) -> Fraction:
        return self.hi - self.lo

    def midpoint(self) -> Fraction:
        return (self.lo + self.hi) / 2

    def refined(self, bits: int) -> "RealEmbeddingInterval":
        """Canonical interval of width <= 2^-level for the next power-of-two level.

        The result is a pure function of (field, root, level): bisection always
        continues the one deterministic chain from the raw isolating interval,
        so refinements replay identically in any session and thread order.
        """
        if self.is_exact:
            return self
        level = _canonical_level(bits)
        key = (self.root_index, level)
        cached = self.field._refine_cache.get(key)
        if cached is not None:
            return cached
        lo, hi = self.field._root_bases[self.root_index]
        probe = level
        while probe > 8:
            probe //= 2
            earlier = self.field._refine_cache.get((self.root_index, probe))
            if earlier is not None:
                lo, hi = earlier.lo, earlier.hi
                break
        target = Fraction(1, 2**level)
        if hi - lo > target:
            poly = self.field.min_poly_fractions()
            flo = poly_eval(poly, lo)
            while hi - lo > target:
                mid = (lo + hi) / 2
                fmid = poly_eval(poly, mid)
                # mid is never a root: irreducible of degree >= 2 has no rational root
                if (flo > 0) != (fmid > 0):
                    hi = mid
                else:
                    lo, flo = mid, fmid
        out = RealEmbeddingInterval(self.field, self.root_index, lo, hi, level)
        self.field._refine_cache[key] = out
        return out

    def to_dict(self) -> dict:
        return {
            "root_index": self.root_index,
            "lo": frac_str(self.lo),
            "hi": frac_str(self.hi),
            "precision_bits": self.precision_bits,
        }


def _canonical_level(bits: int) -> int:
    level = 8
    while level < bits:
        level *= 2
    return level


def _isolate_real_roots(field: NumberField) -> list[RealEmbeddingInterval]:
    poly = field.min_poly_fractions()
    if field.degree == 1:
        root = -poly[0]
        return [RealEmbeddingInterval(field, 0, root, root, 0)]
    chain = sturm_chain(poly)
    total = sturm_variations_at_infinity(chain, positive=False) - sturm_variations_at_infinity(
        chain, positive=True
    )
    if total == 0:
        return []
    bound = Fraction(2) + max(abs(Fraction(c)) for c in poly[:-1])
    segments = [(-bound, bound, count_roots_in(chain, -bound, bound))]
    done = []
    while segments:
        lo, hi, count = segments.pop()
        if count == 0:
            continue
        if count == 1:
            done.append((lo, hi))
            continue
        mid = (lo + hi) / 2
        left = count_roots_in(chain, lo, mid)
        segments.append((lo, mid, left))
        segments.append((mid, hi, count - left))
    done.sort()
    out = []
    for i, (lo, hi) in enumerate(done):
        field._root_bases[i] = (lo, hi)
        out.append(RealEmbeddingInterval(field, i, lo, hi, 0).refined(8))
    if len(out) != total:
        raise AssertionError("Sturm isolation lost a root")
    return out


# ---------------------------------------------------------------------------
# Field elements.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class NFElem:
    """Element of a number field in power-basis coordinates; fully exact."""

    field: NumberField
    coeffs: tuple[Fraction, ...]

    def __post_init__(self):
        if len(self.coeffs) != self.field.degree:
            raise UsageError("coefficient vector does not match field degree")

    def _coerce(self, other) -> "NFElem":
        if isinstance(other, NFElem):
            if other.field != self.field:
                raise UsageError("elements from different number fields")
            return other
        if isinstance(other, (int, Fraction)):
            return self.field.from_rational(other)
        return NotImplemented  # type: ignore[return-value]

    @property
    def is_zero(self) -> bool:
        return all(c == 0 for c in self.coeffs)

    @property
    def is_rational(self) -> bool:
        return all(c == 0 for c in self.coeffs[1:])

    def as_rational(self) -> Fraction:
        if not self.is_rational:
            raise UsageError("element is not rational")
        if self.field.degree == 1:
            return self.coeffs[0]
        return self.coeffs[0]

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return NFElem(self.field, tuple(a + b for a, b in zip(self.coeffs, other.coeffs)))

    __radd__ = __add__

    def __neg__(self):
        return NFElem(self.field, tuple(-a for a in self.coeffs))

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return nf_mul(self, other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self * nf_inv(other)

    def __pow__(self, n: int):
        if n < 0:
            return nf_inv(self) ** (-n)
        out = self.field.one()
        base = self
        while n:
            if n & 1:
                out = out * base
            base = base * base
            n >>= 1
        return out

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            other = self.field.from_rational(other)
        if not isinstance(other, NFElem):
            return NotImplemented
        return self.field == other.field and self.coeffs == other.coeffs

    def __hash__(self):
        return hash((self.field, self.coeffs))

    def __repr__(self):
        return f"NFElem({[str(c) for c in self.coeffs]})"

    def mult_matrix(self) -> list[list[Fraction]]:
        """Matrix of multiplication by self on the power basis (column j = self * theta^j)."""
        d = self.field.degree
        cols = []
        theta = self.field.gen()
        acc = self
        for _ in range(d):
            cols.append(list(acc.coeffs))
            acc = acc * theta
        return [[cols[j][i] for j in range(d)] for i in range(d)]

    def trace(self) -> Fraction:
        m = self.mult_matrix()
        return sum(m[i][i] for i in range(len(m)))

    def norm(self) -> Fraction:
        return _det(self.mult_matrix())

    def to_list(self) -> list[str]:
        return [frac_str(c) for c in self.coeffs]


def _det(m: list[list[Fraction]]) -> Fraction:
    m = [row[:] for row in m]
    n = len(m)
    det = Fraction(1)
    for col in range(n):
        pivot = next((r for r in range(col, n) if m[r][col] != 0), None)
        if pivot is None:
            return Fraction(0)
        if pivot != col:
            m[col], m[pivot] = m[pivot], m[col]
            det = -det
        det *= m[col][col]
        inv = 1 / m[col][col]
        for r in range(col + 1, n):
            factor = m[r][col] * inv
            if factor == 0:
                continue
            for c in range(col, n):
                m[r][c] -= factor * m[col][c]
    return det


def nf_mul(a: NFElem, b: NFElem) -> NFElem:
    """Exact product, reduced modulo the minimal polynomial."""
    if a.field != b.field:
        raise UsageError("nf_mul: elements from different number fields")
    prod = poly_mul(poly_trim(a.coeffs), poly_trim(b.coeffs))
    _, rem = poly_divmod(prod, a.field.min_poly_fractions())
    cs = list(rem) + [Fraction(0)] * (a.field.degree - len(rem))
    return NFElem(a.field, tuple(cs[: a.field.degree]))


def nf_add(a: NFElem, b: NFElem) -> NFElem:
    return a + b


def nf_inv(a: NFElem) -> NFElem:
    """Multiplicative inverse; exists iff a != 0 (minimal polynomial irreducible)."""
    if a.is_zero:
        raise ZeroDivisionError("inverse of zero field element")
    # extended Euclid in Q[X]: u*a + v*minpoly = 1
    r0, r1 = a.field.min_poly_fractions(), poly_trim(a.coeffs)
    s0, s1 = (), (Fraction(1),)
    while poly_deg(r1) > 0:
        q, r = poly_divmod(r0, r1)
        r0, r1 = r1, r
        s0, s1 = s1, poly_add(s0, poly_neg(poly_mul(q, s1)))
    if not r1:
        raise UsageError("element not invertible (minimal polynomial not irreducible?)")
    scale = 1 / r1[0]
    inv = tuple(c * scale for c in s1)
    cs = list(inv) + [Fraction(0)] * (a.field.degree - len(inv))
    return NFElem(a.field, tuple(cs[: a.field.degree]))


def real_roots(field: NumberField) -> list[RealEmbeddingInterval]:
    return field.real_roots()


# ---------------------------------------------------------------------------
# Certified embedding evaluation and comparisons.
# ---------------------------------------------------------------------------


def eval_embedding(
    x: NFElem, place: RealEmbeddingInterval, precision_bits: int
) -> tuple[Fraction, Fraction]:
    """Rational interval provably containing sigma(x).

    Width <= 2^-precision_bits * (1 + |midpoint|).
    """
    if precision_bits < 1:
        raise UsageError("precision_bits must be >= 1")
    if x.field != place.field:
        raise UsageError("element and place from different fields")
    if place.is_exact:
        v = poly_eval(poly_trim(x.coeffs) or (Fraction(0),), place.lo)
        return (v, v)
    cs = x.coeffs
    # start from the requested level only: the result must not depend on how
    # refined the passed place object happens to be
    bits = max(precision_bits, 8)
    for _ in range(64):
        pl = place.refined(bits)
        iv = (Fraction(0), Fraction(0))
        theta = (pl.lo, pl.hi)
        for c in reversed(cs):
            iv = iv_add(iv_mul(iv, theta), (c, c))
        mid = (iv[0] + iv[1]) / 2
        if iv_width(iv) <= Fraction(1, 2**precision_bits) * (1 + abs(mid)):
            return iv
        bits *= 2
    raise PrecisionExhausted("embedding interval did not converge", bits=bits)


class Cmp(enum.Enum):
    LESS = "LESS"
    EQUAL = "EQUAL"
    GREATER = "GREATER"


def compare_abs_to_one(
    x: NFElem, place: RealEmbeddingInterval, max_precision: int | None = None
) -> Cmp:
    """Certified comparison of |sigma(x)| against 1.

    |sigma(x)| = 1 forces x = 1 or x = -1 because a real embedding is
    injective, so the EQUAL case is decided exactly and everything else by
    interval refinement.
    """
    if x == 1 or x == -1:
        return Cmp.EQUAL
    cap = max_precision if max_precision is not None else default_max_precision()
    bits = 8
    while bits <= cap:
        lo, hi = iv_abs(eval_embedding(x, place, bits))
        if hi < 1:
            return Cmp.LESS
        if lo > 1:
            return Cmp.GREATER
        bits *= 2
    raise PrecisionExhausted(
        f"could not separate |sigma(x)| from 1 within {cap} bits", bits=cap
    )


def cmp_embedding(
    x: NFElem,
    place: RealEmbeddingInterval,
    r,
    max_precision: int | None = None,
) -> int:
    """Certified sign of sigma(x) - r for rational r: -1, 0, or +1."""
    r = Fraction(r)
    if x == r:
        return 0
    cap = max_precision if max_precision is not None else default_max_precision()
    bits = 8
    while bits <= cap:
        lo, hi = eval_embedding(x, place, bits)
        if hi < r:
            return -1
        if lo > r:
            return 1
        bits *= 2
    raise PrecisionExhausted(
        f"could not separate sigma(x) from {r} within {cap} bits", bits=cap
    )


def abs_embedding_leq(
    x: NFElem, place: RealEmbeddingInterval, bound, max_precision: int | None = None
) -> bool:
    """Certified decision of |sigma(x)| <= bound (closed, exact at boundary)."""
    bound = Fraction(bound)
    if bound < 0:
        return False
    return (
        cmp_embedding(x, place, bound, max_precision) <= 0
        and cmp_embedding(x, place, -bound, max_precision) >= 0
    )


# ---------------------------------------------------------------------------
# p-adic valuations on Q.
# ---------------------------------------------------------------------------

_SMALL_PRIMES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    for p in _SMALL_PRIMES:
        if n % p == 0:
            return n == p
    # deterministic Miller-Rabin for n < 3.3e24
    d, s = n - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for a in (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37):
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def padic_valuation(q, p: int):
    """v_p(q) with |q|_p = p^-v exactly; +inf for q = 0."""
    if not is_prime(p):
        raise UsageError(f"{p} is not prime")
    q = Fraction(q)
    if q == 0:
        return math.inf
    v = 0
    num = q.numerator
    den = q.denominator
    while num % p == 0:
        num //= p
        v += 1
    while den % p == 0:
        den //= p
        v -= 1
    return v


def prime_factors(n: int) -> list[int]:
    n = abs(n)
    out = []
    d = 2
    while d * d <= n:
        if n % d == 0:
            out.append(d)
            while n % d == 0:
                n //= d
        d += 1 if d == 2 else 2
    if n > 1:
        out.append(n)
    return out

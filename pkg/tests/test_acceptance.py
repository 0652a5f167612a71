"""Acceptance suite: one test per criterion, exact oracles at desk scale.

Run with `pytest tests/test_acceptance.py -v -s` to see one PASS line per
criterion; any assertion failure is the corresponding FAIL line.
"""

import itertools
import json
import math
import random
from fractions import Fraction

import pytest

from meyerlab import cli, cps, heis, places, serialize, verify
from meyerlab.errors import UnsupportedSubgroup
from meyerlab.exactnum import golden_field, sqrt2_field

# Frozen bracketing constants, verified by squaring in criterion 2's oracle.
SQRT5_LO = Fraction(2236067977, 10**9)
SQRT5_HI = Fraction(2236067978, 10**9)
SQRT2_LO = Fraction(1414213562, 10**9)
SQRT2_HI = Fraction(1414213563, 10**9)

ORACLE_ROOTS = {
    "golden": {
        "phys": ((1 + SQRT5_LO) / 2, (1 + SQRT5_HI) / 2),
        "internal": ((1 - SQRT5_HI) / 2, (1 - SQRT5_LO) / 2),
    },
    "sqrt2": {
        "phys": (SQRT2_LO, SQRT2_HI),
        "internal": (-SQRT2_HI, -SQRT2_LO),
    },
}


def _passed(n, detail):
    print(f"[ACCEPTANCE] criterion {n}: PASS - {detail}")


def brute_quadratic_patch(name, phys_R, int_c, span):
    """Independent oracle: frozen-bound interval enumeration of a + b*theta,
    with every candidate decided decisively (exact for rational candidates)."""
    phys = ORACLE_ROOTS[name]["phys"]
    internal = ORACLE_ROOTS[name]["internal"]
    phys_R, int_c = Fraction(phys_R), Fraction(int_c)
    out = set()
    for b in range(-span, span + 1):
        for a in range(-span, span + 1):
            keep = True
            for (rlo, rhi), bound in ((phys, phys_R), (internal, int_c)):
                if b == 0:
                    if abs(Fraction(a)) > bound:
                        keep = False
                    continue
                vals = (a + b * rlo, a + b * rhi)
                lo, hi = min(vals), max(vals)
                if hi < -bound or lo > bound:
                    keep = False
                elif not (-bound <= lo and hi <= bound):
                    raise AssertionError(f"oracle indecisive at ({a}, {b})")
            if keep:
                out.add((a, b))
    return out


def test_criterion_1_zs_exactness():
    checked = 0
    for primes in ((2,), (3,), (2, 3)):
        scheme = cps.ZSScheme(primes)
        for k in (0, 1, 2):
            window = cps.Window.balls(*((p, k) for p in primes))
            step = Fraction(1)
            for p in primes:
                step /= Fraction(p) ** k
            for radius in (3, 10, 50):
                patch = cps.model_set_patch(scheme, window, radius)
                n_max = math.floor(Fraction(radius) / step)
                expected = [n * step for n in range(-n_max, n_max + 1)]
                assert list(patch.points) == expected, (primes, k, radius)
                checked += 1
    assert checked == 27
    _passed(1, f"{checked} (primes, level, radius) cases match (prod p^-k) Z exactly")


@pytest.mark.parametrize("name,field_fn", [("golden", golden_field), ("sqrt2", sqrt2_field)])
def test_criterion_2_model_sets_are_approximate_lattices(name, field_fn):
    assert SQRT5_LO**2 < 5 < SQRT5_HI**2 and SQRT2_LO**2 < 2 < SQRT2_HI**2
    scheme = cps.GaloisScheme(field_fn())
    window = cps.Window.box(1)
    cert = cps.approximate_lattice_certificate(scheme, window, patch_radius=20)
    assert len(cert.translates) <= 8
    assert cert.delone.min_separation > 0
    assert cert.delone.covering.verdict == "FINITE"

    # brute-force oracle at R = 50: the doubled-window patch is covered by F
    big = brute_quadratic_patch(name, 50, 2, span=55)
    margin = 55
    small_margin = brute_quadratic_patch(name, margin + 5, 1, span=margin + 8)
    translates = [(int(t[0].coeffs[0]), int(t[0].coeffs[1])) for t in cert.translates]
    for a, b in big:
        assert any((a - ta, b - tb) in small_margin for ta, tb in translates), (a, b)

    # certificate replays bit-exactly from its serialized bytes
    blob = serialize.canonical_json(cert.cover.to_dict())
    again = cps.GlobalCoverCertificate.from_dict(json.loads(blob))
    assert again.replay()
    assert serialize.canonical_json(again.to_dict()) == blob
    _passed(2, f"{name}: |F| = {len(cert.translates)} <= 8, Delone, R=50 oracle cover, bit-exact replay")


def test_criterion_3_pvs_certification():
    golden_ring = places.ring_pvs(golden_field(), 1)
    cert = places.s_integer_membership(golden_field().gen(), golden_ring)
    assert cert.is_member and cert.replay()

    sqrt2_ring = places.ring_pvs(sqrt2_field(), 1)
    x = sqrt2_field().one() + sqrt2_field().gen()
    cert2 = places.s_integer_membership(x, sqrt2_ring)
    assert cert2.is_member and cert2.replay()

    rej = places.s_integer_membership(Fraction(1, 3), places.ring_zs([2]))
    assert not rej.is_member
    assert rej.witness_place.prime == 3

    rng = random.Random(42)
    count = 0
    while count < 20:
        q = Fraction(rng.randint(-500, 500), rng.randint(1, 500))
        if q == 0:
            continue
        report = places.product_formula_check(q)
        assert report.exact_product == 1 and report.holds
        count += 1
    _passed(3, "golden and 1+sqrt2 certified; 1/3 rejected at p=3; product formula exact on 20 rationals")


def oracle_cover_count(bound, tile=Fraction(1)):
    """Independent greedy bound for covering [-B, B] by unit tiles at best
    possible spacing 2*tile: ceil(B/tile) forced tiles, 1 when B <= tile."""
    bound = Fraction(bound)
    if bound <= tile:
        return 1
    return math.ceil(bound / tile)


def test_criterion_4_polynomial_lemma():
    ring = places.ring_pvs(golden_field(), 1)
    sizes = {}
    for label, poly in (("X^2", [0, 0, 1]), ("2X", [0, 2]), ("3X^2+X", [0, 1, 3])):
        cert = places.polynomial_translate_cover(poly, ring, window_scale=1)
        assert cert.replay()
        blob = serialize.canonical_json(cert.to_dict())
        again = places.TranslateCoverCertificate.from_dict(json.loads(blob))
        assert again.replay()
        assert serialize.canonical_json(again.to_dict()) == blob
        oracle = oracle_cover_count(cert.conj_bound)
        size = len(cert.translates)
        assert size <= 2 * oracle and oracle <= 2 * size, (label, size, oracle)
        sizes[label] = size

        shrink = places.shrink_for_polynomial(poly, ring, patch_radius=8)
        assert shrink.replay()
        assert 0 < shrink.delta <= 1
        value = sum(
            hi * shrink.delta**i for i, hi in enumerate(shrink.coeff_bounds, start=1)
        )
        assert value <= 1
    _passed(4, f"translate covers {sizes} within factor 2 of the greedy oracle; shrink certificates replay")


def test_criterion_5_heisenberg_suite():
    f2 = sqrt2_field()
    rng = random.Random(2024)

    def rand_alg():
        return heis.algebra_elem(
            f2, *(Fraction(rng.randint(-9, 9), rng.randint(1, 5)) for _ in range(3))
        )

    for _ in range(1000):
        u, v = rand_alg(), rand_alg()
        assert heis.heis_exp(heis.bch2(u, v)) == heis.heis_mul(heis.heis_exp(u), heis.heis_exp(v))
        w = heis.heis_log(heis.heis_exp(u))
        assert (w.a, w.b, w.c) == (u.a, u.b, u.c)

    scheme = heis.HeisScheme(f2, (1, 1, 2))
    cover = heis.heis_covering_certificate(scheme)
    assert cover.replay()

    gaps = {}
    for radius in (10, 20):
        res = heis.center_intersection(scheme, radius)
        assert res.conclusive
        assert res.report.min_separation > 0
        gaps[radius] = res.report.min_separation

    small_scheme = heis.HeisScheme(f2, (1, 1, 1))
    patch = heis.heis_model_set(small_scheme, 2)
    res = heis.commutator_map(heis.point(f2, 1, 0, 0), patch)
    assert res.homomorphism_exact and not res.trivial
    assert heis.commutator(heis.point(f2, 1, 0, 0), heis.point(f2, 0, 1, 0)) == heis.point(
        f2, 0, 0, 1
    )

    big = heis.heis_model_set(scheme, 8)
    sym = heis.symmetrize(big.points)
    meyer = heis.meyer_commensurability(sym, big.points, big.group_ops(), 4)
    assert meyer.verdict == "COMMENSURABLE-AT-SCALE"
    assert meyer.cover_ab.replay(big.points, big.group_ops())
    assert meyer.cover_ba.replay(sym, big.group_ops())
    _passed(
        5,
        f"1000 exp/log/bch identities exact; cover |F| = {len(cover.translates)}; "
        f"centre gaps {dict((k, f'{float(v):.5f}') for k, v in gaps.items())} (exact bounds in report); "
        f"two-way covers {len(meyer.cover_ab.translates)}/{len(meyer.cover_ba.translates)}",
    )


def brute_min_cover(xs, quotient, ops, cap):
    qs = set(quotient)
    for size in range(1, cap + 1):
        for combo in itertools.combinations(xs, size):
            if all(any(ops.mul(ops.inv(f), x) in qs for f in combo) for x in xs):
                return size
    return cap


def test_criterion_6_appendix_lemmas():
    rng = random.Random(7)
    instances = 0
    while instances < 100:
        modular = instances % 2 == 0
        if modular:
            n = rng.randint(6, 12)
            ops = verify.intmod_ops(n)
            y = sorted({rng.randint(0, n - 1) for _ in range(rng.randint(2, 3))})
            f = sorted({rng.randint(0, n - 1) for _ in range(rng.randint(2, 3))})
            x = sorted({ops.mul(rng.choice(f), rng.choice(y)) for _ in range(rng.randint(2, 30))})
        else:
            ops = verify.rational_line_ops()
            y = sorted({Fraction(rng.randint(-4, 4)) for _ in range(rng.randint(2, 4))})
            f = sorted({Fraction(rng.randint(-10, 10)) for _ in range(rng.randint(2, 4))})
            x = sorted({ops.mul(rng.choice(f), rng.choice(y)) for _ in range(rng.randint(2, 30))})
        if len(x) < 2:
            continue
        witness = verify.cell_cover(x, [(f, y)], ops)
        assert witness.size <= len(f)
        quotient = {ops.mul(ops.inv(a), b) for a in y for b in y}
        minimal = brute_min_cover(x, quotient, ops, witness.size)
        assert minimal <= witness.size <= len(f)
        instances += 1

    scheme = cps.GaloisScheme(golden_field())
    window = cps.Window.box(1)
    cert = cps.approximate_lattice_certificate(scheme, window, patch_radius=12)
    patch = cps.model_set_patch(scheme, window, 12)
    ops = scheme.group_ops()
    sizes = {}
    for k in (2, 3, 4):
        res = verify.approx_power_cover(patch.points, k, cert.translates, ops, 12)
        assert res.verified, f"k={k} witness {res.witness}"
        assert len(res.translates) <= len(cert.translates) ** (k - 1)
        assert res.checked > 0
        sizes[k] = (len(res.translates), len(cert.translates) ** (k - 1))
    _passed(6, f"100 cell-cover instances bounded and oracle-consistent; power covers {sizes}")


def test_criterion_7_intersection_projection_equivalence():
    scheme = cps.GaloisScheme(golden_field(), dim=2)
    window = cps.Window.box(1, 1)
    res = cps.project_to_quotient(scheme, [0], window, 8)
    assert res.projection_min_separation is not None and res.projection_min_separation > 0
    assert res.intersection_report is not None and res.intersection_report.is_delone
    assert res.equivalence_consistent

    inter = cps.intersect_with_subgroup(scheme, [0], window, 8)
    assert inter.cover_to_induced is not None and inter.cover_from_induced is not None

    theta = golden_field().gen()
    with pytest.raises(UnsupportedSubgroup):
        cps.intersect_with_subgroup(scheme, [(golden_field().one(), theta)], window, 8)
    _passed(
        7,
        f"projection min_sep ~ {float(res.projection_min_separation):.5f} (certified > 0), intersection Delone; "
        "irrational-slope subspace rejected as unsupported",
    )


def test_criterion_8_determinism_across_thread_counts(tmp_path):
    jobs = (
        ("zs.json", ["cps", "generate", "--scheme", "zs:2,3", "--window", "1", "--radius", "20"]),
        ("zs.csv", None),
        ("fib.json", ["cps", "certify", "--scheme", "galois:golden", "--window", "1", "--radius", "12"]),
        ("heis.json", ["heis", "generate", "--field", "sqrt2", "--window", "1,1,2", "--radius", "5"]),
    )
    blobs = {}
    for threads in ("1", "8"):
        out_zs_json = tmp_path / f"zs-{threads}.json"
        out_zs_csv = tmp_path / f"zs-{threads}.csv"
        assert cli.run(jobs[0][1] + ["--threads", threads, "--json", str(out_zs_json),
                                     "--out", str(out_zs_csv)]) == 0
        out_fib = tmp_path / f"fib-{threads}.json"
        assert cli.run(jobs[2][1] + ["--threads", threads, "--json", str(out_fib)]) == 0
        out_heis = tmp_path / f"heis-{threads}.json"
        assert cli.run(jobs[3][1] + ["--threads", threads, "--json", str(out_heis)]) == 0
        blobs[threads] = (
            out_zs_json.read_bytes(),
            out_zs_csv.read_bytes(),
            out_fib.read_bytes(),
            out_heis.read_bytes(),
        )
    assert blobs["1"] == blobs["8"]
    _passed(8, "four artifacts byte-identical across thread counts 1 and 8")

import itertools
import random
from fractions import Fraction

import pytest

from meyerlab import cps, verify
from meyerlab.errors import UsageError
from meyerlab.exactnum import golden_field


def frac_points(values):
    return [Fraction(v) for v in values]


def line_ops():
    return verify.rational_line_ops()


def fib_patch(radius=10):
    scheme = cps.GaloisScheme(golden_field())
    return cps.model_set_patch(scheme, cps.Window.box(1), radius)


class TestMinSeparation:
    def test_integer_patch(self):
        sep, _ = verify.min_separation(frac_points(range(-4, 5)), line_ops())
        assert sep == 1

    def test_half_integer_patch(self):
        pts = [Fraction(n, 2) for n in range(-6, 7)]
        sep, _ = verify.min_separation(pts, line_ops())
        assert sep == Fraction(1, 2)

    def test_fibonacci_patch_positive(self):
        patch = fib_patch(10)
        sep, witness = verify.min_separation(patch.points, patch.group_ops())
        assert sep > 0
        # the witness pair is stored exactly and has nonzero difference
        a, b = witness
        assert (a[0] - b[0]).is_zero is False

    def test_nonincreasing_in_radius(self):
        seps = []
        for radius in (5, 10, 20):
            patch = fib_patch(radius)
            sep, _ = verify.min_separation(patch.points, patch.group_ops())
            seps.append(sep)
        assert seps[0] >= seps[1] >= seps[2]

    def test_needs_two_points(self):
        with pytest.raises(UsageError):
            verify.min_separation([Fraction(0)], line_ops())


class TestCoveringRadius:
    def test_integer_patch(self):
        res = verify.covering_radius(frac_points(range(-8, 9)), line_ops(), 3)
        assert res.verdict == "FINITE"
        assert Fraction(1, 2) <= res.bound <= Fraction(3, 4)
        # the mesh slack is within 10% of the empirical value
        assert res.mesh <= res.empirical / 10

    def test_single_point_is_infinite(self):
        res = verify.covering_radius([Fraction(0)], line_ops(), 3)
        assert res.verdict == "INFINITE"

    def test_empty_patch_is_infinite(self):
        res = verify.covering_radius([], line_ops(), 3)
        assert res.verdict == "INFINITE"
        assert res.bound is None

    def test_fibonacci_patch_finite(self):
        patch = fib_patch(12)
        res = verify.covering_radius(patch.points, patch.group_ops(), 5, patch_radius=12)
        assert res.verdict == "FINITE"
        assert res.bound < 2

    def test_bound_is_sound_against_dense_probe(self):
        pts = frac_points(range(-8, 9))
        res = verify.covering_radius(pts, line_ops(), 3)
        rng = random.Random(11)
        for _ in range(200):
            x = Fraction(rng.randint(-3000, 3000), 1000)
            assert min(abs(x - p) for p in pts) <= res.bound

    def test_nonincreasing_under_window_inflation(self):
        scheme = cps.GaloisScheme(golden_field())
        small = cps.model_set_patch(scheme, cps.Window.box(1), 12)
        large = cps.model_set_patch(scheme, cps.Window.box(2), 12)
        r_small = verify.covering_radius(small.points, small.group_ops(), 5, patch_radius=12)
        r_large = verify.covering_radius(large.points, large.group_ops(), 5, patch_radius=12)
        assert r_large.bound <= r_small.bound


class TestGreedyCover:
    def test_identical_patches_single_identity(self):
        pts = frac_points(range(-4, 5))
        cover, _ = verify.greedy_cover(pts, pts, line_ops())
        assert cover.translates == [Fraction(0)]
        assert cover.replay(pts, line_ops())

    def test_integers_by_even_integers(self):
        a = frac_points(range(-4, 5))
        b = frac_points(range(-4, 5, 2))
        cover, _ = verify.greedy_cover(a, b, line_ops())
        assert sorted(cover.translates) == [Fraction(0), Fraction(1)]
        assert cover.replay(b, line_ops())

    def test_translate_cap_reports_witness(self):
        a = frac_points(range(0, 12))
        b = frac_points([0])
        cover, witness = verify.greedy_cover(a, b, line_ops(), max_translates=3)
        assert cover is None and witness is not None

    def test_fibonacci_two_windows(self):
        scheme = cps.GaloisScheme(golden_field())
        big = cps.model_set_patch(scheme, cps.Window.box(2), 10)
        small = cps.model_set_patch(scheme, cps.Window.box(1), 10)
        ops = scheme.group_ops()
        cover, _ = verify.greedy_cover(big.points, small.points, ops)
        assert cover is not None
        assert cover.replay(small.points, ops)


def brute_force_min_cover_size(x_points, quotient_set, ops, cap):
    """Smallest F' in X with X ⊂ F'·quotient_set, by exhaustive subset search."""
    xs = list(x_points)
    qs = set(quotient_set)
    for size in range(1, cap + 1):
        for combo in itertools.combinations(xs, size):
            if all(any(ops.mul(ops.inv(f), x) in qs for f in combo) for x in xs):
                return size
    return cap + 1


def quotient_set(y_points, ops):
    ys = list(y_points)
    return {ops.mul(ops.inv(a), b) for a in ys for b in ys}


class TestCellCover:
    def test_single_trivial_covering(self):
        pts = frac_points(range(0, 5))
        witness = verify.cell_cover(pts, [([Fraction(0)], pts)], line_ops())
        assert witness.size == 1
        assert witness.bound == 1

    def test_worked_example(self):
        x = frac_points([0, 1, 2, 3])
        y1 = frac_points([0, 1])
        f1 = frac_points([0, 2])
        witness = verify.cell_cover(x, [(f1, y1)], line_ops())
        assert witness.size <= 2
        # the true minimum matches the brute-force oracle
        ops = line_ops()
        assert witness.size >= brute_force_min_cover_size(x, quotient_set(y1, ops), ops, 4)

    def test_precondition_violation_named(self):
        x = frac_points([0, 10])
        with pytest.raises(UsageError):
            verify.cell_cover(x, [([Fraction(0)], frac_points([0, 1]))], line_ops())

    def test_random_small_abelian_instances(self):
        rng = random.Random(23)
        ops = line_ops()
        for _ in range(30):
            y1 = sorted({Fraction(rng.randint(-3, 3)) for _ in range(rng.randint(2, 4))})
            y2 = sorted({Fraction(rng.randint(-3, 3)) for _ in range(rng.randint(2, 4))})
            f1 = sorted({Fraction(rng.randint(-12, 12)) for _ in range(rng.randint(2, 5))})
            f2 = sorted({Fraction(rng.randint(-12, 12)) for _ in range(rng.randint(2, 5))})
            x = sorted(
                {
                    ops.mul(rng.choice(f1), rng.choice(y1))
                    for _ in range(rng.randint(3, 12))
                }
            )
            x = [p for p in x if any(ops.mul(ops.inv(f), p) in set(y2) for f in f2)]
            if not x:
                continue
            witness = verify.cell_cover(x, [(f1, y1), (f2, y2)], ops)
            assert witness.size <= len(f1) * len(f2)

    def test_modular_instances(self):
        rng = random.Random(5)
        for _ in range(20):
            n = rng.randint(6, 12)
            ops = verify.intmod_ops(n)
            y = sorted({rng.randint(0, n - 1) for _ in range(rng.randint(2, 3))})
            f = sorted({rng.randint(0, n - 1) for _ in range(rng.randint(2, 3))})
            x = sorted({ops.mul(rng.choice(f), rng.choice(y)) for _ in range(rng.randint(2, 10))})
            witness = verify.cell_cover(x, [(f, y)], ops)
            assert witness.size <= len(f)
            assert witness.size >= brute_force_min_cover_size(x, quotient_set(y, ops), ops, len(f))


class TestApproxPowerCover:
    def test_k2_returns_f_itself(self):
        pts = frac_points(range(-6, 7))
        f = frac_points([0])
        res = verify.approx_power_cover(pts, 2, f, line_ops(), 6)
        assert res.translates == f
        assert res.verified

    def test_integers_are_a_group(self):
        pts = frac_points(range(-10, 11))
        res = verify.approx_power_cover(pts, 3, frac_points([0]), line_ops(), 10)
        assert res.verified
        assert res.translates == [Fraction(0)]

    def test_fibonacci_cube_bound(self):
        scheme = cps.GaloisScheme(golden_field())
        window = cps.Window.box(1)
        cert = cps.approximate_lattice_certificate(scheme, window, patch_radius=12)
        patch = cps.model_set_patch(scheme, window, 12)
        ops = scheme.group_ops()
        res = verify.approx_power_cover(patch.points, 3, cert.translates, ops, 12)
        assert res.verified
        assert len(res.translates) <= len(cert.translates) ** 2
        assert res.checked > 0

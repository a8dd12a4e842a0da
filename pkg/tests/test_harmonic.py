"""Profile-decomposition stability checks: mode coefficients, deficit
reports, equality cases, extremising sequences, the reverse inequality,
and pointwise trace evaluation on the sphere."""

import json
import math

import numpy as np
import pytest

from tracestab.errors import InconclusiveError
from tracestab.harmonic import (
    A_coefficient,
    B_coefficient,
    GridSpectrum,
    ProfileSet,
    RadialGrid,
    deficit_report,
    equality_case_builder,
    extremising_sequence,
    profile_set_from_json,
    profile_set_to_json,
    random_profile_set,
    report_to_csv_row,
    report_to_json,
    reverse_deficit_check,
    sphere_quadrature,
    trace_evaluate,
)
from tracestab.spectrum import WeightSpec, build_spectrum


GRID = RadialGrid.build()
W3 = WeightSpec.homogeneous(3, 1.0)
W2 = WeightSpec.inhomogeneous(2, 1.0)
SPEC3 = build_spectrum(W3, K=10)
SPEC2 = build_spectrum(W2, K=10)


class TestCoefficients:
    def test_B_zero_profile(self):
        assert B_coefficient(np.zeros(GRID.size), GRID) == 0.0

    def test_B_unit_indicator(self):
        prof = np.where(GRID.r <= 1.0, 1.0, 0.0)
        assert B_coefficient(prof, GRID) == pytest.approx(1.0, abs=3e-2)

    def test_B_extremal_kernel_is_lambda0(self):
        gs = GridSpectrum(W3, GRID)
        assert B_coefficient(gs.kernel(0), GRID) == pytest.approx(1.0, abs=5e-3)

    def test_A_equals_lambda_B_on_kernel(self):
        gs = GridSpectrum(W3, GRID)
        for k in (0, 1, 4):
            prof = gs.kernel(k)
            a = A_coefficient(prof, W3, k, GRID)
            b = B_coefficient(prof, GRID)
            assert a == pytest.approx(gs.lam(k) * b, rel=1e-12)

    def test_A_orthogonal_profile(self):
        gs = GridSpectrum(W3, GRID)
        kern = gs.kernel(2)
        prof = np.exp(-((GRID.r - 8.0) / 2.0) ** 2)
        prof -= GRID.integrate(prof * kern) / GRID.integrate(kern * kern) * kern
        a = A_coefficient(prof, W3, 2, GRID)
        assert a <= 1e-20 * B_coefficient(prof, GRID)

    def test_A_strict_cauchy_schwarz(self, rng):
        gs = GridSpectrum(W3, GRID)
        for k in (0, 1, 3):
            prof = np.exp(-((GRID.r - rng.uniform(2, 30)) / rng.uniform(1, 4)) ** 2)
            a = A_coefficient(prof, W3, k, GRID)
            b = B_coefficient(prof, GRID)
            assert a < gs.lam(k) * b


class TestDeficitReport:
    def test_pure_extremiser(self):
        gs = GridSpectrum(W3, GRID)
        ps = ProfileSet(3, GRID, {(0, 1): gs.kernel(0)})
        rep = deficit_report(ps, W3, SPEC3)
        assert abs(rep.deficit) <= 1e-12 * rep.sumB
        assert abs(rep.dist_sq) <= 1e-12 * rep.sumB

    def test_pure_k1_equality_case(self):
        gs = GridSpectrum(W3, GRID)
        ps = ProfileSet(3, GRID, {(1, 1): gs.kernel(1)})
        rep = deficit_report(ps, W3, SPEC3)
        # grid-level spectral identity: ratio equals the grid gap exactly
        assert rep.ratio == pytest.approx(gs.lam(0) - gs.lam(1), rel=1e-12)
        assert rep.ratio == pytest.approx(2.0 / 3.0, abs=5e-3)
        assert rep.satisfied

    def test_pure_k0_nonextremal(self):
        gs = GridSpectrum(W3, GRID)
        prof = np.exp(-((GRID.r - 6.0) / 1.5) ** 2)
        ps = ProfileSet(3, GRID, {(0, 1): prof})
        rep = deficit_report(ps, W3, SPEC3)
        assert rep.dist_sq > 0
        assert rep.ratio == pytest.approx(gs.lam(0), rel=1e-12)
        assert rep.ratio > rep.constant

    def test_uncovered_degree_is_inconclusive(self):
        gs = GridSpectrum(W3, GRID)
        ps = ProfileSet(3, GRID, {(11, 1): gs.kernel(11)})
        with pytest.raises(InconclusiveError):
            deficit_report(ps, W3, SPEC3)

    def test_scale_invariance(self, rng):
        ps = random_profile_set(W3, GRID, rng)
        base = deficit_report(ps, W3).ratio
        for lam in (0.03, 7.0):
            assert deficit_report(ps.scaled(lam), W3).ratio == pytest.approx(
                base, rel=1e-12
            )


class TestEqualityAndSharpness:
    def test_equality_pure_harmonic(self):
        gs = GridSpectrum(W3, GRID)
        eq = equality_case_builder(W3, SPEC3, 0.0, {1: 1.0}, GRID)
        rep = deficit_report(eq, W3, SPEC3)
        assert rep.ratio == pytest.approx(gs.lam(0) - gs.lam(1), rel=1e-10)

    def test_equality_constant_only(self):
        eq = equality_case_builder(W3, SPEC3, 1.0, None, GRID)
        rep = deficit_report(eq, W3, SPEC3)
        assert abs(rep.deficit) <= 1e-12 * rep.sumB

    def test_equality_mixed(self):
        gs = GridSpectrum(W3, GRID)
        eq = equality_case_builder(W3, SPEC3, 1.0, {1: 1.0, 2: -0.5}, GRID)
        rep = deficit_report(eq, W3, SPEC3)
        assert rep.ratio == pytest.approx(gs.lam(0) - gs.lam(1), rel=1e-10)

    def test_perturbation_increases_ratio(self):
        gs = GridSpectrum(W3, GRID)
        eq = equality_case_builder(W3, SPEC3, 0.0, {1: 1.0}, GRID)
        base = deficit_report(eq, W3, SPEC3).ratio
        kern = gs.kernel(3)
        bump = np.exp(-((GRID.r - 10.0) / 2.0) ** 2)
        entries = dict(eq.entries)
        entries[(3, 1)] = 0.3 * bump
        rep = deficit_report(ProfileSet(3, GRID, entries), W3, SPEC3)
        assert rep.ratio > base

    def test_extremising_sequence_values(self):
        gs = GridSpectrum(W3, GRID)
        ratios = extremising_sequence(W3, SPEC3, [1, 2, 3], GRID)
        for k, r in zip([1, 2, 3], ratios):
            assert r == pytest.approx(gs.lam(0) - gs.lam(k), rel=1e-10)
        assert ratios[0] < ratios[1] < ratios[2]

    def test_no_extremiser_without_attaining_set(self):
        bad = SPEC3.__class__(SPEC3.weight, SPEC3.values, SPEC3.lambda_star, (),
                              SPEC3.certificate, SPEC3.tol)
        with pytest.raises(ValueError):
            equality_case_builder(W3, bad, 1.0, None, GRID)


class TestRandomSweeps:
    @pytest.mark.parametrize("weight,spec", [(W3, SPEC3), (W2, SPEC2)])
    def test_stability_and_reverse(self, weight, spec, rng):
        for _ in range(150):
            ps = random_profile_set(weight, GRID, rng)
            rep = deficit_report(ps, weight, spec)
            assert rep.satisfied
            assert rep.deficit >= rep.constant * rep.dist_sq - 1e-8 * rep.sumB
            holds, margin = reverse_deficit_check(ps, weight)
            assert holds
            assert rep.deficit <= rep.lambda0 * rep.dist_sq + 1e-9 * rep.sumB

    def test_per_mode_cauchy_schwarz(self, rng):
        gs = GridSpectrum(W3, GRID)
        for _ in range(50):
            ps = random_profile_set(W3, GRID, rng)
            for (k, m), prof in ps.entries.items():
                a = A_coefficient(prof, W3, k, GRID)
                b = B_coefficient(prof, GRID)
                assert a <= gs.lam(k) * b + 1e-9 * b


class TestTraceEvaluate:
    def test_k0_mode_is_constant(self):
        gs = GridSpectrum(W3, GRID)
        ps = ProfileSet(3, GRID, {(0, 1): gs.kernel(0)})
        pts = [
            np.array([0.0, 0.0, 1.0]),
            np.array([1.0, 0.0, 0.0]),
            np.array([0.0, 1 / math.sqrt(2), 1 / math.sqrt(2)]),
        ]
        vals = [trace_evaluate(ps, W3, th) for th in pts]
        assert max(abs(v - vals[0]) for v in vals) < 1e-12 * abs(vals[0])

    def test_k1_mode_proportional_to_coordinate(self):
        gs = GridSpectrum(W3, GRID)
        ps = ProfileSet(3, GRID, {(1, 1 + 1): gs.kernel(1)})  # mu = 0: z harmonic
        zs = np.linspace(-1, 1, 9)
        vals = np.array([
            trace_evaluate(ps, W3, np.array([math.sqrt(1 - z * z), 0.0, z]))
            for z in zs
        ])
        ref = vals[-1]
        assert np.allclose(vals, zs * ref, atol=1e-12 * abs(ref))

    @pytest.mark.parametrize("n,weight", [(2, W2), (3, W3)])
    def test_sphere_norm_identity(self, n, weight, rng):
        ps = random_profile_set(weight, GRID, rng, max_k=3, n_modes=2)
        pts, wq = sphere_quadrature(n)
        vals = np.array([abs(trace_evaluate(ps, weight, th)) ** 2 for th in pts])
        lhs = float(np.sum(wq * vals))
        gs = GridSpectrum(weight, GRID)
        sumA = sum(
            A_coefficient(g, weight, k, GRID) for (k, m), g in ps.entries.items()
        )
        assert lhs == pytest.approx(sumA / (2 * math.pi) ** n, rel=1e-5)


class TestSerialization:
    def test_profile_roundtrip(self, rng):
        ps = random_profile_set(W3, GRID, rng)
        back = profile_set_from_json(profile_set_to_json(ps))
        assert back.n == ps.n
        assert set(back.entries) == set(ps.entries)
        for key in ps.entries:
            assert np.allclose(back.entries[key], ps.entries[key])

    def test_report_export(self, rng):
        ps = random_profile_set(W3, GRID, rng)
        rep = deficit_report(ps, W3)
        doc = json.loads(report_to_json(rep))
        for key in ("sumB", "sumA", "deficit", "dist_sq", "ratio", "constant",
                    "lambda0", "satisfied"):
            assert key in doc
        row = report_to_csv_row(rep)
        assert len(row.split(",")) >= 6

    def test_dimension_bound_enforced(self):
        gs = GridSpectrum(W2, GRID)
        with pytest.raises(ValueError):
            ProfileSet(2, GRID, {(1, 3): gs.kernel(1)})  # dim H_1 = 2 at n = 2

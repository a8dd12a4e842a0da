"""Spherical-harmonic profile representation, trace deficits and the
stability/reverse inequalities.

A function g lives here only through its radial profiles g0^{(k,m)} on a
shared quadrature grid.  Every quantity in the stability inequality is
diagonal in this representation, so deficits and distances reduce to
finite sums.  Eigenvalues are evaluated under the same grid rule as the
profiles ("grid spectrum"), which keeps the Cauchy-Schwarz structure of
the inequality exact at machine precision; the analytic spectrum module
provides the continuum values.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.special as sp

from .errors import InconclusiveError
from .specfun import dim_harmonic
from .spectrum import LambdaSpectrum, WeightSpec

__all__ = [
    "RadialGrid",
    "ProfileSet",
    "DeficitReport",
    "GridSpectrum",
    "B_coefficient",
    "A_coefficient",
    "deficit_report",
    "equality_case_builder",
    "extremising_sequence",
    "reverse_deficit_check",
    "trace_evaluate",
    "random_profile_set",
    "profile_set_to_json",
    "profile_set_from_json",
    "report_to_json",
    "report_to_csv_row",
]


@dataclass(frozen=True)
class RadialGrid:
    """Composite Gauss-Legendre rule on (0, r_max], resolving the Bessel
    oscillation with `panels_per_period` panels per 2*pi."""

    r_max: float
    panels_per_period: int
    nodes_per_panel: int
    r: np.ndarray = field(repr=False, compare=False)
    wq: np.ndarray = field(repr=False, compare=False)

    @staticmethod
    def build(r_max: float = 200.0, panels_per_period: int = 40,
              nodes_per_panel: int = 4) -> "RadialGrid":
        panel_len = 2.0 * math.pi / panels_per_period
        npan = int(math.ceil(r_max / panel_len))
        edges = np.linspace(0.0, r_max, npan + 1)
        x, w = np.polynomial.legendre.leggauss(nodes_per_panel)
        half = 0.5 * (edges[1] - edges[0])
        mid = 0.5 * (edges[:-1] + edges[1:])
        r = (mid[:, None] + half * x[None, :]).ravel()
        wq = np.tile(half * w, npan)
        return RadialGrid(r_max, panels_per_period, nodes_per_panel, r, wq)

    @property
    def size(self) -> int:
        return self.r.size

    def integrate(self, samples: np.ndarray) -> float:
        return float(np.dot(self.wq, samples))


@dataclass(frozen=True)
class ProfileSet:
    """Finite family of radial profiles indexed by harmonic mode (k, m)."""

    n: int
    grid: RadialGrid
    entries: dict = field(repr=False)

    def __post_init__(self):
        for (k, m), g in self.entries.items():
            if k < 0 or not 1 <= m <= dim_harmonic(self.n, k):
                raise ValueError(f"mode index ({k},{m}) out of range for n={self.n}")
            if np.asarray(g).shape != self.grid.r.shape:
                raise ValueError(f"profile ({k},{m}) does not match the grid")

    def modes(self):
        return sorted(self.entries.keys())

    def max_degree(self) -> int:
        return max((k for k, _ in self.entries), default=0)

    def scaled(self, factor: float) -> "ProfileSet":
        return ProfileSet(self.n, self.grid,
                          {km: factor * g for km, g in self.entries.items()})


@dataclass(frozen=True)
class DeficitReport:
    sumB: float
    sumA: float
    deficit: float          # lambda_0 * sumB - sumA
    dist_sq: float          # sumB - A_{0,1}/lambda_0
    ratio: float            # deficit / dist_sq (inf when dist_sq == 0)
    constant: float         # C'(w) at grid level
    lambda0: float
    satisfied: bool


class GridSpectrum:
    """Bessel kernels and eigenvalues of a weight evaluated under a grid
    rule; shares the quadrature of the profiles it is compared against."""

    def __init__(self, weight: WeightSpec, grid: RadialGrid):
        self.weight = weight
        self.grid = grid
        self._kernels: dict[int, np.ndarray] = {}
        self._lams: dict[int, float] = {}
        r = grid.r
        self._sqrt_rw = np.sqrt(r * weight.w(r))

    def kernel(self, k: int) -> np.ndarray:
        """J_{k+(n-2)/2}(r) w(r)^{1/2} r^{1/2} on the grid."""
        if k not in self._kernels:
            nu = k + (self.weight.n - 2.0) / 2.0
            self._kernels[k] = sp.jv(nu, self.grid.r) * self._sqrt_rw
        return self._kernels[k]

    def lam(self, k: int) -> float:
        if k not in self._lams:
            ker = self.kernel(k)
            self._lams[k] = self.grid.integrate(ker * ker)
        return self._lams[k]

    def lam_star(self, k_max: int) -> float:
        return max(self.lam(k) for k in range(1, max(k_max, 1) + 1))


def B_coefficient(profile: np.ndarray, grid: RadialGrid) -> float:
    """int_0^infty |g0(r)|^2 dr under the grid rule."""
    g = np.asarray(profile, dtype=float)
    return grid.integrate(g * g)


def A_coefficient(profile: np.ndarray, weight: WeightSpec, k: int,
                  grid: RadialGrid) -> float:
    """Squared inner product of the profile with the Bessel kernel."""
    gs = GridSpectrum(weight, grid)
    inner = grid.integrate(np.asarray(profile, float) * gs.kernel(k))
    return inner * inner


def _mode_sums(ps: ProfileSet, gs: GridSpectrum):
    sumB = sumA = a01 = 0.0
    for (k, m), g in ps.entries.items():
        b = B_coefficient(g, ps.grid)
        inner = ps.grid.integrate(g * gs.kernel(k))
        a = inner * inner
        sumB += b
        sumA += a
        if k == 0 and m == 1:
            a01 = a
    return sumB, sumA, a01


def deficit_report(ps: ProfileSet, weight: WeightSpec,
                   spectrum: LambdaSpectrum | None = None,
                   tol: float = 1e-8) -> DeficitReport:
    """Evaluate deficit, squared distance to the extremiser ray, their
    ratio and whether the stability inequality holds with C' = grid-level
    lambda_0 - lambda_star.

    The analytic `spectrum`, when given, is used only to confirm that the
    profile support is covered by its certificate."""
    gs = GridSpectrum(weight, ps.grid)
    kmax = ps.max_degree()
    if spectrum is not None and kmax > spectrum.certificate.K:
        raise InconclusiveError(
            f"profile degree {kmax} exceeds the certified range K={spectrum.certificate.K}"
        )
    lam0 = gs.lam(0)
    lam_star = gs.lam_star(kmax)
    const = lam0 - lam_star
    sumB, sumA, a01 = _mode_sums(ps, gs)
    deficit = lam0 * sumB - sumA
    dist_sq = sumB - a01 / lam0
    ratio = deficit / dist_sq if dist_sq > 0 else math.inf
    satisfied = deficit >= const * dist_sq - tol * sumB
    return DeficitReport(sumB, sumA, deficit, dist_sq, ratio, const, lam0, satisfied)


def equality_case_builder(weight: WeightSpec, spectrum: LambdaSpectrum,
                          c: float, Y_coeffs: dict[int, float] | None,
                          grid: RadialGrid | None = None) -> ProfileSet:
    """Profiles achieving equality in the stability inequality: the k=0
    extremiser kernel plus kernels on the attaining modes k in K_set."""
    if not spectrum.K_set:
        raise ValueError("no extremiser exists when the attaining set is empty")
    if grid is None:
        grid = RadialGrid.build()
    n = weight.n
    gs = GridSpectrum(weight, grid)
    entries = {}
    if c != 0.0:
        entries[(0, 1)] = c * gs.kernel(0)
    k_att = min(spectrum.K_set)
    if Y_coeffs:
        for m, coeff in Y_coeffs.items():
            if coeff != 0.0:
                if not 1 <= m <= dim_harmonic(n, k_att):
                    raise ValueError(f"harmonic index m={m} out of range for k={k_att}")
                entries[(k_att, m)] = coeff * gs.kernel(k_att)
    if not entries:
        raise ValueError("all coefficients vanish; the zero function is excluded")
    return ProfileSet(n, grid, entries)


def extremising_sequence(weight: WeightSpec, spectrum: LambdaSpectrum,
                         k_list, grid: RadialGrid | None = None) -> list[float]:
    """Deficit/distance ratios of the pure-mode kernels; equals the grid
    value of lambda_0 - lambda_k for each k."""
    if not k_list:
        raise ValueError("k_list must be nonempty")
    if grid is None:
        grid = RadialGrid.build()
    ratios = []
    for k in k_list:
        if k < 1:
            raise ValueError("extremising sequence uses k >= 1")
        ps = ProfileSet(weight.n, grid, {(k, 1): GridSpectrum(weight, grid).kernel(k)})
        rep = deficit_report(ps, weight)
        ratios.append(rep.ratio)
    return ratios


def reverse_deficit_check(ps: ProfileSet, weight: WeightSpec,
                          tol: float = 1e-9) -> tuple[bool, float]:
    """deficit <= lambda_0 * dist_sq, i.e. A_{0,1} <= sum A; returns
    (holds, margin) with margin = lambda_0*dist_sq - deficit."""
    gs = GridSpectrum(weight, ps.grid)
    lam0 = gs.lam(0)
    sumB, sumA, a01 = _mode_sums(ps, gs)
    margin = (lam0 * sumB - a01) - (lam0 * sumB - sumA)  # = sumA - a01
    return margin >= -tol * max(sumB, 1e-300), margin


# ---------------------------------------------------------------------------
# random profiles


def random_profile_set(weight: WeightSpec, grid: RadialGrid,
                       rng: np.random.Generator, max_k: int = 6,
                       max_m: int = 3, n_modes: int | None = None) -> ProfileSet:
    """Random mixture of compact bumps and extremal kernels over modes
    k <= max_k, m <= min(dim H_k, max_m)."""
    n = weight.n
    gs = GridSpectrum(weight, grid)
    if n_modes is None:
        n_modes = int(rng.integers(1, 5))
    entries = {}
    for _ in range(n_modes):
        k = int(rng.integers(0, max_k + 1))
        m = int(rng.integers(1, min(dim_harmonic(n, k), max_m) + 1))
        r = grid.r
        prof = np.zeros_like(r)
        for _ in range(int(rng.integers(1, 4))):
            center = rng.uniform(0.5, 0.5 * grid.r_max)
            width = rng.uniform(0.3, 5.0)
            prof += rng.normal() * np.exp(-((r - center) / width) ** 2)
        if rng.random() < 0.4:
            prof += rng.normal() * gs.kernel(k)
        if (k, m) in entries:
            entries[(k, m)] = entries[(k, m)] + prof
        else:
            entries[(k, m)] = prof
    return ProfileSet(n, grid, entries)


# ---------------------------------------------------------------------------
# pointwise trace evaluation (n = 2, 3)


def _real_harmonic(n: int, k: int, m: int, theta: np.ndarray) -> float:
    """Orthonormal real spherical harmonic P^{(k,m)} at a point of S^{n-1}."""
    if n == 2:
        phi = math.atan2(theta[1], theta[0])
        if k == 0:
            return 1.0 / math.sqrt(2.0 * math.pi)
        return (math.cos(k * phi) if m == 1 else math.sin(k * phi)) / math.sqrt(math.pi)
    if n == 3:
        x, y, z = theta
        pol = math.acos(max(-1.0, min(1.0, z)))
        az = math.atan2(y, x)
        mu = m - 1 - k  # m in 1..2k+1  ->  mu in -k..k
        y_c = sp.sph_harm_y(k, abs(mu), pol, az)
        if mu == 0:
            return float(np.real(y_c))
        if mu > 0:
            return math.sqrt(2.0) * (-1.0) ** mu * float(np.real(y_c))
        return math.sqrt(2.0) * (-1.0) ** mu * float(np.imag(y_c))
    raise ValueError("pointwise trace evaluation supports n in {2, 3} only")


def trace_evaluate(ps: ProfileSet, weight: WeightSpec, theta) -> complex:
    """Pointwise value of the traced function at theta on S^{n-1} (complex;
    the phase i^k attaches to each degree block)."""
    n = ps.n
    if n not in (2, 3):
        raise ValueError("pointwise trace evaluation supports n in {2, 3} only")
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (n,) or abs(np.linalg.norm(theta) - 1.0) > 1e-10:
        raise ValueError("theta must be a unit vector in R^n")
    gs = GridSpectrum(weight, ps.grid)
    total = 0.0 + 0.0j
    pref = (2.0 * math.pi) ** (-n / 2.0)
    for (k, m), g in ps.entries.items():
        inner = ps.grid.integrate(g * gs.kernel(k))
        total += pref * (1j) ** k * _real_harmonic(n, k, m, theta) * inner
    return total


def sphere_quadrature(n: int, n_polar: int = 64, n_azimuth: int = 128):
    """Nodes (rows of unit vectors) and weights integrating over S^{n-1}."""
    if n == 2:
        phi = np.linspace(0.0, 2.0 * math.pi, n_azimuth, endpoint=False)
        pts = np.stack([np.cos(phi), np.sin(phi)], axis=1)
        w = np.full(n_azimuth, 2.0 * math.pi / n_azimuth)
        return pts, w
    if n == 3:
        x, wx = np.polynomial.legendre.leggauss(n_polar)
        phi = np.linspace(0.0, 2.0 * math.pi, n_azimuth, endpoint=False)
        ct = x[:, None]
        st = np.sqrt(1.0 - ct ** 2)
        pts = np.stack(
            [
                (st * np.cos(phi)[None, :]).ravel(),
                (st * np.sin(phi)[None, :]).ravel(),
                np.broadcast_to(ct, (n_polar, n_azimuth)).ravel(),
            ],
            axis=1,
        )
        w = (wx[:, None] * np.full(n_azimuth, 2.0 * math.pi / n_azimuth)[None, :]).ravel()
        return pts, w
    raise ValueError("sphere quadrature supports n in {2, 3} only")


# ---------------------------------------------------------------------------
# serialisation


def profile_set_to_json(ps: ProfileSet) -> str:
    doc = {
        "n": ps.n,
        "grid": {
            "r_max": ps.grid.r_max,
            "panels_per_period": ps.grid.panels_per_period,
            "nodes_per_panel": ps.grid.nodes_per_panel,
        },
        "modes": [
            {"k": k, "m": m, "samples": np.asarray(g).tolist()}
            for (k, m), g in sorted(ps.entries.items())
        ],
    }
    return json.dumps(doc)


def profile_set_from_json(text: str) -> ProfileSet:
    doc = json.loads(text)
    grid = RadialGrid.build(
        doc["grid"]["r_max"],
        doc["grid"]["panels_per_period"],
        doc["grid"].get("nodes_per_panel", 4),
    )
    entries = {
        (mode["k"], mode["m"]): np.asarray(mode["samples"], dtype=float)
        for mode in doc["modes"]
    }
    return ProfileSet(doc["n"], grid, entries)


def report_to_json(rep: DeficitReport) -> str:
    return json.dumps(
        {
            "sumB": rep.sumB,
            "sumA": rep.sumA,
            "deficit": rep.deficit,
            "dist_sq": rep.dist_sq,
            "ratio": None if math.isinf(rep.ratio) else rep.ratio,
            "constant": rep.constant,
            "lambda0": rep.lambda0,
            "satisfied": rep.satisfied,
        }
    )


def report_to_csv_row(rep: DeficitReport) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(
        [rep.sumB, rep.sumA, rep.deficit, rep.dist_sq, rep.ratio,
         rep.constant, rep.satisfied]
    )
    return buf.getvalue()

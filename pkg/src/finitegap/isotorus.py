"""Isospectral torus points from Dirichlet data via minimal Herglotz functions.

Dirichlet data is one point per gap on the two-sheeted circle: a position
gamma_j in the closed gap and a sheet sign sigma_j (ignored when gamma sits at
a gap edge, where the sheets are glued).  The associated m-function is

    m(z) = c (sqrt(R(z)) - S(z)) / prod_j (z - gamma_j)

with S a real polynomial of degree l+1 whose two leading coefficients match
the expansion of sqrt(R) at infinity and whose values at the gamma_j kill the
pole on the sheet opposite sigma_j; c > 0 is fixed by m(z) = -1/z + O(z^-2).
sigma_j = +1 keeps the pole on the principal sheet and produces a point mass
of the measure; sigma_j = -1 and edge positions produce none.

The sqrt(R) branch is the single-valued one of FiniteGapSet.sqrt_R (positive
on (b_{l+1}, inf)); its value on gap j is (-1)^(l+1-j) sqrt(|R|), which the
pole conditions below use explicitly.
"""
from __future__ import annotations

from dataclasses import dataclass
import json
import math

import numpy as np
from scipy.optimize import minimize

from .bandset import FiniteGapSet
from .errors import AccuracyError, FiniteGapError
from .jacobi import JacobiParams, ExtendTail, SpectralMeasure, \
    measure_from_theta_density, strip_coefficients, free_jacobi


@dataclass(frozen=True)
class DirichletData:
    """Per-gap pole position and sheet sign; coordinates on the torus."""

    gammas: tuple[float, ...]
    sheets: tuple[int, ...]

    def __len__(self):
        return len(self.gammas)

    def to_json(self) -> str:
        return json.dumps([{"gamma": g, "sheet": s}
                           for g, s in zip(self.gammas, self.sheets)])

    @classmethod
    def from_json(cls, text: str) -> "DirichletData":
        items = json.loads(text)
        return cls(tuple(float(d["gamma"]) for d in items),
                   tuple(int(d["sheet"]) for d in items))


def dirichlet_data(e: FiniteGapSet, entries) -> DirichletData:
    """Validate (gamma, sheet) pairs against the gaps of e.

    Positions within 1e-12 of a gap edge (relative to the gap length) are
    snapped onto the edge, where the sheet sign is irrelevant.
    """
    entries = list(entries)
    if len(entries) != e.ell:
        raise FiniteGapError(f"need {e.ell} gap points, got {len(entries)}")
    gammas, sheets = [], []
    for j, (g, s) in enumerate(entries):
        beta, alpha = e.gap(j)
        g = float(g)
        if abs(g - beta) < 1e-12 * (alpha - beta):
            g = beta
        elif abs(g - alpha) < 1e-12 * (alpha - beta):
            g = alpha
        if not beta <= g <= alpha:
            raise FiniteGapError(f"gamma {g} outside closed gap {j} = [{beta}, {alpha}]")
        if s not in (-1, 1):
            raise FiniteGapError(f"sheet must be +-1, got {s}")
        gammas.append(g)
        sheets.append(int(s))
    return DirichletData(tuple(gammas), tuple(sheets))


def dirichlet_from_angles(e: FiniteGapSet, phis) -> DirichletData:
    """Parametrize each gap circle by an angle.

    phi = 0 maps to the left gap edge (beta_j), phi = pi to the right edge;
    the upper semicircle carries sheet +1, the lower sheet -1.
    """
    entries = []
    for j, phi in enumerate(phis):
        beta, alpha = e.gap(j)
        mid, rad = (beta + alpha) / 2, (alpha - beta) / 2
        g = mid - rad * math.cos(phi)
        s = +1 if math.sin(phi) >= 0 else -1
        entries.append((g, s))
    return dirichlet_data(e, entries)


def random_dirichlet(e: FiniteGapSet, rng, edge_margin: float = 0.05) -> DirichletData:
    """Seeded interior Dirichlet data for tests and experiments."""
    entries = []
    for j in range(e.ell):
        beta, alpha = e.gap(j)
        u = rng.uniform(edge_margin, 1 - edge_margin)
        entries.append((beta + u * (alpha - beta), int(rng.choice([-1, 1]))))
    return dirichlet_data(e, entries)


@dataclass(frozen=True, eq=False)
class MinimalHerglotz:
    """Solved degree-(l+1) minimal Herglotz function for (e, dirichlet).

    S_coeffs are low-to-high; pole_weights[j] > 0 exactly when sigma_j = +1
    with gamma_j interior to its gap.
    """

    set: FiniteGapSet
    dirichlet: DirichletData
    S_coeffs: np.ndarray
    c: float
    pole_weights: np.ndarray

    def S(self, z):
        return np.polynomial.polynomial.polyval(z, self.S_coeffs)

    def _denominator(self, z):
        out = np.ones_like(np.asarray(z))
        for g in self.dirichlet.gammas:
            out = out * (z - g)
        return out

    def m(self, z):
        """Principal-sheet value; real z evaluates as x + i0."""
        z = np.asarray(z, complex)
        return self.c * (self.set.sqrt_R(z) - self.S(z)) / self._denominator(z)

    def m_second_sheet(self, z):
        z = np.asarray(z, complex)
        return self.c * (-self.set.sqrt_R(z) - self.S(z)) / self._denominator(z)


def minimal_herglotz(e: FiniteGapSet, dd: DirichletData) -> MinimalHerglotz:
    """Solve the (l+2) linear conditions for S and the scale c.

    Conditions: S matches the two leading asymptotic coefficients of sqrt(R);
    at each interior gamma_j, S(gamma_j) = -sigma_j * sqrtR(gamma_j) (branch
    value on the gap); at a degenerate (edge) gamma_j, S(gamma_j) = 0.
    """
    if len(dd) != e.ell:
        raise FiniteGapError(f"Dirichlet data has {len(dd)} points, set has {e.ell} gaps")
    ell = e.ell
    roots = e.endpoints
    s1 = roots.sum()
    s2 = (s1 * s1 - np.sum(roots**2)) / 2
    r1, r2 = -s1, s2
    e1 = r1 / 2
    e2 = (r2 - e1 * e1) / 2

    gammas = np.asarray(dd.gammas, float)
    if ell > 0:
        rho = np.empty(ell)
        tau = np.empty(ell)
        for j in range(ell):
            beta, alpha = e.gap(j)
            g = gammas[j]
            if g == beta or g == alpha:
                rho[j] = 0.0
                tau[j] = 0.0
            else:
                Rg = float(np.prod(g - roots))
                # branch value on gap j (0-based): (-1)^(l - j) sqrt(R)
                rho[j] = (-1.0) ** (ell - j) * math.sqrt(Rg)
                tau[j] = -dd.sheets[j] * rho[j]
        V = np.vander(gammas, ell, increasing=True)
        rhs = tau - gammas ** (ell + 1) - e1 * gammas**ell
        try:
            s_low = np.linalg.solve(V, rhs)
        except np.linalg.LinAlgError as exc:
            raise AccuracyError(f"degenerate Dirichlet data: {exc}") from exc
        kappa = e2 - s_low[ell - 1]
    else:
        rho = np.empty(0)
        s_low = np.empty(0)
        kappa = e2
    if kappa == 0:
        raise AccuracyError("normalization failed: kappa = 0")
    c = -1.0 / kappa
    if c <= 0:
        raise AccuracyError(f"scale c = {c} not positive; construction bug")
    S = np.concatenate([s_low, [e1, 1.0]])

    weights = np.zeros(ell)
    for j in range(ell):
        beta, alpha = e.gap(j)
        g = gammas[j]
        if g != beta and g != alpha and dd.sheets[j] == +1:
            others = np.prod(g - np.delete(gammas, j)) if ell > 1 else 1.0
            w = -2.0 * c * rho[j] / others
            if w <= 0:
                raise AccuracyError(f"nonpositive pole weight {w}; construction bug")
            weights[j] = w
    return MinimalHerglotz(e, dd, S, c, weights)


def torus_measure(mh: MinimalHerglotz, strict: bool = True) -> SpectralMeasure:
    """Spectral measure of a minimal Herglotz function.

    Band density f(x) = Im m(x+i0)/pi, stored through the theta-density

        h_j(theta) = (c/pi) rad_j^2 sin^2(theta) sqrt(|P_j|) / |prod (x-gamma_i)|,

    with a gap factor cancelled analytically against sin^2 when gamma_i sits
    on an edge of band j (so h stays smooth in cos theta).  Point masses are
    the pole residues.
    """
    e = mh.set
    dd = mh.dirichlet

    def theta_fn(j, theta):
        theta = np.asarray(theta, float)
        ct = np.cos(theta)
        t = e.midpoints[j] + e.radii[j] * ct
        rad = e.radii[j]
        a, b = e.bands[j]
        num = np.full_like(theta, mh.c / np.pi * rad * rad)
        pow_minus = 1  # (1 - cos) factor from sin^2, cancels a right-edge gamma
        pow_plus = 1   # (1 + cos) factor, cancels a left-edge gamma
        den = np.ones_like(theta)
        for g in dd.gammas:
            if g == b:
                pow_minus -= 1
                num /= rad
            elif g == a:
                pow_plus -= 1
                num /= rad
            else:
                den = den * np.abs(t - g)
        h = num * (1.0 - ct) ** pow_minus * (1.0 + ct) ** pow_plus
        return h * np.sqrt(np.abs(e.rest_product(j, t))) / den

    masses = [(g, w) for g, w in zip(dd.gammas, mh.pole_weights) if w > 0]
    # a gamma close to (but not on) a band edge puts a boundary layer of width
    # sqrt(dist/rad) into h; allow a deep coefficient budget for that case
    return measure_from_theta_density(e, theta_fn, masses, strict=strict,
                                      n_max=16384)


class TorusPoint:
    """A point of the isospectral torus with lazily extendable coefficients."""

    def __init__(self, e: FiniteGapSet, dd: DirichletData, n: int = 64,
                 strip_tol: float = 1e-10):
        self.set = e
        self.dirichlet = dd
        self.herglotz = minimal_herglotz(e, dd)
        self.measure = torus_measure(self.herglotz)
        self.strip_tol = strip_tol
        self._params = strip_coefficients(self.measure, n, tol=strip_tol)

    @property
    def params(self) -> JacobiParams:
        return self._params

    def jacobi_params(self, n: int) -> JacobiParams:
        """Coefficients (a_1..a_n, b_1..b_n) as a JacobiParams with this head.

        Extension beyond previously computed length re-strips at larger N;
        nothing is extrapolated.
        """
        a, b = self._params.coeffs(n)
        return JacobiParams(a, b, ExtendTail(self._params.tail.provider, n))


def torus_jacobi(e: FiniteGapSet, dd: DirichletData, n: int,
                 strip_tol: float = 1e-10) -> TorusPoint:
    """Torus point with its first n Jacobi coefficients computed."""
    return TorusPoint(e, dd, n=n, strip_tol=strip_tol)


def reflectionless_residual(mh: MinimalHerglotz, points_per_band: int = 200,
                            margin: float = 1e-6) -> float:
    """max |Re G_00| over band-interior grids, G_00 = -1/(a0^2 (m - mhat)).

    m - mhat = 2c sqrt(R)/prod(z - gamma) is purely imaginary on the bands, so
    the whole-line reflectionless extension has Re G_00 = 0 there; the
    returned residual measures how well the construction achieves it.  Grid
    points within `margin` of a band endpoint or a gamma are excluded.
    """
    e = mh.set
    worst = 0.0
    for j in range(e.n_bands):
        a, b = e.bands[j]
        xs = np.linspace(a + margin, b - margin, points_per_band)
        keep = np.ones(len(xs), bool)
        for g in mh.dirichlet.gammas:
            keep &= np.abs(xs - g) > margin
        xs = xs[keep]
        diff = mh.m(xs) - mh.m_second_sheet(xs)
        g00 = -1.0 / diff  # a0 = 1; any a0 only rescales the residual
        worst = max(worst, float(np.abs(g00.real).max()))
    return worst


# ---------------------------------------------------------------------------
# the d_m metric and distance to the torus


def d_m(J: JacobiParams, Jp: JacobiParams, m: int, tail_tol: float = 1e-12,
        return_kmax: bool = False):
    """d_m(J, J') = sum_{k>=0} e^{-k} (|a_{m+k} - a'_{m+k}| + |b_{m+k} - b'_{m+k}|).

    Truncated at k_max once the geometric tail bound (sup of coefficient
    differences seen so far) * e^{-k_max}/(1 - 1/e) drops below tail_tol.
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    total = 0.0
    sup = 0.0
    k = 0
    block = 32
    geom_tail = 1.0 / (1.0 - math.exp(-1.0))
    while True:
        n_hi = m + k + block - 1
        a1, b1 = J.coeffs(n_hi)
        a2, b2 = Jp.coeffs(n_hi)
        lo = m + k - 1
        diff = np.abs(a1[lo:] - a2[lo:]) + np.abs(b1[lo:] - b2[lo:])
        total += float(np.exp(-(k + np.arange(len(diff)))) @ diff)
        sup = max(sup, float(diff.max(initial=0.0)))
        k += len(diff)
        bound = max(sup, 1e-30) * math.exp(-k) * geom_tail
        if bound < tail_tol:
            break
        if k > 10000:
            raise AccuracyError("d_m tail bound did not close; unbounded coefficients?")
    return (total, k) if return_kmax else total


@dataclass(frozen=True)
class TorusDistance:
    """Result of dist_to_torus: an upper bound on the infimum plus the witness."""

    value: float
    dirichlet: DirichletData
    m: int
    grid_per_gap: int
    dd_tol: float

    def to_json(self) -> str:
        return json.dumps({
            "value": self.value,
            "dirichlet": [{"gamma": g, "sheet": s}
                          for g, s in zip(self.dirichlet.gammas, self.dirichlet.sheets)],
            "m": self.m,
            "grid_per_gap": self.grid_per_gap,
            "dd_tol": self.dd_tol,
        })


def dist_to_torus(J: JacobiParams, e: FiniteGapSet, m: int,
                  grid_per_gap: int = 16, dd_tol: float = 1e-6,
                  strip_tol: float = 1e-9, n_extra: int = 42,
                  initial: DirichletData | None = None) -> TorusDistance:
    """Approximate inf over torus points of d_m(J, .) by grid + refinement.

    A coarse product grid over the gap circles (grid_per_gap angles per gap,
    edges included, sheets on the two semicircles) is followed by coordinate
    descent with Powell direction updates on the circle angles, to local
    tolerance dd_tol in the gap positions.  The value is an upper bound on
    the true infimum; the grid parameters travel with the result.  For a
    gapless set the torus is the single free matrix and d_m is returned
    directly.
    """
    n_need = m + n_extra

    if e.ell == 0:
        val = d_m(J, free_jacobi(), m)
        return TorusDistance(val, DirichletData((), ()), m, grid_per_gap, dd_tol)

    def objective_angles(phis):
        dd = dirichlet_from_angles(e, phis)
        tp = torus_jacobi(e, dd, n_need, strip_tol=strip_tol)
        return d_m(J, tp.params, m), dd

    if initial is not None:
        mids = np.array([(e.gap(j)[0] + e.gap(j)[1]) / 2 for j in range(e.ell)])
        rads = np.array([(e.gap(j)[1] - e.gap(j)[0]) / 2 for j in range(e.ell)])
        cosphi = np.clip((mids - np.asarray(initial.gammas)) / rads, -1, 1)
        best_phis = np.arccos(cosphi)
        best_phis = np.where(np.asarray(initial.sheets) < 0, 2 * np.pi - best_phis,
                             best_phis)
        best_val, _ = objective_angles(best_phis)
    else:
        best_val = math.inf
        best_phis = None
        angles = 2 * np.pi * np.arange(grid_per_gap) / grid_per_gap
        grids = np.meshgrid(*([angles] * e.ell), indexing="ij")
        for idx in np.ndindex(*grids[0].shape):
            phis = np.array([g[idx] for g in grids])
            val, _ = objective_angles(phis)
            if val < best_val:
                best_val, best_phis = val, phis

    # coordinate descent on the circle angles, with Powell direction updates
    # (plain axis sweeps crawl in the curved valleys the gap angles produce)
    phis = np.array(best_phis, float)
    max_rad = max((e.gap(j)[1] - e.gap(j)[0]) / 2 for j in range(e.ell))
    res = minimize(lambda p: objective_angles(p)[0], phis, method="Powell",
                   options={"xtol": dd_tol / max_rad, "ftol": 1e-14,
                            "maxfev": 1000 * e.ell})
    if res.fun < best_val:
        best_val = float(res.fun)
        phis = np.asarray(res.x, float).reshape(e.ell)

    dd = dirichlet_from_angles(e, phis)
    return TorusDistance(float(best_val), dd, m, grid_per_gap, dd_tol)

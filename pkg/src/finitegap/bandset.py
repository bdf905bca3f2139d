"""Finite gap sets and their logarithmic potential theory.

A finite gap set e = [a_1,b_1] u ... u [a_{l+1}, b_{l+1}] carries a unique
equilibrium (minimal logarithmic energy) probability measure whose density is

    w(x) = |Q(x)| / (pi sqrt(|R(x)|)),   R(x) = prod_j (x - a_j)(x - b_j),

with Q monic of degree l and one zero per gap, fixed by the l conditions
int_gap_j Q(t)/sqrt(R(t)) dt = 0.  The zeros are obtained from a single dense
l x l solve; everything downstream (potential, Green's function, capacity,
harmonic measures) is evaluated spectrally from per-band cosine expansions.

Branch convention for sqrt(R): the single-valued branch on C \\ e that is real
and positive on (b_{l+1}, inf).  Continuity then forces the boundary value
from above on the j-th band interior to be i*(-1)^(l+1-j)*sqrt(|R|), and the
value on the j-th gap to be (-1)^(l+1-j)*sqrt(|R|); sign-sensitive code below
relies on this.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
import json
import math

import numpy as np

from .errors import AccuracyError, DomainError, FiniteGapError
from .quadrature import cos_coeffs, cosine_nodes, inv_joukowski


@dataclass(frozen=True)
class FiniteGapSet:
    """Ordered union of l+1 disjoint closed bands with positive length."""

    bands: tuple[tuple[float, float], ...]

    @property
    def ell(self) -> int:
        return len(self.bands) - 1

    @property
    def n_bands(self) -> int:
        return len(self.bands)

    @cached_property
    def endpoints(self) -> np.ndarray:
        return np.array([x for band in self.bands for x in band])

    @cached_property
    def midpoints(self) -> np.ndarray:
        return np.array([(a + b) / 2 for a, b in self.bands])

    @cached_property
    def radii(self) -> np.ndarray:
        return np.array([(b - a) / 2 for a, b in self.bands])

    @property
    def hull(self) -> tuple[float, float]:
        return self.bands[0][0], self.bands[-1][1]

    def gap(self, j: int) -> tuple[float, float]:
        """The j-th open gap (b_j, a_{j+1}), j = 0..l-1."""
        return self.bands[j][1], self.bands[j + 1][0]

    def R(self, x):
        """prod_j (x - a_j)(x - b_j); negative on band interiors."""
        x = np.asarray(x)
        out = np.ones_like(x)
        for r in self.endpoints:
            out = out * (x - r)
        return out

    def rest_product(self, j: int, t):
        """R(t) with band j's own two linear factors removed.

        Has constant sign on band j; callers take abs for sqrt(|R|) work.
        """
        t = np.asarray(t)
        out = np.ones_like(t)
        a, b = self.bands[j]
        skipped_a = skipped_b = False
        for r in self.endpoints:
            if r == a and not skipped_a:
                skipped_a = True
            elif r == b and not skipped_b:
                skipped_b = True
            else:
                out = out * (t - r)
        return out

    def gap_rest_product(self, j: int, t):
        """R(t) with gap j's two bounding factors removed."""
        t = np.asarray(t)
        out = np.ones_like(t)
        beta, alpha = self.gap(j)
        skipped_b = skipped_a = False
        for r in self.endpoints:
            if r == beta and not skipped_b:
                skipped_b = True
            elif r == alpha and not skipped_a:
                skipped_a = True
            else:
                out = out * (t - r)
        return out

    def sqrt_R(self, z):
        """Single-valued branch of sqrt(R) on C \\ e, positive on (b_{l+1}, inf).

        Real z evaluate as limits from the upper half plane (x + i0).
        """
        z = np.asarray(z, complex)
        acc = np.zeros_like(z)
        for r in self.endpoints:
            acc = acc + np.log(z - r)
        return np.exp(0.5 * acc)

    def band_index(self, x: float):
        for j, (a, b) in enumerate(self.bands):
            if a <= x <= b:
                return j
        return None

    def contains(self, x: float) -> bool:
        return self.band_index(x) is not None

    def to_json(self) -> str:
        return json.dumps([[a, b] for a, b in self.bands])

    @classmethod
    def from_json(cls, text: str) -> "FiniteGapSet":
        pairs = json.loads(text)
        return make_band_set([x for pair in pairs for x in pair])


def make_band_set(endpoints) -> FiniteGapSet:
    """Validate 2(l+1) endpoints into a FiniteGapSet.

    Rejects odd counts, non-finite values and any violation of the strict
    interlacing a_1 < b_1 < a_2 < ... < b_{l+1}.
    """
    pts = [float(x) for x in endpoints]
    if len(pts) == 0 or len(pts) % 2 != 0:
        raise FiniteGapError(f"need an even, positive number of endpoints, got {len(pts)}")
    if not all(math.isfinite(x) for x in pts):
        raise FiniteGapError("endpoints must be finite")
    for i in range(len(pts) - 1):
        if not pts[i] < pts[i + 1]:
            kind = "zero-length band" if i % 2 == 0 else "touching/overlapping bands"
            raise FiniteGapError(
                f"{kind}: endpoint[{i}]={pts[i]!r} must be < endpoint[{i+1}]={pts[i+1]!r}")
    bands = tuple((pts[2 * i], pts[2 * i + 1]) for i in range(len(pts) // 2))
    return FiniteGapSet(bands)


@dataclass(frozen=True)
class QuadratureGrid:
    """Cosine-substitution nodes/weights for integrals against 1/sqrt(|R|).

    band integrals: int_band g / sqrt(|R|) dt ~= sum_i band_weights[j][i] * g(band_nodes[j][i])
    gap integrals:  int_gap  g / sqrt(R)  dt ~= sum_i gap_weights[j][i] * g(gap_nodes[j][i])
    """

    set: FiniteGapSet
    band_nodes: tuple
    band_weights: tuple
    gap_nodes: tuple
    gap_weights: tuple
    node_count: int


def quadrature_grid(e: FiniteGapSet, n: int = 256) -> QuadratureGrid:
    theta = cosine_nodes(n)
    ct = np.cos(theta)
    bn, bw, gn, gw = [], [], [], []
    for j in range(e.n_bands):
        t = e.midpoints[j] + e.radii[j] * ct
        bn.append(t)
        bw.append((np.pi / n) / np.sqrt(np.abs(e.rest_product(j, t))))
    for j in range(e.ell):
        beta, alpha = e.gap(j)
        mid, rad = (beta + alpha) / 2, (alpha - beta) / 2
        t = mid + rad * ct
        gn.append(t)
        gw.append((np.pi / n) / np.sqrt(np.abs(e.gap_rest_product(j, t))))
    return QuadratureGrid(e, tuple(bn), tuple(bw), tuple(gn), tuple(gw), n)


@dataclass(frozen=True)
class EquilibriumData:
    """Solved equilibrium measure of a finite gap set.

    band_coeffs[j] are the cosine coefficients of the theta-density
    h_j(theta) = w(mid_j + rad_j cos theta) * rad_j * sin(theta), so the mass
    of band j is pi*band_coeffs[j][0].
    """

    set: FiniteGapSet
    gap_zeros: np.ndarray
    robin_constant: float
    capacity: float
    harmonic_measures: np.ndarray
    band_coeffs: tuple
    node_counts: int

    def q_poly(self, t):
        """The monic degree-l polynomial Q with one zero per gap."""
        t = np.asarray(t, float)
        out = np.ones_like(t)
        for z in self.gap_zeros:
            out = out * (t - z)
        return out

    def theta_density(self, j: int, theta) -> np.ndarray:
        """h_j(theta) = |Q| / (pi sqrt(|P_j|)); smooth in cos(theta)."""
        t = self.set.midpoints[j] + self.set.radii[j] * np.cos(np.asarray(theta, float))
        return np.abs(self.q_poly(t)) / (np.pi * np.sqrt(np.abs(self.set.rest_product(j, t))))

    def to_json(self) -> str:
        return json.dumps({
            "gap_zeros": list(self.gap_zeros),
            "robin_constant": self.robin_constant,
            "capacity": self.capacity,
            "harmonic_measures": list(self.harmonic_measures),
            "node_counts": self.node_counts,
        })


def _gap_condition_solve(e: FiniteGapSet, n: int):
    """Solve the l gap conditions for Q's zeros on an n-point theta grid.

    Works in the hull-scaled variable tau for conditioning; returns the gap
    zeros in the original variable.
    """
    ell = e.ell
    if ell == 0:
        return np.empty(0)
    lo, hi = e.hull
    c0, s0 = (lo + hi) / 2, (hi - lo) / 2
    theta = cosine_nodes(n)
    ct = np.cos(theta)
    M = np.empty((ell, ell))
    rhs = np.empty(ell)
    for j in range(ell):
        beta, alpha = e.gap(j)
        t = (beta + alpha) / 2 + (alpha - beta) / 2 * ct
        w = 1.0 / np.sqrt(np.abs(e.gap_rest_product(j, t)))
        tau = (t - c0) / s0
        for k in range(ell):
            M[j, k] = np.sum(tau**k * w)
        rhs[j] = -np.sum(tau**ell * w)
    try:
        coef = np.linalg.solve(M, rhs)
    except np.linalg.LinAlgError as exc:  # cannot occur for valid sets
        raise AccuracyError(f"gap-condition system singular: {exc}") from exc
    roots = np.roots(np.concatenate([[1.0], coef[::-1]]))
    if np.abs(roots.imag).max(initial=0.0) > 1e-8:
        raise AccuracyError(f"complex gap zeros {roots}; numerical failure")
    zeros = np.sort(roots.real) * s0 + c0
    for j, z in enumerate(zeros):
        beta, alpha = e.gap(j)
        if not beta < z < alpha:
            raise AccuracyError(
                f"gap zero {z} fell outside gap {j} = ({beta}, {alpha})")
    return zeros


def solve_equilibrium(e: FiniteGapSet, n0: int = 256, tol: float = 1e-10,
                      n_max: int = 16384) -> EquilibriumData:
    """Equilibrium measure, Robin constant, capacity and harmonic measures.

    The theta grid is doubled until gap zeros and band masses move by less
    than tol.  Postconditions asserted here: total mass within 1e-8 of 1 and
    Robin-constant spread over band midpoints below 1e-8.
    """
    n = n0
    prev = None
    while True:
        zeros = _gap_condition_solve(e, n)
        masses = np.empty(e.n_bands)
        theta = cosine_nodes(n)
        for j in range(e.n_bands):
            t = e.midpoints[j] + e.radii[j] * np.cos(theta)
            h = _eq_theta_density(e, zeros, j, t)
            masses[j] = np.pi * h.mean()
        state = np.concatenate([zeros, masses])
        if prev is not None and len(prev) == len(state) \
                and np.abs(state - prev).max() < tol:
            break
        if n >= n_max:
            raise AccuracyError(f"equilibrium solve did not converge by n={n_max}")
        prev = state
        n *= 2

    coeffs = []
    for j in range(e.n_bands):
        t = e.midpoints[j] + e.radii[j] * np.cos(cosine_nodes(n))
        coeffs.append(cos_coeffs(_eq_theta_density(e, zeros, j, t)))
    omega = np.array([np.pi * c[0] for c in coeffs])
    total = omega.sum()
    if abs(total - 1.0) > 1e-8:
        raise AccuracyError(f"equilibrium mass {total} deviates from 1")

    data = EquilibriumData(e, zeros, 0.0, 1.0, omega, tuple(coeffs), n)
    phis = np.array([potential(data, complex(m)) for m in e.midpoints])
    if phis.max() - phis.min() > 1e-8:
        raise AccuracyError(
            f"Robin constant spread {phis.max() - phis.min():.2e} over band midpoints")
    robin = float(phis.mean())
    return EquilibriumData(e, zeros, robin, float(np.exp(-robin)), omega,
                           tuple(coeffs), n)


def _eq_theta_density(e: FiniteGapSet, zeros: np.ndarray, j: int, t: np.ndarray):
    q = np.ones_like(t)
    for z in zeros:
        q = q * (t - z)
    return np.abs(q) / (np.pi * np.sqrt(np.abs(e.rest_product(j, t))))


def equilibrium_density(eq: EquilibriumData, x: float) -> float:
    """w(x) for x strictly inside a band; DomainError otherwise."""
    e = eq.set
    j = e.band_index(x)
    if j is None or x == e.bands[j][0] or x == e.bands[j][1]:
        raise DomainError(f"{x} is not interior to any band of {e.bands}")
    a, b = e.bands[j]
    rr = (x - a) * (b - x) * np.abs(e.rest_product(j, np.asarray(x)))
    return float(np.abs(eq.q_poly(np.asarray(x, float))) / (np.pi * np.sqrt(rr)))


def potential(eq: EquilibriumData, z) -> float | np.ndarray:
    """Logarithmic potential Phi(z) = int log|z-x|^{-1} w(x) dx.

    Evaluated from the cosine expansions; spectrally accurate everywhere,
    including on the bands (where Phi = Robin constant by Frostman).
    """
    z = np.asarray(z, complex)
    scalar = z.ndim == 0
    z = np.atleast_1d(z)
    e = eq.set
    tot = np.zeros(z.shape, float)
    for j in range(e.n_bands):
        c = eq.band_coeffs[j]
        zeta = (z - e.midpoints[j]) / e.radii[j]
        u = inv_joukowski(zeta)
        absu = np.abs(u)
        omega = np.pi * c[0]
        term = omega * np.log(e.radii[j]) + omega * (-np.log(2.0) - np.log(absu))
        if len(c) > 1:
            k = np.arange(1, len(c))
            term = term - np.pi * ((u[..., None] ** k).real * (c[1:] / k)).sum(axis=-1)
        tot -= term
    return float(tot[0]) if scalar else tot


def green(eq: EquilibriumData, z) -> float | np.ndarray:
    """Green's function G = E - Phi: zero on e, positive off e,
    G(z) - log|z| -> -log C at infinity."""
    return eq.robin_constant - potential(eq, z)


def capacity(eq: EquilibriumData) -> float:
    """C(e) = exp(-Robin constant)."""
    return eq.capacity


def harmonic_measures(eq: EquilibriumData) -> np.ndarray:
    """Equilibrium masses of the bands; positive, summing to 1."""
    return eq.harmonic_measures.copy()


def dist_to_set(e: FiniteGapSet, x: float) -> float:
    """Euclidean distance from x to e."""
    best = math.inf
    for a, b in e.bands:
        if a <= x <= b:
            return 0.0
        best = min(best, abs(x - a), abs(x - b))
    return best


def dist_to_complement(e: FiniteGapSet, x: float) -> float:
    """Euclidean distance from x to R \\ e."""
    j = e.band_index(x)
    if j is None:
        return 0.0
    a, b = e.bands[j]
    return min(x - a, b - x)


def joukowski(z):
    """x(z) = z + 1/z."""
    z = np.asarray(z, complex)
    return z + 1.0 / z


def joukowski_inverse(x):
    """z(x) = (x - sqrt(x^2-4))/2 with the branch |z| <= 1."""
    return inv_joukowski(np.asarray(x, complex) / 2.0)


def rational_harmonic_period(omega, tol: float = 1e-6, max_denominator: int = 128):
    """Smallest p <= max_denominator with every omega_j within tol of k_j/p.

    Returns None when no such p exists; p = 1 only for the gapless case.
    """
    omega = np.asarray(omega, float)
    for p in range(1, max_denominator + 1):
        k = np.round(omega * p)
        if np.all(k >= 1) and np.abs(omega - k / p).max() < tol:
            return p
    return None

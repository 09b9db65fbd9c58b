"""Levi-Civita connections, curvature tensors, and vector-bundle curvature.

Index conventions, fixed once for the whole package:

* Christoffel arrays are indexed ``Gamma[k, i, j]`` with k the upper index and
  (i, j) = (differentiation, direction); torsion-freeness is the (i, j)
  symmetry.
* The curvature tensor is ``R[l, k, i, j] = d_i Gamma[l,j,k] - d_j Gamma[l,i,k]
  + Gamma[l,i,m] Gamma[m,j,k] - Gamma[l,j,m] Gamma[m,i,k]``.
* Bundle connection coefficients are skew-Hermitian r x r matrices A_mu per
  coordinate direction (unitary gauge), so traces of the curvature are purely
  imaginary and the characteristic forms built from them are real.

Two independent routes produce the Christoffel symbols: the standard
inverse-metric contraction and a per-(i, j) linear solve obtained from the
Koszul identity specialized to coordinate fields (all brackets vanish).  They
are kept separate so each can certify the other.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .charts import Array, Chart, chart_from_label
from .bundle import MetricSection

DEFAULT_H = 1e-5
RIEMANN_H = 1e-4


class SingularMetricError(ValueError):
    """Metric not invertible where a connection was requested."""


def _metric_partials(sampler: Callable[[Array], Array], x: Array, h: float) -> Array:
    """Central-difference derivatives d[a, i, j] = d_a g_ij."""
    n = x.size
    out = np.empty((n, n, n))
    for a in range(n):
        step = np.zeros(n)
        step[a] = h
        out[a] = (sampler(x + step) - sampler(x - step)) / (2.0 * h)
    return out


def _koszul_rhs(d: Array) -> Array:
    # S[l, i, j] = d_i g_jl + d_j g_il - d_l g_ij
    return np.einsum("ijl->lij", d) + np.einsum("jil->lij", d) - d


def christoffel_standard(section: MetricSection, x, h: float = DEFAULT_H) -> Array:
    """Gamma[k,i,j] = (1/2) g^[k,l] (d_i g_jl + d_j g_il - d_l g_ij)."""
    x = np.asarray(x, dtype=float)
    g = section.matrix(x)
    try:
        ginv = np.linalg.inv(g)
    except np.linalg.LinAlgError as exc:
        raise SingularMetricError(f"metric is singular at {x.tolist()}") from exc
    rhs = _koszul_rhs(_metric_partials(section.sampler, x, h))
    return 0.5 * np.einsum("kl,lij->kij", ginv, rhs)


def christoffel_koszul(section: MetricSection, x, h: float = DEFAULT_H) -> Array:
    """Coordinate Koszul route: solve 2 g Gamma[:, i, j] = rhs[:, i, j].

    Specializing the Koszul identity to coordinate vector fields kills every
    bracket term, leaving one linear system per direction pair.
    """
    x = np.asarray(x, dtype=float)
    g = section.matrix(x)
    n = g.shape[0]
    rhs = _koszul_rhs(_metric_partials(section.sampler, x, h))
    try:
        flat = np.linalg.solve(2.0 * g, rhs.reshape(n, n * n))
    except np.linalg.LinAlgError as exc:
        raise SingularMetricError(f"metric is singular at {x.tolist()}") from exc
    return flat.reshape(n, n, n)


@dataclass(eq=False)
class ChristoffelField:
    """Evaluable connection-coefficient field for one metric section."""

    section: MetricSection
    h: float
    evaluation: Callable[[Array], Array]

    def __call__(self, x) -> Array:
        return self.evaluation(np.asarray(x, dtype=float))


def christoffel_field(
    section: MetricSection, h: float = DEFAULT_H, prefer_analytic: bool = True
) -> ChristoffelField:
    """Field backed by the section's closed-form coefficients when it has
    them, otherwise by finite differences of the metric."""
    if prefer_analytic and section.christoffel is not None:
        analytic = section.christoffel
        evaluation = lambda x: np.asarray(analytic(x), dtype=float)
    else:
        evaluation = lambda x: christoffel_standard(section, x, h)
    return ChristoffelField(section=section, h=h, evaluation=evaluation)


def torsion_defect(gamma: Array) -> float:
    """max |Gamma[k,i,j] - Gamma[k,j,i]|; zero for a torsion-free connection."""
    return float(np.max(np.abs(gamma - gamma.transpose(0, 2, 1))))


def metric_compatibility_defect(
    section: MetricSection, field: ChristoffelField, x, h: float = 5e-6
) -> float:
    """Residual of the parallel-metric identity,
    max |d_i g_jk - Gamma[l,i,j] g_lk - Gamma[l,i,k] g_jl|.

    The derivatives here use their own step (default h = 5e-6) so the check
    stays independent of whatever differencing produced the field.
    """
    x = np.asarray(x, dtype=float)
    d = _metric_partials(section.sampler, x, h)
    g = section.matrix(x)
    gamma = field(x)
    predicted = np.einsum("lij,lk->ijk", gamma, g) + np.einsum("lik,jl->ijk", gamma, g)
    return float(np.max(np.abs(d - predicted)))


@dataclass
class RiemannTensor:
    """Curvature components R[l, k, i, j] at one point."""

    components: Array
    point: Array

    def antisymmetry_defect(self) -> float:
        return float(
            np.max(np.abs(self.components + self.components.transpose(0, 1, 3, 2)))
        )


def riemann_tensor(field: ChristoffelField, x, h: float = RIEMANN_H) -> RiemannTensor:
    """Curvature from the coefficient field by nested central differences.

    Second-derivative quantities are noisier than first, hence the larger
    default step.
    """
    x = np.asarray(x, dtype=float)
    n = x.size
    dG = np.empty((n, n, n, n))
    for a in range(n):
        step = np.zeros(n)
        step[a] = h
        dG[a] = (field(x + step) - field(x - step)) / (2.0 * h)
    g0 = field(x)
    first = np.einsum("iljk->lkij", dG) - np.einsum("jlik->lkij", dG)
    quad = np.einsum("lim,mjk->lkij", g0, g0) - np.einsum("ljm,mik->lkij", g0, g0)
    return RiemannTensor(components=first + quad, point=x)


def gaussian_curvature(
    section: MetricSection, x, field: ChristoffelField | None = None, h: float = RIEMANN_H
) -> float:
    """K = R_0101 / det g on a 2-dimensional chart."""
    if section.chart.dim != 2:
        raise ValueError("Gaussian curvature requires a 2-dimensional chart")
    x = np.asarray(x, dtype=float)
    fld = field if field is not None else christoffel_field(section)
    riem = riemann_tensor(fld, x, h).components
    g = section.matrix(x)
    lowered = float(g[:, 0] @ riem[:, 1, 0, 1])
    return lowered / float(np.linalg.det(g))


# ---------------------------------------------------------------------------
# Vector-bundle connections and their curvature 2-forms
# ---------------------------------------------------------------------------


@dataclass(eq=False)
class BundleConnection:
    """Rank-r bundle in a fixed local frame over a chart.

    ``coefficients(x)`` returns the stack of matrices A_mu(x), shape
    (dim, r, r), each skew-Hermitian.  ``curvature``, when present, is a
    closed-form map x -> F[mu, nu] (shape (dim, dim, r, r)) kept consistent
    with the finite-difference route by tests.
    """

    rank: int
    base_chart: Chart
    coefficients: Callable[[Array], Array]
    label: str = ""
    curvature: Callable[[Array], Array] | None = None

    @property
    def dim(self) -> int:
        return self.base_chart.dim


@dataclass(eq=False)
class Curvature2Form:
    """Field of curvature matrices F_mu_nu(x), antisymmetric in (mu, nu)."""

    rank: int
    dim: int
    components: Callable[[Array], Array]
    label: str = ""

    def at(self, x) -> Array:
        return self.components(np.asarray(x, dtype=float))

    def matrix(self, x, mu: int, nu: int) -> Array:
        return self.at(x)[mu, nu]


def bundle_curvature(conn: BundleConnection, x, h: float = DEFAULT_H) -> Array:
    """F[mu,nu] = d_mu A_nu - d_nu A_mu + [A_mu, A_nu], by central differences."""
    x = np.asarray(x, dtype=float)
    n = conn.dim
    dA = np.empty((n, n, conn.rank, conn.rank), dtype=complex)
    for a in range(n):
        step = np.zeros(n)
        step[a] = h
        dA[a] = (
            np.asarray(conn.coefficients(x + step), dtype=complex)
            - np.asarray(conn.coefficients(x - step), dtype=complex)
        ) / (2.0 * h)
    a0 = np.asarray(conn.coefficients(x), dtype=complex)
    comm = np.einsum("mab,nbc->mnac", a0, a0)
    return dA - dA.transpose(1, 0, 2, 3) + comm - comm.transpose(1, 0, 2, 3)


def curvature_form(conn: BundleConnection, h: float = DEFAULT_H) -> Curvature2Form:
    """The connection's curvature as an evaluable field; closed form when the
    connection carries one, finite differences otherwise."""
    if conn.curvature is not None:
        analytic = conn.curvature
        components = lambda x: np.asarray(analytic(x), dtype=complex)
    else:
        components = lambda x: bundle_curvature(conn, x, h)
    return Curvature2Form(rank=conn.rank, dim=conn.dim, components=components, label=conn.label)


def skew_hermitian_defect(conn: BundleConnection, points) -> float:
    worst = 0.0
    for x in np.atleast_2d(np.asarray(points, dtype=float)):
        a = np.asarray(conn.coefficients(x), dtype=complex)
        worst = max(worst, float(np.max(np.abs(a + a.conj().transpose(0, 2, 1)))))
    return worst


def trivial_connection(rank: int, chart: Chart) -> BundleConnection:
    """Flat connection A = 0 of any rank (rank 0 gives the empty bundle)."""
    if rank < 0:
        raise ValueError("rank must be nonnegative")
    n = chart.dim

    def coeffs(x):
        return np.zeros((n, rank, rank), dtype=complex)

    def curv(x):
        return np.zeros((n, n, rank, rank), dtype=complex)

    return BundleConnection(
        rank=rank,
        base_chart=chart,
        coefficients=coeffs,
        label=f"trivial:rank={rank}",
        curvature=curv,
    )


def monopole_connection(n: int, chart: Chart | None = None) -> BundleConnection:
    """Degree-n line bundle over the sphere in the standard gauge:
    A_phi = (-i n / 2)(1 - cos theta), A_theta = 0, so
    F_theta_phi = (-i n / 2) sin theta."""
    chart = chart if chart is not None else chart_from_label("sphere:r=1")
    charge = int(n)

    def coeffs(x):
        a = np.zeros((2, 1, 1), dtype=complex)
        a[1, 0, 0] = -0.5j * charge * (1.0 - math.cos(x[0]))
        return a

    def curv(x):
        f = np.zeros((2, 2, 1, 1), dtype=complex)
        f01 = -0.5j * charge * math.sin(x[0])
        f[0, 1, 0, 0] = f01
        f[1, 0, 0, 0] = -f01
        return f

    return BundleConnection(
        rank=1,
        base_chart=chart,
        coefficients=coeffs,
        label=f"monopole:n={charge}",
        curvature=curv,
    )


def gauge_shifted(
    conn: BundleConnection, chi: Callable[[Array], float], h: float = DEFAULT_H
) -> BundleConnection:
    """Add the pure-gauge piece i d(chi) * Id to a connection; the curvature
    is unchanged analytically, which the finite-difference route must confirm
    (the shifted connection deliberately drops any closed-form curvature)."""
    eye = np.eye(conn.rank, dtype=complex)

    def coeffs(x):
        x = np.asarray(x, dtype=float)
        base = np.asarray(conn.coefficients(x), dtype=complex).copy()
        for a in range(conn.dim):
            step = np.zeros(conn.dim)
            step[a] = h
            dchi = (float(chi(x + step)) - float(chi(x - step))) / (2.0 * h)
            base[a] = base[a] + 1j * dchi * eye
        return base

    return BundleConnection(
        rank=conn.rank,
        base_chart=conn.base_chart,
        coefficients=coeffs,
        label=f"{conn.label}+gauge",
        curvature=None,
    )

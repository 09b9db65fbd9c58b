"""Metric fibers, sections, multi-metric families, and the induced norms.

A fiber is one symmetric positive-definite form over a base point; a section
assigns a fiber to every chart point and is the computational stand-in for a
choice of Riemannian metric.  Families of sections over one chart give the
multi-norm structure: per-member norms ||v|| = sqrt(g(v, v)) plus two-sided
equivalence constants between any two members.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.linalg import solve_triangular

from .charts import Array, Chart, TangentVector, chart_from_label, flat_chart

SPD_TOL = 1e-10


class InvalidSectionError(ValueError):
    """A sampler produced a matrix that is not symmetric positive-definite."""


@dataclass(frozen=True)
class SpdReport:
    passed: bool
    symmetry_defect: float
    min_eigenvalue: float
    max_eigenvalue: float


def validate_spd(matrix, tol: float = SPD_TOL) -> SpdReport:
    """Check symmetry and positive-definiteness, both relative to scale.

    Passes iff max|g - g^T| < tol * max|g| and lambda_min > tol * lambda_max.
    """
    g = np.asarray(matrix, dtype=float)
    if g.ndim != 2 or g.shape[0] != g.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {g.shape}")
    scale = float(np.max(np.abs(g))) or 1.0
    defect = float(np.max(np.abs(g - g.T)))
    eigs = np.linalg.eigvalsh(0.5 * (g + g.T))
    lo, hi = float(eigs[0]), float(eigs[-1])
    passed = defect < tol * scale and lo > tol * hi
    return SpdReport(passed, defect, lo, hi)


@dataclass
class MetricFiber:
    """One SPD bilinear form attached to its base point.

    Construction validates the form, so every live fiber satisfies the
    symmetry/positivity contract.
    """

    point: Array
    form: Array

    def __post_init__(self) -> None:
        self.point = np.asarray(self.point, dtype=float)
        self.form = np.asarray(self.form, dtype=float)
        report = validate_spd(self.form)
        if not report.passed:
            raise InvalidSectionError(
                f"matrix at {self.point.tolist()} is not symmetric positive-definite "
                f"(symmetry defect {report.symmetry_defect:.3e}, "
                f"min eigenvalue {report.min_eigenvalue:.3e})"
            )

    @property
    def dim(self) -> int:
        return self.form.shape[0]


@dataclass(eq=False)
class MetricSection:
    """Chart-local metric field x -> g(x).

    ``sampler`` must be deterministic.  ``christoffel``, when present, is a
    closed-form map x -> Gamma[k, i, j] for the section's Levi-Civita
    connection, and ``geodesic_accel`` the matching scalar geodesic
    acceleration (x0, x1, v0, v1) -> (a0, a1) used by the distance solver's
    inner loop on 2D charts; finite differences remain the generic route and
    are tested against these closed forms.
    """

    chart: Chart
    sampler: Callable[[Array], Array]
    label: str = ""
    christoffel: Callable[[Array], Array] | None = None
    geodesic_accel: Callable | None = None

    def matrix(self, x) -> Array:
        """Unvalidated metric evaluation (hot-loop path)."""
        return np.asarray(self.sampler(np.asarray(x, dtype=float)), dtype=float)


@dataclass(eq=False)
class MultiMetricFamily:
    """Finite ordered family of metric sections over one shared chart."""

    members: list[MetricSection]
    index_labels: list[str] = field(default_factory=list)

    def __post_init__(self) -> None:
        if not self.members:
            raise ValueError("a multi-metric family must have at least one member")
        chart = self.members[0].chart
        if any(m.chart is not chart for m in self.members):
            raise ValueError("all family members must share one chart")
        if not self.index_labels:
            self.index_labels = [m.label or f"g{i}" for i, m in enumerate(self.members)]
        if len(self.index_labels) != len(self.members):
            raise ValueError("one index label per member required")

    @property
    def chart(self) -> Chart:
        return self.members[0].chart

    def __len__(self) -> int:
        return len(self.members)


@dataclass(eq=False)
class SubbundlePredicate:
    """Deterministic pointwise membership test for a restricted fiber set."""

    test: Callable[[MetricFiber], bool]
    label: str = ""


def section_evaluate(section: MetricSection, x) -> MetricFiber:
    """Evaluate a section into a validated fiber; the fiber carries its base
    point, so the projection-to-base contract holds by construction."""
    x = section.chart.require_interior(x)
    g = section.matrix(x)
    try:
        return MetricFiber(point=x, form=g)
    except InvalidSectionError as exc:
        raise InvalidSectionError(
            f"section {section.label!r} is invalid at {x.tolist()}: {exc}"
        ) from None


def metric_norm(fiber: MetricFiber, v: TangentVector) -> float:
    """Norm sqrt(v^T g v) of a tangent vector in the fiber's form."""
    if v.base.shape != fiber.point.shape or not np.array_equal(v.base, fiber.point):
        raise ValueError(
            f"tangent base {v.base.tolist()} does not match fiber point {fiber.point.tolist()}"
        )
    if v.components.shape != (fiber.dim,):
        raise ValueError(
            f"dimension mismatch: {v.components.shape} components vs {fiber.dim}x{fiber.dim} form"
        )
    q = float(v.components @ fiber.form @ v.components)
    return math.sqrt(max(q, 0.0))


def multi_norm(family: MultiMetricFamily, x, components) -> Array:
    """All member norms of one tangent vector, ordered as the family index."""
    x = np.asarray(x, dtype=float)
    vec = TangentVector(base=x, components=components)
    return np.array(
        [metric_norm(section_evaluate(member, x), vec) for member in family.members]
    )


@dataclass(frozen=True)
class NormAxiomReport:
    """Worst observed violation of each norm axiom over random samples."""

    positivity: float
    homogeneity: float
    triangle: float
    zero_vector_norm: float
    samples: int

    @property
    def max_violation(self) -> float:
        return max(self.positivity, self.homogeneity, self.triangle, self.zero_vector_norm)


def norm_axiom_check(fiber: MetricFiber, sample_count: int, seed: int) -> NormAxiomReport:
    """Sample random (v, w, alpha) and report worst axiom violations.

    Violations measured: max(-||v||, 0), | ||a v|| - |a| ||v|| |, and
    max(||v+w|| - ||v|| - ||w||, 0); all vanish analytically for any SPD form,
    so anything beyond roundoff flags a broken fiber.  alpha = 0 is always
    included and must give ||0 v|| = 0 exactly.
    """
    rng = np.random.default_rng(seed)
    n = fiber.dim
    pos = hom = tri = 0.0

    def norm_of(c) -> float:
        return metric_norm(fiber, TangentVector(fiber.point, c))

    for _ in range(int(sample_count)):
        v = rng.standard_normal(n)
        w = rng.standard_normal(n)
        alpha = rng.standard_normal()
        nv, nw = norm_of(v), norm_of(w)
        pos = max(pos, -nv)
        hom = max(hom, abs(norm_of(alpha * v) - abs(alpha) * nv))
        tri = max(tri, norm_of(v + w) - nv - nw)
    zero = norm_of(0.0 * rng.standard_normal(n))
    return NormAxiomReport(pos, hom, tri, zero, int(sample_count))


def subbundle_contains(pred: SubbundlePredicate, fiber: MetricFiber) -> bool:
    return bool(pred.test(fiber))


def diagonal_predicate(tol: float = 1e-9) -> SubbundlePredicate:
    def test(fiber: MetricFiber) -> bool:
        off = fiber.form - np.diag(np.diag(fiber.form))
        return float(np.max(np.abs(off))) <= tol * float(np.max(np.abs(fiber.form)))

    return SubbundlePredicate(test=test, label="diagonal")


def conformal_factor(fiber: MetricFiber, reference: Callable[[Array], Array]) -> float | None:
    """Least-squares c with form = c * reference(point), or None if no
    positive c fits to 1e-9 relative."""
    g0 = np.asarray(reference(fiber.point), dtype=float)
    denom = float(np.sum(g0 * g0))
    if denom == 0.0:
        return None
    c = float(np.sum(fiber.form * g0)) / denom
    if c <= 0.0:
        return None
    resid = float(np.max(np.abs(fiber.form - c * g0)))
    if resid > 1e-9 * float(np.max(np.abs(fiber.form))):
        return None
    return c


def conformal_predicate(reference: Callable[[Array], Array], label: str = "conformal-to-g0") -> SubbundlePredicate:
    return SubbundlePredicate(
        test=lambda fiber: conformal_factor(fiber, reference) is not None,
        label=label,
    )


def norm_equivalence_constants(family: MultiMetricFamily, x, i: int, j: int) -> tuple[float, float]:
    """Tight constants (c, C) with c ||v||_j <= ||v||_i <= C ||v||_j for all v.

    These are the square roots of the extreme generalized eigenvalues of
    g_i v = lambda g_j v, computed by Cholesky reduction of g_j followed by a
    symmetric eigensolve; both bounds are attained by eigenvectors.
    """
    if not (0 <= i < len(family)) or not (0 <= j < len(family)):
        raise IndexError(f"family indices ({i}, {j}) out of range for {len(family)} members")
    x = np.asarray(x, dtype=float)
    gi = family.members[i].matrix(x)
    gj = family.members[j].matrix(x)
    L = np.linalg.cholesky(gj)
    half = solve_triangular(L, gi, lower=True)
    reduced = solve_triangular(L, half.T, lower=True).T
    eigs = np.linalg.eigvalsh(0.5 * (reduced + reduced.T))
    return math.sqrt(max(float(eigs[0]), 0.0)), math.sqrt(float(eigs[-1]))


def smoothness_spotcheck(section: MetricSection, points, h: float = 1e-4) -> float:
    """Largest finite-difference Lipschitz ratio ||g(x+h) - g(x)|| / h over
    the given points and axes; a cheap continuity screen for black-box
    samplers."""
    worst = 0.0
    for x in np.atleast_2d(np.asarray(points, dtype=float)):
        g0 = section.matrix(x)
        for a in range(section.chart.dim):
            step = np.zeros_like(x)
            step[a] = h
            diff = float(np.max(np.abs(section.matrix(x + step) - g0)))
            worst = max(worst, diff / h)
    return worst


# ---------------------------------------------------------------------------
# Built-in sections (closed-form metrics with closed-form connections)
# ---------------------------------------------------------------------------

def flat_section(chart: Chart | None = None) -> MetricSection:
    chart = chart or flat_chart()
    n = chart.dim
    eye = np.eye(n)
    return MetricSection(
        chart=chart,
        sampler=lambda x: eye.copy(),
        label="flat",
        christoffel=lambda x: np.zeros((n, n, n)),
        geodesic_accel=(lambda x0, x1, v0, v1: (0.0, 0.0)) if n == 2 else None,
    )


def sphere_section(radius: float = 1.0, chart: Chart | None = None) -> MetricSection:
    """Round metric diag(r^2, r^2 sin^2 theta) on the sphere chart."""
    chart = chart or chart_from_label(f"sphere:r={radius:g}")
    r2 = float(radius) ** 2

    def sampler(x):
        st = math.sin(x[0])
        return np.array([[r2, 0.0], [0.0, r2 * st * st]])

    def gamma(x):
        t = x[0]
        st, ct = math.sin(t), math.cos(t)
        out = np.zeros((2, 2, 2))
        out[0, 1, 1] = -st * ct
        cot = ct / st
        out[1, 0, 1] = out[1, 1, 0] = cot
        return out

    def accel(x0, x1, v0, v1):
        st = math.sin(x0)
        ct = math.cos(x0)
        return st * ct * v1 * v1, -2.0 * (ct / st) * v0 * v1

    return MetricSection(
        chart=chart, sampler=sampler, label=chart.label, christoffel=gamma, geodesic_accel=accel
    )


def torus_section(R: float = 2.0, r: float = 1.0, chart: Chart | None = None) -> MetricSection:
    """Flat-embedding torus metric diag(r^2, (R + r cos u)^2)."""
    chart = chart or chart_from_label(f"torus:R={R:g},r={r:g}")
    R, r = float(R), float(r)

    def sampler(x):
        ring = R + r * math.cos(x[0])
        return np.array([[r * r, 0.0], [0.0, ring * ring]])

    def gamma(x):
        u = x[0]
        su, cu = math.sin(u), math.cos(u)
        ring = R + r * cu
        out = np.zeros((2, 2, 2))
        out[0, 1, 1] = ring * su / r
        out[1, 0, 1] = out[1, 1, 0] = -r * su / ring
        return out

    def accel(x0, x1, v0, v1):
        su = math.sin(x0)
        ring = R + r * math.cos(x0)
        return -ring * su / r * v1 * v1, 2.0 * r * su / ring * v0 * v1

    return MetricSection(
        chart=chart, sampler=sampler, label=chart.label, christoffel=gamma, geodesic_accel=accel
    )


def scaled_section(base: MetricSection, factor: float, label: str | None = None) -> MetricSection:
    """Member c * g of a conformal family with constant factor c > 0.

    Constant scaling leaves the Levi-Civita connection unchanged, so the
    base's closed-form coefficients carry over.
    """
    if factor <= 0:
        raise ValueError("scale factor must be positive")
    c = float(factor)
    return MetricSection(
        chart=base.chart,
        sampler=lambda x: c * base.sampler(x),
        label=label or f"{base.label}*{c:g}",
        christoffel=base.christoffel,
        geodesic_accel=base.geodesic_accel,
    )


def conformal_section(
    base: MetricSection,
    log_factor: Callable[[Array], float],
    log_factor_grad: Callable[[Array], Array] | None = None,
    label: str | None = None,
) -> MetricSection:
    """Conformally rescaled section exp(2 lam(x)) * g(x).

    With the gradient of lam supplied, the rescaled connection is available in
    closed form whenever the base's is: Gamma'[k,i,j] = Gamma[k,i,j]
    + d_i lam delta[k,j] + d_j lam delta[k,i] - g[i,j] g^[k,l] d_l lam.
    """

    def sampler(x):
        return math.exp(2.0 * float(log_factor(x))) * base.sampler(x)

    gamma = None
    if log_factor_grad is not None and base.christoffel is not None:
        base_gamma = base.christoffel

        def gamma(x):
            out = np.array(base_gamma(x), dtype=float, copy=True)
            grad = np.asarray(log_factor_grad(x), dtype=float)
            g = base.matrix(x)
            raised = np.linalg.solve(g, grad)
            n = g.shape[0]
            eye = np.eye(n)
            out += np.einsum("ki,j->kij", eye, grad)
            out += np.einsum("kj,i->kij", eye, grad)
            out -= np.einsum("ij,k->kij", g, raised)
            return out

    return MetricSection(
        chart=base.chart,
        sampler=sampler,
        label=label or f"conformal({base.label})",
        christoffel=gamma,
    )


def conformal_flat_section(chart: Chart | None = None) -> MetricSection:
    """exp(2 x_0) times the identity metric on a small flat box."""
    chart = chart or chart_from_label("conformal-flat")
    base = flat_section(chart)
    section = conformal_section(
        base,
        log_factor=lambda x: float(x[0]),
        log_factor_grad=lambda x: np.array([1.0] + [0.0] * (chart.dim - 1)),
        label="conformal-flat",
    )
    if chart.dim == 2:
        # Gamma[0,0,0] = 1, Gamma[0,1,1] = -1, Gamma[1,0,1] = Gamma[1,1,0] = 1
        section.geodesic_accel = lambda x0, x1, v0, v1: (v1 * v1 - v0 * v0, -2.0 * v0 * v1)
    return section


BUILTIN_SECTIONS = ("flat", "conformal-flat", "sphere:<r>", "torus:<R>,<r>")


def builtin_section(label: str) -> MetricSection:
    """Resolve a metric-section label used by the CLI and the test suite."""
    if label == "flat":
        return flat_section()
    if label == "conformal-flat":
        return conformal_flat_section()
    if label.startswith("sphere:"):
        chart = chart_from_label(label)
        radius = float(chart.label.split("r=")[1])
        return sphere_section(radius=radius, chart=chart)
    if label.startswith("torus:"):
        chart = chart_from_label(label)
        body = chart.label.split(":", 1)[1]
        params = dict(part.split("=") for part in body.split(","))
        return torus_section(R=float(params["R"]), r=float(params["r"]), chart=chart)
    raise ValueError(f"unknown section label {label!r}; built-ins: {BUILTIN_SECTIONS}")

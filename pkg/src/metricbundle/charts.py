"""Chart-based surfaces and curves: coordinate boxes, embeddings, quadrature.

A chart is an axis-aligned coordinate box together with an optional embedding
into an ambient Euclidean space.  Everything downstream (metric sections,
connections, geodesics, characteristic-number integrals) is evaluated in
these coordinates; compact manifolds are represented by a single chart whose
periodic axes wrap, so seams are measure-zero and never integrated across.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

Array = np.ndarray


class ChartError(ValueError):
    """Bad chart geometry or misuse: degenerate box, missing embedding,
    point outside the domain, rank-deficient jacobian."""


SCHEMES = ("midpoint", "gauss-legendre")


@dataclass(eq=False)
class Chart:
    """Coordinate box with optional embedding into R^m.

    ``periodic`` marks axes that wrap (period = axis width); ``default_margin``
    is the per-axis strip excluded from quadrature, nonzero only on axes that
    touch coordinate singularities (the sphere's polar axis).
    """

    dim: int
    domain: tuple[tuple[float, float], ...]
    embedding: Callable[[Array], Array] | None = None
    jacobian: Callable[[Array], Array] | None = None
    label: str = ""
    periodic: tuple[bool, ...] = ()
    default_margin: tuple[float, ...] = ()

    def __post_init__(self) -> None:
        if self.dim < 1:
            raise ChartError(f"chart dimension must be positive, got {self.dim}")
        self.domain = tuple((float(lo), float(hi)) for lo, hi in self.domain)
        if len(self.domain) != self.dim:
            raise ChartError("domain must give one interval per axis")
        for lo, hi in self.domain:
            if not lo < hi:
                raise ChartError(f"degenerate domain interval [{lo}, {hi}]")
        if not self.periodic:
            self.periodic = (False,) * self.dim
        if not self.default_margin:
            self.default_margin = (0.0,) * self.dim
        if len(self.periodic) != self.dim or len(self.default_margin) != self.dim:
            raise ChartError("periodic/default_margin must match the dimension")

    @property
    def widths(self) -> Array:
        return np.array([hi - lo for lo, hi in self.domain])

    def contains(self, x, clearance: float = 0.0) -> bool:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dim,):
            return False
        for xi, (lo, hi), per in zip(x, self.domain, self.periodic):
            if per:
                continue
            if not (lo + clearance < xi < hi - clearance):
                return False
        return True

    def require_interior(self, x, clearance: float = 0.0) -> Array:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dim,):
            raise ChartError(f"expected {self.dim} coordinates, got shape {x.shape}")
        if not self.contains(x, clearance):
            raise ChartError(
                f"point {x.tolist()} outside the interior of chart "
                f"{self.label or self.domain} (clearance {clearance})"
            )
        return x

    def wrap(self, x) -> Array:
        """Map periodic coordinates back into their base interval."""
        x = np.array(x, dtype=float)
        for a, ((lo, hi), per) in enumerate(zip(self.domain, self.periodic)):
            if per:
                x[a] = lo + (x[a] - lo) % (hi - lo)
        return x

    def wrapped_delta(self, a, b) -> Array:
        """Shortest per-axis displacement a - b, respecting periodic axes."""
        d = np.asarray(a, dtype=float) - np.asarray(b, dtype=float)
        for ax, ((lo, hi), per) in enumerate(zip(self.domain, self.periodic)):
            if per:
                w = hi - lo
                d[ax] = (d[ax] + 0.5 * w) % w - 0.5 * w
        return d


@dataclass(frozen=True)
class GridSpec:
    """Tensor-product quadrature request: node counts, rule, margins.

    ``margin=None`` defers to the chart's per-axis defaults; a scalar margin
    is broadcast to all axes.
    """

    counts: tuple[int, ...]
    scheme: str = "gauss-legendre"
    margin: tuple[float, ...] | float | None = None

    def __post_init__(self) -> None:
        counts = tuple(int(c) for c in (self.counts if np.iterable(self.counts) else (self.counts,)))
        object.__setattr__(self, "counts", counts)
        if any(c < 2 for c in counts):
            raise ChartError(f"grid counts must be >= 2 per axis, got {counts}")
        if self.scheme not in SCHEMES:
            raise ChartError(f"unknown quadrature scheme {self.scheme!r}; use one of {SCHEMES}")
        if self.margin is not None and np.iterable(self.margin):
            object.__setattr__(self, "margin", tuple(float(m) for m in self.margin))

    def margins_for(self, chart: Chart) -> tuple[float, ...]:
        if self.margin is None:
            return chart.default_margin
        if np.iterable(self.margin):
            if len(self.margin) != chart.dim:
                raise ChartError("margin must give one value per axis")
            return self.margin  # type: ignore[return-value]
        return (float(self.margin),) * chart.dim


@dataclass
class TangentVector:
    """Vector attached to a base point, components in the coordinate frame."""

    base: Array
    components: Array

    def __post_init__(self) -> None:
        self.base = np.asarray(self.base, dtype=float)
        self.components = np.asarray(self.components, dtype=float)


def embedding_jacobian(chart: Chart, x, h: float = 1e-5) -> Array:
    """Jacobian of the chart embedding at x, analytic when supplied,
    otherwise central finite differences with step h per axis."""
    if chart.embedding is None:
        raise ChartError(f"chart {chart.label!r} has no embedding")
    x = chart.require_interior(x, clearance=0.0 if chart.jacobian else h)
    if chart.jacobian is not None:
        return np.asarray(chart.jacobian(x), dtype=float)
    cols = []
    for a in range(chart.dim):
        step = np.zeros(chart.dim)
        step[a] = h
        fwd = np.asarray(chart.embedding(x + step), dtype=float)
        bwd = np.asarray(chart.embedding(x - step), dtype=float)
        cols.append((fwd - bwd) / (2.0 * h))
    return np.stack(cols, axis=1)


def induced_metric(chart: Chart, x, h: float = 1e-5) -> Array:
    """Pullback metric J^T J of the embedding; requires full-rank jacobian."""
    jac = embedding_jacobian(chart, x, h)
    smallest = np.linalg.svd(jac, compute_uv=False)[-1]
    if smallest <= 1e-8:
        raise ChartError(
            f"rank-deficient jacobian at {np.asarray(x).tolist()} "
            f"(smallest singular value {smallest:.3e})"
        )
    g = jac.T @ jac
    return 0.5 * (g + g.T)


def _axis_rule(lo: float, hi: float, count: int, scheme: str) -> tuple[Array, Array]:
    width = hi - lo
    if scheme == "midpoint":
        nodes = lo + (np.arange(count) + 0.5) * (width / count)
        weights = np.full(count, width / count)
    else:
        xs, ws = np.polynomial.legendre.leggauss(count)
        nodes = lo + 0.5 * width * (xs + 1.0)
        weights = 0.5 * width * ws
    return nodes, weights


def quadrature_grid(chart: Chart, spec: GridSpec) -> tuple[Array, Array]:
    """Tensor-product quadrature nodes and weights over the margin-shrunk box.

    Returns ``(nodes, weights)`` with nodes of shape (m, dim); the weights sum
    to the shrunk box volume and every node is strictly interior.
    """
    if len(spec.counts) != chart.dim:
        raise ChartError("grid counts must give one value per axis")
    margins = spec.margins_for(chart)
    axes = []
    for (lo, hi), m, count in zip(chart.domain, margins, spec.counts):
        if m < 0:
            raise ChartError("margin must be nonnegative")
        if lo + m >= hi - m:
            raise ChartError(f"margin {m} collapses axis [{lo}, {hi}]")
        axes.append(_axis_rule(lo + m, hi - m, count, spec.scheme))
    grids = np.meshgrid(*[a[0] for a in axes], indexing="ij")
    nodes = np.stack([g.reshape(-1) for g in grids], axis=1)
    weights = axes[0][1]
    for _, w in axes[1:]:
        weights = np.multiply.outer(weights, w)
    return nodes, weights.reshape(-1)


# ---------------------------------------------------------------------------
# Built-in charts
# ---------------------------------------------------------------------------

def flat_chart(bounds=((-5.0, 5.0), (-5.0, 5.0)), label: str = "flat") -> Chart:
    """Euclidean box with the identity embedding."""
    dim = len(bounds)
    return Chart(
        dim=dim,
        domain=tuple(bounds),
        embedding=lambda x: np.asarray(x, dtype=float).copy(),
        jacobian=lambda x: np.eye(dim),
        label=label,
    )


def sphere_chart(radius: float = 1.0) -> Chart:
    """Round sphere in colatitude/longitude coordinates (theta, phi).

    The polar axis carries the default quadrature margin so integrands with
    the sqrt(det g) area factor stay clear of the degenerate metric at the
    poles; phi wraps with period 2*pi.
    """
    if radius <= 0:
        raise ChartError("sphere radius must be positive")
    r = float(radius)

    def embed(x):
        t, p = x
        st = math.sin(t)
        return np.array([r * st * math.cos(p), r * st * math.sin(p), r * math.cos(t)])

    def jac(x):
        t, p = x
        st, ct = math.sin(t), math.cos(t)
        sp, cp = math.sin(p), math.cos(p)
        return np.array(
            [
                [r * ct * cp, -r * st * sp],
                [r * ct * sp, r * st * cp],
                [-r * st, 0.0],
            ]
        )

    return Chart(
        dim=2,
        domain=((0.0, math.pi), (0.0, 2.0 * math.pi)),
        embedding=embed,
        jacobian=jac,
        label=f"sphere:r={r:g}",
        periodic=(False, True),
        default_margin=(1e-6, 0.0),
    )


def torus_chart(R: float = 2.0, r: float = 1.0) -> Chart:
    """Torus of revolution, poloidal u then toroidal v; both axes wrap."""
    if not R > r > 0:
        raise ChartError("torus radii must satisfy R > r > 0")
    R, r = float(R), float(r)

    def embed(x):
        u, v = x
        ring = R + r * math.cos(u)
        return np.array([ring * math.cos(v), ring * math.sin(v), r * math.sin(u)])

    def jac(x):
        u, v = x
        su, cu = math.sin(u), math.cos(u)
        sv, cv = math.sin(v), math.cos(v)
        ring = R + r * cu
        return np.array(
            [
                [-r * su * cv, -ring * sv],
                [-r * su * sv, ring * cv],
                [r * cu, 0.0],
            ]
        )

    return Chart(
        dim=2,
        domain=((0.0, 2.0 * math.pi), (0.0, 2.0 * math.pi)),
        embedding=embed,
        jacobian=jac,
        label=f"torus:R={R:g},r={r:g}",
        periodic=(True, True),
    )


def chart_from_label(label: str) -> Chart:
    """Resolve a chart label such as "sphere:r=2" or "torus:R=2,r=1"."""
    if label == "flat":
        return flat_chart()
    if label == "conformal-flat":
        return flat_chart(bounds=((-1.0, 1.0), (-1.0, 1.0)), label="conformal-flat")
    if label.startswith("sphere:"):
        params = _parse_params(label.split(":", 1)[1])
        return sphere_chart(radius=params.get("r", 1.0))
    if label.startswith("torus:"):
        params = _parse_params(label.split(":", 1)[1])
        return torus_chart(R=params.get("R", 2.0), r=params.get("r", 1.0))
    raise ChartError(f"unknown chart label {label!r}")


def _parse_params(text: str) -> dict[str, float]:
    params: dict[str, float] = {}
    for part in text.split(","):
        if not part:
            continue
        key, _, value = part.partition("=")
        try:
            params[key.strip()] = float(value)
        except ValueError as exc:
            raise ChartError(f"bad chart parameter {part!r}") from exc
    return params

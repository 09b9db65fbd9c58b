"""Characteristic forms, characteristic-number integrals, and a rank/degree
Grothendieck group on closed oriented surfaces.

Conventions, fixed once so that the monopole bundle of charge n has degree n:
the first Chern representative is (i / 2 pi) tr F, equal to the Chern
character term -(1 / 2 pi i) tr F; the tangent-bundle term of the Todd class
on a surface is half the Euler form, (K / 4 pi) sqrt(det g) du dv; the A-hat
expansion has no degree-2 term, so its surface truncation is the constant 1.

On a 2-dimensional base only degrees 0 and 2 survive, which makes every index
here an integral of a single 2-form coefficient.  Integrals are reported raw
alongside the rounded integer and the gap between them: quadrature error is
observable, never silently rounded away.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache, reduce
from typing import Callable, Iterable, Sequence

import numpy as np

from .charts import Array, Chart, GridSpec, quadrature_grid
from .bundle import MetricSection
from .connection import (
    BundleConnection,
    Curvature2Form,
    christoffel_field,
    curvature_form,
    gaussian_curvature,
)

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class EvenFormValue:
    """Pointwise even-form data: a scalar plus the coefficient of the
    coordinate area element.  Imaginary parts are carried along and reported;
    in unitary gauge they stay at roundoff."""

    degree0: complex
    degree2: complex

    def __add__(self, other: "EvenFormValue") -> "EvenFormValue":
        return EvenFormValue(self.degree0 + other.degree0, self.degree2 + other.degree2)

    def product(self, other: "EvenFormValue") -> "EvenFormValue":
        """Graded product truncated to degree 2 (degree 4 vanishes on a surface)."""
        return EvenFormValue(
            self.degree0 * other.degree0,
            self.degree0 * other.degree2 + self.degree2 * other.degree0,
        )


@dataclass(frozen=True)
class IndexReport:
    """A characteristic-number integral plus its integer reading."""

    raw: float
    rounded: int
    gap: float
    formula: str
    inputs: tuple[str, ...]
    imag_residue: float = 0.0


def _report(raw: float, formula: str, inputs: Iterable[str], residue: float = 0.0) -> IndexReport:
    rounded = int(round(raw))
    return IndexReport(
        raw=raw,
        rounded=rounded,
        gap=abs(raw - rounded),
        formula=formula,
        inputs=tuple(inputs),
        imag_residue=residue,
    )


# ---------------------------------------------------------------------------
# Pointwise characteristic forms
# ---------------------------------------------------------------------------

def chern_character_point(form: Curvature2Form, x) -> EvenFormValue:
    """Chern character through degree 2: rank in degree 0 and
    -(1 / 2 pi i) tr F in degree 2.  Higher terms vanish on a surface."""
    f01 = form.matrix(x, 0, 1)
    tr = complex(np.trace(f01)) if form.rank else 0.0 + 0.0j
    return EvenFormValue(degree0=complex(form.rank), degree2=-tr / (TWO_PI * 1j))


def first_chern_point(form: Curvature2Form, x) -> complex:
    """First-Chern representative (i / 2 pi) tr F at x (equals the degree-2
    Chern character term)."""
    f01 = form.matrix(x, 0, 1)
    tr = complex(np.trace(f01)) if form.rank else 0.0 + 0.0j
    return 1j * tr / TWO_PI


def todd_point(curvature: float, area_element: float) -> EvenFormValue:
    """Surface Todd class 1 + (K / 4 pi) sqrt(det g) du dv from the Gaussian
    curvature and area element at a point."""
    return EvenFormValue(degree0=1.0 + 0.0j, degree2=complex(curvature * area_element / (2.0 * TWO_PI)))


def ahat_point(x=None) -> EvenFormValue:
    """Surface A-hat class: the expansion's first correction is degree 4,
    absent here, so the class is the constant 1."""
    return EvenFormValue(degree0=1.0 + 0.0j, degree2=0.0 + 0.0j)


# ---------------------------------------------------------------------------
# Quadrature of even forms
# ---------------------------------------------------------------------------

def _worker_count() -> int:
    raw = os.environ.get("MBTOOL_THREADS", "")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def _map_nodes(fn: Callable[[Array], complex], nodes: Array) -> Array:
    """Evaluate fn at every node.  MBTOOL_THREADS > 1 spreads the evaluation
    over a thread pool in fixed-size ordered chunks, so the assembled array
    (and therefore the pairwise summation downstream) is identical to the
    sequential result."""
    workers = _worker_count()
    if workers <= 1 or len(nodes) < 256:
        return np.array([fn(x) for x in nodes])
    chunks = np.array_split(nodes, workers * 4)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        parts = list(pool.map(lambda block: [fn(x) for x in block], chunks))
    return np.array([v for part in parts for v in part])


def _integrate_degree2(chart: Chart, spec: GridSpec, sampler) -> tuple[float, float]:
    """Quadrature of the degree-2 coefficient; returns (real value, |imag|)."""
    if chart.dim != 2:
        raise ValueError("even-form integration requires a 2-dimensional chart")
    nodes, weights = quadrature_grid(chart, spec)
    vals = _map_nodes(lambda x: complex(sampler(x).degree2), nodes)
    total = complex(np.sum(vals * weights))
    return total.real, abs(total.imag)


def integrate_even_form(chart: Chart, spec: GridSpec, sampler: Callable[[Array], EvenFormValue]) -> float:
    """Integral over the chart of an even-form sampler's degree-2 part.

    The degree-0 part integrates to zero against the area element and only
    enters through products assembled before this call.
    """
    value, _residue = _integrate_degree2(chart, spec, sampler)
    return value


# ---------------------------------------------------------------------------
# Characteristic numbers
# ---------------------------------------------------------------------------

def first_chern_number(conn: BundleConnection, chart: Chart, spec: GridSpec) -> IndexReport:
    """Degree of the bundle: the integral of (i / 2 pi) tr F."""
    form = curvature_form(conn)
    raw, residue = _integrate_degree2(
        chart, spec, lambda x: EvenFormValue(0.0, first_chern_point(form, x))
    )
    return _report(raw, "degree", [conn.label, chart.label], residue)


@lru_cache(maxsize=32)
def _euler_form_grid(section: MetricSection, chart: Chart, spec: GridSpec) -> tuple[Array, Array, Array]:
    """Cached per-node K * sqrt(det g) for the chart's quadrature grid.

    Gauss-Bonnet, the Todd class, and every ch*Td index over one section all
    reuse this array; the cache key is object identity for section/chart and
    value identity for the grid."""
    nodes, weights = quadrature_grid(chart, spec)
    field = christoffel_field(section)
    vals = _map_nodes(
        lambda x: gaussian_curvature(section, x, field)
        * math.sqrt(max(float(np.linalg.det(section.matrix(x))), 0.0)),
        nodes,
    )
    return nodes, weights, vals.real.astype(float)


def gauss_bonnet(section: MetricSection, chart: Chart, spec: GridSpec) -> IndexReport:
    """(1 / 2 pi) integral of K dA; the rounded value estimates the Euler
    characteristic."""
    _nodes, weights, kda = _euler_form_grid(section, chart, spec)
    raw = float(np.sum(weights * kda)) / TWO_PI
    return _report(raw, "gauss-bonnet", [section.label, chart.label])


def index_ch_td(
    conn: BundleConnection, section: MetricSection, chart: Chart, spec: GridSpec
) -> IndexReport:
    """Index integral of [ch(E) Td(TM)] in total degree 2:
    rank * (K / 4 pi) sqrt(det g) + ch_1."""
    nodes, weights, kda = _euler_form_grid(section, chart, spec)
    form = curvature_form(conn)
    ch2 = _map_nodes(lambda x: complex(chern_character_point(form, x).degree2), nodes)
    integrand = conn.rank * kda / (2.0 * TWO_PI) + ch2
    total = complex(np.sum(weights * integrand))
    return _report(
        total.real, "ch-td", [conn.label, section.label, chart.label], abs(total.imag)
    )


def index_ch_ahat(conn: BundleConnection, chart: Chart, spec: GridSpec) -> IndexReport:
    """Index integral of [ch(E) Ahat] in total degree 2.

    The A-hat class contributes nothing in degree 2, so this reduces to the
    bundle degree; for the trivial bundle it is the integral of A-hat itself,
    identically zero on a surface.
    """
    form = curvature_form(conn)
    ahat = ahat_point()
    raw, residue = _integrate_degree2(
        chart, spec, lambda x: chern_character_point(form, x).product(ahat)
    )
    return _report(raw, "ch-ahat", [conn.label, chart.label], residue)


# ---------------------------------------------------------------------------
# Whitney sums and additivity checks
# ---------------------------------------------------------------------------

def whitney_sum(a: BundleConnection, b: BundleConnection) -> BundleConnection:
    """Direct sum with the block-diagonal connection."""
    if a.base_chart is not b.base_chart and a.base_chart.label != b.base_chart.label:
        raise ValueError(
            f"base-chart mismatch: {a.base_chart.label!r} vs {b.base_chart.label!r}"
        )
    ra, rb = a.rank, b.rank
    rank = ra + rb
    n = a.dim

    def coeffs(x):
        out = np.zeros((n, rank, rank), dtype=complex)
        out[:, :ra, :ra] = a.coefficients(x)
        out[:, ra:, ra:] = b.coefficients(x)
        return out

    curv = None
    if a.curvature is not None and b.curvature is not None:
        fa, fb = a.curvature, b.curvature

        def curv(x):
            out = np.zeros((n, n, rank, rank), dtype=complex)
            out[:, :, :ra, :ra] = fa(x)
            out[:, :, ra:, ra:] = fb(x)
            return out

    return BundleConnection(
        rank=rank,
        base_chart=a.base_chart,
        coefficients=coeffs,
        label=f"{a.label}(+){b.label}",
        curvature=curv,
    )


@dataclass(frozen=True)
class ChAdditivityReport:
    degree0_defect: float
    degree2_defect: float

    @property
    def max_defect(self) -> float:
        return max(self.degree0_defect, self.degree2_defect)


def ch_additivity_check(
    bundles: Sequence[BundleConnection], chart: Chart, spec: GridSpec
) -> ChAdditivityReport:
    """Pointwise |ch(sum) - sum of ch| over the quadrature grid, per degree."""
    total = reduce(whitney_sum, bundles)
    total_form = curvature_form(total)
    part_forms = [curvature_form(b) for b in bundles]
    nodes, _weights = quadrature_grid(chart, spec)
    d0 = d2 = 0.0
    for x in nodes:
        whole = chern_character_point(total_form, x)
        parts = [chern_character_point(f, x) for f in part_forms]
        sum0 = sum(p.degree0 for p in parts)
        sum2 = sum(p.degree2 for p in parts)
        d0 = max(d0, abs(whole.degree0 - sum0))
        d2 = max(d2, abs(whole.degree2 - sum2))
    return ChAdditivityReport(degree0_defect=d0, degree2_defect=d2)


@dataclass(frozen=True)
class IndexAdditivityReport:
    lhs: float
    rhs: float
    gap: float
    per_bundle: tuple[float, ...]


def index_additivity_check(
    bundles: Sequence[BundleConnection],
    section: MetricSection,
    chart: Chart,
    spec: GridSpec,
) -> IndexAdditivityReport:
    """Index of the Whitney sum against the sum of the indices, each side
    from its own integration pass."""
    total = reduce(whitney_sum, bundles)
    lhs = index_ch_td(total, section, chart, spec).raw
    raws = tuple(index_ch_td(b, section, chart, spec).raw for b in bundles)
    rhs = float(sum(raws))
    return IndexAdditivityReport(lhs=lhs, rhs=rhs, gap=abs(lhs - rhs), per_bundle=raws)


# ---------------------------------------------------------------------------
# Rank/degree classes and the reduced Grothendieck group
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BundleClass:
    """(rank, degree) pair classifying a bundle on a closed oriented surface;
    the unrounded degree integral is kept for error accounting."""

    rank: int
    degree: int
    raw_degree: float = 0.0

    def __post_init__(self) -> None:
        if self.rank < 0:
            raise ValueError("rank must be nonnegative")


def k0_class(conn: BundleConnection, chart: Chart, spec: GridSpec) -> BundleClass:
    """Classify a bundle by rank and integrated degree.

    Refuses grids whose degree integral is more than 0.01 away from an
    integer.
    """
    report = first_chern_number(conn, chart, spec)
    if report.gap >= 0.01:
        raise ValueError(
            f"degree integral {report.raw:.6f} is not integer-like (gap {report.gap:.3g}); "
            "grid too coarse"
        )
    return BundleClass(rank=conn.rank, degree=report.rounded, raw_degree=report.raw)


@dataclass(frozen=True)
class K0Element:
    """Formal difference of bundle classes; the reduced (rank, degree) pair is
    invariant under adding any class to both sides."""

    plus: tuple[BundleClass, ...] = ()
    minus: tuple[BundleClass, ...] = ()

    @property
    def reduced(self) -> tuple[int, int]:
        rank = sum(c.rank for c in self.plus) - sum(c.rank for c in self.minus)
        degree = sum(c.degree for c in self.plus) - sum(c.degree for c in self.minus)
        return rank, degree


def k0_element(*classes: BundleClass) -> K0Element:
    return K0Element(plus=tuple(classes))


def k0_combine(a: K0Element, b: K0Element, op: str = "add") -> K0Element:
    """Multiset union (add) or formal difference (subtract) of elements."""
    if op == "add":
        return K0Element(plus=a.plus + b.plus, minus=a.minus + b.minus)
    if op == "subtract":
        return K0Element(plus=a.plus + b.minus, minus=a.minus + b.plus)
    raise ValueError(f"unknown K0 operation {op!r}; use 'add' or 'subtract'")

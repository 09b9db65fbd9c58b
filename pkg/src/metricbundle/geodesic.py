"""Geodesic ODE integration, exponential map, and two-point distances.

The geodesic equation x'' = -Gamma(x) x' x' is integrated with classic
fourth-order Runge-Kutta; speed along a trajectory is conserved analytically
(metric compatibility), so the recorded drift is a direct measure of
integrator error.

Two-point distance is found by shooting: minimize the endpoint miss of
exp_p(w) over the initial velocity w (its direction and g-norm are the
direction/scale degrees of freedom), seeded from a multi-start scan of evenly
spread unit-speed rays, then refined with Nelder-Mead.  A discrete energy
descent over a fixed polyline serves as the fallback solver; whichever
converged route yields the shorter length wins.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np
from scipy import optimize

from .charts import Array, Chart
from .bundle import MetricSection, MultiMetricFamily
from .connection import ChristoffelField, christoffel_field


class DomainExitError(RuntimeError):
    """Trajectory left the chart box along a non-periodic axis.

    This signals chart insufficiency, not geodesic incompleteness."""


@dataclass
class GeodesicState:
    position: Array
    velocity: Array

    def __post_init__(self) -> None:
        self.position = np.asarray(self.position, dtype=float)
        self.velocity = np.asarray(self.velocity, dtype=float)


@dataclass
class GeodesicPath:
    """Sampled trajectory with per-sample g-speeds."""

    times: Array
    positions: Array
    velocities: Array
    speeds: Array
    metric_label: str = ""

    def state(self, k: int) -> GeodesicState:
        return GeodesicState(self.positions[k], self.velocities[k])

    @property
    def endpoint(self) -> Array:
        return self.positions[-1]

    @property
    def speed_drift(self) -> float:
        s0 = float(self.speeds[0])
        if s0 == 0.0:
            return float(np.max(np.abs(self.speeds)))
        return float(np.max(np.abs(self.speeds - s0)) / s0)


@dataclass
class DistanceResult:
    distance: float
    path: GeodesicPath | None
    converged: bool
    residual: float
    solver: str


@dataclass(frozen=True)
class SolverConfig:
    """Tunables for the distance solvers; defaults are desk-scale robust."""

    directions: int = 16
    dt: float = 1e-2
    nm_tol: float = 1e-10
    max_evals: int = 2000
    residual_tol: float = 1e-6
    t_cap: float = 10.0
    scan_factor: float = 1.35
    segments: int = 64
    refine_cap: int = 10
    improve_margin: float = 0.04
    mode: str = "auto"  # auto | shooting | energy-descent
    energy_maxiter: int = 500


DEFAULT_SOLVER = SolverConfig()


# ---------------------------------------------------------------------------
# Integration
# ---------------------------------------------------------------------------

def _rhs_from_field(field: ChristoffelField) -> Callable[[Array], Array]:
    evaluate = field.evaluation

    def rhs(state: Array) -> Array:
        n = state.size // 2
        v = state[n:]
        gamma = evaluate(state[:n])
        out = np.empty_like(state)
        out[:n] = v
        out[n:] = -np.einsum("kij,i,j->k", gamma, v, v)
        return out

    return rhs


def integrate_geodesic(
    field: ChristoffelField,
    start: GeodesicState,
    T: float,
    dt: float = 1e-3,
    record_every: int = 1,
) -> GeodesicPath:
    """RK4 integration of the geodesic equation for duration T.

    Periodic coordinates wrap each step; leaving the box along a non-periodic
    axis raises DomainExitError.  Samples are recorded every ``record_every``
    steps (plus the endpoint) and carry the g-speed of the velocity.
    """
    if dt <= 0 or T <= 0:
        raise ValueError("T and dt must be positive")
    chart = field.section.chart
    n = chart.dim
    steps = max(1, round(T / dt))
    h = T / steps
    rhs = _rhs_from_field(field)

    state = np.concatenate([np.asarray(start.position, float), np.asarray(start.velocity, float)])
    state[:n] = chart.wrap(state[:n])
    times = [0.0]
    samples = [state.copy()]
    for k in range(steps):
        k1 = rhs(state)
        k2 = rhs(state + (0.5 * h) * k1)
        k3 = rhs(state + (0.5 * h) * k2)
        k4 = rhs(state + h * k3)
        state = state + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        state[:n] = chart.wrap(state[:n])
        if not chart.contains(state[:n]):
            raise DomainExitError(
                f"geodesic left chart {chart.label!r} at t={(k + 1) * h:.6g}, "
                f"position {state[:n].tolist()}"
            )
        if (k + 1) % record_every == 0 or k == steps - 1:
            times.append((k + 1) * h)
            samples.append(state.copy())

    arr = np.array(samples)
    positions, velocities = arr[:, :n], arr[:, n:]
    section = field.section
    speeds = np.array(
        [math.sqrt(max(float(v @ section.matrix(x) @ v), 0.0)) for x, v in zip(positions, velocities)]
    )
    return GeodesicPath(
        times=np.array(times),
        positions=positions,
        velocities=velocities,
        speeds=speeds,
        metric_label=section.label,
    )


def exponential_map(field: ChristoffelField, x, v, dt: float = 1e-3) -> Array:
    """Endpoint of the unit-time geodesic from x with initial velocity v."""
    v = np.asarray(v, dtype=float)
    if not np.any(v):
        return np.asarray(x, dtype=float).copy()
    path = integrate_geodesic(field, GeodesicState(x, v), T=1.0, dt=dt, record_every=10**9)
    return path.endpoint


# ---------------------------------------------------------------------------
# Fast scalar integration for 2D sections with closed-form accelerations
# ---------------------------------------------------------------------------

def _scalar_accel(section: MetricSection):
    """Closed-form (x0, x1, v0, v1) -> (a0, a1) for the built-in 2D metrics;
    None when unavailable (the generic numpy route is used instead)."""
    return getattr(section, "geodesic_accel", None)


def _singular_guards(chart: Chart, dt: float) -> tuple[float, float, float, float]:
    """Open interval per axis outside which shooting trajectories are
    rejected.  Axes carrying a default quadrature margin have coordinate
    singularities at their ends (the sphere's poles); integrating across them
    silently corrupts the trajectory, so shots are kept a few steps away and
    the energy solver covers pole-hugging geodesics instead."""
    thresh = max(0.05, 5.0 * dt)
    bounds = [-math.inf, math.inf, -math.inf, math.inf]
    for axis, ((lo, hi), margin) in enumerate(zip(chart.domain, chart.default_margin)):
        if margin > 0.0 and axis < 2:
            bounds[2 * axis] = lo + thresh
            bounds[2 * axis + 1] = hi - thresh
    return tuple(bounds)  # type: ignore[return-value]


def _shoot_scalar(accel, x0, x1, v0, v1, total_time, n_steps, guards, scan_target=None):
    """Plain-float RK4; returns (x0, x1, v0, v1) or, when scanning, the
    (best_t, best_missq) against scan_target = (q0, q1, wrap0, wrap1).

    Returns None when the trajectory blows up (plain-float arithmetic raises
    on overflow and on metric singularities) or strays past the singular-axis
    guards.
    """
    try:
        return _shoot_scalar_loop(
            accel, float(x0), float(x1), float(v0), float(v1),
            float(total_time), int(n_steps), guards, scan_target,
        )
    except (OverflowError, ZeroDivisionError, ValueError):
        return None


def _shoot_scalar_loop(accel, x0, x1, v0, v1, total_time, n_steps, guards, scan_target):
    h = total_time / n_steps
    h2 = 0.5 * h
    h6 = h / 6.0
    g0lo, g0hi, g1lo, g1hi = guards
    best_t = 0.0
    best_missq = math.inf
    if scan_target is not None:
        q0, q1, w0, w1 = (float(v) for v in scan_target)
    for k in range(n_steps):
        if not (g0lo < x0 < g0hi and g1lo < x1 < g1hi):
            return None
        a0, a1 = accel(x0, x1, v0, v1)
        bx0 = x0 + h2 * v0
        bx1 = x1 + h2 * v1
        bv0 = v0 + h2 * a0
        bv1 = v1 + h2 * a1
        b0, b1 = accel(bx0, bx1, bv0, bv1)
        cx0 = x0 + h2 * bv0
        cx1 = x1 + h2 * bv1
        cv0 = v0 + h2 * b0
        cv1 = v1 + h2 * b1
        c0, c1 = accel(cx0, cx1, cv0, cv1)
        dx0 = x0 + h * cv0
        dx1 = x1 + h * cv1
        dv0 = v0 + h * c0
        dv1 = v1 + h * c1
        d0, d1 = accel(dx0, dx1, dv0, dv1)
        x0 += h6 * (v0 + 2.0 * (bv0 + cv0) + dv0)
        x1 += h6 * (v1 + 2.0 * (bv1 + cv1) + dv1)
        v0 += h6 * (a0 + 2.0 * (b0 + c0) + d0)
        v1 += h6 * (a1 + 2.0 * (b1 + c1) + d1)
        if scan_target is not None:
            e0 = x0 - q0
            e1 = x1 - q1
            if w0:
                e0 = (e0 + 0.5 * w0) % w0 - 0.5 * w0
            if w1:
                e1 = (e1 + 0.5 * w1) % w1 - 0.5 * w1
            missq = e0 * e0 + e1 * e1
            if missq < best_missq:
                best_missq = missq
                best_t = (k + 1) * h
    if scan_target is not None:
        return best_t, best_missq
    return x0, x1, v0, v1


def _shoot_numpy(rhs, p, w, n_steps):
    state = np.concatenate([p, w])
    h = 1.0 / n_steps
    for _ in range(n_steps):
        k1 = rhs(state)
        k2 = rhs(state + (0.5 * h) * k1)
        k3 = rhs(state + (0.5 * h) * k2)
        k4 = rhs(state + h * k3)
        state = state + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    n = p.size
    return state[:n]


# ---------------------------------------------------------------------------
# Distance solvers
# ---------------------------------------------------------------------------

def _polyline_length(section: MetricSection, nodes: Array) -> float:
    total = 0.0
    for a, b in zip(nodes[:-1], nodes[1:]):
        d = b - a
        g = section.matrix(0.5 * (a + b))
        total += math.sqrt(max(float(d @ g @ d), 0.0))
    return total


def _straight_seed(p: Array, delta: Array, count: int) -> Array:
    ts = np.linspace(0.0, 1.0, count)[:, None]
    return p[None, :] + ts * delta[None, :]


def _g_norm(g: Array, v: Array) -> float:
    return math.sqrt(max(float(v @ g @ v), 0.0))


def _periodic_widths(chart: Chart) -> tuple[float, ...]:
    return tuple(
        (hi - lo) if per else 0.0 for (lo, hi), per in zip(chart.domain, chart.periodic)
    )


def _shooting_distance(
    section, p, q, cfg: SolverConfig, upper_bound: float = math.inf
) -> DistanceResult:
    chart = section.chart
    n = chart.dim
    gp = section.matrix(p)
    delta = chart.wrapped_delta(q, p)
    est = _polyline_length(section, _straight_seed(p, delta, 33))
    accel = _scalar_accel(section) if n == 2 else None
    field = christoffel_field(section)
    rhs = None if accel is not None else _rhs_from_field(field)
    widths = _periodic_widths(chart)
    t_max = cfg.t_cap * est

    def endpoint_of(w: Array) -> Array | None:
        t = _g_norm(gp, w)
        if not math.isfinite(t) or t == 0.0 or t > t_max:
            return None
        steps = max(8, int(math.ceil(t / cfg.dt)))
        if accel is not None:
            out = _shoot_scalar(accel, p[0], p[1], w[0], w[1], 1.0, steps)
            if out is None:
                return None
            end = np.array(out[:2])
        else:
            end = _shoot_numpy(rhs, p, np.asarray(w, float), steps)
        if not np.all(np.isfinite(end)):
            return None
        return end

    def miss_of(w: Array) -> float:
        end = endpoint_of(w)
        if end is None:
            return 1e6 + float(np.sum(np.abs(w)))
        err = chart.wrapped_delta(end, q)
        return float(np.linalg.norm(err))

    # Multi-start scan: unit-speed rays, closest point of approach to q.
    candidates: list[tuple[float, Array]] = []
    seeds = [delta.astype(float)]
    if n == 2:
        angles = 2.0 * math.pi * np.arange(cfg.directions) / cfg.directions
        seeds += [np.array([math.cos(a), math.sin(a)]) for a in angles]
    else:
        rng = np.random.default_rng(0)
        seeds += list(rng.standard_normal((cfg.directions, n)))
    scan_T = cfg.scan_factor * est + 4.0 * cfg.dt
    scan_steps = max(16, int(math.ceil(scan_T / cfg.dt)))
    for seed in seeds:
        norm = _g_norm(gp, seed)
        if norm == 0.0:
            continue
        u = seed / norm
        if accel is not None:
            scan = _shoot_scalar(
                accel, p[0], p[1], u[0], u[1], scan_T, scan_steps,
                scan_target=(q[0], q[1], widths[0], widths[1]),
            )
            if scan is None or not math.isfinite(scan[1]) or scan[0] == 0.0:
                continue
            candidates.append((math.sqrt(scan[1]), scan[0] * u))
        else:
            # Generic route: coarse time scan along the ray.
            best = (math.inf, None)
            state = np.concatenate([p, u])
            h = scan_T / scan_steps
            for k in range(scan_steps):
                k1 = rhs(state)
                k2 = rhs(state + (0.5 * h) * k1)
                k3 = rhs(state + (0.5 * h) * k2)
                k4 = rhs(state + h * k3)
                state = state + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
                if not np.all(np.isfinite(state)):
                    break
                m = float(np.linalg.norm(chart.wrapped_delta(state[:n], q)))
                if m < best[0]:
                    best = (m, (k + 1) * h)
            if best[1] is not None:
                candidates.append((best[0], best[1] * u))

    def refine(w0: Array) -> tuple[float, float, Array]:
        options = {
            "fatol": cfg.nm_tol,
            "xatol": 1e-12,
            "maxfev": cfg.max_evals,
            "maxiter": cfg.max_evals,
        }
        res = optimize.minimize(miss_of, w0, method="Nelder-Mead", options=options)
        if cfg.residual_tol < res.fun < 1e-3 * max(est, 1.0):
            # A collapsed simplex can stall just above the floor; one restart
            # with a fresh simplex usually frees it.  Far-off stalls are
            # genuine local minima of the miss and not worth a restart.
            res2 = optimize.minimize(miss_of, res.x, method="Nelder-Mead", options=options)
            if res2.fun < res.fun:
                res = res2
        w = np.asarray(res.x, dtype=float)
        return _g_norm(gp, w), float(res.fun), w

    # Refine scan candidates in order of closest approach, skipping any whose
    # ray length cannot beat the best converged geodesic found so far.
    # Distinct converged refinements are distinct geodesics reaching q (the
    # two arcs of a great circle, different windings on a torus); the
    # minimizing one is the shortest, never the one with the marginally
    # smaller endpoint miss.
    # The straight-seed candidate goes first (its basin is almost always the
    # minimizing one); the rest follow by closeness of approach.  Once some
    # geodesic hit exists, a further candidate is only worth refining when its
    # ray length undercuts the best hit by a real margin: near-equal rays
    # either re-converge to the same geodesic or stall on a graze.
    head, tail = candidates[:1], candidates[1:]
    tail.sort(key=lambda c: c[0])
    candidates = head + tail
    refined: list[tuple[float, float, Array]] = []  # (t, miss, w)
    best_hit_t = upper_bound
    runs = 0
    for _miss0, w0 in candidates:
        if runs >= cfg.refine_cap:
            break
        t0 = _g_norm(gp, w0)
        if math.isfinite(best_hit_t) and t0 > best_hit_t - cfg.improve_margin * max(est, best_hit_t):
            continue
        runs += 1
        t, miss, w = refine(w0)
        refined.append((t, miss, w))
        if miss < cfg.residual_tol:
            best_hit_t = min(best_hit_t, t)

    if not refined:
        return DistanceResult(math.inf, None, False, math.inf, "shooting")

    hits = [r for r in refined if r[1] < cfg.residual_tol]
    if hits:
        distance, best_miss, best_w = min(hits, key=lambda r: r[0])
    else:
        distance, best_miss, best_w = min(refined, key=lambda r: r[1])
    path = _record_shot(section, field, p, best_w, cfg)
    return DistanceResult(distance, path, bool(hits), best_miss, "shooting")


def _record_shot(section, field, p, w, cfg: SolverConfig) -> GeodesicPath:
    gp = section.matrix(p)
    t = _g_norm(gp, w)
    steps = max(8, int(math.ceil(t / cfg.dt)))
    stride = max(1, steps // 64)
    try:
        return integrate_geodesic(
            field, GeodesicState(p, w), T=1.0, dt=1.0 / steps, record_every=stride
        )
    except DomainExitError:
        return GeodesicPath(
            times=np.array([0.0]),
            positions=p[None, :],
            velocities=np.asarray(w, float)[None, :],
            speeds=np.array([t]),
            metric_label=section.label,
        )


def _energy_descent_distance(section, p, q, cfg: SolverConfig) -> DistanceResult:
    """Minimize the discrete energy of a fixed-endpoint polyline.

    Energy (not length) is minimized because its minimizers are the
    constant-speed geodesics and it stays smooth at the straight seed; the
    descent itself is quasi-Newton (L-BFGS) with an analytic gradient,
    warm-started from a coarse polyline so the stiff fine-level problem
    begins near its minimizer.
    """
    chart = section.chart
    n = chart.dim
    delta = chart.wrapped_delta(q, p)
    hg = 1e-6
    gamma = section.christoffel

    def metric_derivative_quad(mid: Array, g: Array, d: Array) -> Array:
        """T[a] = d^T (d_a g) d at the midpoint, via the parallel-metric
        identity d_a g_ij = Gamma^l_ai g_lj + Gamma^l_aj g_il when the
        section carries its connection in closed form, finite differences
        otherwise."""
        if gamma is not None:
            return 2.0 * np.einsum("lai,i,lj,j->a", gamma(mid), d, g, d)
        out = np.empty(n)
        for a in range(n):
            step = np.zeros(n)
            step[a] = hg
            dg = (section.matrix(mid + step) - section.matrix(mid - step)) / (2 * hg)
            out[a] = float(d @ dg @ d)
        return out

    def make_objective(segments: int):
        def energy_and_grad(flat: Array):
            pts = np.vstack([p, flat.reshape(-1, n), p + delta])
            diffs = pts[1:] - pts[:-1]
            mids = 0.5 * (pts[1:] + pts[:-1])
            energy = 0.0
            seg_grad_g = np.zeros((segments, n))  # d_a g contracted with d x d
            gs = []
            for s in range(segments):
                g = section.matrix(mids[s])
                gs.append(g)
                d = diffs[s]
                energy += float(d @ g @ d)
                seg_grad_g[s] = metric_derivative_quad(mids[s], g, d)
            grad = np.zeros((segments - 1, n))
            for u in range(1, segments):
                grad[u - 1] = (
                    2.0 * (gs[u - 1] @ diffs[u - 1])
                    - 2.0 * (gs[u] @ diffs[u])
                    + 0.5 * (seg_grad_g[u - 1] + seg_grad_g[u])
                )
            return energy, grad.reshape(-1)

        return energy_and_grad

    # Coarse-to-fine: solve on segments/4, interpolate, then refine.  The
    # length of the minimizer is second-order insensitive to the gradient, so
    # a modest gradient floor already gives lengths far below the solver's
    # agreement tolerance.
    res = None
    nodes = _straight_seed(p, delta, max(8, cfg.segments // 4) + 1)
    for segments in (max(8, cfg.segments // 4), cfg.segments):
        ts_old = np.linspace(0.0, 1.0, len(nodes))
        ts_new = np.linspace(0.0, 1.0, segments + 1)
        nodes = np.stack([np.interp(ts_new, ts_old, nodes[:, a]) for a in range(n)], axis=1)
        res = optimize.minimize(
            make_objective(segments),
            nodes[1:-1].reshape(-1),
            jac=True,
            method="L-BFGS-B",
            options={"maxiter": cfg.energy_maxiter, "gtol": 1e-6, "ftol": 1e-15},
        )
        nodes = np.vstack([p, res.x.reshape(-1, n), p + delta])
    pts = nodes
    length = _polyline_length(section, pts)
    velocities = np.gradient(pts, axis=0) * cfg.segments
    speeds = np.array(
        [math.sqrt(max(float(v @ section.matrix(x) @ v), 0.0)) for x, v in zip(pts, velocities)]
    )
    path = GeodesicPath(
        times=np.linspace(0.0, 1.0, cfg.segments + 1),
        positions=np.array([chart.wrap(x) for x in pts]),
        velocities=velocities,
        speeds=speeds,
        metric_label=section.label,
    )
    grad_norm = float(np.max(np.abs(res.jac))) if res.jac is not None else math.inf
    converged = bool(res.success or grad_norm < 1e-4)
    return DistanceResult(length, path, converged, 0.0, "energy-descent")


def geodesic_distance(section: MetricSection, p, q, cfg: SolverConfig | None = None) -> DistanceResult:
    """Two-point distance under one metric section.

    Shooting is the primary solver; the energy descent runs when shooting
    fails to converge (or exclusively, when the config demands it), and the
    shorter converged answer wins.
    """
    cfg = cfg or DEFAULT_SOLVER
    chart = section.chart
    p = chart.wrap(chart.require_interior(p))
    q = chart.wrap(chart.require_interior(q))
    if not np.any(chart.wrapped_delta(q, p)):
        trivial = GeodesicPath(
            times=np.zeros(1),
            positions=p[None, :],
            velocities=np.zeros((1, chart.dim)),
            speeds=np.zeros(1),
            metric_label=section.label,
        )
        return DistanceResult(0.0, trivial, True, 0.0, "shooting")

    shoot = energy = None
    if cfg.mode == "energy-descent":
        energy = _energy_descent_distance(section, p, q, cfg)
    elif cfg.mode == "shooting":
        shoot = _shooting_distance(section, p, q, cfg)
    else:
        # Doubly-periodic charts admit many geodesics between two points and
        # shooting alone can converge to a non-minimal one; there the energy
        # descent runs first and its length prunes the shooting candidates.
        # Otherwise it only runs as the fallback.
        multimodal = sum(chart.periodic) >= 2
        if multimodal:
            energy = _energy_descent_distance(section, p, q, cfg)
            bound = energy.distance if energy.converged else math.inf
            shoot = _shooting_distance(section, p, q, cfg, upper_bound=bound)
        else:
            shoot = _shooting_distance(section, p, q, cfg)
            if not shoot.converged:
                energy = _energy_descent_distance(section, p, q, cfg)

    converged = [r for r in (shoot, energy) if r is not None and r.converged]
    if converged:
        return min(converged, key=lambda r: r.distance)
    # Nothing converged: the energy polyline still joins the endpoints, so
    # its length is at least a valid upper bound; a failed shot is not.
    return energy if energy is not None else shoot


def multi_distance(family: MultiMetricFamily, p, q, cfg: SolverConfig | None = None) -> list[DistanceResult]:
    """Per-member distances, ordered as the family index set."""
    return [geodesic_distance(member, p, q, cfg) for member in family.members]


# ---------------------------------------------------------------------------
# Extension / minimizing-geodesic probes
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ProbeReport:
    """Worst violations seen over random point pairs on a compact chart."""

    trials: int
    all_converged: bool
    worst_symmetry: float
    worst_triangle: float
    worst_oracle_relative: float | None

    def passes(self, tol: float = 1e-3) -> bool:
        ok = self.all_converged and self.worst_symmetry < tol and self.worst_triangle < tol
        if self.worst_oracle_relative is not None:
            ok = ok and self.worst_oracle_relative < tol
        return ok


def sphere_oracle_distance(radius: float, a, b) -> float:
    """Great-circle distance from the embedding inner product."""
    ta, pa = a
    tb, pb = b
    cosang = math.sin(ta) * math.sin(tb) * math.cos(pa - pb) + math.cos(ta) * math.cos(tb)
    return radius * math.acos(min(1.0, max(-1.0, cosang)))


def _sample_point(chart: Chart, rng, margin_frac: float = 0.12) -> Array:
    x = np.empty(chart.dim)
    for a, ((lo, hi), per) in enumerate(zip(chart.domain, chart.periodic)):
        w = hi - lo
        if per:
            x[a] = lo + w * rng.random()
        else:
            x[a] = lo + w * (margin_frac + (1.0 - 2.0 * margin_frac) * rng.random())
    return x


def hopf_rinow_probe(
    section: MetricSection, trials: int, seed: int, cfg: SolverConfig | None = None
) -> ProbeReport:
    """Check that random point pairs admit converged minimizing paths whose
    distances are symmetric, satisfy the triangle inequality, and (on spheres)
    match the great-circle oracle.

    Pairs near the sphere's cut locus are excluded (threshold pi - 0.15 in arc
    angle): shooting is ill-conditioned at conjugate points, and the
    minimizing-geodesic claim is exercised away from them.  Completeness
    itself is not decidable numerically; these are the testable conclusions.
    """
    cfg = cfg or DEFAULT_SOLVER
    chart = section.chart
    rng = np.random.default_rng(seed)
    radius = None
    if chart.label.startswith("sphere:"):
        radius = float(chart.label.split("r=")[1])

    def draw_pair():
        while True:
            a, b = _sample_point(chart, rng), _sample_point(chart, rng)
            if radius is not None:
                ang = sphere_oracle_distance(1.0, a, b)
                if not 0.05 < ang < math.pi - 0.15:
                    continue
            if np.linalg.norm(chart.wrapped_delta(a, b)) < 1e-3:
                continue
            return a, b

    all_converged = True
    worst_sym = worst_tri = 0.0
    worst_oracle = 0.0 if radius is not None else None
    for _ in range(int(trials)):
        p, q = draw_pair()
        r = _sample_point(chart, rng)
        d_pq = geodesic_distance(section, p, q, cfg)
        d_qp = geodesic_distance(section, q, p, cfg)
        d_pr = geodesic_distance(section, p, r, cfg)
        d_rq = geodesic_distance(section, r, q, cfg)
        parts = [d_pq, d_qp, d_pr, d_rq]
        all_converged = all_converged and all(x.converged for x in parts)
        worst_sym = max(worst_sym, abs(d_pq.distance - d_qp.distance))
        worst_tri = max(worst_tri, d_pq.distance - d_pr.distance - d_rq.distance)
        if radius is not None:
            oracle = sphere_oracle_distance(radius, p, q)
            worst_oracle = max(worst_oracle, abs(d_pq.distance - oracle) / oracle)
    return ProbeReport(
        trials=int(trials),
        all_converged=all_converged,
        worst_symmetry=worst_sym,
        worst_triangle=max(worst_tri, 0.0),
        worst_oracle_relative=worst_oracle,
    )

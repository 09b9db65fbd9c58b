"""mbtool: scenario runner and report emitter.

Each scenario packages one verifiable identity (Gauss-Bonnet, degree
quantization, the index scan, additivity, the multi-norm laws, geodesic
probes, connection certification) as a deterministic run: fixed seed in,
byte-identical JSON out.  Per-phase wall times go to stderr and are excluded
from the report file so that re-runs reproduce it exactly; pass ``--with-
timings`` to embed them at the cost of that guarantee.

Exit status: 0 all results pass, 1 configuration error, 2 numerical
failure or failed criteria, 3 I/O failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import __version__
from .charts import ChartError, GridSpec, chart_from_label
from .bundle import (
    MetricSection,
    MultiMetricFamily,
    builtin_section,
    flat_section,
    norm_axiom_check,
    norm_equivalence_constants,
    scaled_section,
    section_evaluate,
)
from .connection import (
    christoffel_field,
    christoffel_koszul,
    christoffel_standard,
    metric_compatibility_defect,
    monopole_connection,
    torsion_defect,
    trivial_connection,
)
from .geodesic import SolverConfig, geodesic_distance, hopf_rinow_probe
from .chern import (
    ch_additivity_check,
    first_chern_number,
    gauss_bonnet,
    index_additivity_check,
    index_ch_td,
)


class ConfigError(ValueError):
    """Unknown scenario, unresolvable descriptor, or malformed config."""


class NumericalError(RuntimeError):
    """Solver failed to converge or produced non-finite output."""


@dataclass
class ResultRow:
    name: str
    raw: float
    rounded: int
    tolerance: float
    passed: bool

    def as_dict(self) -> dict:
        return {
            "name": self.name,
            "raw": float(self.raw),
            "rounded": int(self.rounded),
            "tolerance": float(self.tolerance),
            "pass": bool(self.passed),
        }


@dataclass
class RunReport:
    scenario: str
    inputs: dict
    results: list[ResultRow]
    timings: dict
    version: str = __version__

    @property
    def overall_pass(self) -> bool:
        return all(r.passed for r in self.results)

    def as_dict(self, include_timings: bool = False) -> dict:
        return {
            "scenario": self.scenario,
            "inputs": self.inputs,
            "results": [r.as_dict() for r in self.results],
            "timings": dict(self.timings) if include_timings else {},
            "version": self.version,
        }


def _row(name: str, raw: float, tolerance: float, expected: float | None = None) -> ResultRow:
    """A report row; pass means |raw - expected| < tolerance (expected
    defaults to the nearest integer)."""
    raw = float(raw)
    if not math.isfinite(raw):
        raise NumericalError(f"result {name!r} is not finite")
    target = float(expected) if expected is not None else float(round(raw))
    return ResultRow(
        name=name,
        raw=raw,
        rounded=int(round(raw)),
        tolerance=float(tolerance),
        passed=abs(raw - target) < float(tolerance),
    )


# ---------------------------------------------------------------------------
# Descriptor resolution
# ---------------------------------------------------------------------------

def _grid_from(config: dict) -> GridSpec:
    grid = config.get("grid", {})
    try:
        return GridSpec(
            counts=tuple(grid.get("counts", (128, 256))),
            scheme=grid.get("scheme", "gauss-legendre"),
            margin=grid.get("margin"),
        )
    except (ChartError, TypeError) as exc:
        raise ConfigError(f"bad grid spec: {exc}") from exc


def _section_from(label: str):
    try:
        return builtin_section(label)
    except (ValueError, ChartError) as exc:
        raise ConfigError(str(exc)) from exc


def _bundle_from(descriptor: str, chart):
    """Resolve "monopole:n=<int>" or "trivial:rank=<int>" on the given chart."""
    kind, _, body = descriptor.partition(":")
    params: dict[str, str] = {}
    for part in body.split(","):
        if part:
            key, _, value = part.partition("=")
            params[key.strip()] = value
    try:
        if kind == "monopole":
            return monopole_connection(int(params["n"]), chart)
        if kind == "trivial":
            return trivial_connection(int(params.get("rank", 1)), chart)
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"bad bundle descriptor {descriptor!r}") from exc
    raise ConfigError(f"unknown bundle descriptor {descriptor!r}")


def _expected_degree(descriptor: str) -> int:
    if descriptor.startswith("monopole:"):
        return int(descriptor.split("n=")[1])
    return 0


def _solver_from(config: dict) -> SolverConfig:
    overrides = config.get("solver", {})
    try:
        return SolverConfig(**overrides)
    except TypeError as exc:
        raise ConfigError(f"bad solver config: {exc}") from exc


# ---------------------------------------------------------------------------
# Scenarios
# ---------------------------------------------------------------------------

def _run_gauss_bonnet(config: dict) -> list[ResultRow]:
    label = config["chart"]
    if label.startswith("sphere:"):
        expected = 2
    elif label.startswith("torus:"):
        expected = 0
    else:
        raise ConfigError(f"gauss-bonnet needs a closed surface, got {label!r}")
    section = _section_from(label)
    report = gauss_bonnet(section, section.chart, _grid_from(config))
    return [_row("euler_characteristic", report.raw, config["tolerance"], expected)]


def _run_chern_degree(config: dict) -> list[ResultRow]:
    section = _section_from(config["chart"])
    spec = _grid_from(config)
    rows = []
    for descriptor in config["bundles"]:
        conn = _bundle_from(descriptor, section.chart)
        report = first_chern_number(conn, section.chart, spec)
        rows.append(
            _row(f"degree[{descriptor}]", report.raw, config["tolerance"], _expected_degree(descriptor))
        )
    return rows


def _run_riemann_roch_scan(config: dict) -> list[ResultRow]:
    section = _section_from(config["chart"])
    spec = _grid_from(config)
    rows = []
    for n in range(int(config["n_min"]), int(config["n_max"]) + 1):
        conn = monopole_connection(n, section.chart)
        report = index_ch_td(conn, section, section.chart, spec)
        rows.append(_row(f"index[monopole:n={n}]", report.raw, config["tolerance"], n + 1))
    return rows


def _run_index_additivity(config: dict) -> list[ResultRow]:
    section = _section_from(config["chart"])
    spec = _grid_from(config)
    rows = []
    for descriptors in config["bundle_lists"]:
        bundles = [_bundle_from(d, section.chart) for d in descriptors]
        tag = "+".join(descriptors)
        add = index_additivity_check(bundles, section, section.chart, spec)
        rows.append(_row(f"index_gap[{tag}]", add.gap, config["tolerance"], 0.0))
        ch = ch_additivity_check(bundles, section.chart, spec)
        rows.append(_row(f"ch_defect[{tag}]", ch.max_defect, config["ch_tolerance"], 0.0))
    return rows


def _run_multinorm_report(config: dict) -> list[ResultRow]:
    base = _section_from(config["chart"])
    scales = [float(s) for s in config["scales"]]
    if not scales:
        raise ConfigError("multinorm-report needs at least one scale")
    members = [scaled_section(base, s) if s != 1.0 else base for s in scales]
    family = MultiMetricFamily(members=members)
    x = np.asarray(config["eval_point"], dtype=float)
    seed = int(config["seed"])
    rows = []

    for idx, member in enumerate(family.members):
        fiber = section_evaluate(member, x)
        axioms = norm_axiom_check(fiber, int(config["samples"]), seed + idx)
        rows.append(
            _row(f"norm_axioms[{family.index_labels[idx]}]", axioms.max_violation,
                 config["tolerance_axioms"], 0.0)
        )

    if len(scales) >= 2:
        ratio_expect = math.sqrt(scales[1] / scales[0])
        rng = np.random.default_rng(seed)
        v = rng.standard_normal(base.chart.dim)
        norms = [
            metric_norm_at(member, x, v) for member in family.members[:2]
        ]
        rows.append(_row("norm_ratio", norms[1] / norms[0], config["tolerance_ratio"], ratio_expect))
        cfg = _solver_from(config)
        p = np.asarray(config["p"], dtype=float)
        q = np.asarray(config["q"], dtype=float)
        d0 = geodesic_distance(family.members[0], p, q, cfg)
        d1 = geodesic_distance(family.members[1], p, q, cfg)
        if not (d0.converged and d1.converged):
            raise NumericalError("distance solver did not converge for the family")
        rows.append(_row("distance_ratio", d1.distance / d0.distance,
                         config["tolerance_ratio"], ratio_expect))

    # Two-sided equivalence constants for diag(1, 9) against the identity.
    flat = flat_section()
    anisotropic = MetricSection(
        chart=flat.chart,
        sampler=lambda _x: np.diag([1.0, 9.0]),
        label="diag(1,9)",
        christoffel=lambda _x: np.zeros((2, 2, 2)),
    )
    pair = MultiMetricFamily(members=[anisotropic, flat])
    c_lo, c_hi = norm_equivalence_constants(pair, np.zeros(2), 0, 1)
    rows.append(_row("equivalence_lower", c_lo, config["tolerance_equivalence"], 1.0))
    rows.append(_row("equivalence_upper", c_hi, config["tolerance_equivalence"], 3.0))
    return rows


def metric_norm_at(member, x, v) -> float:
    g = member.matrix(x)
    return math.sqrt(max(float(np.asarray(v) @ g @ np.asarray(v)), 0.0))


def _run_geodesic_probe(config: dict) -> list[ResultRow]:
    section = _section_from(config["chart"])
    report = hopf_rinow_probe(
        section, int(config["trials"]), int(config["seed"]), _solver_from(config)
    )
    tol = config["tolerance"]
    rows = [
        _row("converged_fraction", 1.0 if report.all_converged else 0.0, 0.5, 1.0),
        _row("symmetry_worst", report.worst_symmetry, tol, 0.0),
        _row("triangle_worst", report.worst_triangle, tol, 0.0),
    ]
    if report.worst_oracle_relative is not None:
        rows.append(_row("oracle_worst_relative", report.worst_oracle_relative, tol, 0.0))
    return rows


def _run_levi_civita_cert(config: dict) -> list[ResultRow]:
    rng = np.random.default_rng(int(config["seed"]))
    h = float(config["h"])
    rows = []
    for label in config["metrics"]:
        section = _section_from(label)
        chart = section.chart
        field = christoffel_field(section, h)
        agree = torsion = compat = 0.0
        for _ in range(int(config["points"])):
            x = np.array(
                [
                    lo + (hi - lo) * (0.1 + 0.8 * rng.random())
                    for lo, hi in chart.domain
                ]
            )
            std = christoffel_standard(section, x, h)
            kos = christoffel_koszul(section, x, h)
            agree = max(agree, float(np.max(np.abs(std - kos))))
            torsion = max(torsion, torsion_defect(std), torsion_defect(kos))
            compat = max(compat, metric_compatibility_defect(section, field, x))
        rows.append(_row(f"koszul_vs_standard[{label}]", agree, config["tol_agree"], 0.0))
        rows.append(_row(f"torsion[{label}]", torsion, config["tol_torsion"], 0.0))
        rows.append(_row(f"compatibility[{label}]", compat, config["tol_compat"], 0.0))
    return rows


@dataclass(frozen=True)
class Scenario:
    runner: Callable[[dict], list[ResultRow]]
    description: str
    descriptors: str
    defaults: dict


REGISTRY: dict[str, Scenario] = {
    "gauss-bonnet": Scenario(
        _run_gauss_bonnet,
        "Integrated Gaussian curvature over 2*pi vs the Euler characteristic",
        "chart (sphere/torus), grid",
        {"chart": "sphere:r=1", "grid": {"counts": [128, 256]}, "tolerance": 1e-3, "seed": 0},
    ),
    "chern-degree": Scenario(
        _run_chern_degree,
        "Integrated first-Chern form vs the integer bundle degree",
        "chart, grid, bundles",
        {
            "chart": "sphere:r=1",
            "grid": {"counts": [128, 256]},
            "bundles": ["monopole:n=3"],
            "tolerance": 1e-3,
            "seed": 0,
        },
    ),
    "riemann-roch-scan": Scenario(
        _run_riemann_roch_scan,
        "ch*Td index of twisted line bundles vs degree + 1 on the sphere",
        "chart, grid, n_min, n_max",
        {
            "chart": "sphere:r=1",
            "grid": {"counts": [128, 256]},
            "n_min": -3,
            "n_max": 3,
            "tolerance": 2e-3,
            "seed": 0,
        },
    ),
    "index-additivity": Scenario(
        _run_index_additivity,
        "Index and Chern-character additivity under direct sums",
        "chart, grid, bundle_lists",
        {
            "chart": "sphere:r=1",
            "grid": {"counts": [64, 128]},
            "bundle_lists": [
                ["monopole:n=1", "monopole:n=2"],
                ["monopole:n=2", "monopole:n=-2"],
                ["monopole:n=1", "monopole:n=2", "monopole:n=-3"],
            ],
            "tolerance": 1e-6,
            "ch_tolerance": 1e-9,
            "seed": 0,
        },
    ),
    "multinorm-report": Scenario(
        _run_multinorm_report,
        "Norm axioms, scale laws, and equivalence constants for a metric family",
        "chart, scales, eval_point, p, q, samples",
        {
            "chart": "flat",
            "scales": [1.0, 4.0],
            "eval_point": [0.3, 0.7],
            "p": [0.0, 0.0],
            "q": [1.0, 0.0],
            "samples": 1000,
            "seed": 7,
            "solver": {},
            "tolerance_axioms": 1e-9,
            "tolerance_ratio": 1e-6,
            "tolerance_equivalence": 1e-9,
        },
    ),
    "geodesic-probe": Scenario(
        _run_geodesic_probe,
        "Minimizing-geodesic checks: convergence, symmetry, triangle, oracle",
        "chart, trials, seed",
        {"chart": "sphere:r=1", "trials": 12, "seed": 3, "solver": {}, "tolerance": 1e-3},
    ),
    "levi-civita-cert": Scenario(
        _run_levi_civita_cert,
        "Koszul vs standard connection routes, torsion, metric compatibility",
        "metrics, points, seed",
        {
            "metrics": ["sphere:r=1", "torus:R=2,r=1", "conformal-flat"],
            "points": 100,
            "seed": 5,
            "h": 1e-5,
            "tol_agree": 1e-7,
            "tol_torsion": 1e-9,
            "tol_compat": 1e-6,
        },
    ),
}


def list_scenarios() -> list[dict]:
    """Stable machine-readable registry listing."""
    return [
        {
            "scenario": name,
            "description": sc.description,
            "descriptors": sc.descriptors,
        }
        for name, sc in sorted(REGISTRY.items())
    ]


def _deep_merge(base: dict, override: dict) -> dict:
    merged = dict(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = _deep_merge(merged[key], value)
        else:
            merged[key] = value
    return merged


def run_scenario(config: dict) -> RunReport:
    """Execute one registered scenario with defaults filled in."""
    name = config.get("scenario")
    if name not in REGISTRY:
        raise ConfigError(f"unknown scenario {name!r}; see `mbtool list`")
    scenario = REGISTRY[name]
    merged = _deep_merge(scenario.defaults, {k: v for k, v in config.items() if k != "scenario"})
    t0 = time.perf_counter()
    try:
        rows = scenario.runner(merged)
    except (ChartError, np.linalg.LinAlgError) as exc:
        raise NumericalError(str(exc)) from exc
    elapsed = time.perf_counter() - t0
    inputs = dict(merged)
    inputs["scenario"] = name
    return RunReport(
        scenario=name,
        inputs=inputs,
        results=rows,
        timings={"scenario_s": elapsed},
    )


def emit_report(report: RunReport, path: str, fmt: str = "json", include_timings: bool = False) -> str:
    """Write the report atomically (temp file + rename).

    JSON output with the default ``include_timings=False`` is byte-identical
    across re-runs of the same config and seed.
    """
    if fmt == "json":
        payload = json.dumps(report.as_dict(include_timings), sort_keys=True, indent=2) + "\n"
    elif fmt == "csv":
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(["name", "raw", "rounded", "tolerance", "pass"])
        for row in report.results:
            writer.writerow([row.name, repr(row.raw), row.rounded, repr(row.tolerance), row.passed])
        payload = buffer.getvalue()
    else:
        raise ConfigError(f"unknown report format {fmt!r}; use json or csv")

    directory = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".mbtool-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as handle:
            handle.write(payload)
        os.replace(tmp, path)
    except OSError:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------

def _parse_set(pairs: list[str]) -> dict:
    out: dict = {}
    for pair in pairs:
        key, sep, value = pair.partition("=")
        if not sep:
            raise ConfigError(f"--set expects key=value, got {pair!r}")
        try:
            parsed = json.loads(value)
        except json.JSONDecodeError:
            parsed = value
        node = out
        parts = key.split(".")
        for part in parts[:-1]:
            node = node.setdefault(part, {})
        node[parts[-1]] = parsed
    return out


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mbtool", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a scenario and write its report")
    run.add_argument("--config", help="JSON config file")
    run.add_argument("--scenario", help="scenario tag (overrides the config file)")
    run.add_argument("--set", dest="overrides", action="append", default=[],
                     metavar="KEY=VALUE", help="override a config entry (dotted keys)")
    run.add_argument("--output", help="report path (default mbtool-<scenario>.<fmt>)")
    run.add_argument("--format", choices=["json", "csv"], default="json")
    run.add_argument("--with-timings", action="store_true",
                     help="embed wall times in the report (breaks byte determinism)")

    lst = sub.add_parser("list", help="list registered scenarios")
    lst.add_argument("--json", action="store_true", help="machine-readable output")

    sub.add_parser("version", help="print the toolkit version")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "version":
            print(__version__)
            return 0
        if args.command == "list":
            entries = list_scenarios()
            if args.json:
                print(json.dumps(entries, sort_keys=True, indent=2))
            else:
                for entry in entries:
                    print(f"{entry['scenario']}: {entry['description']} "
                          f"[needs: {entry['descriptors']}]")
            return 0

        config: dict = {}
        if args.config:
            try:
                with open(args.config) as handle:
                    config = json.load(handle)
            except OSError:
                raise
            except json.JSONDecodeError as exc:
                raise ConfigError(f"config file is not valid JSON: {exc}") from exc
        if args.scenario:
            config["scenario"] = args.scenario
        config = _deep_merge(config, _parse_set(args.overrides))
        if "scenario" not in config:
            raise ConfigError("no scenario given; use --scenario or a config file")

        report = run_scenario(config)
        fmt = args.format
        out_path = args.output or config.get("output") or f"mbtool-{report.scenario}.{fmt}"
        emit_report(report, out_path, fmt, include_timings=args.with_timings)

        for row in report.results:
            status = "PASS" if row.passed else "FAIL"
            print(f"[{status}] {row.name}: raw={row.raw:.9g} rounded={row.rounded} "
                  f"tol={row.tolerance:g}")
        print(f"overall: {'PASS' if report.overall_pass else 'FAIL'} -> {out_path}")
        print(f"timings: {report.timings}", file=sys.stderr)
        return 0 if report.overall_pass else 2
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"i/o failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())

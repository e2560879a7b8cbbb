"""Run a scenario's checks and write machine-readable reports.

Randomness comes from one seed; each check draws from its own stream
``SeedSequence([seed, crc32(check_id)])`` so results do not depend on
which other checks are enabled or on execution order.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import platform
import traceback
import zlib
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np
import scipy

from .checks import CATALOG, CheckContext, NotApplicable, Outcome, observed_order
from .scenarios import SCHEMA_VERSION, Scenario, load_config

REPORT_VERSION = "1.0"


class CheckFailure(RuntimeError):
    """Raised in strict mode when a check fails or errors."""

    def __init__(self, check_id: str, status: str, detail: str = ""):
        super().__init__(f"check {check_id!r} {status}" + (f": {detail}" if detail else ""))
        self.check_id = check_id
        self.status = status


def _plain(obj):
    """Convert numpy scalars and arrays to JSON-native values; non-finite floats become strings."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else repr(x)
    return obj


def canonical_json(obj) -> str:
    return json.dumps(_plain(obj), sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def digest(obj) -> str:
    return hashlib.sha256(canonical_json(obj).encode()).hexdigest()


def check_rng(seed: int, check_id: str) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed), zlib.crc32(check_id.encode())]))


def enabled_checks(config: dict) -> list[str]:
    ids = config.get("checks")
    return list(CATALOG) if ids is None else [cid for cid in CATALOG if cid in ids]


def _run_one(scenario: Scenario, cid: str, shared: dict) -> dict:
    spec = CATALOG[cid]
    tol = scenario.config["tolerances"].get(cid, spec.tolerance)
    ctx = CheckContext(scenario, check_rng(scenario.seed, cid), tol, shared)
    record = {
        "id": cid,
        "anchor": spec.anchor,
        "operation": spec.operation,
        "inputs_digest": digest({"check": cid, "config": scenario.config, "tolerance": tol}),
    }
    try:
        out = spec.func(ctx)
    except NotApplicable as exc:
        out = Outcome({"reason": str(exc)}, status="skipped")
    except Exception as exc:  # fail-soft: record and continue
        out = Outcome({"error": f"{type(exc).__name__}: {exc}",
                       "trace": traceback.format_exc(limit=3).splitlines()[-1]}, status="error")
    record.update({"status": out.status, "passed": out.passed, "tolerance": out.tolerance, "values": out.values})
    if out.table is not None:
        record["table"] = out.table
    return _plain(record)


def run_scenario(source, seed: int | None = None, strict: bool = False, workers: int = 1,
                 overrides: dict | None = None, checks: list[str] | None = None) -> dict:
    """Run every enabled check of a scenario and return the report dict."""
    config = load_config(source, overrides)
    if seed is not None:
        config["seed"] = int(seed)
    if checks is not None:
        unknown = [c for c in checks if c not in CATALOG]
        if unknown:
            from .scenarios import ConfigError

            raise ConfigError(f"unknown check ids {unknown}", "/checks")
        config["checks"] = list(checks)
    scenario = Scenario(config)
    ids = enabled_checks(config)
    records: list[dict] = []
    if workers > 1 and not strict:
        # each worker gets its own cache, keyed by check id, so threads never share state
        with ThreadPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(lambda cid: _run_one(Scenario(config), cid, {}), ids))
    else:
        shared: dict = {}
        for cid in ids:
            rec = _run_one(scenario, cid, shared)
            records.append(rec)
            if strict and rec["status"] in ("fail", "error"):
                raise CheckFailure(cid, rec["status"], canonical_json(rec["values"]))
    counts = {s: sum(r["status"] == s for r in records) for s in ("pass", "fail", "error", "info", "skipped")}
    return {
        "report_version": REPORT_VERSION,
        "schema_version": SCHEMA_VERSION,
        "scenario": config["name"],
        "seed": config["seed"],
        "config_digest": digest(config),
        "environment": {
            "python": platform.python_version(),
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "platform": platform.platform(terse=True),
        },
        "checks": records,
        "summary": counts,
        "ok": counts["fail"] == 0 and counts["error"] == 0,
    }


def report_json(report: dict) -> str:
    return json.dumps(_plain(report), sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def _csv_text(rows: list[dict]) -> str:
    buf = io.StringIO()
    keys = list(rows[0].keys())
    writer = csv.DictWriter(buf, fieldnames=keys, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: repr(v) if isinstance(v, float) else v for k, v in row.items()})
    return buf.getvalue()


def write_report(report: dict, out_dir) -> Path:
    """Write report.json plus tables/<check>.csv for checks that carry a table."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / "report.json"
    path.write_text(report_json(report), encoding="utf-8")
    tables = [r for r in report["checks"] if r.get("table")]
    if tables:
        tdir = out / "tables"
        tdir.mkdir(exist_ok=True)
        for rec in tables:
            (tdir / f"{rec['id']}.csv").write_text(_csv_text(rec["table"]), encoding="utf-8")
    summary = [{"id": r["id"], "status": r["status"], "tolerance": r["tolerance"]} for r in report["checks"]]
    if summary:
        (out / "summary.csv").write_text(_csv_text(summary), encoding="utf-8")
    return path


# -- convergence studies ------------------------------------------------------------

AXES = ("grid_h", "surface_M", "time_dt", "mfs_sources")


def _study_errors(scenario: Scenario, axis: str, levels, rng) -> tuple[str, list[float]]:
    from . import evolving as ev
    from . import fields as fl
    from . import pressure as pr
    from . import surface as sf

    sc = scenario
    if axis == "time_dt":
        traj = sc.trajectory()
        f = fl.scalar_field("wave", k=[1.0, 0.5, 0.25][: sc.dim], omega=1.0)
        return "transport_theorem_bulk", [
            ev.transport_check_bulk(traj, f.f, f.dfdt, 0.5 * traj.T, float(dt))["residual"] for dt in levels
        ]
    if axis == "surface_M":
        a = rng.uniform(-1.5, 1.5, sc.dim)

        def f(x):
            return np.sin(x @ a + 0.3)

        errs = []
        for m in levels:
            s = sc.surface(int(m))
            errs.append(max(sf.check_surface_ibp(s, i, func=f) for i in range(sc.dim)))
        return "surface_integration_by_parts", errs
    if axis == "grid_h":
        traj, params, v = sc.trajectory(), sc.params(), sc.velocity()
        errs = []
        for h in levels:
            bundle, ext = pr.reconstruct_pressure(traj, params, v, 0.0, float(h))
            pr.adjust_jump(bundle, ext, traj, params, v)
            errs.append(pr.young_laplace_check(bundle, traj, params, v)["max_defect"])
        return "young_laplace", errs
    if axis == "mfs_sources":
        s = sc.surface()
        kappa = sf.mean_curvature(s)
        return "harmonic_extension_trace", [
            pr.harmonic_extension(s, kappa, n_sources=int(n)).trace_error for n in levels
        ]
    raise ValueError(f"unknown axis {axis!r}; choose from {AXES}")


def convergence_study(source, axis: str, levels, seed: int | None = None, overrides: dict | None = None) -> dict:
    """Error against resolution along one axis, with least-squares observed order.

    For ``surface_M`` and ``mfs_sources`` the level grows with resolution, so
    the reported order is the decay rate (positive when errors fall).
    """
    levels = [float(x) for x in levels]
    if len(levels) < 3:
        raise ValueError("a convergence study needs at least three levels")
    config = load_config(source, overrides)
    if seed is not None:
        config["seed"] = int(seed)
    scenario = Scenario(config)
    check_id, errors = _study_errors(scenario, axis, levels, check_rng(config["seed"], f"converge:{axis}"))
    errors = [float(e) for e in errors]
    slope = observed_order(levels, errors)
    order = -slope if axis in ("surface_M", "mfs_sources") else slope
    shrinking = levels[1] < levels[0]
    monotone = all(b < a for a, b in zip(errors, errors[1:])) if shrinking or axis in ("surface_M", "mfs_sources") \
        else all(b > a for a, b in zip(errors, errors[1:]))
    rows = [{"axis": axis, "level": lv, "check": check_id, "error": e} for lv, e in zip(levels, errors)]
    return {"axis": axis, "check": check_id, "levels": levels, "errors": errors, "observed_order": order,
            "monotone": monotone, "rows": rows}


def write_convergence(study: dict, out_dir) -> Path:
    out = Path(out_dir) / "tables"
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"convergence_{study['axis']}.csv"
    path.write_text(_csv_text(study["rows"]), encoding="utf-8")
    return path

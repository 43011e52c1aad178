"""Experiment orchestration and artifact writing.

Each run writes ``timeseries.csv``, ``summary.json`` and checkpoints into its
own directory; sweeps and comparisons add a ``sweep.json`` at the top level.
"""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional

from . import io
from .config import SimConfig, sweep_members
from .diagnostics import (
    RunOutputs,
    activation_measure,
    compare_runs,
    resolution_distance,
    verify_h1_growth,
    verify_h2_growth,
)
from .errors import BlowUpError, ConfigurationError
from .integrator import TimeState, run_full

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_BLOWUP = 3
EXIT_CHECK = 4

COINCIDENCE_TOL = 1e-10


@dataclass
class RunRecord:
    label: str
    config: SimConfig
    outputs: Optional[RunOutputs]
    failure: Optional[dict] = None


def _write_run(out_dir: Path, cfg: SimConfig, outputs: RunOutputs, failure=None):
    out_dir.mkdir(parents=True, exist_ok=True)
    io.write_timeseries(out_dir / "timeseries.csv", outputs.samples)
    io.write_json(
        out_dir / "summary.json", {"config": cfg.to_dict(), "summary": outputs.summary.to_dict()}
    )
    if failure is not None:
        io.write_json(out_dir / "failure.json", failure)


def execute_run(label, cfg: SimConfig, out_dir, keep_fields=False, initial: Optional[TimeState] = None):
    """Run one configuration, writing its artifacts; blow-ups are recorded, not raised."""
    out_dir = Path(out_dir)
    ckpt_dir = out_dir / "checkpoints"
    profile = cfg.taming_profile()
    N = profile.N if profile.enabled else None
    count = [0]

    def on_sample(sample, state):
        if cfg.checkpoint_stride and count[0] % cfg.checkpoint_stride == 0:
            ckpt_dir.mkdir(parents=True, exist_ok=True)
            io.write_checkpoint(
                ckpt_dir / f"ckpt_{count[0]:06d}.bin", state.u, state.t, cfg.nu, N, state.step_count
            )
        count[0] += 1

    result = run_full(cfg, keep_fields=keep_fields, on_sample=on_sample, initial=initial, raise_on_blowup=False)
    failure = None
    if result.error is not None:
        failure = {
            "error": "blow-up",
            "t": result.error.t,
            "sup_u": result.error.sup_u,
            "message": str(result.error),
        }
    _write_run(out_dir, cfg, result.outputs, failure)
    out_dir.mkdir(parents=True, exist_ok=True)
    io.write_checkpoint(
        out_dir / "final.ckpt", result.final.u, result.final.t, cfg.nu, N, result.final.step_count
    )
    return RunRecord(label, cfg, result.outputs, failure)


def _execute(args):
    return execute_run(*args)


def _run_all(jobs, workers):
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_execute, jobs))
    return [_execute(j) for j in jobs]


def _summary_entry(rec: RunRecord, extra):
    d = dict(extra)
    d["summary"] = rec.outputs.summary.to_dict() if rec.outputs else None
    d["failure"] = rec.failure
    return d


def _non_increasing(values, slack=0.0):
    return all(b <= a + slack for a, b in zip(values, values[1:]))


def run_experiment(config: SimConfig, initial: Optional[TimeState] = None) -> int:
    """Run the configured experiment; returns the process exit status."""
    root = Path(config.output_dir)
    root.mkdir(parents=True, exist_ok=True)
    kind = config.experiment_kind
    members = sweep_members(config)
    keep = kind != "single"
    jobs = [(label, cfg, root / label if keep else root, keep, initial) for label, cfg in members]
    records = _run_all(jobs, config.workers)
    blown = [r for r in records if r.failure]

    if kind == "single":
        rec = records[0]
        if rec.failure:
            log.error("run failed: %s", rec.failure["message"])
            return EXIT_BLOWUP
        s = rec.outputs.summary
        return EXIT_OK if (s.divergence_ok and s.l2_bound_ok) else EXIT_CHECK

    report = {"kind": kind, "config": config.to_dict()}
    checks = {}
    if kind == "sweep_taming":
        report.update(_taming_report(config, records, checks))
    elif kind == "sweep_resolution":
        report.update(_resolution_report(records, checks))
    elif kind == "compare":
        report.update(_compare_report(records, checks))
    report["checks"] = checks
    io.write_json(root / "sweep.json", report)
    if blown:
        return EXIT_BLOWUP
    return EXIT_OK if all(checks.values()) else EXIT_CHECK


def _taming_report(config, records, checks):
    tamed = [r for r in records if r.label != "reference"]
    ref = next((r for r in records if r.label == "reference"), None)
    ok_runs = [r for r in tamed if r.outputs is not None and not r.failure]
    runs = [_summary_entry(r, {"N": r.config.N}) for r in tamed]
    out = {"runs": runs}

    Ns = [r.config.N for r in ok_runs]
    measures = [activation_measure(r.outputs.samples, r.config.N) for r in ok_runs]
    out["activation"] = [{"N": n, "measure": m} for n, m in zip(Ns, measures)]
    slack = config.sample_interval
    checks["activation_non_increasing"] = _non_increasing(measures, slack)

    if len(ok_runs) >= 3:
        sweep = {r.config.N: r.outputs.summary for r in ok_runs}
        h1, h2 = verify_h1_growth(sweep), verify_h2_growth(sweep)
        out["h1_growth"] = h1.to_dict()
        out["h2_growth"] = h2.to_dict()
        checks["h1_growth"] = h1.ok
        checks["h2_growth"] = h2.ok

    out["pairwise"] = [
        {"N_a": a.config.N, "N_b": b.config.N, "distance": compare_runs(a.outputs, b.outputs)}
        for a, b in zip(ok_runs, ok_runs[1:])
    ]
    if ref is not None:
        out["reference"] = _summary_entry(ref, {"taming": False})
        if not ref.failure:
            dists = [compare_runs(r.outputs, ref.outputs) for r in ok_runs]
            out["distances_to_reference"] = [{"N": n, "distance": d} for n, d in zip(Ns, dists)]
            checks["distance_non_increasing"] = _non_increasing(dists)
    return out


def _resolution_report(records, checks):
    ok_runs = [r for r in records if not r.failure]
    out = {"runs": [_summary_entry(r, {"M": r.config.grid_size}) for r in records]}
    diffs = [
        {"M_a": a.config.grid_size, "M_b": b.config.grid_size, "distance": resolution_distance(a.outputs, b.outputs)}
        for a, b in zip(ok_runs, ok_runs[1:])
    ]
    out["successive_differences"] = diffs
    if len(diffs) >= 2:
        checks["successive_differences_decreasing"] = all(
            y["distance"] < x["distance"] for x, y in zip(diffs, diffs[1:])
        )
    return out


def _compare_report(records, checks):
    tamed, untamed = records
    out = {
        "tamed": _summary_entry(tamed, {}),
        "untamed": _summary_entry(untamed, {}),
    }
    if tamed.failure or untamed.failure:
        return out
    d = compare_runs(tamed.outputs, untamed.outputs)
    never_active = tamed.outputs.summary.activation_measure == 0.0
    out["distance"] = d
    out["never_activated"] = never_active
    if never_active:
        checks["coincidence"] = d <= COINCIDENCE_TOL
    return out


def resume_state(path) -> tuple[dict, TimeState]:
    header, u = io.read_checkpoint(path)
    return header, TimeState(float(header["time"]), u, int(header.get("step_count", 0)))


def config_for_checkpoint(config: SimConfig, header: dict) -> SimConfig:
    if config.grid_size != header["grid_size"]:
        log.info("taking grid size %s from checkpoint", header["grid_size"])
        config = replace(config, grid_size=int(header["grid_size"]))
    if config.t_end < header["time"]:
        raise ConfigurationError("t_end precedes the checkpoint time", key="time.t_end")
    return config

"""Experiment orchestration and the empirical checks on nibble runs."""

from __future__ import annotations

import csv
import io
import json
import math
import os
from dataclasses import asdict, dataclass, field

import numpy as np

from . import _rng
from .augment import PipelineParams, full_simple_pipeline
from .chromatic import ColoringParams, chromatic_index_coloring
from .generators import GeneratorSpec, generate
from .hypergraph import Hypergraph
from .nibble import (CSV_HEADER, NibbleConfig, NibbleState, TrajectoryLog, _fmt,
                     predict_trajectory, run_nibble, sample_stage, stage_probabilities)

KINDS = ("nibble", "pipeline", "color")


# ---------------------------------------------------------------------------
# checks

def d_omega_window(log: TrajectoryLog) -> tuple[float, float]:
    """Where D_omega must land when the threshold rule stops the run."""
    hi = log.D0 ** log.gamma
    return 0.25 * (1 - math.exp(-log.k)) ** (log.k - 1) * hi, hi


def check_concentration(log: TrajectoryLog, predictions=None, tolerance: float = 0.1) -> dict:
    """Stage-by-stage comparison of |U_i| with N * prod(1 - p*_j), the
    degree band D_i +- Delta_i against measured extremes, and the D_omega
    window."""
    N = log.N
    p = log.column("p_star") if log.records else np.zeros(0)
    expected = N * np.cumprod(1 - p)
    U = log.column("U") if log.records else np.zeros(0)
    dev = np.abs(U - expected) / np.maximum(expected, 1e-300)
    stages = [{"i": 0, "U": N, "expected": float(N), "deviation": 0.0, "ok": True}]
    for r, e, d in zip(log.records, expected, dev):
        stages.append({"i": r.i, "U": r.U, "expected": float(e), "deviation": float(d),
                       "ok": bool(d <= tolerance)})
    band = [bool(r.D_emp_min >= r.D - r.Delta and r.D_emp_max <= r.D + r.Delta)
            for r in log.records]
    lo, hi = d_omega_window(log)
    D_omega = log.records[-1].D if log.records else log.D0
    report = {
        "tolerance": tolerance,
        "stages": stages,
        "max_deviation": float(dev.max()) if dev.size else 0.0,
        "trajectory_ok": bool((dev <= tolerance).all()),
        "degree_band_fraction": float(np.mean(band)) if band else 1.0,
        "D_omega": float(D_omega),
        "window": [lo, hi],
        "window_applies": log.status == "threshold",
        "window_ok": bool(lo <= D_omega <= hi) if log.status == "threshold" else None,
    }
    if predictions is not None:
        pred = list(predictions)
        m = min(len(pred) - 1, log.omega)
        rel = [abs(log.records[j].D - pred[j + 1].D_closed) / pred[j + 1].D_closed
               for j in range(m)]
        report["prediction_D_max_deviation"] = float(max(rel)) if rel else 0.0
        report["predicted_omega"] = len(pred) - 1
    report["passed"] = bool(report["trajectory_ok"] and report["window_ok"] is not False)
    return report


def check_almost_independence(H: Hypergraph, state: NibbleState, tuple_spec, samples: int,
                              seed: int = 0, c: float | None = None, chunk: int = 2000) -> dict:
    """Joint probability of {x_j survive} and {y_j matched} in the next stage
    against the product of the exact marginals 1 - p* and p_M(y).

    ``tuple_spec`` is (xs, ys).  The joint comes from ``samples`` Monte Carlo
    draws of the stage; the report also carries the product of empirical
    marginals.  Passes when the relative deviation is at most c / D plus four
    standard errors (c defaults to 4 k^2).
    """
    xs = [int(v) for v in tuple_spec[0]]
    ys = [int(v) for v in tuple_spec[1]]
    verts = xs + ys
    if not verts:
        raise ValueError("empty tuple")
    if len(set(verts)) != len(verts):
        raise ValueError("tuple vertices must be distinct")
    if not all(state.alive[v] for v in verts):
        raise ValueError("tuple contains a dead vertex")
    k = state.k
    c = 4.0 * k * k if c is None else c
    _, _, pm, p_star = stage_probabilities(H, state)
    res = sample_stage(H, state, samples, seed, chunk=chunk, watch=verts)
    ev = np.ones(samples, bool)
    n1 = len(xs)
    if n1:
        ev &= res.tuple_survive[:, :n1].all(axis=1)
    if ys:
        ev &= res.tuple_matched[:, n1:].all(axis=1)
    joint = float(ev.mean())
    product = (1 - p_star) ** n1 * float(np.prod(pm[ys])) if ys else (1 - p_star) ** n1
    emp = float(np.prod(res.tuple_survive[:, :n1].mean(axis=0))) * \
        float(np.prod(res.tuple_matched[:, n1:].mean(axis=0)))
    se = math.sqrt(max(joint * (1 - joint), 1.0 / samples) / samples)
    dev = abs(joint - product) / product if product > 0 else float("inf")
    rel_se = se / product if product > 0 else float("inf")
    D = max(state.D, 1.0)
    return {"xs": xs, "ys": ys, "samples": samples, "joint": joint, "product": product,
            "product_empirical": emp, "deviation": dev, "standard_error": rel_se,
            "D": state.D, "c": c, "threshold": c / D + 4 * rel_se,
            "passed": bool(dev <= c / D + 4 * rel_se)}


def edge_tuples(H: Hypergraph, n1: int, n2: int, count: int, seed: int = 0,
                alive: np.ndarray | None = None):
    """``count`` tuples (xs, ys) drawn from single random edges, so that the
    vertices are as correlated as a stage allows."""
    k = H.uniformity
    if n1 + n2 > k:
        raise ValueError("tuple longer than an edge")
    rng = _rng.stream(seed, _rng.STAT_SAMPLE, 99)
    mat = H.edge_matrix()
    if alive is not None:
        mat = mat[alive[mat].all(axis=1)]
    rows = rng.choice(mat.shape[0], size=count, replace=mat.shape[0] < count)
    out = []
    for r in rows.tolist():
        vs = rng.permutation(mat[r])[:n1 + n2].tolist()
        out.append((vs[:n1], vs[n1:]))
    return out


# ---------------------------------------------------------------------------
# experiments

@dataclass
class ExperimentConfig:
    kind: str
    instance: GeneratorSpec
    seeds: list
    trials: int = 1
    gamma: float = 0.5
    pipeline: dict = field(default_factory=dict)
    coloring: dict = field(default_factory=dict)
    tolerances: dict = field(default_factory=lambda: {"concentration": 0.1})
    vary_instance: bool = True
    out: str | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown experiment kind {self.kind!r}")
        if not self.seeds:
            raise ValueError("seeds must be nonempty")
        if self.trials < 1:
            raise ValueError("trials must be positive")
        if any(v <= 0 for v in self.tolerances.values()):
            raise ValueError("tolerances must be positive")
        if isinstance(self.instance, dict):
            self.instance = GeneratorSpec.from_dict(self.instance)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["instance"] = self.instance.to_dict()
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        return cls(**d)


@dataclass
class ExperimentReport:
    config: dict
    records: list
    aggregate: dict

    COLUMNS = ("seed", "trial", "kind", "error", "N", "edges", "D0", "omega", "status",
               "D_omega", "matching_size", "waste", "leftover", "augmented_stars",
               "augmented_size", "leftover_M", "leftover_M_star", "leftover_fraction_M",
               "leftover_fraction_M_star", "valid", "monotone_ok", "exact_ok",
               "window_ok", "trajectory_ok", "max_deviation", "palette_size", "proper",
               "total", "g_lower_bound", "palette_bound_ok")

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(CSV_HEADER + "\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.COLUMNS)
        for rec in self.records:
            w.writerow(["" if rec.get(c) is None else _fmt(rec[c]) for c in self.COLUMNS])
        return buf.getvalue()

    def to_json(self) -> str:
        return json.dumps({"config": self.config, "records": self.records,
                           "aggregate": self.aggregate}, sort_keys=True, indent=1,
                          default=_json_default)

    def write(self, out_dir: str) -> None:
        os.makedirs(out_dir, exist_ok=True)
        with open(os.path.join(out_dir, "report.csv"), "w", newline="\n") as fh:
            fh.write(self.to_csv())
        with open(os.path.join(out_dir, "report.json"), "w", newline="\n") as fh:
            fh.write(self.to_json())


def _json_default(o):
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.floating):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(type(o).__name__)


def trial_seed(seed: int, trial: int) -> int:
    return int(_rng.stream(seed, _rng.PIPELINE, 100, trial).integers(2**31))


def _nibble_record(H, cfg, seed):
    res = run_nibble(H, NibbleConfig(gamma=cfg.gamma, seed=seed, stat_pairs=0))
    log = res.log
    pred = predict_trajectory(max(log.D0, 1.0), log.Delta0, log.k, log.gamma, H.num_vertices)
    conc = check_concentration(log, pred, cfg.tolerances.get("concentration", 0.1))
    N = H.num_vertices
    uncovered = int((~res.matching.covered).sum())
    return {"D0": log.D0, "omega": log.omega, "status": log.status, "D_omega": res.D_omega,
            "matching_size": len(res.matching), "waste": int(res.waste.sum()),
            "leftover": int(res.leftover.sum()), "leftover_M": uncovered,
            "leftover_fraction_M": uncovered / N if N else 0.0,
            "valid": True, "window_ok": conc["window_ok"],
            "trajectory_ok": conc["trajectory_ok"], "max_deviation": conc["max_deviation"]}


def _pipeline_record(H, cfg, seed):
    params = PipelineParams(**{"k": H.uniformity, **cfg.pipeline})
    res = full_simple_pipeline(H, params, seed)
    rep = res.report
    N = H.num_vertices
    k = H.uniformity
    lm, ls = rep["leftover_M"][0], rep["leftover_M_star"][0]
    return {"D0": rep["nibble"]["D0"], "omega": rep["nibble"]["omega"],
            "status": rep["nibble"]["status"], "D_omega": rep["nibble"]["D_omega"],
            "matching_size": rep["matching_size"], "waste": rep["nibble"]["waste"],
            "leftover": rep["nibble"]["leftover"], "augmented_stars": rep["augmented_stars"],
            "augmented_size": rep["augmented_size"], "leftover_M": lm, "leftover_M_star": ls,
            "leftover_fraction_M": lm / N, "leftover_fraction_M_star": ls / N,
            "valid": rep["valid"], "monotone_ok": ls <= lm,
            "exact_ok": rep["augmented_size"] - rep["matching_size"]
            == (k - 1) * rep["augmented_stars"]}


def _color_record(H, cfg, seed):
    params = ColoringParams(**cfg.coloring)
    col, rep = chromatic_index_coloring(H, params=params, seed=seed)
    return {"D0": rep["D"], "palette_size": rep["palette_size"], "proper": rep["proper"],
            "total": rep["total"], "g_lower_bound": rep.get("g_lower_bound"),
            "palette_bound_ok": rep["palette_bound_ok"], "valid": rep["proper"]}


_RUNNERS = {"nibble": _nibble_record, "pipeline": _pipeline_record, "color": _color_record}


def _median(vals):
    vals = [v for v in vals if v is not None]
    return float(np.median(vals)) if vals else None


def run_experiment(config: ExperimentConfig) -> ExperimentReport:
    """One record per (seed, trial); failures are recorded and skipped."""
    records = []
    for seed in config.seeds:
        spec = config.instance
        if config.vary_instance:
            spec = GeneratorSpec.from_dict({**spec.to_dict(), "seed": int(seed)})
        try:
            H = generate(spec)
            err = None
        except Exception as exc:  # noqa: BLE001
            H, err = None, f"generate: {exc}"
        for trial in range(config.trials):
            rec = {"seed": int(seed), "trial": trial, "kind": config.kind, "error": err}
            if H is not None:
                rec["N"] = H.num_vertices
                rec["edges"] = H.num_edges
                try:
                    rec.update(_RUNNERS[config.kind](H, config, trial_seed(seed, trial)))
                except Exception as exc:  # noqa: BLE001
                    rec["error"] = f"{getattr(exc, 'stage', config.kind)}: {exc}"
            records.append(rec)
    ok = [r for r in records if r["error"] is None]
    agg = {"records": len(records), "failures": len(records) - len(ok)}
    for key in ("leftover_fraction_M", "leftover_fraction_M_star", "palette_size",
                "max_deviation", "D_omega", "augmented_stars"):
        med = _median([r.get(key) for r in ok])
        if med is not None:
            agg["median_" + key] = med
    for key in ("valid", "monotone_ok", "exact_ok", "window_ok", "trajectory_ok", "proper",
                "total", "palette_bound_ok"):
        flags = [r[key] for r in ok if r.get(key) is not None]
        if flags:
            agg[key + "_count"] = int(sum(bool(f) for f in flags))
            agg[key + "_of"] = len(flags)
    report = ExperimentReport(config.to_dict(), records, agg)
    if config.out:
        report.write(config.out)
    return report

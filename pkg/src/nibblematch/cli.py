"""Command line: nibblematch <verb> [options].

Exit status 0 when every audit passes, 1 on audit failures, 2 on errors.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import warnings

import numpy as np

from . import __version__
from .hypergraph import Hypergraph, Matching, read_hypergraph, verify_matching, write_hypergraph

VERBS = ("generate", "nibble", "augment", "simplify", "color", "experiment", "verify")


class AuditFailure(Exception):
    pass


def _dump(obj) -> str:
    from .harness import _json_default
    return json.dumps(obj, sort_keys=True, indent=1, default=_json_default) + "\n"


def _emit(out_dir, name, text):
    if out_dir is None:
        sys.stdout.write(text)
        return
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, name), "w", newline="\n") as fh:
        fh.write(text)


def _options(args) -> dict:
    opts = {}
    if args.config:
        with open(args.config) as fh:
            opts.update(json.load(fh))
    for key, val in vars(args).items():
        if val is not None and key not in ("config", "verb", "out", "func"):
            opts[key] = val
    return opts


def _instance(opts) -> Hypergraph:
    from .generators import GeneratorSpec, generate
    if opts.get("input"):
        return read_hypergraph(opts["input"])
    if "instance" in opts:
        return generate(GeneratorSpec.from_dict(opts["instance"]))
    raise ValueError("give --input or an 'instance' entry in --config")


def _spec_from(opts):
    from .generators import GeneratorSpec
    if "instance" in opts:
        d = dict(opts["instance"])
    else:
        d = {"family": opts.get("family", "STS")}
        for key in ("n", "k", "D", "C", "tolerance"):
            if opts.get(key) is not None:
                d[key] = opts[key]
    if opts.get("seed") is not None:
        d["seed"] = opts["seed"]
    return GeneratorSpec.from_dict(d)


# ---------------------------------------------------------------------------
# verbs

def cmd_generate(opts, out, fmt):
    from .generators import generate
    spec = _spec_from(opts)
    H = generate(spec)
    deg = H.degrees()
    meta = {"spec": spec.to_dict(), "num_vertices": H.num_vertices, "num_edges": H.num_edges,
            "uniformity": H.uniformity, "degree_min": int(deg.min()) if deg.size else 0,
            "degree_max": int(deg.max()) if deg.size else 0, "codegree": H.max_codegree()}
    if out is None:
        sys.stdout.write(_dump(meta) if fmt == "json" else _format(H))
    else:
        os.makedirs(out, exist_ok=True)
        write_hypergraph(H, os.path.join(out, "instance.txt"))
        _emit(out, "instance.json", _dump(meta))


def _format(H):
    from .hypergraph import format_hypergraph
    return format_hypergraph(H)


def cmd_nibble(opts, out, fmt):
    from .harness import check_concentration
    from .nibble import NibbleConfig, predict_trajectory, run_nibble
    H = _instance(opts)
    cfg = NibbleConfig(gamma=float(opts.get("gamma", 0.5)), seed=int(opts.get("seed", 0)),
                       max_stages=int(opts.get("max_stages", 10_000)))
    res = run_nibble(H, cfg)
    log = res.log
    pred = predict_trajectory(max(log.D0, 1.0), log.Delta0, log.k, log.gamma, H.num_vertices)
    conc = check_concentration(log, pred, float(opts.get("tolerance", 0.1)))
    valid = verify_matching(H, res.matching)["valid"]
    summary = {"log": log.to_dict(), "concentration": conc, "valid": valid,
               "matching": res.matching.edge_ids.tolist(),
               "waste": int(res.waste.sum()), "leftover": int(res.leftover.sum())}
    if fmt == "csv":
        _emit(out, "trajectory.csv", log.to_csv())
    else:
        _emit(out, "nibble.json", _dump(summary))
    if not valid or conc["window_ok"] is False:
        raise AuditFailure("nibble audit failed")


def cmd_augment(opts, out, fmt):
    from .augment import DEFAULT_CAP, enumerate_aug_stars, verify_M3
    from .nibble import NibbleConfig, run_nibble
    H = _instance(opts)
    res = run_nibble(H, NibbleConfig(gamma=float(opts.get("gamma", 0.5)),
                                     seed=int(opts.get("seed", 0)), stat_pairs=0))
    ha = enumerate_aug_stars(H, res.matching, res.waste, int(opts.get("cap", DEFAULT_CAP)))
    report = {"nibble_status": res.log.status, "D_omega": res.D_omega,
              "stars": ha.hypergraph.num_edges, "truncated": ha.is_truncated}
    if ha.n_left and ha.n_right:
        report["m3"] = verify_M3(ha, res.D_omega, H, res, band=float(opts.get("band", 2.0)),
                                 sample=opts.get("sample"), seed=int(opts.get("seed", 0)))
    if out is not None:
        export_star_hypergraph(ha, out)
    if fmt == "csv":
        _emit(out, "backmap.csv", _backmap_csv(ha))
    else:
        _emit(out, "augment.json", _dump(report))
    if "m3" in report and not report["m3"]["partite_ok"]:
        raise AuditFailure("star hypergraph is not (1, k(k-1))-partite")


def _backmap_csv(ha) -> str:
    from .nibble import CSV_HEADER
    lines = [CSV_HEADER, "edge_id,copy,matched_edge," +
             ",".join(f"star_{j}" for j in range(ha.k))]
    for e in range(ha.hypergraph.num_edges):
        s = ha.edge_star[e]
        star = ",".join(str(int(x)) for x in ha.stars[s])
        lines.append(f"{e},{int(ha.edge_copy[e])},{int(ha.l_edges[ha.star_owner[s]])},{star}")
    return "\n".join(lines) + "\n"


def export_star_hypergraph(ha, out_dir) -> None:
    """H_A in the text format plus the edge -> star sidecar."""
    os.makedirs(out_dir, exist_ok=True)
    write_hypergraph(ha.hypergraph, os.path.join(out_dir, "star_hypergraph.txt"))
    with open(os.path.join(out_dir, "star_backmap.csv"), "w", newline="\n") as fh:
        fh.write(_backmap_csv(ha))


def cmd_simplify(opts, out, fmt):
    from .simplify import simple_subhypergraph
    H = _instance(opts)
    C = opts.get("C") or max(1, H.max_codegree())
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        res = simple_subhypergraph(H, C, float(opts.get("delta", 0.3)), int(opts.get("seed", 0)),
                                   s_policy=opts.get("s_policy", "window"))
    if out is not None:
        os.makedirs(out, exist_ok=True)
        write_hypergraph(res.hypergraph, os.path.join(out, "simple.txt"))
    if fmt == "csv":
        from .nibble import CSV_HEADER
        _emit(out, "kept.csv", CSV_HEADER + "\nedge_id\n" +
              "".join(f"{int(e)}\n" for e in res.kept))
    else:
        _emit(out, "simplify.json", _dump({"report": res.report, "s": res.s,
                                           "kept": res.kept.tolist()}))
    if not (res.report["is_simple"] and res.report["duplicates"] == 0):
        raise AuditFailure("output is not simple")


def cmd_color(opts, out, fmt):
    from .chromatic import ColoringParams, chromatic_index_coloring
    H = _instance(opts)
    keys = ColoringParams.__dataclass_fields__
    params = ColoringParams(**{k: v for k, v in opts.items() if k in keys})
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        col, rep = chromatic_index_coloring(H, D=opts.get("D"), C=opts.get("C"), params=params,
                                            seed=int(opts.get("seed", 0)))
    if fmt == "csv":
        _emit(out, "coloring.csv", col.to_csv())
    else:
        _emit(out, "color.json", _dump(rep))
    if not (rep["proper"] and rep["total"]):
        raise AuditFailure("colouring is not proper and total")


def cmd_experiment(opts, out, fmt):
    from .harness import ExperimentConfig, run_experiment
    keys = ExperimentConfig.__dataclass_fields__
    cfg = ExperimentConfig.from_dict({k: v for k, v in opts.items() if k in keys and k != "out"})
    if opts.get("seed") is not None and "seeds" not in opts:
        cfg.seeds = [int(opts["seed"])]
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        rep = run_experiment(cfg)
    if fmt == "csv":
        _emit(out, "report.csv", rep.to_csv())
    else:
        _emit(out, "report.json", rep.to_json() + "\n")
    agg = rep.aggregate
    if agg["failures"] or any(agg.get(f + "_count") != agg.get(f + "_of")
                              for f in ("valid", "monotone_ok", "exact_ok", "proper", "total")):
        raise AuditFailure("experiment audits failed")


def cmd_verify(opts, out, fmt):
    from .chromatic import EdgeColoring, audit_coloring
    H = _instance(opts)
    report = {"num_vertices": H.num_vertices, "num_edges": H.num_edges}
    try:
        H.check()
        report["hypergraph_ok"] = True
    except ValueError as exc:
        report["hypergraph_ok"] = False
        report["hypergraph_error"] = str(exc)
    ok = report["hypergraph_ok"]
    if opts.get("matching"):
        ids = _read_ids(opts["matching"])
        if ids.size and (ids.min() < 0 or ids.max() >= H.num_edges):
            report["matching"] = {"valid": False, "error": "edge id out of range"}
        else:
            report["matching"] = verify_matching(H, Matching.of(H, ids))
        ok &= report["matching"]["valid"]
    if opts.get("coloring"):
        with open(opts["coloring"]) as fh:
            col = EdgeColoring.from_csv(fh.read())
        report["coloring"] = audit_coloring(H, col)
        ok &= report["coloring"]["proper"] and report["coloring"]["total"]
    report["passed"] = bool(ok)
    if fmt == "csv":
        from .nibble import CSV_HEADER
        _emit(out, "verify.csv", CSV_HEADER + "\ncheck,value\n" + "".join(
            f"{k},{v}\n" for k, v in sorted(report.items()) if not isinstance(v, dict)))
    else:
        _emit(out, "verify.json", _dump(report))
    if not ok:
        raise AuditFailure("verification failed")


def _read_ids(path) -> np.ndarray:
    """Edge ids, one per line or comma separated; '#' lines and a
    non-numeric header are skipped."""
    vals = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            for tok in line.replace(",", " ").split():
                if tok.lstrip("-").isdigit():
                    vals.append(int(tok))
    return np.array(vals, dtype=np.int64)


COMMANDS = {"generate": cmd_generate, "nibble": cmd_nibble, "augment": cmd_augment,
            "simplify": cmd_simplify, "color": cmd_color, "experiment": cmd_experiment,
            "verify": cmd_verify}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="nibblematch", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="verb", required=True)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int)
    common.add_argument("--config", help="JSON file with options for this verb")
    common.add_argument("--out", help="output directory (default: stdout)")
    common.add_argument("--format", choices=("csv", "json"), default="json")
    common.add_argument("--input", help="hypergraph in the text format")

    g = sub.add_parser("generate", parents=[common])
    g.add_argument("--family", choices=("STS", "RandomRegularSimple", "NearRegularBlock"))
    g.add_argument("--n", type=int)
    g.add_argument("--k", type=int)
    g.add_argument("--D", type=int)
    g.add_argument("--tolerance", type=int)

    n = sub.add_parser("nibble", parents=[common])
    n.add_argument("--gamma", type=float)
    n.add_argument("--max-stages", dest="max_stages", type=int)
    n.add_argument("--tolerance", type=float)

    a = sub.add_parser("augment", parents=[common])
    a.add_argument("--gamma", type=float)
    a.add_argument("--cap", type=int)
    a.add_argument("--band", type=float)
    a.add_argument("--sample", type=int)

    s = sub.add_parser("simplify", parents=[common])
    s.add_argument("--C", type=int)
    s.add_argument("--delta", type=float)
    s.add_argument("--s-policy", dest="s_policy", choices=("window", "min_feasible"))

    c = sub.add_parser("color", parents=[common])
    c.add_argument("--D", type=int)
    c.add_argument("--C", type=int)
    c.add_argument("--eta", type=float)
    c.add_argument("--inner", choices=("nibble", "greedy"))
    c.add_argument("--embed", choices=("auto", "always", "never"))

    sub.add_parser("experiment", parents=[common])

    v = sub.add_parser("verify", parents=[common])
    v.add_argument("--matching", help="file of matching edge ids")
    v.add_argument("--coloring", help="colouring CSV (edge_id,color)")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    fmt = args.format
    out = args.out
    try:
        opts = _options(args)
        opts.pop("format", None)
        COMMANDS[args.verb](opts, out, fmt)
    except AuditFailure as exc:
        print(f"audit failed: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())

"""Command-line front end.

    gmffe prep          --input raw.txt --output clean.txt
    gmffe distance      --input g.txt --eta 0.1 --horizon 10 --targets 1024 --output phi.bin
    gmffe embed         --input g.txt --eta 0.1 --d 128 --output emb.txt
    gmffe eval-cluster  --input g.txt --labels y.txt --output report.json
    gmffe eval-classify --input g.txt --labels y.txt --train-fraction 0.5
    gmffe eval-linkpred --input g.txt --operator hadamard
    gmffe recon-demo    --n 25 --p 0.1 --d 8 --seed 1 --output demo/
    gmffe sweep         --input g.txt --labels y.txt --param eta --values 1e-4,1e-3 --task cluster

Options may also come from ``--config FILE`` (``key=value`` lines); flags
override the file, which overrides the defaults.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
import time
from pathlib import Path

import numpy as np

from . import io as fio
from .errors import NumericalError, ValidationError
from .evaluation import (OPERATORS, classification_protocol, clustering_protocol,
                         link_prediction_protocol, load_labels)
from .evaluation.protocols import canonical_operator
from .factorization import FitOptions, gmf_fit, reconstruct, truncated_svd
from .graph import erdos_renyi, load_edge_list, preprocess
from .pipeline import EmbedConfig, compute_distance, compute_similarity, embed_graph, embed_similarity
from .similarity import PosNegWeights

log = logging.getLogger("gmffe")

COMMANDS = ("prep", "distance", "embed", "eval-cluster", "eval-classify", "eval-linkpred",
            "recon-demo", "sweep")
SWEEPABLE = ("eta", "percentile", "max_target", "d", "horizon", "targets")


def _bool(text):
    if isinstance(text, bool):
        return text
    low = str(text).strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _opt_int(text):
    return None if str(text).lower() in ("none", "all", "") else int(text)


# name: (type, default, help)
OPTIONS = {
    "input": (str, None, "edge list (src dst [weight])"),
    "labels": (str, None, "label file (node_id label[,label...])"),
    "output": (str, None, "output path (directory for recon-demo)"),
    "directed": (_bool, False, "treat input lines as arcs"),
    "merge": (str, "max", "rule for merging reciprocal arcs: max or sum"),
    "eta": (float, 0.1, "free-energy inverse temperature"),
    "percentile": (float, 70.0, "shift b as a percentile of the distances"),
    "max_target": (float, 6.0, "largest similarity after scaling"),
    "d": (int, None, "embedding dimension (default 8 for clustering, else 128)"),
    "horizon": (_opt_int, None, "path-length bound L (default: iterate to convergence)"),
    "targets": (_opt_int, None, "number of sampled target nodes (default: all)"),
    "asymmetric": (_bool, False, "keep the directed dissimilarity instead of symmetrizing"),
    "drop_threshold": (float, 7.0, "term-dropping cutoff of the bounded recurrence"),
    "similarity": (str, "fe", "similarity source: fe, deepwalk or external"),
    "similarity_file": (str, None, "matrix file for --similarity external"),
    "save_similarity": (str, None, "also write the similarity matrix here"),
    "window": (int, 10, "DeepWalk context window T"),
    "negatives": (int, 1, "DeepWalk negative samples b"),
    "operator": (str, "all", "pair operator(s), comma separated: average,hadamard,l1,l2"),
    "removal_fraction": (float, 0.3, "fraction of edges hidden for link prediction"),
    "train_fraction": (float, 0.5, "fraction of labeled nodes used for training"),
    "splits": (int, 10, "random train/test splits for classification"),
    "repetitions": (int, 10, "edge-split realizations for link prediction"),
    "embed_reps": (int, 5, "embedding repetitions for clustering"),
    "kmeans_runs": (int, 10, "k-means initializations per embedding"),
    "l2": (float, 1.0, "logistic regression L2 strength"),
    "iterations": (int, 300, "Adam iterations"),
    "learning_rate": (float, 0.1, "Adam learning rate"),
    "seed": (int, 0, "master random seed"),
    "threads": (int, 1, "worker threads for the distance computation"),
    "n": (int, 25, "recon-demo: number of nodes"),
    "p": (float, 0.1, "recon-demo: edge probability"),
    "magnitude": (float, 5.0, "recon-demo: |S| on edges and non-edges"),
    "param": (str, None, "sweep: parameter name"),
    "values": (str, None, "sweep: comma-separated values"),
    "task": (str, "linkpred", "sweep: cluster, classify, linkpred (comma separated)"),
}

_EMBED_KEYS = ("eta", "percentile", "max_target", "d", "horizon", "targets", "asymmetric",
               "drop_threshold", "similarity", "window", "negatives", "iterations",
               "learning_rate", "seed", "threads")


class CLIError(Exception):
    pass


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    common.add_argument("--config", help="key=value file merged under the flags")
    for name, (typ, default, text) in OPTIONS.items():
        flag = "--" + name.replace("_", "-")
        common.add_argument(flag, dest=name, type=typ, help=f"{text} [default: {default}]")
    parser = argparse.ArgumentParser(prog="gmffe", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for cmd in COMMANDS:
        sub.add_parser(cmd, parents=[common], argument_default=argparse.SUPPRESS)
    return parser


def read_config_file(path) -> dict:
    out = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise CLIError(f"{path}:{lineno}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.lstrip("-").replace("-", "_")
        if key not in OPTIONS:
            raise CLIError(f"{path}:{lineno}: unknown option {key!r}")
        try:
            out[key] = OPTIONS[key][0](value)
        except ValueError as exc:
            raise CLIError(f"{path}:{lineno}: {exc}") from None
    return out


def resolve(command: str, flags: dict) -> dict:
    """Defaults, then config file, then flags."""
    cfg = {name: spec[1] for name, spec in OPTIONS.items()}
    if flags.get("config"):
        cfg.update(read_config_file(flags["config"]))
    cfg.update({k: v for k, v in flags.items() if k in OPTIONS})
    if cfg["d"] is None:
        cfg["d"] = 8 if command == "eval-cluster" else 128
    if cfg["merge"] not in ("max", "sum"):
        raise CLIError(f"--merge must be max or sum, got {cfg['merge']!r}")
    if cfg["similarity"] not in ("fe", "deepwalk", "external"):
        raise CLIError(f"--similarity must be fe, deepwalk or external, got {cfg['similarity']!r}")
    cfg["command"] = command
    return cfg


def embed_config(cfg: dict) -> EmbedConfig:
    return EmbedConfig(**{k: cfg[k] for k in _EMBED_KEYS})


def _need(cfg, *names):
    for name in names:
        if cfg.get(name) is None:
            raise CLIError(f"{cfg['command']} requires --{name.replace('_', '-')}")


def _graph(cfg):
    _need(cfg, "input")
    return preprocess(load_edge_list(cfg["input"], directed=cfg["directed"]), merge=cfg["merge"])


def _external(cfg):
    if cfg["similarity"] != "external":
        return None
    _need(cfg, "similarity_file")
    return fio.read_matrix(cfg["similarity_file"])


def _operators(cfg):
    if cfg["operator"] in ("all", None):
        return list(OPERATORS)
    return [canonical_operator(op.strip()) for op in cfg["operator"].split(",") if op.strip()]


def _write_report(cfg, payload: dict):
    text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    if cfg.get("output"):
        Path(cfg["output"]).write_text(text)
    else:
        sys.stdout.write(text)


def _report_payload(report, cfg):
    data = json.loads(report.to_json())
    data["config"] = cfg
    return data


def cmd_prep(cfg):
    _need(cfg, "output")
    g = _graph(cfg)
    fio.write_edge_list(cfg["output"], g)
    fio.write_sidecar(cfg["output"], {"config": cfg, "nodes": g.node_count, "edges": g.num_edges})


def cmd_distance(cfg):
    _need(cfg, "output")
    g = _graph(cfg)
    delta = compute_distance(g, embed_config(cfg))
    fio.write_matrix(cfg["output"], delta.values)
    fio.write_sidecar(cfg["output"], {
        "config": cfg, "kind": delta.kind, "symmetric": delta.symmetric,
        "targets": delta.targets, "iterations": delta.iterations,
        "node_ids": list(g.node_ids),
    })


def cmd_embed(cfg):
    _need(cfg, "output")
    g = _graph(cfg)
    ecfg = embed_config(cfg)
    s = compute_similarity(g, ecfg, _external(cfg))
    if cfg.get("save_similarity"):
        fio.write_matrix(cfg["save_similarity"], s.values)
        fio.write_sidecar(cfg["save_similarity"], {
            "provenance": s.provenance, "shift": s.shift, "scale": s.scale,
            "params": s.params, "targets": s.targets, "config": cfg,
        })
    emb = embed_similarity(s, ecfg)
    fio.write_embedding(cfg["output"], emb.U)
    fio.write_loss_trace(cfg["output"] + ".loss.csv", emb.loss_trace)
    fio.write_sidecar(cfg["output"], {
        "config": cfg, "node_ids": list(g.node_ids), "final_loss": emb.final_loss,
        "tied": emb.tied, "similarity": {"provenance": s.provenance, "shift": s.shift,
                                         "scale": s.scale},
    })


def run_cluster(cfg, g=None):
    _need(cfg, "labels")
    g = g if g is not None else _graph(cfg)
    labels = load_labels(cfg["labels"], g.node_ids)
    ecfg = embed_config(cfg)
    s = compute_similarity(g, ecfg, _external(cfg))
    report = clustering_protocol(lambda seed: embed_similarity(s, ecfg, seed), labels,
                                 embed_reps=cfg["embed_reps"], kmeans_runs=cfg["kmeans_runs"],
                                 seed=cfg["seed"])
    report.hyperparameters.update(ecfg.as_dict())
    return report


def run_classify(cfg, g=None):
    _need(cfg, "labels")
    g = g if g is not None else _graph(cfg)
    labels = load_labels(cfg["labels"], g.node_ids)
    ecfg = embed_config(cfg)
    emb = embed_graph(g, ecfg, external=_external(cfg))
    report = classification_protocol(emb, labels, cfg["train_fraction"], cfg["splits"],
                                     seed=cfg["seed"], l2=cfg["l2"])
    report.hyperparameters.update(ecfg.as_dict())
    return report


def run_linkpred(cfg, g=None):
    g = g if g is not None else _graph(cfg)
    if cfg["similarity"] == "external":
        raise CLIError("link prediction recomputes the similarity on the training graph; "
                       "external matrices are not supported")
    ecfg = embed_config(cfg)
    report = link_prediction_protocol(g, lambda tg, seed: embed_graph(tg, ecfg, seed=seed),
                                      _operators(cfg), cfg["removal_fraction"], cfg["seed"],
                                      cfg["repetitions"], l2=cfg["l2"])
    report.hyperparameters.update(ecfg.as_dict())
    return report


TASKS = {"cluster": run_cluster, "classify": run_classify, "linkpred": run_linkpred}


def cmd_eval(task):
    def run(cfg):
        _write_report(cfg, _report_payload(TASKS[task](cfg), cfg))
    return run


def recon_demo(n: int, p: float, d: int, seed: int, iterations: int = 300, magnitude: float = 5.0):
    """Reconstruct a +/-``magnitude`` adjacency-sign matrix with GMF and SVD."""
    A = erdos_renyi(n, p, seed).dense()
    S = np.where(A > 0, magnitude, -magnitude)
    w = PosNegWeights(np.exp(S), np.ones_like(S))
    emb = gmf_fit(w, FitOptions(d=d, symmetric=False, iterations=iterations, seed=seed))
    gmf = reconstruct(emb)
    U, V = truncated_svd(S, d, seed=seed)
    svd = U @ V.T
    edge = A > 0
    summary = {}
    for name, R in (("gmf", gmf), ("svd", svd)):
        err = np.abs(R - S)
        summary[name] = {
            "edge_mean_abs_error": float(err[edge].mean()) if edge.any() else None,
            "non_edge_mean_abs_error": float(err[~edge].mean()),
            "max_abs_error": float(err.max()),
            "frobenius_error": float(np.linalg.norm(R - S)),
        }
    summary["edges"] = int(edge.sum() // 2)
    return S, gmf, svd, summary


def cmd_recon_demo(cfg):
    S, gmf, svd, summary = recon_demo(cfg["n"], cfg["p"], cfg["d"], cfg["seed"],
                                      cfg["iterations"], cfg["magnitude"])
    if cfg.get("output"):
        out = Path(cfg["output"])
        out.mkdir(parents=True, exist_ok=True)
        fio.write_matrix_csv(out / "target.csv", S)
        fio.write_matrix_csv(out / "gmf.csv", gmf)
        fio.write_matrix_csv(out / "svd.csv", svd)
        (out / "summary.json").write_text(
            json.dumps({"summary": summary, "config": cfg}, indent=2, sort_keys=True) + "\n")
    sys.stdout.write(json.dumps(summary, indent=2, sort_keys=True) + "\n")


def _parse_value(param, text):
    if param in ("d",):
        return int(text)
    if param in ("horizon", "targets"):
        return _opt_int(text)
    return float(text)


def sweep(cfg: dict, param: str, values) -> list[dict]:
    """Run the configured tasks once per value; one result row per value."""
    if param not in SWEEPABLE:
        raise CLIError(f"cannot sweep {param!r}; choose from {SWEEPABLE}")
    tasks = [t.strip() for t in cfg["task"].split(",") if t.strip()]
    for t in tasks:
        if t not in TASKS:
            raise CLIError(f"unknown task {t!r}; choose from {tuple(TASKS)}")
    g = _graph(cfg)
    rows = []
    for value in values:
        run_cfg = dict(cfg, **{param: value})
        row = {"param": param, "value": value}
        start = time.perf_counter()
        for t in tasks:
            report = TASKS[t](run_cfg, g)
            for k, v in sorted(report.metrics.items()):
                row[f"{t}_{k}"] = v
        row["runtime_s"] = round(time.perf_counter() - start, 3)
        rows.append(row)
    return rows


def cmd_sweep(cfg):
    _need(cfg, "param", "values")
    values = [_parse_value(cfg["param"], v.strip()) for v in cfg["values"].split(",") if v.strip()]
    rows = sweep(cfg, cfg["param"], values)
    buf = io.StringIO()
    fields = list(rows[0]) if rows else ["param", "value"]
    writer = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: repr(v) if isinstance(v, float) else v for k, v in row.items()})
    if cfg.get("output"):
        Path(cfg["output"]).write_text(buf.getvalue())
    else:
        sys.stdout.write(buf.getvalue())


HANDLERS = {
    "prep": cmd_prep,
    "distance": cmd_distance,
    "embed": cmd_embed,
    "eval-cluster": cmd_eval("cluster"),
    "eval-classify": cmd_eval("classify"),
    "eval-linkpred": cmd_eval("linkpred"),
    "recon-demo": cmd_recon_demo,
    "sweep": cmd_sweep,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = vars(parser.parse_args(argv))
    logging.basicConfig(level=logging.DEBUG if args.pop("verbose") else logging.INFO,
                        format="%(asctime)s %(name)s %(levelname)s %(message)s", stream=sys.stderr)
    command = args.pop("command")
    try:
        cfg = resolve(command, args)
        log.info("%s config: %s", command, json.dumps(cfg, sort_keys=True))
        start = time.perf_counter()
        HANDLERS[command](cfg)
        log.info("%s finished in %.2fs", command, time.perf_counter() - start)
    except (CLIError, ValidationError, NumericalError, OSError) as exc:
        print(f"gmffe {command}: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())

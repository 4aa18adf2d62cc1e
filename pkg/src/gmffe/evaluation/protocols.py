"""Downstream evaluation protocols: node clustering, node classification and
link prediction."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

import numpy as np

from .._seeds import derive_seed
from ..errors import ValidationError
from ..graph import Graph, split_edges_for_link_prediction
from .kmeans import kmeans
from .labels import LabelSet
from .logreg import fit_logreg_ovr
from .metrics import auc_score, clustering_scores, micro_macro_f1

OPERATORS = ("average", "hadamard", "weighted_l1", "weighted_l2")
_ALIASES = {"avg": "average", "hada": "hadamard", "l1": "weighted_l1", "l2": "weighted_l2"}


@dataclass
class EvalReport:
    task: str
    metrics: dict
    seeds: list
    hyperparameters: dict = field(default_factory=dict)
    repetitions: int = 0

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)


def _as_matrix(U) -> np.ndarray:
    return np.asarray(getattr(U, "U", U), dtype=np.float64)


def canonical_operator(op: str) -> str:
    op = _ALIASES.get(op, op)
    if op not in OPERATORS:
        raise ValidationError(f"unknown operator {op!r}; choose from {OPERATORS}")
    return op


def pair_embedding(u, v, op: str) -> np.ndarray:
    """Combine two node vectors (or row-aligned batches of them) into a pair feature."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape:
        raise ValidationError(f"dimension mismatch {u.shape} vs {v.shape}")
    op = canonical_operator(op)
    if op == "average":
        return (u + v) / 2.0
    if op == "hadamard":
        return u * v
    if op == "weighted_l1":
        return np.abs(u - v)
    return (u - v) ** 2


def classification_protocol(U, labels: LabelSet, train_fraction: float = 0.5, splits: int = 10,
                            seed: int = 0, l2: float = 1.0, max_iters: int = 500,
                            tol: float = 1e-8) -> EvalReport:
    """Random node splits, one-vs-rest logistic regression, mean micro/macro F1.

    Each test node is assigned its ``k`` top-scoring labels, ``k`` being its
    true label count (1 for single-label data).
    """
    X = _as_matrix(U)
    n = X.shape[0]
    if len(labels) != n:
        raise ValidationError("labels and embeddings disagree on the node count")
    if not 0 < train_fraction < 1:
        raise ValidationError("train_fraction must lie in (0, 1)")
    n_train = int(round(train_fraction * n))
    if n_train == 0 or n_train == n:
        raise ValidationError(f"train_fraction {train_fraction} leaves an empty split")
    Y = labels.indicator()
    counts = Y.sum(axis=1).astype(np.int64)
    seeds = [derive_seed(seed, r) for r in range(splits)]
    micro, macro = [], []
    for s in seeds:
        perm = np.random.default_rng(s).permutation(n)
        tr, te = perm[:n_train], perm[n_train:]
        clf = fit_logreg_ovr(X[tr], Y[tr], l2=l2, max_iters=max_iters, tol=tol, seed=s)
        pred = clf.predict_top_k(X[te], counts[te])
        mi, ma = micro_macro_f1(pred, Y[te].astype(bool))
        micro.append(mi)
        macro.append(ma)
    return EvalReport(
        task="classification",
        metrics={"micro_F1": float(np.mean(micro)), "macro_F1": float(np.mean(macro)),
                 "micro_F1_std": float(np.std(micro)), "macro_F1_std": float(np.std(macro))},
        seeds=seeds,
        hyperparameters={"train_fraction": train_fraction, "l2": l2, "max_iters": max_iters,
                         "tol": tol, "seed": seed},
        repetitions=splits,
    )


def _pair_features(X, pairs, op):
    return pair_embedding(X[pairs[:, 0]], X[pairs[:, 1]], op)


def link_prediction_protocol(g: Graph, embed_fn: Callable[[Graph, int], np.ndarray],
                             operators: Sequence[str] = OPERATORS, removal_fraction: float = 0.3,
                             seed: int = 0, repetitions: int = 10, l2: float = 1.0,
                             max_iters: int = 500, tol: float = 1e-8) -> EvalReport:
    """Hide edges, embed the remaining graph, and score held-out pairs.

    ``embed_fn(train_graph, seed)`` returns one row per node of the training
    graph. A logistic regression on pair features of training edges and
    sampled non-edges scores the test pairs; AUC is averaged over
    repetitions.
    """
    ops = [canonical_operator(op) for op in operators]
    seeds = [derive_seed(seed, r) for r in range(repetitions)]
    aucs: dict[str, list[float]] = {op: [] for op in ops}
    for s in seeds:
        split = split_edges_for_link_prediction(g, removal_fraction, s)
        if len(split.test_positive_pairs) == 0:
            raise ValidationError("no removed edge survived inside the training component")
        X = _as_matrix(embed_fn(split.train_graph, s))
        if X.shape[0] != split.train_graph.node_count:
            raise ValidationError("embed_fn returned the wrong number of rows")
        train_pairs = np.vstack([split.train_positive_pairs, split.negative_pairs_train])
        y_train = np.r_[np.ones(len(split.train_positive_pairs)), np.zeros(len(split.negative_pairs_train))]
        test_pairs = np.vstack([split.test_positive_pairs, split.negative_pairs_test])
        y_test = np.r_[np.ones(len(split.test_positive_pairs)), np.zeros(len(split.negative_pairs_test))]
        for op in ops:
            clf = fit_logreg_ovr(_pair_features(X, train_pairs, op), y_train,
                                 l2=l2, max_iters=max_iters, tol=tol, seed=s)
            scores = clf.decision_function(_pair_features(X, test_pairs, op))[:, 0]
            aucs[op].append(auc_score(scores, y_test))
    metrics = {}
    for op in ops:
        metrics[f"AUC_{op}"] = float(np.mean(aucs[op]))
        metrics[f"AUC_{op}_std"] = float(np.std(aucs[op]))
    return EvalReport(
        task="link_prediction",
        metrics=metrics,
        seeds=seeds,
        hyperparameters={"removal_fraction": removal_fraction, "operators": ops, "l2": l2,
                         "max_iters": max_iters, "tol": tol, "seed": seed},
        repetitions=repetitions,
    )


def clustering_protocol(embed_fn: Callable[[int], np.ndarray], labels: LabelSet, embed_reps: int = 5,
                        kmeans_runs: int = 10, seed: int = 0, k: int | None = None) -> EvalReport:
    """k-means on ``embed_reps`` embeddings x ``kmeans_runs`` initializations;
    each k-means run is one realization and the metrics are averaged."""
    if labels.multi_label:
        raise ValidationError("clustering needs single-label ground truth")
    truth = labels.as_vector()
    k = int(np.unique(truth).size) if k is None else k
    seeds = []
    rows = []
    for r in range(embed_reps):
        emb_seed = derive_seed(seed, r)
        X = _as_matrix(embed_fn(emb_seed))
        for j in range(kmeans_runs):
            km_seed = derive_seed(seed, r, j)
            seeds.append(km_seed)
            res = kmeans(X, k, runs=1, seed=km_seed)
            rows.append(clustering_scores(res.labels, truth))
    metrics = {}
    for name in rows[0]:
        vals = [row[name] for row in rows]
        metrics[name] = float(np.mean(vals))
        metrics[f"{name}_std"] = float(np.std(vals))
    return EvalReport(
        task="clustering",
        metrics=metrics,
        seeds=seeds,
        hyperparameters={"embed_reps": embed_reps, "kmeans_runs": kmeans_runs, "k": k, "seed": seed},
        repetitions=embed_reps * kmeans_runs,
    )

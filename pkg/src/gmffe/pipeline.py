"""Graph -> distance -> similarity -> embedding, driven by one config object."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, replace

import numpy as np

from .errors import ValidationError
from .factorization import EmbeddingMatrix, FitOptions, gmf_fit
from .fe_distance import (DissimilarityMatrix, FEParams, fe_directed, fe_distance,
                          sample_targets, symmetrize)
from .graph import Graph
from .similarity import (SimilarityMatrix, deepwalk_similarity, pos_neg_from_similarity,
                         to_similarity)

ETA_GRID = (1e-4, 1e-3, 1e-2, 1e-1, 1e0, 1e1)


@dataclass(frozen=True)
class EmbedConfig:
    """Everything that determines an embedding.

    ``horizon=None`` and ``targets=None`` select the exact FE distance.
    A horizon gives the bounded approximation (symmetrized unless
    ``asymmetric``); a target count samples that many target columns and
    factorizes the resulting non-square matrix untied.
    """

    eta: float = 0.1
    percentile: float = 70.0
    max_target: float = 6.0
    d: int = 128
    horizon: int | None = None
    targets: int | None = None
    asymmetric: bool = False
    drop_threshold: float = 7.0
    convergence_tol: float = 1e-9
    similarity: str = "fe"
    window: int = 10
    negatives: int = 1
    iterations: int = 300
    learning_rate: float = 0.1
    beta1: float = 0.9
    beta2: float = 0.999
    init_scale: float = 0.1
    seed: int = 0
    threads: int = 1

    def with_(self, **kw) -> "EmbedConfig":
        return replace(self, **kw)

    def as_dict(self) -> dict:
        return asdict(self)


def compute_distance(g: Graph, cfg: EmbedConfig) -> DissimilarityMatrix:
    if cfg.horizon is None and cfg.targets is None:
        return fe_distance(g, cfg.eta, tol=cfg.convergence_tol, threads=cfg.threads)
    params = FEParams(eta=cfg.eta, horizon=cfg.horizon, convergence_tol=cfg.convergence_tol,
                      drop_threshold=cfg.drop_threshold)
    if cfg.targets is not None and cfg.targets < g.node_count:
        targets = sample_targets(g.node_count, cfg.targets, cfg.seed)
        return fe_directed(g, params, targets=targets, threads=cfg.threads)
    phi = fe_directed(g, params, threads=cfg.threads)
    return phi if cfg.asymmetric else symmetrize(phi)


def compute_similarity(g: Graph, cfg: EmbedConfig, external: np.ndarray | None = None) -> SimilarityMatrix:
    if cfg.similarity == "fe":
        delta = compute_distance(g, cfg)
        if not np.isfinite(delta.values).all():
            raise ValidationError(
                f"horizon {cfg.horizon} leaves unreachable pairs; increase it"
            )
        return to_similarity(delta, cfg.percentile, cfg.max_target)
    if cfg.similarity == "deepwalk":
        return deepwalk_similarity(g, cfg.window, cfg.negatives)
    if cfg.similarity == "external":
        if external is None:
            raise ValidationError("external similarity requested but no matrix supplied")
        return SimilarityMatrix(external, provenance="external")
    raise ValidationError(f"unknown similarity source {cfg.similarity!r}")


def fit_options(cfg: EmbedConfig, symmetric: bool, seed: int | None = None) -> FitOptions:
    return FitOptions(d=cfg.d, symmetric=symmetric, learning_rate=cfg.learning_rate,
                      beta1=cfg.beta1, beta2=cfg.beta2, iterations=cfg.iterations,
                      seed=cfg.seed if seed is None else seed, init_scale=cfg.init_scale)


def embed_similarity(s: SimilarityMatrix, cfg: EmbedConfig, seed: int | None = None) -> EmbeddingMatrix:
    """Tied fit for symmetric square similarities, untied otherwise."""
    weights = pos_neg_from_similarity(s)
    return gmf_fit(weights, fit_options(cfg, s.is_symmetric, seed))


def embed_graph(g: Graph, cfg: EmbedConfig, seed: int | None = None,
                external: np.ndarray | None = None) -> EmbeddingMatrix:
    return embed_similarity(compute_similarity(g, cfg, external), cfg, seed)


def resolve_eta(value) -> float:
    eta = float(value)
    if not (eta > 0 and math.isfinite(eta)):
        raise ValidationError(f"eta must be positive, got {value}")
    return eta

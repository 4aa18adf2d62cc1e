"""Node label sets and the ``node_id label[,label...]`` file format."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..errors import ParseError, ValidationError
from ..graph import _open_text


@dataclass(frozen=True, eq=False)
class LabelSet:
    labels: tuple[tuple[int, ...], ...]
    num_labels: int
    multi_label: bool = False
    names: tuple = ()

    def __post_init__(self):
        for i, ls in enumerate(self.labels):
            if not ls:
                raise ValidationError(f"node {i} has no label")
            if not self.multi_label and len(ls) != 1:
                raise ValidationError(f"node {i} has {len(ls)} labels in single-label mode")
            if min(ls) < 0 or max(ls) >= self.num_labels:
                raise ValidationError(f"node {i} has a label id out of range")

    def __len__(self):
        return len(self.labels)

    @classmethod
    def from_single(cls, y: Sequence[int]) -> "LabelSet":
        y = [int(v) for v in y]
        return cls(tuple((v,) for v in y), max(y) + 1 if y else 0, False)

    def as_vector(self) -> np.ndarray:
        if self.multi_label:
            raise ValidationError("multi-label set has no single label vector")
        return np.array([ls[0] for ls in self.labels], dtype=np.int64)

    def indicator(self) -> np.ndarray:
        y = np.zeros((len(self.labels), self.num_labels))
        for i, ls in enumerate(self.labels):
            y[i, list(ls)] = 1.0
        return y

    def subset(self, idx) -> "LabelSet":
        return LabelSet(tuple(self.labels[i] for i in idx), self.num_labels,
                        self.multi_label, self.names)


def _key(tok):
    return int(tok) if tok.isdigit() else tok


def load_labels(source, node_ids: Sequence) -> LabelSet:
    """Read labels and align them with ``node_ids`` (a graph's node order).

    Nodes absent from ``node_ids`` are ignored; every node in ``node_ids``
    must receive at least one label.
    """
    raw: dict = {}
    for lineno, line in enumerate(_open_text(source), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split(None, 1)
        if len(parts) != 2:
            raise ParseError(f"expected 'node_id label[,label...]', got {line!r}", lineno)
        toks = [t.strip() for t in parts[1].replace(" ", "").split(",") if t.strip()]
        if not toks:
            raise ParseError("empty label list", lineno)
        raw.setdefault(_key(parts[0]), []).extend(toks)
    names = sorted({t for ts in raw.values() for t in ts}, key=lambda t: (not t.isdigit(), int(t) if t.isdigit() else 0, t))
    lid = {name: k for k, name in enumerate(names)}
    out = []
    for nid in node_ids:
        if nid not in raw:
            raise ValidationError(f"node {nid!r} has no label")
        out.append(tuple(sorted({lid[t] for t in raw[nid]})))
    multi = any(len(ls) > 1 for ls in out)
    return LabelSet(tuple(out), len(names), multi, tuple(names))

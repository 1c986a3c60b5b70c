"""Reader and writer for the LIBSVM sparse text format.

Each data line is ``label idx:val idx:val ...`` with 1-based, strictly
increasing feature indices. Text after ``#`` is a comment and blank lines are
skipped.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass
from typing import Iterable, Mapping, TextIO

import numpy as np

from ..errors import ParseError


@dataclass(frozen=True)
class Dataset:
    """Dense feature matrix with class ids ``1..K``.

    ``labels`` holds the raw label strings in row order and ``label_map`` sends
    each raw label to its class id. ``rows`` keeps the value text as written so
    that serializing reproduces the input up to whitespace.
    """

    X: np.ndarray
    y: np.ndarray
    labels: tuple[str, ...]
    label_map: Mapping[str, int]
    rows: tuple[tuple[tuple[int, str], ...], ...]

    @property
    def n_classes(self) -> int:
        return len(self.label_map)

    @property
    def n_features(self) -> int:
        return self.X.shape[1]

    def class_rows(self, k: int) -> np.ndarray:
        return self.X[self.y == k]


def _tokens(line: str):
    """Whitespace-separated tokens with their 1-based start columns."""
    col, n = 0, len(line)
    while col < n:
        while col < n and line[col].isspace():
            col += 1
        if col >= n:
            break
        start = col
        while col < n and not line[col].isspace():
            col += 1
        yield start + 1, line[start:col]


def parse_libsvm(
    source: str | TextIO,
    label_map: Mapping[str, int] | None = None,
    n_features: int | None = None,
) -> Dataset:
    """Parse LIBSVM text (a string or a readable text stream)."""
    if isinstance(source, str):
        source = io.StringIO(source)
    rows, labels = [], []
    lmap = dict(label_map) if label_map is not None else {}
    fixed = label_map is not None
    width = 0
    for lineno, raw in enumerate(source, start=1):
        line = raw.split("#", 1)[0].rstrip("\r\n")
        toks = list(_tokens(line))
        if not toks:
            continue
        col, label = toks[0]
        try:
            float(label)
        except ValueError:
            raise ParseError(lineno, col, f"label {label!r} is not a number") from None
        if label not in lmap:
            if fixed:
                raise ParseError(lineno, col, f"label {label!r} not in the supplied label map")
            lmap[label] = len(lmap) + 1
        feats, prev = [], 0
        for col, tok in toks[1:]:
            idx_s, sep, val_s = tok.partition(":")
            if not sep:
                raise ParseError(lineno, col, f"expected index:value, got {tok!r}")
            try:
                idx = int(idx_s)
            except ValueError:
                raise ParseError(lineno, col, f"bad feature index {idx_s!r}") from None
            if idx < 1:
                raise ParseError(lineno, col, f"feature index {idx} is not positive")
            if idx <= prev:
                raise ParseError(lineno, col, f"feature index {idx} does not follow {prev}")
            try:
                val = float(val_s)
            except ValueError:
                raise ParseError(lineno, col + len(idx_s) + 1, f"bad feature value {val_s!r}") from None
            if not math.isfinite(val):
                raise ParseError(lineno, col + len(idx_s) + 1, f"non-finite feature value {val_s!r}")
            feats.append((idx, val_s))
            prev = idx
        width = max(width, prev)
        rows.append(tuple(feats))
        labels.append(label)
    if n_features is not None:
        if n_features < width:
            raise ParseError(0, 0, f"feature index {width} exceeds n_features={n_features}")
        width = n_features
    X = np.zeros((len(rows), width))
    for r, feats in enumerate(rows):
        for idx, val in feats:
            X[r, idx - 1] = float(val)
    y = np.array([lmap[l] for l in labels], dtype=int)
    return Dataset(X, y, tuple(labels), dict(lmap), tuple(rows))


def load_libsvm(path, **kwargs) -> Dataset:
    with open(path, encoding="utf-8") as fh:
        return parse_libsvm(fh, **kwargs)


def serialize_libsvm(data: Dataset | Iterable[tuple[str, Iterable[tuple[int, float]]]]) -> str:
    """Canonical text: single spaces, one row per line.

    Float values are written in their shortest round-trip form.
    """
    items = zip(data.labels, data.rows) if isinstance(data, Dataset) else data
    lines = []
    for label, feats in items:
        parts = [str(label)] + [f"{i}:{v if isinstance(v, str) else repr(float(v))}" for i, v in feats]
        lines.append(" ".join(parts))
    return "\n".join(lines) + ("\n" if lines else "")


def iris_path():
    from importlib.resources import files

    return files("cutspheres.problems").joinpath("data/iris.scale")


def load_iris() -> Dataset:
    """The bundled 150-row Iris data, features scaled to ``[-1, 1]``."""
    return parse_libsvm(iris_path().read_text(encoding="utf-8"), n_features=4)

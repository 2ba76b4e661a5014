"""ROUGE-L, linear CKA, Jensen-Shannon divergence and the gap ratio.

All kernels compute in float64 regardless of input dtype.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import DegenerateMatrixError, InputError, UndefinedRatioError

_TOKEN = re.compile(r"[^\W_]+")


def tokenize(text: str) -> list[str]:
    """Lowercased maximal runs of Unicode letters and digits."""
    return [t.lower() for t in _TOKEN.findall(text)]


def f1_from_lcs(lcs: int, len_a: int, len_b: int) -> float:
    if lcs == 0 or len_a == 0 or len_b == 0:
        return 0.0
    p = lcs / len_a
    r = lcs / len_b
    return 2 * p * r / (p + r)


class Vocabulary:
    """String-to-int token map so LCS kernels can compare integers."""

    def __init__(self):
        self._ids: dict[str, int] = {}

    def __len__(self):
        return len(self._ids)

    def encode(self, tokens) -> np.ndarray:
        ids = self._ids
        out = np.empty(len(tokens), dtype=np.int64)
        for i, t in enumerate(tokens):
            v = ids.get(t)
            if v is None:
                v = ids[t] = len(ids)
            out[i] = v
        return out


def lcs_length(a, b) -> int:
    """LCS length of two token sequences (strings or ints)."""
    if len(a) == 0 or len(b) == 0:
        return 0
    if not isinstance(a, np.ndarray) or not isinstance(b, np.ndarray):
        vocab = Vocabulary()
        a, b = vocab.encode(list(a)), vocab.encode(list(b))
    return kernels.lcs_length(a, b)


def rouge_l_f1(a, b) -> float:
    """ROUGE-L F1 between token sequences; two empty sequences score 0."""
    return f1_from_lcs(lcs_length(a, b), len(a), len(b))


def rouge_l_scan(candidate: np.ndarray, flat: np.ndarray, offsets: np.ndarray) -> np.ndarray:
    """F1 of ``candidate`` against every sequence packed in ``flat[offsets[i]:offsets[i+1]]``."""
    lcs = kernels.lcs_scan(candidate, flat, offsets)
    lens = np.diff(offsets)
    la = len(candidate)
    out = np.zeros(len(lens), dtype=np.float64)
    nz = (lcs > 0) & (lens > 0) & (la > 0)
    p = lcs[nz] / la
    r = lcs[nz] / lens[nz]
    out[nz] = 2 * p * r / (p + r)
    return out


def _centered(m, name: str) -> np.ndarray:
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2:
        raise InputError(f"{name} must be 2-D, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise InputError(f"{name} contains NaN or Inf")
    return m - m.mean(axis=0, keepdims=True)


def linear_cka(x, y) -> float:
    """Linear CKA: ``||Xc^T Yc||_F^2 / (||Xc^T Xc||_F ||Yc^T Yc||_F)`` on column-centred inputs."""
    xc = _centered(x, "X")
    yc = _centered(y, "Y")
    n = xc.shape[0]
    if yc.shape[0] != n:
        raise InputError(f"row counts differ: {n} vs {yc.shape[0]}")
    if n < 2:
        raise InputError("need at least 2 rows")
    if max(xc.shape[1], yc.shape[1]) > n:
        # Gram form is cheaper when features outnumber examples
        kx = xc @ xc.T
        ky = yc @ yc.T
        hsic_xy = float(np.sum(kx * ky))
        nx = float(np.linalg.norm(kx))
        ny = float(np.linalg.norm(ky))
    else:
        hsic_xy = float(np.linalg.norm(xc.T @ yc) ** 2)
        nx = float(np.linalg.norm(xc.T @ xc))
        ny = float(np.linalg.norm(yc.T @ yc))
    if nx == 0.0 or ny == 0.0:
        raise DegenerateMatrixError("a matrix has zero variance after centering; CKA is undefined")
    return hsic_xy / (nx * ny)


def _kl(p: np.ndarray, m: np.ndarray) -> float:
    nz = p > 0
    return float(np.sum(p[nz] * np.log(p[nz] / m[nz])))


def js_divergence(p, q, log_base: float = 2.0) -> float:
    """Jensen-Shannon divergence; base 2 keeps it in [0, 1]."""
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    if p.shape != q.shape or p.ndim != 1:
        raise InputError(f"distributions must be 1-D and the same length, got {p.shape} and {q.shape}")
    for name, d in (("p", p), ("q", q)):
        if not np.all(np.isfinite(d)) or np.any(d < 0):
            raise InputError(f"{name} has negative or non-finite entries")
        if abs(math.fsum(d.tolist()) - 1.0) > 1e-6:
            raise InputError(f"{name} is not normalized (sum {math.fsum(d.tolist())!r})")
    m = (p + q) / 2
    value = (0.5 * _kl(p, m) + 0.5 * _kl(q, m)) / math.log(log_base)
    return max(value, 0.0)


@dataclass(frozen=True)
class GapRatio:
    pretrained: float
    tpi: float
    gt_image: float
    value: float

    @property
    def percent(self) -> int:
        return round_half_up(100 * self.value)

    def to_json(self) -> dict:
        return {"pretrained": self.pretrained, "tpi": self.tpi, "gt_image": self.gt_image,
                "value": self.value, "percent": self.percent}


def round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def gap_ratio(pretrained: float, tpi: float, gt_image: float, eps: float = 1e-9) -> GapRatio:
    """Fraction of the GT-image gain over the pretrained model that TPI training recovers."""
    denom = gt_image - pretrained
    if abs(denom) <= eps:
        raise UndefinedRatioError(f"gt_image - pretrained = {denom!r}; gap ratio is undefined")
    return GapRatio(pretrained, tpi, gt_image, (tpi - pretrained) / denom)

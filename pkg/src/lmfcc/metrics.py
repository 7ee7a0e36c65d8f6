"""Verification metrics from labelled trial scores.

Decision rule: a trial is accepted when ``score >= threshold``. The sweep
uses every distinct score as a threshold plus one threshold above the
maximum (reject everything).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DataError


@dataclass
class TrialScores:
    genuine: np.ndarray
    impostor: np.ndarray

    def __post_init__(self):
        self.genuine = np.asarray(self.genuine, dtype=np.float64).ravel()
        self.impostor = np.asarray(self.impostor, dtype=np.float64).ravel()
        if self.genuine.size == 0 or self.impostor.size == 0:
            raise DataError("need at least one genuine and one impostor score")
        if not (np.all(np.isfinite(self.genuine)) and np.all(np.isfinite(self.impostor))):
            raise DataError("scores must be finite")


def error_sweep(ts: TrialScores):
    """Thresholds with miss and false-alarm rates, thresholds ascending.

    Returns ``(thresholds, p_miss, p_fa)``; the last threshold is ``+inf``.
    """
    thresholds = np.append(np.unique(np.concatenate([ts.genuine, ts.impostor])), np.inf)
    g = np.sort(ts.genuine)
    i = np.sort(ts.impostor)
    p_miss = np.searchsorted(g, thresholds, side="left") / g.size
    p_fa = (i.size - np.searchsorted(i, thresholds, side="left")) / i.size
    return thresholds, p_miss, p_fa


def eer(ts: TrialScores) -> float:
    """Equal error rate, interpolated between the bracketing sweep points."""
    _, p_miss, p_fa = error_sweep(ts)
    # p_miss - p_fa rises from -1 at the lowest threshold to +1 at +inf
    k = int(np.argmax(p_miss >= p_fa))
    if k == 0 or p_miss[k] == p_fa[k]:
        return float(p_miss[k])
    m0, m1, f0, f1 = p_miss[k - 1], p_miss[k], p_fa[k - 1], p_fa[k]
    alpha = (f0 - m0) / ((m1 - m0) - (f1 - f0))
    return float(m0 + alpha * (m1 - m0))


def min_dcf(ts: TrialScores, p_target: float = 0.001, c_miss: float = 1.0,
            c_fa: float = 1.0) -> float:
    """Normalised minimum detection cost.

    The raw cost is divided by ``min(c_miss * p, c_fa * (1 - p))``, the best
    cost achievable without looking at the scores.
    """
    if not 0.0 < p_target < 1.0:
        raise ValueError("p_target must lie in (0, 1)")
    _, p_miss, p_fa = error_sweep(ts)
    dcf = c_miss * p_target * p_miss + c_fa * (1.0 - p_target) * p_fa
    return float(dcf.min() / min(c_miss * p_target, c_fa * (1.0 - p_target)))


def det_points(ts: TrialScores) -> list[tuple[float, float]]:
    """(P_fa, P_miss) pairs, one per threshold, P_fa ascending."""
    _, p_miss, p_fa = error_sweep(ts)
    return [(float(f), float(m)) for f, m in zip(p_fa[::-1], p_miss[::-1])]


def read_scores(path) -> TrialScores:
    """Parse ``label score`` lines with label ``target`` or ``nontarget``."""
    genuine, impostor = [], []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            parts = line.split()
            if not parts:
                continue
            if len(parts) != 2:
                raise DataError(f"{path}:{lineno}: expected 'label score'")
            label, raw = parts
            try:
                score = float(raw)
            except ValueError:
                raise DataError(f"{path}:{lineno}: bad score {raw!r}") from None
            if label == "target":
                genuine.append(score)
            elif label == "nontarget":
                impostor.append(score)
            else:
                raise DataError(f"{path}:{lineno}: unknown label {label!r}")
    return TrialScores(genuine, impostor)


def write_scores(ts: TrialScores, path) -> None:
    with open(path, "w") as fh:
        for s in ts.genuine:
            fh.write(f"target {float(s)!r}\n")
        for s in ts.impostor:
            fh.write(f"nontarget {float(s)!r}\n")


def write_det(points, path) -> None:
    with open(path, "w") as fh:
        fh.write("p_fa,p_miss\n")
        for f, m in points:
            fh.write(f"{float(f)!r},{float(m)!r}\n")

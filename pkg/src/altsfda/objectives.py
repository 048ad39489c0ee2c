"""Loss terms on prediction matrices.

Each ``*_loss`` returns the scalar value. The ``*_grad`` companions return
the gradient of that value with respect to the live prediction matrix;
neighbour predictions and weak-view pseudo-labels are treated as constants.
"""

import math
from dataclasses import dataclass, asdict

import numpy as np

from .numerics import LOG_FLOOR

SEP_SIGNS = ("dispersion", "literal")
AIR_MODES = ("hard", "soft")


@dataclass
class LossReport:
    alr: float
    sep: float
    air: float
    lam: float
    total: float
    inner_count: int
    outlier_count: int

    def as_dict(self):
        return asdict(self)


def _check_neighbors(p_inner, nbr_probs, nbr_weights, k=None):
    p_inner = np.asarray(p_inner, dtype=np.float64)
    nbr_probs = np.asarray(nbr_probs, dtype=np.float64)
    nbr_weights = np.asarray(nbr_weights, dtype=np.float64)
    n = p_inner.shape[0]
    if nbr_probs.ndim != 3 or nbr_probs.shape[0] != n or nbr_probs.shape[2] != p_inner.shape[1]:
        raise ValueError(f"alr: neighbour predictions shape {nbr_probs.shape} does not match {p_inner.shape}")
    if nbr_weights.shape != nbr_probs.shape[:2]:
        raise ValueError(f"alr: weight shape {nbr_weights.shape} != {nbr_probs.shape[:2]}")
    if k is not None and n and nbr_probs.shape[1] != k:
        raise ValueError(f"alr: got {nbr_probs.shape[1]} neighbours per sample, configured K={k}")
    return p_inner, nbr_probs, nbr_weights


def alr_loss(p_inner, nbr_probs, nbr_weights, k=None):
    """-sum_i sum_j w_ij <p_i, p_j> over inner samples i and their bank neighbours j.

    nbr_probs is (n_inner, K, C), nbr_weights is (n_inner, K).
    """
    p, nb, w = _check_neighbors(p_inner, nbr_probs, nbr_weights, k)
    if p.shape[0] == 0:
        return 0.0
    dots = np.einsum("ic,ikc->ik", p, nb)
    return float(-np.sum(w * dots))


def alr_grad(p_inner, nbr_probs, nbr_weights, k=None):
    p, nb, w = _check_neighbors(p_inner, nbr_probs, nbr_weights, k)
    return -np.einsum("ik,ikc->ic", w, nb)


def _sep_factor(sign):
    if sign not in SEP_SIGNS:
        raise ValueError(f"unknown sep sign {sign!r}; expected one of {SEP_SIGNS}")
    return 1.0 if sign == "dispersion" else -1.0


def sep_loss(p_batch, inner_mask=None, sign="dispersion"):
    """Prediction overlap between each inner sample and every other batch sample.

    With sign="dispersion" this is +sum_{i in inner} sum_{m != i} <p_i, p_m>,
    a penalty minimised by spreading predictions apart. sign="literal" flips it.
    """
    factor = _sep_factor(sign)
    p = np.asarray(p_batch, dtype=np.float64)
    if p.shape[0] < 2:
        return 0.0
    mask = np.ones(p.shape[0], bool) if inner_mask is None else np.asarray(inner_mask, bool)
    gram = p @ p.T
    np.fill_diagonal(gram, 0.0)
    return float(factor * gram[mask].sum())


def sep_grad(p_batch, inner_mask=None, sign="dispersion"):
    """Gradient w.r.t. every batch row; both factors of each dot product are live."""
    factor = _sep_factor(sign)
    p = np.asarray(p_batch, dtype=np.float64)
    if p.shape[0] < 2:
        return np.zeros_like(p)
    mask = np.ones(p.shape[0], bool) if inner_mask is None else np.asarray(inner_mask, bool)
    m = mask.astype(np.float64)
    total = p.sum(axis=0)
    inner_total = (m[:, None] * p).sum(axis=0)
    # d/dp_i of sum_{a in I} sum_{b != a} <p_a, p_b>
    g = m[:, None] * (total - p) + (inner_total - m[:, None] * p)
    return factor * g


def _pseudo_targets(p_weak, mode):
    if mode not in AIR_MODES:
        raise ValueError(f"unknown AIR mode {mode!r}; expected one of {AIR_MODES}")
    if mode == "hard":
        return np.eye(p_weak.shape[1])[np.argmax(p_weak, axis=1)]
    return p_weak


def air_loss(p_weak, q_strong, outlier_mask=None, mode="hard"):
    """Mean cross-entropy of strong-view predictions against weak-view pseudo-labels over outliers."""
    pw = np.asarray(p_weak, dtype=np.float64)
    q = np.asarray(q_strong, dtype=np.float64)
    if pw.shape != q.shape:
        raise ValueError(f"air: weak/strong shape mismatch {pw.shape} vs {q.shape}")
    mask = np.ones(q.shape[0], bool) if outlier_mask is None else np.asarray(outlier_mask, bool)
    n_out = int(mask.sum())
    if n_out == 0:
        return 0.0
    t = _pseudo_targets(pw[mask], mode)
    ce = -np.sum(t * np.log(np.maximum(q[mask], LOG_FLOOR)), axis=1)
    return float(ce.sum() / n_out)


def air_grad(p_weak, q_strong, outlier_mask=None, mode="hard"):
    pw = np.asarray(p_weak, dtype=np.float64)
    q = np.asarray(q_strong, dtype=np.float64)
    mask = np.ones(q.shape[0], bool) if outlier_mask is None else np.asarray(outlier_mask, bool)
    g = np.zeros_like(q)
    n_out = int(mask.sum())
    if n_out == 0:
        return g
    t = _pseudo_targets(pw[mask], mode)
    qm = q[mask]
    live = qm > LOG_FLOOR
    g[mask] = np.where(live, -t / np.where(live, qm, 1.0), 0.0) / n_out
    return g


def total_loss(alr, sep, air, lam, inner_count=0, outlier_count=0):
    for name, val in (("alr", alr), ("sep", sep), ("air", air), ("lambda", lam)):
        if not math.isfinite(val):
            raise FloatingPointError(f"non-finite loss component: {name}={val}")
    total = alr + air + lam * sep
    return LossReport(
        alr=float(alr), sep=float(sep), air=float(air), lam=float(lam),
        total=float(total), inner_count=int(inner_count), outlier_count=int(outlier_count),
    )

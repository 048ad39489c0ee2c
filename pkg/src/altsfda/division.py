"""Learning-state tracking and the inner/outlier split.

The confidence threshold tau is an EMA of the top prediction confidence.
Per-class counts of bank rows above tau give a learning effect sigma, which
is turned into a per-class division threshold T. Samples whose confidence
reaches T of their predicted class go to the outlier set (mode "literal");
"prose" swaps the two sets; "none" keeps every sample inner.
"""

import logging
import math
from dataclasses import dataclass

import numpy as np

log = logging.getLogger(__name__)

MODES = ("literal", "prose", "none")
AGGREGATES = ("max", "mean")
BETA_ONE = 1.0 - 1e-12


@dataclass
class LearningState:
    n_classes: int
    alpha: float = 0.9
    aggregate: str = "max"
    tau: float = None
    t: int = 0
    sigma: np.ndarray = None
    thresholds: np.ndarray = None

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"EMA momentum must lie in (0, 1), got {self.alpha}")
        if self.aggregate not in AGGREGATES:
            raise ValueError(f"unknown tau aggregate {self.aggregate!r}")
        if self.tau is None:
            self.tau = 1.0 / self.n_classes
        if self.sigma is None:
            self.sigma = np.zeros(self.n_classes, dtype=np.int64)
        if self.thresholds is None:
            self.thresholds = np.full(self.n_classes, 1.0 / self.n_classes)


def update_tau(state, confidences):
    """Advance tau by one EMA step using the batch's top confidences."""
    conf = np.asarray(confidences, dtype=np.float64).ravel()
    if conf.size == 0:
        log.warning("update_tau: empty batch, state unchanged")
        return state.tau
    m = conf.max() if state.aggregate == "max" else conf.mean()
    state.tau = state.alpha * state.tau + (1.0 - state.alpha) * float(m)
    state.t += 1
    return state.tau


def class_learning_effect(P, tau):
    P = np.asarray(P, dtype=np.float64)
    conf = P.max(axis=1)
    pred = P.argmax(axis=1)
    return np.bincount(pred[conf > tau], minlength=P.shape[1]).astype(np.int64)


def threshold_from_ratio(beta, n_classes):
    """(1/C) * (1 - beta / ln beta), with the limits at beta = 0 and beta = 1."""
    if beta < 0:
        raise ValueError(f"negative ratio {beta}")
    if beta == 0.0:
        return 1.0 / n_classes
    if beta >= BETA_ONE:
        return math.inf
    return (1.0 - beta / math.log(beta)) / n_classes


def division_thresholds(sigma):
    sigma = np.asarray(sigma)
    C = sigma.size
    if np.any(sigma < 0):
        raise ValueError("division_thresholds: negative class count")
    top = sigma.max()
    if top == 0:
        log.warning("division_thresholds: no class above tau, all thresholds at 1/C")
        return np.full(C, 1.0 / C)
    return np.array([threshold_from_ratio(s / top, C) for s in sigma], dtype=np.float64)


def refresh(state, P):
    """Recompute sigma and T from the full bank prediction matrix."""
    state.sigma = class_learning_effect(P, state.tau)
    state.thresholds = division_thresholds(state.sigma)
    return state.thresholds


@dataclass
class Partition:
    inner: np.ndarray
    outlier: np.ndarray

    @property
    def inner_mask(self):
        m = np.zeros(len(self.inner) + len(self.outlier), bool)
        m[self.inner] = True
        return m


def partition(probs, thresholds, mode="literal"):
    """Split batch positions 0..B-1 into (inner, outlier) index arrays."""
    if mode not in MODES:
        raise ValueError(f"unknown division mode {mode!r}; expected one of {MODES}")
    p = np.asarray(probs, dtype=np.float64)
    B = p.shape[0]
    if mode == "none":
        return Partition(np.arange(B), np.arange(0))
    T = np.asarray(thresholds, dtype=np.float64)
    reach = p.max(axis=1) >= T[p.argmax(axis=1)]
    if mode == "prose":
        reach = ~reach
    return Partition(np.flatnonzero(~reach), np.flatnonzero(reach))

"""Diagnostics: neighbour label agreement, class cosine statistics, the
consistency regularizer estimate, the error-bound check, and evaluation.

These are the only functions that read target labels.
"""

from dataclasses import dataclass, field

import numpy as np

from .bank import FeatureBank
from .data import weak_aug
from .model import forward
from .numerics import l2_normalize, pca_project_2d, spearman_rank_corr


def knn_label_agreement(bank, labels, k_list, mode="all"):
    """Per K, how often a sample's K nearest bank neighbours share its reference label.

    mode="all": fraction of samples whose K neighbours all match.
    mode="fraction": mean fraction of matching neighbours.
    """
    labels = np.asarray(labels)
    if mode not in ("all", "fraction"):
        raise ValueError(f"unknown agreement mode {mode!r}")
    kmax = max(k_list)
    if kmax >= bank.size:
        raise ValueError(f"K={kmax} needs more than {bank.size} samples")
    nbrs, _ = bank.knn_batch(np.arange(bank.size), kmax)
    match = labels[nbrs] == labels[:, None]
    out = {}
    for k in k_list:
        m = match[:, :k]
        out[k] = float(m.all(axis=1).mean()) if mode == "all" else float(m.mean())
    return out


def class_cosine_stats(features, labels):
    """Mean cosine over unordered same-class pairs and over across-class pairs."""
    F = l2_normalize(np.asarray(features, dtype=np.float64))
    labels = np.asarray(labels)
    S = np.clip(F @ F.T, -1.0, 1.0)
    iu = np.triu_indices(len(labels), k=1)
    same = labels[iu[0]] == labels[iu[1]]
    vals = S[iu]
    if not same.any():
        raise ValueError("class_cosine_stats: no class has two samples")
    if same.all():
        raise ValueError("class_cosine_stats: need at least two classes")
    return float(vals[same].mean()), float(vals[~same].mean())


def consistency_regularizer_estimate(params, X, spec, samples_per_point, rng):
    """Monte-Carlo estimate of E_x[max over augmented x' of 1(pred(x') != pred(x))]."""
    if samples_per_point < 1:
        raise ValueError("samples_per_point must be >= 1")
    X = np.asarray(X, dtype=np.float64)
    base = np.argmax(forward(params, X)[1], axis=1)
    differs = np.zeros(len(X), bool)
    for _ in range(samples_per_point):
        Xa = weak_aug(X, spec, rng)
        differs |= np.argmax(forward(params, Xa)[1], axis=1) != base
    return float(differs.mean())


@dataclass
class BoundReport:
    holds: bool
    target_error: float
    bound: float
    constant: float
    mu: float
    xi: float


def verify_error_bound(target_error, mu, xi):
    """Check eps_T <= max(xi / (xi - 1), 2) * mu."""
    if xi == 1:
        raise ValueError("verify_error_bound: xi = 1 makes the constant undefined")
    const = max(xi / (xi - 1.0), 2.0)
    bound = const * mu
    return BoundReport(bool(target_error <= bound), float(target_error), float(bound),
                       float(const), float(mu), float(xi))


def confusion_matrix(y_true, y_pred, n_classes):
    cm = np.zeros((n_classes, n_classes), dtype=np.int64)
    np.add.at(cm, (np.asarray(y_true), np.asarray(y_pred)), 1)
    return cm


@dataclass
class EvalReport:
    accuracy: float
    per_class: np.ndarray
    confusion: np.ndarray


def evaluate(params, X, y):
    y = np.asarray(y)
    pred = np.argmax(forward(params, X)[1], axis=1)
    cm = confusion_matrix(y, pred, params.n_classes)
    counts = cm.sum(axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        per_class = np.where(counts > 0, np.diag(cm) / np.maximum(counts, 1), np.nan)
    return EvalReport(float(np.trace(cm) / len(y)), per_class, cm)


def similarity_accuracy_correlation(ratios, accuracies):
    """Spearman rho between same/across similarity ratio and accuracy over a set of runs."""
    return spearman_rank_corr(ratios, accuracies)


@dataclass
class DiagnosticsReport:
    agreement: dict
    same_class_cos: float
    across_class_cos: float
    accuracy: float
    per_class: np.ndarray
    confusion: np.ndarray
    pca: np.ndarray = field(repr=False, default=None)

    @property
    def similarity_ratio(self):
        return self.same_class_cos / self.across_class_cos if self.across_class_cos else float("inf")


def diagnose(params, X, y, k_list=(1, 2, 3, 4, 5, 6, 7), reference="label", agreement_mode="all"):
    """Build the bank for (X, y) under params and run every diagnostic.

    reference="label" compares neighbours against ground truth;
    reference="prediction" against the model's own argmax, as before adaptation.
    """
    if reference not in ("label", "prediction"):
        raise ValueError(f"unknown agreement reference {reference!r}")
    z, p = forward(params, X)
    bank = FeatureBank(z, p)
    ref = np.asarray(y) if reference == "label" else p.argmax(axis=1)
    agree = knn_label_agreement(bank, ref, list(k_list), agreement_mode)
    same, across = class_cosine_stats(bank.F, y)
    ev = evaluate(params, X, y)
    return DiagnosticsReport(agree, same, across, ev.accuracy, ev.per_class, ev.confusion,
                             pca_project_2d(bank.F))

"""Source training and the adaptation loop."""

import io
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from . import division as div
from .bank import init_bank
from .config import AdaptConfig
from .data import AugmentSpec, gen_gaussian_mixture, gen_two_moons, strong_aug, weak_aug
from .model import (
    LR_PRESETS, LossInputs, OptimizerState, forward, init_params, lambda_schedule,
    loss_gradients, sgd_update, supervised_loss,
)

log = logging.getLogger(__name__)

TARGET_SEED_OFFSET = 1000


def make_datasets(cfg):
    """Return (source, target) datasets for cfg."""
    if cfg.dataset == "two_moons":
        src = gen_two_moons(cfg.n_per_class, cfg.noise_sd, 0.0, cfg.seed, domain="source")
        tgt = gen_two_moons(cfg.n_per_class, cfg.noise_sd, cfg.rotation,
                            cfg.seed + TARGET_SEED_OFFSET, domain="target")
        return src, tgt
    return gen_gaussian_mixture(cfg.n_classes, cfg.n_per_class, cfg.class_separation,
                                cfg.shift, cfg.rotation, cfg.seed, cfg.input_dim)


def fresh_params(cfg, input_dim, n_classes):
    return init_params(input_dim, n_classes, cfg.hidden_dim, cfg.feature_dim, cfg.bottleneck_dim,
                       seed=cfg.seed, lr_mult=LR_PRESETS[cfg.lr_preset])


def pretrain(cfg, source):
    """Supervised training on the labeled source set. Returns (params, opt)."""
    params = fresh_params(cfg, source.inputs.shape[1], source.n_classes)
    opt = OptimizerState(lr=cfg.pretrain_lr, momentum=cfg.momentum, weight_decay=0.0,
                         max_iter=max(cfg.pretrain_iters, 1))
    rng = np.random.default_rng(cfg.seed + 7)
    n = len(source)
    bs = min(cfg.pretrain_batch, n)
    order = rng.permutation(n)
    pos = 0
    # uniform group multipliers while training on source
    mult, params.lr_mult = params.lr_mult, {"backbone": 1.0, "head": 1.0}
    for it in range(cfg.pretrain_iters):
        if pos + bs > n:
            order = rng.permutation(n)
            pos = 0
        idx = order[pos:pos + bs]
        pos += bs
        loss, grads = supervised_loss(params, source.inputs[idx], source.labels[idx], cfg.label_smoothing)
        if not math.isfinite(loss):
            raise FloatingPointError(f"pretrain: non-finite loss at iteration {it}")
        params = sgd_update(params, grads, opt)
    params.lr_mult = mult
    return params, opt


def iterations_for(cfg, n):
    if cfg.max_iter is not None:
        return int(cfg.max_iter)
    return cfg.epochs * math.ceil(n / cfg.batch_size)


METRIC_FIELDS = ("iter", "alr", "sep", "air", "lambda", "total", "inner_count", "outlier_count", "tau")


def _fmt(v):
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


@dataclass
class AdaptResult:
    params: object
    opt: object
    rows: list = field(default_factory=list)
    n_classes: int = 0

    def header(self):
        C = self.n_classes
        return list(METRIC_FIELDS) + [f"sigma_{c}" for c in range(C)] + [f"T_{c}" for c in range(C)]

    def metrics_csv(self):
        buf = io.StringIO()
        buf.write(",".join(self.header()) + "\n")
        for r in self.rows:
            buf.write(",".join(_fmt(v) for v in r) + "\n")
        return buf.getvalue()


def adapt(cfg, params, X):
    """Run the adaptation loop on unlabeled target inputs X.

    Returns an AdaptResult whose rows follow ``AdaptResult.header()``.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.shape[1] != params.input_dim:
        raise ValueError(f"adapt: target has {X.shape[1]} features, model expects {params.input_dim}")
    params = params.copy()
    params.lr_mult = dict(LR_PRESETS[cfg.lr_preset])
    n = X.shape[0]
    C = params.n_classes
    bank = init_bank(params, X)
    if bank.F.shape[1] != params.bank_dim:
        raise ValueError("adapt: bank width does not match the model feature width")
    max_iter = iterations_for(cfg, n)
    opt = OptimizerState(lr=cfg.lr, momentum=cfg.momentum, weight_decay=cfg.weight_decay,
                         max_iter=max(max_iter, 1))
    state = div.LearningState(C, alpha=cfg.alpha, aggregate=cfg.tau_aggregate)
    spec = AugmentSpec(cfg.weak_sd, cfg.strong_sd, cfg.mask_frac, cfg.scale_low, cfg.scale_high).fitted(X)
    batch_rng = np.random.default_rng(cfg.seed + 1)
    aug_rng = np.random.default_rng(cfg.seed + 2)
    bs = min(cfg.batch_size, n)
    k = min(cfg.k, n - 1)
    result = AdaptResult(params, opt, n_classes=C)

    order = batch_rng.permutation(n)
    pos = 0
    epoch = 0
    for it in range(max_iter):
        if pos >= n:
            order = batch_rng.permutation(n)
            pos = 0
            epoch += 1
            if cfg.bank_refresh_epochs and epoch % cfg.bank_refresh_epochs == 0:
                bank = init_bank(params, X)
        idx = order[pos:pos + bs]
        pos += bs
        x = X[idx]
        xw = weak_aug(x, spec, aug_rng)
        xs = strong_aug(x, spec, aug_rng)
        z, p = forward(params, x)
        _, p_weak = forward(params, xw)

        div.update_tau(state, p.max(axis=1))
        div.refresh(state, bank.P)
        part = div.partition(p, state.thresholds, cfg.division_mode)
        nbr_idx, sims = bank.knn_batch(idx[part.inner], k)
        weights = sims if cfg.weighting == "cosine" else np.ones_like(sims)
        lam = lambda_schedule(it, max_iter, cfg.beta_sched)
        li = LossInputs(x=x, inner_mask=part.inner_mask, nbr_probs=bank.P[nbr_idx],
                        nbr_weights=weights, lam=lam, x_strong=xs, p_weak=p_weak, k=k,
                        sep_sign=cfg.sep_sign, air_mode=cfg.air_mode)
        report, grads = loss_gradients(params, li)
        params = sgd_update(params, grads, opt)
        bank.update(idx, z, p)
        result.rows.append(
            [it, report.alr, report.sep, report.air, report.lam, report.total,
             report.inner_count, report.outlier_count, state.tau]
            + list(state.sigma) + list(state.thresholds)
        )
    result.params = params
    return result

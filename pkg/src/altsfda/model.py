"""Two-layer tanh extractor, optional linear bottleneck, linear classifier.

The network is p(x) = softmax(g(h(x))). Gradients are written out by hand;
the adaptation losses only touch the softmax outputs, so backprop starts
from d loss / d probs and runs through the softmax Jacobian.
"""

import hashlib
import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import objectives as obj
from .container import ContainerError, read_container, write_container
from .numerics import LOG_FLOOR, softmax

BACKBONE = ("W1", "b1", "W2", "b2")
HEAD = ("Wb", "bb", "Wc", "bc")

# "reduced_head": head lr ten times smaller than the backbone.
# "conventional": the usual SFDA setup, backbone ten times smaller than the head.
LR_PRESETS = {
    "reduced_head": {"backbone": 1.0, "head": 0.1},
    "conventional": {"backbone": 0.1, "head": 1.0},
}


@dataclass
class ModelParams:
    input_dim: int
    hidden_dim: int
    feature_dim: int
    n_classes: int
    bottleneck_dim: int = 0
    tensors: dict = field(default_factory=dict)
    lr_mult: dict = field(default_factory=lambda: dict(LR_PRESETS["reduced_head"]))

    @property
    def bank_dim(self):
        """Width of the representation stored in the bank (classifier input)."""
        return self.bottleneck_dim or self.feature_dim

    def names(self):
        return list(self.tensors)

    def group_of(self, name):
        return "backbone" if name in BACKBONE else "head"

    def copy(self):
        return ModelParams(
            self.input_dim, self.hidden_dim, self.feature_dim, self.n_classes, self.bottleneck_dim,
            {k: v.copy() for k, v in self.tensors.items()}, dict(self.lr_mult),
        )

    def dims(self):
        return np.array([self.input_dim, self.hidden_dim, self.feature_dim,
                         self.n_classes, self.bottleneck_dim], dtype=np.float64)


def init_params(input_dim, n_classes, hidden_dim=64, feature_dim=32, bottleneck_dim=16,
                seed=0, lr_mult=None):
    rng = np.random.default_rng(seed)

    def glorot(fan_in, fan_out):
        lim = math.sqrt(6.0 / (fan_in + fan_out))
        return rng.uniform(-lim, lim, size=(fan_in, fan_out))

    t = {
        "W1": glorot(input_dim, hidden_dim), "b1": np.zeros(hidden_dim),
        "W2": glorot(hidden_dim, feature_dim), "b2": np.zeros(feature_dim),
    }
    d = feature_dim
    if bottleneck_dim:
        t["Wb"] = glorot(feature_dim, bottleneck_dim)
        t["bb"] = np.zeros(bottleneck_dim)
        d = bottleneck_dim
    t["Wc"] = glorot(d, n_classes)
    t["bc"] = np.zeros(n_classes)
    return ModelParams(input_dim, hidden_dim, feature_dim, n_classes, bottleneck_dim, t,
                       dict(lr_mult or LR_PRESETS["reduced_head"]))


def _forward_cache(params, X):
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != params.input_dim:
        raise ValueError(f"forward: expected inputs with {params.input_dim} columns, got shape {X.shape}")
    t = params.tensors
    a1 = np.tanh(X @ t["W1"] + t["b1"])
    a2 = np.tanh(a1 @ t["W2"] + t["b2"])
    z = a2 @ t["Wb"] + t["bb"] if params.bottleneck_dim else a2
    logits = z @ t["Wc"] + t["bc"]
    p = softmax(logits)
    return {"X": X, "a1": a1, "a2": a2, "z": z, "logits": logits, "p": p}


def forward(params, X):
    """Return (z, p): raw classifier-input features and class probabilities.

    Accepts a single vector or a batch of rows.
    """
    X = np.asarray(X, dtype=np.float64)
    single = X.ndim == 1
    c = _forward_cache(params, X[None, :] if single else X)
    if single:
        return c["z"][0], c["p"][0]
    return c["z"], c["p"]


def predict(params, X):
    return np.argmax(forward(params, X)[1], axis=1)


def _backward(params, cache, dlogits):
    t = params.tensors
    g = {}
    g["Wc"] = cache["z"].T @ dlogits
    g["bc"] = dlogits.sum(axis=0)
    dz = dlogits @ t["Wc"].T
    if params.bottleneck_dim:
        g["Wb"] = cache["a2"].T @ dz
        g["bb"] = dz.sum(axis=0)
        da2 = dz @ t["Wb"].T
    else:
        da2 = dz
    dh2 = da2 * (1.0 - cache["a2"] ** 2)
    g["W2"] = cache["a1"].T @ dh2
    g["b2"] = dh2.sum(axis=0)
    dh1 = (dh2 @ t["W2"].T) * (1.0 - cache["a1"] ** 2)
    g["W1"] = cache["X"].T @ dh1
    g["b1"] = dh1.sum(axis=0)
    return {k: g[k] for k in t}


def _softmax_backward(p, dp):
    return p * (dp - np.sum(dp * p, axis=1, keepdims=True))


@dataclass
class LossInputs:
    """Everything one adaptation step needs besides the parameters.

    nbr_probs / nbr_weights are aligned with the inner rows of ``x`` in order.
    p_weak are weak-view predictions, used only as constant pseudo-labels.
    """
    x: np.ndarray
    inner_mask: np.ndarray
    nbr_probs: np.ndarray
    nbr_weights: np.ndarray
    lam: float = 1.0
    x_strong: np.ndarray = None
    p_weak: np.ndarray = None
    k: int = None
    sep_sign: str = "dispersion"
    air_mode: str = "hard"


def _evaluate(params, li, with_grad):
    inner = np.asarray(li.inner_mask, bool)
    outlier = ~inner
    clean = _forward_cache(params, li.x)
    p = clean["p"]
    alr = obj.alr_loss(p[inner], li.nbr_probs, li.nbr_weights, li.k)
    sep = obj.sep_loss(p, inner, li.sep_sign) if inner.any() else 0.0
    air = 0.0
    strong = None
    if outlier.any():
        if li.x_strong is None or li.p_weak is None:
            raise ValueError("outlier samples present but no weak/strong views supplied")
        strong = _forward_cache(params, li.x_strong)
        air = obj.air_loss(li.p_weak, strong["p"], outlier, li.air_mode)
    for name, val in (("alr", alr), ("sep", sep), ("air", air)):
        if not math.isfinite(val):
            raise FloatingPointError(f"non-finite loss term {name}")
    report = obj.total_loss(alr, sep, air, li.lam, int(inner.sum()), int(outlier.sum()))
    if not with_grad:
        return report, None

    dp = np.zeros_like(p)
    if inner.any():
        dp[inner] += obj.alr_grad(p[inner], li.nbr_probs, li.nbr_weights, li.k)
        dp += li.lam * obj.sep_grad(p, inner, li.sep_sign)
    grads = _backward(params, clean, _softmax_backward(p, dp))
    if strong is not None:
        dq = obj.air_grad(li.p_weak, strong["p"], outlier, li.air_mode)
        g2 = _backward(params, strong, _softmax_backward(strong["p"], dq))
        for k in grads:
            grads[k] += g2[k]
    return report, grads


def loss_value(params, li):
    return _evaluate(params, li, with_grad=False)[0]


def loss_gradients(params, li):
    """Return (LossReport, grads) for the combined objective alr + air + lam * sep."""
    return _evaluate(params, li, with_grad=True)


def supervised_loss(params, X, y, smoothing=0.1, with_grad=True):
    """Mean cross-entropy against (optionally smoothed) one-hot labels."""
    cache = _forward_cache(params, X)
    p = cache["p"]
    C = params.n_classes
    target = np.full_like(p, smoothing / C)
    target[np.arange(len(y)), np.asarray(y)] += 1.0 - smoothing
    loss = float(-np.mean(np.sum(target * np.log(np.maximum(p, LOG_FLOOR)), axis=1)))
    if not with_grad:
        return loss, None
    dlogits = (p - target) / len(y)
    return loss, _backward(params, cache, dlogits)


@dataclass
class OptimizerState:
    lr: float = 0.001
    momentum: float = 0.9
    weight_decay: float = 0.005
    max_iter: int = 1
    t: int = 0
    buffers: dict = field(default_factory=dict)


def sgd_update(params, grads, opt):
    """One step of heavy-ball SGD; weight decay is folded into the gradient first."""
    new = params.copy()
    for name, theta in params.tensors.items():
        g = np.asarray(grads[name], dtype=np.float64)
        if g.shape != theta.shape:
            raise ValueError(f"sgd_update: gradient for {name} has shape {g.shape}, expected {theta.shape}")
        d = g + opt.weight_decay * theta if opt.weight_decay else g
        buf = opt.buffers.get(name)
        buf = d.copy() if buf is None else opt.momentum * buf + d
        opt.buffers[name] = buf
        step = opt.lr * params.lr_mult[params.group_of(name)]
        new.tensors[name] = theta - step * buf
    opt.t = min(opt.t + 1, opt.max_iter)
    return new


def lambda_schedule(it, max_iter, beta):
    """Trade-off weight (1 + 10 * it / max_iter) ** -beta."""
    if max_iter <= 0:
        raise ValueError("lambda_schedule: max_iter must be positive")
    if not 0 <= it <= max_iter:
        raise ValueError(f"lambda_schedule: iter {it} outside [0, {max_iter}]")
    return (1.0 + 10.0 * it / max_iter) ** (-beta)


def config_hash(cfg_dict):
    blob = json.dumps(cfg_dict, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def save_checkpoint(path, params, opt, meta=None):
    """Write params + optimizer state to ``path`` and a JSON sidecar to ``path + '.json'``."""
    tensors = {"dims": params.dims(),
               "lr_mult": np.array([params.lr_mult["backbone"], params.lr_mult["head"]])}
    for k, v in params.tensors.items():
        tensors["param/" + k] = v
    tensors["opt/scalars"] = np.array([opt.lr, opt.momentum, opt.weight_decay, opt.max_iter, opt.t],
                                      dtype=np.float64)
    for k, v in opt.buffers.items():
        tensors["opt/momentum/" + k] = v
    write_container(path, "checkpoint", tensors)
    sidecar = {"format": "altsfda-checkpoint", "iteration": opt.t}
    sidecar.update(meta or {})
    with open(str(path) + ".json", "w") as fh:
        json.dump(sidecar, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_checkpoint(path):
    _, t = read_container(path, expect_kind="checkpoint")
    try:
        dims = [int(v) for v in t["dims"]]
        input_dim, hidden, feat, C, bott = dims
    except (KeyError, ValueError) as e:
        raise ContainerError(f"{path}: bad dimension header") from e
    params = init_params(input_dim, C, hidden, feat, bott, seed=0)
    for name, ref in params.tensors.items():
        arr = t.get("param/" + name)
        if arr is None or arr.shape != ref.shape:
            got = None if arr is None else arr.shape
            raise ContainerError(f"{path}: tensor {name} has shape {got}, header implies {ref.shape}")
        params.tensors[name] = arr
    extra = {k for k in t if k.startswith("param/")} - {"param/" + n for n in params.tensors}
    if extra:
        raise ContainerError(f"{path}: unexpected tensors {sorted(extra)}")
    params.lr_mult = {"backbone": float(t["lr_mult"][0]), "head": float(t["lr_mult"][1])}
    lr, mom, wd, max_iter, it = t["opt/scalars"]
    opt = OptimizerState(lr=float(lr), momentum=float(mom), weight_decay=float(wd),
                         max_iter=int(max_iter), t=int(it))
    for k, v in t.items():
        if k.startswith("opt/momentum/"):
            opt.buffers[k[len("opt/momentum/"):]] = v
    return params, opt


def read_sidecar(path):
    with open(str(path) + ".json") as fh:
        return json.load(fh)

"""Synthetic domain pairs, vector augmentations, and the expansion checker."""

import csv
import itertools
import math
from dataclasses import dataclass

import numpy as np


@dataclass
class Dataset:
    inputs: np.ndarray
    labels: np.ndarray
    domain: str = "source"
    seed: int = 0

    def __len__(self):
        return self.inputs.shape[0]

    @property
    def n_classes(self):
        return int(self.labels.max()) + 1

    def unlabeled(self):
        """Inputs only. Adaptation code receives this, never the labels."""
        X = self.inputs.copy()
        X.setflags(write=False)
        return X

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow([f"x{j}" for j in range(self.inputs.shape[1])] + ["label", "domain"])
            for x, y in zip(self.inputs, self.labels):
                w.writerow([repr(float(v)) for v in x] + [int(y), self.domain])


def _rotate(X, degrees, center):
    th = math.radians(degrees)
    R = np.array([[math.cos(th), -math.sin(th)], [math.sin(th), math.cos(th)]])
    out = X.copy()
    out[:, :2] = (X[:, :2] - center) @ R.T + center
    return out


def gen_two_moons(n_per_class, noise_sd=0.1, rotation_degrees=0.0, seed=0, domain=None):
    """Two interleaving half circles, rotated about the centroid of the draw.

    Class 0 lies on (cos t, sin t), class 1 on (1 - cos t, 0.5 - sin t), t in [0, pi].
    """
    if n_per_class < 1 or noise_sd < 0:
        raise ValueError("gen_two_moons: need n_per_class >= 1 and noise_sd >= 0")
    rng = np.random.default_rng(seed)
    t0 = rng.uniform(0.0, math.pi, n_per_class)
    t1 = rng.uniform(0.0, math.pi, n_per_class)
    upper = np.column_stack([np.cos(t0), np.sin(t0)])
    lower = np.column_stack([1.0 - np.cos(t1), 0.5 - np.sin(t1)])
    X = np.vstack([upper, lower])
    X = X + noise_sd * rng.standard_normal(X.shape)
    y = np.repeat([0, 1], n_per_class)
    if rotation_degrees % 360.0:
        X = _rotate(X, rotation_degrees, X.mean(axis=0))
    return Dataset(X, y, domain or ("target" if rotation_degrees else "source"), seed)


def class_means(C, class_separation, dim=2):
    ang = 2.0 * math.pi * np.arange(C) / C
    mu = np.zeros((C, dim))
    mu[:, 0] = class_separation * np.cos(ang)
    mu[:, 1] = class_separation * np.sin(ang)
    return mu


def gen_gaussian_mixture(C, n_per_class, class_separation=3.0, target_shift_vector=None,
                         target_rotation=0.0, seed=0, dim=2):
    """Isotropic unit-variance classes with means evenly spaced on a circle.

    The target is an independent draw from the same mixture, rotated about the
    origin in the first coordinate plane and then shifted.
    """
    if C < 2:
        raise ValueError("gen_gaussian_mixture: need at least 2 classes")
    if dim < 2:
        raise ValueError("gen_gaussian_mixture: need dim >= 2")
    rng = np.random.default_rng(seed)
    mu = class_means(C, class_separation, dim)
    y = np.repeat(np.arange(C), n_per_class)
    Xs = mu[y] + rng.standard_normal((y.size, dim))
    Xt = mu[y] + rng.standard_normal((y.size, dim))
    if target_rotation % 360.0:
        Xt = _rotate(Xt, target_rotation, np.zeros(2))
    if target_shift_vector is not None:
        Xt = Xt + np.asarray(target_shift_vector, dtype=np.float64)
    return Dataset(Xs, y.copy(), "source", seed), Dataset(Xt, y.copy(), "target", seed)


@dataclass
class AugmentSpec:
    """Noise levels are multiples of ``ref_std`` (per-feature scale of the data)."""
    weak_sd: float = 0.05
    strong_sd: float = 0.15
    mask_frac: float = 0.1
    scale_low: float = 0.9
    scale_high: float = 1.1
    ref_std: object = 1.0

    def __post_init__(self):
        if not 0.0 <= self.mask_frac < 1.0:
            raise ValueError(f"mask fraction must lie in [0, 1), got {self.mask_frac}")
        if self.weak_sd < 0 or self.strong_sd < 0:
            raise ValueError("augmentation magnitudes must be non-negative")
        if self.scale_low > self.scale_high:
            raise ValueError("scale range is empty")

    def fitted(self, X):
        std = np.asarray(X, dtype=np.float64).std(axis=0)
        return AugmentSpec(self.weak_sd, self.strong_sd, self.mask_frac,
                           self.scale_low, self.scale_high, np.where(std > 0, std, 1.0))


def weak_aug(x, spec, rng):
    x = np.asarray(x, dtype=np.float64)
    if spec.weak_sd == 0:
        return x.copy()
    return x + spec.weak_sd * np.asarray(spec.ref_std) * rng.standard_normal(x.shape)


def n_masked(dim, frac):
    return int(math.floor(frac * dim + 0.5))


def strong_aug(x, spec, rng):
    """Jitter, random global scale, then zero a random subset of coordinates.

    Works row-wise on a batch; each row gets its own scale and mask.
    """
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    X = np.atleast_2d(x)
    out = X + spec.strong_sd * np.asarray(spec.ref_std) * rng.standard_normal(X.shape)
    scale = rng.uniform(spec.scale_low, spec.scale_high, size=(X.shape[0], 1))
    out = out * scale
    k = n_masked(X.shape[1], spec.mask_frac)
    if k:
        for row in out:
            row[rng.choice(X.shape[1], size=k, replace=False)] = 0.0
    return out[0] if single else out


@dataclass
class ExpansionResult:
    subset_mass: float
    exterior_mass: float
    exterior: np.ndarray
    required: float = None
    satisfied: bool = None

    @property
    def ratio(self):
        """Exterior mass over subset mass."""
        return self.exterior_mass / self.subset_mass


def neighbour_matrix(X, r):
    """A[i, j] is True when the r-balls around points i and j intersect."""
    X = np.asarray(X, dtype=np.float64)
    D = np.sqrt(((X[:, None, :] - X[None, :, :]) ** 2).sum(-1))
    return D <= 2.0 * r


def expansion_check(X, subset, r, q=None, xi=None, adjacency=None):
    """Mass of N(S) minus S under the uniform empirical measure.

    When q and xi are given, also reports whether the constant-expansion
    inequality P[N(S)\\S] >= min(xi, P[S]) holds for this S (it is vacuous
    when P[S] < q).
    """
    S = np.unique(np.asarray(subset, dtype=np.int64))
    if S.size == 0:
        raise ValueError("expansion_check: empty subset")
    A = neighbour_matrix(X, r) if adjacency is None else adjacency
    N = A.shape[0]
    reach = A[S].any(axis=0)
    reach[S] = False
    ext = np.flatnonzero(reach)
    res = ExpansionResult(S.size / N, ext.size / N, ext)
    if q is not None and xi is not None:
        res.required = min(xi, res.subset_mass)
        res.satisfied = res.subset_mass < q or res.exterior_mass >= res.required
    return res


def constant_expansion_holds(X, r, q, xi, max_points=16):
    """Exhaustively test (q, xi)-constant-expansion on every non-empty proper subset.

    The full set is skipped: it has no exterior, so including it would make
    the property fail for every point set. Returns (holds, first violating
    subset or None).
    """
    X = np.asarray(X, dtype=np.float64)
    N = X.shape[0]
    if N > max_points:
        raise ValueError(f"exhaustive expansion check limited to {max_points} points")
    A = neighbour_matrix(X, r)
    for size in range(1, N):
        for S in itertools.combinations(range(N), size):
            res = expansion_check(X, S, r, q, xi, adjacency=A)
            if not res.satisfied:
                return False, S
    return True, None

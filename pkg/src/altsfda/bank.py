"""Memory bank of normalised target features and predictions, with exact KNN."""

import numpy as np

from .container import ContainerError, read_container, write_container
from .model import forward
from .numerics import l2_normalize

# Ranking resolution. Similarities that agree to this many decimals count as
# tied, so the neighbour order does not depend on floating-point summation order.
RANK_DECIMALS = 10


class FeatureBank:
    """F holds unit feature rows, P the matching softmax rows; row i is dataset sample i."""

    def __init__(self, F, P, normalized=False):
        F = np.asarray(F, dtype=np.float64)
        P = np.asarray(P, dtype=np.float64)
        if F.shape[0] != P.shape[0]:
            raise ValueError(f"bank: F has {F.shape[0]} rows but P has {P.shape[0]}")
        if F.shape[0] == 0:
            raise ValueError("bank: empty")
        # stored rows are already unit; renormalising would perturb the last bit
        self.F = F.copy() if normalized else l2_normalize(F)
        self.P = P.copy()

    @property
    def size(self):
        return self.F.shape[0]

    def update(self, indices, z_batch, p_batch):
        idx = np.asarray(indices, dtype=np.int64).ravel()
        if idx.size and (idx.min() < 0 or idx.max() >= self.size):
            bad = idx[(idx < 0) | (idx >= self.size)][0]
            raise IndexError(f"bank: index {bad} out of range for {self.size} rows")
        if np.unique(idx).size != idx.size:
            raise ValueError("bank: duplicate indices in one update")
        self.F[idx] = l2_normalize(np.atleast_2d(z_batch))
        self.P[idx] = np.atleast_2d(p_batch)

    def similarities(self, i):
        return self.F @ self.F[i]

    def knn(self, i, k):
        """K most similar rows to row i, excluding i; ties go to the smaller index."""
        n = self.size
        if not 1 <= k <= n - 1:
            raise ValueError(f"knn: K={k} outside [1, {n - 1}]")
        sims = self.similarities(i)
        sims[i] = -np.inf
        # lexsort: last key primary; stable on index for equal similarity
        order = np.lexsort((np.arange(n), -np.round(sims, RANK_DECIMALS)))[:k]
        return order, np.clip(sims[order], -1.0, 1.0)

    def knn_batch(self, rows, k):
        """Vectorised knn for several query rows; same result and tie rule as ``knn``."""
        rows = np.asarray(rows, dtype=np.int64)
        n = self.size
        if not 1 <= k <= n - 1:
            raise ValueError(f"knn: K={k} outside [1, {n - 1}]")
        if rows.size == 0:
            return np.zeros((0, k), np.int64), np.zeros((0, k))
        sims = self.F[rows] @ self.F.T
        sims[np.arange(rows.size), rows] = -np.inf
        # stable sort on -sims keeps ascending index order among equal values
        order = np.argsort(-np.round(sims, RANK_DECIMALS), axis=1, kind="stable")[:, :k]
        return order, np.clip(np.take_along_axis(sims, order, axis=1), -1.0, 1.0)

    def save(self, path):
        write_container(path, "bank", {"F": self.F, "P": self.P})

    @classmethod
    def load(cls, path):
        _, t = read_container(path, expect_kind="bank")
        if "F" not in t or "P" not in t:
            raise ContainerError(f"{path}: bank container needs F and P")
        return cls(t["F"], t["P"], normalized=True)


def init_bank(params, X):
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] == 0:
        raise ValueError("init_bank: empty dataset")
    z, p = forward(params, X)
    return FeatureBank(z, p)


def brute_force_knn(F, i, k):
    """Reference O(N) scan with explicit tie handling, used by tests and audits."""
    cands = []
    for j in range(F.shape[0]):
        if j == i:
            continue
        s = 0.0
        for a, b in zip(F[i], F[j]):
            s += a * b
        cands.append((-float(np.round(s, RANK_DECIMALS)), j, s))
    cands.sort()
    return [j for _, j, _ in cands[:k]], [s for _, _, s in cands[:k]]

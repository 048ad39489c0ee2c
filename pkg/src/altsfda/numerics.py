"""Small deterministic kernels shared by the rest of the package.

Everything works in float64. Functions accept a single vector or a batch
of row vectors where that is natural (softmax, l2_normalize).
"""

import numpy as np
from scipy.stats import rankdata

EPS_NORM = 1e-12
LOG_FLOOR = 1e-12


def _as_float(a):
    return np.asarray(a, dtype=np.float64)


def softmax(logits):
    """Row-wise softmax with max-subtraction."""
    z = _as_float(logits)
    if not np.all(np.isfinite(z)):
        bad = np.argwhere(~np.isfinite(z))[0].tolist()
        raise ValueError(f"softmax: non-finite logit at position {bad}")
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def l2_normalize(v):
    """Scale a vector (or each row of a matrix) to unit Euclidean norm."""
    v = _as_float(v)
    norms = np.linalg.norm(v, axis=-1, keepdims=True)
    small = norms[..., 0] <= EPS_NORM
    if np.any(small):
        if v.ndim == 1:
            raise ValueError("l2_normalize: vector norm below 1e-12")
        row = int(np.flatnonzero(small)[0])
        raise ValueError(f"l2_normalize: row {row} has norm below 1e-12")
    return v / norms


def cosine_similarity(u, v):
    u = _as_float(u)
    v = _as_float(v)
    nu = np.linalg.norm(u)
    nv = np.linalg.norm(v)
    if nu <= EPS_NORM or nv <= EPS_NORM:
        raise ValueError("cosine_similarity: zero vector")
    # fixed operand order keeps the result exactly symmetric
    num = float(np.dot(u, v))
    return float(np.clip(num / (nu * nv), -1.0, 1.0))


def cross_entropy(target, probs):
    """-log probs[target] for an integer target, -sum(target * log probs) for a soft one."""
    probs = _as_float(probs)
    if np.ndim(target) == 0:
        t = int(target)
        if not 0 <= t < probs.shape[-1]:
            raise ValueError(f"cross_entropy: class {t} out of range for {probs.shape[-1]} classes")
        return float(-np.log(max(probs[t], LOG_FLOOR)))
    target = _as_float(target)
    if target.shape != probs.shape:
        raise ValueError(f"cross_entropy: shape mismatch {target.shape} vs {probs.shape}")
    return float(-np.sum(target * np.log(np.maximum(probs, LOG_FLOOR))))


def spearman_rank_corr(a, b):
    """Spearman's rho with average ranks for ties."""
    a = _as_float(a)
    b = _as_float(b)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError("spearman_rank_corr: inputs must be 1-D and of equal length")
    if a.size < 2:
        raise ValueError("spearman_rank_corr: need at least 2 observations")
    ra = rankdata(a)
    rb = rankdata(b)
    ra -= ra.mean()
    rb -= rb.mean()
    den = np.sqrt(np.sum(ra * ra) * np.sum(rb * rb))
    if den == 0.0:
        raise ValueError("spearman_rank_corr: undefined for a constant sequence")
    return float(np.clip(np.sum(ra * rb) / den, -1.0, 1.0))


def pca_project_2d(X, return_variance=False):
    """Project rows of X onto their two leading principal directions.

    Component signs are fixed so the largest-magnitude loading is positive,
    which keeps output reproducible across LAPACK builds.
    """
    X = _as_float(X)
    if X.ndim != 2 or X.shape[1] < 2:
        raise ValueError("pca_project_2d: need a matrix with at least 2 columns")
    if X.shape[0] < 2:
        raise ValueError("pca_project_2d: need at least 2 rows")
    Xc = X - X.mean(axis=0)
    _, s, vt = np.linalg.svd(Xc, full_matrices=False)
    comps = vt[:2]
    for k in range(comps.shape[0]):
        if comps[k, np.argmax(np.abs(comps[k]))] < 0:
            comps[k] = -comps[k]
    Y = Xc @ comps.T
    if return_variance:
        var = s**2 / max(X.shape[0] - 1, 1)
        return Y, var[:2]
    return Y

"""Figures written next to the CSV reports. Agg backend only."""

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

RC = {
    "font.size": 9,
    "axes.titlesize": 10,
    "axes.labelsize": 9,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "savefig.dpi": 120,
    "savefig.bbox": "tight",
}

# PNG metadata off so repeated runs write identical files
_META = {"Software": None}


def _save(fig, path):
    fig.savefig(path, metadata=_META)
    plt.close(fig)
    return path


def plot_pca(coords, labels, path, title="bank features (PCA)"):
    with plt.rc_context(RC):
        fig, ax = plt.subplots(figsize=(4, 3.4))
        labels = np.asarray(labels)
        for c in np.unique(labels):
            m = labels == c
            ax.scatter(coords[m, 0], coords[m, 1], s=6, alpha=0.7, label=f"class {c}")
        ax.set_xlabel("PC 1")
        ax.set_ylabel("PC 2")
        ax.set_title(title)
        ax.legend(frameon=False, markerscale=2)
        return _save(fig, path)


def plot_confusion(cm, path, title="confusion matrix"):
    cm = np.asarray(cm)
    with plt.rc_context(RC):
        fig, ax = plt.subplots(figsize=(3.2, 3))
        rows = cm.sum(axis=1, keepdims=True)
        norm = cm / np.maximum(rows, 1)
        ax.imshow(norm, cmap="Blues", vmin=0, vmax=1)
        for i in range(cm.shape[0]):
            for j in range(cm.shape[1]):
                ax.text(j, i, str(cm[i, j]), ha="center", va="center",
                        color="white" if norm[i, j] > 0.5 else "black", fontsize=8)
        ax.set_xlabel("predicted")
        ax.set_ylabel("true")
        ax.set_xticks(range(cm.shape[1]))
        ax.set_yticks(range(cm.shape[0]))
        ax.set_title(title)
        return _save(fig, path)


def plot_metrics(header, rows, path):
    """Loss terms, partition sizes and tau against iteration."""
    a = np.asarray(rows, dtype=np.float64)
    col = {h: i for i, h in enumerate(header)}
    it = a[:, col["iter"]]
    with plt.rc_context(RC):
        fig, axes = plt.subplots(1, 3, figsize=(10, 2.8))
        for name in ("alr", "air", "total"):
            axes[0].plot(it, a[:, col[name]], lw=1, label=name)
        axes[0].set_title("loss terms")
        axes[0].legend(frameon=False)
        axes[1].plot(it, a[:, col["inner_count"]], lw=1, label="inner")
        axes[1].plot(it, a[:, col["outlier_count"]], lw=1, label="outlier")
        axes[1].set_title("partition sizes")
        axes[1].legend(frameon=False)
        axes[2].plot(it, a[:, col["tau"]], lw=1, color="k")
        axes[2].set_title("tau")
        for ax in axes:
            ax.set_xlabel("iteration")
        return _save(fig, path)


def plot_ablation(names, means, sds, path, reference=None):
    with plt.rc_context(RC):
        fig, ax = plt.subplots(figsize=(4, 3))
        x = np.arange(len(names))
        ax.bar(x, means, yerr=sds, capsize=3, color="0.6")
        if reference is not None:
            ax.axhline(reference, ls="--", lw=1, color="k", label="source only")
            ax.legend(frameon=False, loc="lower right")
        ax.set_xticks(x)
        ax.set_xticklabels(names)
        ax.set_ylabel("target accuracy")
        lo = min(min(means), reference if reference is not None else 1.0)
        ax.set_ylim(max(0.0, lo - 0.1), 1.0)
        return _save(fig, path)

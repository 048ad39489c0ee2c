"""The pretrain / adapt / analyze / ablate commands as library calls.

Each command writes into ``cfg.out_dir`` (created if missing) and returns a
dict describing what it produced.
"""

import csv
import os

import numpy as np

from . import analysis, plotting
from .config import PRESETS, AdaptConfig
from .data import AugmentSpec
from .harness import adapt, make_datasets, pretrain
from .model import config_hash, load_checkpoint, read_sidecar, save_checkpoint

SOURCE_CKPT = "source.ckpt"
ADAPTED_CKPT = "adapted.ckpt"


def _out(cfg):
    os.makedirs(cfg.out_dir, exist_ok=True)
    return cfg.out_dir


def _meta(cfg, kind, **extra):
    m = {"kind": kind, "seed": cfg.seed, "config_hash": config_hash(cfg.hashable_dict()),
         "config": cfg.to_dict()}
    m.update(extra)
    return m


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def _f(v):
    return repr(float(v))


def cmd_pretrain(cfg):
    out = _out(cfg)
    source, target = make_datasets(cfg)
    params, opt = pretrain(cfg, source)
    src_acc = analysis.evaluate(params, source.inputs, source.labels).accuracy
    tgt_acc = analysis.evaluate(params, target.inputs, target.labels).accuracy
    path = os.path.join(out, SOURCE_CKPT)
    save_checkpoint(path, params, opt, _meta(cfg, "source", source_accuracy=src_acc,
                                             target_accuracy=tgt_acc))
    with open(os.path.join(out, "source_report.txt"), "w") as fh:
        fh.write(f"source_accuracy={src_acc!r}\n")
        fh.write(f"target_accuracy_source_only={tgt_acc!r}\n")
    cfg.save(os.path.join(out, "config.json"))
    return {"checkpoint": path, "source_accuracy": src_acc, "target_accuracy": tgt_acc}


def cmd_adapt(cfg, checkpoint=None):
    """Adapt a source checkpoint to the target domain (pretraining first if none is given)."""
    out = _out(cfg)
    if checkpoint is None:
        checkpoint = cmd_pretrain(cfg)["checkpoint"]
    params, _ = load_checkpoint(checkpoint)
    source, target = make_datasets(cfg)
    if params.input_dim != target.inputs.shape[1] or params.n_classes != target.n_classes:
        raise ValueError("checkpoint dimensions do not match the configured dataset")
    before = analysis.evaluate(params, target.inputs, target.labels)
    res = adapt(cfg, params, target.unlabeled())
    after = analysis.evaluate(res.params, target.inputs, target.labels)

    with open(os.path.join(out, "metrics.csv"), "w", newline="") as fh:
        fh.write(res.metrics_csv())
    ckpt = os.path.join(out, ADAPTED_CKPT)
    save_checkpoint(ckpt, res.params, res.opt,
                    _meta(cfg, "adapted", source_checkpoint=os.path.abspath(checkpoint),
                          target_accuracy=after.accuracy))
    cfg.save(os.path.join(out, "config.json"))
    with open(os.path.join(out, "summary.txt"), "w") as fh:
        fh.write(f"iterations={len(res.rows)}\n")
        fh.write(f"source_only_accuracy={before.accuracy!r}\n")
        fh.write(f"adapted_accuracy={after.accuracy!r}\n")
        fh.write("per_class_accuracy=" + ",".join(_f(v) for v in after.per_class) + "\n")
    if res.rows:
        plotting.plot_metrics(res.header(), res.rows, os.path.join(out, "metrics.png"))
    return {"checkpoint": ckpt, "source_only_accuracy": before.accuracy,
            "adapted_accuracy": after.accuracy, "iterations": len(res.rows)}


def cmd_analyze(cfg, checkpoint, tag=None, reference="label", agreement_mode="all",
                k_list=(1, 2, 3, 4, 5, 6, 7), samples_per_point=8, xi=0.5):
    """Diagnostics for one checkpoint on the configured target set.

    Writes <tag>_agreement.csv, <tag>_cosine.csv, <tag>_confusion.csv,
    <tag>_pca.csv, <tag>_summary.txt and two figures.
    """
    out = _out(cfg)
    tag = tag or os.path.splitext(os.path.basename(checkpoint))[0]
    params, _ = load_checkpoint(checkpoint)
    _, target = make_datasets(cfg)
    rep = analysis.diagnose(params, target.inputs, target.labels, k_list, reference, agreement_mode)
    spec = AugmentSpec(cfg.weak_sd, cfg.strong_sd, cfg.mask_frac, cfg.scale_low,
                       cfg.scale_high).fitted(target.inputs)
    mu = analysis.consistency_regularizer_estimate(params, target.inputs, spec, samples_per_point,
                                                   np.random.default_rng(cfg.seed + 3))
    bound = analysis.verify_error_bound(1.0 - rep.accuracy, mu, xi)

    p = lambda name: os.path.join(out, f"{tag}_{name}")  # noqa: E731
    _write_csv(p("agreement.csv"), ["k", "ratio"], [[k, _f(v)] for k, v in rep.agreement.items()])
    _write_csv(p("cosine.csv"), ["same_class", "across_class", "ratio"],
               [[_f(rep.same_class_cos), _f(rep.across_class_cos), _f(rep.similarity_ratio)]])
    C = rep.confusion.shape[0]
    _write_csv(p("confusion.csv"), ["true"] + [f"pred_{c}" for c in range(C)],
               [[c] + [int(v) for v in rep.confusion[c]] for c in range(C)])
    _write_csv(p("pca.csv"), ["pc1", "pc2", "label"],
               [[_f(a), _f(b), int(y)] for (a, b), y in zip(rep.pca, target.labels)])
    with open(p("summary.txt"), "w") as fh:
        fh.write(f"checkpoint={os.path.basename(checkpoint)}\n")
        fh.write(f"accuracy={rep.accuracy!r}\n")
        fh.write("per_class_accuracy=" + ",".join(_f(v) for v in rep.per_class) + "\n")
        fh.write(f"same_class_cosine={rep.same_class_cos!r}\n")
        fh.write(f"across_class_cosine={rep.across_class_cos!r}\n")
        fh.write(f"regularizer_estimate={mu!r}\n")
        fh.write(f"error_bound={bound.bound!r}\n")
        fh.write(f"error_bound_holds={bound.holds}\n")
    plotting.plot_pca(rep.pca, target.labels, p("pca.png"))
    plotting.plot_confusion(rep.confusion, p("confusion.png"))
    return {"report": rep, "regularizer": mu, "bound": bound, "tag": tag}


def cmd_ablate(cfg, seeds=(0, 1, 2, 3, 4), presets=tuple(PRESETS)):
    """Run every preset over the given seeds; write ablation.csv with mean and sd per preset."""
    out = _out(cfg)
    acc = {name: [] for name in presets}
    source_only = []
    for seed in seeds:
        base = cfg.replace(seed=seed)
        source, target = make_datasets(base)
        params, _ = pretrain(base, source)
        source_only.append(analysis.evaluate(params, target.inputs, target.labels).accuracy)
        for name in presets:
            res = adapt(base.with_preset(name), params, target.unlabeled())
            acc[name].append(analysis.evaluate(res.params, target.inputs, target.labels).accuracy)
    header = ["preset", "mean", "sd", "n"] + [f"seed_{s}" for s in seeds]
    rows = []
    for name in presets:
        a = np.array(acc[name])
        rows.append([name, _f(a.mean()), _f(a.std(ddof=1) if a.size > 1 else 0.0), a.size]
                    + [_f(v) for v in a])
    _write_csv(os.path.join(out, "ablation.csv"), header, rows)
    with open(os.path.join(out, "ablation_summary.txt"), "w") as fh:
        fh.write(f"source_only_mean={float(np.mean(source_only))!r}\n")
        fh.write("source_only=" + ",".join(_f(v) for v in source_only) + "\n")
    plotting.plot_ablation(list(presets), [float(np.mean(acc[n])) for n in presets],
                           [float(np.std(acc[n])) for n in presets],
                           os.path.join(out, "ablation.png"), reference=float(np.mean(source_only)))
    return {"accuracy": acc, "source_only": source_only}


def config_from_checkpoint(checkpoint):
    return AdaptConfig.from_dict(read_sidecar(checkpoint)["config"])

"""Run configuration: one flat dataclass, JSON on disk, presets for ablations."""

import dataclasses
import json
from dataclasses import dataclass, field, fields

from .model import LR_PRESETS

# (neighbour weighting, division on). "baseline" is plain neighbour clustering
# with unit weights over the whole batch; division presets keep the configured
# mode, falling back to "literal" when the config has it switched off.
PRESETS = {
    "baseline": ("uniform", False),
    "alr": ("cosine", False),
    "air": ("uniform", True),
    "full": ("cosine", True),
}

WEIGHTINGS = ("cosine", "uniform")


@dataclass
class AdaptConfig:
    # data
    dataset: str = "two_moons"
    n_per_class: int = 150
    noise_sd: float = 0.05
    rotation: float = 30.0
    n_classes: int = 3
    class_separation: float = 3.0
    shift: list = field(default_factory=lambda: [0.0, 0.0])
    input_dim: int = 2
    seed: int = 0
    # model
    hidden_dim: int = 64
    feature_dim: int = 32
    bottleneck_dim: int = 16
    # source training
    pretrain_iters: int = 1500
    pretrain_lr: float = 0.05
    pretrain_batch: int = 64
    label_smoothing: float = 0.1
    # adaptation optimizer
    lr: float = 0.0001
    momentum: float = 0.9
    weight_decay: float = 0.005
    lr_preset: str = "reduced_head"
    # method
    k: int = 3
    alpha: float = 0.9
    beta_sched: float = 2.0
    tau_aggregate: str = "max"
    division_mode: str = "prose"
    air_mode: str = "hard"
    sep_sign: str = "dispersion"
    weighting: str = "cosine"
    bank_refresh_epochs: int = 0
    # loop
    batch_size: int = 64
    epochs: int = 30
    max_iter: int = None
    # augmentation, as multiples of the per-feature data std
    weak_sd: float = 0.05
    strong_sd: float = 0.15
    mask_frac: float = 0.1
    scale_low: float = 0.9
    scale_high: float = 1.1
    out_dir: str = "runs/default"

    def __post_init__(self):
        if self.lr_preset not in LR_PRESETS:
            raise ValueError(f"unknown lr preset {self.lr_preset!r}")
        if self.weighting not in WEIGHTINGS:
            raise ValueError(f"unknown weighting {self.weighting!r}")
        if self.dataset not in ("two_moons", "gaussian_mixture"):
            raise ValueError(f"unknown dataset {self.dataset!r}")

    def to_dict(self):
        return dataclasses.asdict(self)

    def hashable_dict(self):
        d = self.to_dict()
        d.pop("out_dir")
        return d

    def replace(self, **kw):
        return dataclasses.replace(self, **kw)

    def with_preset(self, name):
        if name not in PRESETS:
            raise ValueError(f"unknown preset {name!r}; expected one of {sorted(PRESETS)}")
        weighting, divide = PRESETS[name]
        if not divide:
            mode = "none"
        else:
            mode = self.division_mode if self.division_mode != "none" else "literal"
        return self.replace(weighting=weighting, division_mode=mode)

    def save(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")

    @classmethod
    def from_dict(cls, d):
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def _coerce(name, raw):
    f = {f.name: f for f in fields(AdaptConfig)}.get(name)
    if f is None:
        raise ValueError(f"unknown config key {name!r}")
    default = getattr(AdaptConfig(), name)
    if isinstance(default, list) or name == "max_iter":
        return json.loads(raw)
    if isinstance(default, bool):
        return raw.lower() in ("1", "true", "yes")
    if isinstance(default, int):
        return int(raw)
    if isinstance(default, float):
        return float(raw)
    return raw


def apply_overrides(cfg, pairs):
    """Apply ``key=value`` strings on top of cfg."""
    kw = {}
    for item in pairs or ():
        if "=" not in item:
            raise ValueError(f"override {item!r} is not key=value")
        k, v = item.split("=", 1)
        kw[k.strip()] = _coerce(k.strip(), v.strip())
    return cfg.replace(**kw) if kw else cfg

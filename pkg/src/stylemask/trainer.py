"""Optimization of the attribute mask matrix against frozen backends.

Each step samples a source code, a reference code, and a target attribute
set; renders source, reference, and edited images; and descends the total
loss with respect to the matrix only.  Columns of non-editable channels
receive zero gradient and stay bitwise at their initialization values.

Per-step randomness derives from ``(seed, step)``, so a run resumed from a
checkpoint is bitwise identical to an uninterrupted one.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO

import numpy as np
import torch
import yaml

from .backends.base import Backends, BackendManifest
from .errors import InvalidInputError
from .serialization import decode_array as _decode_array, encode_array as _encode_array
from .losses import (
    LossReport,
    LossWeights,
    background_loss_t,
    background_mask,
    preservation_loss_t,
    probability_loss_t,
    total_loss_t,
    transfer_loss_t,
)
from .stylespace import MaskMatrix, attribute_mask_t, control_probabilities_t, edit_style_code_t


class NonFiniteLossError(RuntimeError):
    """Raised when a training step produces a non-finite loss; carries the
    offending step and loss parts for diagnosis."""

    def __init__(self, step: int, parts: dict):
        self.step = step
        self.parts = parts
        super().__init__(f"non-finite loss at step {step}: {parts}")


# ---------------------------------------------------------------------------
# Config
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TrainConfig:
    """Training hyperparameters; every field has a documented default."""

    steps: int = 500
    learning_rate: float = 0.05
    optimizer: str = "adam"  # adam | momentum | gd
    omega_policy: str = "singleton"  # singleton | pair
    delta_train: float = 1.0
    weights: LossWeights = field(default_factory=LossWeights)
    seed: int = 0
    checkpoint_every: int = 0  # 0: final checkpoint only

    def __post_init__(self):
        if self.steps < 1:
            raise InvalidInputError("steps must be >= 1")
        if self.learning_rate <= 0:
            raise InvalidInputError("learning rate must be > 0")
        if self.optimizer not in ("adam", "momentum", "gd"):
            raise InvalidInputError(f"unknown optimizer {self.optimizer!r}")
        if self.omega_policy not in ("singleton", "pair"):
            raise InvalidInputError(f"unknown omega policy {self.omega_policy!r}")

    @classmethod
    def from_dict(cls, raw: dict) -> "TrainConfig":
        raw = dict(raw)
        if "weights" in raw:
            raw["weights"] = LossWeights(**raw["weights"])
        return cls(**raw)

    @classmethod
    def from_yaml(cls, path: str | Path) -> "TrainConfig":
        return cls.from_dict(yaml.safe_load(Path(path).read_text()) or {})

    def to_dict(self) -> dict:
        out = dataclasses.asdict(self)
        out["weights"] = {"attr": self.weights.attr, "bg": self.weights.bg, "prob": self.weights.prob}
        return out


# ---------------------------------------------------------------------------
# Optimizers (plain numpy, float64, deterministic)
# ---------------------------------------------------------------------------

class Optimizer:
    kind = "gd"

    def __init__(self, lr: float):
        self.lr = float(lr)

    def step(self, entries: np.ndarray, grad: np.ndarray) -> np.ndarray:
        return entries - self.lr * grad

    def state_dict(self) -> dict:
        return {"kind": self.kind}

    def load_state(self, raw: dict) -> None:
        pass


class Momentum(Optimizer):
    kind = "momentum"

    def __init__(self, lr: float, beta: float = 0.9):
        super().__init__(lr)
        self.beta = beta
        self.buf: np.ndarray | None = None

    def step(self, entries, grad):
        if self.buf is None:
            self.buf = np.zeros_like(entries)
        self.buf = self.beta * self.buf + grad
        return entries - self.lr * self.buf

    def state_dict(self) -> dict:
        return {"kind": self.kind, "beta": self.beta, "buf": _encode_array(self.buf)}

    def load_state(self, raw: dict) -> None:
        self.beta = float(raw["beta"])
        self.buf = _decode_array(raw["buf"]) if raw.get("buf") else None


class Adam(Optimizer):
    kind = "adam"

    def __init__(self, lr: float, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        super().__init__(lr)
        self.beta1, self.beta2, self.eps = beta1, beta2, eps
        self.t = 0
        self.m: np.ndarray | None = None
        self.v: np.ndarray | None = None

    def step(self, entries, grad):
        if self.m is None:
            self.m = np.zeros_like(entries)
            self.v = np.zeros_like(entries)
        self.t += 1
        self.m = self.beta1 * self.m + (1 - self.beta1) * grad
        self.v = self.beta2 * self.v + (1 - self.beta2) * grad * grad
        m_hat = self.m / (1 - self.beta1**self.t)
        v_hat = self.v / (1 - self.beta2**self.t)
        return entries - self.lr * m_hat / (np.sqrt(v_hat) + self.eps)

    def state_dict(self) -> dict:
        return {
            "kind": self.kind,
            "beta1": self.beta1,
            "beta2": self.beta2,
            "eps": self.eps,
            "t": self.t,
            "m": _encode_array(self.m),
            "v": _encode_array(self.v),
        }

    def load_state(self, raw: dict) -> None:
        self.beta1 = float(raw["beta1"])
        self.beta2 = float(raw["beta2"])
        self.eps = float(raw["eps"])
        self.t = int(raw["t"])
        self.m = _decode_array(raw["m"]) if raw.get("m") else None
        self.v = _decode_array(raw["v"]) if raw.get("v") else None


def make_optimizer(cfg: TrainConfig) -> Optimizer:
    if cfg.optimizer == "adam":
        return Adam(cfg.learning_rate)
    if cfg.optimizer == "momentum":
        return Momentum(cfg.learning_rate)
    return Optimizer(cfg.learning_rate)


# ---------------------------------------------------------------------------
# Checkpoints
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Checkpoint:
    """Versioned training artifact: the matrix, what it indexes, and how it
    was produced.  Arrays are stored little-endian base64 so save/load
    round-trips bit-exactly."""

    matrix: np.ndarray
    attribute_names: tuple[str, ...]
    manifest: BackendManifest
    weights: LossWeights
    step: int
    seed: int
    optimizer_state: dict | None = None
    format_version: int = 1

    def __post_init__(self):
        matrix = np.array(self.matrix, dtype=np.float64)
        matrix.flags.writeable = False
        if matrix.shape[0] != len(self.attribute_names) + 1:
            raise InvalidInputError("matrix rows must be attributes plus the others row")
        object.__setattr__(self, "matrix", matrix)
        object.__setattr__(self, "attribute_names", tuple(self.attribute_names))

    def mask_matrix(self) -> MaskMatrix:
        return MaskMatrix(self.matrix, self.attribute_names)

    def to_dict(self) -> dict:
        return {
            "format_version": self.format_version,
            "step": self.step,
            "seed": self.seed,
            "attribute_names": list(self.attribute_names),
            "loss_weights": {"attr": self.weights.attr, "bg": self.weights.bg, "prob": self.weights.prob},
            "backend_manifest": self.manifest.to_dict(),
            "matrix": _encode_array(self.matrix),
            "optimizer_state": self.optimizer_state,
        }

    @classmethod
    def from_dict(cls, raw: dict) -> "Checkpoint":
        if raw.get("format_version") != 1:
            raise InvalidInputError(f"unsupported checkpoint version {raw.get('format_version')!r}")
        return cls(
            matrix=_decode_array(raw["matrix"]),
            attribute_names=tuple(raw["attribute_names"]),
            manifest=BackendManifest.from_dict(raw["backend_manifest"]),
            weights=LossWeights(**raw["loss_weights"]),
            step=int(raw["step"]),
            seed=int(raw["seed"]),
            optimizer_state=raw.get("optimizer_state"),
        )

    def save(self, path: str | Path) -> None:
        path = Path(path)
        tmp = path.with_suffix(path.suffix + ".tmp")
        tmp.write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n")
        os.replace(tmp, path)

    @classmethod
    def load(cls, path: str | Path) -> "Checkpoint":
        return cls.from_dict(json.loads(Path(path).read_text()))

    @property
    def checkpoint_id(self) -> str:
        canon = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode()).hexdigest()[:16]


# ---------------------------------------------------------------------------
# Training loop
# ---------------------------------------------------------------------------

def _sample_omega(rng: np.random.Generator, n_attributes: int, policy: str) -> tuple[int, ...]:
    if policy == "pair" and n_attributes >= 2:
        picked = rng.choice(n_attributes, size=2, replace=False)
        return tuple(int(i) for i in picked)
    return (int(rng.integers(n_attributes)),)


def train_step(
    entries: np.ndarray,
    backends: Backends,
    cfg: TrainConfig,
    rng: np.random.Generator,
    optimizer: Optimizer,
    step_index: int = 0,
) -> tuple[np.ndarray, LossReport]:
    """One sampled edit, one gradient step on the editable columns.

    Draw order from ``rng`` is: source latent, reference latent, target
    set.  Returns the updated matrix entries and the loss report.
    """
    gen, seg, scorer, catalog = (
        backends.generator,
        backends.segmenter,
        backends.scorer,
        backends.catalog,
    )
    if not gen.differentiable:
        raise InvalidInputError("training requires a differentiable generator")
    if not getattr(scorer, "differentiable", False):
        raise InvalidInputError("training requires a differentiable scorer")
    specs = catalog.attributes
    editable = torch.from_numpy(gen.editable)

    z_src, p_src = gen.sample_latent(rng)
    z_ref, p_ref = gen.sample_latent(rng)
    omega = _sample_omega(rng, len(specs), cfg.omega_policy)

    s_src = torch.from_numpy(np.array(gen.to_style(z_src, p_src).values))
    s_ref = torch.from_numpy(np.array(gen.to_style(z_ref, p_ref).values))

    entries_t = torch.from_numpy(np.array(entries)).requires_grad_(True)
    probs = control_probabilities_t(entries_t)
    mask = attribute_mask_t(probs, omega, editable)
    s_edit = edit_style_code_t(s_src, s_ref, mask, cfg.delta_train)

    image_src = gen.synthesize_t(s_src)
    image_ref = gen.synthesize_t(s_ref)
    image_edit = gen.synthesize_t(s_edit)

    # Background support: outside every targeted attribute's alterable
    # region, in both the source and the edited segmentation.
    masks_src = seg.segment(image_src.numpy())
    masks_edit = seg.segment(image_edit.detach().numpy())
    b_src = np.zeros_like(np.asarray(masks_src[seg.regions()[0]], dtype=np.float64))
    b_edit = np.zeros_like(b_src)
    for t in omega:
        region = specs[t].region
        b_src = np.maximum(b_src, np.asarray(masks_src[region], dtype=np.float64))
        b_edit = np.maximum(b_edit, np.asarray(masks_edit[region], dtype=np.float64))
    background = torch.from_numpy(background_mask(b_src, b_edit))

    l_ref = transfer_loss_t(image_edit, image_ref, omega, specs, scorer)
    l_src = preservation_loss_t(image_edit, image_src, omega, specs, scorer)
    l_bg = background_loss_t(image_edit, image_src, background)
    l_prob = probability_loss_t(entries_t, editable)

    finite = all(bool(torch.isfinite(v)) for v in (l_ref, l_src, l_bg, l_prob))
    if not finite:
        raise NonFiniteLossError(
            step_index,
            {
                "l_ref": float(l_ref.detach()),
                "l_src": float(l_src.detach()),
                "l_bg": float(l_bg.detach()),
                "l_prob": float(l_prob.detach()),
            },
        )
    total, report = total_loss_t(l_ref, l_src, l_bg, l_prob, cfg.weights)

    (grad,) = torch.autograd.grad(total, entries_t)
    grad = grad.numpy()
    grad[:, ~gen.editable] = 0.0  # frozen columns stay bitwise at init
    return optimizer.step(np.asarray(entries), grad), report


def train(
    init: MaskMatrix | None,
    cfg: TrainConfig,
    backends: Backends,
    out_dir: str | Path | None = None,
    resume: Checkpoint | None = None,
    log_stream: IO[str] | None = None,
) -> Checkpoint:
    """Run the optimization loop and return the final checkpoint.

    ``resume`` continues a previous run; with the same seed the result is
    bitwise identical to an uninterrupted run of ``cfg.steps`` steps.
    Periodic checkpoints and a line-delimited loss log are written when
    ``out_dir`` is given; interrupted runs keep the last finished
    checkpoint valid because files are written atomically.
    """
    names = backends.catalog.names
    manifest = backends.generator.manifest
    optimizer = make_optimizer(cfg)
    if resume is not None:
        if resume.attribute_names != names:
            raise InvalidInputError("checkpoint attributes do not match the catalog")
        entries = np.array(resume.matrix, dtype=np.float64)
        start = resume.step
        if resume.optimizer_state is not None:
            if resume.optimizer_state.get("kind") != optimizer.kind:
                raise InvalidInputError("checkpoint optimizer does not match the config")
            optimizer.load_state(resume.optimizer_state)
    else:
        if init is None:
            raise InvalidInputError("training needs an initial matrix or a resume checkpoint")
        if init.attribute_names != names:
            raise InvalidInputError("initial matrix attributes do not match the catalog")
        if init.n_channels != backends.generator.n_channels:
            raise InvalidInputError("initial matrix width does not match the generator")
        entries = np.array(init.entries, dtype=np.float64)
        start = 0
    if start >= cfg.steps:
        raise InvalidInputError(f"nothing to do: checkpoint is at step {start} of {cfg.steps}")

    out_path = Path(out_dir) if out_dir is not None else None
    log_file = None
    if out_path is not None:
        out_path.mkdir(parents=True, exist_ok=True)
        log_file = open(out_path / "losses.jsonl", "a" if resume else "w")

    def checkpoint_at(step: int) -> Checkpoint:
        return Checkpoint(
            matrix=entries,
            attribute_names=names,
            manifest=manifest,
            weights=cfg.weights,
            step=step,
            seed=cfg.seed,
            optimizer_state=optimizer.state_dict(),
        )

    try:
        for step in range(start, cfg.steps):
            rng = np.random.default_rng((cfg.seed, step))
            entries, report = train_step(entries, backends, cfg, rng, optimizer, step)
            record = {"step": step + 1, **dataclasses.asdict(report)}
            for stream in (log_file, log_stream):
                if stream is not None:
                    stream.write(json.dumps(record) + "\n")
            if (
                out_path is not None
                and cfg.checkpoint_every
                and (step + 1) % cfg.checkpoint_every == 0
            ):
                checkpoint_at(step + 1).save(out_path / f"checkpoint_{step + 1:06d}.json")
    finally:
        if log_file is not None:
            log_file.close()

    final = checkpoint_at(cfg.steps)
    if out_path is not None:
        final.save(out_path / "checkpoint.json")
    return final

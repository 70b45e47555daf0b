"""Conditional GANs over daily generation shapes.

Two systems share one code path: independent per-type GANs
(``mode="single_type"``) and a single conditional multi-type GAN
(``mode="multi_type"``) whose discriminator carries an auxiliary K-way type
classifier sharing the trunk. The generator maps a latent vector plus
condition (type one-hot, month one-hot, previous day's final value) to a
24-hour shape in (0, 1), plus a duty-cycle output for intermittent-dispatch
types.

Training is plain alternating SGD: one discriminator step then one generator
step per batch, Adam on both, deterministic under the config seed.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .data import (
    ConditionVector,
    GenerationType,
    TrainingSample,
    compute_duty_cycle,
)
from . import nn

MODE_SINGLE = "single_type"
MODE_MULTI = "multi_type"
MODES = (MODE_SINGLE, MODE_MULTI)

PROB_EPS = 1e-7  # probabilities are clamped to [PROB_EPS, 1 - PROB_EPS] before logs
CHECKPOINT_SCHEMA_VERSION = 1
LOSS_DIVERGENCE_LIMIT = 1e3

N_SHAPE = 24
N_MONTHS = 12


class TrainingDivergence(Exception):
    """Raised when a training loss becomes non-finite or explodes."""


class CheckpointError(Exception):
    """Raised for unreadable, corrupt or incompatible checkpoint files."""


@dataclass
class GanConfig:
    latent_dim: int = 32
    gen_hidden: tuple[int, ...] = (64, 128)
    disc_hidden: tuple[int, ...] = (128, 64)
    lr_gen: float = 2e-4
    lr_disc: float = 2e-4
    adam_beta1: float = 0.5
    batch_size: int = 64
    epochs: int = 500
    label_smoothing: float = 0.1
    aux_weight: float = 1.0  # weight of the auxiliary classification loss
    spectral_norm: bool = False
    spectral_norm_iterations: int = 3
    condition_on_month: bool = True
    condition_on_start: bool = True
    duty_threshold: float = 0.01
    seed: int = 0

    def __post_init__(self) -> None:
        self.gen_hidden = tuple(self.gen_hidden)
        self.disc_hidden = tuple(self.disc_hidden)
        if self.latent_dim < 1:
            raise ValueError("latent_dim must be >= 1")
        if not 0 <= self.label_smoothing < 0.5:
            raise ValueError("label_smoothing must be in [0, 0.5)")
        if self.aux_weight < 0:
            raise ValueError("aux_weight must be >= 0")
        if self.batch_size < 1 or self.epochs < 0:
            raise ValueError("batch_size must be >= 1 and epochs >= 0")
        if self.lr_gen <= 0 or self.lr_disc <= 0:
            raise ValueError("learning rates must be positive")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["gen_hidden"] = list(self.gen_hidden)
        d["disc_hidden"] = list(self.disc_hidden)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "GanConfig":
        return cls(**d)


@dataclass
class Discriminator:
    """Shared trunk with a real/fake head and, in multi-type mode, a class head."""

    trunk: nn.MultiLayerNet
    adv_head: nn.MultiLayerNet
    cls_head: nn.MultiLayerNet | None = None

    def parameters(self) -> list[np.ndarray]:
        params = self.trunk.parameters() + self.adv_head.parameters()
        if self.cls_head is not None:
            params += self.cls_head.parameters()
        return params


# ---------------------------------------------------------------------------
# Losses


def _clamp_probs(p: np.ndarray) -> np.ndarray:
    return np.clip(np.asarray(p, dtype=np.float64), PROB_EPS, 1.0 - PROB_EPS)


def discriminator_loss(d_real, d_fake, smoothing: float = 0.0) -> float:
    """Mean of -[(1-s) log d_real + log(1 - d_fake)] with smoothed real labels."""
    p_real = _clamp_probs(d_real)
    p_fake = _clamp_probs(d_fake)
    return float(np.mean(-((1.0 - smoothing) * np.log(p_real) + np.log(1.0 - p_fake))))


def generator_loss(d_fake) -> float:
    """Non-saturating generator objective: mean of -log d_fake."""
    return float(np.mean(-np.log(_clamp_probs(d_fake))))


def softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def cross_entropy(class_probs: np.ndarray, true_type) -> float:
    """Mean negative log probability of the true class index (or indices)."""
    probs = np.atleast_2d(np.asarray(class_probs, dtype=np.float64))
    idx = np.atleast_1d(np.asarray(true_type, dtype=np.int64))
    if idx.shape[0] != probs.shape[0]:
        if idx.shape[0] == 1:
            idx = np.full(probs.shape[0], idx[0])
        else:
            raise ValueError("class_probs and true_type lengths do not match")
    if (idx < 0).any() or (idx >= probs.shape[1]).any():
        raise ValueError(f"type index out of range for {probs.shape[1]} classes")
    picked = probs[np.arange(probs.shape[0]), idx]
    return float(np.mean(-np.log(np.clip(picked, 1e-12, None))))


def multi_type_loss(adversarial: float, class_probs, true_type, aux_weight: float) -> float:
    """Adversarial term plus weighted classification cross-entropy.

    With aux_weight == 0 this returns the adversarial term untouched (the
    index is still validated).
    """
    if aux_weight < 0:
        raise ValueError("aux_weight must be >= 0")
    probs = np.atleast_2d(np.asarray(class_probs, dtype=np.float64))
    idx = np.atleast_1d(np.asarray(true_type, dtype=np.int64))
    if (idx < 0).any() or (idx >= probs.shape[1]).any():
        raise ValueError(f"type index out of range for {probs.shape[1]} classes")
    if aux_weight == 0.0:
        return float(adversarial)
    return float(adversarial) + aux_weight * cross_entropy(probs, true_type)


# ---------------------------------------------------------------------------
# Model


@dataclass
class TrainedGanModel:
    """A self-contained generator/discriminator pair; sampling needs no other state."""

    mode: str
    config: GanConfig
    types: list[GenerationType]
    generator: nn.MultiLayerNet
    discriminator: Discriminator
    loss_history: dict[str, list[float]] = field(default_factory=lambda: {"discriminator": [], "generator": []})

    @property
    def has_duty(self) -> bool:
        return any(t.intermittent_dispatch for t in self.types)

    @property
    def n_types(self) -> int:
        return len(self.types)

    @property
    def output_dim(self) -> int:
        return N_SHAPE + (1 if self.has_duty else 0)

    @property
    def gen_condition_dim(self) -> int:
        dim = self.n_types
        if self.config.condition_on_month:
            dim += N_MONTHS
        if self.config.condition_on_start:
            dim += 1
        return dim

    @property
    def disc_condition_dim(self) -> int:
        # The multi-type discriminator never sees the type: it must infer it
        # through the auxiliary class head.
        dim = self.gen_condition_dim
        if self.mode == MODE_MULTI:
            dim -= self.n_types
        return dim

    def type_by_label(self, label: str) -> GenerationType:
        for t in self.types:
            if t.label == label:
                return t
        raise KeyError(f"type {label!r} not in model registry {[t.label for t in self.types]}")

    def condition(self, type_label: str, month: int, starting_point: float) -> ConditionVector:
        """Build a condition for sampling; month is 1..12."""
        if not 1 <= month <= 12:
            raise ValueError(f"month must be 1..12, got {month}")
        if not 0.0 <= starting_point <= 1.0:
            raise ValueError(f"starting_point must be in [0, 1], got {starting_point}")
        gtype = self.type_by_label(type_label)
        type_oh = np.zeros(self.n_types)
        type_oh[gtype.index] = 1.0
        month_oh = np.zeros(N_MONTHS)
        month_oh[month - 1] = 1.0
        return ConditionVector(type_onehot=type_oh, month_onehot=month_oh, starting_point=starting_point)

    def encode_conditions(self, conditions: Sequence[ConditionVector]) -> np.ndarray:
        """Stack conditions into the (N, gen_condition_dim) array the nets consume."""
        rows = []
        for c in conditions:
            if c.type_onehot.shape != (self.n_types,):
                raise ValueError(
                    f"condition type one-hot has {c.type_onehot.shape[0]} entries, "
                    f"model has {self.n_types} types"
                )
            parts = [c.type_onehot]
            if self.config.condition_on_month:
                parts.append(c.month_onehot)
            if self.config.condition_on_start:
                parts.append(np.array([c.starting_point]))
            rows.append(np.concatenate(parts))
        return np.asarray(rows, dtype=np.float64)

    def disc_condition_slice(self, encoded: np.ndarray) -> np.ndarray:
        if self.mode == MODE_MULTI:
            return encoded[:, self.n_types:]
        return encoded

    def generate(self, encoded_conditions: np.ndarray, z: np.ndarray) -> np.ndarray:
        """Raw generator forward: (N, 24(+1)) outputs in (0, 1)."""
        z = np.asarray(z, dtype=np.float64)
        if z.ndim != 2 or z.shape[1] != self.config.latent_dim:
            raise ValueError(f"latent batch shape {z.shape} does not match latent_dim {self.config.latent_dim}")
        if encoded_conditions.shape != (z.shape[0], self.gen_condition_dim):
            raise ValueError("condition batch does not match latent batch")
        out, _ = nn.forward(self.generator, np.hstack([z, encoded_conditions]))
        return out

    def sample(self, condition: ConditionVector, z: np.ndarray) -> tuple[np.ndarray, float | None]:
        """Generate one daily shape (and duty for intermittent types) from (condition, z)."""
        z = np.asarray(z, dtype=np.float64)
        if z.shape != (self.config.latent_dim,):
            raise ValueError(f"latent vector shape {z.shape} does not match latent_dim {self.config.latent_dim}")
        out = self.generate(self.encode_conditions([condition])[0:1], z[None, :])[0]
        shape = out[:N_SHAPE]
        duty = None
        if self.has_duty:
            gtype = self.types[int(np.argmax(condition.type_onehot))]
            if gtype.intermittent_dispatch:
                duty = float(out[N_SHAPE])
        return shape, duty

    def sample_batch(
        self,
        type_labels: Sequence[str],
        months: Sequence[int],
        starting_points: Sequence[float],
        z: np.ndarray,
    ) -> tuple[np.ndarray, np.ndarray | None]:
        """Vectorized sampling helper: returns (shapes, duties-or-None)."""
        conds = [
            self.condition(lb, int(m), float(sp))
            for lb, m, sp in zip(type_labels, months, starting_points)
        ]
        out = self.generate(self.encode_conditions(conds), z)
        shapes = out[:, :N_SHAPE]
        duties = out[:, N_SHAPE] if self.has_duty else None
        return shapes, duties


# ---------------------------------------------------------------------------
# Training


def _build_model(config: GanConfig, mode: str, types: Sequence[GenerationType], rng: np.random.Generator) -> TrainedGanModel:
    model = TrainedGanModel(
        mode=mode,
        config=config,
        types=list(types),
        generator=nn.MultiLayerNet(layers=[]),
        discriminator=Discriminator(trunk=nn.MultiLayerNet(layers=[]), adv_head=nn.MultiLayerNet(layers=[])),
    )
    gen_dims = [config.latent_dim + model.gen_condition_dim, *config.gen_hidden, model.output_dim]
    model.generator = nn.feed_forward_net(rng, gen_dims, "leaky_relu", "sigmoid")
    trunk_dims = [model.output_dim + model.disc_condition_dim, *config.disc_hidden]
    trunk = nn.feed_forward_net(rng, trunk_dims, "leaky_relu", "leaky_relu")
    adv_head = nn.MultiLayerNet(layers=[nn.xavier_layer(rng, config.disc_hidden[-1], 1, "linear")])
    cls_head = None
    if mode == MODE_MULTI:
        cls_head = nn.MultiLayerNet(layers=[nn.xavier_layer(rng, config.disc_hidden[-1], model.n_types, "linear")])
    model.discriminator = Discriminator(trunk=trunk, adv_head=adv_head, cls_head=cls_head)
    return model


def _training_arrays(
    dataset: Sequence[TrainingSample],
    model: TrainedGanModel,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Stack samples into (real_outputs, encoded_conditions, type_indices)."""
    shapes = np.asarray([s.target_shape for s in dataset], dtype=np.float64)
    encoded = model.encode_conditions([s.condition for s in dataset])
    type_idx = np.asarray([int(np.argmax(s.condition.type_onehot)) for s in dataset], dtype=np.int64)
    if model.has_duty:
        duties = np.empty(len(dataset))
        for i, s in enumerate(dataset):
            duties[i] = (
                s.target_duty
                if s.target_duty is not None
                else compute_duty_cycle(s.target_shape, model.config.duty_threshold)
            )
        real = np.hstack([shapes, duties[:, None]])
    else:
        real = shapes
    return real, encoded, type_idx


def _zero_grads_like(params: Sequence[np.ndarray]) -> list[np.ndarray]:
    return [np.zeros_like(p) for p in params]


def _apply_spectral_norm(disc: Discriminator, iterations: int) -> None:
    for net in (disc.trunk, disc.adv_head) + ((disc.cls_head,) if disc.cls_head else ()):
        for layer in net.layers:
            layer.weights[...] = nn.spectral_normalize(layer.weights, iterations)


def train(
    dataset: Sequence[TrainingSample],
    config: GanConfig,
    mode: str,
    types: Sequence[GenerationType],
    _omit_aux_gradients: bool = False,
) -> TrainedGanModel:
    """Train a GAN on daily shape samples.

    ``types`` is the registry the samples were encoded against. In
    single-type mode every sample must belong to the one registered type.
    ``_omit_aux_gradients`` structurally drops the class head's gradient
    contribution (diagnostic hook; with aux_weight=0 the result is identical
    bit for bit).
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    if not dataset:
        raise ValueError("training dataset is empty")
    if not types:
        raise ValueError("type registry is empty")
    if len({t.index for t in types}) != len(types):
        raise ValueError("type registry has duplicate indices")
    width = dataset[0].condition.type_onehot.shape[0]
    if width != len(types):
        raise ValueError(f"samples encode {width} types but registry has {len(types)}")
    if mode == MODE_SINGLE and len(types) != 1:
        raise ValueError("single_type mode requires a registry with exactly one type")

    rng = np.random.default_rng(config.seed)
    model = _build_model(config, mode, types, rng)
    real_x, cond_gen, type_idx = _training_arrays(dataset, model)
    if mode == MODE_SINGLE and not np.all(type_idx == type_idx[0]):
        raise ValueError("single_type mode requires all samples to share one type")
    cond_disc = model.disc_condition_slice(cond_gen)

    gen = model.generator
    disc = model.discriminator
    opt_g = nn.AdamState.for_params(gen.parameters(), config.lr_gen, beta1=config.adam_beta1)
    opt_d = nn.AdamState.for_params(disc.parameters(), config.lr_disc, beta1=config.adam_beta1)

    n = real_x.shape[0]
    s = config.label_smoothing
    lam = config.aux_weight
    use_aux = disc.cls_head is not None
    n_out = model.output_dim

    for epoch in range(config.epochs):
        perm = rng.permutation(n)
        d_epoch: list[float] = []
        g_epoch: list[float] = []
        for start in range(0, n, config.batch_size):
            idx = perm[start:start + config.batch_size]
            b = idx.size
            xb, cg, cd, yb = real_x[idx], cond_gen[idx], cond_disc[idx], type_idx[idx]

            # --- discriminator step ---------------------------------------
            z = rng.standard_normal((b, config.latent_dim))
            fake, _ = nn.forward(gen, np.hstack([z, cg]))
            din = np.vstack([np.hstack([xb, cd]), np.hstack([fake, cd])])
            h, cache_t = nn.forward(disc.trunk, din)
            logits, cache_a = nn.forward(disc.adv_head, h)
            p = nn.sigmoid(logits)
            d_loss = discriminator_loss(p[:b], p[b:], s)
            grad_logits = np.vstack([(1.0 - s) * (p[:b] - 1.0) / b, p[b:] / b])
            adv_grads, grad_h = nn.backward(disc.adv_head, cache_a, grad_logits)
            cls_grads: list[np.ndarray]
            if use_aux:
                cls_grads = _zero_grads_like(disc.cls_head.parameters())
                cls_logits, cache_c = nn.forward(disc.cls_head, h)
                probs = softmax(cls_logits)
                d_loss = multi_type_loss(d_loss, probs[:b], yb, lam)
                d_loss = multi_type_loss(d_loss, probs[b:], yb, lam)
                if not _omit_aux_gradients:
                    onehot = np.zeros_like(probs)
                    onehot[np.arange(2 * b), np.concatenate([yb, yb])] = 1.0
                    cls_grads, grad_h_cls = nn.backward(
                        disc.cls_head, cache_c, lam * (probs - onehot) / b
                    )
                    grad_h = grad_h + grad_h_cls
            else:
                cls_grads = []
            trunk_grads, _ = nn.backward(disc.trunk, cache_t, grad_h)
            nn.adam_step(disc.parameters(), trunk_grads + adv_grads + cls_grads, opt_d)
            if config.spectral_norm:
                _apply_spectral_norm(disc, config.spectral_norm_iterations)

            # --- generator step --------------------------------------------
            z = rng.standard_normal((b, config.latent_dim))
            fake, cache_g = nn.forward(gen, np.hstack([z, cg]))
            h, cache_t = nn.forward(disc.trunk, np.hstack([fake, cd]))
            logits, cache_a = nn.forward(disc.adv_head, h)
            p = nn.sigmoid(logits)
            g_loss = generator_loss(p)
            _, grad_h = nn.backward(disc.adv_head, cache_a, (p - 1.0) / b)
            if use_aux:
                cls_logits, cache_c = nn.forward(disc.cls_head, h)
                probs = softmax(cls_logits)
                g_loss = multi_type_loss(g_loss, probs, yb, lam)
                if not _omit_aux_gradients:
                    onehot = np.zeros_like(probs)
                    onehot[np.arange(b), yb] = 1.0
                    _, grad_h_cls = nn.backward(disc.cls_head, cache_c, lam * (probs - onehot) / b)
                    grad_h = grad_h + grad_h_cls
            _, grad_din = nn.backward(disc.trunk, cache_t, grad_h)
            gen_grads, _ = nn.backward(gen, cache_g, grad_din[:, :n_out])
            nn.adam_step(gen.parameters(), gen_grads, opt_g)

            if not (np.isfinite(d_loss) and np.isfinite(g_loss)) or max(d_loss, g_loss) > LOSS_DIVERGENCE_LIMIT:
                raise TrainingDivergence(
                    f"training diverged at epoch {epoch}, batch {start // config.batch_size}: "
                    f"d_loss={d_loss:.6g}, g_loss={g_loss:.6g}"
                )
            d_epoch.append(d_loss)
            g_epoch.append(g_loss)
        model.loss_history["discriminator"].append(float(np.mean(d_epoch)))
        model.loss_history["generator"].append(float(np.mean(g_epoch)))
    return model


# ---------------------------------------------------------------------------
# Checkpointing


def _float_str(x: float) -> str:
    # 17 significant digits: enough to round-trip any IEEE double exactly.
    return format(float(x), ".17e")


def _net_to_doc(net: nn.MultiLayerNet) -> list[dict]:
    doc = []
    for layer in net.layers:
        doc.append(
            {
                "in": layer.in_dim,
                "out": layer.out_dim,
                "activation": layer.activation,
                "alpha": layer.alpha,
                "weights": [_float_str(x) for x in layer.weights.reshape(-1)],
                "bias": [_float_str(x) for x in layer.bias],
            }
        )
    return doc


def _net_from_doc(doc: list[dict]) -> nn.MultiLayerNet:
    layers = []
    for entry in doc:
        rows, cols = entry["out"], entry["in"]
        weights = np.array([float(x) for x in entry["weights"]], dtype=np.float64)
        if weights.size != rows * cols:
            raise CheckpointError("weight array size does not match layer dims")
        bias = np.array([float(x) for x in entry["bias"]], dtype=np.float64)
        if bias.size != rows:
            raise CheckpointError("bias array size does not match layer dims")
        layers.append(
            nn.DenseLayer(
                weights=weights.reshape(rows, cols),
                bias=bias,
                activation=entry["activation"],
                alpha=float(entry["alpha"]),
            )
        )
    return nn.MultiLayerNet(layers=layers)


def save_model(model: TrainedGanModel, path: str | Path) -> None:
    doc = {
        "schema_version": CHECKPOINT_SCHEMA_VERSION,
        "mode": model.mode,
        "config": model.config.to_dict(),
        "types": [
            {"label": t.label, "index": t.index, "intermittent": t.intermittent_dispatch}
            for t in model.types
        ],
        "generator": _net_to_doc(model.generator),
        "discriminator": {
            "trunk": _net_to_doc(model.discriminator.trunk),
            "adv_head": _net_to_doc(model.discriminator.adv_head),
            "cls_head": (
                _net_to_doc(model.discriminator.cls_head)
                if model.discriminator.cls_head is not None
                else None
            ),
        },
        "loss_history": model.loss_history,
    }
    Path(path).write_text(json.dumps(doc, indent=1))


def load_model(path: str | Path) -> TrainedGanModel:
    path = Path(path)
    if not path.exists():
        raise CheckpointError(f"checkpoint not found: {path}")
    try:
        doc = json.loads(path.read_text())
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise CheckpointError(f"corrupt checkpoint {path}: {exc}") from exc
    if not isinstance(doc, dict) or "schema_version" not in doc:
        raise CheckpointError(f"corrupt checkpoint {path}: missing schema_version")
    if doc["schema_version"] != CHECKPOINT_SCHEMA_VERSION:
        raise CheckpointError(
            f"unsupported checkpoint schema {doc['schema_version']} "
            f"(expected {CHECKPOINT_SCHEMA_VERSION})"
        )
    try:
        config = GanConfig.from_dict(doc["config"])
        types = [
            GenerationType(label=t["label"], index=t["index"], intermittent_dispatch=t["intermittent"])
            for t in doc["types"]
        ]
        disc_doc = doc["discriminator"]
        model = TrainedGanModel(
            mode=doc["mode"],
            config=config,
            types=types,
            generator=_net_from_doc(doc["generator"]),
            discriminator=Discriminator(
                trunk=_net_from_doc(disc_doc["trunk"]),
                adv_head=_net_from_doc(disc_doc["adv_head"]),
                cls_head=(
                    _net_from_doc(disc_doc["cls_head"])
                    if disc_doc["cls_head"] is not None
                    else None
                ),
            ),
            loss_history=doc["loss_history"],
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise CheckpointError(f"corrupt checkpoint {path}: {exc}") from exc
    if model.mode not in MODES:
        raise CheckpointError(f"corrupt checkpoint {path}: unknown mode {model.mode!r}")
    return model

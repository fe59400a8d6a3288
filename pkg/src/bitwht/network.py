"""Transform-threshold-inverse layers, the regularized loss, and training.

A layer zero-pads, runs the blockwise transform, soft-thresholds every
transformed channel with a trainable T, inverse-transforms and truncates.
The transform stage can execute four ways: exact float, exact integer on
quantized codes, the 1-bit comparator path, or the smooth surrogate; the
surrogate carries gradients during training while evaluation runs the
1-bit path.  The inverse stage stays float in all modes.

Thresholds and a small dense head train by plain SGD with manually
propagated gradients; a tau schedule hardens the surrogate as epochs
pass.  The log-likelihood penalty on g = |T|/T_max is available in both
the shrinking direction and the sparsity-seeking negation (the default).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .activation import ThresholdVector, soft_threshold, soft_threshold_grad
from .crossbar import CrossbarConfig, f0_apply_codes
from .earlyterm import _walk_terminate
from .fixedpoint import code_scale, quantize_codes
from .hadamard import MAX_ORDER, BwhtPlan, build_hadamard, bwht_plan, fwht
from .surrogate import SurrogateConfig, TauSchedule, surrogate_backward, surrogate_forward

EXEC_MODES = ("float", "bitplane_exact", "bitplane_1bit", "surrogate")


@dataclass
class BwhtLayer:
    """One pad/transform/threshold/inverse/truncate stage."""

    input_dim: int
    target_dim: int
    mode: str
    plan: BwhtPlan
    thresholds: ThresholdVector

    def __post_init__(self) -> None:
        if self.mode not in ("expand", "project"):
            raise ValueError(f"unknown layer mode {self.mode!r}")
        if self.mode == "expand" and self.target_dim < self.input_dim:
            raise ValueError("expand requires target_dim >= input_dim")
        if self.target_dim > self.plan.padded_dim:
            raise ValueError("target_dim exceeds the transformed dimension")
        if len(self.thresholds.values) != self.plan.padded_dim:
            raise ValueError("need one threshold per transformed channel")

    @property
    def work_dim(self) -> int:
        """Length fed to the transform: padded up front in expand mode."""
        return self.target_dim if self.mode == "expand" else self.input_dim


def _default_block(work_dim: int) -> int:
    block = 1
    while block < work_dim and block < (1 << MAX_ORDER):
        block *= 2
    return block


def make_layer(input_dim: int, target_dim: int, mode: str, t_max: float,
               rng: np.random.Generator, block_size: int | None = None) -> BwhtLayer:
    """Build a layer; thresholds start uniform in [-0.1*t_max, 0.1*t_max]."""
    work = target_dim if mode == "expand" else input_dim
    if block_size is None:
        block_size = _default_block(work)
    plan = bwht_plan(work, block_size)
    init = rng.uniform(-0.1 * t_max, 0.1 * t_max, size=plan.padded_dim)
    return BwhtLayer(input_dim=input_dim, target_dim=target_dim, mode=mode,
                     plan=plan, thresholds=ThresholdVector(init, t_max))


def _block_view(layer: BwhtLayer, x: np.ndarray) -> np.ndarray:
    """Pad (..., input_dim) out to the padded length and split into blocks."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != layer.input_dim:
        raise ValueError(f"expected input length {layer.input_dim}, got {x.shape[-1]}")
    plan = layer.plan
    total_pad = plan.padded_dim - layer.input_dim
    if total_pad:
        pad = [(0, 0)] * (x.ndim - 1) + [(0, total_pad)]
        x = np.pad(x, pad)
    return x.reshape(x.shape[:-1] + (plan.num_blocks, plan.block_size))


def _inverse_full(plan: BwhtPlan, a: np.ndarray) -> np.ndarray:
    """Per-block inverse transform without dropping the padding."""
    blocks = a.reshape(a.shape[:-1] + (plan.num_blocks, plan.block_size))
    z = fwht(blocks) / plan.block_size
    return z.reshape(a.shape[:-1] + (plan.padded_dim,))


def _transform_stage(layer: BwhtLayer, xb: np.ndarray, exec_mode: str, *,
                     num_bits: int, x_max: float, tau: float | None):
    """Run the selected transform on block view xb; returns (y_real, cache).

    y_real is flattened to (..., padded_dim).  Quantized paths report in
    real units via the codec step, so the float and exact paths agree up
    to round-off while the 1-bit path lives in its compressed range.
    """
    plan = layer.plan
    lead = xb.shape[:-2]
    h = build_hadamard(plan.block_size.bit_length() - 1).entries
    cache = None
    if exec_mode == "float":
        y = fwht(xb)
    elif exec_mode == "bitplane_exact":
        codes, signs = quantize_codes(xb, num_bits, x_max)
        y = (signs * codes) @ h.T.astype(np.int64)
        y = y / code_scale(num_bits, x_max)
    elif exec_mode == "bitplane_1bit":
        codes, signs = quantize_codes(xb, num_bits, x_max)
        cfg = CrossbarConfig(matrix=h)
        y = f0_apply_codes(cfg, codes, signs, num_bits)
        y = y / code_scale(num_bits, x_max)
    elif exec_mode == "surrogate":
        if tau is None:
            raise ValueError("surrogate execution needs an explicit tau")
        scfg = SurrogateConfig(tau=tau, b_max=num_bits, x_max=x_max)
        y, cache = surrogate_forward(xb, h, scfg)
        y = y / code_scale(num_bits, x_max)
    else:
        raise ValueError(f"unknown exec mode {exec_mode!r}")
    return np.asarray(y, dtype=np.float64).reshape(lead + (plan.padded_dim,)), cache


def layer_forward(layer: BwhtLayer, x: np.ndarray, exec_mode: str, *,
                  num_bits: int = 8, x_max: float = 1.0,
                  tau: float | None = None) -> np.ndarray:
    """Full layer pass; x is (..., input_dim), output (..., target_dim)."""
    xb = _block_view(layer, x)
    y, _ = _transform_stage(layer, xb, exec_mode,
                            num_bits=num_bits, x_max=x_max, tau=tau)
    a = soft_threshold(y, layer.thresholds.values)
    z = _inverse_full(layer.plan, a)
    return z[..., : layer.target_dim]


@dataclass
class _LayerTape:
    layer: BwhtLayer
    surr_cache: object
    da_dy: np.ndarray
    da_dt: np.ndarray
    scale: float
    exec_mode: str


def _layer_forward_train(layer: BwhtLayer, x: np.ndarray, exec_mode: str, *,
                         num_bits: int, x_max: float,
                         tau: float | None) -> tuple[np.ndarray, _LayerTape]:
    if exec_mode not in ("surrogate", "float"):
        raise ValueError("training runs in surrogate or float mode")
    xb = _block_view(layer, x)
    y, cache = _transform_stage(layer, xb, exec_mode,
                                num_bits=num_bits, x_max=x_max, tau=tau)
    da_dy, da_dt = soft_threshold_grad(y, layer.thresholds.values)
    a = soft_threshold(y, layer.thresholds.values)
    z = _inverse_full(layer.plan, a)
    scale = 1.0 / code_scale(num_bits, x_max) if exec_mode == "surrogate" else 1.0
    tape = _LayerTape(layer=layer, surr_cache=cache, da_dy=da_dy, da_dt=da_dt,
                      scale=scale, exec_mode=exec_mode)
    return z[..., : layer.target_dim], tape


def _layer_backward(tape: _LayerTape, gout: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Gradient through one layer: returns (gx, gT)."""
    layer = tape.layer
    plan = layer.plan
    pad = plan.padded_dim - layer.target_dim
    if pad:
        widths = [(0, 0)] * (gout.ndim - 1) + [(0, pad)]
        gout = np.pad(gout, widths)
    # inverse stage is multiplication by the symmetric block matrix / block_size
    ga = _inverse_full(plan, gout)
    gy = ga * tape.da_dy
    gt = np.sum(ga * tape.da_dt, axis=tuple(range(gout.ndim - 1)))
    lead = gy.shape[:-1]
    gyb = gy.reshape(lead + (plan.num_blocks, plan.block_size)) * tape.scale
    if tape.exec_mode == "surrogate":
        gxb = surrogate_backward(tape.surr_cache, gyb)
    else:
        gxb = fwht(gyb)
    gx = gxb.reshape(lead + (plan.padded_dim,))[..., : layer.input_dim]
    return gx, gt


@dataclass
class LossConfig:
    """Penalty strength, clamp bound and which way the penalty points."""

    lambda_: float = 0.0
    t_max: float = 1.0
    regularizer_direction: str = "sparsity_intent"

    def __post_init__(self) -> None:
        if self.lambda_ < 0:
            raise ValueError("lambda_ must be >= 0")
        if not (self.t_max > 0):
            raise ValueError("t_max must be > 0")
        if self.regularizer_direction not in ("as_written", "sparsity_intent"):
            raise ValueError(f"unknown direction {self.regularizer_direction!r}")


def penalty_term(thresholds: ThresholdVector) -> tuple[float, np.ndarray]:
    """Sum of (3/2)ln g + g/2 over channels and its gradient w.r.t. T.

    This is the negative log-likelihood of g under the Wald-style density
    g^(-3/2)*exp(-g/2); it decreases toward g -> 0, so the literal penalty
    shrinks thresholds and the negated one saturates them.
    """
    g_raw = np.abs(thresholds.values) / thresholds.t_max
    g = np.clip(g_raw, 1e-6, 1.0)
    value = float(np.sum(1.5 * np.log(g) + 0.5 * g))
    inside = (g_raw > 1e-6) & (g_raw <= 1.0)
    dg = np.where(inside, (1.5 / g + 0.5) / thresholds.t_max, 0.0)
    return value, dg * np.sign(thresholds.values)


def loss_mod(acc_loss: float, thresholds: ThresholdVector | Sequence[ThresholdVector],
             cfg: LossConfig) -> float:
    """Total loss: accuracy term plus the directed penalty over all thresholds."""
    if isinstance(thresholds, ThresholdVector):
        thresholds = [thresholds]
    total = 0.0
    for tv in thresholds:
        value, _ = penalty_term(tv)
        total += value
    direction = 1.0 if cfg.regularizer_direction == "as_written" else -1.0
    return float(acc_loss + direction * cfg.lambda_ * total)


@dataclass
class BwhtNetwork:
    """Layer stack plus a dense classification head and the shared codec."""

    layers: list[BwhtLayer]
    head_w: np.ndarray
    head_b: np.ndarray
    num_bits: int
    x_max: float
    t_max: float

    @property
    def feature_dim(self) -> int:
        return self.layers[-1].target_dim if self.layers else self.head_w.shape[1]


def build_network(input_dim: int, layer_specs: Sequence[tuple[int, str]],
                  num_classes: int, *, num_bits: int = 8, x_max: float = 1.0,
                  t_max: float = 1.0, block_size: int | None = None,
                  seed: int = 0) -> BwhtNetwork:
    """Assemble layers from (target_dim, mode) specs and a head, seeded init."""
    if num_classes < 2:
        raise ValueError("num_classes must be >= 2")
    rng = np.random.default_rng(seed)
    layers = []
    dim = input_dim
    for target_dim, mode in layer_specs:
        layer = make_layer(dim, target_dim, mode, t_max, rng, block_size)
        layers.append(layer)
        dim = target_dim
    head_w = rng.normal(0.0, 1.0 / np.sqrt(dim), size=(num_classes, dim))
    head_b = np.zeros(num_classes)
    return BwhtNetwork(layers=layers, head_w=head_w, head_b=head_b,
                       num_bits=num_bits, x_max=x_max, t_max=t_max)


def predict(model: BwhtNetwork, x: np.ndarray, exec_mode: str = "bitplane_1bit",
            tau: float | None = None) -> np.ndarray:
    """Logits for a batch under the chosen transform execution."""
    h = np.asarray(x, dtype=np.float64)
    for layer in model.layers:
        h = layer_forward(layer, h, exec_mode,
                          num_bits=model.num_bits, x_max=model.x_max, tau=tau)
    return h @ model.head_w.T + model.head_b


def evaluate(model: BwhtNetwork, x: np.ndarray, y: np.ndarray,
             exec_mode: str = "bitplane_1bit", tau: float | None = None) -> float:
    logits = predict(model, x, exec_mode, tau)
    return float(np.mean(np.argmax(logits, axis=-1) == np.asarray(y)))


def _log_softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=-1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=-1, keepdims=True))


def _mean_term_cycles(model: BwhtNetwork, x: np.ndarray) -> float:
    """Average bitplanes needed per transformed channel before the dead
    zone provably wins, measured on the 1-bit path with the trained T."""
    scale = code_scale(model.num_bits, model.x_max)
    h = np.asarray(x, dtype=np.float64)
    all_cycles = []
    for layer in model.layers:
        xb = _block_view(layer, h)
        codes, signs = quantize_codes(xb, model.num_bits, model.x_max)
        hmat = build_hadamard(layer.plan.block_size.bit_length() - 1).entries
        shifts = np.arange(model.num_bits, dtype=np.int64)
        planes = (codes[..., None, :] >> shifts[:, None]) & 1
        psums = (signs[..., None, :] * planes) @ hmat.T.astype(np.int64)
        decisions = np.where(psums > 0, 1, -1)          # (..., nb, B, bs)
        decisions = np.swapaxes(decisions, -1, -2)      # (..., nb, bs, B)
        flat = decisions.reshape(-1, model.num_bits)
        tcodes = np.floor(np.abs(layer.thresholds.values) * scale + 0.5).astype(np.int64)
        tcodes = tcodes.reshape(layer.plan.num_blocks, layer.plan.block_size)
        tcodes = np.broadcast_to(tcodes, decisions.shape[:-1]).reshape(-1)
        _, cycles, _ = _walk_terminate(flat, tcodes)
        all_cycles.append(cycles)
        h = layer_forward(layer, h, "bitplane_1bit",
                          num_bits=model.num_bits, x_max=model.x_max)
    if not all_cycles:
        return float(model.num_bits)
    return float(np.concatenate(all_cycles).mean())


@dataclass
class TrainReport:
    """One row of metrics per epoch, row 0 being the untrained state."""

    epochs: list[int] = field(default_factory=list)
    loss: list[float] = field(default_factory=list)
    accuracy: list[float] = field(default_factory=list)
    tau: list[float] = field(default_factory=list)
    mean_g: list[float] = field(default_factory=list)
    frac_high: list[float] = field(default_factory=list)
    mean_cycles: list[float] = field(default_factory=list)

    def to_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("epoch,loss,accuracy,tau,mean_g,frac_high,mean_cycles\n")
            for i, epoch in enumerate(self.epochs):
                fh.write(f"{epoch},{self.loss[i]!r},{self.accuracy[i]!r},"
                         f"{self.tau[i]!r},{self.mean_g[i]!r},"
                         f"{self.frac_high[i]!r},{self.mean_cycles[i]!r}\n")


@dataclass(frozen=True)
class Dataset:
    x: np.ndarray
    y: np.ndarray

    def __len__(self) -> int:
        return self.x.shape[0]


def make_toy_dataset(num_classes: int, dim: int, samples_per_class: int,
                     seed: int) -> Dataset:
    """Separable Gaussian clusters around orthonormal means, scaled to [-1, 1].

    Generation asserts a closed-form linear probe reaches 95% train
    accuracy, so downstream training failures point at the model, not
    the data.
    """
    if num_classes < 2:
        raise ValueError("num_classes must be >= 2")
    if dim < num_classes:
        raise ValueError("dim must be >= num_classes")
    if samples_per_class < 1:
        raise ValueError("samples_per_class must be >= 1")
    rng = np.random.default_rng(seed)
    basis, _ = np.linalg.qr(rng.normal(size=(dim, dim)))
    means = basis[:num_classes]
    x = np.concatenate([
        mean + 0.12 * rng.normal(size=(samples_per_class, dim))
        for mean in means
    ])
    y = np.repeat(np.arange(num_classes), samples_per_class)
    order = rng.permutation(len(y))
    x, y = x[order], y[order]
    x = x / np.max(np.abs(x))

    onehot = np.eye(num_classes)[y]
    design = np.concatenate([x, np.ones((len(y), 1))], axis=1)
    coef, *_ = np.linalg.lstsq(design, onehot, rcond=None)
    probe_acc = np.mean(np.argmax(design @ coef, axis=1) == y)
    if probe_acc < 0.95:
        raise ValueError(f"generated clusters are not separable (probe {probe_acc:.3f})")
    return Dataset(x=x, y=y.astype(np.int64))


def train(model: BwhtNetwork, dataset: Dataset, epochs: int,
          schedule: TauSchedule, cfg: LossConfig, seed: int, *,
          lr: float = 0.1, batch_size: int = 32,
          exec_mode: str = "surrogate") -> TrainReport:
    """SGD over thresholds and the head; deterministic given the seed.

    The forward runs in exec_mode (surrogate or float); metrics rows hold
    the loss on the full set under that mode, eval accuracy on the 1-bit
    path (float path when training in float), the epoch's tau, threshold
    saturation statistics and the mean early-termination cycle count.
    """
    if len(dataset) == 0:
        raise ValueError("dataset is empty")
    if epochs < 0:
        raise ValueError("epochs must be >= 0")
    rng = np.random.default_rng(seed)
    eval_exec = "bitplane_1bit" if exec_mode == "surrogate" else "float"
    direction = 1.0 if cfg.regularizer_direction == "as_written" else -1.0
    report = TrainReport()

    def full_loss(tau: float) -> float:
        h = dataset.x
        for layer in model.layers:
            h, _ = _layer_forward_train(layer, h, exec_mode,
                                        num_bits=model.num_bits,
                                        x_max=model.x_max, tau=tau)
        logp = _log_softmax(h @ model.head_w.T + model.head_b)
        ce = -float(np.mean(logp[np.arange(len(dataset)), dataset.y]))
        return loss_mod(ce, [l.thresholds for l in model.layers], cfg)

    def record(epoch: int, tau: float) -> None:
        all_t = (np.concatenate([l.thresholds.values for l in model.layers])
                 if model.layers else np.zeros(0))
        all_g = np.abs(all_t) / model.t_max
        report.epochs.append(epoch)
        report.loss.append(full_loss(tau))
        report.accuracy.append(evaluate(model, dataset.x, dataset.y, eval_exec, tau))
        report.tau.append(tau)
        report.mean_g.append(float(all_g.mean()) if all_g.size else 0.0)
        report.frac_high.append(float(np.mean(all_g > 0.8)) if all_g.size else 0.0)
        report.mean_cycles.append(_mean_term_cycles(model, dataset.x))

    record(0, schedule.tau_at(0))
    for epoch in range(1, epochs + 1):
        tau = schedule.tau_at(epoch - 1)
        order = rng.permutation(len(dataset))
        for start in range(0, len(dataset), batch_size):
            idx = order[start : start + batch_size]
            xb, yb = dataset.x[idx], dataset.y[idx]
            tapes = []
            h = xb
            for layer in model.layers:
                h, tape = _layer_forward_train(layer, h, exec_mode,
                                               num_bits=model.num_bits,
                                               x_max=model.x_max, tau=tau)
                tapes.append(tape)
            logits = h @ model.head_w.T + model.head_b
            probs = np.exp(_log_softmax(logits))
            gl = probs.copy()
            gl[np.arange(len(yb)), yb] -= 1.0
            gl /= len(yb)
            gw = gl.T @ h
            gb = gl.sum(axis=0)
            gh = gl @ model.head_w
            for tape in reversed(tapes):
                gh, gt = _layer_backward(tape, gh)
                if cfg.lambda_ > 0:
                    _, pgrad = penalty_term(tape.layer.thresholds)
                    gt = gt + direction * cfg.lambda_ * pgrad
                tape.layer.thresholds.values -= lr * gt
                tape.layer.thresholds.clamp()
            model.head_w -= lr * gw
            model.head_b -= lr * gb
        record(epoch, tau)
    return report


def save_checkpoint(model: BwhtNetwork, path) -> None:
    """Flat JSON record of plan dims, thresholds and head weights."""
    blob = {
        "format": 1,
        "num_bits": model.num_bits,
        "x_max": model.x_max,
        "t_max": model.t_max,
        "layers": [
            {
                "input_dim": layer.input_dim,
                "target_dim": layer.target_dim,
                "mode": layer.mode,
                "block_size": layer.plan.block_size,
                "thresholds": layer.thresholds.values.tolist(),
            }
            for layer in model.layers
        ],
        "head_w": model.head_w.tolist(),
        "head_b": model.head_b.tolist(),
    }
    with open(path, "w") as fh:
        json.dump(blob, fh, indent=1)
        fh.write("\n")


def load_checkpoint(path) -> BwhtNetwork:
    with open(path) as fh:
        blob = json.load(fh)
    if blob.get("format") != 1:
        raise ValueError(f"unsupported checkpoint format {blob.get('format')!r}")
    layers = []
    for spec in blob["layers"]:
        plan = bwht_plan(spec["target_dim"] if spec["mode"] == "expand"
                         else spec["input_dim"], spec["block_size"])
        layers.append(BwhtLayer(
            input_dim=spec["input_dim"], target_dim=spec["target_dim"],
            mode=spec["mode"], plan=plan,
            thresholds=ThresholdVector(np.array(spec["thresholds"]), blob["t_max"]),
        ))
    return BwhtNetwork(layers=layers,
                       head_w=np.array(blob["head_w"]),
                       head_b=np.array(blob["head_b"]),
                       num_bits=blob["num_bits"], x_max=blob["x_max"],
                       t_max=blob["t_max"])

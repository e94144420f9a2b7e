"""Toy denoising substrate: DDPM-style noise schedule, a seeded single-layer
self-attention denoiser, and deterministic DDIM inversion / sampling that
records the attention matrix at every step.

The denoiser is untrained: its weights are fully determined by a seed.  The
editing algorithm consumes the *structure* of its attention, not image
quality, so seeded-random weights keep everything deterministic and
dependency-free.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .grids import LatentGrid, WEIGHT_SUM_TOL, _frozen

WEIGHTS_MAGIC = b"DWTS"


@dataclass(frozen=True)
class NoiseSchedule:
    """Linear-beta schedule with cached alpha-bar cumulative products."""

    t_max: int = 50
    beta_start: float = 1e-4
    beta_end: float = 2e-2
    betas: np.ndarray = field(init=False)      # index 1..t_max, [0] unused
    alpha_bars: np.ndarray = field(init=False)  # alpha_bars[0] == 1

    def __post_init__(self):
        if self.t_max < 1:
            raise ValueError("t_max must be >= 1")
        if not (0.0 < self.beta_start <= self.beta_end < 1.0):
            raise ValueError("need 0 < beta_start <= beta_end < 1")
        betas = np.zeros(self.t_max + 1)
        betas[1:] = np.linspace(self.beta_start, self.beta_end, self.t_max)
        alphas = 1.0 - betas
        abar = np.cumprod(alphas)
        object.__setattr__(self, "betas", _frozen(betas))
        object.__setattr__(self, "alpha_bars", _frozen(abar))

    def inversion_timesteps(self, steps: int) -> list[int]:
        """Uniformly strided timesteps 0 < t_1 < ... < t_steps = t_max."""
        if steps < 0 or steps > self.t_max:
            raise ValueError(f"steps must be in [0, {self.t_max}]")
        return [round(i * self.t_max / steps) for i in range(1, steps + 1)] if steps else []


@dataclass(frozen=True)
class DenoiserConfig:
    channels: int
    height: int
    width: int
    hidden: int = 16
    d_k: int = 8
    heads: int = 2
    seed: int = 0
    zero_weights: bool = False  # test hook: eps identically 0, uniform attention

    def __post_init__(self):
        if min(self.channels, self.height, self.width, self.hidden) < 1:
            raise ValueError("dims must be positive")
        if self.d_k < 1 or self.heads < 1:
            raise ValueError("d_k and heads must be >= 1")


@dataclass(frozen=True)
class AttentionRecord:
    """Row-stochastic (H*W) x (H*W) attention matrix at one timestep."""

    t: int
    height: int
    width: int
    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=np.float64)
        hw = self.height * self.width
        if m.shape != (hw, hw):
            raise ValueError(f"attention matrix shape {m.shape}, expected ({hw},{hw})")
        if np.any(m <= 0) or np.any(m > 1):
            raise ValueError("attention entries must lie in (0, 1]")
        rowsums = m.sum(axis=1)
        if np.max(np.abs(rowsums - 1.0)) > WEIGHT_SUM_TOL:
            raise ValueError("attention rows must sum to 1")
        object.__setattr__(self, "matrix", _frozen(m))


@dataclass(frozen=True)
class DenoiserWeights:
    w_in: np.ndarray    # (hidden, channels)
    b_in: np.ndarray    # (hidden,)
    w_q: np.ndarray     # (heads, d_k, hidden)
    w_k: np.ndarray     # (heads, d_k, hidden)
    w_v: np.ndarray     # (hidden, hidden)
    w_out: np.ndarray   # (channels, hidden)
    b_out: np.ndarray   # (channels,)


def build_weights(config: DenoiserConfig) -> DenoiserWeights:
    c, d, dk, h = config.channels, config.hidden, config.d_k, config.heads
    if config.zero_weights:
        z = np.zeros
        return DenoiserWeights(z((d, c)), z(d), z((h, dk, d)), z((h, dk, d)),
                               z((d, d)), z((c, d)), z(c))
    rng = np.random.default_rng(config.seed)

    def init(*shape):
        fan_in = shape[-1]
        return rng.normal(0.0, 1.0 / np.sqrt(fan_in), size=shape)

    return DenoiserWeights(
        w_in=init(d, c), b_in=rng.normal(0.0, 0.1, size=d),
        w_q=init(h, dk, d), w_k=init(h, dk, d),
        w_v=init(d, d), w_out=init(c, d), b_out=rng.normal(0.0, 0.1, size=c),
    )


def timestep_encoding(t: int, dim: int) -> np.ndarray:
    """Standard sinusoidal encoding of a scalar timestep."""
    half = (dim + 1) // 2
    freqs = np.exp(-np.log(10000.0) * np.arange(half) / max(half, 1))
    ang = t * freqs
    enc = np.zeros(dim)
    enc[0::2] = np.sin(ang)[: len(enc[0::2])]
    enc[1::2] = np.cos(ang)[: len(enc[1::2])]
    return enc


def _hidden_state(z: LatentGrid, t: int, w: DenoiserWeights) -> np.ndarray:
    """(H*W, hidden) per-position features: linear embed + timestep encoding."""
    c, h, wd = z.channels, z.height, z.width
    flat = z.values.reshape(c, h * wd).T          # (HW, C)
    enc = timestep_encoding(t, w.w_in.shape[0])
    return np.tanh(flat @ w.w_in.T + w.b_in + enc)


def _softmax_rows(scores: np.ndarray) -> np.ndarray:
    m = scores.max(axis=1, keepdims=True)
    e = np.exp(scores - m)
    return e / e.sum(axis=1, keepdims=True)


def attention_from_hidden(hidden: np.ndarray, weights: DenoiserWeights,
                          d_k: int) -> np.ndarray:
    """Head-averaged row-stochastic matrix over flattened positions."""
    heads = weights.w_q.shape[0]
    acc = np.zeros((hidden.shape[0], hidden.shape[0]))
    for i in range(heads):
        q = hidden @ weights.w_q[i].T
        k = hidden @ weights.w_k[i].T
        acc += _softmax_rows(q @ k.T / np.sqrt(d_k))
    return acc / heads


def compute_self_attention(hidden: LatentGrid, config: DenoiserConfig) -> AttentionRecord:
    """Attention record for an explicit hidden-state grid (channels = hidden width)."""
    if hidden.channels != config.hidden:
        raise ValueError(f"hidden grid has {hidden.channels} channels, config.hidden={config.hidden}")
    if (hidden.height, hidden.width) != (config.height, config.width):
        raise ValueError("hidden grid spatial dims do not match config")
    w = build_weights(config)
    hs = hidden.values.reshape(config.hidden, -1).T
    m = attention_from_hidden(hs, w, config.d_k)
    return AttentionRecord(t=0, height=config.height, width=config.width, matrix=m)


def predict_noise(z: LatentGrid, t: int, config: DenoiserConfig,
                  weights: DenoiserWeights | None = None):
    """Deterministic eps-prediction; returns (eps grid, AttentionRecord)."""
    if (z.channels, z.height, z.width) != (config.channels, config.height, config.width):
        raise ValueError("latent dims do not match denoiser config")
    w = weights if weights is not None else build_weights(config)
    hs = _hidden_state(z, t, w)                        # (HW, D)
    att = attention_from_hidden(hs, w, config.d_k)     # (HW, HW)
    mixed = hs + att @ (hs @ w.w_v.T)
    eps = mixed @ w.w_out.T + w.b_out                  # (HW, C)
    eps_grid = LatentGrid(eps.T.reshape(z.values.shape))
    rec = AttentionRecord(t=t, height=z.height, width=z.width, matrix=att)
    return eps_grid, rec


@dataclass(frozen=True)
class InversionTrace:
    z0: LatentGrid
    timesteps: tuple[int, ...]
    latents: tuple[LatentGrid, ...]
    records: tuple[AttentionRecord, ...]
    schedule: NoiseSchedule

    def __post_init__(self):
        if not (len(self.timesteps) == len(self.latents) == len(self.records)):
            raise ValueError("trace components must have equal length")

    @property
    def steps(self) -> int:
        return len(self.timesteps)

    def latent_at(self, step: int) -> LatentGrid:
        """Latent after ``step`` inversion updates; step 0 is the input."""
        if step < 0 or step > self.steps:
            raise ValueError(f"step must be in [0, {self.steps}]")
        return self.z0 if step == 0 else self.latents[step - 1]


def ddim_invert(z0: LatentGrid, steps: int, config: DenoiserConfig,
                schedule: NoiseSchedule,
                weights: DenoiserWeights | None = None) -> InversionTrace:
    """Deterministic DDIM inversion (sigma = 0) over uniformly strided timesteps."""
    w = weights if weights is not None else build_weights(config)
    ts = schedule.inversion_timesteps(steps)
    abar = schedule.alpha_bars
    z = z0
    latents, records = [], []
    t_prev = 0
    for t in ts:
        eps, rec = predict_noise(z, t, config, w)
        x0_hat = (z.values - np.sqrt(1.0 - abar[t_prev]) * eps.values) / np.sqrt(abar[t_prev])
        z = LatentGrid(np.sqrt(abar[t]) * x0_hat + np.sqrt(1.0 - abar[t]) * eps.values)
        latents.append(z)
        records.append(rec)
        t_prev = t
    return InversionTrace(z0=z0, timesteps=tuple(ts), latents=tuple(latents),
                          records=tuple(records), schedule=schedule)


def ddim_sample(z_s: LatentGrid, from_step: int, steps: int,
                config: DenoiserConfig, schedule: NoiseSchedule,
                weights: DenoiserWeights | None = None) -> LatentGrid:
    """Deterministic DDIM sampling from stride-step ``from_step`` down to 0."""
    if from_step < 0 or from_step > steps:
        raise ValueError(f"from_step must be in [0, {steps}]")
    w = weights if weights is not None else build_weights(config)
    ts = schedule.inversion_timesteps(steps)
    abar = schedule.alpha_bars
    z = z_s
    for i in range(from_step - 1, -1, -1):
        t = ts[i]
        t_prev = ts[i - 1] if i > 0 else 0
        eps, _ = predict_noise(z, t, config, w)
        x0_hat = (z.values - np.sqrt(1.0 - abar[t]) * eps.values) / np.sqrt(abar[t])
        z = LatentGrid(np.sqrt(abar[t_prev]) * x0_hat + np.sqrt(1.0 - abar[t_prev]) * eps.values)
    return z


# ---------------------------------------------------------------------------
# weight container serialization ("DWTS")

_WEIGHT_FIELDS = ("w_in", "b_in", "w_q", "w_k", "w_v", "w_out", "b_out")


def serialize_weights(w: DenoiserWeights) -> bytes:
    out = [WEIGHTS_MAGIC, struct.pack("<I", len(_WEIGHT_FIELDS))]
    for name in _WEIGHT_FIELDS:
        a = np.asarray(getattr(w, name), dtype="<f4")
        out.append(struct.pack("<I", a.ndim))
        out.append(struct.pack(f"<{a.ndim}I", *a.shape))
        out.append(a.tobytes())
    return b"".join(out)


def deserialize_weights(blob: bytes) -> DenoiserWeights:
    if blob[:4] != WEIGHTS_MAGIC:
        raise ValueError("not a DWTS blob")
    (n,) = struct.unpack("<I", blob[4:8])
    if n != len(_WEIGHT_FIELDS):
        raise ValueError("unexpected weight array count")
    off = 8
    arrays = {}
    for name in _WEIGHT_FIELDS:
        (ndim,) = struct.unpack("<I", blob[off:off + 4])
        off += 4
        shape = struct.unpack(f"<{ndim}I", blob[off:off + 4 * ndim])
        off += 4 * ndim
        count = int(np.prod(shape))
        a = np.frombuffer(blob, dtype="<f4", count=count, offset=off)
        off += 4 * count
        arrays[name] = a.astype(np.float64).reshape(shape)
    return DenoiserWeights(**arrays)

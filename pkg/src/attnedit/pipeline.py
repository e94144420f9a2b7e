"""End-to-end one-step edit: invert while recording attention, build maps,
mask and movement field at the configured edit step, warp, fill the vacated
positions, and sample back down.  Also the inpainting variant and multi-point
composition."""

from __future__ import annotations

import time
from dataclasses import dataclass, field, asdict, replace
from typing import Sequence

import numpy as np

from .attention import aggregate_records
from .diffusion import (DenoiserConfig, InversionTrace, NoiseSchedule,
                        build_weights, ddim_invert, ddim_sample)
from .grids import (AttentionMap, BinaryMask, LatentGrid, MovementField, Point,
                    dumps_canonical, flatten_index, serialize_grid)
from .interpolation import interpolate_blanks
from .masks import MaskConfig, generate_mask
from .movement import (DragInstruction, compute_movement_field, drag_vector,
                       masked_field, ratio_field, round_half_away, warp_latent)

_CONFIG_FIELDS = ("inversion_steps", "edit_step", "tau", "per_step_fields",
                  "restrict_destinations", "seed", "t_max", "beta_start",
                  "beta_end", "hidden", "d_k", "heads", "include_handle",
                  "dilation_radius", "zero_weights")


@dataclass(frozen=True)
class EditConfig:
    inversion_steps: int = 10
    edit_step: int = 5
    tau: float = 2.0
    per_step_fields: bool = False
    restrict_destinations: bool = False
    seed: int = 0
    t_max: int = 50
    beta_start: float = 1e-4
    beta_end: float = 2e-2
    hidden: int = 16
    d_k: int = 8
    heads: int = 2
    include_handle: bool = True
    dilation_radius: int = 0
    zero_weights: bool = False  # test hook: eps identically zero

    def __post_init__(self):
        if not (1 <= self.edit_step <= self.inversion_steps):
            raise ValueError("need 1 <= edit_step <= inversion_steps")
        if self.inversion_steps > self.t_max:
            raise ValueError("inversion_steps cannot exceed t_max")
        if self.tau <= 0:
            raise ValueError("tau must be positive")

    def to_json(self) -> dict:
        return {k: getattr(self, k) for k in _CONFIG_FIELDS}

    @classmethod
    def from_json(cls, obj: dict) -> "EditConfig":
        unknown = set(obj) - set(_CONFIG_FIELDS)
        if unknown:
            raise ValueError(f"unknown config fields: {sorted(unknown)}")
        return cls(**obj)

    def schedule(self) -> NoiseSchedule:
        return NoiseSchedule(self.t_max, self.beta_start, self.beta_end)

    def denoiser_config(self, grid: LatentGrid) -> DenoiserConfig:
        return DenoiserConfig(channels=grid.channels, height=grid.height,
                              width=grid.width, hidden=self.hidden,
                              d_k=self.d_k, heads=self.heads, seed=self.seed,
                              zero_weights=self.zero_weights)

    def mask_config(self) -> MaskConfig:
        return MaskConfig(tau=self.tau, include_handle=self.include_handle,
                          dilation_radius=self.dilation_radius)


@dataclass(frozen=True)
class EditRequest:
    grid: LatentGrid
    instructions: tuple[DragInstruction, ...] = ()
    user_mask: BinaryMask | None = None
    config: EditConfig = EditConfig()

    def __post_init__(self):
        if not self.instructions and self.user_mask is None:
            raise ValueError("request needs drag instructions or a user mask")
        for ins in self.instructions:
            self.grid.require_in_bounds(ins.handle)
            self.grid.require_in_bounds(ins.target)
        if self.user_mask is not None:
            if (self.user_mask.height, self.user_mask.width) != (self.grid.height, self.grid.width):
                raise ValueError("user mask dims do not match grid")


@dataclass(frozen=True)
class InstructionArtifacts:
    instruction: DragInstruction
    attention: AttentionMap
    mask: BinaryMask
    field: MovementField


@dataclass(frozen=True)
class EditReport:
    output: LatentGrid
    instructions: tuple[InstructionArtifacts, ...]
    blanks_filled: int
    collisions: int
    filled_latent: LatentGrid  # latent right before the final sampling pass
    timings: dict

    def canonical_bytes(self) -> bytes:
        """Deterministic encoding of everything except wall-clock timings."""
        parts = [serialize_grid(self.output), serialize_grid(self.filled_latent)]
        meta = {
            "blanks_filled": self.blanks_filled,
            "collisions": self.collisions,
            "instructions": [
                {"instruction": a.instruction.to_json(),
                 "attention": a.attention.to_json(),
                 "mask": a.mask.to_json(),
                 "field": a.field.to_json()}
                for a in self.instructions
            ],
        }
        parts.append(dumps_canonical(meta))
        return b"".join(parts)


class _Phases:
    def __init__(self):
        self.timings: dict[str, float] = {}
        self._t0 = 0.0
        self._name = None

    def start(self, name: str):
        self._name = name
        self._t0 = time.perf_counter()

    def stop(self):
        self.timings[self._name] = time.perf_counter() - self._t0


def compose_multi_point(fields: Sequence[MovementField],
                        masks: Sequence[BinaryMask],
                        ratios: Sequence[np.ndarray]):
    """Combine per-instruction fields.  The mask is the union; a position
    claimed by several instructions follows the one with the higher attention
    ratio there, ties to the earlier instruction.  Returns the combined field,
    mask, and the winning ratio per position (warp priorities)."""
    n = len(fields)
    if not (n == len(masks) == len(ratios)) or n == 0:
        raise ValueError("need matching nonempty fields/masks/ratios")
    h, w = fields[0].height, fields[0].width
    union = masks[0]
    for m in masks[1:]:
        union = union.union(m)
    claimed = np.stack([m.bits.astype(bool) for m in masks])      # (n, H, W)
    scores = np.where(claimed, np.stack(ratios), -np.inf)
    winner = scores.argmax(axis=0)                                 # ties -> earlier
    any_claim = claimed.any(axis=0)
    dx = np.select([any_claim], [np.take_along_axis(
        np.stack([f.dx for f in fields]), winner[None], 0)[0]], 0)
    dy = np.select([any_claim], [np.take_along_axis(
        np.stack([f.dy for f in fields]), winner[None], 0)[0]], 0)
    prio = np.where(any_claim, np.take_along_axis(np.stack(ratios), winner[None], 0)[0], 0.0)
    return MovementField(dx, dy), union, prio


def _restrict_destinations(f: MovementField, mask: BinaryMask) -> MovementField:
    """Optional stricter reading: drop moves whose (clamped) destination
    falls outside the mask."""
    h, w = f.height, f.width
    ys, xs = np.mgrid[0:h, 0:w]
    tx = np.clip(xs + f.dx, 0, w - 1)
    ty = np.clip(ys + f.dy, 0, h - 1)
    ok = mask.bits[ty, tx].astype(bool)
    return MovementField(np.where(ok, f.dx, 0), np.where(ok, f.dy, 0))


def _per_step_raw(trace: InversionTrace, handle: Point) -> np.ndarray:
    """Literal per-step reading: average of per-step ratio maps, each
    normalized by its own handle weight."""
    h, w = trace.records[0].height, trace.records[0].width
    idx = flatten_index(handle, w, h)
    acc = np.zeros((h, w))
    for rec in trace.records:
        row = rec.matrix[idx].reshape(h, w)
        acc += row / row[handle.y, handle.x]
    return acc / len(trace.records)


def run_edit(req: EditRequest) -> EditReport:
    if req.instructions:
        return _run_drag(req)
    return run_inpaint(req)


def _run_drag(req: EditRequest) -> EditReport:
    cfg = req.config
    phases = _Phases()
    schedule = cfg.schedule()
    dcfg = cfg.denoiser_config(req.grid)
    weights = build_weights(dcfg)

    phases.start("invert")
    trace = ddim_invert(req.grid, cfg.inversion_steps, dcfg, schedule, weights)
    phases.stop()

    phases.start("analyze")
    agg = aggregate_records(trace.records)
    h, w = req.grid.height, req.grid.width
    artifacts = []
    fields, masks, ratios = [], [], []
    for ins in req.instructions:
        idx = flatten_index(ins.handle, w, h)
        amap = AttentionMap(agg[idx].reshape(h, w))
        mask = generate_mask(amap, ins.handle, cfg.mask_config())
        v = drag_vector(ins)
        if cfg.per_step_fields:
            raw = _per_step_raw(trace, ins.handle)
            fld = masked_field(round_half_away(raw * v[0]),
                               round_half_away(raw * v[1]), mask)
        else:
            fld = compute_movement_field(amap, ins.handle, v, mask)
        if cfg.restrict_destinations:
            fld = _restrict_destinations(fld, mask)
        artifacts.append(InstructionArtifacts(ins, amap, mask, fld))
        fields.append(fld)
        masks.append(mask)
        ratios.append(ratio_field(amap, ins.handle))
    if len(fields) == 1:
        combined_field, combined_mask = fields[0], masks[0]
        priorities = artifacts[0].attention
    else:
        combined_field, combined_mask, prio = compose_multi_point(
            [a.field for a in artifacts], masks, ratios)
        s = prio.sum()
        priorities = AttentionMap(prio / s if s > 0 else
                                  np.full((h, w), 1.0 / (h * w)))
    phases.stop()

    z_s = trace.latent_at(cfg.edit_step)
    phases.start("warp")
    wr = warp_latent(z_s, combined_field, priorities)
    phases.stop()

    phases.start("interpolate")
    if wr.blanks:
        rows = {b: AttentionMap(agg[flatten_index(b, w, h)].reshape(h, w))
                for b in wr.blanks}
        filled = interpolate_blanks(wr.warped, wr.blanks, rows)
    else:
        filled = wr.warped
    phases.stop()

    phases.start("sample")
    out = ddim_sample(filled, cfg.edit_step, cfg.inversion_steps, dcfg,
                      schedule, weights)
    phases.stop()

    return EditReport(output=out, instructions=tuple(artifacts),
                      blanks_filled=len(wr.blanks), collisions=wr.writes,
                      filled_latent=filled, timings=phases.timings)


def run_inpaint(req: EditRequest) -> EditReport:
    if req.user_mask is None:
        raise ValueError("inpainting needs a user mask")
    if req.instructions:
        raise ValueError("inpainting takes no drag instructions")
    cfg = req.config
    mask = req.user_mask
    h, w = req.grid.height, req.grid.width
    if mask.count() == h * w:
        raise ValueError("full-grid mask leaves no contributors")
    phases = _Phases()
    schedule = cfg.schedule()
    dcfg = cfg.denoiser_config(req.grid)
    weights = build_weights(dcfg)

    phases.start("invert")
    trace = ddim_invert(req.grid, cfg.inversion_steps, dcfg, schedule, weights)
    phases.stop()

    phases.start("analyze")
    agg = aggregate_records(trace.records)
    blanks = [Point(int(x), int(y)) for y, x in zip(*np.nonzero(mask.bits))]
    phases.stop()

    z_s = trace.latent_at(cfg.edit_step)
    phases.start("interpolate")
    if blanks:
        rows = {b: AttentionMap(agg[flatten_index(b, w, h)].reshape(h, w))
                for b in blanks}
        filled = interpolate_blanks(z_s, blanks, rows)
    else:
        filled = z_s
    phases.stop()

    phases.start("sample")
    out = ddim_sample(filled, cfg.edit_step, cfg.inversion_steps, dcfg,
                      schedule, weights)
    phases.stop()

    return EditReport(output=out, instructions=(), blanks_filled=len(blanks),
                      collisions=0, filled_latent=filled, timings=phases.timings)


def baseline_roundtrip(grid: LatentGrid, cfg: EditConfig) -> LatentGrid:
    """No-edit reference: invert to the edit step, sample straight back."""
    schedule = cfg.schedule()
    dcfg = cfg.denoiser_config(grid)
    weights = build_weights(dcfg)
    trace = ddim_invert(grid, cfg.inversion_steps, dcfg, schedule, weights)
    return ddim_sample(trace.latent_at(cfg.edit_step), cfg.edit_step,
                       cfg.inversion_steps, dcfg, schedule, weights)

"""Command line interface: scene generation, drag edits, inpainting,
tau sweeps, and the HTTP service."""

from __future__ import annotations

import json
import sys

import click
import numpy as np

from .grids import BinaryMask, Point, deserialize_grid, serialize_grid
from .movement import DragInstruction
from .pipeline import EditConfig, EditRequest, run_edit, run_inpaint
from .scenes import (NAMED_SCENES, grid_to_ppm, make_scene, random_scene,
                     sweep_table, tau_sweep, SyntheticScene)


def parse_points(spec: str) -> tuple[DragInstruction, ...]:
    """Parse ``"x0,y0:x1,y1;..."`` into handle/target instructions."""
    out = []
    for pair in spec.split(";"):
        pair = pair.strip()
        if not pair:
            continue
        try:
            h, t = pair.split(":")
            hx, hy = (int(v) for v in h.split(","))
            tx, ty = (int(v) for v in t.split(","))
        except ValueError:
            raise click.UsageError(f"bad point pair {pair!r}, expected 'x0,y0:x1,y1'")
        out.append(DragInstruction(Point(hx, hy), Point(tx, ty)))
    if not out:
        raise click.UsageError("no point pairs given")
    return tuple(out)


def load_config(config_path, **overrides) -> EditConfig:
    base = {}
    if config_path:
        with open(config_path) as f:
            base = json.load(f)
    base.update({k: v for k, v in overrides.items() if v is not None})
    try:
        return EditConfig.from_json(base)
    except (TypeError, ValueError) as e:
        raise click.UsageError(str(e))


def load_grid(path):
    try:
        with open(path, "rb") as f:
            return deserialize_grid(f.read())
    except (OSError, ValueError) as e:
        raise click.UsageError(str(e))


def write_report(report, path):
    doc = {
        "blanks_filled": report.blanks_filled,
        "collisions": report.collisions,
        "timings": report.timings,
        "instructions": [
            {"instruction": a.instruction.to_json(),
             "mask": a.mask.to_json(),
             "field": a.field.to_json()}
            for a in report.instructions
        ],
    }
    with open(path, "w") as f:
        json.dump(doc, f, indent=2)


_config_options = [
    click.option("--tau", type=float, default=None, help="mask threshold (default 2.0)"),
    click.option("--steps", type=int, default=None, help="inversion/sampling steps (default 10)"),
    click.option("--edit-step", type=int, default=None, help="step at which the warp applies (default 5)"),
    click.option("--seed", type=int, default=None, help="denoiser weight seed"),
    click.option("--config", "config_path", type=click.Path(exists=True),
                 help="JSON config file mirroring EditConfig field names"),
]


def config_options(f):
    for opt in reversed(_config_options):
        f = opt(f)
    return f


@click.group()
def main():
    """Attention-guided one-step drag editing."""


@main.command()
@click.option("--name", type=click.Choice(sorted(NAMED_SCENES)), default=None)
@click.option("--random-seed", type=int, default=None,
              help="seeded random blob scene with a suggested drag")
@click.option("--out", required=True, type=click.Path(), help="output LGRD path")
@click.option("--meta", type=click.Path(), help="write scene/drag metadata JSON")
def scene(name, random_seed, out, meta):
    """Generate a synthetic blob scene grid."""
    if (name is None) == (random_seed is None):
        raise click.UsageError("give exactly one of --name or --random-seed")
    instr = None
    if name:
        sc = NAMED_SCENES[name]()
    else:
        sc, instr = random_scene(random_seed)
    with open(out, "wb") as f:
        f.write(serialize_grid(sc.grid))
    if meta:
        doc = {"blobs": [{"center": {"x": b.center.x, "y": b.center.y},
                          "radius": b.radius, "amplitude": b.amplitude}
                         for b in sc.blobs]}
        if instr is not None:
            doc["suggested_drag"] = instr.to_json()
        with open(meta, "w") as f:
            json.dump(doc, f, indent=2)
    click.echo(f"wrote {sc.grid.channels}x{sc.grid.height}x{sc.grid.width} grid to {out}")


@main.command()
@click.option("--input", "input_path", required=True, type=click.Path(exists=True))
@click.option("--points", required=True, help='drag pairs "x0,y0:x1,y1;..."')
@click.option("--out", required=True, type=click.Path())
@click.option("--report", "report_path", type=click.Path())
@click.option("--ppm", "ppm_path", type=click.Path(), help="also write a PPM render")
@config_options
def edit(input_path, points, out, report_path, ppm_path, tau, steps, edit_step,
         seed, config_path):
    """Run a one-step drag edit."""
    grid = load_grid(input_path)
    cfg = load_config(config_path, tau=tau, inversion_steps=steps,
                      edit_step=edit_step, seed=seed)
    instructions = parse_points(points)
    try:
        req = EditRequest(grid=grid, instructions=instructions, config=cfg)
        rep = run_edit(req)
    except ValueError as e:
        raise click.UsageError(str(e))
    with open(out, "wb") as f:
        f.write(serialize_grid(rep.output))
    if ppm_path:
        with open(ppm_path, "wb") as f:
            f.write(grid_to_ppm(rep.output))
    if report_path:
        write_report(rep, report_path)
    click.echo(f"edited {len(instructions)} point(s), filled {rep.blanks_filled} blank(s)")


@main.command()
@click.option("--input", "input_path", required=True, type=click.Path(exists=True))
@click.option("--mask", "mask_path", required=True, type=click.Path(exists=True),
              help="JSON mask with row-major bit rows")
@click.option("--out", required=True, type=click.Path())
@click.option("--report", "report_path", type=click.Path())
@config_options
def inpaint(input_path, mask_path, out, report_path, tau, steps, edit_step,
            seed, config_path):
    """Fill a user-masked region with attention-weighted interpolation."""
    grid = load_grid(input_path)
    cfg = load_config(config_path, tau=tau, inversion_steps=steps,
                      edit_step=edit_step, seed=seed)
    try:
        with open(mask_path) as f:
            mask = BinaryMask.from_json(json.load(f))
        req = EditRequest(grid=grid, user_mask=mask, config=cfg)
        rep = run_inpaint(req)
    except (ValueError, KeyError) as e:
        raise click.UsageError(str(e))
    with open(out, "wb") as f:
        f.write(serialize_grid(rep.output))
    if report_path:
        write_report(rep, report_path)
    click.echo(f"filled {rep.blanks_filled} masked position(s)")


@main.command()
@click.option("--input", "input_path", required=True, type=click.Path(exists=True))
@click.option("--meta", "meta_path", required=True, type=click.Path(exists=True),
              help="scene metadata JSON from the scene command")
@click.option("--points", default=None, help='single drag pair "x0,y0:x1,y1"')
@click.option("--taus", default="1.8,1.9,2.0,2.1", show_default=True)
@click.option("--json", "json_path", type=click.Path())
@config_options
def sweep(input_path, meta_path, points, taus, json_path, tau, steps, edit_step,
          seed, config_path):
    """Run the tau ablation sweep and print an aligned table."""
    grid = load_grid(input_path)
    with open(meta_path) as f:
        meta = json.load(f)
    from .scenes import Blob
    sc = SyntheticScene(grid, tuple(
        Blob(Point(b["center"]["x"], b["center"]["y"]), b["radius"], b["amplitude"])
        for b in meta["blobs"]))
    if points:
        instr = parse_points(points)[0]
    elif "suggested_drag" in meta:
        instr = DragInstruction.from_json(meta["suggested_drag"])
    else:
        raise click.UsageError("give --points or a meta file with suggested_drag")
    cfg = load_config(config_path, inversion_steps=steps, edit_step=edit_step,
                      seed=seed)
    try:
        tau_list = [float(v) for v in taus.split(",") if v.strip()]
        rows = tau_sweep(sc, instr, tau_list, cfg)
    except ValueError as e:
        raise click.UsageError(str(e))
    click.echo(sweep_table(rows))
    if json_path:
        doc = [{"tau": r["tau"], "md": r["md"], "fidelity": r["fidelity"],
                "timings": r["timings"]} for r in rows]
        with open(json_path, "w") as f:
            json.dump(doc, f, indent=2)


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True)
def serve(host, port):
    """Start the HTTP session service."""
    import uvicorn

    from .service import app

    uvicorn.run(app, host=host, port=port)


if __name__ == "__main__":
    main()

"""Command-line tools: batch edit programs, one-shot renders, depth metrics,
and the interactive session service.

``sculpt run`` executes a ``*.sculpt.json`` edit program against an asset
directory and writes its render artifacts plus ``run-report.json`` holding
per-op timings and SHA-256 hashes of every artifact.  Exit codes: 0 on
success, 2 when the program fails to parse, 3 when execution fails; a
failure report records the failing op index.

``sculpt render`` renders a single OBJ with the default camera,
``sculpt metrics d-rmse`` compares two depth PNGs, and ``sculpt serve``
runs the HTTP/websocket session service.  The ``SCULPT_LOG`` environment
variable sets the log level for every command (default WARNING).
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import sys
from pathlib import Path

import click
import numpy as np

from .mesh import load_obj
from .metrics import DepthPair, d_rmse
from .render import (
    load_depth_png,
    render_scene,
    save_color_png,
    save_depth_png,
    save_mask_png,
)
from .scene import (
    EditProgramError,
    Scene,
    add_instance,
    load_edit_program,
    run_edit_program,
)

EXIT_PARSE_ERROR = 2
EXIT_EXECUTION_ERROR = 3


def _sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _write_report(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")


def _artifact_entries(artifacts, out_dir: Path) -> list:
    entries = []
    for item in artifacts:
        p = Path(item)
        try:
            shown = p.relative_to(out_dir).as_posix()
        except ValueError:
            shown = str(p)
        entries.append({"path": shown, "sha256": _sha256(p)})
    return entries


@click.group()
def main():
    """3D sculpting toolkit: edit programs, renders, metrics, service."""
    level_name = os.environ.get("SCULPT_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level_name, logging.WARNING))


@main.command()
@click.option(
    "--edits",
    "edits_path",
    required=True,
    type=click.Path(exists=True, dir_okay=False, path_type=Path),
    help="Edit program (*.sculpt.json) to execute.",
)
@click.option(
    "--assets",
    "asset_root",
    required=True,
    type=click.Path(exists=True, file_okay=False, path_type=Path),
    help="Directory the program's mesh/rig references resolve in.",
)
@click.option(
    "--out",
    "out_dir",
    required=True,
    type=click.Path(file_okay=False, path_type=Path),
    help="Directory for render artifacts and run-report.json.",
)
def run(edits_path: Path, asset_root: Path, out_dir: Path):
    """Execute an edit program; write artifacts and a run report."""
    out_dir.mkdir(parents=True, exist_ok=True)
    report_path = out_dir / "run-report.json"
    report = {
        "program": str(edits_path),
        "status": "ok",
        "ops": [],
        "artifacts": [],
    }
    try:
        program = load_edit_program(edits_path)
    except EditProgramError as exc:
        report["status"] = "error"
        report["error"] = {"message": str(exc), "op_index": exc.index}
        _write_report(report_path, report)
        click.echo(f"parse error: {exc}", err=True)
        sys.exit(EXIT_PARSE_ERROR)
    report["units"] = program.units
    ops = report["ops"]

    def record(index, rec, seconds):
        ops.append({"index": index, "op": rec["op"], "seconds": seconds})

    try:
        result = run_edit_program(program, asset_root, out_dir, on_op=record)
    except EditProgramError as exc:
        report["status"] = "error"
        report["error"] = {"message": str(exc), "op_index": exc.index}
        _write_report(report_path, report)
        click.echo(f"execution error: {exc}", err=True)
        sys.exit(EXIT_EXECUTION_ERROR)
    report["artifacts"] = _artifact_entries(result.artifacts, out_dir)
    _write_report(report_path, report)
    click.echo(
        f"{len(program.edits)} edits ok; "
        f"{len(report['artifacts'])} artifacts in {out_dir}"
    )


@main.command()
@click.argument(
    "mesh_path", type=click.Path(exists=True, dir_okay=False, path_type=Path)
)
@click.option(
    "--out",
    "out_dir",
    required=True,
    type=click.Path(file_okay=False, path_type=Path),
    help="Directory for the color/depth/mask artifacts.",
)
@click.option(
    "--stem", default="render", show_default=True, help="Artifact filename stem."
)
def render(mesh_path: Path, out_dir: Path, stem: str):
    """Render one OBJ mesh at the origin with the default camera."""
    try:
        mesh = load_obj(mesh_path)
    except ValueError as exc:
        click.echo(f"parse error: {exc}", err=True)
        sys.exit(EXIT_PARSE_ERROR)
    scene = add_instance(Scene(), mesh, np.eye(4), "model")
    result = render_scene(scene)
    out_dir.mkdir(parents=True, exist_ok=True)
    color = out_dir / f"{stem}.png"
    depth = out_dir / f"{stem}_depth.png"
    mask = out_dir / f"{stem}_mask.png"
    try:
        save_color_png(result.color, color)
        save_depth_png(result.depth, depth)
        save_mask_png(result.mask, mask)
    except ValueError as exc:
        click.echo(f"execution error: {exc}", err=True)
        sys.exit(EXIT_EXECUTION_ERROR)
    for p in (color, depth, mask):
        click.echo(str(p))


@main.group()
def metrics():
    """Depth-map comparison metrics."""


@metrics.command("d-rmse")
@click.argument(
    "depth_a", type=click.Path(exists=True, dir_okay=False, path_type=Path)
)
@click.argument(
    "depth_b", type=click.Path(exists=True, dir_okay=False, path_type=Path)
)
@click.option(
    "--align",
    type=click.Choice(["none", "affine"]),
    default="none",
    show_default=True,
    help="Remove the best scale-and-shift from the second map first.",
)
def metrics_d_rmse(depth_a: Path, depth_b: Path, align: str):
    """Print the RMS depth discrepancy between two depth PNGs."""
    try:
        pair = DepthPair(load_depth_png(depth_a), load_depth_png(depth_b))
        value = d_rmse(pair, align=align)
    except (ValueError, OSError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_EXECUTION_ERROR)
    click.echo(f"{value:.6g}")


@main.command()
@click.option("--port", default=7431, show_default=True, type=int)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option(
    "--artifacts",
    "artifact_root",
    default=None,
    type=click.Path(file_okay=False, path_type=Path),
    help="Directory for session artifacts (default: a fresh temp dir).",
)
def serve(port: int, host: str, artifact_root):
    """Run the interactive session service (HTTP + websocket)."""
    import uvicorn

    from .service import create_app

    app = create_app(artifact_root=artifact_root)
    uvicorn.run(
        app,
        host=host,
        port=port,
        log_level=os.environ.get("SCULPT_LOG", "info").lower(),
    )


if __name__ == "__main__":
    main()

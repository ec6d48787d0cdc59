"""Command-line interface.

Every command that reports numbers writes delimited output (TSV/CSV or
line-delimited JSON) and, unless ``--no-plot`` is given, a rendered figure
next to it.
"""

from __future__ import annotations

import csv
import json
import os
from pathlib import Path

import click
import numpy as np
import yaml

from . import plotting
from .backends.base import Backends, BackendManifest, build_backends
from .editor import DELTA_DEFAULT, DELTA_SWEEP_GRID, EditRequest, edit, measure_pair, sweep
from .errors import InvalidInputError
from .images import write_png
from .preselect import PreselectResult, init_mask_matrix, preselect_channels
from .qmm import load_attribute_catalog
from .serialization import load_style_code, save_style_code
from .stylespace import StyleCode
from .trainer import Checkpoint, TrainConfig, train


@click.group()
@click.version_option(package_name="stylemask")
def main():
    """Semantic attribute transfer over style-code channels."""


def _resolve(base: Path, value: str) -> Path:
    path = Path(value)
    return path if path.is_absolute() else (base / path)


def _backends_for_checkpoint(ckpt: Checkpoint, attributes_path: str) -> Backends:
    catalog = load_attribute_catalog(attributes_path)
    if catalog.names != tuple(ckpt.attribute_names):
        raise click.ClickException(
            f"catalog attributes {catalog.names} do not match checkpoint "
            f"{tuple(ckpt.attribute_names)}"
        )
    return build_backends(ckpt.manifest, catalog)


def _style_code(backends: Backends, seed: int | None, index: int, code_path: str | None) -> StyleCode:
    if code_path is not None:
        return load_style_code(code_path)
    if seed is None:
        raise click.ClickException("pass either a seed or a style-code file")
    gen = backends.generator
    z, pose = gen.sample_latent((seed, index))
    return gen.to_style(z, pose)


def _write_report_tsv(rows, path: Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, delimiter="\t")
        writer.writerow(["attribute", "targeted", "distance"])
        for r in rows:
            writer.writerow([r["name"], int(r["targeted"]), repr(r["distance"])])


# ---------------------------------------------------------------------------
# preselect
# ---------------------------------------------------------------------------

@main.command()
@click.option("--manifest", "manifest_path", required=True, type=click.Path(exists=True))
@click.option("--attributes", "attributes_path", required=True, type=click.Path(exists=True))
@click.option("--iters", default=256, show_default=True)
@click.option("--seed", default=123, show_default=True)
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--plot/--no-plot", default=True, show_default=True)
def preselect(manifest_path, attributes_path, iters, seed, out_path, plot):
    """Rank channels by region attribution and pick per-attribute budgets."""
    manifest = BackendManifest.load(manifest_path)
    catalog = load_attribute_catalog(attributes_path)
    backends = build_backends(manifest, catalog)
    result = preselect_channels(
        backends.generator, backends.segmenter, catalog.attributes, iters=iters, seed=seed
    )
    out = Path(out_path)
    out.parent.mkdir(parents=True, exist_ok=True)
    result.save(out)
    click.echo(f"wrote {out}")
    for name, channels in result.channels.items():
        click.echo(f"  {name}: channels {list(channels)}")
    if plot:
        fig = plotting.attribution_figure(result.table.scores, result.table.regions)
        click.echo(f"wrote {plotting.save_figure(fig, out.with_suffix('.png'))}")


# ---------------------------------------------------------------------------
# train
# ---------------------------------------------------------------------------

@main.command(name="train")
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--out-dir", "out_dir", required=True, type=click.Path())
@click.option("--resume", "resume_path", type=click.Path(exists=True), default=None)
@click.option("--plot/--no-plot", default=True, show_default=True)
def train_cmd(config_path, out_dir, resume_path, plot):
    """Optimize the mask matrix per a run-config file.

    The run config names the backend manifest, the attribute catalog, the
    initialization mode, and the training hyperparameters; see
    data/toy_train.yaml for the documented schema.
    """
    config_path = Path(config_path)
    raw = yaml.safe_load(config_path.read_text())
    base = config_path.parent
    manifest = BackendManifest.load(_resolve(base, raw["manifest"]))
    catalog = load_attribute_catalog(_resolve(base, raw["attributes"]))
    backends = build_backends(manifest, catalog)
    cfg = TrainConfig.from_dict(raw.get("train", {}))

    init_mode = raw.get("init", "preselect")
    preselected = {}
    if init_mode == "preselect":
        artifact = raw.get("preselect_artifact")
        if artifact:
            preselected = PreselectResult.load(_resolve(base, artifact)).channels
        else:
            result = preselect_channels(
                backends.generator,
                backends.segmenter,
                catalog.attributes,
                iters=int(raw.get("preselect_iters", 256)),
                seed=int(raw.get("preselect_seed", 123)),
            )
            preselected = result.channels
    elif init_mode != "plain":
        raise click.ClickException(f"unknown init mode {init_mode!r}")

    matrix = init_mask_matrix(
        backends.generator.n_channels, catalog.attributes, preselected, backends.generator.editable
    )
    resume = Checkpoint.load(resume_path) if resume_path else None
    ckpt = train(matrix, cfg, backends, out_dir=out_dir, resume=resume)
    click.echo(f"trained to step {ckpt.step}; checkpoint at {Path(out_dir) / 'checkpoint.json'}")
    if plot:
        records = [
            json.loads(line)
            for line in (Path(out_dir) / "losses.jsonl").read_text().splitlines()
        ]
        fig = plotting.loss_curves_figure(records)
        click.echo(f"wrote {plotting.save_figure(fig, Path(out_dir) / 'loss_curve.png')}")


# ---------------------------------------------------------------------------
# edit / measure / sweep
# ---------------------------------------------------------------------------

_pair_options = [
    click.option("--checkpoint", "checkpoint_path", required=True, type=click.Path(exists=True)),
    click.option("--attributes", "attributes_path", required=True, type=click.Path(exists=True)),
    click.option("--source-seed", type=int, default=None),
    click.option("--source-index", type=int, default=0, show_default=True),
    click.option("--source-code", "source_code", type=click.Path(exists=True), default=None),
    click.option("--reference-seed", type=int, default=None),
    click.option("--reference-index", type=int, default=0, show_default=True),
    click.option("--reference-code", "reference_code", type=click.Path(exists=True), default=None),
]


def pair_options(fn):
    for opt in reversed(_pair_options):
        fn = opt(fn)
    return fn


@main.command(name="edit")
@pair_options
@click.option("--set", "-a", "omega", multiple=True, required=True, help="target attribute (repeatable)")
@click.option("--delta", default=DELTA_DEFAULT, show_default=True)
@click.option("--out-dir", "out_dir", required=True, type=click.Path())
@click.option("--plot/--no-plot", default=True, show_default=True)
def edit_cmd(checkpoint_path, attributes_path, source_seed, source_index, source_code,
             reference_seed, reference_index, reference_code, omega, delta, out_dir, plot):
    """Transfer target attributes from a reference onto a source."""
    ckpt = Checkpoint.load(checkpoint_path)
    backends = _backends_for_checkpoint(ckpt, attributes_path)
    s_src = _style_code(backends, source_seed, source_index, source_code)
    s_ref = _style_code(backends, reference_seed, reference_index, reference_code)
    try:
        result = edit(EditRequest(s_src=s_src, s_ref=s_ref, omega=omega, delta=delta), ckpt, backends)
    except InvalidInputError as exc:
        raise click.ClickException(str(exc)) from exc
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_png(result.image, out / "edited.png")
    write_png(backends.generator.synthesize(s_src), out / "source.png")
    write_png(backends.generator.synthesize(s_ref), out / "reference.png")
    save_style_code(result.s_edit, out / "edited_code.json", delta=delta, attributes=list(omega))
    rows = [
        {"name": r.name, "targeted": r.targeted, "distance": r.distance}
        for r in result.report
    ]
    (out / "report.json").write_text(json.dumps({"delta": delta, "attributes": list(omega), "report": rows}, indent=2) + "\n")
    _write_report_tsv(rows, out / "report.tsv")
    if plot:
        fig = plotting.qmm_report_figure(rows, title=f"edit {'+'.join(omega)} @ delta={delta:g}")
        plotting.save_figure(fig, out / "report.png")
    click.echo(f"wrote {out}/edited.png")
    for r in rows:
        kind = "-> reference" if r["targeted"] else "-> source"
        click.echo(f"  {r['name']:>12} {kind}: {r['distance']:.6f}")


@main.command(name="measure")
@pair_options
@click.option("--out-dir", "out_dir", required=True, type=click.Path())
@click.option("--plot/--no-plot", default=True, show_default=True)
def measure_cmd(checkpoint_path, attributes_path, source_seed, source_index, source_code,
                reference_seed, reference_index, reference_code, out_dir, plot):
    """Report per-attribute distances between two images."""
    ckpt = Checkpoint.load(checkpoint_path)
    backends = _backends_for_checkpoint(ckpt, attributes_path)
    s_a = _style_code(backends, source_seed, source_index, source_code)
    s_b = _style_code(backends, reference_seed, reference_index, reference_code)
    image_a = backends.generator.synthesize(s_a)
    image_b = backends.generator.synthesize(s_b)
    distances = measure_pair(backends, image_a, image_b)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rows = [{"name": k, "targeted": False, "distance": v} for k, v in distances.items()]
    _write_report_tsv(rows, out / "report.tsv")
    (out / "report.json").write_text(json.dumps({"report": rows}, indent=2) + "\n")
    if plot:
        fig = plotting.qmm_report_figure(rows, title="pair distances")
        plotting.save_figure(fig, out / "report.png")
    for r in rows:
        click.echo(f"  {r['name']:>12}: {r['distance']:.6f}")


@main.command(name="sweep")
@pair_options
@click.option("--set", "-a", "omega", multiple=True, required=True)
@click.option("--deltas", "deltas_text", default=None, help="comma-separated intensities")
@click.option("--out-dir", "out_dir", required=True, type=click.Path())
@click.option("--plot/--no-plot", default=True, show_default=True)
def sweep_cmd(checkpoint_path, attributes_path, source_seed, source_index, source_code,
              reference_seed, reference_index, reference_code, omega, deltas_text, out_dir, plot):
    """Edit at a grid of intensities and chart the distance trends."""
    ckpt = Checkpoint.load(checkpoint_path)
    backends = _backends_for_checkpoint(ckpt, attributes_path)
    s_src = _style_code(backends, source_seed, source_index, source_code)
    s_ref = _style_code(backends, reference_seed, reference_index, reference_code)
    deltas = (
        [float(v) for v in deltas_text.split(",")] if deltas_text else list(DELTA_SWEEP_GRID)
    )
    results = sweep(s_src, s_ref, omega, deltas, ckpt, backends)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "sweep.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["delta", "attribute", "targeted", "distance"])
        for result in results:
            write_png(result.image, out / f"edited_delta_{result.delta:g}.png")
            for r in result.report:
                writer.writerow([result.delta, r.name, int(r.targeted), repr(r.distance)])
    if plot:
        series = {
            r.name: [res.reading(r.name).distance for res in results]
            for r in results[0].report
        }
        fig = plotting.sweep_figure(deltas, series)
        plotting.save_figure(fig, out / "sweep.png")
    click.echo(f"wrote {out}/sweep.csv ({len(results)} intensities)")


# ---------------------------------------------------------------------------
# sample / serve
# ---------------------------------------------------------------------------

@main.command(name="sample")
@click.option("--manifest", "manifest_path", type=click.Path(exists=True), default=None)
@click.option("--checkpoint", "checkpoint_path", type=click.Path(exists=True), default=None)
@click.option("--attributes", "attributes_path", required=True, type=click.Path(exists=True))
@click.option("--seed", default=0, show_default=True)
@click.option("--count", default=8, show_default=True)
@click.option("--out-dir", "out_dir", required=True, type=click.Path())
def sample_cmd(manifest_path, checkpoint_path, attributes_path, seed, count, out_dir):
    """Render a deterministic gallery of sampled latents."""
    if manifest_path:
        manifest = BackendManifest.load(manifest_path)
    elif checkpoint_path:
        manifest = Checkpoint.load(checkpoint_path).manifest
    else:
        raise click.ClickException("pass --manifest or --checkpoint")
    catalog = load_attribute_catalog(attributes_path)
    backends = build_backends(manifest, catalog)
    gen = backends.generator
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "index.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["file", "seed", "index", "pose"])
        for index in range(count):
            z, pose = gen.sample_latent((seed, index))
            code = gen.to_style(z, pose)
            name = f"sample_{seed}_{index:03d}.png"
            write_png(gen.synthesize(code), out / name)
            save_style_code(code, out / f"sample_{seed}_{index:03d}.json",
                            seed=seed, index=index, pose=float(pose[0]))
            writer.writerow([name, seed, index, repr(float(pose[0]))])
    click.echo(f"wrote {count} samples to {out}")


@main.command(name="serve")
@click.option("--config", "config_path", type=click.Path(exists=True), default=None,
              help="service config: attributes, cache_dir, ui_dir, host")
@click.option("--checkpoint", "checkpoint_path", required=True, type=click.Path(exists=True))
@click.option("--attributes", "attributes_path", type=click.Path(exists=True), default=None)
@click.option("--port", default=None, type=int)
@click.option("--host", default=None)
def serve_cmd(config_path, checkpoint_path, attributes_path, port, host):
    """Run the HTTP editing service.

    STYLEMASK_PORT and STYLEMASK_CACHE_DIR override the port and cache
    directory.
    """
    import uvicorn

    from .service import create_app, mount_ui

    raw = {}
    base = Path(".")
    if config_path:
        config_path = Path(config_path)
        raw = yaml.safe_load(config_path.read_text()) or {}
        base = config_path.parent
    attributes_path = attributes_path or str(_resolve(base, raw["attributes"]))
    cache_dir = os.environ.get(
        "STYLEMASK_CACHE_DIR", str(_resolve(base, raw.get("cache_dir", "image_cache")))
    )
    ckpt = Checkpoint.load(checkpoint_path)
    backends = _backends_for_checkpoint(ckpt, attributes_path)
    app = create_app(backends, ckpt, cache_dir)
    ui_dir = raw.get("ui_dir")
    if ui_dir and Path(_resolve(base, ui_dir)).exists():
        mount_ui(app, _resolve(base, ui_dir))
    port = port or int(os.environ.get("STYLEMASK_PORT", raw.get("port", 8321)))
    host = host or raw.get("host", "127.0.0.1")
    uvicorn.run(app, host=host, port=port, log_level="warning")


if __name__ == "__main__":
    main()

"""Batch command line: describe, index, query, evaluate, sweep, sinogram."""

from __future__ import annotations

import csv
import functools
import sys
import time
from pathlib import Path

import click

from . import __version__
from .descriptor import LrdParams, PRESETS
from .io import (
    PipelineConfig,
    extract_from_manifest,
    load_descriptors,
    load_image,
    manifest_from_holidays_dir,
    manifest_from_irma_files,
    read_manifest,
    save_descriptors,
    standardize,
    worker_count,
    write_manifest,
)
from .evaluation import evaluate_holidays, evaluate_irma
from .radon import sinogram as compute_sinogram
from .retrieval import METRICS, build_index, knn_query


def friendly_errors(fn):
    """Turn validation and file errors into clean nonzero-exit messages."""

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except (ValueError, OSError) as exc:
            raise click.ClickException(str(exc))

    return wrapper


def _load_config_defaults(ctx: click.Context, config_path: str | None) -> None:
    """Apply key=value config lines to parameters the user left at default."""
    if not config_path:
        return
    overrides = {}
    with open(config_path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise click.ClickException(f"{config_path}:{lineno}: expected key=value, got {line!r}")
            key, _, value = line.partition("=")
            overrides[key.strip().replace("-", "_")] = value.strip()
    for key, value in overrides.items():
        if key not in ctx.params:
            raise click.ClickException(f"{config_path}: unknown option {key!r}")
        if ctx.get_parameter_source(key) == click.core.ParameterSource.DEFAULT:
            param = next(p for p in ctx.command.params if p.name == key)
            ctx.params[key] = param.type.convert(value, param, ctx)


def _parse_grid(grid: str) -> tuple[int, int]:
    parts = grid.lower().replace("×", "x").split("x")
    if len(parts) != 2:
        raise click.ClickException(f"grid must look like 5x5, got {grid!r}")
    try:
        return int(parts[0]), int(parts[1])
    except ValueError:
        raise click.ClickException(f"grid must look like 5x5, got {grid!r}")


def _build_pipeline(preset, grid, bins, angles, pairing, overlap, normalize,
                    method, gr_target, side, pad_only) -> PipelineConfig:
    if method == "gr":
        if preset:
            raise click.ClickException("--preset configures the lrd method; "
                                       "--method gr takes --angles/--gr-target")
        return PipelineConfig(method="gr", gr_angles=angles if angles else 4,
                              gr_target_length=gr_target or None,
                              side=side, pad_only=pad_only)
    if preset:
        if preset not in PRESETS:
            raise click.ClickException(f"unknown preset {preset!r}; choose from {sorted(PRESETS)}")
        params = PRESETS[preset]
        if grid or bins or angles or pairing or overlap is not None or normalize is not None:
            raise click.ClickException("give either --preset or explicit descriptor flags, not both")
    else:
        n_rows, n_cols = _parse_grid(grid or "5x5")
        params = LrdParams(
            n_rows=n_rows,
            n_cols=n_cols,
            overlap=overlap if overlap is not None else 0.0,
            n_angles=angles or 18,
            bins=bins or 12,
            pairing=pairing or "characteristic",
            normalize=True if normalize is None else normalize,
        )
    return PipelineConfig(method="lrd", params=params, side=side, pad_only=pad_only)


_pipeline_options = [
    click.option("--preset", type=str, default=None,
                 help="Named parameter preset: " + ", ".join(sorted(PRESETS)) + "."),
    click.option("--grid", type=str, default=None, help="Block grid as RxC, e.g. 5x5."),
    click.option("--bins", type=int, default=None, help="Histogram bins per block."),
    click.option("--angles", type=int, default=None,
                 help="Projection count (even; also the profile count for --method gr)."),
    click.option("--pairing", type=click.Choice(["orthogonal", "characteristic"]), default=None),
    click.option("--overlap", type=float, default=None, help="Block overlap fraction in [0, 0.9]."),
    click.option("--normalize/--no-normalize", "normalize", default=None,
                 help="L1-normalize each block histogram (default on)."),
    click.option("--method", type=click.Choice(["lrd", "gr"]), default="lrd",
                 help="Block-histogram descriptor or whole-image projection baseline."),
    click.option("--gr-target", type=int, default=0,
                 help="Resample the gr baseline to this total length (0 keeps native)."),
    click.option("--side", type=int, default=256, help="Standardized image side in pixels."),
    click.option("--pad-only", is_flag=True, default=False,
                 help="Standardize by crop/pad only, without rescaling."),
]


def pipeline_options(fn):
    for opt in reversed(_pipeline_options):
        fn = opt(fn)
    return fn


@click.group()
@click.version_option(version=__version__, prog_name="lrd")
def cli():
    """Local Radon descriptor toolkit: extraction, retrieval, evaluation."""


@cli.command()
@click.option("--manifest", "manifest_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False))
@pipeline_options
@click.option("--metric", type=click.Choice(sorted(METRICS)), default="l1",
              help="Metric hint recorded in the descriptor file.")
@click.option("--kind", type=click.Choice(["generic", "irma", "holidays"]), default="generic",
              help="Manifest kind (controls label validation).")
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), default=None,
              help="key=value file supplying defaults for these options.")
@click.pass_context
@friendly_errors
def describe(ctx, manifest_path, out_path, preset, grid, bins, angles, pairing, overlap,
             normalize, method, gr_target, side, pad_only, metric, kind, config_path):
    """Extract descriptors for every image of a manifest into one file."""
    _load_config_defaults(ctx, config_path)
    p = ctx.params
    pipeline = _build_pipeline(p["preset"], p["grid"], p["bins"], p["angles"], p["pairing"],
                               p["overlap"], p["normalize"], p["method"], p["gr_target"],
                               p["side"], p["pad_only"])
    manifest = read_manifest(manifest_path, kind=p["kind"])
    started = time.perf_counter()
    descriptors, labels = extract_from_manifest(manifest, pipeline)
    save_descriptors(out_path, descriptors, labels, metric=p["metric"])
    click.echo(
        f"described {len(descriptors)} images -> {out_path} "
        f"(length {len(descriptors[0])}, {time.perf_counter() - started:.2f}s, "
        f"{worker_count()} workers)"
    )


@cli.command()
@click.option("--descriptors", "desc_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False))
@click.option("--metric", type=click.Choice(sorted(METRICS)), default=None,
              help="Override the metric recorded in the descriptor file.")
@friendly_errors
def index(desc_path, out_path, metric):
    """Validate a descriptor file and persist it as a searchable index."""
    descriptors, labels, file_metric = load_descriptors(desc_path)
    chosen = metric or file_metric or "l1"
    built = build_index(descriptors, labels, metric=chosen)  # validates homogeneity
    by_id = {d.source_id: (d, label) for d, label in zip(descriptors, labels)}
    ordered = [by_id[sid] for sid in built.ids]
    save_descriptors(out_path, [d for d, _ in ordered], [label for _, label in ordered],
                     metric=chosen)
    click.echo(f"indexed {len(built)} descriptors ({chosen}) -> {out_path}")


def _load_index(path):
    descriptors, labels, metric = load_descriptors(path)
    return build_index(descriptors, labels, metric=metric or "l1")


@cli.command()
@click.option("--index", "index_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--image", "images", required=True, multiple=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--k", type=int, default=1, show_default=True)
@friendly_errors
def query(index_path, images, k):
    """Rank the nearest index entries for one or more query images."""
    idx = _load_index(index_path)
    pipeline = PipelineConfig.from_digest(idx.params_digest)
    for image_path in images:
        desc = pipeline.describe_path(image_path, source_id=Path(image_path).stem)
        result = knn_query(idx, desc, k=k)
        click.echo(f"query {image_path}:")
        for rank, (sid, label, dist) in enumerate(result.neighbors, start=1):
            click.echo(f"  {rank:2d}. {sid}  label={label}  distance={dist:.6g}")


@cli.command()
@click.option("--index", "index_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--queries", "queries_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--protocol", type=click.Choice(["irma", "holidays"]), required=True)
@click.option("--out-dir", required=True, type=click.Path(file_okay=False))
@click.option("--branching", type=float, default=10.0, show_default=True,
              help="Branching factor of the code-error scheme.")
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), default=None)
@click.pass_context
@friendly_errors
def evaluate(ctx, index_path, queries_path, protocol, out_dir, branching, config_path):
    """Score first-match retrieval of a query manifest against an index.

    Writes report.json, report.csv, summary.txt, and report.png.
    """
    _load_config_defaults(ctx, config_path)
    p = ctx.params
    idx = _load_index(index_path)
    pipeline = PipelineConfig.from_digest(idx.params_digest)
    manifest = read_manifest(p["queries_path"], kind=p["protocol"])
    started = time.perf_counter()
    descriptors, labels = extract_from_manifest(manifest, pipeline)
    if p["protocol"] == "irma":
        report = evaluate_irma(idx, descriptors, labels, branching=p["branching"])
    else:
        report = evaluate_holidays(idx, descriptors, labels)
    report.wall_time_s = time.perf_counter() - started

    out = Path(p["out_dir"])
    out.mkdir(parents=True, exist_ok=True)
    report.write_json(out / "report.json")
    report.write_csv(out / "report.csv")
    (out / "summary.txt").write_text(report.summary_text(), encoding="utf-8")
    from .plots import save_report_figure

    save_report_figure(report, out / "report.png")
    click.echo(report.summary_text(), nl=False)
    click.echo(f"reports written to {out}")


@cli.command()
@click.option("--train", "train_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--queries", "queries_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--protocol", type=click.Choice(["irma", "holidays"]), required=True)
@click.option("--grids", default="3x3,5x5", show_default=True, help="Comma-separated RxC list.")
@click.option("--bins-list", default="8,12,22", show_default=True, help="Comma-separated bin counts.")
@click.option("--angles", type=int, default=18, show_default=True)
@click.option("--pairing", type=click.Choice(["orthogonal", "characteristic"]),
              default="characteristic", show_default=True)
@click.option("--overlap", type=float, default=0.0, show_default=True)
@click.option("--metric", type=click.Choice(sorted(METRICS)), default="l1", show_default=True)
@click.option("--side", type=int, default=256, show_default=True)
@click.option("--out-dir", required=True, type=click.Path(file_okay=False))
@click.option("--branching", type=float, default=10.0, show_default=True)
@friendly_errors
def sweep(train_path, queries_path, protocol, grids, bins_list, angles, pairing, overlap,
          metric, side, out_dir, branching):
    """Evaluate a grid of (blocks, bins) settings and tabulate the scores.

    Writes sweep.csv and sweep.png; the score is accuracy for the irma
    protocol and the true-retrieval rate for holidays.
    """
    train = read_manifest(train_path, kind=protocol)
    queries = read_manifest(queries_path, kind=protocol)
    grid_list = [g.strip() for g in grids.split(",") if g.strip()]
    bin_values = [int(b) for b in bins_list.split(",") if b.strip()]
    if not grid_list or not bin_values:
        raise click.ClickException("empty --grids or --bins-list")

    rows = []
    for grid in grid_list:
        n_rows, n_cols = _parse_grid(grid)
        for bins in bin_values:
            params = LrdParams(n_rows=n_rows, n_cols=n_cols, overlap=overlap,
                               n_angles=angles, bins=bins, pairing=pairing)
            pipeline = PipelineConfig(method="lrd", params=params, side=side)
            started = time.perf_counter()
            train_desc, train_labels = extract_from_manifest(train, pipeline)
            idx = build_index(train_desc, train_labels, metric=metric)
            q_desc, q_labels = extract_from_manifest(queries, pipeline)
            if protocol == "irma":
                report = evaluate_irma(idx, q_desc, q_labels, branching=branching)
                score = report.accuracy
            else:
                report = evaluate_holidays(idx, q_desc, q_labels)
                score = report.true_retrieval_rate
            elapsed = time.perf_counter() - started
            rows.append({"grid": f"{n_rows}x{n_cols}", "bins": bins,
                         "length": params.length, "score": score, "seconds": elapsed})
            click.echo(f"grid {n_rows}x{n_cols} bins {bins:3d} length {params.length:5d} "
                       f"score {score:.4f} ({elapsed:.2f}s)")

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "sweep.csv", "w", encoding="utf-8", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=["grid", "bins", "length", "score", "seconds"])
        writer.writeheader()
        writer.writerows(rows)
    from .plots import save_sweep_figure

    save_sweep_figure(rows, out / "sweep.png")
    best = max(rows, key=lambda r: r["score"])
    click.echo(f"best: grid {best['grid']} bins {best['bins']} score {best['score']:.4f}")
    click.echo(f"sweep written to {out}")


@cli.command("sinogram")
@click.option("--image", "image_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--out-dir", required=True, type=click.Path(file_okay=False))
@click.option("--side", type=int, default=0,
              help="Standardize to this side before projecting (0 projects the raw image).")
@friendly_errors
def sinogram_cmd(image_path, out_dir, side):
    """Dump a 180-direction projection profile of one image.

    Writes sinogram.csv (one detector row per line, one angle per column)
    and sinogram.png.
    """
    img = load_image(image_path)
    if side:
        img = standardize(img, side=side)
    proj = compute_sinogram(img)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "sinogram.csv", "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"{d:g}" for d in proj.angles.degrees])
        for row in proj.values:
            writer.writerow([f"{v:.10g}" for v in row])
    from .plots import save_sinogram_figure

    save_sinogram_figure(proj, img, out / "sinogram.png")
    click.echo(f"sinogram ({proj.detector_len} bins x {proj.angles.n} angles) written to {out}")


@cli.group()
def manifest():
    """Build dataset manifests (CSV with header path,id,label)."""


@manifest.command("holidays")
@click.argument("directory", type=click.Path(exists=True, file_okay=False))
@click.option("--out-queries", required=True, type=click.Path(dir_okay=False))
@click.option("--out-db", required=True, type=click.Path(dir_okay=False))
@friendly_errors
def manifest_holidays(directory, out_queries, out_db):
    """Split a numerically named image directory into query/database manifests."""
    full = manifest_from_holidays_dir(directory)
    queries, db = full.holidays_split()
    write_manifest(queries, out_queries)
    write_manifest(db, out_db)
    click.echo(f"{len(queries)} queries -> {out_queries}; {len(db)} database images -> {out_db}")


@manifest.command("irma")
@click.option("--images", "images_path", required=True, type=click.Path(exists=True, dir_okay=False),
              help="Text file with one image path per line.")
@click.option("--codes", "codes_path", required=True, type=click.Path(exists=True, dir_okay=False),
              help="id-to-code table (id;code per line).")
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False))
@friendly_errors
def manifest_irma(images_path, codes_path, out_path):
    """Build an x-ray manifest from an explicit file list and a code table."""
    with open(images_path, "r", encoding="utf-8") as fh:
        paths = [line.strip() for line in fh if line.strip()]
    built = manifest_from_irma_files(paths, codes_path)
    write_manifest(built, out_path)
    click.echo(f"{len(built)} records -> {out_path}")


def main():
    cli(prog_name="lrd")


if __name__ == "__main__":
    sys.exit(main())

"""Batch command-line front end.

    wallmask generate --input plans/ --out masks/ --jobs 4
    wallmask evaluate --manifest data.csv --pred masks/ --report report.json
    wallmask split --manifest data.csv --k 5 --seed 7 --out splits.json
    wallmask augment --image a.png --mask a.mask.png --n 10 --seed 1 --out aug/
    wallmask substitute-bg --image a.png --texture paper.png --out a.bg.png
"""
from __future__ import annotations

import json
import logging
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict
from pathlib import Path

import click

from . import __version__
from .core import PipelineConfig, read_mask, read_plan, write_mask, write_plan
from .dataset import (AugmentParams, ManifestError, augment as augment_pairs, kfold_split,
                      load_manifest, substitute_background)
from .maskgen import dump_artifacts, generate_wall_mask
from .metrics import evaluate_dataset

JOBS_ENV = "WALLMASK_JOBS"
IMAGE_SUFFIXES = {".png", ".jpg", ".jpeg", ".tif", ".tiff", ".bmp"}

log = logging.getLogger("wallmask")

_version = click.version_option(__version__, prog_name="wallmask")


def _write_json(path: Path, data) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(f".{path.name}.tmp")
    tmp.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    os.replace(tmp, path)


def _collect_inputs(path: Path) -> list[Path]:
    if path.is_dir():
        return sorted(p for p in path.iterdir() if p.is_file() and p.suffix.lower() in IMAGE_SUFFIXES)
    return [path]


def _load_config(path, overrides: dict) -> PipelineConfig:
    data = {}
    if path is not None:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        if not isinstance(data, dict):
            raise click.UsageError(f"config file {path} must hold a JSON object")
    data.update({k: v for k, v in overrides.items() if v is not None})
    try:
        return PipelineConfig.from_mapping(data)
    except (TypeError, ValueError) as exc:
        raise click.UsageError(f"bad pipeline config: {exc}")


def _process_one(args):
    """Worker: read, run, write. Returns (name, seconds, warnings, error)."""
    src, out_dir, cfg, debug = args
    start = time.perf_counter()
    try:
        img = read_plan(src)
        mask, art = generate_wall_mask(img, cfg, keep_artifacts=debug)
        if debug:
            dump_artifacts(mask, art, out_dir, src.stem)
        else:
            write_mask(mask, out_dir / f"{src.stem}.mask.png")
        return src.name, time.perf_counter() - start, list(art.warnings), None
    except Exception as exc:  # one bad file must not stop the batch
        return src.name, time.perf_counter() - start, [], f"{type(exc).__name__}: {exc}"


@click.group(context_settings={"help_option_names": ["-h", "--help"]})
@click.version_option(__version__, prog_name="wallmask")
@click.option("-v", "--verbose", is_flag=True, help="Log pipeline details.")
def main(verbose):
    """Wall-mask generation and evaluation for scanned floor plans."""
    logging.basicConfig(level=logging.INFO if verbose else logging.ERROR,
                        format="%(levelname)s %(name)s: %(message)s")


@main.command()
@_version
@click.option("--input", "input_path", required=True, type=click.Path(exists=True, path_type=Path),
              help="Plan image or directory of images.")
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False, path_type=Path))
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False),
              help="JSON file with pipeline settings.")
@click.option("--debug-dumps", is_flag=True, help="Also write intermediate rasters.")
@click.option("--jobs", type=click.IntRange(min=1), envvar=JOBS_ENV, default=1, show_default=True,
              help=f"Images processed in parallel (env {JOBS_ENV}).")
@click.option("--colors", "color_count", type=int, help="Override color_count.")
@click.option("--orientations", "orientation_count", type=int, help="Override orientation_count.")
@click.option("--connectivity", type=click.Choice(["4", "8"]), help="Override connectivity.")
@click.option("--seed", "rng_seed", type=int, help="Override rng_seed.")
@click.option("--fh", "fh_override", type=int, help="Fixed filter height in pixels.")
@click.option("--downscale", type=int, help="Integer downscale factor before processing.")
def generate(input_path, out_dir, config_path, debug_dumps, jobs, **overrides):
    """Write <stem>.mask.png for every input plan."""
    if overrides.get("connectivity") is not None:
        overrides["connectivity"] = int(overrides["connectivity"])
    cfg = _load_config(config_path, overrides)
    out_dir.mkdir(parents=True, exist_ok=True)
    _write_json(out_dir / "config.json", cfg.to_mapping())

    inputs = _collect_inputs(input_path)
    tasks = [(p, out_dir, cfg, debug_dumps) for p in inputs]
    failures = 0
    if jobs == 1:
        results = map(_process_one, tasks)
        pool = None
    else:
        pool = ProcessPoolExecutor(max_workers=jobs)
        # Tasks carry paths only; each worker decodes one image at a time.
        results = pool.map(_process_one, tasks)
    try:
        for name, secs, warnings, error in results:
            if error:
                failures += 1
                click.echo(f"FAIL {name} ({secs:.2f}s): {error}", err=True)
            else:
                flag = f" warnings={','.join(warnings)}" if warnings else ""
                click.echo(f"ok   {name} ({secs:.2f}s){flag}")
    finally:
        if pool is not None:
            pool.shutdown()
    click.echo(f"{len(inputs) - failures}/{len(inputs)} masks written to {out_dir}")
    sys.exit(1 if failures else 0)


@main.command()
@_version
@click.option("--manifest", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--pred", "pred_dir", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--report", "report_path", required=True, type=click.Path(dir_okay=False, path_type=Path))
def evaluate(manifest, pred_dir, report_path):
    """Score predicted masks against manifest ground truth."""
    try:
        m = load_manifest(manifest)
    except ManifestError as exc:
        raise click.ClickException(str(exc))
    report = evaluate_dataset(m, pred_dir)
    report.write(report_path)
    if report.rows:
        click.echo(report.table())
    for err in report.errors:
        click.echo(f"FAIL {err['id']}: {err['error']}", err=True)
    sys.exit(0 if report.ok else 1)


@main.command()
@_version
@click.option("--manifest", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--k", type=click.IntRange(min=2), default=5, show_default=True)
@click.option("--seed", type=int, required=True)
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False, path_type=Path))
def split(manifest, k, seed, out_path):
    """Write rotating k-fold train/validation/test id lists as JSON."""
    try:
        m = load_manifest(manifest, check_files=False)
        folds = kfold_split(m, k, seed)
    except (ManifestError, ValueError) as exc:
        raise click.ClickException(str(exc))
    _write_json(out_path, {"k": k, "seed": seed,
                           "folds": [{kk: list(v) for kk, v in asdict(f).items()} for f in folds]})
    for i, f in enumerate(folds):
        click.echo(f"fold {i}: train={len(f.train)} validation={len(f.validation)} test={len(f.test)}")


@main.command()
@_version
@click.option("--image", "image_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--mask", "mask_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--n", type=click.IntRange(min=0), required=True)
@click.option("--seed", type=int, required=True)
@click.option("--zoom", type=float, default=0.3, show_default=True)
@click.option("--shift", type=float, default=0.2, show_default=True)
@click.option("--hflip/--no-hflip", default=True, show_default=True)
@click.option("--vflip/--no-vflip", default=True, show_default=True)
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False, path_type=Path))
def augment(image_path, mask_path, n, seed, zoom, shift, hflip, vflip, out_dir):
    """Write n randomly zoomed/shifted/flipped image-mask pairs."""
    try:
        params = AugmentParams(zoom, shift, hflip, vflip, seed)
        pairs = augment_pairs(read_plan(image_path), read_mask(mask_path), params, n)
    except ValueError as exc:
        raise click.ClickException(str(exc))
    stem = Path(image_path).stem
    for i, (img, mask) in enumerate(pairs):
        write_plan(img, out_dir / f"{stem}.aug{i:04d}.png")
        write_mask(mask, out_dir / f"{stem}.aug{i:04d}.mask.png")
    click.echo(f"{len(pairs)} pairs written to {out_dir}")


@main.command("substitute-bg")
@_version
@click.option("--image", "image_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--texture", "texture_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--white-threshold", type=click.IntRange(0, 255), default=245, show_default=True)
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False, path_type=Path))
def substitute_bg(image_path, texture_path, white_threshold, out_path):
    """Replace the near-white background with a tiled texture."""
    out = substitute_background(read_plan(image_path), read_plan(texture_path), white_threshold)
    write_plan(out, out_path)
    click.echo(f"wrote {out_path}")


if __name__ == "__main__":
    main()

"""
Module: app.py
Description: Typer command-line interface (segment, eval, synth, index-stats)

External Dependencies:
- typer: https://typer.tiangolo.com/
- rich: https://rich.readthedocs.io/
- loguru: https://loguru.readthedocs.io/
- pydantic: https://docs.pydantic.dev/

Sample Input:
>>> hashseg synth --output fixture --seed 0 --count 3
>>> hashseg segment --images fixture/images --hierarchies fixture/hierarchies \\
...     --detections fixture/detections.jsonl --output out --seed 0

Expected Output:
>>> out/manifest.json plus one 0/255 PGM per instance (out/masks/scene_000_0.pgm, ...)

Example Usage:
>>> hashseg eval --predictions out/manifest.json --ground-truth fixture/ground_truth/ground_truth.json --output report
>>> hashseg index-stats out/indexes/scene_000.npz
"""

# hashseg/cli/app.py
import sys
from collections import defaultdict
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Any

import typer
from loguru import logger
from pydantic import ValidationError
from rich.console import Console
from rich.markup import escape

from hashseg.config import (
    DEFAULT_OVERLAP_THRESHOLD,
    DEFAULT_SYNTH_HEIGHT,
    DEFAULT_SYNTH_WIDTH,
    RunConfig,
    load_run_config,
)
from hashseg.core.errors import EmptyHierarchy, HashSegError, InputFormatError
from hashseg.core.hierarchy import load_hierarchy
from hashseg.core.image_io import (
    atomic_write_text,
    read_detections,
    read_image,
    read_json,
    write_json,
    write_mask_pgm,
)
from hashseg.core.index_store import load_index, read_index_info, save_index
from hashseg.core.lsh import bucket_stats
from hashseg.core.models import Detection
from hashseg.core.validators import validate_image_id
from hashseg.evaluation import EvalReport, evaluate, load_ground_truth, load_predictions
from hashseg.formatters import (
    bucket_payload,
    bucket_table,
    histogram_table,
    prediction_record,
    render_text,
    report_payload,
    report_table,
)
from hashseg.hsh_pipeline import ImageResult, build_hsh, run_image
from hashseg.schemas import ImageSummary, PredictionManifest
from hashseg.synth import generate, write_fixture

app = typer.Typer(name='hashseg', help="Train-free instance segmentation by hashing hierarchy regions")
console = Console()

IMAGE_SUFFIXES = ('.png', '.ppm', '.pgm', '.jpg', '.jpeg')
HIERARCHY_SUFFIXES = ('.json', '.pgm')
MANIFEST_NAME = 'manifest.json'
EXIT_INPUT = 1
EXIT_EMPTY_HIERARCHY = 2


def setup_logging(verbose: bool) -> None:
    logger.remove()
    logger.add(sys.stderr, level='DEBUG' if verbose else 'INFO')


def fail(message: str, code: int = EXIT_INPUT) -> typer.Exit:
    console.print(f"[red]Error: {escape(message)}[/red]")
    return typer.Exit(code)


def _config(config_file: Path | None, overrides: dict[str, Any]) -> RunConfig:
    try:
        return load_run_config(config_file, overrides)
    except ValidationError as e:
        raise fail(f"invalid configuration: {e}") from e
    except HashSegError as e:
        raise fail(str(e)) from e


def _require(cfg: RunConfig, *names: str) -> None:
    missing = [f"--{name.replace('_', '-')}" for name in names if getattr(cfg, name) is None]
    if missing:
        raise fail(f"missing required option(s): {', '.join(missing)}")


def _find(directory: Path, stem: str, suffixes: tuple[str, ...], what: str) -> Path:
    for suffix in suffixes:
        path = directory / f"{stem}{suffix}"
        if path.is_file():
            return path
    raise InputFormatError(f"no {what} for image {stem!r} in {directory}")


def _image_ids(directory: Path) -> list[str]:
    if not directory.is_dir():
        raise InputFormatError(f"image directory not found: {directory}")
    return sorted({p.stem for p in directory.iterdir() if p.suffix.lower() in IMAGE_SUFFIXES})


def _segment_one(image_id: str, dets: list[Detection], cfg: RunConfig) -> ImageResult:
    if not dets:
        return ImageResult(image_id=image_id, instances=[], matches=[], hsh=None)
    image = read_image(_find(cfg.images, image_id, IMAGE_SUFFIXES, "image"))
    tree = load_hierarchy(_find(cfg.hierarchies, image_id, HIERARCHY_SUFFIXES, "hierarchy"))
    result = run_image(image, tree, dets, cfg.code_config(), cfg.segment_params())
    if cfg.index_dir is not None and result.hsh is not None:
        save_index(result.hsh.index, cfg.index_dir / f"{image_id}.npz")
    return result


def _write_results(results: list[ImageResult], detections: dict[str, list[Detection]], cfg: RunConfig) -> PredictionManifest:
    records = []
    summaries = []
    for result in results:
        for i, inst in enumerate(result.instances):
            mask_name = f"masks/{inst.image_id}_{i}.pgm"
            write_mask_pgm(cfg.output / mask_name, inst.mask)
            records.append(prediction_record(inst, mask_name))
        summaries.append(ImageSummary(
            image_id=result.image_id,
            detections=len(detections.get(result.image_id, [])),
            instances=len(result.instances),
            regions_indexed=0 if result.hsh is None else len(result.hsh),
            fallbacks=sum(m.strategy == 'fallback' for m in result.matches),
        ))
    params = cfg.model_dump(include={
        'grid', 'channels', 'masked', 'k', 'l', 'seed', 'min_area', 'score_threshold',
        'fallback', 'require_overlap', 'iou_threshold', 'connectivity',
    })
    manifest = PredictionManifest(params=params, images=summaries, instances=records)
    write_json(cfg.output / MANIFEST_NAME, manifest.model_dump(mode='json', by_alias=True))
    return manifest


@app.command()
def segment(
    seed: int = typer.Option(..., "--seed", help="Seed of the hash family (required)"),
    images: Path = typer.Option(None, "--images", help="Directory of images (PNG/PPM/PGM) named <image_id>.*"),
    hierarchies: Path = typer.Option(None, "--hierarchies", help="Directory of <image_id>.pgm UCMs or .json merge lists"),
    detections: Path = typer.Option(None, "--detections", help="Detections as JSON Lines"),
    output: Path = typer.Option(None, "--output", help="Output directory for masks and manifest"),
    config: Path = typer.Option(None, "--config", help="key=value config file (flags win)"),
    jobs: int = typer.Option(None, "--jobs", help="Images processed concurrently"),
    index_dir: Path = typer.Option(None, "--index-dir", help="Also save each image's LSH index here"),
    grid: int = typer.Option(None, "--grid", help="Code grid cells per side"),
    channels: int = typer.Option(None, "--channels", help="1 (luma) or 3 (RGB)"),
    masked: bool = typer.Option(None, "--masked/--unmasked", help="Zero pixels outside regions in region codes"),
    k: int = typer.Option(None, "--k", help="Bits per hash key"),
    l: int = typer.Option(None, "--l", help="Number of hash tables"),  # noqa: E741
    min_area: int = typer.Option(None, "--min-area", help="Smallest region area indexed"),
    score_threshold: float = typer.Option(None, "--score-threshold", help="Drop detections scoring below this"),
    iou_threshold: float = typer.Option(None, "--iou-threshold", help="Box IoU above which masks are pruned"),
    connectivity: int = typer.Option(None, "--connectivity", help="4 or 8 for isolated-pixel cleanup"),
    fallback: bool = typer.Option(None, "--fallback/--no-fallback", help="Exact search on empty candidate sets"),
    require_overlap: bool = typer.Option(None, "--require-overlap/--any-region", help="Skip regions not overlapping the box"),
    verbose: bool = typer.Option(False, "--verbose", "-v", help="Debug logging and tracebacks"),
):
    """Segment every detection into an instance mask"""
    overrides = {name: value for name, value in locals().items() if name not in ('config', 'verbose')}
    setup_logging(verbose)
    cfg = _config(config, overrides)
    _require(cfg, 'images', 'hierarchies', 'detections', 'output')

    try:
        by_image: dict[str, list[Detection]] = defaultdict(list)
        for det in read_detections(cfg.detections, cfg.score_threshold):
            by_image[validate_image_id(det.image_id)].append(det)
        image_ids = _image_ids(cfg.images)
        unknown = sorted(set(by_image) - set(image_ids))
        if unknown:
            raise InputFormatError(f"detections reference images missing from {cfg.images}: {', '.join(unknown)}")

        console.print(f"[cyan]Segmenting {sum(map(len, by_image.values()))} detections "
                      f"over {len(image_ids)} image(s)...[/cyan]")
        with ThreadPoolExecutor(max_workers=cfg.jobs) as executor:
            results = list(executor.map(lambda i: _segment_one(i, by_image.get(i, []), cfg), image_ids))
        manifest = _write_results(results, by_image, cfg)
    except EmptyHierarchy as e:
        if verbose:
            logger.exception("Segmentation failed")
        raise fail(str(e), EXIT_EMPTY_HIERARCHY) from e
    except (HashSegError, ValueError) as e:
        if verbose:
            logger.exception("Segmentation failed")
        raise fail(str(e)) from e

    console.print(f"[green]✓ Wrote {len(manifest.instances)} instance masks to {cfg.output}[/green]")


@app.command(name='eval')
def eval_command(
    output: Path = typer.Option(..., "--output", help="Directory for report.json and report.txt"),
    predictions: Path = typer.Option(None, "--predictions", help="Prediction manifest written by segment"),
    ground_truth: Path = typer.Option(None, "--ground-truth", help="Ground-truth manifest"),
    per_class: Path = typer.Option(None, "--per-class", help="Precomputed JSON {class: mean overlap} to aggregate"),
    class_aware: bool = typer.Option(True, "--class-aware/--class-agnostic", help="Match predictions by class"),
    threshold: float = typer.Option(DEFAULT_OVERLAP_THRESHOLD, "--threshold", help="Overlap counted as recalled"),
    verbose: bool = typer.Option(False, "--verbose", "-v"),
):
    """Jaccard (best overlap) report at instance and class level plus recall"""
    setup_logging(verbose)
    try:
        if per_class is not None:
            values = read_json(per_class)
            if not isinstance(values, dict):
                raise InputFormatError(f"{per_class} must hold a JSON object of class -> overlap")
            report = EvalReport.from_per_class({str(c): float(v) for c, v in values.items()},
                                               overlap_threshold=threshold, class_aware=class_aware)
        elif predictions is not None and ground_truth is not None:
            report = evaluate(load_predictions(predictions), load_ground_truth(ground_truth),
                              class_aware=class_aware, overlap_threshold=threshold)
        else:
            raise fail("give --predictions and --ground-truth, or --per-class")
    except (HashSegError, ValueError) as e:
        if verbose:
            logger.exception("Evaluation failed")
        raise fail(str(e)) from e

    table = report_table(report)
    write_json(output / 'report.json', report_payload(report))
    atomic_write_text(output / 'report.txt', render_text(table))
    console.print(table)


@app.command()
def synth(
    output: Path = typer.Option(..., "--output", help="Fixture directory"),
    seed: int = typer.Option(..., "--seed", help="Scene seed (required)"),
    count: int = typer.Option(1, "--count", min=1, help="Number of scenes"),
    shapes: int = typer.Option(None, "--shapes", help="Exact shape count per scene"),
    min_shapes: int = typer.Option(3, "--min-shapes"),
    max_shapes: int = typer.Option(6, "--max-shapes"),
    width: int = typer.Option(DEFAULT_SYNTH_WIDTH, "--width"),
    height: int = typer.Option(DEFAULT_SYNTH_HEIGHT, "--height"),
    jitter: int = typer.Option(0, "--jitter", min=0, help="Max pixels each detection box edge moves"),
    verbose: bool = typer.Option(False, "--verbose", "-v"),
):
    """Generate synthetic scenes with hierarchies, ground truth and detections"""
    setup_logging(verbose)
    if shapes is not None:
        min_shapes = max_shapes = shapes
    try:
        scenes = generate(seed, count, min_shapes, max_shapes, width, height, jitter)
        write_fixture(scenes, output, seed, width, height, jitter)
    except ValueError as e:
        raise fail(str(e)) from e
    console.print(f"[green]✓ Wrote {len(scenes)} scene(s) to {output}[/green]")


@app.command(name='index-stats')
def index_stats(
    indexes: list[Path] = typer.Argument(None, help="Index archives written by segment --index-dir"),
    image: Path = typer.Option(None, "--image", help="Build the index of this image instead"),
    hierarchy: Path = typer.Option(None, "--hierarchy", help="Hierarchy of --image"),
    config: Path = typer.Option(None, "--config", help="key=value config file"),
    seed: int = typer.Option(None, "--seed"),
    k: int = typer.Option(None, "--k"),
    l: int = typer.Option(None, "--l"),  # noqa: E741
    grid: int = typer.Option(None, "--grid"),
    min_area: int = typer.Option(None, "--min-area"),
    json_out: Path = typer.Option(None, "--json", help="Also write the statistics as JSON"),
    verbose: bool = typer.Option(False, "--verbose", "-v"),
):
    """Bucket occupancy of LSH indexes"""
    setup_logging(verbose)
    payloads = {}
    try:
        if image is not None:
            if hierarchy is None:
                raise fail("--image needs --hierarchy")
            cfg = _config(config, {'seed': seed, 'k': k, 'l': l, 'grid': grid, 'min_area': min_area})
            if cfg.seed is None:
                raise fail("--seed is required to build an index")
            hsh = build_hsh(read_image(image), load_hierarchy(hierarchy), cfg.code_config(),
                            k=cfg.k, l=cfg.l, seed=cfg.seed, min_area=cfg.min_area)
            named = [(image.stem, hsh.index)]
        elif indexes:
            named = []
            for path in indexes:
                logger.debug(f"Index header: {read_index_info(path)}")
                named.append((path.stem, load_index(path)))
        else:
            raise fail("give index archives or --image/--hierarchy")
    except EmptyHierarchy as e:
        raise fail(str(e), EXIT_EMPTY_HIERARCHY) from e
    except (HashSegError, ValueError) as e:
        if verbose:
            logger.exception("index-stats failed")
        raise fail(str(e)) from e

    for name, index in named:
        stats = bucket_stats(index)
        console.print(bucket_table(stats, title=f"LSH buckets: {name}"))
        console.print(histogram_table(stats))
        payloads[name] = bucket_payload(stats)
    if json_out is not None:
        write_json(json_out, payloads)


if __name__ == '__main__':
    app()

"""Command-line entry points: simulate, run, fuse, serve, report, checkdigit, bench."""

from __future__ import annotations

import json
import logging
import sys
import tempfile
import time
from pathlib import Path

import click

from .codes import UNASSIGNABLE, InvalidPattern, Kind, compute_check_digit, parse, validate
from .config import AppConfig, load_config
from .detections import read_stream, write_stream
from .fusion import CountMismatchTooLarge, FusedTrain, merge
from .mosaic import TrainSummary, render_manifest
from .pipeline import run_stream
from .publisher import ConfigError, Publisher, RetryLoop
from .simulate import ScenarioConfig, generate
from .store import TrainStore


def _config(path: str | None) -> AppConfig:
    return load_config(path) if path else load_config()


@click.group()
def main() -> None:
    """Wagon counting and identification pipeline."""
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")


@main.command()
@click.argument("value")
def checkdigit(value: str) -> None:
    """Print the check digit for a SERIAL, or validate a full CODE.

    Exit code 0 when valid, 2 when the check digit mismatches, 1 on a parse
    error.
    """
    text = value.strip().upper()
    if text.isdigit() and len(text) == 6:
        digit = compute_check_digit(text)
        if digit == UNASSIGNABLE:
            click.echo(f"{text}: no assignable check digit (serial is never issued)")
            sys.exit(2)
        click.echo(f"{text}: check digit {digit}")
        return
    try:
        rid = parse(text)
    except InvalidPattern as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)
    if rid.kind is Kind.LOCOMOTIVE:
        click.echo(f"{rid.text()}: locomotive, valid")
        return
    expected = compute_check_digit(rid.serial)
    result = validate(rid)
    status = "valid" if result.valid else "invalid"
    click.echo(f"{rid.text()}: expected check digit {expected}, {status}")
    if not result.valid:
        sys.exit(2)


@main.command()
@click.option("--wagons", type=int, required=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--damage-rate", type=float, default=0.0, show_default=True)
@click.option("--miss-rate", type=float, default=0.0, show_default=True)
@click.option("--fp-rate", type=float, default=0.0, show_default=True)
@click.option("--confusion-rate", type=float, default=0.0, show_default=True)
@click.option("--unlabeled-rate", type=float, default=0.0, show_default=True)
@click.option("--noise", type=float, default=0.0, show_default=True)
@click.option("--speed", type=float, default=18.0, show_default=True, help="px per frame")
@click.option("--camera", default="cam0", show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), required=True)
@click.option("--truth", type=click.Path(dir_okay=False), default=None)
def simulate(wagons, seed, damage_rate, miss_rate, fp_rate, confusion_rate,
             unlabeled_rate, noise, speed, camera, out, truth) -> None:
    """Generate a synthetic passage as a JSONL detection stream."""
    config = ScenarioConfig(
        seed=seed,
        wagons=wagons,
        px_per_frame=speed,
        miss_rate=miss_rate,
        false_positive_rate=fp_rate,
        char_confusion_rate=confusion_rate,
        confidence_noise=noise,
        damaged_fraction=damage_rate,
        unlabeled_fraction=unlabeled_rate,
    )
    frames, ground_truth = generate(config, camera=camera)
    count = write_stream(out, frames)
    click.echo(f"wrote {count} frames to {out}")
    if truth:
        Path(truth).write_text(json.dumps(ground_truth.to_dict(), indent=2) + "\n")
        click.echo(f"wrote ground truth to {truth}")


@main.command()
@click.option("--detections", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--count-line", type=float, default=None, help="defaults to frame center")
@click.option("--out", type=click.Path(dir_okay=False), required=True)
@click.option("--mosaic", "mosaic_dir", type=click.Path(file_okay=False), default=None)
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), default=None)
def run(detections, count_line, out, mosaic_dir, config_path) -> None:
    """Count and identify wagons from a detection stream."""
    config = _config(config_path)
    summary = run_stream(read_stream(detections), config=config, count_line=count_line)
    Path(out).write_text(json.dumps(summary.to_dict(), indent=2) + "\n")
    stats = summary.stats
    click.echo(
        f"{summary.train_id}: {summary.wagon_count} wagons, "
        f"{stats.accepted} accepted, {stats.accepted_damaged} damaged-but-read, "
        f"{stats.rejected} rejected, {stats.not_located} not located"
    )
    if mosaic_dir:
        manifest_path, html_path = render_manifest(summary, mosaic_dir)
        click.echo(f"mosaic: {manifest_path} {html_path}")


@main.command()
@click.option("--left", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--right", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--out", type=click.Path(dir_okay=False), required=True)
def fuse(left, right, out) -> None:
    """Merge the two per-side summaries of one passage."""
    left_summary = TrainSummary.from_dict(json.loads(Path(left).read_text()))
    right_summary = TrainSummary.from_dict(json.loads(Path(right).read_text()))
    try:
        fused = merge(left_summary, right_summary)
    except CountMismatchTooLarge as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)
    Path(out).write_text(json.dumps(fused.to_dict(), indent=2) + "\n")
    click.echo(
        f"{fused.train_id}: {len(fused.wagons)} wagons, "
        f"{len(fused.unresolved())} unresolved, {len(fused.conflicts())} conflicts"
    )


def _load_train_file(path: str) -> TrainSummary:
    obj = json.loads(Path(path).read_text())
    if "left_train_id" in obj:
        return FusedTrain.from_dict(obj).to_summary()
    return TrainSummary.from_dict(obj)


@main.command()
@click.option("--train", "train_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--endpoint", required=True)
@click.option("--spool", type=click.Path(file_okay=False), default=None,
              help="durable queue directory (default: alongside the train file)")
@click.option("--timeout", type=float, default=5.0, show_default=True)
def report(train_path, endpoint, spool, timeout) -> None:
    """Publish a train record to the cloud endpoint (at-least-once)."""
    summary = _load_train_file(train_path)
    spool_dir = spool or (Path(train_path).parent / "outbox")
    try:
        publisher = Publisher(endpoint, spool_dir, timeout_s=timeout)
    except ConfigError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)
    receipt = publisher.publish(summary.to_dict())
    click.echo(json.dumps(receipt.to_dict(), indent=2))
    if not receipt.delivered:
        click.echo(f"queued for retry in {spool_dir}", err=True)
        sys.exit(1)


@main.command()
@click.option("--port", type=int, default=8080, show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--store", "store_dir", type=click.Path(file_okay=False), required=True)
@click.option("--media", type=click.Path(file_okay=False), default=None)
@click.option("--ui", "ui_dir", type=click.Path(file_okay=False), default=None)
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), default=None)
def serve(port, host, store_dir, media, ui_dir, config_path) -> None:
    """Run the review/correction HTTP service."""
    import uvicorn

    from .server import create_app

    config = _config(config_path)
    publisher = None
    retry_loop = None
    if config.publish_endpoint:
        publisher = Publisher(config.publish_endpoint, Path(store_dir) / "outbox")
        retry_loop = RetryLoop(publisher, interval_s=config.publish_interval_s)
        retry_loop.start()
    app = create_app(
        TrainStore(store_dir),
        media_dir=media or (Path(store_dir) / "media"),
        api_token=config.api_token,
        publisher=publisher,
        ui_dir=ui_dir,
    )
    try:
        uvicorn.run(app, host=host, port=port, log_level="warning")
    finally:
        if retry_loop is not None:
            retry_loop.stop()


@main.command()
@click.option("--wagons", type=int, default=135, show_default=True)
@click.option("--seed", type=int, default=1, show_default=True)
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), default=None)
def bench(wagons, seed, config_path) -> None:
    """Measure pipeline throughput over a synthetic stream (records/s)."""
    config = _config(config_path)
    scenario = ScenarioConfig(seed=seed, wagons=wagons, miss_rate=0.05)
    with tempfile.TemporaryDirectory() as tmp:
        path = Path(tmp) / "bench.jsonl"
        frames, _ = generate(scenario)
        count = write_stream(path, frames)
        start = time.perf_counter()
        summary = run_stream(read_stream(path), config=config)
        elapsed = time.perf_counter() - start
    rate = count / elapsed
    click.echo(
        f"{count} frame records, {wagons} wagons -> {summary.wagon_count} counted"
    )
    click.echo(f"pipeline throughput: {rate:.0f} records/s ({elapsed:.2f}s total)")


if __name__ == "__main__":
    main()

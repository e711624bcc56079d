"""Command line entry points: batch replay analysis, the session
service, map dumps and demo data generation."""

from __future__ import annotations

import csv
import json
import sys
from pathlib import Path as FsPath
from typing import Optional

import click

from .geometry import GeometryError
from .hmi import frame_to_json
from .horizon import RouteError
from .mapdoc import map_document
from .mapgraph import GraphError
from .osm import MapBuildError, OsmParseError
from .sim import ScenarioError, Simulation, TickResult, load

_INPUT_ERRORS = (ScenarioError, OsmParseError, MapBuildError, GraphError, RouteError,
                 GeometryError, FileNotFoundError)

CSV_FIELDS = ["t", "v0", "governing_v_tar", "governing_source",
              "s_E", "d_E", "d_I", "d_c", "scale_color"]


def _fmt(value: Optional[float]) -> str:
    return "" if value is None else f"{value:.3f}"


def csv_row(result: TickResult) -> dict:
    a = result.assessment
    frame = result.frame
    nearest_zone = frame.hazard_route.zones[0].start if frame.hazard_route.zones else None
    active = [t.d_c for t in a.regulatory if t.active]
    return {
        "t": _fmt(result.t),
        "v0": _fmt(a.ego_v0),
        "governing_v_tar": _fmt(a.governing_v_tar),
        "governing_source": a.governing_source,
        "s_E": _fmt(a.max_encounter.s_e if a.max_encounter else None),
        "d_E": _fmt(a.max_encounter.d_e if a.max_encounter else None),
        "d_I": _fmt(nearest_zone),
        "d_c": _fmt(min(active) if active else None),
        "scale_color": frame.velocity_scale.color.value,
    }


def write_outputs(results: list[TickResult], csv_path: FsPath, frames_path: FsPath) -> None:
    with open(csv_path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=CSV_FIELDS, lineterminator="\n")
        writer.writeheader()
        for result in results:
            writer.writerow(csv_row(result))
    with open(frames_path, "w") as fh:
        for result in results:
            fh.write(frame_to_json(result.frame))
            fh.write("\n")


@click.group()
@click.version_option(package_name="risknav")
def main() -> None:
    """Risk navigation engine: replay analysis and live frame service."""


@main.command()
@click.option("--scenario", "scenario_path", required=True, type=click.Path(), help="scenario JSON file")
@click.option("--map", "map_path", type=click.Path(), default=None, help="OSM XML (overrides the scenario's map ref)")
@click.option("--aug", "aug_path", type=click.Path(), default=None, help="augmentation YAML (overrides the scenario's ref)")
@click.option("--out-csv", required=True, type=click.Path(), help="per-tick indicator table")
@click.option("--out-frames", required=True, type=click.Path(), help="newline-delimited frame JSON")
@click.option("--slim", is_flag=True, help="suppress numeric values in frames")
def replay(scenario_path, map_path, aug_path, out_csv, out_frames, slim) -> None:
    """Run a recorded scenario offline and write indicators plus frames."""
    try:
        sim = load(scenario_path, osm_path=map_path, aug_path=aug_path, slim=slim)
        results = sim.run_replay()
    except _INPUT_ERRORS as e:
        raise click.UsageError(str(e)) from e
    try:
        write_outputs(results, FsPath(out_csv), FsPath(out_frames))
    except OSError as e:
        raise click.ClickException(str(e)) from e
    click.echo(f"{len(results)} ticks -> {out_csv}, {out_frames}")


@main.command()
@click.option("--map", "map_path", required=True, type=click.Path(), help="OSM XML file")
@click.option("--aug", "aug_path", type=click.Path(), default=None, help="augmentation YAML")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True, type=int)
@click.option("--ui-dir", type=click.Path(), default=None, help="static UI files to serve at /")
def serve(map_path, aug_path, host, port, ui_dir) -> None:
    """Serve the map document and per-session frame streams."""
    import uvicorn

    from .service.app import build_graph, create_app

    try:
        graph = build_graph(map_path, aug_path)
    except _INPUT_ERRORS as e:
        raise click.UsageError(str(e)) from e
    app = create_app(graph, ui_dir=ui_dir)
    uvicorn.run(app, host=host, port=port, log_level="info")


@main.command("dump-map")
@click.option("--map", "map_path", required=True, type=click.Path(), help="OSM XML file")
@click.option("--aug", "aug_path", type=click.Path(), default=None, help="augmentation YAML")
@click.option("--out", "out_path", required=True, type=click.Path(), help="output JSON file")
def dump_map(map_path, aug_path, out_path) -> None:
    """Write the derived lane graph as a JSON document."""
    from .service.app import build_graph

    try:
        graph = build_graph(map_path, aug_path)
    except _INPUT_ERRORS as e:
        raise click.UsageError(str(e)) from e
    FsPath(out_path).write_text(json.dumps(map_document(graph), indent=1))
    click.echo(f"map document -> {out_path}")


@main.command()
@click.option("--out-dir", required=True, type=click.Path(), help="directory for demo maps and scenarios")
def demo(out_dir) -> None:
    """Generate the bundled demo maps and scenarios."""
    from .demo import write_all

    for path in write_all(out_dir):
        click.echo(str(path))


if __name__ == "__main__":
    main()

"""Command-line entry points: serve, generate, replay, check, scenario.

Exit codes: 0 on success, 1 for validation or replay failures, 2 for
configuration and transport failures.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from .dataset import load_dataset
from .errors import MissingFixture, StrataError, TransportError
from .levels import color_for
from .llm import MockProvider, Provider, RemoteProvider
from .narrative import NarrativeDocument, ground_check
from .session import (
    ReplayScript,
    ReplayStepError,
    create_session,
    load_session,
    replay,
    save_session,
)

EXIT_FAILURE = 1
EXIT_CONFIG = 2

_CONFIG_ERRORS = (TransportError, MissingFixture)


def _load_config(path: str | None) -> dict:
    if not path:
        return {}
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        click.echo(f"error: cannot read config {path}: {exc}", err=True)
        sys.exit(EXIT_CONFIG)


def _build_provider(config: dict, kind: str | None, fixtures: str | None,
                    endpoint: str | None, model: str | None) -> Provider:
    provider_cfg = dict(config.get("provider", {}))
    kind = kind or provider_cfg.get("kind", "mock")
    fixtures = fixtures or provider_cfg.get("fixtures")
    endpoint = endpoint or provider_cfg.get("endpoint")
    model = model or provider_cfg.get("model")
    if kind == "mock":
        if not fixtures:
            click.echo("error: mock provider needs a fixtures directory", err=True)
            sys.exit(EXIT_CONFIG)
        return MockProvider(Path(fixtures))
    if kind == "remote":
        if not endpoint or not model:
            click.echo("error: remote provider needs an endpoint and a model", err=True)
            sys.exit(EXIT_CONFIG)
        return RemoteProvider(endpoint=endpoint, model=model)
    click.echo(f"error: unknown provider kind {kind!r}", err=True)
    sys.exit(EXIT_CONFIG)


def _fail(exc: StrataError) -> None:
    click.echo(f"error [{exc.code}]: {exc.message}", err=True)
    sys.exit(EXIT_CONFIG if isinstance(exc, _CONFIG_ERRORS) else EXIT_FAILURE)


def _render_text(document: NarrativeDocument) -> str:
    lines = []
    for paragraph in document.paragraphs:
        parts = []
        for sentence in paragraph.sentences:
            for item in sentence.items:
                if hasattr(item, "text"):
                    parts.append(f"{item.text}«L{int(item.level)}:{color_for(item.level).name}»")
                else:
                    parts.append(f" [{item.display_number}] ")
        lines.append("".join(parts))
    return "\n\n".join(lines)


provider_options = [
    click.option("--config", "config_path", type=click.Path(), default=None,
                 help="JSON config file; flags override its values."),
    click.option("--provider", "provider_kind", type=click.Choice(["mock", "remote"]),
                 default=None),
    click.option("--fixtures", type=click.Path(), default=None,
                 help="Fixture directory for the mock provider."),
    click.option("--endpoint", default=None, help="Remote provider base URL."),
    click.option("--model", default=None, help="Remote provider model name."),
]


def with_provider_options(fn):
    for option in reversed(provider_options):
        fn = option(fn)
    return fn


@click.group()
def main():
    """Bimodal data exploration engine."""


@main.command()
@with_provider_options
@click.option("--host", default=None)
@click.option("--port", type=int, default=None)
@click.option("--ui-dir", type=click.Path(), default=None,
              help="Directory of built UI assets to serve at /.")
def serve(config_path, provider_kind, fixtures, endpoint, model, host, port, ui_dir):
    """Run the HTTP API (and the UI, if assets are given)."""
    import uvicorn

    from .api import create_app

    config = _load_config(config_path)
    provider = _build_provider(config, provider_kind, fixtures, endpoint, model)
    app = create_app(provider, ui_dir=ui_dir or config.get("ui_dir"))
    uvicorn.run(app, host=host or config.get("host", "127.0.0.1"),
                port=port or config.get("port", 8000))


@main.command()
@with_provider_options
@click.option("--dataset", "dataset_path", type=click.Path(), required=True)
@click.option("--key-field", required=True)
@click.option("--name", default=None)
@click.option("--description", "nl_description", default="")
@click.option("--goal", required=True)
@click.option("--format", "output_format", type=click.Choice(["json", "text"]), default="json")
def generate(config_path, provider_kind, fixtures, endpoint, model,
             dataset_path, key_field, name, nl_description, goal, output_format):
    """Generate the opening narrative for a dataset, headlessly."""
    config = _load_config(config_path)
    provider = _build_provider(config, provider_kind, fixtures, endpoint, model)
    try:
        dataset = load_dataset(
            dataset_path,
            name=name or Path(dataset_path).stem,
            nl_description=nl_description,
            key_field=key_field,
        )
        session = create_session(dataset, goal, provider)
    except StrataError as exc:
        _fail(exc)
    if output_format == "json":
        click.echo(json.dumps(session.document.to_json(), indent=2))
    else:
        click.echo(_render_text(session.document))


@main.command(name="replay")
@with_provider_options
@click.argument("script_path", type=click.Path(exists=True))
@click.option("--save", "save_path", type=click.Path(), default=None,
              help="Write the final session to this file.")
def replay_command(config_path, provider_kind, fixtures, endpoint, model,
                   script_path, save_path):
    """Run a recorded interaction script and report each step."""
    config = _load_config(config_path)
    provider = _build_provider(config, provider_kind, fixtures, endpoint, model)
    try:
        raw = json.loads(Path(script_path).read_text(encoding="utf-8"))
        script = ReplayScript.from_json(raw, base_dir=Path(script_path).parent)
    except (OSError, json.JSONDecodeError, KeyError, ValueError) as exc:
        click.echo(f"error: cannot load script {script_path}: {exc}", err=True)
        sys.exit(EXIT_FAILURE)
    try:
        session, log = replay(script, provider)
    except ReplayStepError as exc:
        for entry in exc.log:
            click.echo(f"step {entry['step']}: {entry['effect']['kind']}")
        click.echo(f"error at step {exc.step_index}: {exc.cause}", err=True)
        cause = exc.cause
        sys.exit(EXIT_CONFIG if isinstance(cause, _CONFIG_ERRORS) else EXIT_FAILURE)
    except StrataError as exc:
        _fail(exc)
    for entry in log:
        click.echo(f"step {entry['step']}: {entry['effect']['kind']}")
    click.echo(
        f"final state: {len(session.document.paragraphs)} paragraphs, "
        f"{len(session.charts)} charts"
    )
    for chart in session.charts:
        number = session.chart_numbers.get(chart.id)
        highlights = ", ".join(chart.highlights) or "none"
        click.echo(f"  chart {number}: {chart.kind.value} \"{chart.title}\" "
                   f"(highlights: {highlights})")
    if save_path:
        save_session(session, save_path)
        click.echo(f"session saved to {save_path}")


@main.command()
@click.argument("session_file", type=click.Path(exists=True))
@click.option("--tolerance", type=float, default=0.01, show_default=True,
              help="Relative error tolerance for numeric claims.")
def check(session_file, tolerance):
    """Verify a saved session's numeric claims against its dataset."""
    try:
        session = load_session(session_file)
    except StrataError as exc:
        _fail(exc)
    report = ground_check(session.document, session.dataset, tolerance=tolerance)
    click.echo(f"checked: {report.checked}")
    click.echo(f"skipped: {report.skipped}")
    click.echo(f"mismatches: {len(report.mismatches)}")
    for mismatch in report.mismatches:
        click.echo(
            f"  leaf {mismatch.leaf_id}: {mismatch.field} claimed {mismatch.claimed} "
            f"actual {mismatch.actual} (relative error {mismatch.relative_error:.4f})"
        )
    sys.exit(EXIT_FAILURE if report.mismatches else 0)


@main.command()
@click.argument("directory", type=click.Path())
def scenario(directory):
    """Write the bundled demo (replay script + mock fixtures) to a directory."""
    from .scenario import write_scenario_files

    script_path = write_scenario_files(directory)
    click.echo(f"wrote {script_path}")
    click.echo(f"run it with: strata replay {script_path} --provider mock "
               f"--fixtures {Path(directory) / 'fixtures'}")


if __name__ == "__main__":
    main()

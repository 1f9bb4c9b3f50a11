"""Command-line entry points for the pipeline and the rating service.

Exit codes: 0 success, 1 stage failure, 2 configuration error.
"""

import json
import logging
import sys
from pathlib import Path

import click

from .humaneval import EvalSample, SessionStore, aggregate, create_session
from .pipeline import (ConfigError, MissingUpstreamArtifact, STAGES, load_config,
                       run_pipeline)
from .report import render_rating_table
from .storage import read_jsonl

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_STAGE_FAILURE = 1
EXIT_CONFIG_ERROR = 2


def _load(config, seed, output_dir, jobs):
    try:
        return load_config(config, seed_override=seed, output_override=output_dir,
                           jobs_override=jobs)
    except ConfigError as exc:
        click.echo(f"config error: {exc}", err=True)
        sys.exit(EXIT_CONFIG_ERROR)


def _run(cfg, stages, force):
    try:
        executed = run_pipeline(cfg, stages, force=force)
    except ConfigError as exc:
        click.echo(f"config error: {exc}", err=True)
        sys.exit(EXIT_CONFIG_ERROR)
    except MissingUpstreamArtifact as exc:
        click.echo(f"missing upstream artifact: {exc}", err=True)
        sys.exit(EXIT_STAGE_FAILURE)
    except Exception as exc:  # stage failure: nonzero exit per contract
        log.exception("stage failed")
        click.echo(f"stage failed: {exc}", err=True)
        sys.exit(EXIT_STAGE_FAILURE)
    for stage, notes in executed.items():
        click.echo(f"{stage}: {'up to date' if notes == 'skipped' else json.dumps(notes)}")
    sys.exit(EXIT_OK)


@click.group()
@click.option("--verbose", is_flag=True, help="Debug logging.")
def main(verbose):
    logging.basicConfig(level=logging.DEBUG if verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")


def _stage_command(name, help_text):
    @main.command(name=name, help=help_text)
    @click.option("--config", "-c", required=True, type=click.Path(exists=True))
    @click.option("--seed", type=int, default=None, help="Override the config seed.")
    @click.option("--output-dir", type=click.Path(), default=None)
    @click.option("--jobs", type=int, default=None, help="Within-stage parallelism.")
    @click.option("--force", is_flag=True, help="Rerun even when up to date.")
    def command(config, seed, output_dir, jobs, force):
        cfg = _load(config, seed, output_dir, jobs)
        _run(cfg, [name], force)

    return command


for _name, _help in (
    ("ingest", "Validate corpus files into document stores."),
    ("curate", "Build the instruction dataset (weak labels via the configured backend)."),
    ("split", "Seeded 90/10 train/validation split."),
    ("infer", "Run every configured backend over the evaluation set."),
    ("extract", "Extract targeted predictions from raw responses."),
    ("score", "Per-instance metric scores (plus classification summaries)."),
    ("compare", "Bootstrap summaries and rank-sum comparisons vs the reference."),
    ("report", "Render the metric table as markdown + CSV."),
):
    _stage_command(_name, _help)


@main.command(name="run", help="Run a stage subset (default: the full pipeline).")
@click.option("--config", "-c", required=True, type=click.Path(exists=True))
@click.option("--stages", default=",".join(STAGES),
              help="Comma-separated stage subset, canonical order enforced.")
@click.option("--seed", type=int, default=None)
@click.option("--output-dir", type=click.Path(), default=None)
@click.option("--jobs", type=int, default=None)
@click.option("--force", is_flag=True)
def run_cmd(config, stages, seed, output_dir, jobs, force):
    cfg = _load(config, seed, output_dir, jobs)
    wanted = [s.strip() for s in stages.split(",") if s.strip()]
    _run(cfg, wanted, force)


@main.command(name="serve", help="Serve the blinded rating HTTP API.")
@click.option("--sessions-dir", required=True, type=click.Path())
@click.option("--host", default="127.0.0.1")
@click.option("--port", type=int, default=8777)
def serve_cmd(sessions_dir, host, port):
    import uvicorn

    from .service import create_app

    app = create_app(SessionStore(sessions_dir))
    uvicorn.run(app, host=host, port=port, log_level="warning")


@main.command(name="session-create",
              help="Create a blinded rating session from a fixture JSONL "
                   "(one line per sample: sample_id, text, responses).")
@click.option("--sessions-dir", required=True, type=click.Path())
@click.option("--session-id", default="session")
@click.option("--fixture", required=True, type=click.Path(exists=True))
@click.option("--models", required=True, help="Comma-separated model ids.")
@click.option("--raters", required=True, help="Comma-separated rater ids.")
@click.option("--seed", type=int, required=True)
def session_create_cmd(sessions_dir, session_id, fixture, models, raters, seed):
    samples = []
    for rec in read_jsonl(fixture):
        samples.append(EvalSample(
            sample_id=rec["sample_id"],
            text=rec["text"],
            responses=rec["responses"],
            source_note_ref=rec.get("source_note_ref", ""),
        ))
    try:
        session = create_session(samples, models.split(","), raters.split(","),
                                 seed, session_id=session_id)
    except ValueError as exc:
        click.echo(f"config error: {exc}", err=True)
        sys.exit(EXIT_CONFIG_ERROR)
    SessionStore(sessions_dir).save(session)
    slots = len(samples) * len(session.models) * len(session.raters)
    click.echo(f"created session {session.id!r}: {len(samples)} samples, "
               f"{len(session.models)} models, {len(session.raters)} raters, "
               f"{slots} rating slots")


@main.command(name="session-report", help="Aggregate a session and render the rating table.")
@click.option("--sessions-dir", required=True, type=click.Path(exists=True))
@click.option("--session-id", default="session")
@click.option("--group-label", default="Ratings")
@click.option("--out", type=click.Path(), default=None,
              help="Write markdown here instead of stdout.")
def session_report_cmd(sessions_dir, session_id, group_label, out):
    store = SessionStore(sessions_dir)
    try:
        session = store.load(session_id)
    except KeyError as exc:
        click.echo(str(exc), err=True)
        sys.exit(EXIT_CONFIG_ERROR)
    report = aggregate(session)
    markdown, csv_text = render_rating_table([(group_label, report)])
    if out:
        Path(out).write_text(markdown, encoding="utf-8")
        Path(out).with_suffix(".csv").write_text(csv_text, encoding="utf-8")
        click.echo(f"wrote {out}")
    else:
        click.echo(markdown)


if __name__ == "__main__":
    main()

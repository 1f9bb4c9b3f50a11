import click

from .scoring import BUILTIN_CHECKPOINT, UnknownCheckpoint, PairScorer


@click.command(help="Serve the pair-scoring protocol.")
@click.option("--host", default="127.0.0.1")
@click.option("--port", type=int, default=8900)
@click.option("--checkpoint", default=BUILTIN_CHECKPOINT,
              help="Scoring backend; only the builtin lexical checkpoint ships.")
def main(host, port, checkpoint):
    try:
        PairScorer(checkpoint)  # fail fast before binding the port
    except UnknownCheckpoint as exc:
        raise click.ClickException(str(exc))
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(checkpoint), host=host, port=port, log_level="warning")


if __name__ == "__main__":
    main()

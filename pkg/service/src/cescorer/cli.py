"""cescorer command line: serve (HTTP), stdio, and finetune."""

from __future__ import annotations

import json
import sys

import click

from .model import CrossEncoderScorer, ServiceConfig


@click.group()
def cli():
    """Cross-encoder scorer service for the /score wire protocol."""


def _scorer_options(fn):
    fn = click.option("--model", required=True, help="Model name or checkpoint path.")(fn)
    fn = click.option("--mode", type=click.Choice(["plain", "injected"]),
                      default="injected", show_default=True)(fn)
    fn = click.option("--score-segment", type=click.Choice(["a", "b"]), default="b",
                      show_default=True,
                      help="Segment id the score token rides in.")(fn)
    fn = click.option("--max-length", type=int, default=256, show_default=True)(fn)
    fn = click.option("--batch-size", type=int, default=32, show_default=True)(fn)
    fn = click.option("--device", default="cpu", show_default=True)(fn)
    return fn


def _build_scorer(model, mode, score_segment, max_length, batch_size, device):
    return CrossEncoderScorer(ServiceConfig(
        model=model, mode=mode, score_segment=score_segment,
        max_length=max_length, batch_size=batch_size, device=device,
    ))


@cli.command("serve")
@_scorer_options
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8765, show_default=True)
def cmd_serve(model, mode, score_segment, max_length, batch_size, device, host, port):
    """Serve POST /score over HTTP."""
    import uvicorn

    from .app import create_app

    scorer = _build_scorer(model, mode, score_segment, max_length, batch_size, device)
    uvicorn.run(create_app(scorer), host=host, port=port, log_level="warning")


@cli.command("stdio")
@_scorer_options
def cmd_stdio(model, mode, score_segment, max_length, batch_size, device):
    """Answer requests on stdin, one JSON object per line."""
    scorer = _build_scorer(model, mode, score_segment, max_length, batch_size, device)
    for line in sys.stdin:
        if not line.strip():
            continue
        try:
            request = json.loads(line)
            pairs = request["pairs"]
            triples = [(p["query"], p.get("score_token"), p["passage"]) for p in pairs]
            values = scorer.score_triples(triples)
            reply = {"scores": [{"id": p["id"], "score": v}
                                for p, v in zip(pairs, values)]}
        except Exception as exc:  # malformed line: reply without ids so the
            reply = {"scores": [], "error": str(exc)}  # client flags the batch
        sys.stdout.write(json.dumps(reply) + "\n")
        sys.stdout.flush()


@cli.command("finetune")
@click.option("--train", "train_path", required=True,
              help="TSV: query, score_token, passage, label.")
@click.option("--val", "val_path", required=True,
              help="TSV: qid, query, score_token, doc_id, passage.")
@click.option("--qrels", "qrels_path", required=True)
@click.option("--base-model", required=True)
@click.option("--output-dir", required=True)
@click.option("--lr", type=float, default=7e-6, show_default=True)
@click.option("--batch-size", type=int, default=32, show_default=True)
@click.option("--epochs", type=int, default=20, show_default=True)
@click.option("--patience", type=int, default=3, show_default=True)
@click.option("--max-length", type=int, default=256, show_default=True)
@click.option("--mode", type=click.Choice(["plain", "injected"]),
              default="injected", show_default=True)
@click.option("--score-segment", type=click.Choice(["a", "b"]), default="b",
              show_default=True)
@click.option("--device", default="cpu", show_default=True)
@click.option("--seed", type=int, default=42, show_default=True)
def cmd_finetune(train_path, val_path, qrels_path, base_model, output_dir, lr,
                 batch_size, epochs, patience, max_length, mode, score_segment,
                 device, seed):
    """Fine-tune a checkpoint; keeps the best validation-nDCG@10 epoch."""
    from .finetune import TrainConfig, finetune, load_train_pairs, load_validation
    from .metrics import read_qrels

    cfg = TrainConfig(base_model=base_model, output_dir=output_dir,
                      learning_rate=lr, batch_size=batch_size, max_epochs=epochs,
                      patience=patience, max_length=max_length, mode=mode,
                      score_segment=score_segment, device=device, seed=seed)
    result = finetune(load_train_pairs(train_path), load_validation(val_path),
                      read_qrels(qrels_path), cfg)
    click.echo(f"best nDCG@10 {result.best_ndcg10:.4f} at epoch {result.best_epoch}; "
               f"stopped after epoch {result.stopped_epoch}"
               f"{' (early)' if result.early_stopped else ''}")
    click.echo(f"checkpoint: {result.checkpoint_dir}")


def main() -> int:
    try:
        cli.main(standalone_mode=False)
    except click.exceptions.Exit as exc:
        return exc.exit_code
    except click.ClickException as exc:
        exc.show()
        return 1
    except (OSError, ValueError) as exc:
        click.echo(f"error: {exc}", err=True)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())

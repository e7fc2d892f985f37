"""Batch command-line surface.

Subcommands compose the library modules into the standard experiment
workflows: index, retrieve, rerank, fuse, sweep, eval. No scoring or metric
math lives here. Exit codes: 0 success, 1 usage error, 2 data error,
3 scorer transport error.
"""

from __future__ import annotations

import logging
import sys

import click
from click.core import ParameterSource

from . import ensemble, evaluate, io_formats, lexical, pipeline
from .errors import DataFormatError, InjectRankError, TransportError
from .gateway import make_scorer
from .normalize import NormalizationConfig

logger = logging.getLogger(__name__)


def _from_cli(ctx: click.Context, name: str) -> bool:
    return ctx.get_parameter_source(name) == ParameterSource.COMMANDLINE


def _load_index(path: str) -> lexical.InvertedIndex:
    try:
        return lexical.InvertedIndex.load(path)
    except FileNotFoundError:
        raise DataFormatError("index file not found", path=path) from None


def _read_runs(path: str) -> dict[str, lexical.RankedList]:
    try:
        return io_formats.read_trec_run(path)
    except FileNotFoundError:
        raise DataFormatError("run file not found", path=path) from None


def _read_queries(path: str) -> dict[str, str]:
    try:
        return io_formats.read_queries_tsv(path)
    except FileNotFoundError:
        raise DataFormatError("queries file not found", path=path) from None


def _read_qrels(path: str) -> dict[str, dict[str, int]]:
    try:
        return io_formats.read_qrels(path)
    except FileNotFoundError:
        raise DataFormatError("qrels file not found", path=path) from None


@click.group()
def cli():
    """Two-stage retrieval toolkit: BM25, score-injected re-ranking, fusion, eval."""


@cli.command("index")
@click.argument("collection", type=str)
@click.argument("index_path", type=str)
@click.option("--no-lowercase", is_flag=True, help="Keep original casing.")
@click.option("--stem", type=click.Choice(["none", "porter"]), default="none",
              show_default=True)
@click.option("--stopwords", "stopwords_path", type=str, default=None,
              help="Newline-separated stopword list.")
def cmd_index(collection, index_path, no_lowercase, stem, stopwords_path):
    """Build an inverted index from a collection TSV."""
    stopwords = frozenset()
    if stopwords_path:
        try:
            with open(stopwords_path, "r", encoding="utf-8") as fh:
                stopwords = frozenset(w.strip() for w in fh if w.strip())
        except FileNotFoundError:
            raise DataFormatError("stopword file not found", path=stopwords_path) from None
    cfg = lexical.TokenizerConfig(lowercase=not no_lowercase, stemming=stem,
                                  stopwords=stopwords)
    try:
        index = lexical.build_index(io_formats.read_collection_tsv(collection), cfg)
    except FileNotFoundError:
        raise DataFormatError("collection file not found", path=collection) from None
    index.save(index_path)
    click.echo(f"N={index.doc_count}")
    click.echo(f"avg_doc_length={index.avg_doc_length:.6f}")
    click.echo(f"vocab_size={index.vocab_size}")


@cli.command("retrieve")
@click.argument("index_path", type=str)
@click.argument("queries", type=str)
@click.argument("run_out", type=str)
@click.option("--k", type=click.IntRange(min=1), default=1000, show_default=True)
@click.option("--k1", type=float, default=0.82, show_default=True)
@click.option("--b", type=float, default=0.68, show_default=True)
@click.option("--tag", default="bm25", show_default=True)
@click.option("--config", "config_path", type=str, default=None,
              help="YAML config; explicit flags win.")
@click.pass_context
def cmd_retrieve(ctx, index_path, queries, run_out, k, k1, b, tag, config_path):
    """BM25 first-stage retrieval to a TREC run file."""
    if config_path:
        conf = io_formats.load_config(config_path)
        if not _from_cli(ctx, "k1"):
            k1 = conf.bm25.k1
        if not _from_cli(ctx, "b"):
            b = conf.bm25.b
    try:
        params = lexical.BM25Params(k1=k1, b=b)
    except ValueError as exc:
        raise click.UsageError(str(exc))
    index = _load_index(index_path)
    query_texts = _read_queries(queries)
    runs = {}
    for qid in sorted(query_texts):
        ranked = lexical.retrieve_topk(index, query_texts[qid], k=k, params=params,
                                       query_id=qid)
        if not ranked.entries:
            logger.warning("query %s matched no documents; omitted", qid)
            continue
        runs[qid] = ranked
    io_formats.write_trec_run(runs, tag, run_out)
    click.echo(f"wrote {sum(len(r) for r in runs.values())} lines for {len(runs)} queries")


@cli.command("rerank")
@click.argument("index_path", type=str)
@click.argument("run_in", type=str)
@click.argument("queries", type=str)
@click.argument("run_out", type=str)
@click.option("--scorer", "scorer_spec", default="synthetic", show_default=True,
              help="synthetic | http:<url> | stdio:<command>")
@click.option("--depth", type=click.IntRange(min=1), default=1000, show_default=True)
@click.option("--inject/--no-inject", default=True, show_default=True,
              help="Inject the first-stage score token into the scorer input.")
@click.option("--norm", type=click.Choice(["minmax", "standard", "sum", "original"]),
              default="minmax", show_default=True)
@click.option("--scope", type=click.Choice(["local", "global"]), default="global",
              show_default=True)
@click.option("--repr", "representation", type=click.Choice(["float", "int"]),
              default="int", show_default=True)
@click.option("--global-stats", default="0,50,42,6", show_default=True,
              help="min,max,mean,std for global scope.")
@click.option("--query-cap", type=click.IntRange(min=1), default=30, show_default=True)
@click.option("--passage-cap", type=click.IntRange(min=1), default=200, show_default=True)
@click.option("--batch-size", type=click.IntRange(min=1), default=32, show_default=True)
@click.option("--mask-exact-match", is_flag=True,
              help="Mask passage words absent from the query before scoring.")
@click.option("--tag", default=None, help="Run tag [default: ce_cat / ce_bm25cat]")
@click.option("--config", "config_path", type=str, default=None)
@click.pass_context
def cmd_rerank(ctx, index_path, run_in, queries, run_out, scorer_spec, depth,
               inject, norm, scope, representation, global_stats, query_cap,
               passage_cap, batch_size, mask_exact_match, tag, config_path):
    """Re-rank a first-stage run with an in-process or external scorer."""
    if config_path:
        conf = io_formats.load_config(config_path)
        if not _from_cli(ctx, "scorer_spec"):
            scorer_spec = conf.scorer
        if not _from_cli(ctx, "depth"):
            depth = conf.rerank.depth
        if not _from_cli(ctx, "inject"):
            inject = conf.rerank.injection
        if not _from_cli(ctx, "query_cap"):
            query_cap = conf.rerank.query_token_cap
        if not _from_cli(ctx, "passage_cap"):
            passage_cap = conf.rerank.passage_token_cap
        if not _from_cli(ctx, "norm"):
            norm = conf.normalization.method
        if not _from_cli(ctx, "scope"):
            scope = conf.normalization.scope
        if not _from_cli(ctx, "representation"):
            representation = conf.normalization.representation
        if not _from_cli(ctx, "global_stats"):
            global_stats = ",".join(str(v) for v in conf.normalization.global_stats)
    try:
        stats = tuple(float(v) for v in global_stats.split(","))
        if len(stats) != 4:
            raise ValueError("expected min,max,mean,std")
        normalization = NormalizationConfig(method=norm, scope=scope,
                                            representation=representation,
                                            global_stats=stats)
        cfg = pipeline.RerankConfig(depth=depth, query_token_cap=query_cap,
                                    passage_token_cap=passage_cap,
                                    injection=inject, normalization=normalization)
        scorer = make_scorer(scorer_spec, batch_size=batch_size)
    except ValueError as exc:
        raise click.UsageError(str(exc))

    index = _load_index(index_path)
    runs_in = _read_runs(run_in)
    query_texts = _read_queries(queries)
    out: dict[str, lexical.RankedList] = {}
    try:
        for qid in sorted(runs_in):
            if qid not in query_texts:
                raise DataFormatError(f"query {qid!r} from the run has no text", path=queries)
            out[qid] = pipeline.rerank(query_texts[qid], runs_in[qid], scorer, cfg,
                                       passages=index.doc_text,
                                       mask_exact=mask_exact_match)
    finally:
        scorer.close()
    run_tag = tag if tag is not None else ("ce_bm25cat" if inject else "ce_cat")
    io_formats.write_trec_run(out, run_tag, run_out)
    click.echo(f"re-ranked {len(out)} queries (tag={run_tag})")


@cli.command("fuse")
@click.argument("run_lex", type=str)
@click.argument("run_neural", type=str)
@click.argument("run_out", type=str)
@click.option("--method", type=click.Choice(list(ensemble.FUSION_METHODS)),
              default="weighted_sum", show_default=True)
@click.option("--alpha", type=click.FloatRange(0.0, 1.0), default=0.1, show_default=True)
@click.option("--train-qrels", "train_qrels", type=str, default=None,
              help="Qrels used to fit the naive_bayes ensemble.")
@click.option("--tag", default="fused", show_default=True)
@click.option("--config", "config_path", type=str, default=None)
@click.pass_context
def cmd_fuse(ctx, run_lex, run_neural, run_out, method, alpha, train_qrels, tag,
             config_path):
    """Fuse two runs (sum / max / weighted_sum / naive_bayes)."""
    if config_path:
        conf = io_formats.load_config(config_path)
        if not _from_cli(ctx, "method"):
            method = conf.fusion.method
        if not _from_cli(ctx, "alpha"):
            alpha = conf.fusion.alpha
    cfg = ensemble.FusionConfig(method=method, alpha=alpha)
    lex = _read_runs(run_lex)
    neural = _read_runs(run_neural)
    model = None
    if method == "naive_bayes":
        if not train_qrels:
            raise click.UsageError("--train-qrels is required for naive_bayes fusion")
        model = _fit_nb(lex, neural, _read_qrels(train_qrels))
    fused = ensemble.fuse_runs(lex, neural, cfg, nb_model=model)
    io_formats.write_trec_run(fused, tag, run_out)
    click.echo(f"fused {len(fused)} queries (method={method})")


def _fit_nb(lex, neural, qrels):
    samples = []
    for qid in sorted(set(lex) & set(neural)):
        lex_raw = dict(lex[qid].entries)
        neural_raw = dict(neural[qid].entries)
        lex_min, neural_min = min(lex_raw.values()), min(neural_raw.values())
        judgments = qrels.get(qid, {})
        for doc_id in set(lex_raw) | set(neural_raw):
            label = 1 if judgments.get(doc_id, 0) >= 1 else 0
            samples.append((lex_raw.get(doc_id, lex_min),
                            neural_raw.get(doc_id, neural_min), label))
    try:
        return ensemble.nb_fit(samples)
    except ValueError as exc:
        raise DataFormatError(f"cannot fit naive_bayes: {exc}") from exc


@cli.command("sweep")
@click.argument("run_lex", type=str)
@click.argument("run_neural", type=str)
@click.argument("qrels_path", type=str)
@click.option("--grid", default="0,0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9,1",
              show_default=True, help="Comma-separated interpolation weights.")
@click.option("--metric", "metrics", multiple=True, default=("mrr@10",),
              show_default=True)
@click.option("-o", "--output", type=str, default=None, help="TSV path [default: stdout]")
def cmd_sweep(run_lex, run_neural, qrels_path, grid, metrics, output):
    """Evaluate weighted-sum fusion across an interpolation-weight grid."""
    try:
        grid_values = [float(v) for v in grid.split(",") if v.strip() != ""]
    except ValueError as exc:
        raise click.UsageError(f"bad grid: {exc}")
    if not grid_values:
        raise click.UsageError("grid is empty")
    rows = ensemble.sweep_alpha(_read_runs(run_lex), _read_runs(run_neural),
                                _read_qrels(qrels_path), grid_values, metrics=metrics)
    lines = ["alpha\tmetric\tvalue"]
    lines += [f"{alpha:g}\t{metric}\t{value:.6f}" for alpha, metric, value in rows]
    _emit(lines, output)


@cli.command("eval")
@click.argument("run_path", type=str)
@click.argument("qrels_path", type=str)
@click.option("--metrics", default="mrr@10,ndcg@10,map@1000", show_default=True)
@click.option("--rel-threshold", type=click.IntRange(min=1), default=1, show_default=True)
@click.option("--per-query", is_flag=True, help="Emit one row per query as well.")
@click.option("--compare", "compare_path", type=str, default=None,
              help="Second run for a paired significance test.")
@click.option("--num-comparisons", type=click.IntRange(min=1), default=1,
              show_default=True, help="Bonferroni correction factor.")
@click.option("--by-type", "queries_path", type=str, default=None,
              help="Queries TSV enabling the per-query-type breakdown.")
@click.option("--overlap", "overlap_path", type=str, default=None,
              help="Second run for top-k relevant-overlap analysis.")
@click.option("--format", "fmt", type=click.Choice(["tsv", "table"]), default="tsv",
              show_default=True)
@click.option("-o", "--output", type=str, default=None, help="Output path [default: stdout]")
def cmd_eval(run_path, qrels_path, metrics, rel_threshold, per_query, compare_path,
             num_comparisons, queries_path, overlap_path, fmt, output):
    """Evaluate a run against qrels; optionally compare, group, and overlap."""
    metric_names = tuple(m.strip() for m in metrics.split(",") if m.strip())
    if not metric_names:
        raise click.UsageError("--metrics must name at least one metric")
    try:
        for name in metric_names:
            evaluate.parse_metric(name)
    except ValueError as exc:
        raise click.UsageError(str(exc))
    runs = _read_runs(run_path)
    qrels = _read_qrels(qrels_path)
    report = evaluate.evaluate_run(runs, qrels, metrics=metric_names,
                                   rel_threshold=rel_threshold)

    lines: list[str] = []
    if fmt == "tsv":
        if per_query:
            for metric in metric_names:
                for qid in sorted(report.per_query[metric]):
                    lines.append(f"{metric}\t{qid}\t{report.per_query[metric][qid]:.6f}")
        for metric in metric_names:
            lines.append(f"{metric}\tALL\t{report.aggregates[metric]:.6f}")
    else:
        width = max(len(m) for m in metric_names)
        lines.append(f"{'metric'.ljust(width)}  queries  value")
        for metric in metric_names:
            lines.append(
                f"{metric.ljust(width)}  {len(report.per_query[metric]):7d}  "
                f"{report.aggregates[metric]:.4f}"
            )
    lines.append(f"# evaluated={len(report.evaluated_queries)} "
                 f"skipped={len(report.skipped_queries)}")

    if compare_path:
        other = evaluate.evaluate_run(_read_runs(compare_path), qrels,
                                      metrics=metric_names, rel_threshold=rel_threshold)
        for metric in metric_names:
            shared = sorted(set(report.per_query[metric]) & set(other.per_query[metric]))
            if len(shared) < 2:
                lines.append(f"# significance {metric}: not enough shared queries")
                continue
            result = evaluate.paired_ttest_bonferroni(
                [report.per_query[metric][q] for q in shared],
                [other.per_query[metric][q] for q in shared],
                num_comparisons=num_comparisons, comparison=metric,
            )
            p_str = "undefined" if result.p_value is None else f"{result.p_value:.6g}"
            verdict = "significant" if result.significant else "not significant"
            flag = " (zero-variance)" if result.zero_variance else ""
            lines.append(
                f"# significance {metric}: p={p_str} threshold={result.threshold:.6g} "
                f"{verdict}{flag}"
            )

    if queries_path:
        queries = _read_queries(queries_path)
        for metric in metric_names:
            for qtype, count, mean in evaluate.per_type_report(
                    runs, queries, qrels, metric=metric, rel_threshold=rel_threshold):
                lines.append(f"type:{metric}\t{qtype}\t{count}\t{mean:.6f}")

    if overlap_path:
        result = evaluate.overlap_at_k(runs, _read_runs(overlap_path), qrels,
                                       rel_threshold=rel_threshold)
        lines.append(f"# overlap@10 micro={result.micro:.2f}% macro={result.macro:.2f}% "
                     f"queries={result.queries}")

    _emit(lines, output)


def _emit(lines: list[str], output: str | None) -> None:
    text = "\n".join(lines) + "\n"
    if output:
        try:
            with open(output, "w", encoding="utf-8") as fh:
                fh.write(text)
        except OSError as exc:
            raise DataFormatError(f"cannot write output: {exc}", path=output) from exc
    else:
        click.echo(text, nl=False)


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cli.main(args=argv, standalone_mode=False)
    except click.exceptions.Exit as exc:
        return exc.exit_code
    except click.exceptions.Abort:
        click.echo("aborted", err=True)
        return 1
    except click.ClickException as exc:  # UsageError included
        exc.show()
        return 1
    except TransportError as exc:
        click.echo(f"transport error: {exc}", err=True)
        return 3
    except DataFormatError as exc:
        click.echo(f"data error: {exc}", err=True)
        return 2
    except InjectRankError as exc:
        click.echo(f"error: {exc}", err=True)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())

"""End-to-end command-line contract: workflows, outputs, and exit codes."""

import pytest

from injectrank.cli import main
from injectrank.io_formats import read_trec_run
from injectrank.lexical import BM25Params, build_index, retrieve_topk, tokenize
from injectrank.normalize import NormalizationConfig
from injectrank.pipeline import RerankConfig, SyntheticScorer, rerank

from oracles import topk_reference

DOCS = [
    ("p1", "the shingles vaccine is given as a single injection"),
    ("p2", "the flu jab is offered every year in autumn"),
    ("p3", "shingles is a painful rash caused by a virus"),
    ("p4", "a pound is sixteen ounces"),
    ("p5", "vaccines train the immune system"),
]
QUERIES = [
    ("q1", "what is the shingles jab"),
    ("q2", "how many ounces in a pound"),
]
QRELS = ["q1 0 p1 1", "q1 0 p3 1", "q2 0 p4 1"]


@pytest.fixture()
def workspace(tmp_path):
    (tmp_path / "collection.tsv").write_text(
        "".join(f"{d}\t{t}\n" for d, t in DOCS), encoding="utf-8")
    (tmp_path / "queries.tsv").write_text(
        "".join(f"{q}\t{t}\n" for q, t in QUERIES), encoding="utf-8")
    (tmp_path / "qrels.txt").write_text("\n".join(QRELS) + "\n", encoding="utf-8")
    return tmp_path


def _paths(ws, *names):
    return [str(ws / n) for n in names]


class TestIndexCommand:
    def test_prints_statistics(self, workspace, capsys):
        collection, index = _paths(workspace, "collection.tsv", "toy.idx")
        assert main(["index", collection, index]) == 0
        out = capsys.readouterr().out
        assert "N=5" in out
        assert "vocab_size=" in out

    def test_duplicate_ids_exit_2(self, workspace, capsys):
        bad = workspace / "bad.tsv"
        bad.write_text("1\ta\n1\tb\n", encoding="utf-8")
        collection, index = _paths(workspace, "bad.tsv", "toy.idx")
        assert main(["index", str(bad), index]) == 2

    def test_empty_collection(self, workspace, capsys):
        empty = workspace / "empty.tsv"
        empty.write_text("", encoding="utf-8")
        _, index = _paths(workspace, "collection.tsv", "empty.idx")
        assert main(["index", str(empty), index]) == 0
        assert "N=0" in capsys.readouterr().out


class TestRetrieveCommand:
    def test_run_matches_bruteforce_oracle(self, workspace):
        collection, index, queries, run = _paths(
            workspace, "collection.tsv", "toy.idx", "queries.tsv", "bm25.run")
        assert main(["index", collection, index]) == 0
        assert main(["retrieve", index, queries, run, "--k", "3"]) == 0
        runs = read_trec_run(run)
        doc_tokens = {d: tokenize(t) for d, t in DOCS}
        for qid, text in QUERIES:
            expected = topk_reference(doc_tokens, tokenize(text), 3, 0.82, 0.68)
            assert runs[qid].doc_ids() == [d for d, _ in expected]

    def test_k_zero_is_usage_error(self, workspace):
        collection, index, queries, run = _paths(
            workspace, "collection.tsv", "toy.idx", "queries.tsv", "out.run")
        main(["index", collection, index])
        assert main(["retrieve", index, queries, run, "--k", "0"]) == 1

    def test_missing_index_exit_2(self, workspace):
        queries, run = _paths(workspace, "queries.tsv", "out.run")
        assert main(["retrieve", str(workspace / "nope.idx"), queries, run]) == 2

    def test_no_match_query_omitted(self, workspace, capsys):
        (workspace / "q2.tsv").write_text("q9\tzzz qqq xxx\n", encoding="utf-8")
        collection, index, queries, run = _paths(
            workspace, "collection.tsv", "toy.idx", "q2.tsv", "out.run")
        main(["index", collection, index])
        assert main(["retrieve", index, queries, run]) == 0
        assert read_trec_run(run) == {}

    def test_tag_written(self, workspace):
        collection, index, queries, run = _paths(
            workspace, "collection.tsv", "toy.idx", "queries.tsv", "tagged.run")
        main(["index", collection, index])
        main(["retrieve", index, queries, run])
        with open(run, encoding="utf-8") as fh:
            assert all(line.split()[-1] == "bm25" for line in fh)


@pytest.fixture()
def retrieved(workspace):
    collection, index, queries, run = _paths(
        workspace, "collection.tsv", "toy.idx", "queries.tsv", "bm25.run")
    main(["index", collection, index])
    main(["retrieve", index, queries, run])
    return workspace


class TestRerankCommand:
    def test_synthetic_rerank_matches_library(self, retrieved):
        ws = retrieved
        index, run_in, queries, run_out = _paths(
            ws, "toy.idx", "bm25.run", "queries.tsv", "ce.run")
        assert main(["rerank", index, run_in, queries, run_out, "--inject"]) == 0
        got = read_trec_run(run_out)

        idx = build_index(DOCS)
        cfg = RerankConfig(injection=True, normalization=NormalizationConfig())
        first_stage = read_trec_run(run_in)
        for qid, text in QUERIES:
            expected = rerank(text, first_stage[qid], SyntheticScorer(), cfg,
                              passages=idx.doc_text)
            assert got[qid].doc_ids() == expected.doc_ids()

    def test_default_is_injected_pipeline(self, retrieved):
        # zero-flag rerank = score injection with global minmax integer tokens
        ws = retrieved
        index, run_in, queries = _paths(ws, "toy.idx", "bm25.run", "queries.tsv")
        plain, zero_flag, injected = _paths(ws, "plain.run", "zero.run", "inj.run")
        main(["rerank", index, run_in, queries, zero_flag])
        main(["rerank", index, run_in, queries, injected, "--inject"])
        main(["rerank", index, run_in, queries, plain, "--no-inject"])
        with open(zero_flag, "rb") as fa, open(injected, "rb") as fb:
            assert fa.read() == fb.read()
        with open(zero_flag, encoding="utf-8") as fh:
            assert fh.readline().split()[-1] == "ce_bm25cat"
        with open(plain, encoding="utf-8") as fh:
            assert fh.readline().split()[-1] == "ce_cat"

    def test_mask_exact_match_flag(self, retrieved):
        ws = retrieved
        index, run_in, queries, out = _paths(
            ws, "toy.idx", "bm25.run", "queries.tsv", "masked.run")
        assert main(["rerank", index, run_in, queries, out,
                     "--mask-exact-match"]) == 0
        assert set(read_trec_run(out)) == {"q1", "q2"}

    def test_unreachable_scorer_exit_3(self, retrieved):
        ws = retrieved
        index, run_in, queries, out = _paths(
            ws, "toy.idx", "bm25.run", "queries.tsv", "dead.run")
        assert main(["rerank", index, run_in, queries, out,
                     "--scorer", "http://127.0.0.1:1/score"]) == 3

    def test_bad_norm_combo_is_usage_error(self, retrieved):
        ws = retrieved
        index, run_in, queries, out = _paths(
            ws, "toy.idx", "bm25.run", "queries.tsv", "x.run")
        assert main(["rerank", index, run_in, queries, out,
                     "--norm", "sum", "--scope", "global"]) == 1

    def test_missing_query_text_exit_2(self, retrieved):
        ws = retrieved
        (ws / "short.tsv").write_text("q1\twhat is the shingles jab\n",
                                      encoding="utf-8")
        index, run_in, queries, out = _paths(
            ws, "toy.idx", "bm25.run", "short.tsv", "x.run")
        assert main(["rerank", index, run_in, queries, out]) == 2


class TestFuseCommand:
    def _two_runs(self, ws):
        index, run_in, queries = _paths(ws, "toy.idx", "bm25.run", "queries.tsv")
        ce = str(ws / "ce.run")
        main(["rerank", index, run_in, queries, ce, "--inject"])
        return str(ws / "bm25.run"), ce

    def test_alpha_zero_reproduces_neural_ordering(self, retrieved):
        lex, neural = self._two_runs(retrieved)
        out = str(retrieved / "fused.run")
        assert main(["fuse", lex, neural, out, "--alpha", "0"]) == 0
        fused = read_trec_run(out)
        target = read_trec_run(neural)
        for qid in target:
            assert fused[qid].doc_ids() == target[qid].doc_ids()

    def test_sum_fusion_matches_hand_computation(self, retrieved):
        ws = retrieved
        (ws / "a.run").write_text("1 Q0 d1 1 2.000000 a\n1 Q0 d2 2 1.000000 a\n",
                                  encoding="utf-8")
        (ws / "b.run").write_text("1 Q0 d1 1 0.100000 b\n1 Q0 d2 2 0.900000 b\n",
                                  encoding="utf-8")
        out = str(ws / "sum.run")
        assert main(["fuse", str(ws / "a.run"), str(ws / "b.run"), out,
                     "--method", "sum"]) == 0
        fused = read_trec_run(out)
        assert dict(fused["1"].entries) == {"d1": pytest.approx(2.1),
                                            "d2": pytest.approx(1.9)}

    def test_query_mismatch_exit_2(self, retrieved):
        ws = retrieved
        (ws / "a.run").write_text("1 Q0 d1 1 2.000000 a\n", encoding="utf-8")
        (ws / "b.run").write_text("2 Q0 d1 1 0.500000 b\n", encoding="utf-8")
        assert main(["fuse", str(ws / "a.run"), str(ws / "b.run"),
                     str(ws / "c.run")]) == 2

    def test_naive_bayes_requires_qrels(self, retrieved):
        lex, neural = self._two_runs(retrieved)
        out = str(retrieved / "nb.run")
        assert main(["fuse", lex, neural, out, "--method", "naive_bayes"]) == 1
        assert main(["fuse", lex, neural, out, "--method", "naive_bayes",
                     "--train-qrels", str(retrieved / "qrels.txt")]) == 0
        assert set(read_trec_run(out)) == {"q1", "q2"}


class TestSweepCommand:
    def test_tsv_output(self, retrieved, capsys):
        ws = retrieved
        index, run_in, queries = _paths(ws, "toy.idx", "bm25.run", "queries.tsv")
        ce = str(ws / "ce.run")
        main(["rerank", index, run_in, queries, ce])
        capsys.readouterr()
        assert main(["sweep", str(ws / "bm25.run"), ce, str(ws / "qrels.txt"),
                     "--grid", "0,0.5,1"]) == 0
        lines = capsys.readouterr().out.strip().splitlines()
        assert lines[0] == "alpha\tmetric\tvalue"
        assert len(lines) == 4
        assert lines[1].startswith("0\tmrr@10\t")


class TestEvalCommand:
    def test_hand_computed_mrr(self, retrieved, capsys):
        ws = retrieved
        run, qrels = _paths(ws, "bm25.run", "qrels.txt")
        assert main(["eval", run, qrels, "--metrics", "mrr@10"]) == 0
        out = capsys.readouterr().out
        runs = read_trec_run(run)
        expected = []
        for qid, judg in (("q1", {"p1", "p3"}), ("q2", {"p4"})):
            docs = runs[qid].doc_ids()
            rank = next(i for i, d in enumerate(docs, start=1) if d in judg)
            expected.append(1.0 / rank)
        mean = sum(expected) / len(expected)
        assert f"mrr@10\tALL\t{mean:.6f}" in out

    def test_compare_with_itself_not_significant(self, retrieved, capsys):
        ws = retrieved
        run, qrels = _paths(ws, "bm25.run", "qrels.txt")
        assert main(["eval", run, qrels, "--metrics", "mrr@10",
                     "--compare", run]) == 0
        assert "not significant" in capsys.readouterr().out

    def test_by_type_groups(self, retrieved, capsys):
        ws = retrieved
        run, qrels, queries = _paths(ws, "bm25.run", "qrels.txt", "queries.tsv")
        assert main(["eval", run, qrels, "--metrics", "mrr@10",
                     "--by-type", queries]) == 0
        out = capsys.readouterr().out
        assert "type:mrr@10\tDESC\t1\t" in out  # what is the shingles jab
        assert "type:mrr@10\tNUM\t1\t" in out   # how many ounces in a pound

    def test_overlap_footnote(self, retrieved, capsys):
        ws = retrieved
        run, qrels = _paths(ws, "bm25.run", "qrels.txt")
        assert main(["eval", run, qrels, "--overlap", run]) == 0
        assert "overlap@10 micro=100.00%" in capsys.readouterr().out

    def test_per_query_rows_and_table_format(self, retrieved, capsys):
        ws = retrieved
        run, qrels = _paths(ws, "bm25.run", "qrels.txt")
        assert main(["eval", run, qrels, "--metrics", "mrr@10", "--per-query"]) == 0
        out = capsys.readouterr().out
        assert "mrr@10\tq1\t" in out
        assert main(["eval", run, qrels, "--format", "table"]) == 0
        assert "metric" in capsys.readouterr().out

    def test_unknown_metric_usage_error(self, retrieved):
        ws = retrieved
        run, qrels = _paths(ws, "bm25.run", "qrels.txt")
        assert main(["eval", run, qrels, "--metrics", "precision@7"]) == 1

    def test_output_file_deterministic(self, retrieved):
        ws = retrieved
        run, qrels = _paths(ws, "bm25.run", "qrels.txt")
        out1, out2 = str(ws / "r1.tsv"), str(ws / "r2.tsv")
        assert main(["eval", run, qrels, "--per-query", "-o", out1]) == 0
        assert main(["eval", run, qrels, "--per-query", "-o", out2]) == 0
        with open(out1, "rb") as fa, open(out2, "rb") as fb:
            assert fa.read() == fb.read()


class TestConfigIntegration:
    def test_config_supplies_defaults_flags_override(self, retrieved, capsys):
        ws = retrieved
        conf = ws / "conf.yaml"
        conf.write_text("bm25: {k1: 1.5, b: 0.3}\n", encoding="utf-8")
        index, queries = _paths(ws, "toy.idx", "queries.tsv")
        run_conf = str(ws / "conf.run")
        run_flag = str(ws / "flag.run")
        assert main(["retrieve", index, queries, run_conf,
                     "--config", str(conf)]) == 0
        idx = build_index(DOCS)
        expected = retrieve_topk(idx, QUERIES[0][1], k=1000,
                                 params=BM25Params(k1=1.5, b=0.3), query_id="q1")
        assert read_trec_run(run_conf)["q1"].doc_ids() == expected.doc_ids()
        # explicit flag beats the config value
        assert main(["retrieve", index, queries, run_flag, "--config", str(conf),
                     "--k1", "0.82", "--b", "0.68"]) == 0
        baseline = read_trec_run(str(ws / "bm25.run"))
        got = read_trec_run(run_flag)
        for qid in got:
            assert got[qid].doc_ids() == baseline[qid].doc_ids()

    def test_help_exits_zero(self):
        assert main(["--help"]) == 0
        assert main(["rerank", "--help"]) == 0

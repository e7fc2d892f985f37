"""Live interop: the retrieval toolkit's CLI re-ranks through this service.

Exercises the real HTTP transport end to end. Skipped when the toolkit's
``injectrank`` binary is not on PATH.
"""

import shutil
import socket
import subprocess
import threading
import time

import pytest
import uvicorn

from cescorer.app import create_app
from cescorer.model import CrossEncoderScorer, ServiceConfig

pytestmark = pytest.mark.skipif(shutil.which("injectrank") is None,
                                reason="injectrank CLI not installed")


def _free_port() -> int:
    with socket.socket() as sock:
        sock.bind(("127.0.0.1", 0))
        return sock.getsockname()[1]


@pytest.fixture()
def live_server(tiny_model_dir):
    scorer = CrossEncoderScorer(ServiceConfig(model=tiny_model_dir, mode="injected"))
    port = _free_port()
    config = uvicorn.Config(create_app(scorer), host="127.0.0.1", port=port,
                            log_level="error")
    server = uvicorn.Server(config)
    thread = threading.Thread(target=server.run, daemon=True)
    thread.start()
    deadline = time.monotonic() + 15
    while not server.started:
        if time.monotonic() > deadline:
            raise RuntimeError("server did not start")
        time.sleep(0.05)
    yield f"http://127.0.0.1:{port}/score"
    server.should_exit = True
    thread.join(timeout=10)


def test_toolkit_rerank_through_live_service(live_server, tmp_path):
    (tmp_path / "collection.tsv").write_text(
        "p1\tthe shingles vaccine is an injection\n"
        "p2\tthe flu jab is offered in autumn\n"
        "p3\tshingles causes a painful rash\n",
        encoding="utf-8")
    (tmp_path / "queries.tsv").write_text("q1\twhat is the shingles jab\n",
                                          encoding="utf-8")

    def run(*args):
        return subprocess.run(["injectrank", *args], cwd=tmp_path,
                              capture_output=True, text=True)

    assert run("index", "collection.tsv", "toy.idx").returncode == 0
    assert run("retrieve", "toy.idx", "queries.tsv", "bm25.run").returncode == 0
    reranked = run("rerank", "toy.idx", "bm25.run", "queries.tsv", "ce.run",
                   "--inject", "--scorer", live_server)
    assert reranked.returncode == 0, reranked.stderr
    lines = (tmp_path / "ce.run").read_text(encoding="utf-8").splitlines()
    assert len(lines) == 3
    assert all(line.split()[-1] == "ce_bm25cat" for line in lines)
    # deterministic service: a second pass produces the identical run file
    assert run("rerank", "toy.idx", "bm25.run", "queries.tsv", "ce2.run",
               "--inject", "--scorer", live_server).returncode == 0
    assert (tmp_path / "ce.run").read_bytes() == (tmp_path / "ce2.run").read_bytes()

"""Transports for external scorers.

Wire protocol: request ``{"pairs": [{"id", "query", "score_token", "passage"}…]}``,
reply ``{"scores": [{"id", "score"}…]}``. Over HTTP that is POST /score with
status 200; any other status is a transport error. The same message schema
also runs over a subprocess's stdin/stdout, one JSON object per line.
"""

from __future__ import annotations

import json
import math
import shlex
import subprocess
from typing import Sequence

import requests

from .errors import TransportError
from .pipeline import ScorerInput, SyntheticScorer


def encode_request(inputs: Sequence[ScorerInput]) -> dict:
    return {
        "pairs": [
            {
                "id": inp.pair_id,
                "query": inp.query_text,
                "score_token": inp.score_token,
                "passage": inp.passage_text,
            }
            for inp in inputs
        ]
    }


def decode_response(payload, expected_ids: Sequence[str]) -> dict[str, float]:
    """Validate a reply and key it by pair id; anything malformed is a transport error."""
    ids = tuple(expected_ids)
    try:
        entries = payload["scores"]
        scores = {entry["id"]: float(entry["score"]) for entry in entries}
    except (TypeError, KeyError, ValueError) as exc:
        raise TransportError(f"malformed scorer reply: {exc}", ids) from exc
    bad = [i for i, s in scores.items() if not math.isfinite(s)]
    if bad:
        raise TransportError(f"non-finite scores for {len(bad)} pair(s)", tuple(bad))
    missing = [i for i in ids if i not in scores]
    if missing:
        raise TransportError(
            f"scorer reply is missing {len(missing)} pair(s)", tuple(missing)
        )
    return scores


class HttpScorer:
    """POSTs batches to a /score endpoint."""

    kind = "external"

    def __init__(self, endpoint: str, batch_size: int = 32, timeout: float = 60.0):
        self.endpoint = endpoint
        self.batch_size = batch_size
        self.timeout = timeout
        self._session = requests.Session()

    def score_batch(self, inputs: Sequence[ScorerInput]) -> dict[str, float]:
        ids = [inp.pair_id for inp in inputs]
        try:
            reply = self._session.post(
                self.endpoint, json=encode_request(inputs), timeout=self.timeout
            )
        except requests.RequestException as exc:
            raise TransportError(f"scorer unreachable: {exc}", tuple(ids)) from exc
        if reply.status_code != 200:
            raise TransportError(
                f"scorer returned HTTP {reply.status_code}", tuple(ids)
            )
        try:
            payload = reply.json()
        except ValueError as exc:
            raise TransportError("scorer reply is not JSON", tuple(ids)) from exc
        return decode_response(payload, ids)

    def close(self) -> None:
        self._session.close()


class StdioScorer:
    """Drives a scorer subprocess, one JSON object per line in each direction."""

    kind = "external"

    def __init__(self, command: str, batch_size: int = 32):
        self.command = command
        self.batch_size = batch_size
        self._proc: subprocess.Popen | None = None

    def _process(self) -> subprocess.Popen:
        if self._proc is None or self._proc.poll() is not None:
            self._proc = subprocess.Popen(
                shlex.split(self.command),
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                text=True,
            )
        return self._proc

    def score_batch(self, inputs: Sequence[ScorerInput]) -> dict[str, float]:
        ids = tuple(inp.pair_id for inp in inputs)
        try:
            proc = self._process()
            proc.stdin.write(json.dumps(encode_request(inputs)) + "\n")
            proc.stdin.flush()
            line = proc.stdout.readline()
        except (OSError, ValueError) as exc:
            raise TransportError(f"scorer process failed: {exc}", ids) from exc
        if not line:
            raise TransportError("scorer process closed its output", ids)
        try:
            payload = json.loads(line)
        except json.JSONDecodeError as exc:
            raise TransportError("scorer reply is not JSON", ids) from exc
        return decode_response(payload, ids)

    def close(self) -> None:
        if self._proc is not None and self._proc.poll() is None:
            self._proc.stdin.close()
            self._proc.wait(timeout=10)
        self._proc = None


def make_scorer(spec: str, batch_size: int = 32):
    """Build a scorer from a CLI-style spec.

    ``synthetic`` | ``http:<url>`` (or a bare http(s) URL) | ``stdio:<command>``.
    """
    if spec == "synthetic":
        return SyntheticScorer(batch_size=batch_size)
    if spec.startswith("stdio:"):
        return StdioScorer(spec[len("stdio:"):], batch_size=batch_size)
    if spec.startswith(("http://", "https://")):
        return HttpScorer(spec, batch_size=batch_size)
    if spec.startswith("http:"):
        return HttpScorer(spec[len("http:"):], batch_size=batch_size)
    raise ValueError(f"unknown scorer spec {spec!r}")

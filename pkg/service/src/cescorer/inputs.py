"""Sequence composition for plain and score-injected scoring.

The logical input is always ``[CLS] query [SEP] score [SEP] passage [SEP]``
when a score token is injected. Tokenizers assign segment ids to the two
text arguments, so the ``score_segment`` option controls whether the score
token rides in the query segment ("a") or the passage segment ("b", the
default); the token stream is identical either way.
"""

from __future__ import annotations

MODES = ("plain", "injected")
SCORE_SEGMENTS = ("a", "b")


def compose_pair(query: str, score_token: str | None, passage: str,
                 mode: str, score_segment: str, sep_token: str) -> tuple[str, str]:
    """Return the (text_a, text_b) pair handed to the tokenizer."""
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}")
    if score_segment not in SCORE_SEGMENTS:
        raise ValueError(f"unknown score segment {score_segment!r}")
    if mode == "plain" or score_token is None:
        return query, passage
    if score_segment == "b":
        return query, f"{score_token} {sep_token} {passage}"
    return f"{query} {sep_token} {score_token}", passage

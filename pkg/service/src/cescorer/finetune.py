"""Fine-tuning for the relevance head.

Training follows the standard recipe for this re-ranking setup: Adam at a
7e-6 learning rate over all layers, batches of 32, cross-entropy loss over
the two-class head, and early stopping on the validation set's nDCG@10
with the best-scoring checkpoint kept.

File formats (TSV, UTF-8):
  train:      query <TAB> score_token <TAB> passage <TAB> label(0|1)
              (empty score_token column = no injection for that pair)
  validation: qid <TAB> query <TAB> score_token <TAB> doc_id <TAB> passage
  qrels:      qid iter docid grade (whitespace separated)
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import torch
from transformers import AutoModelForSequenceClassification, AutoTokenizer

from .inputs import compose_pair
from .metrics import mean_ndcg_at_10

TrainPair = tuple[str, str | None, str, int]          # query, token, passage, label
ValCandidate = tuple[str, str, str | None, str, str]  # qid, query, token, docid, passage


@dataclass
class TrainConfig:
    base_model: str
    output_dir: str
    learning_rate: float = 7e-6
    batch_size: int = 32
    max_epochs: int = 20
    patience: int = 3
    max_length: int = 256
    mode: str = "injected"       # plain | injected
    score_segment: str = "b"
    device: str = "cpu"
    seed: int = 42


@dataclass
class EpochLog:
    epoch: int
    train_loss: float
    val_ndcg10: float
    improved: bool


@dataclass
class TrainResult:
    checkpoint_dir: str
    best_ndcg10: float
    best_epoch: int
    stopped_epoch: int
    early_stopped: bool
    log: list[EpochLog] = field(default_factory=list)


def load_train_pairs(path: str) -> list[TrainPair]:
    pairs: list[TrainPair] = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 4:
                raise ValueError(f"{path}:{lineno}: expected 4 TAB fields, got {len(parts)}")
            query, token, passage, label = parts
            pairs.append((query, token or None, passage, int(label)))
    return pairs


def load_validation(path: str) -> list[ValCandidate]:
    rows: list[ValCandidate] = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 5:
                raise ValueError(f"{path}:{lineno}: expected 5 TAB fields, got {len(parts)}")
            qid, query, token, doc_id, passage = parts
            rows.append((qid, query, token or None, doc_id, passage))
    return rows


def _validation_metric(model, tokenizer, cfg: TrainConfig,
                       validation: list[ValCandidate],
                       qrels: dict[str, dict[str, int]]) -> float:
    model.eval()
    by_query: dict[str, list[tuple[str, float]]] = {}
    with torch.no_grad():
        for lo in range(0, len(validation), cfg.batch_size):
            batch = validation[lo:lo + cfg.batch_size]
            texts_a, texts_b = [], []
            for _, query, token, _, passage in batch:
                a, b = compose_pair(query, token, passage, cfg.mode,
                                    cfg.score_segment, tokenizer.sep_token)
                texts_a.append(a)
                texts_b.append(b)
            encoded = tokenizer(texts_a, texts_b, padding=True, truncation=True,
                                max_length=cfg.max_length, return_tensors="pt")
            encoded = encoded.to(cfg.device)
            probs = torch.softmax(model(**encoded).logits, dim=-1)[:, 1]
            for (qid, _, _, doc_id, _), p in zip(batch, probs):
                by_query.setdefault(qid, []).append((doc_id, float(p)))
    rankings = {
        qid: [d for d, _ in sorted(pairs, key=lambda e: (-e[1], e[0]))]
        for qid, pairs in by_query.items()
    }
    model.train()
    return mean_ndcg_at_10(rankings, qrels)


def finetune(train_pairs: list[TrainPair], validation: list[ValCandidate],
             qrels: dict[str, dict[str, int]], cfg: TrainConfig) -> TrainResult:
    if not train_pairs:
        raise ValueError("no training pairs")
    if not validation:
        raise ValueError("no validation candidates")

    torch.manual_seed(cfg.seed)
    tokenizer = AutoTokenizer.from_pretrained(cfg.base_model)
    model = AutoModelForSequenceClassification.from_pretrained(cfg.base_model)
    model.to(cfg.device)
    model.train()
    optimizer = torch.optim.Adam(model.parameters(), lr=cfg.learning_rate)

    os.makedirs(cfg.output_dir, exist_ok=True)
    generator = torch.Generator().manual_seed(cfg.seed)
    best = float("-inf")
    best_epoch = 0
    waited = 0
    early_stopped = False
    log: list[EpochLog] = []
    stopped_epoch = 0

    for epoch in range(1, cfg.max_epochs + 1):
        order = torch.randperm(len(train_pairs), generator=generator).tolist()
        total_loss = 0.0
        batches = 0
        for lo in range(0, len(order), cfg.batch_size):
            batch = [train_pairs[i] for i in order[lo:lo + cfg.batch_size]]
            texts_a, texts_b, labels = [], [], []
            for query, token, passage, label in batch:
                a, b = compose_pair(query, token, passage, cfg.mode,
                                    cfg.score_segment, tokenizer.sep_token)
                texts_a.append(a)
                texts_b.append(b)
                labels.append(label)
            encoded = tokenizer(texts_a, texts_b, padding=True, truncation=True,
                                max_length=cfg.max_length, return_tensors="pt")
            encoded = encoded.to(cfg.device)
            target = torch.tensor(labels, dtype=torch.long, device=cfg.device)
            # the two-class head computes cross-entropy against the labels
            loss = model(**encoded, labels=target).loss
            optimizer.zero_grad()
            loss.backward()
            optimizer.step()
            total_loss += float(loss.detach())
            batches += 1

        val_metric = _validation_metric(model, tokenizer, cfg, validation, qrels)
        improved = val_metric > best
        log.append(EpochLog(epoch=epoch, train_loss=total_loss / max(1, batches),
                            val_ndcg10=val_metric, improved=improved))
        stopped_epoch = epoch
        if improved:
            best = val_metric
            best_epoch = epoch
            waited = 0
            model.save_pretrained(cfg.output_dir)
            tokenizer.save_pretrained(cfg.output_dir)
        else:
            waited += 1
            if waited >= cfg.patience:
                early_stopped = True
                break

    _write_log(cfg.output_dir, log)
    return TrainResult(checkpoint_dir=cfg.output_dir, best_ndcg10=best,
                       best_epoch=best_epoch, stopped_epoch=stopped_epoch,
                       early_stopped=early_stopped, log=log)


def _write_log(output_dir: str, log: list[EpochLog]) -> None:
    path = os.path.join(output_dir, "train_log.tsv")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("epoch\ttrain_loss\tval_ndcg10\timproved\n")
        for row in log:
            fh.write(f"{row.epoch}\t{row.train_loss:.6f}\t{row.val_ndcg10:.6f}\t"
                     f"{int(row.improved)}\n")

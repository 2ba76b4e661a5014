"""Self-Instruct style augmentation with ROUGE-L deduplication.

Each iteration samples 8 distinct demonstrations from the pool, asks the
generator for one new record, and keeps it only if its best ROUGE-L F1 against
every pooled record stays below the threshold. Iterations are counted whether
or not they yield an accepted record.
"""

from __future__ import annotations

import json
import logging
import random
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .dataset_io import VqaRecord, read_vqa_jsonl, write_jsonl
from .errors import ConfigError, ContentError, InputError, TransportError
from .metrics import Vocabulary, rouge_l_scan, tokenize

log = logging.getLogger(__name__)

N_DEMOS = 8
DEFAULT_THRESHOLD = 0.70
CHECKPOINT_EVERY = 100
MODES = ("online", "batch_filter")


def canonicalize(record: VqaRecord) -> str:
    return f"question: {record.question}\nanswer: {record.answer}\ndescription: {record.description}"


@dataclass
class AugmentStats:
    iterations: int = 0
    accepted: int = 0
    rejected_duplicate: int = 0
    rejected_invalid: int = 0

    def balanced(self) -> bool:
        return self.accepted + self.rejected_duplicate + self.rejected_invalid == self.iterations


@dataclass(frozen=True)
class DedupResult:
    accepted: bool
    max_score: float
    argmax_index: int  # -1 for an empty pool


class AugmentationPool:
    """Ordered records with their canonical strings and token ids for fast scans."""

    def __init__(self, records=(), stats: AugmentStats | None = None):
        self.records: list[VqaRecord] = []
        self.canonical_texts: list[str] = []
        self.stats = stats or AugmentStats()
        self._vocab = Vocabulary()
        self._flat = np.zeros(1024, dtype=np.int64)
        self._offsets = [0]
        for r in records:
            self.add(r)

    def __len__(self):
        return len(self.records)

    @property
    def ids(self) -> set[str]:
        return {r.id for r in self.records}

    def encode(self, canonical: str) -> np.ndarray:
        return self._vocab.encode(tokenize(canonical))

    def add(self, record: VqaRecord, canonical: str | None = None) -> None:
        canonical = canonical if canonical is not None else canonicalize(record)
        toks = self.encode(canonical)
        end = self._offsets[-1] + len(toks)
        if end > len(self._flat):
            grown = np.zeros(max(end, 2 * len(self._flat)), dtype=np.int64)
            grown[:self._offsets[-1]] = self._flat[:self._offsets[-1]]
            self._flat = grown
        self._flat[self._offsets[-1]:end] = toks
        self._offsets.append(end)
        self.records.append(record)
        self.canonical_texts.append(canonical)

    def scores(self, canonical: str, upto: int | None = None) -> np.ndarray:
        """ROUGE-L F1 of ``canonical`` against the first ``upto`` pooled records."""
        n = len(self.records) if upto is None else upto
        offsets = np.asarray(self._offsets[:n + 1], dtype=np.int64)
        return rouge_l_scan(self.encode(canonical), self._flat[:offsets[-1]], offsets)


def dedup_check(candidate: str, pool: AugmentationPool, threshold: float = DEFAULT_THRESHOLD,
                upto: int | None = None) -> DedupResult:
    """Reject iff the best ROUGE-L F1 against the pool is >= ``threshold``."""
    if not 0 < threshold <= 1:
        raise ConfigError(f"threshold must be in (0, 1], got {threshold}")
    scores = pool.scores(candidate, upto)
    if scores.size == 0:
        return DedupResult(True, 0.0, -1)
    i = int(np.argmax(scores))
    best = float(scores[i])
    return DedupResult(best < threshold, best, i)


def verify_pool(pool: AugmentationPool, threshold: float) -> list[int]:
    """Replay dedup in insertion order; return indices of generated records that violate it."""
    bad = []
    for i, (rec, canon) in enumerate(zip(pool.records, pool.canonical_texts)):
        if rec.provenance != "generated":
            continue
        if not dedup_check(canon, pool, threshold, upto=i).accepted:
            bad.append(i)
    return bad


# --------------------------------------------------------------------------
# checkpoints
# --------------------------------------------------------------------------


def _snapshot_row(record: VqaRecord, canonical: str) -> dict:
    row = record.to_json()
    row["canonical"] = canonical
    return row


def _rng_state_to_json(state):
    version, internal, gauss = state
    return [version, list(internal), gauss]


def _rng_state_from_json(data):
    version, internal, gauss = data
    return (version, tuple(internal), gauss)


@dataclass
class _LoopState:
    iteration: int
    rng_state: list
    threshold: float
    mode: str
    rng_seed: int
    stats: dict = field(default_factory=dict)


def write_checkpoint(directory, pool: AugmentationPool, pending, state: _LoopState) -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    write_jsonl((_snapshot_row(r, c) for r, c in zip(pool.records, pool.canonical_texts)),
                directory / "pool.jsonl")
    write_jsonl((_snapshot_row(r, canonicalize(r)) for r in pending), directory / "pending.jsonl")
    state.stats = asdict(pool.stats)
    tmp = directory / "state.json.tmp"
    tmp.write_text(json.dumps(asdict(state)), encoding="utf-8")
    tmp.replace(directory / "state.json")


def load_checkpoint(directory):
    directory = Path(directory)
    try:
        state = _LoopState(**json.loads((directory / "state.json").read_text(encoding="utf-8")))
    except FileNotFoundError:
        raise InputError(f"no checkpoint in {directory}") from None
    records = read_vqa_jsonl(directory / "pool.jsonl")
    pool = AugmentationPool(stats=AugmentStats(**state.stats))
    for r in records:
        canonical = r.extra.pop("canonical", None)
        pool.add(r, canonical)
    pending = read_vqa_jsonl(directory / "pending.jsonl") if (directory / "pending.jsonl").exists() else []
    for r in pending:
        r.extra.pop("canonical", None)
    return pool, pending, state


# --------------------------------------------------------------------------
# the loop
# --------------------------------------------------------------------------


def _fresh_id(iteration: int, taken: set[str]) -> str:
    base = f"gen-{iteration:06d}"
    rid, k = base, 1
    while rid in taken:
        rid = f"{base}-{k}"
        k += 1
    return rid


def run_self_instruct(seed_pool, n_iterations: int, threshold: float = DEFAULT_THRESHOLD, *,
                      generator, rng_seed: int = 0, mode: str = "online",
                      checkpoint_dir=None, checkpoint_every: int = CHECKPOINT_EVERY,
                      resume: bool = False) -> AugmentationPool:
    """Grow ``seed_pool`` by ``n_iterations`` generator calls.

    ``generator(demos)`` returns a candidate ``VqaRecord``; ``ContentError``
    (including ``IterationFailed``) and ``TransportError`` count as invalid
    iterations and the loop carries on.

    ``mode="online"`` deduplicates each candidate as it arrives and samples
    demos from the deduplicated pool. ``mode="batch_filter"`` adds every valid
    candidate to the demo pool unfiltered and deduplicates once at the end, in
    generation order, against the seeds and previously kept candidates.
    """
    if mode not in MODES:
        raise ConfigError(f"mode must be one of {MODES}, got {mode!r}")
    if not 0 < threshold <= 1:
        raise ConfigError(f"threshold must be in (0, 1], got {threshold}")
    if n_iterations < 0:
        raise ConfigError("n_iterations must be >= 0")

    rng = random.Random(rng_seed)
    pending: list[VqaRecord] = []
    start = 0
    if resume and checkpoint_dir and (Path(checkpoint_dir) / "state.json").exists():
        pool, pending, state = load_checkpoint(checkpoint_dir)
        if (state.threshold, state.mode, state.rng_seed) != (threshold, mode, rng_seed):
            raise ConfigError(
                f"checkpoint was written with threshold={state.threshold}, mode={state.mode}, "
                f"seed={state.rng_seed}; refusing to resume with different settings")
        rng.setstate(_rng_state_from_json(state.rng_state))
        start = state.iteration
        log.info("resumed", extra={"iteration": start, "pool": len(pool)})
    else:
        seeds = list(seed_pool)
        if len(seeds) < N_DEMOS:
            raise ConfigError(f"need at least {N_DEMOS} seed records, got {len(seeds)}")
        pool = AugmentationPool(seeds)
    stats = pool.stats
    taken = pool.ids | {r.id for r in pending}

    def demo_source():
        return pool.records + pending if mode == "batch_filter" else pool.records

    def checkpoint(iteration):
        if checkpoint_dir:
            write_checkpoint(checkpoint_dir, pool, pending,
                             _LoopState(iteration, _rng_state_to_json(rng.getstate()), threshold,
                                        mode, rng_seed))

    for it in range(start, n_iterations):
        source = demo_source()
        demos = [source[i] for i in rng.sample(range(len(source)), N_DEMOS)]
        stats.iterations += 1
        try:
            cand = generator(demos)
        except (ContentError, TransportError) as exc:
            stats.rejected_invalid += 1
            log.debug("invalid iteration", extra={"iteration": it, "error": str(exc)})
        else:
            cand.provenance = "generated"
            if not cand.id or cand.id in taken:
                cand.id = _fresh_id(it, taken)
            taken.add(cand.id)
            if mode == "online":
                canon = canonicalize(cand)
                res = dedup_check(canon, pool, threshold)
                if res.accepted:
                    pool.add(cand, canon)
                    stats.accepted += 1
                else:
                    stats.rejected_duplicate += 1
            else:
                pending.append(cand)
        done = it + 1
        if checkpoint_every and done % checkpoint_every == 0:
            checkpoint(done)
            log.info("augment progress", extra={"iteration": done, **asdict(stats)})

    if mode == "batch_filter":
        for cand in pending:
            canon = canonicalize(cand)
            if dedup_check(canon, pool, threshold).accepted:
                pool.add(cand, canon)
                stats.accepted += 1
            else:
                stats.rejected_duplicate += 1
        pending = []
    checkpoint(max(n_iterations, start))
    return pool

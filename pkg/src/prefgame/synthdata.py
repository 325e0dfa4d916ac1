"""Synthetic pairwise-preference structures built from annotated candidates.

Each candidate carries integer annotations on four dimensions (values 1-10,
drawn uniformly with rejection until the required strict pattern holds).
Two structures are generated:

- *cyclic*: candidates A, B, C where A beats B on dimension 0, B beats C
  on dimension 1 and C beats A on dimension 2: a directed 3-cycle that no
  scalar ranking can satisfy in full;
- *dominant + cycle*: the cycle plus a candidate D strictly greater than
  A, B and C on every deciding dimension, adding the three pairs D>A, D>B,
  D>C (six pairs total).  A scalar ranking can satisfy the dominance pairs
  and at most two of the three cycle pairs, capping scalar accuracy at 5/6.

Deciding dimension k decides pair k; the fourth dimension is drawn but
never decides anything.  Because annotations are integers and inequalities
are strict, no ties enter the pair sets.  Generation is deterministic per
seed, and instances convert to tabular training records with item ids
namespaced per prompt.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, GenerationError
from .models import PairDataset, PairRecord

N_DIMS = 4
SCORE_LO, SCORE_HI = 1, 10
#: Dimension k decides pair k (for dominance pairs: pair D>X_k uses dimension k).
DECIDING_DIMS = (0, 1, 2)

MAX_REJECTIONS = 10**6

CYCLE_IDS = ("A", "B", "C")
DOMINANT_ID = "D"


@dataclass(frozen=True)
class AnnotatedCandidate:
    cid: str
    scores: tuple

    def __post_init__(self):
        scores = tuple(int(x) for x in self.scores)
        if len(scores) != N_DIMS:
            raise DomainError(f"candidate needs exactly {N_DIMS} annotation dimensions")
        if any(not SCORE_LO <= x <= SCORE_HI for x in scores):
            raise DomainError(f"annotations must lie in [{SCORE_LO}, {SCORE_HI}]")
        object.__setattr__(self, "scores", scores)


@dataclass(frozen=True)
class SyntheticInstance:
    """One prompt's candidates and its decided preference pairs.

    ``pairs`` holds (winner id, loser id, deciding dimension) triples.
    """

    prompt: str
    candidates: tuple
    pairs: tuple

    def candidate(self, cid: str) -> AnnotatedCandidate:
        for cand in self.candidates:
            if cand.cid == cid:
                return cand
        raise DomainError(f"unknown candidate id {cid!r} in instance {self.prompt!r}")


def validate_instance(inst: SyntheticInstance):
    """Check the structural postconditions; raises DomainError on violation."""
    ids = [c.cid for c in inst.candidates]
    if len(set(ids)) != len(ids):
        raise DomainError("duplicate candidate ids")
    for win, lose, dim in inst.pairs:
        if dim not in DECIDING_DIMS:
            raise DomainError(f"pair decided by non-selected dimension {dim}")
        w, l = inst.candidate(win), inst.candidate(lose)
        if w.scores[dim] <= l.scores[dim]:
            raise DomainError(
                f"pair {win}>{lose} not strict on dimension {dim}: "
                f"{w.scores[dim]} <= {l.scores[dim]}")
    cycle = [(w, l) for w, l, _ in inst.pairs if w in CYCLE_IDS and l in CYCLE_IDS]
    if sorted(cycle) != sorted([("A", "B"), ("B", "C"), ("C", "A")]):
        raise DomainError("cycle pairs must form the directed 3-cycle A>B, B>C, C>A")
    if len(inst.candidates) == 3:
        if len(inst.pairs) != 3:
            raise DomainError("cyclic instance must have exactly 3 pairs")
    elif len(inst.candidates) == 4:
        dominance = [(w, l) for w, l, _ in inst.pairs if w == DOMINANT_ID]
        if len(inst.pairs) != 6 or sorted(l for _, l in dominance) != list(CYCLE_IDS):
            raise DomainError("dominant instance needs the 3-cycle plus D beating A, B and C")
    else:
        raise DomainError("instance must have 3 or 4 candidates")


def _cycle_ok(scores: np.ndarray) -> bool:
    # rows A, B, C; A>B on dim 0, B>C on dim 1, C>A on dim 2
    return bool(scores[0, 0] > scores[1, 0]
                and scores[1, 1] > scores[2, 1]
                and scores[2, 2] > scores[0, 2])


def _draw_instance(rng: np.random.Generator, prompt: str, dominant: bool) -> SyntheticInstance:
    k = 4 if dominant else 3
    for _ in range(MAX_REJECTIONS):
        scores = rng.integers(SCORE_LO, SCORE_HI + 1, size=(k, N_DIMS))
        if not _cycle_ok(scores):
            continue
        if dominant and not all(
                scores[3, dim] > scores[:3, dim].max() for dim in DECIDING_DIMS):
            continue
        ids = CYCLE_IDS + ((DOMINANT_ID,) if dominant else ())
        candidates = tuple(AnnotatedCandidate(cid, tuple(row)) for cid, row in zip(ids, scores))
        pairs = [("A", "B", 0), ("B", "C", 1), ("C", "A", 2)]
        if dominant:
            pairs += [(DOMINANT_ID, CYCLE_IDS[dim], dim) for dim in DECIDING_DIMS]
        return SyntheticInstance(prompt, candidates, tuple(pairs))
    raise GenerationError(f"no admissible annotation found within {MAX_REJECTIONS} draws")


def gen_cyclic(seed: int, count: int) -> list[SyntheticInstance]:
    """Pure 3-cycle instances; deterministic per seed."""
    if count < 1:
        raise DomainError("count must be at least 1")
    rng = np.random.default_rng(seed)
    return [_draw_instance(rng, f"p{i:05d}", dominant=False) for i in range(count)]


def gen_dominant_cycle(seed: int, count: int) -> list[SyntheticInstance]:
    """3-cycle plus dominant-candidate instances; deterministic per seed."""
    if count < 1:
        raise DomainError("count must be at least 1")
    rng = np.random.default_rng(seed)
    return [_draw_instance(rng, f"p{i:05d}", dominant=True) for i in range(count)]


def item_id(prompt: str, cid: str) -> str:
    return f"{prompt}:{cid}"


def to_pair_dataset(instances) -> PairDataset:
    """One tabular record per pair, winner first, item ids namespaced per prompt."""
    records = []
    for inst in instances:
        validate_instance(inst)
        for win, lose, _ in inst.pairs:
            records.append(PairRecord(inst.prompt, item_id(inst.prompt, win),
                                      item_id(inst.prompt, lose)))
    return PairDataset(records)

"""Trainable pairwise preference models over feature vectors.

Three model kinds share one training objective, the mean of
``-log sigma(score / tau)`` over (context, winner, loser) records:

- ``bt``: clipped scalar reward difference (purely transitive),
  ``clip(w_r . h_w) - clip(w_r . h_l)``;
- ``gpm``: skew-symmetric bilinear form over projected, optionally
  unit-normalized embeddings, modulated by a non-negative context gate,
  ``v_w^T D(x) R D(x) v_l`` with ``R`` the fixed block-diagonal of planar
  rotations and ``D(x)`` the gate diagonal (cycle-capable);
- ``hrc``: the weighted hybrid ``C1 * bt + C2 * gpm``.

Every score is antisymmetric under swapping winner and loser, and positive
score means the first argument is preferred.

Datasets come in two flavours.  *Inline* records carry raw feature
vectors.  *Tabular* records carry string ids; each id owns a free
learnable feature vector which ``fit`` creates (seeded) and trains
alongside the model.  Gradients are analytic throughout and are checked
against central finite differences in the test suite.

Model evaluation is pure; ``fit`` trains a private copy and never mutates
its arguments.  Batch reductions are plain vectorized sums, so results are
deterministic for a given seed.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from .core import as_features
from .errors import (
    DataFormatError,
    DomainError,
    ShapeError,
    TrainingError,
)
from .witnesses import skew_operator

#: Embedding norms below this are treated as this (division guard).
NORM_EPS = 1e-12

#: Default loss temperature.
DEFAULT_TAU = 0.1

#: Default reward clip bound; sigma(10) is within 5e-5 of 1, so the bound
#: guarantees boundedness without binding on realistic data.
DEFAULT_CLIP = 10.0

#: Gate bias making softplus(b) exactly 1 at init.
GATE_BIAS_ONE = float(np.log(np.e - 1.0))


def _softplus(u):
    return np.logaddexp(0.0, u)


# ---------------------------------------------------------------------------
# Model parameter bundles
# ---------------------------------------------------------------------------


@dataclass
class BtModel:
    """Scalar-reward model; the reward is clipped into [-clip, clip]."""

    w_r: np.ndarray
    clip: float | None = DEFAULT_CLIP

    def __post_init__(self):
        self.w_r = np.array(self.w_r, dtype=float)
        if self.w_r.ndim != 1:
            raise ShapeError("reward weights must be a 1-d vector")
        if not np.all(np.isfinite(self.w_r)):
            raise DomainError("reward weights must be finite")
        if self.clip is not None:
            self.clip = float(self.clip)
            if not np.isfinite(self.clip) or self.clip <= 0.0:
                raise DomainError("clip bound must be positive")

    @property
    def m(self) -> int:
        return self.w_r.size

    @property
    def kind(self) -> str:
        return "bt"

    @classmethod
    def init(cls, m: int, rng: np.random.Generator, clip: float | None = DEFAULT_CLIP,
             scale: float = 0.1) -> "BtModel":
        return cls(rng.normal(scale=scale, size=m), clip)

    def copy(self) -> "BtModel":
        return BtModel(self.w_r.copy(), self.clip)


@dataclass
class GpmModel:
    """Gated skew-symmetric bilinear model over ``d`` planar subspaces.

    The skew operator is the fixed block-diagonal of [[0, 1], [-1, 0]]
    blocks; the learnable projection and gates absorb basis and scale, so
    nothing is lost by fixing it.  Gates are ``softplus`` of a linear map
    of the context features: smooth, strictly positive, never dead.
    """

    w_c: np.ndarray     # (2d, m) projection onto the embedding space
    gate_w: np.ndarray  # (d, context_dim)
    gate_b: np.ndarray  # (d,)
    unit_norm: bool = True

    def __post_init__(self):
        self.w_c = np.array(self.w_c, dtype=float)
        self.gate_w = np.array(self.gate_w, dtype=float)
        self.gate_b = np.array(self.gate_b, dtype=float)
        if self.w_c.ndim != 2 or self.w_c.shape[0] % 2 != 0 or self.w_c.shape[0] < 2:
            raise ShapeError("projection must have shape (2d, m) with d >= 1")
        d = self.w_c.shape[0] // 2
        if self.gate_w.ndim != 2 or self.gate_w.shape[0] != d:
            raise ShapeError(f"gate weights must have shape ({d}, context_dim)")
        if self.gate_b.shape != (d,):
            raise ShapeError(f"gate bias must have shape ({d},)")
        for arr in (self.w_c, self.gate_w, self.gate_b):
            if not np.all(np.isfinite(arr)):
                raise DomainError("model parameters must be finite")

    @property
    def d(self) -> int:
        return self.w_c.shape[0] // 2

    @property
    def m(self) -> int:
        return self.w_c.shape[1]

    @property
    def context_dim(self) -> int:
        return self.gate_w.shape[1]

    @property
    def kind(self) -> str:
        return "gpm"

    @property
    def R(self) -> np.ndarray:
        return skew_operator(self.d)

    def gates(self, h_x) -> np.ndarray:
        """Non-negative gate values for one context (length d)."""
        h_x = as_features(h_x, "context features")
        if h_x.size != self.context_dim:
            raise ShapeError(f"context has {h_x.size} features, gate expects {self.context_dim}")
        return _softplus(self.gate_w @ h_x + self.gate_b)

    @classmethod
    def init(cls, d: int, m: int, context_dim: int, rng: np.random.Generator,
             unit_norm: bool = True, scale: float = 0.1) -> "GpmModel":
        return cls(
            rng.normal(scale=scale, size=(2 * d, m)),
            np.zeros((d, context_dim)),
            np.full(d, GATE_BIAS_ONE),
            unit_norm,
        )

    def copy(self) -> "GpmModel":
        return GpmModel(self.w_c.copy(), self.gate_w.copy(), self.gate_b.copy(), self.unit_norm)


@dataclass
class HrcModel:
    """Hybrid of a (mandatorily clipped) scalar reward and a gated bilinear term."""

    bt: BtModel
    gpm: GpmModel
    c1: float = 1.0
    c2: float = 1.0
    tau: float = DEFAULT_TAU

    def __post_init__(self):
        if self.bt.clip is None:
            raise DomainError("the hybrid model requires a clipped reward head")
        if self.bt.m != self.gpm.m:
            raise ShapeError("reward and embedding heads must share the feature length")
        for name, value in (("c1", self.c1), ("c2", self.c2), ("tau", self.tau)):
            if not np.isfinite(value) or value <= 0.0:
                raise DomainError(f"{name} must be positive")

    @property
    def m(self) -> int:
        return self.bt.m

    @property
    def kind(self) -> str:
        return "hrc"

    @classmethod
    def init(cls, d: int, m: int, context_dim: int, rng: np.random.Generator,
             clip: float = DEFAULT_CLIP, c1: float = 1.0, c2: float = 1.0,
             tau: float = DEFAULT_TAU, unit_norm: bool = True, scale: float = 0.1) -> "HrcModel":
        return cls(
            BtModel.init(m, rng, clip, scale),
            GpmModel.init(d, m, context_dim, rng, unit_norm, scale),
            c1, c2, tau,
        )

    def copy(self) -> "HrcModel":
        return HrcModel(self.bt.copy(), self.gpm.copy(), self.c1, self.c2, self.tau)


Model = BtModel | GpmModel | HrcModel


def _needs_context(model: Model) -> bool:
    return not isinstance(model, BtModel)


def default_tau(model: Model) -> float:
    """Loss temperature used when the caller does not override it."""
    return model.tau if isinstance(model, HrcModel) else DEFAULT_TAU


# ---------------------------------------------------------------------------
# Datasets
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PairRecord:
    """One preference observation: context, winner, loser.

    Fields are either all string ids (tabular) or all float vectors
    (inline); the mode is uniform across a dataset.
    """

    ctx: object
    win: object
    lose: object

    @property
    def tabular(self) -> bool:
        return isinstance(self.win, str)


def _validate_record(rec: PairRecord) -> PairRecord:
    if isinstance(rec.win, str):
        if not (isinstance(rec.lose, str) and isinstance(rec.ctx, str)):
            raise DomainError("tabular records need string ids for context, winner and loser")
        if rec.win == rec.lose:
            raise DomainError(f"record has winner == loser ({rec.win!r})")
        return rec
    ctx = as_features(rec.ctx, "context")
    win = as_features(rec.win, "winner")
    lose = as_features(rec.lose, "loser")
    if win.size != lose.size:
        raise ShapeError("winner and loser features must have the same length")
    if np.array_equal(win, lose):
        raise DomainError("record has winner == loser")
    return PairRecord(ctx, win, lose)


class PairDataset:
    """A list of preference records, all tabular or all inline."""

    def __init__(self, records):
        records = [_validate_record(r) for r in records]
        modes = {r.tabular for r in records}
        if len(modes) > 1:
            raise DomainError("dataset mixes tabular and inline records")
        self.records: list[PairRecord] = records
        self.tabular: bool = bool(modes.pop()) if modes else False
        if self.tabular:
            self.item_ids = tuple(dict.fromkeys(
                [r.win for r in records] + [r.lose for r in records]))
            self.ctx_ids = tuple(dict.fromkeys(r.ctx for r in records))
        else:
            self.item_ids = ()
            self.ctx_ids = ()
            sizes = {r.win.size for r in records} | {r.lose.size for r in records}
            if len(sizes) > 1:
                raise ShapeError("inline records disagree on feature length")
            ctx_sizes = {r.ctx.size for r in records}
            if len(ctx_sizes) > 1:
                raise ShapeError("inline records disagree on context length")

    def __len__(self) -> int:
        return len(self.records)

    def filter_ctx(self, ctx_id: str) -> "PairDataset":
        """Sub-dataset of one context (tabular mode)."""
        if not self.tabular:
            raise DomainError("filter_ctx applies to tabular datasets")
        return PairDataset([r for r in self.records if r.ctx == ctx_id])

    def to_jsonl(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            for rec in self.records:
                if rec.tabular:
                    row = {"ctx_id": rec.ctx, "win_id": rec.win, "lose_id": rec.lose}
                else:
                    row = {
                        "context": [float(x) for x in rec.ctx],
                        "winner": [float(x) for x in rec.win],
                        "loser": [float(x) for x in rec.lose],
                    }
                fh.write(json.dumps(row) + "\n")

    @classmethod
    def from_jsonl(cls, path) -> "PairDataset":
        records = []
        with open(path, "r", encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.strip()
                if not line:
                    continue
                try:
                    row = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise DataFormatError(f"{path}: line {lineno}: invalid JSON ({exc.msg} at column {exc.colno})") from exc
                records.append(cls._record_from_row(row, path, lineno))
        return cls(records)

    @staticmethod
    def _record_from_row(row: dict, path, lineno: int) -> PairRecord:
        if "win_id" in row:
            try:
                return PairRecord(row["ctx_id"], row["win_id"], row["lose_id"])
            except KeyError as exc:
                raise DataFormatError(f"{path}: line {lineno}: tabular record missing {exc}") from exc
        try:
            return PairRecord(row["context"], row["winner"], row["loser"])
        except KeyError as exc:
            raise DataFormatError(f"{path}: line {lineno}: record missing key {exc}") from exc


@dataclass
class EmbeddingTable:
    """Free learnable feature vectors, one row per string id."""

    ids: tuple
    vectors: np.ndarray
    _index: dict = field(init=False, repr=False)

    def __post_init__(self):
        self.ids = tuple(self.ids)
        self.vectors = np.array(self.vectors, dtype=float)
        if self.vectors.ndim != 2 or self.vectors.shape[0] != len(self.ids):
            raise ShapeError("need one vector row per id")
        if not np.all(np.isfinite(self.vectors)):
            raise DomainError("embedding table must be finite")
        self._index = {key: row for row, key in enumerate(self.ids)}
        if len(self._index) != len(self.ids):
            raise DomainError("duplicate ids in embedding table")

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    def row(self, key: str) -> int:
        try:
            return self._index[key]
        except KeyError as exc:
            raise DomainError(f"unknown id {key!r}") from exc

    def lookup(self, key: str) -> np.ndarray:
        return self.vectors[self.row(key)]

    def copy(self) -> "EmbeddingTable":
        return EmbeddingTable(self.ids, self.vectors.copy())

    def to_dict(self) -> dict:
        return {"ids": list(self.ids), "vectors": [[float(x) for x in row] for row in self.vectors]}

    @classmethod
    def from_dict(cls, payload: dict) -> "EmbeddingTable":
        try:
            return cls(tuple(payload["ids"]), np.asarray(payload["vectors"], dtype=float))
        except (KeyError, TypeError) as exc:
            raise DataFormatError("embedding table payload needs 'ids' and 'vectors'") from exc


@dataclass
class _Batch:
    """Materialized feature arrays plus table row indices for scatter."""

    hx: np.ndarray | None
    hw: np.ndarray
    hl: np.ndarray
    ix: np.ndarray | None
    iw: np.ndarray | None
    il: np.ndarray | None


def _assemble(dataset: PairDataset, model: Model,
              items: EmbeddingTable | None, contexts: EmbeddingTable | None,
              indices=None) -> _Batch:
    records = dataset.records if indices is None else [dataset.records[i] for i in indices]
    if not records:
        raise DomainError("batch is empty")
    needs_ctx = _needs_context(model)
    if dataset.tabular:
        if items is None:
            raise DomainError("tabular dataset needs an item embedding table")
        iw = np.array([items.row(r.win) for r in records])
        il = np.array([items.row(r.lose) for r in records])
        hx = ix = None
        if needs_ctx:
            if contexts is None:
                raise DomainError("this model needs a context embedding table")
            ix = np.array([contexts.row(r.ctx) for r in records])
            hx = contexts.vectors[ix]
        batch = _Batch(hx, items.vectors[iw], items.vectors[il], ix, iw, il)
    else:
        hw = np.stack([r.win for r in records])
        hl = np.stack([r.lose for r in records])
        hx = np.stack([r.ctx for r in records]) if needs_ctx else None
        batch = _Batch(hx, hw, hl, None, None, None)
    _check_feature_len(model, batch.hw.shape[1])
    if needs_ctx:
        gpm = model if isinstance(model, GpmModel) else model.gpm
        if batch.hx.shape[1] != gpm.context_dim:
            raise ShapeError(
                f"context features have length {batch.hx.shape[1]}, gate expects {gpm.context_dim}")
    return batch


# ---------------------------------------------------------------------------
# Scores and gradients (vectorized kernels)
# ---------------------------------------------------------------------------


def _check_feature_len(model: Model, got: int):
    if got != model.m:
        raise ShapeError(f"features have length {got}, model expects {model.m}")


def _bt_forward(bt: BtModel, hw: np.ndarray, hl: np.ndarray):
    zw = hw @ bt.w_r
    zl = hl @ bt.w_r
    if bt.clip is None:
        rw, rl = zw, zl
        mw = ml = np.ones_like(zw)
    else:
        rw = np.clip(zw, -bt.clip, bt.clip)
        rl = np.clip(zl, -bt.clip, bt.clip)
        mw = (np.abs(zw) < bt.clip).astype(float)
        ml = (np.abs(zl) < bt.clip).astype(float)
    return rw - rl, {"mw": mw, "ml": ml}


def _embed(gpm: GpmModel, h: np.ndarray):
    z = h @ gpm.w_c.T
    if not gpm.unit_norm:
        return z, np.ones(z.shape[0])
    norms = np.maximum(np.linalg.norm(z, axis=1), NORM_EPS)
    return z / norms[:, None], norms


def _gpm_forward(gpm: GpmModel, hx: np.ndarray, hw: np.ndarray, hl: np.ndarray):
    vw, nw = _embed(gpm, hw)
    vl, nl = _embed(gpm, hl)
    u = hx @ gpm.gate_w.T + gpm.gate_b
    lam = _softplus(u)
    g = lam**2
    cross = vw[:, 0::2] * vl[:, 1::2] - vw[:, 1::2] * vl[:, 0::2]
    s = np.sum(g * cross, axis=1)
    return s, {"vw": vw, "vl": vl, "nw": nw, "nl": nl, "u": u, "lam": lam, "g": g, "cross": cross}


def _scores(model: Model, batch: _Batch):
    if isinstance(model, BtModel):
        s, cache = _bt_forward(model, batch.hw, batch.hl)
        return s, {"bt": cache}
    if isinstance(model, GpmModel):
        s, cache = _gpm_forward(model, batch.hx, batch.hw, batch.hl)
        return s, {"gpm": cache}
    s_bt, bt_cache = _bt_forward(model.bt, batch.hw, batch.hl)
    s_gpm, gpm_cache = _gpm_forward(model.gpm, batch.hx, batch.hw, batch.hl)
    s = model.c1 * s_bt + model.c2 * s_gpm
    return s, {"bt": bt_cache, "gpm": gpm_cache, "s_bt": s_bt, "s_gpm": s_gpm}


def _bt_backward(bt: BtModel, batch: _Batch, cache, wgt: np.ndarray, grads: dict):
    ww = wgt * cache["mw"]
    wl = wgt * cache["ml"]
    grads["w_r"] = grads.get("w_r", 0.0) + (ww @ batch.hw - wl @ batch.hl)
    if batch.iw is not None:
        gi = grads["items"]
        np.add.at(gi, batch.iw, ww[:, None] * bt.w_r)
        np.add.at(gi, batch.il, -wl[:, None] * bt.w_r)


def _gpm_backward(gpm: GpmModel, batch: _Batch, cache, wgt: np.ndarray, grads: dict):
    vw, vl, g = cache["vw"], cache["vl"], cache["g"]
    # ds/dv through the gated skew operator
    dvw = np.empty_like(vw)
    dvl = np.empty_like(vl)
    dvw[:, 0::2] = g * vl[:, 1::2]
    dvw[:, 1::2] = -g * vl[:, 0::2]
    dvl[:, 0::2] = -g * vw[:, 1::2]
    dvl[:, 1::2] = g * vw[:, 0::2]
    if gpm.unit_norm:
        dzw = (dvw - np.sum(dvw * vw, axis=1, keepdims=True) * vw) / cache["nw"][:, None]
        dzl = (dvl - np.sum(dvl * vl, axis=1, keepdims=True) * vl) / cache["nl"][:, None]
    else:
        dzw, dzl = dvw, dvl
    wzw = wgt[:, None] * dzw
    wzl = wgt[:, None] * dzl
    grads["w_c"] = grads.get("w_c", 0.0) + (wzw.T @ batch.hw + wzl.T @ batch.hl)
    # gates: s = sum_l lam_l^2 cross_l, lam = softplus(u)
    du = wgt[:, None] * (2.0 * cache["lam"] * cache["cross"] * expit(cache["u"]))
    grads["gate_w"] = grads.get("gate_w", 0.0) + du.T @ batch.hx
    grads["gate_b"] = grads.get("gate_b", 0.0) + du.sum(axis=0)
    if batch.iw is not None:
        gi = grads["items"]
        np.add.at(gi, batch.iw, wzw @ gpm.w_c)
        np.add.at(gi, batch.il, wzl @ gpm.w_c)
        if batch.ix is not None:
            np.add.at(grads["contexts"], batch.ix, du @ gpm.gate_w)


def _grads(model: Model, batch: _Batch, wgt: np.ndarray, cache,
           items: EmbeddingTable | None, contexts: EmbeddingTable | None) -> dict:
    grads: dict = {}
    if batch.iw is not None:
        grads["items"] = np.zeros_like(items.vectors)
        if batch.ix is not None:
            grads["contexts"] = np.zeros_like(contexts.vectors)
    if isinstance(model, BtModel):
        _bt_backward(model, batch, cache["bt"], wgt, grads)
    elif isinstance(model, GpmModel):
        _gpm_backward(model, batch, cache["gpm"], wgt, grads)
    else:
        _bt_backward(model.bt, batch, cache["bt"], wgt * model.c1, grads)
        _gpm_backward(model.gpm, batch, cache["gpm"], wgt * model.c2, grads)
        grads["c1"] = float(wgt @ cache["s_bt"])
        grads["c2"] = float(wgt @ cache["s_gpm"])
    return grads


# ---------------------------------------------------------------------------
# Public scoring operations
# ---------------------------------------------------------------------------


def bt_score(model: BtModel, h_w, h_l) -> float:
    """Clipped reward difference; antisymmetric under swapping the arguments."""
    h_w = as_features(h_w, "winner")
    h_l = as_features(h_l, "loser")
    _check_feature_len(model, h_w.size)
    _check_feature_len(model, h_l.size)
    s, _ = _bt_forward(model, h_w[None, :], h_l[None, :])
    return float(s[0])


def gpm_score(model: GpmModel, h_x, h_w, h_l) -> float:
    """Gated bilinear score; antisymmetric because the gated operator is skew."""
    h_x = as_features(h_x, "context")
    h_w = as_features(h_w, "winner")
    h_l = as_features(h_l, "loser")
    _check_feature_len(model, h_w.size)
    _check_feature_len(model, h_l.size)
    if h_x.size != model.context_dim:
        raise ShapeError(f"context has length {h_x.size}, model expects {model.context_dim}")
    s, _ = _gpm_forward(model, h_x[None, :], h_w[None, :], h_l[None, :])
    return float(s[0])


def hrc_score(model: HrcModel, h_x, h_w, h_l) -> float:
    """Weighted sum of the reward and bilinear heads."""
    return model.c1 * bt_score(model.bt, h_w, h_l) + model.c2 * gpm_score(model.gpm, h_x, h_w, h_l)


def score_records(model: Model, dataset: PairDataset,
                  items: EmbeddingTable | None = None,
                  contexts: EmbeddingTable | None = None) -> np.ndarray:
    """Scores of every record's (winner, loser) pair, in record order."""
    if len(dataset) == 0:
        raise DomainError("dataset is empty")
    batch = _assemble(dataset, model, items, contexts)
    s, _ = _scores(model, batch)
    return s


# ---------------------------------------------------------------------------
# Loss, gradients, accuracy
# ---------------------------------------------------------------------------


def _loss_from_scores(s: np.ndarray, tau: float) -> float:
    return float(np.mean(np.logaddexp(0.0, -s / tau)))


def pair_loss(model: Model, dataset: PairDataset, tau: float | None = None,
              items: EmbeddingTable | None = None,
              contexts: EmbeddingTable | None = None) -> float:
    """Mean ``-log sigma(score / tau)`` over the records."""
    tau = default_tau(model) if tau is None else float(tau)
    if tau <= 0.0:
        raise DomainError("temperature must be positive")
    return _loss_from_scores(score_records(model, dataset, items, contexts), tau)


def pair_loss_grad(model: Model, dataset: PairDataset, tau: float | None = None,
                   items: EmbeddingTable | None = None,
                   contexts: EmbeddingTable | None = None) -> dict:
    """Analytic gradient of ``pair_loss`` for every trainable parameter.

    Keys (present subset): ``w_r``, ``w_c``, ``gate_w``, ``gate_b``,
    ``c1``, ``c2``, ``items``, ``contexts``; shapes match the parameters.
    """
    tau = default_tau(model) if tau is None else float(tau)
    if tau <= 0.0:
        raise DomainError("temperature must be positive")
    if len(dataset) == 0:
        raise DomainError("dataset is empty")
    batch = _assemble(dataset, model, items, contexts)
    s, cache = _scores(model, batch)
    # d/ds of mean -log sigma(s/tau)
    wgt = -expit(-s / tau) / (tau * len(s))
    return _grads(model, batch, wgt, cache, items, contexts)


def eval_accuracy(model: Model, dataset: PairDataset,
                  items: EmbeddingTable | None = None,
                  contexts: EmbeddingTable | None = None) -> float:
    """Fraction of records scored strictly positive; ties count as wrong."""
    s = score_records(model, dataset, items, contexts)
    return float(np.mean(s > 0.0))


# ---------------------------------------------------------------------------
# Training
# ---------------------------------------------------------------------------


@dataclass
class FitConfig:
    learning_rate: float = 0.5
    epochs: int = 300
    batch_size: int | None = None  # None = full batch
    seed: int = 0
    tau: float | None = None       # None = model default
    feature_dim: int = 8           # tabular item embedding length
    context_dim: int = 4           # tabular context embedding length
    init_scale: float = 0.1
    train_weights: bool = False    # also update the hybrid's c1/c2


@dataclass
class FitResult:
    """Trained model plus (for tabular data) the trained embedding tables.

    ``mean_embedding`` is the empirical mean of the normalized embeddings
    over every winner/loser occurrence: a diagnostic for how far the
    cyclic head drifts from zero-mean, reported but never asserted.
    """

    model: Model
    items: EmbeddingTable | None
    contexts: EmbeddingTable | None
    loss_history: list
    accuracy_history: list
    mean_embedding: np.ndarray | None


def fit(model: Model, dataset: PairDataset, config: FitConfig = FitConfig()) -> FitResult:
    """Plain gradient descent on the pairwise loss; deterministic given the seed."""
    if len(dataset) == 0:
        raise DomainError("dataset is empty")
    if config.learning_rate <= 0.0:
        raise DomainError("learning rate must be positive")
    if config.epochs < 1:
        raise DomainError("need at least one epoch")
    tau = default_tau(model) if config.tau is None else float(config.tau)
    if tau <= 0.0:
        raise DomainError("temperature must be positive")

    model = model.copy()
    rng = np.random.default_rng(config.seed)

    items = contexts = None
    if dataset.tabular:
        if model.m != config.feature_dim:
            raise ShapeError(
                f"model feature length {model.m} != configured tabular feature_dim {config.feature_dim}")
        items = EmbeddingTable(
            dataset.item_ids,
            rng.normal(scale=config.init_scale, size=(len(dataset.item_ids), config.feature_dim)))
        if _needs_context(model):
            gpm = model if isinstance(model, GpmModel) else model.gpm
            if gpm.context_dim != config.context_dim:
                raise ShapeError(
                    f"gate context length {gpm.context_dim} != configured context_dim {config.context_dim}")
            contexts = EmbeddingTable(
                dataset.ctx_ids,
                rng.normal(scale=config.init_scale, size=(len(dataset.ctx_ids), config.context_dim)))
    else:
        _check_feature_len(model, dataset.records[0].win.size)

    n = len(dataset)
    loss_history: list[float] = []
    accuracy_history: list[float] = []

    for epoch in range(config.epochs):
        if config.batch_size is None:
            batches = [None]
        else:
            order = rng.permutation(n)
            batches = [order[k:k + config.batch_size] for k in range(0, n, config.batch_size)]
        for idx in batches:
            batch = _assemble(dataset, model, items, contexts, idx)
            s, cache = _scores(model, batch)
            wgt = -expit(-s / tau) / (tau * len(s))
            grads = _grads(model, batch, wgt, cache, items, contexts)
            _apply_step(model, items, contexts, grads, config)
        full = _assemble(dataset, model, items, contexts)
        s, _ = _scores(model, full)
        loss = _loss_from_scores(s, tau)
        if not np.isfinite(loss):
            raise TrainingError(f"non-finite loss at epoch {epoch}")
        loss_history.append(loss)
        accuracy_history.append(float(np.mean(s > 0.0)))

    mean_embedding = None
    if not isinstance(model, BtModel):
        gpm = model if isinstance(model, GpmModel) else model.gpm
        full = _assemble(dataset, model, items, contexts)
        vw, _ = _embed(gpm, full.hw)
        vl, _ = _embed(gpm, full.hl)
        mean_embedding = np.concatenate([vw, vl], axis=0).mean(axis=0)

    return FitResult(model, items, contexts, loss_history, accuracy_history, mean_embedding)


def _apply_step(model: Model, items, contexts, grads: dict, config: FitConfig):
    lr = config.learning_rate
    bt = model if isinstance(model, BtModel) else getattr(model, "bt", None)
    gpm = model if isinstance(model, GpmModel) else getattr(model, "gpm", None)
    if "w_r" in grads:
        bt.w_r -= lr * grads["w_r"]
    if "w_c" in grads:
        gpm.w_c -= lr * grads["w_c"]
        gpm.gate_w -= lr * grads["gate_w"]
        gpm.gate_b -= lr * grads["gate_b"]
    if config.train_weights and isinstance(model, HrcModel):
        model.c1 = max(float(model.c1 - lr * grads["c1"]), 1e-6)
        model.c2 = max(float(model.c2 - lr * grads["c2"]), 1e-6)
    if "items" in grads:
        items.vectors -= lr * grads["items"]
    if "contexts" in grads:
        contexts.vectors -= lr * grads["contexts"]


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------


def model_to_dict(model: Model) -> dict:
    if isinstance(model, BtModel):
        return {"kind": "bt", "m": model.m, "clip": model.clip,
                "w_r": [float(x) for x in model.w_r]}
    if isinstance(model, GpmModel):
        return {"kind": "gpm", "d": model.d, "m": model.m,
                "context_dim": model.context_dim, "unit_norm": model.unit_norm,
                "w_c": _tolist(model.w_c), "gate_w": _tolist(model.gate_w),
                "gate_b": [float(x) for x in model.gate_b]}
    return {"kind": "hrc", "c1": model.c1, "c2": model.c2, "tau": model.tau,
            "bt": model_to_dict(model.bt), "gpm": model_to_dict(model.gpm)}


def model_from_dict(payload: dict) -> Model:
    try:
        kind = payload["kind"]
        if kind == "bt":
            return BtModel(np.asarray(payload["w_r"], dtype=float), payload["clip"])
        if kind == "gpm":
            model = GpmModel(
                np.asarray(payload["w_c"], dtype=float),
                np.asarray(payload["gate_w"], dtype=float),
                np.asarray(payload["gate_b"], dtype=float),
                bool(payload["unit_norm"]))
            if model.d != payload["d"] or model.m != payload["m"]:
                raise DataFormatError("gpm payload shape metadata disagrees with arrays")
            return model
        if kind == "hrc":
            return HrcModel(model_from_dict(payload["bt"]), model_from_dict(payload["gpm"]),
                            float(payload["c1"]), float(payload["c2"]), float(payload["tau"]))
    except (KeyError, TypeError) as exc:
        raise DataFormatError(f"malformed model payload: missing {exc}") from exc
    raise DataFormatError(f"unknown model kind {payload.get('kind')!r}")


def bundle_to_dict(result: FitResult) -> dict:
    """Trained model plus embedding tables, as written by the CLI."""
    payload = {"model": model_to_dict(result.model)}
    if result.items is not None:
        payload["items"] = result.items.to_dict()
    if result.contexts is not None:
        payload["contexts"] = result.contexts.to_dict()
    if result.mean_embedding is not None:
        payload["mean_embedding"] = [float(x) for x in result.mean_embedding]
    return payload


def bundle_from_dict(payload: dict) -> tuple[Model, EmbeddingTable | None, EmbeddingTable | None]:
    try:
        model = model_from_dict(payload["model"])
    except KeyError as exc:
        raise DataFormatError("bundle payload needs a 'model' entry") from exc
    items = EmbeddingTable.from_dict(payload["items"]) if "items" in payload else None
    contexts = EmbeddingTable.from_dict(payload["contexts"]) if "contexts" in payload else None
    return model, items, contexts


def _tolist(a: np.ndarray) -> list:
    return [[float(x) for x in row] for row in a]

"""Command-line front end: ``prefgame SUBCOMMAND [options]``.

Subcommands
-----------
decompose   split a score-matrix file into ranking + rotation parts
gen-data    emit synthetic cyclic / dominant+cycle training pairs (JSONL)
fit         train a preference model on a JSONL pair dataset
selfplay    run the self-play solver on a matrix file or a fitted model
witness     run representability checks and constructions

Conventions
-----------
- Every command takes ``--seed`` (default 0), ``--out DIR`` and optional
  ``--config PATH``.  The full effective configuration (defaults, then
  config file, then explicit flags; the output directory excluded) is
  echoed to ``<out>/config.json``; re-running from that file with a fresh
  ``--out`` reproduces every output byte for byte.
- All randomness flows from the single seed through named substreams:
  the substream for purpose ``name`` is seeded with
  ``SeedSequence([seed, crc32(name)])``.
- Report commands write a PNG figure next to their delimited output
  (disable with ``--no-figures``).
- Trajectory CSV columns are fixed: t, gap, epsilon_t, entropy
  (mixture duality gap against the limiting game; entropy of the current
  iterate, in nats).  Fit history CSV columns: epoch, loss, accuracy.
- Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.
- ``PREFGAME_LOG`` in {error, info, debug} controls stderr verbosity.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
import zlib

import numpy as np

from . import __version__
from .core import PreferenceScoreMatrix, TabularPolicy
from .decomposition import decompose, transitivity_fraction
from .errors import (
    DataFormatError,
    DomainError,
    GenerationError,
    OracleError,
    ShapeError,
    StateError,
    TrainingError,
)
from .models import (
    BtModel,
    FitConfig,
    GpmModel,
    HrcModel,
    PairDataset,
    bundle_from_dict,
    bundle_to_dict,
    fit,
)
from .selfplay import (
    Exact,
    MonteCarlo,
    OracleSchedule,
    SolverConfig,
    run,
)
from .synthdata import gen_cyclic, gen_dominant_cycle, to_pair_dataset
from .witnesses import (
    CapacitySearchConfig,
    build_dominant_cycle_d2,
    d1_dominant_feasible,
    dominant_cycle_pattern,
    hard_cycle_infeasibility,
    pattern_capacity_search,
    rps_pattern,
    score_matrix,
)

log = logging.getLogger("prefgame.cli")


def derive_seed(seed: int, name: str) -> int:
    """Named substream: SeedSequence([seed, crc32(name)])."""
    label = zlib.crc32(name.encode("utf-8"))
    return int(np.random.SeedSequence([int(seed), label]).generate_state(1)[0])


# ---------------------------------------------------------------------------
# Parameter tables (single source of truth for flags, config files, echo)
# ---------------------------------------------------------------------------

_COMMON = {
    "seed": (int, 0, "global seed; substreams are derived per purpose"),
    "figures": (bool, True, "render PNG figures next to delimited outputs"),
}

_PARAMS = {
    "decompose": {
        **_COMMON,
        "input": (str, None, "score-matrix JSON file ({'n':..., 'upper':[...]})"),
    },
    "gen-data": {
        **_COMMON,
        "mode": (str, "cyclic", "cyclic | dominant_cycle"),
        "count": (int, 10, "number of instances"),
    },
    "fit": {
        **_COMMON,
        "model_kind": (str, "hrc", "bt | gpm | hrc"),
        "dim": (str, "2+1", "bt: 1; gpm: even embedding dim (2, 4, ...); hrc: '2+1', '4+1'"),
        "data": (str, None, "JSONL pair dataset"),
        "learning_rate": (float, 0.5, "gradient step size"),
        "epochs": (int, 800, "training epochs"),
        "batch_size": (int, 0, "minibatch size; 0 = full batch"),
        "tau": (float, 0.1, "loss temperature"),
        "clip": (float, 10.0, "reward clip bound (bt/hrc)"),
        "feature_dim": (int, 8, "tabular item embedding length"),
        "context_dim": (int, 4, "tabular context embedding length"),
        "init_scale": (float, 0.1, "init scale for weights and tabular embeddings"),
    },
    "selfplay": {
        **_COMMON,
        "matrix": (str, "", "score-matrix JSON file (game source)"),
        "model": (str, "", "fitted model bundle JSON (game source)"),
        "items": (str, "", "comma-separated item ids (with --model)"),
        "ctx": (str, "", "context id (with --model, gpm/hrc kinds)"),
        "schedule": (str, "static", "static | hrc (blend of transitive and cyclic parts)"),
        "lam": (float, 1.0, "schedule weight: s_t = (1+lam/t^p) T + (1-lam/t^p) C"),
        "exponent": (float, 0.5, "schedule decay exponent p"),
        "eta": (str, "theory", "learning rate, or 'theory' for max|log pi0|/sqrt(T)"),
        "iterations": (int, 1000, "solver iterations T"),
        "estimation": (str, "exact", "exact | monte_carlo"),
        "mc_samples": (int, 1000, "samples per step for monte_carlo"),
        "stride": (str, "pow2", "checkpoint stride: 'pow2' or an integer"),
    },
    "witness": {
        **_COMMON,
        "check": (str, "d2_construction",
                  "d1_semicircle | d2_construction | hard_cycle | capacity"),
        "angles": (str, "", "comma-separated angles (d1_semicircle)"),
        "n": (int, 3, "cycle size"),
        "d": (int, 1, "planar subspaces"),
        "pattern": (str, "dominant_cycle", "rps | dominant_cycle (capacity)"),
        "restarts": (int, 8, "capacity search restarts"),
        "steps": (int, 600, "capacity search steps per restart"),
    },
}


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="prefgame", description=__doc__,
                     formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--version", action="version", version=f"prefgame {__version__}")
    subs = parser.add_subparsers(dest="command", required=True)
    for command, params in _PARAMS.items():
        sub = subs.add_parser(command, formatter_class=argparse.RawDescriptionHelpFormatter)
        sub.add_argument("--out", required=True, help="output directory")
        sub.add_argument("--config", default=None, help="JSON config file with the same keys as the flags")
        for name, (typ, default, help_text) in params.items():
            flag = "--" + name.replace("_", "-")
            if typ is bool:
                sub.add_argument("--no-" + name.replace("_", "-"), dest=name,
                                 action="store_false", default=argparse.SUPPRESS,
                                 help=f"disable: {help_text}")
            else:
                sub.add_argument(flag, type=typ, default=argparse.SUPPRESS,
                                 help=f"{help_text} (default: {default})")
    return parser


def _effective_config(command: str, args: argparse.Namespace) -> dict:
    params = _PARAMS[command]
    effective = {name: default for name, (_, default, _h) in params.items()}
    if args.config is not None:
        try:
            with open(args.config, "r", encoding="utf-8") as fh:
                loaded = json.load(fh)
        except OSError as exc:
            raise DataFormatError(f"cannot read config file: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise DataFormatError(
                f"{args.config}: line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
        if not isinstance(loaded, dict):
            raise _UsageError("config file must hold a JSON object")
        loaded.pop("command", None)
        unknown = sorted(set(loaded) - set(params))
        if unknown:
            raise _UsageError(f"unknown config keys for '{command}': {', '.join(unknown)}")
        effective.update(loaded)
    for name in params:
        if hasattr(args, name):
            effective[name] = getattr(args, name)
    return effective


# ---------------------------------------------------------------------------
# Output helpers
# ---------------------------------------------------------------------------


def _ensure_out(out: str) -> str:
    os.makedirs(out, exist_ok=True)
    return out


def _write_json(path: str, payload: dict):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    log.info("wrote %s", path)


def _write_csv(path: str, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_cell(v) for v in row])
    log.info("wrote %s", path)


def _cell(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (int, np.integer)):
        return int(v)
    return v


def _echo_config(out: str, command: str, effective: dict):
    _write_json(os.path.join(out, "config.json"), {"command": command, **effective})


def _load_matrix(path: str) -> PreferenceScoreMatrix:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            payload = json.load(fh)
    except json.JSONDecodeError as exc:
        raise DataFormatError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    return PreferenceScoreMatrix.from_dict(payload)


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def _cmd_decompose(out: str, cfg: dict) -> int:
    if not cfg["input"]:
        raise _UsageError("decompose needs --input (score-matrix JSON file)")
    matrix = _load_matrix(cfg["input"])
    dec = decompose(matrix)
    fraction = transitivity_fraction(matrix)
    _write_json(os.path.join(out, "decomposition.json"), dec.to_dict())
    _write_json(os.path.join(out, "summary.json"), {
        "n": dec.n,
        "seed": cfg["seed"],
        "transitivity_fraction": fraction,
        "potential": [float(x) for x in dec.f],
    })
    if cfg["figures"]:
        from . import plotting
        plotting.plot_decomposition(matrix, dec, os.path.join(out, "decomposition.png"))
    print(f"potential f: {np.array2string(dec.f, precision=6)}")
    print(f"transitivity fraction: {fraction:.6f}")
    return 0


def _cmd_gen_data(out: str, cfg: dict) -> int:
    mode = cfg["mode"]
    if mode == "cyclic":
        instances = gen_cyclic(derive_seed(cfg["seed"], "gen"), cfg["count"])
    elif mode == "dominant_cycle":
        instances = gen_dominant_cycle(derive_seed(cfg["seed"], "gen"), cfg["count"])
    else:
        raise _UsageError(f"unknown mode {mode!r} (cyclic | dominant_cycle)")
    dataset = to_pair_dataset(instances)
    pairs_path = os.path.join(out, "pairs.jsonl")
    dataset.to_jsonl(pairs_path)
    log.info("wrote %s", pairs_path)
    _write_json(os.path.join(out, "meta.json"), {
        "count": cfg["count"],
        "mode": mode,
        "seed": cfg["seed"],
        "records": len(dataset),
    })
    print(f"{mode}: {cfg['count']} instances, {len(dataset)} pair records")
    return 0


def _parse_dim(kind: str, dim: str) -> int:
    """Planar subspace count d for a CLI dim string; 0 for bt."""
    try:
        if kind == "bt":
            if int(dim) != 1:
                raise ValueError
            return 0
        if kind == "gpm":
            val = int(dim)
            if val < 2 or val % 2:
                raise ValueError
            return val // 2
        if kind == "hrc":
            cyc, scalar = dim.split("+")
            if int(scalar) != 1:
                raise ValueError
            val = int(cyc)
            if val < 2 or val % 2:
                raise ValueError
            return val // 2
    except ValueError:
        pass
    raise _UsageError(f"invalid dim {dim!r} for model kind {kind!r}")


def _cmd_fit(out: str, cfg: dict) -> int:
    if not cfg["data"]:
        raise _UsageError("fit needs --data (JSONL pair dataset)")
    kind = cfg["model_kind"]
    if kind not in ("bt", "gpm", "hrc"):
        raise _UsageError(f"unknown model kind {kind!r}")
    d = _parse_dim(kind, cfg["dim"])
    dataset = PairDataset.from_jsonl(cfg["data"])
    if len(dataset) == 0:
        raise DomainError(f"{cfg['data']}: dataset is empty")

    if dataset.tabular:
        m, context_dim = cfg["feature_dim"], cfg["context_dim"]
    else:
        m = dataset.records[0].win.size
        context_dim = dataset.records[0].ctx.size
    rng = np.random.default_rng(derive_seed(cfg["seed"], "model"))
    scale = cfg["init_scale"]
    if kind == "bt":
        model = BtModel.init(m, rng, clip=cfg["clip"], scale=scale)
    elif kind == "gpm":
        model = GpmModel.init(d, m, context_dim, rng, scale=scale)
    else:
        model = HrcModel.init(d, m, context_dim, rng, clip=cfg["clip"],
                              tau=cfg["tau"], scale=scale)

    fit_cfg = FitConfig(
        learning_rate=cfg["learning_rate"],
        epochs=cfg["epochs"],
        batch_size=cfg["batch_size"] or None,
        seed=derive_seed(cfg["seed"], "fit"),
        tau=cfg["tau"],
        feature_dim=m,
        context_dim=context_dim,
        init_scale=scale,
    )
    result = fit(model, dataset, fit_cfg)

    _write_json(os.path.join(out, "model.json"), bundle_to_dict(result))
    epochs = range(1, len(result.loss_history) + 1)
    _write_csv(os.path.join(out, "history.csv"), ("epoch", "loss", "accuracy"),
               list(zip(epochs, result.loss_history, result.accuracy_history)))
    if cfg["figures"]:
        from . import plotting
        plotting.plot_fit_history(result.loss_history, result.accuracy_history,
                                  os.path.join(out, "history.png"))
    print(f"{kind} dim={cfg['dim']}: final loss {result.loss_history[-1]:.6f}, "
          f"final accuracy {result.accuracy_history[-1]:.4f}")
    return 0


def _schedule_from_model(cfg: dict):
    try:
        with open(cfg["model"], "r", encoding="utf-8") as fh:
            payload = json.load(fh)
    except json.JSONDecodeError as exc:
        raise DataFormatError(
            f"{cfg['model']}: line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    model, items, contexts = bundle_from_dict(payload)
    if items is None:
        raise DomainError("model bundle carries no item table; use --matrix instead")
    ids = [s for s in cfg["items"].split(",") if s]
    if len(ids) < 2:
        raise _UsageError("--items needs at least two comma-separated ids")
    h = np.stack([items.lookup(i) for i in ids])

    # transitive part from the reward head, cyclic part from the embedding head;
    # the raw bilinear scores are re-split so the cyclic part has exact zero
    # row sums (trained heads only approximate that), with the transitive
    # residue folded into the potential.
    if isinstance(model, BtModel):
        rewards = np.clip(h @ model.w_r, -model.clip, model.clip) if model.clip else h @ model.w_r
        c_raw = np.zeros((len(ids), len(ids)))
    else:
        gpm = model if isinstance(model, GpmModel) else model.gpm
        if contexts is None or not cfg["ctx"]:
            raise _UsageError("this model kind needs --ctx (context id for the gate)")
        from .models import _embed  # internal kernel, shared on purpose
        v, _ = _embed(gpm, h)
        gates = gpm.gates(contexts.lookup(cfg["ctx"]))
        g = gates**2
        x, y = v[:, 0::2], v[:, 1::2]
        c_raw = (x * g) @ y.T - (y * g) @ x.T
        if isinstance(model, HrcModel):
            bt = model.bt
            rewards = model.c1 * np.clip(h @ bt.w_r, -bt.clip, bt.clip)
            c_raw = model.c2 * c_raw
        else:
            rewards = np.zeros(len(ids))
    cyc_dec = decompose(PreferenceScoreMatrix(c_raw))
    f_total = (rewards - rewards.mean()) + cyc_dec.f
    return np.subtract.outer(f_total, f_total), cyc_dec.C


def _cmd_selfplay(out: str, cfg: dict) -> int:
    if bool(cfg["matrix"]) == bool(cfg["model"]):
        raise _UsageError("selfplay needs exactly one game source: --matrix or --model")
    if cfg["matrix"]:
        matrix = _load_matrix(cfg["matrix"])
        dec = decompose(matrix)
        t_part, c_part = dec.T, dec.C
    else:
        t_part, c_part = _schedule_from_model(cfg)

    if cfg["schedule"] == "static":
        sched = OracleSchedule.static(PreferenceScoreMatrix(t_part + c_part))
    elif cfg["schedule"] == "hrc":
        sched = OracleSchedule.blend(t_part, c_part, cfg["lam"], cfg["exponent"])
    else:
        raise _UsageError(f"unknown schedule {cfg['schedule']!r} (static | hrc)")

    if cfg["estimation"] == "exact":
        estimation = Exact()
    elif cfg["estimation"] == "monte_carlo":
        estimation = MonteCarlo(cfg["mc_samples"], derive_seed(cfg["seed"], "selfplay"))
    else:
        raise _UsageError(f"unknown estimation {cfg['estimation']!r} (exact | monte_carlo)")

    eta = cfg["eta"]
    if eta != "theory":
        try:
            eta = float(eta)
        except ValueError:
            raise _UsageError(f"eta must be a number or 'theory', got {eta!r}") from None
    stride = cfg["stride"]
    if stride != "pow2":
        try:
            stride = int(stride)
        except ValueError:
            raise _UsageError(f"stride must be an integer or 'pow2', got {stride!r}") from None

    solver = SolverConfig(eta=eta, iterations=cfg["iterations"],
                          estimation=estimation, checkpoint_stride=stride)
    report = run(sched, solver, TabularPolicy.uniform(sched.n))

    payload = report.to_dict()
    payload["seed"] = cfg["seed"]
    payload["schedule"] = cfg["schedule"]
    if cfg["schedule"] == "hrc":
        payload["lam"] = cfg["lam"]
        payload["exponent"] = cfg["exponent"]
    _write_json(os.path.join(out, "trajectory.json"), payload)
    _write_csv(os.path.join(out, "trajectory.csv"), report.CSV_COLUMNS, report.csv_rows())
    if cfg["figures"]:
        from . import plotting
        plotting.plot_trajectory(report, os.path.join(out, "trajectory.png"))
    print(f"T={report.iterations} eta={report.eta:.6g}: final mixture gap {report.final_gap:.6f}")
    return 0


def _cmd_witness(out: str, cfg: dict) -> int:
    check = cfg["check"]
    if check == "d1_semicircle":
        if not cfg["angles"]:
            raise _UsageError("d1_semicircle needs --angles (comma-separated)")
        try:
            angles = [float(a) for a in cfg["angles"].split(",") if a]
        except ValueError:
            raise _UsageError(f"invalid --angles {cfg['angles']!r}") from None
        rep = d1_dominant_feasible(angles)
        verdict = {
            "check": check,
            "parameters": {"angles": angles},
            "feasible": rep.feasible,
            "witness_angle": rep.witness,
            "margin": rep.margin,
        }
        text = ("feasible: a dominant item exists at angle "
                f"{rep.witness:.6f} with margin {rep.margin:.6f}") if rep.feasible else (
                f"infeasible: the angles do not fit an open semicircle (margin {rep.margin:.6f})")
    elif check == "d2_construction":
        emb = build_dominant_cycle_d2(cfg["n"])
        scores = score_matrix(emb)
        pattern = dominant_cycle_pattern(cfg["n"])
        required = pattern.required()
        margin = min(float(scores[w, l]) for w, l in required)
        feasible = pattern.satisfied(scores) == len(required)
        verdict = {
            "check": check,
            "parameters": {"n": cfg["n"], "d": 2},
            "scores": [[float(x) for x in row] for row in scores],
            "dominant_scores": [float(scores[cfg["n"], i]) for i in range(cfg["n"])],
            "feasible": feasible,
            "margin": margin,
        }
        text = (f"two-subspace construction over a {cfg['n']}-cycle: dominant scores "
                f"{verdict['dominant_scores'][0]:.6f}, margin {margin:.6f}, "
                f"{'all strict preferences hold' if feasible else 'a required preference ties'}")
    elif check == "hard_cycle":
        rep = hard_cycle_infeasibility(cfg["n"], cfg["d"])
        verdict = {
            "check": check,
            "parameters": {"n": cfg["n"], "d": cfg["d"]},
            "max_min_score": rep.max_min_score,
            "feasible": rep.feasible,
            "best_offset": rep.best_offset,
        }
        text = (f"aligned {cfg['n']}-cycle at d={cfg['d']}: best dominance margin "
                f"{rep.max_min_score:.3e} -> {'feasible' if rep.feasible else 'infeasible'}")
    elif check == "capacity":
        if cfg["pattern"] == "rps":
            pattern = rps_pattern()
        elif cfg["pattern"] == "dominant_cycle":
            pattern = dominant_cycle_pattern(cfg["n"])
        else:
            raise _UsageError(f"unknown pattern {cfg['pattern']!r} (rps | dominant_cycle)")
        search = CapacitySearchConfig(restarts=cfg["restarts"], steps=cfg["steps"],
                                      seed=derive_seed(cfg["seed"], "witness"))
        res = pattern_capacity_search(pattern, cfg["d"], search)
        verdict = {
            "check": check,
            "parameters": {"pattern": cfg["pattern"], "n": cfg["n"], "d": cfg["d"],
                           "restarts": cfg["restarts"], "steps": cfg["steps"]},
            "best_accuracy": res.best_accuracy,
            "satisfied": res.satisfied,
            "total": res.total,
            "embedding": {
                "magnitudes": [[float(x) for x in row] for row in res.best_embedding.magnitudes],
                "angles": [[float(x) for x in row] for row in res.best_embedding.angles],
            },
        }
        text = (f"capacity search ({cfg['pattern']}, d={cfg['d']}): "
                f"{res.satisfied}/{res.total} strict preferences satisfied")
    else:
        raise _UsageError(f"unknown check {check!r}")
    verdict["seed"] = cfg["seed"]
    _write_json(os.path.join(out, "verdict.json"), verdict)
    print(text)
    return 0


_DISPATCH = {
    "decompose": _cmd_decompose,
    "gen-data": _cmd_gen_data,
    "fit": _cmd_fit,
    "selfplay": _cmd_selfplay,
    "witness": _cmd_witness,
}


def main(argv=None) -> int:
    _configure_logging()
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"prefgame: error: {exc}", file=sys.stderr)
        return 1
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    try:
        effective = _effective_config(args.command, args)
        out = _ensure_out(args.out)
        code = _DISPATCH[args.command](out, effective)
        _echo_config(out, args.command, effective)
        return code
    except _UsageError as exc:
        print(f"prefgame: error: {exc}", file=sys.stderr)
        return 1
    except (DataFormatError, DomainError, ShapeError, GenerationError, OSError) as exc:
        print(f"prefgame: data error: {exc}", file=sys.stderr)
        return 2
    except (TrainingError, StateError, OracleError, FloatingPointError) as exc:
        print(f"prefgame: numerical failure: {exc}", file=sys.stderr)
        return 3


def _configure_logging():
    level = os.environ.get("PREFGAME_LOG", "error").lower()
    levels = {"error": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}
    if level not in levels:
        level = "error"
    logging.basicConfig(stream=sys.stderr, level=levels[level],
                        format="%(levelname)s %(name)s: %(message)s")


def entry():
    sys.exit(main())


if __name__ == "__main__":
    entry()

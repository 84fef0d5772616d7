"""Command-line driver: JSON experiment configs in, CSV/JSON records out.

Subcommands map onto the library surface: converge (averages vs limit on a
checkpoint schedule), limit (assemble the limit operator), resonances
(enumerate resonant tuples), counterexample (exact divergence means on the
shift lattice), stacking-test (direct vs block-companion evaluation),
continuous (semigroup averages vs the continuous limit).

Every run hashes its normalized config (FNV-1a 64) and stamps the hash into
each record, so result files are traceable to the exact configuration that
produced them.  A one-object JSON summary goes to stdout; records go to
--out in the chosen --format.

Exit codes: 0 success, 2 config validation, 3 budget refusal, 4 numerical
failure, 1 anything else (IO, unexpected).
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import continuous as cont
from . import entangle, linalg, operators, shiftlab, spectral_limit
from .errors import (
    BadAngleError,
    BudgetExceededError,
    ConfigError,
    DimensionMismatchError,
    EmptyAlphaError,
    EmptySequenceError,
    EntlabError,
    NotSurjectiveError,
    ParseError,
    ValidationError,
)
from .rng import CounterRng

KINDS = (
    "converge",
    "limit",
    "resonances",
    "counterexample",
    "stacking-test",
    "continuous",
)
CSV_HEADER = (
    "checkpoint",
    "error_fro",
    "error_op",
    "runtime_ms",
    "strategy",
    "seed",
    "config_hash",
)


def fnv1a64(data: bytes) -> str:
    """FNV-1a 64-bit hash, as 16 hex digits."""
    h = 0xCBF29CE484222325
    for byte in data:
        h ^= byte
        h = (h * 0x100000001B3) & 0xFFFFFFFFFFFFFFFF
    return f"{h:016x}"


@dataclass(frozen=True)
class ExperimentConfig:
    kind: str
    seed: int
    strategy: str
    tolerance: float
    budget: float | None
    threads: int
    out: str | None
    format: str
    data: dict
    config_hash: str


def _fail(path: str, msg: str):
    raise ValidationError(f"{path}: {msg}")


def _expect(cond: bool, path: str, msg: str):
    if not cond:
        _fail(path, msg)


def _norm_angle(raw, path: str) -> str:
    try:
        fr = operators.parse_angle(raw if not isinstance(raw, list) else tuple(raw))
    except BadAngleError as exc:
        _fail(path, str(exc))
    canon = f"{fr.numerator}/{fr.denominator}"
    # warn only when the mod-1 wrap moved the value, not on respellings
    try:
        literal = Fraction(raw.strip()) if isinstance(raw, str) else (
            Fraction(int(raw[0]), int(raw[1])) if isinstance(raw, list) else Fraction(raw)
        )
    except (ValueError, ZeroDivisionError, TypeError):
        literal = fr
    if literal != fr:
        warnings.warn(f"{path}: angle {raw!r} normalized to {canon!r}", stacklevel=2)
    return canon


def _norm_frequency(raw, path: str) -> str:
    if isinstance(raw, list):
        raw = tuple(raw)
    try:
        fr = cont._parse_frequency(raw)
    except (ValidationError, ValueError, TypeError) as exc:
        _fail(path, f"bad frequency {raw!r}: {exc}")
    return f"{fr.numerator}/{fr.denominator}"


def _norm_complex(raw, path: str) -> list[float]:
    if isinstance(raw, (int, float)) and not isinstance(raw, bool):
        return [float(raw), 0.0]
    if isinstance(raw, list) and len(raw) == 2:
        try:
            return [float(raw[0]), float(raw[1])]
        except (TypeError, ValueError):
            pass
    if isinstance(raw, dict) and set(raw) <= {"re", "im"}:
        return [float(raw.get("re", 0.0)), float(raw.get("im", 0.0))]
    _fail(path, f"expected a number, [re, im] pair or {{re, im}}, got {raw!r}")


def _norm_basis(raw, path: str) -> dict:
    if raw is None:
        return {"type": "orthonormal", "seed": 0}
    _expect(isinstance(raw, dict), path, "basis must be an object")
    btype = raw.get("type", "orthonormal")
    _expect(
        btype in ("orthonormal", "similarity"),
        path,
        f"basis type must be 'orthonormal' or 'similarity', got {btype!r}",
    )
    out = {"type": btype, "seed": int(raw.get("seed", 0))}
    if btype == "similarity":
        out["condition_cap"] = float(raw.get("condition_cap", 50.0))
        _expect(out["condition_cap"] >= 1.0, path, "condition_cap must be >= 1")
    extra = set(raw) - {"type", "seed", "condition_cap"}
    _expect(not extra, path, f"unknown basis fields {sorted(extra)}")
    return out


def _norm_operator(raw, path: str, *, continuous: bool) -> dict:
    _expect(isinstance(raw, dict), path, "operator spec must be an object")
    keyword = "frequencies" if continuous else "angles"
    known = {keyword, "stable", "basis"}
    extra = set(raw) - known
    _expect(not extra, path, f"unknown fields {sorted(extra)}; expected {sorted(known)}")
    angles = raw.get(keyword, [])
    _expect(isinstance(angles, list), f"{path}.{keyword}", "must be a list")
    if continuous:
        norm_ang = [
            _norm_frequency(a, f"{path}.{keyword}[{i}]") for i, a in enumerate(angles)
        ]
    else:
        norm_ang = [
            _norm_angle(a, f"{path}.{keyword}[{i}]") for i, a in enumerate(angles)
        ]
    stable = raw.get("stable", [])
    _expect(isinstance(stable, list), f"{path}.stable", "must be a list")
    norm_stable = [
        _norm_complex(s, f"{path}.stable[{i}]") for i, s in enumerate(stable)
    ]
    _expect(
        len(norm_ang) + len(norm_stable) > 0, path, "needs at least one eigenvalue"
    )
    return {
        keyword: norm_ang,
        "stable": norm_stable,
        "basis": _norm_basis(raw.get("basis"), f"{path}.basis"),
    }


def _norm_connector(raw, path: str) -> dict:
    if raw is None:
        return {"type": "identity"}
    _expect(isinstance(raw, dict), path, "connector must be an object")
    ctype = raw.get("type", "identity")
    if ctype == "identity":
        _expect(set(raw) <= {"type"}, path, "identity takes no other fields")
        return {"type": "identity"}
    if ctype == "haar":
        return {"type": "haar", "seed": int(raw.get("seed", 0))}
    if ctype == "gaussian":
        return {
            "type": "gaussian",
            "seed": int(raw.get("seed", 0)),
            "scale": float(raw.get("scale", 1.0)),
        }
    _fail(path, f"unknown connector type {ctype!r}")


def parse_config(text: str) -> ExperimentConfig:
    """Parse, validate and normalize a JSON experiment configuration.

    Angles and frequencies are reduced to canonical 'p/q' strings before the
    config is hashed, so equivalent spellings ('2/4' vs '1/2') and key order
    produce the same FNV-1a hash.
    """
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(
            f"config is not valid JSON (line {exc.lineno}, column {exc.colno}): {exc.msg}"
        ) from exc
    _expect(isinstance(raw, dict), "$", "top level must be a JSON object")
    kind = raw.get("kind")
    _expect(kind in KINDS, "$.kind", f"must be one of {list(KINDS)}, got {kind!r}")

    data: dict = {"kind": kind}
    data["seed"] = int(raw.get("seed", 0))
    strategy = raw.get("strategy", "presum")
    _expect(
        strategy in ("naive", "cached", "presum"),
        "$.strategy",
        f"must be naive|cached|presum, got {strategy!r}",
    )
    data["strategy"] = strategy
    data["tolerance"] = float(raw.get("tolerance", 1e-8))
    _expect(data["tolerance"] > 0, "$.tolerance", "must be positive")
    budget = raw.get("budget", 1e8)
    data["budget"] = None if budget is None else float(budget)
    data["threads"] = int(raw.get("threads", 1))
    _expect(data["threads"] >= 1, "$.threads", "must be >= 1")
    fmt = raw.get("format", "csv")
    _expect(fmt in ("csv", "json"), "$.format", f"must be csv|json, got {fmt!r}")
    data["format"] = fmt
    out = raw.get("out")
    _expect(out is None or isinstance(out, str), "$.out", "must be a string path")
    if out is not None:
        data["out"] = out

    needs_system = kind in ("converge", "limit", "resonances", "stacking-test")
    if needs_system or kind == "continuous":
        alpha = raw.get("alpha")
        _expect(isinstance(alpha, list) and alpha, "$.alpha", "must be a nonempty list")
        try:
            part = entangle.make_partition(alpha)
        except (NotSurjectiveError, EmptyAlphaError) as exc:
            _fail("$.alpha", str(exc))
        data["alpha"] = [int(v) for v in alpha]
        key = "generators" if kind == "continuous" else "operators"
        ops = raw.get(key)
        _expect(isinstance(ops, list), f"$.{key}", "must be a list")
        _expect(
            len(ops) == part.m,
            f"$.{key}",
            f"alpha has m={part.m} positions, got {len(ops)} entries",
        )
        data[key] = [
            _norm_operator(o, f"$.{key}[{i}]", continuous=(kind == "continuous"))
            for i, o in enumerate(ops)
        ]
        conns = raw.get("connectors")
        if conns is not None:
            _expect(isinstance(conns, list), "$.connectors", "must be a list")
            _expect(
                len(conns) == part.m - 1,
                "$.connectors",
                f"need m-1={part.m - 1} connectors, got {len(conns)}",
            )
            data["connectors"] = [
                _norm_connector(c, f"$.connectors[{i}]") for i, c in enumerate(conns)
            ]
        if "state_seed" in raw and raw["state_seed"] is not None:
            data["state_seed"] = int(raw["state_seed"])

    if kind in ("converge", "stacking-test"):
        sched = raw.get("schedule")
        _expect(
            isinstance(sched, list) and sched, "$.schedule", "must be a nonempty list"
        )
        for i, n in enumerate(sched):
            _expect(
                isinstance(n, int) and not isinstance(n, bool) and n >= 1,
                f"$.schedule[{i}]",
                f"checkpoints are positive integers, got {n!r}",
            )
        data["schedule"] = sorted(set(int(n) for n in sched))

    if kind == "counterexample":
        sched = raw.get("checkpoints")
        _expect(
            isinstance(sched, list) and sched,
            "$.checkpoints",
            "must be a nonempty list",
        )
        for i, n in enumerate(sched):
            _expect(
                isinstance(n, int) and not isinstance(n, bool) and n >= 1,
                f"$.checkpoints[{i}]",
                f"checkpoints are positive integers, got {n!r}",
            )
        data["checkpoints"] = sorted(set(int(n) for n in sched))
        window = raw.get("window", 64)
        _expect(
            isinstance(window, int) and not isinstance(window, bool) and window >= 0,
            "$.window",
            f"must be a nonnegative integer, got {window!r}",
        )
        data["window"] = window

    if kind == "continuous":
        horizons = raw.get("horizons")
        _expect(
            isinstance(horizons, list) and horizons,
            "$.horizons",
            "must be a nonempty list of times",
        )
        hs = []
        for i, t in enumerate(horizons):
            _expect(
                isinstance(t, (int, float)) and not isinstance(t, bool) and t > 0,
                f"$.horizons[{i}]",
                f"horizons are positive numbers, got {t!r}",
            )
            hs.append(float(t))
        data["horizons"] = sorted(set(hs))
        quad = raw.get("quadrature", {})
        _expect(isinstance(quad, dict), "$.quadrature", "must be an object")
        scheme = quad.get("scheme", "midpoint")
        _expect(
            scheme in ("midpoint", "gauss-legendre"),
            "$.quadrature.scheme",
            f"must be midpoint|gauss-legendre, got {scheme!r}",
        )
        points = quad.get("points", "auto")
        if points != "auto":
            _expect(
                isinstance(points, int) and not isinstance(points, bool) and points >= 2,
                "$.quadrature.points",
                f"must be 'auto' or an integer >= 2, got {points!r}",
            )
        data["quadrature"] = {"scheme": scheme, "points": points}
        data["richardson"] = bool(raw.get("richardson", True))

    known_top = {
        "kind", "seed", "strategy", "tolerance", "budget", "threads", "format",
        "out", "alpha", "operators", "generators", "connectors", "state_seed",
        "schedule", "checkpoints", "window", "horizons", "quadrature", "richardson",
    }
    extra = set(raw) - known_top
    _expect(not extra, "$", f"unknown fields {sorted(extra)}")

    canonical = json.dumps(data, sort_keys=True, separators=(",", ":"))
    return ExperimentConfig(
        kind=kind,
        seed=data["seed"],
        strategy=data["strategy"],
        tolerance=data["tolerance"],
        budget=data["budget"],
        threads=data["threads"],
        out=data.get("out"),
        format=data["format"],
        data=data,
        config_hash=fnv1a64(canonical.encode("utf-8")),
    )


def _build_basis(spec: dict):
    if spec["type"] == "orthonormal":
        return operators.OrthonormalBasis(spec["seed"])
    return operators.RandomSimilarity(spec["seed"], spec["condition_cap"])


def _build_connectors(specs, d: int, seed: int):
    out = []
    for i, spec in enumerate(specs):
        if spec["type"] == "identity":
            out.append(np.eye(d, dtype=np.complex128))
        elif spec["type"] == "haar":
            out.append(linalg.haar_unitary(d, spec["seed"] ^ seed))
        else:  # gaussian, entries ~ scale/sqrt(d) times standard complex normal
            rng = CounterRng(spec["seed"] ^ seed)
            out.append(rng.complex_normal((d, d)) * (spec["scale"] / np.sqrt(d)))
    return out


def _build_discrete(cfg: ExperimentConfig) -> entangle.EntangledSystem:
    ops = []
    for spec in cfg.data["operators"]:
        stable = [complex(re, im) for re, im in spec["stable"]]
        ops.append(
            operators.synth_operator(spec["angles"], stable, _build_basis(spec["basis"]))
        )
    d = ops[0].dim
    conn_specs = cfg.data.get(
        "connectors", [{"type": "identity"}] * (len(ops) - 1)
    )
    conns = _build_connectors(conn_specs, d, cfg.seed)
    return entangle.make_system(cfg.data["alpha"], ops, conns)


def _build_continuous(cfg: ExperimentConfig) -> cont.ContinuousSystem:
    sgs = []
    for spec in cfg.data["generators"]:
        stable = [complex(re, im) for re, im in spec["stable"]]
        sgs.append(
            cont.synth_semigroup(
                spec["frequencies"], stable, _build_basis(spec["basis"])
            )
        )
    d = sgs[0].dim
    conn_specs = cfg.data.get(
        "connectors", [{"type": "identity"}] * (len(sgs) - 1)
    )
    conns = _build_connectors(conn_specs, d, cfg.seed)
    return cont.make_continuous_system(cfg.data["alpha"], sgs, conns)


def _state(cfg: ExperimentConfig, d: int):
    if "state_seed" not in cfg.data:
        return None
    v = CounterRng(cfg.data["state_seed"]).complex_normal((d,))
    return v / np.linalg.norm(v)


def _record(cfg: ExperimentConfig, checkpoint, err_f, err_o, ms) -> dict:
    return {
        "checkpoint": checkpoint,
        "error_fro": float(err_f),
        "error_op": float(err_o),
        "runtime_ms": float(ms),
        "strategy": cfg.strategy,
        "seed": cfg.seed,
        "config_hash": cfg.config_hash,
    }


def _norms(diff) -> tuple[float, float]:
    if diff.ndim == 1:
        n = float(np.linalg.norm(diff))
        return n, n
    return float(np.linalg.norm(diff)), linalg.spectral_norm(diff)


def _checkpoint_map(cfg: ExperimentConfig, items, work):
    if cfg.threads > 1:
        with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
            return list(pool.map(work, items))
    return [work(item) for item in items]


def _run_converge(cfg: ExperimentConfig):
    system = _build_discrete(cfg)
    x = _state(cfg, system.dim)
    limit = spectral_limit.limit_operator(system, cfg.tolerance)
    reference = limit if x is None else limit @ x

    def work(n: int) -> dict:
        t0 = time.perf_counter()
        avg = entangle.entangled_average(
            system, n, strategy=cfg.strategy, x=x, budget=cfg.budget
        )
        err_f, err_o = _norms(avg - reference)
        return _record(cfg, n, err_f, err_o, 1e3 * (time.perf_counter() - t0))

    records = _checkpoint_map(cfg, cfg.data["schedule"], work)
    records.sort(key=lambda r: r["checkpoint"])
    summary = {
        "verifies": "mean ergodic convergence of entangled Cesaro averages",
        "limit_frobenius_norm": float(np.linalg.norm(limit)),
    }
    return records, summary


def _serialize_tuples(tuples):
    out = []
    for tup in tuples:
        entry_list = []
        for e, fr in zip(tup.entries, tup.exact):
            if fr is not None:
                entry_list.append({"angle": f"{fr.numerator}/{fr.denominator}"})
            elif isinstance(e, complex):
                entry_list.append({"value": [e.real, e.imag]})
            else:
                entry_list.append({"value": float(e)})
        out.append(
            {
                "entries": entry_list,
                "residuals": [float(r) for r in tup.residuals],
                "fragile": tup.fragile,
            }
        )
    return out


def _run_limit(cfg: ExperimentConfig):
    system = _build_discrete(cfg)
    t0 = time.perf_counter()
    limit = spectral_limit.limit_operator(system, cfg.tolerance)
    ms = 1e3 * (time.perf_counter() - t0)
    spectra = [spectral_limit.unimodular_spectrum(op) for op in system.operators]
    tuples = spectral_limit.resonant_tuples(
        spectra, system.partition, cfg.tolerance
    )
    worst = max((max(t.residuals) for t in tuples), default=0.0)
    records = [_record(cfg, len(tuples), worst, worst, ms)]
    summary = {
        "verifies": "Jacobs-Glicksberg-de Leeuw decomposition",
        "resonant_tuples": _serialize_tuples(tuples),
        "matrix": [[[z.real, z.imag] for z in row] for row in limit],
    }
    return records, summary


def _run_resonances(cfg: ExperimentConfig):
    system = _build_discrete(cfg)
    t0 = time.perf_counter()
    spectra = [spectral_limit.unimodular_spectrum(op) for op in system.operators]
    tuples = spectral_limit.resonant_tuples(
        spectra, system.partition, cfg.tolerance
    )
    ms = 1e3 * (time.perf_counter() - t0)
    records = [
        _record(cfg, i + 1, max(t.residuals), max(t.residuals), ms)
        for i, t in enumerate(tuples)
    ]
    summary = {
        "verifies": "resonant unimodular spectrum enumeration",
        "count": len(tuples),
        "resonant_tuples": _serialize_tuples(tuples),
    }
    return records, summary


def _run_counterexample(cfg: ExperimentConfig):
    t0 = time.perf_counter()
    values = shiftlab.divergence_experiment(cfg.data["checkpoints"])
    records = []
    for n, val in values:
        ms = 1e3 * (time.perf_counter() - t0)  # cumulative, single sweep
        records.append(_record(cfg, n, float(val), float(val), ms))
    section = shiftlab.finite_section(shiftlab.counterexample_A, cfg.data["window"])
    norm = linalg.spectral_norm(section)
    summary = {
        "verifies": "divergence of entangled Cesaro averages for a bounded weight",
        "exact_values": {
            str(n): f"{v.numerator}/{v.denominator}" for n, v in values
        },
        "window": cfg.data["window"],
        "finite_section_norm": norm,
    }
    return records, summary


def _run_stacking(cfg: ExperimentConfig):
    system = _build_discrete(cfg)
    st = entangle.stacked_system(system)
    x = _state(cfg, system.dim)

    def work(n: int) -> dict:
        t0 = time.perf_counter()
        direct = entangle.entangled_average(
            system, n, strategy=cfg.strategy, x=x, budget=cfg.budget
        )
        via = entangle.stacked_average(
            st, n, strategy=cfg.strategy, x=x, budget=cfg.budget
        )
        err_f, err_o = _norms(direct - via)
        return _record(cfg, n, err_f, err_o, 1e3 * (time.perf_counter() - t0))

    records = _checkpoint_map(cfg, cfg.data["schedule"], work)
    records.sort(key=lambda r: r["checkpoint"])
    summary = {"verifies": "block companion dilation identity"}
    return records, summary


def _run_continuous(cfg: ExperimentConfig):
    system = _build_continuous(cfg)
    x = _state(cfg, system.dim)
    limit = cont.continuous_limit_operator(system, cfg.tolerance)
    reference = limit if x is None else limit @ x
    quad_cfg = cfg.data["quadrature"]
    estimates = {}

    def work(t: float) -> dict:
        points = quad_cfg["points"]
        if points == "auto":
            points = cont.suggest_points(system, t)
        quad = cont.QuadratureSpec(quad_cfg["scheme"], points)
        t0 = time.perf_counter()
        avg = cont.continuous_entangled_average(
            system, t, quad, x=x, budget=cfg.budget,
            richardson=cfg.data["richardson"],
        )
        err_f, err_o = _norms(avg.value - reference)
        estimates[t] = {"points": avg.points, "richardson": avg.error_estimate}
        return _record(cfg, t, err_f, err_o, 1e3 * (time.perf_counter() - t0))

    records = _checkpoint_map(cfg, cfg.data["horizons"], work)
    records.sort(key=lambda r: r["checkpoint"])
    summary = {
        "verifies": "continuous-time mean ergodic convergence",
        "limit_frobenius_norm": float(np.linalg.norm(limit)),
        "quadrature": {str(t): estimates[t] for t in sorted(estimates)},
    }
    return records, summary


_RUNNERS = {
    "converge": _run_converge,
    "limit": _run_limit,
    "resonances": _run_resonances,
    "counterexample": _run_counterexample,
    "stacking-test": _run_stacking,
    "continuous": _run_continuous,
}


def run_experiment(cfg: ExperimentConfig):
    """Dispatch to the runner for cfg.kind; returns (records, summary)."""
    records, summary = _RUNNERS[cfg.kind](cfg)
    summary = {
        "kind": cfg.kind,
        "config_hash": cfg.config_hash,
        "records": len(records),
        **summary,
    }
    return records, summary


def _format_cell(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def emit_results(records, fmt: str, path: str):
    """Write records to path: RFC-4180 CSV with the fixed header, or a JSON array."""
    if fmt == "csv":
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(CSV_HEADER)
            for rec in records:
                writer.writerow([_format_cell(rec[k]) for k in CSV_HEADER])
    else:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(records, fh, indent=2)
            fh.write("\n")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="entlab",
        description="entangled ergodic average laboratory",
    )
    sub = parser.add_subparsers(dest="kind", required=True)
    for kind in KINDS:
        p = sub.add_parser(kind)
        p.add_argument("--config", required=True, help="path to a JSON config")
        p.add_argument("--out", default=None, help="records file (default entlab-<kind>.<format>)")
        p.add_argument("--format", default=None, choices=("csv", "json"))
        p.add_argument("--budget", default=None, type=float, help="cost budget override")
        p.add_argument("--threads", default=None, type=int, help="checkpoint parallelism")
    args = parser.parse_args(argv)

    try:
        with open(args.config, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        print(f"cannot read config: {exc}", file=sys.stderr)
        return 1

    try:
        cfg = parse_config(text)
        if cfg.kind != args.kind:
            raise ValidationError(
                f"config kind {cfg.kind!r} does not match subcommand {args.kind!r}"
            )
        if args.budget is not None:
            cfg = ExperimentConfig(**{**cfg.__dict__, "budget": args.budget})
        if args.threads is not None:
            cfg = ExperimentConfig(**{**cfg.__dict__, "threads": args.threads})
        if args.format is not None:
            cfg = ExperimentConfig(**{**cfg.__dict__, "format": args.format})
        if args.out is not None:
            cfg = ExperimentConfig(**{**cfg.__dict__, "out": args.out})
        records, summary = run_experiment(cfg)
        out_path = cfg.out or f"entlab-{cfg.kind}.{cfg.format}"
        emit_results(records, cfg.format, out_path)
        summary["out"] = out_path
        print(json.dumps(summary, indent=2))
        return 0
    except (
        ParseError,
        ValidationError,
        ConfigError,
        NotSurjectiveError,
        EmptyAlphaError,
        BadAngleError,
        DimensionMismatchError,
        EmptySequenceError,
    ) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except BudgetExceededError as exc:
        print(f"budget refused: {exc}", file=sys.stderr)
        return 3
    except (EntlabError, OverflowError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 4
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

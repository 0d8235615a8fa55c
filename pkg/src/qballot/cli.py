"""Command-line front end: ``qballot {run,verify,sample,gates,crt-solve}``.

Configs are YAML mappings; results are JSON lines, one record per trial.
Exit codes: 0 success, 1 verification failure, 2 usage or config error.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path
from typing import Any, Sequence

import numpy as np
import yaml

from . import analysis, fastsim, gates, protocol, verification

MODES = ("simple", "boxes", "multicandidate", "crt", "classical")

#: Outcome tuples are embedded in records only up to this many registers.
MAX_OUTCOMES_IN_RECORD = 64

#: Stream id for drawing generated votes, kept apart from election seeds.
VOTE_STREAM = 0x766F7465

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class ConfigError(ValueError):
    pass


class UsageError(ValueError):
    pass


# -- records -------------------------------------------------------------------


def _fmt(value: Any) -> Any:
    if isinstance(value, bool) or value is None:
        return value
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        return float(f"{float(value):.12g}")
    if isinstance(value, dict):
        return {k: _fmt(v) for k, v in value.items()}
    if isinstance(value, (list, tuple, np.ndarray)):
        return [_fmt(v) for v in value]
    return value


def dump_record(record: dict) -> str:
    return json.dumps(_fmt(record), sort_keys=True, separators=(",", ":"))


class Emitter:
    def __init__(self, out: str | None) -> None:
        self._fh = open(out, "a", encoding="utf-8") if out else sys.stdout

    def __call__(self, record: dict) -> None:
        self._fh.write(dump_record(record) + "\n")

    def close(self) -> None:
        if self._fh is not sys.stdout:
            self._fh.close()
        else:
            self._fh.flush()


# -- config ---------------------------------------------------------------------


def load_config(path: str | Path) -> dict:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from exc
    try:
        cfg = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f"line {mark.line + 1}: " if mark is not None else ""
        raise ConfigError(f"{where}{getattr(exc, 'problem', exc)}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a mapping of field names to values")
    return cfg


def _int_field(cfg: dict, name: str, default: Any = ..., minimum: int | None = None) -> int:
    if name not in cfg:
        if default is ...:
            raise ConfigError(f"field '{name}': required")
        return default
    value = cfg[name]
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"field '{name}': expected an integer, got {value!r}")
    if minimum is not None and value < minimum:
        raise ConfigError(f"field '{name}': must be >= {minimum}, got {value}")
    return value


def _int_list(value: Any, name: str) -> list[int]:
    if not isinstance(value, list) or not all(
        isinstance(v, int) and not isinstance(v, bool) for v in value
    ):
        raise ConfigError(f"field '{name}': expected a list of integers")
    return list(value)


def _generate_votes(spec: dict, count: int, seed: int, alphabet: int) -> list[int]:
    """Votes from ``{random: p}`` (YES with probability p) or ``{uniform: true}``."""
    rng = np.random.default_rng([seed, VOTE_STREAM])
    if "random" in spec:
        p = spec["random"]
        if not isinstance(p, (int, float)) or isinstance(p, bool) or not 0 <= p <= 1:
            raise ConfigError("field 'votes.random': expected a probability in [0, 1]")
        if alphabet != 2:
            raise ConfigError("field 'votes.random': only valid for two alternatives")
        return [int(v) for v in rng.random(count) < p]
    if spec.get("uniform"):
        return [int(v) for v in rng.integers(0, alphabet, size=count)]
    raise ConfigError("field 'votes': generator must be {random: p} or {uniform: true}")


def resolve_votes(cfg: dict, count: int | None, seed: int, alphabet: int = 2) -> list[int]:
    if "votes" not in cfg:
        raise ConfigError("field 'votes': required")
    votes = cfg["votes"]
    if isinstance(votes, dict):
        if count is None:
            raise ConfigError("field 'n': required when votes are generated")
        return _generate_votes(votes, count, seed, alphabet)
    return _int_list(votes, "votes")


def _trial_seed(seed: int, trial: int) -> int:
    return int(np.random.SeedSequence([seed, trial]).generate_state(1, np.uint64)[0] >> 1)


def _base_record(mode: str, seed: int, trial: int, backend: str) -> dict:
    return {"mode": mode, "seed": seed, "trial": trial, "backend": backend}


def _outcomes_field(outcomes) -> list[int] | None:
    return list(outcomes) if len(outcomes) <= MAX_OUTCOMES_IN_RECORD else None


def _run_simple(cfg, seed, trial, tseed, backend):
    m = _int_field(cfg, "m", minimum=2)
    n = _int_field(cfg, "n", minimum=2)
    version = cfg.get("version", protocol.Version.PER_VOTER_FOURIER.value)
    try:
        version = protocol.Version(version)
    except ValueError:
        raise ConfigError(
            f"field 'version': expected one of {[v.value for v in protocol.Version]}"
        ) from None
    votes = resolve_votes(cfg, n, seed)
    spec = protocol.ElectionSpec(m, n, version, tseed)
    out = protocol.run_election(spec, votes, len(votes), backend)
    rec = _base_record("simple", seed, trial, out.backend)
    rec.update(
        m=m, n=n, version=version.value, real_voters=len(votes),
        fictional_votes=out.fictional_votes, outcomes=_outcomes_field(out.outcomes),
        sum_mod_m=out.sum_mod_m, yes_count=out.yes_count,
    )
    return rec


def _run_boxes(cfg, seed, trial, tseed, backend):
    m = _int_field(cfg, "m", minimum=2)
    votes = cfg.get("votes")
    if isinstance(votes, list) and votes and all(isinstance(b, list) for b in votes):
        parts = [_int_list(b, "votes") for b in votes]
        if "boxes" in cfg and _int_field(cfg, "boxes") != len(parts):
            raise ConfigError("field 'boxes': does not match the number of vote lists")
    else:
        boxes = _int_field(cfg, "boxes", minimum=1)
        flat = resolve_votes(cfg, cfg.get("n"), seed)
        parts = [flat[b::boxes] for b in range(boxes)]
    spec = protocol.BoxElectionSpec(m, tuple(tuple(p) for p in parts), tseed)
    out = protocol.run_box_election(spec, backend)
    rec = _base_record("boxes", seed, trial, out.backend)
    rec.update(
        m=m, n=spec.total_voters, boxes=spec.boxes, outcomes=_outcomes_field(out.outcomes),
        sum_mod_m=out.sum_mod_m, yes_count=out.yes_count,
    )
    return rec


def _run_multicandidate(cfg, seed, trial, tseed, backend):
    m = _int_field(cfg, "m", minimum=2)
    candidates = _int_field(cfg, "candidates", 3, minimum=2)
    rule = cfg.get("rule", "verbatim" if candidates == 3 else "cumulative")
    if rule not in ("verbatim", "cumulative"):
        raise ConfigError("field 'rule': expected 'verbatim' or 'cumulative'")
    if rule == "verbatim" and candidates != 3:
        raise ConfigError("field 'rule': the verbatim rule is defined for 3 candidates only")
    n_cfg = cfg.get("n")
    votes = resolve_votes(cfg, n_cfg, seed, alphabet=candidates)
    n = len(votes)
    if n_cfg is not None and _int_field(cfg, "n") != n:
        raise ConfigError(f"field 'n': {n_cfg} does not match {n} listed votes")
    if rule == "verbatim":
        counts = protocol.run_multicandidate(m, n, votes, tseed, backend)
    else:
        counts = protocol.run_multicandidate_cumulative(m, n, votes, candidates, tseed, backend)
    used = protocol.resolve_backend(m, n, backend)
    rec = _base_record("multicandidate", seed, trial, used)
    rec.update(m=m, n=n, candidates=candidates, rule=rule, counts=list(counts))
    return rec


def _run_crt(cfg, seed, trial, tseed, backend):
    if "moduli" not in cfg:
        raise ConfigError("field 'moduli': required in crt mode")
    moduli = _int_list(cfg["moduli"], "moduli")
    n = int(np.prod(moduli))
    votes = resolve_votes(cfg, n, seed)
    residues = protocol.crt_residues(moduli, votes, tseed, backend)
    x = protocol.crt_solve(protocol.CongruenceSystem(tuple(moduli), residues))
    used = protocol.resolve_backend(max(moduli), n, backend)
    rec = _base_record("crt", seed, trial, used)
    rec.update(moduli=moduli, n=n, real_voters=len(votes), residues=list(residues), yes_count=x)
    return rec


def _run_classical(cfg, seed, trial, tseed, backend):
    m = _int_field(cfg, "m", minimum=2)
    votes = resolve_votes(cfg, cfg.get("n"), seed)
    stored, recovered = protocol.classical_baseline(votes, m, np.random.default_rng(tseed))
    rec = _base_record("classical", seed, trial, "classical")
    rec.update(m=m, n=len(votes), stored=_outcomes_field(stored), yes_count=recovered)
    return rec


RUNNERS = {
    "simple": _run_simple,
    "boxes": _run_boxes,
    "multicandidate": _run_multicandidate,
    "crt": _run_crt,
    "classical": _run_classical,
}


def run_config(cfg: dict, seed=None, trials=None, backend=None, timing=False) -> list[dict]:
    mode = cfg.get("mode")
    if mode not in MODES:
        raise ConfigError(f"field 'mode': expected one of {list(MODES)}, got {mode!r}")
    seed = _int_field(cfg, "seed", 0, minimum=0) if seed is None else seed
    trials = _int_field(cfg, "trials", 1, minimum=1) if trials is None else trials
    backend = cfg.get("backend", "auto") if backend is None else backend
    if backend not in protocol.BACKENDS:
        raise ConfigError(f"field 'backend': expected one of {list(protocol.BACKENDS)}")
    records = []
    for trial in range(trials):
        start = time.perf_counter()
        rec = RUNNERS[mode](cfg, seed, trial, _trial_seed(seed, trial), backend)
        if timing:
            rec["wall_time"] = time.perf_counter() - start
        records.append(rec)
    return records


# -- subcommands ------------------------------------------------------------------


def cmd_run(args) -> int:
    cfg = load_config(args.config)
    records = run_config(cfg, args.seed, args.trials, args.backend, args.timing)
    emit = Emitter(args.out)
    for rec in records:
        emit(rec)
    emit.close()
    return EXIT_OK


def cmd_verify(args) -> int:
    results = verification.run_suites(args.suite)
    emit = Emitter(args.out)
    for res in results:
        emit(res.as_record())
    ok = all(r.passed for r in results)
    emit({"suite": "summary", "suites": len(results), "failed": [r.name for r in results if not r.passed], "pass": ok})
    emit.close()
    return EXIT_OK if ok else EXIT_FAIL


def cmd_sample(args) -> int:
    cfg = load_config(args.config) if args.config else {}
    m = args.m if args.m is not None else _int_field(cfg, "m", minimum=2)
    n = args.n if args.n is not None else _int_field(cfg, "n", minimum=2)
    seed = args.seed if args.seed is not None else _int_field(cfg, "seed", 0, minimum=0)
    trials = args.trials if args.trials is not None else _int_field(cfg, "trials", 1, minimum=1)
    if args.yes is not None:
        if not 0 <= args.yes <= n:
            raise UsageError(f"--yes must lie in [0, n={n}]")
        votes = np.zeros(n, dtype=np.int64)
        votes[: args.yes] = 1
    elif "votes" in cfg:
        votes = np.asarray(resolve_votes(cfg, n, seed), dtype=np.int64)
        if votes.size != n:
            raise ConfigError(f"field 'votes': {votes.size} votes for n={n}")
    else:
        votes = np.zeros(n, dtype=np.int64)
    if not 0 <= args.register < n:
        raise UsageError(f"--register must lie in [0, {n})")

    state = fastsim.StructuredBallotState(m, votes)
    rng = np.random.default_rng(seed)
    start = time.perf_counter()
    congruent = True
    column = []
    emit = Emitter(args.out)
    trial = 0
    for batch in fastsim.iter_sample_batches(state, rng, trials, args.batch):
        sums = batch.sum(axis=1) % m
        congruent &= bool(np.all(sums == state.shift_total))
        column.append(batch[:, args.register].copy())
        if args.per_trial:
            for row, s in zip(batch, sums):
                emit({"trial": trial, "outcomes": _outcomes_field(row), "sum_mod_m": int(s)})
                trial += 1
    record = {
        "command": "sample", "m": m, "n": n, "seed": seed, "trials": trials,
        "backend": "structured", "sum_mod_m": state.shift_total, "all_congruent": congruent,
    }
    samples = np.concatenate(column)
    if samples.size >= 10 * m:
        record["uniformity"] = analysis.chi_square_uniform(samples, m, args.register).as_record()
    if args.timing:
        record["wall_time"] = time.perf_counter() - start
    emit(record)
    emit.close()
    return EXIT_OK if congruent else EXIT_FAIL


def cmd_gates(args) -> int:
    report = gates.gate_counts(args.m, args.n)
    emit = Emitter(args.out)
    emit(report.as_record())
    emit.close()
    return EXIT_OK


def cmd_crt_solve(args) -> int:
    system = protocol.CongruenceSystem(tuple(args.moduli), tuple(args.residues))
    emit = Emitter(args.out)
    emit({"moduli": list(system.moduli), "residues": list(system.residues),
          "product": system.product, "x": protocol.crt_solve(system)})
    emit.close()
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qballot", description="Quantum secret-ballot simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, seed=True):
        p.add_argument("--out", metavar="PATH", help="append records to PATH instead of stdout")
        if seed:
            p.add_argument("--seed", type=int)
            p.add_argument("--trials", type=int)
            p.add_argument("--timing", action="store_true", help="add wall_time to records")

    p = sub.add_parser("run", help="run elections described by a config file")
    p.add_argument("--config", required=True, metavar="PATH")
    p.add_argument("--backend", choices=protocol.BACKENDS)
    common(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("verify", help="run the exhaustive small-instance suites")
    p.add_argument("--suite", action="append", choices=sorted(verification.SUITES))
    common(p, seed=False)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("sample", help="sample post-vote outcomes with the structured backend")
    p.add_argument("--config", metavar="PATH")
    p.add_argument("--m", type=int)
    p.add_argument("--n", type=int)
    p.add_argument("--yes", type=int, help="the first YES registers vote YES")
    p.add_argument("--register", type=int, default=0, help="register for the uniformity check")
    p.add_argument("--batch", type=int, default=fastsim.DEFAULT_BATCH)
    p.add_argument("--per-trial", action="store_true", help="emit one record per trial")
    common(p)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("gates", help="gate-count report for m = 2**k")
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--n", type=int, required=True)
    common(p, seed=False)
    p.set_defaults(func=cmd_gates)

    p = sub.add_parser("crt-solve", help="solve a system of coprime congruences")
    p.add_argument("--moduli", type=int, nargs="+", required=True)
    p.add_argument("--residues", type=int, nargs="+", required=True)
    common(p, seed=False)
    p.set_defaults(func=cmd_crt_solve)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "trials", None) is not None and args.trials < 1:
        parser.error("--trials must be >= 1")
    if getattr(args, "seed", None) is not None and args.seed < 0:
        parser.error("--seed must be >= 0")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"qballot: config error: {exc}", file=sys.stderr)
    except (UsageError, ValueError) as exc:
        print(f"qballot: constraint violated: {exc}", file=sys.stderr)
    return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())

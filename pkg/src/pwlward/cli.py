"""Command-line front end.

Exit codes: 0 success or true verdict, 1 false verdict, 2 usage or parse
error, 3 the rule set is outside the engine's fragment, 4 a budget ran out
before the answer was settled.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import re
import sys
from dataclasses import dataclass, fields
from pathlib import Path

from . import __version__
from .analysis import classify
from .chase import bounded_chase, export_chase_graph
from .core import Constant, evaluate_cq
from .normalize import NormalizationError, normalize, to_levelwise_nf, to_single_head
from .solver import PreconditionError, ProofSearch
from .textio import ParseError, parse_database, parse_program, parse_query
from .textio import serialize_database, serialize_program, serialize_query, serialize_report

log = logging.getLogger("pwlward")

EXIT_OK, EXIT_FALSE, EXIT_USAGE, EXIT_PRECONDITION, EXIT_BUDGET = 0, 1, 2, 3, 4


class UsageError(Exception):
    pass


@dataclass
class Config:
    engine: str = "auto"
    max_steps: int = 100_000
    max_depth: int | None = None
    spec_filter: bool = False
    specialization: str = "eager"
    format: str = "json"
    log_level: str = "WARNING"

    def validate(self):
        if self.engine not in ("auto", "prooftree", "andor", "chase"):
            raise UsageError(f"unknown engine {self.engine!r}")
        if self.specialization not in ("eager", "full"):
            raise UsageError(f"unknown specialization mode {self.specialization!r}")
        if self.format not in ("json", "text"):
            raise UsageError(f"unknown output format {self.format!r}")
        for name in ("max_steps", "max_depth"):
            v = getattr(self, name)
            if v is not None and (not isinstance(v, int) or isinstance(v, bool) or v < 0):
                raise UsageError(f"{name} must be a non-negative integer, got {v!r}")
        if not isinstance(self.spec_filter, bool):
            raise UsageError("spec_filter must be true or false")
        if self.log_level.upper() not in ("DEBUG", "INFO", "WARNING", "ERROR"):
            raise UsageError(f"unknown log level {self.log_level!r}")


CONFIG_KEYS = {f.name for f in fields(Config)}
ENV_PREFIX = "PWLWARD_"


def _coerce(key: str, raw):
    if not isinstance(raw, str):
        return raw
    if key in ("max_steps", "max_depth"):
        if raw.lower() in ("", "none"):
            return None
        try:
            return int(raw)
        except ValueError:
            raise UsageError(f"{key} must be an integer, got {raw!r}") from None
    if key == "spec_filter":
        if raw.lower() in ("1", "true", "yes", "on"):
            return True
        if raw.lower() in ("0", "false", "no", "off", ""):
            return False
        raise UsageError(f"spec_filter must be a boolean, got {raw!r}")
    return raw


def load_config(args, environ=None) -> Config:
    """Defaults, then the JSON config file, then PWLWARD_* variables, then flags."""
    environ = os.environ if environ is None else environ
    values: dict = {}
    path = getattr(args, "config", None) or environ.get(ENV_PREFIX + "CONFIG")
    if path:
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as e:
            raise UsageError(f"cannot read config file {path}: {e}") from None
        if not isinstance(data, dict):
            raise UsageError("config file must hold a JSON object")
        unknown = set(data) - CONFIG_KEYS
        if unknown:
            raise UsageError(f"unknown config keys: {', '.join(sorted(unknown))}")
        values.update({k: _coerce(k, v) for k, v in data.items()})
    for name, raw in environ.items():
        if not name.startswith(ENV_PREFIX) or name == ENV_PREFIX + "CONFIG":
            continue
        key = name[len(ENV_PREFIX):].lower()
        if key not in CONFIG_KEYS:
            raise UsageError(f"unknown environment setting {name}")
        values[key] = _coerce(key, raw)
    for key in CONFIG_KEYS:
        v = getattr(args, key, None)
        if v is not None:
            values[key] = v
    cfg = Config(**values)
    cfg.validate()
    return cfg


# ------------------------------------------------------------------ input


def _read(path) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise UsageError(f"cannot read {path}: {e.strerror}") from None


def _load_program(path):
    return parse_program(_read(path))


def _load_database(path):
    return parse_database(_read(path))


def _load_query(path, program=None):
    return parse_query(_read(path), program)


_FRESH = re.compile(r".*__(h\d+|lvl\d+_\d+|db\d*)(_\d+)?\Z")


def _check_query_predicates(q):
    for a in q.body:
        if _FRESH.match(a.predicate):
            raise UsageError(f"query mentions {a.predicate}, a name reserved for normalization")


def _emit(text: str, path=None):
    if path is None:
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


# --------------------------------------------------------------- commands


def cmd_classify(args, cfg: Config) -> int:
    report = classify(_load_program(args.program))
    if cfg.format == "text":
        lines = [f"warded: {str(report.warded).lower()}", f"pwl: {str(report.pwl).lower()}",
                 f"intensionally_linear: {str(report.intensionally_linear).lower()}",
                 f"full_datalog: {str(report.full_datalog).lower()}"]
        for i, ra in enumerate(report.per_rule):
            ward = f"ward {ra.ward_atom}" if ra.ward_atom is not None else (ra.violation or "no dangerous variables")
            lines.append(f"rule {i}: {ra.rule}  [{ward}]")
        _emit("\n".join(lines) + "\n")
    else:
        _emit(serialize_report(report))
    return EXIT_OK


def select_engine(requested: str, report) -> str:
    if requested != "auto":
        return requested
    if report.warded and report.pwl:
        return "prooftree"
    if report.warded:
        return "andor"
    log.warning("rule set is not warded; using the chase, whose answers are only "
                "complete if it terminates within the budget")
    return "chase"


def _parse_tuple(raw) -> tuple:
    if raw is None:
        return None
    parts = [p.strip() for p in raw.split(",")] if raw.strip() else []
    return tuple(Constant(p.strip("'")) for p in parts)


def cmd_answer(args, cfg: Config) -> int:
    program = _load_program(args.program)
    db = _load_database(args.database)
    q = _load_query(args.query, program)
    _check_query_predicates(q)
    report = classify(program)
    engine = select_engine(cfg.engine, report)
    answer = _parse_tuple(args.tuple)
    if answer is not None and len(answer) != len(q.output):
        raise UsageError(f"--tuple has {len(answer)} values, the query has {len(q.output)} outputs")
    out: dict = {"engine": engine}

    if engine == "chase":
        res = bounded_chase(db, program, max_steps=cfg.max_steps, max_depth=cfg.max_depth)
        answers = evaluate_cq(q, res.instance)
        out["terminated"] = res.terminated
        out["chase_steps"] = res.budget_spent
        if answer is not None:
            value = answer in answers
            out.update(tuple=[str(c) for c in answer], value=value)
            _write_result(out, cfg)
            if value:
                return EXIT_OK
            return EXIT_FALSE if res.terminated else EXIT_BUDGET
        out["answers"] = _sorted_answers(answers)
        _write_result(out, cfg)
        return EXIT_OK if res.terminated else EXIT_BUDGET

    search = ProofSearch(db, program, q, engine, specialization=cfg.specialization,
                         spec_filter=cfg.spec_filter, auto_normalize=not args.no_normalize)
    if answer is not None:
        d = search.decide(answer, want_trace=bool(args.trace))
        out.update(tuple=[str(c) for c in answer], value=d.value, stats=d.stats.to_dict())
        if args.trace:
            _emit(json.dumps({"tuple": out["tuple"], "value": d.value, "trace": d.trace},
                             sort_keys=True, indent=2, ensure_ascii=False) + "\n", args.trace)
        _write_result(out, cfg)
        return EXIT_OK if d.value else EXIT_FALSE
    traces = {}
    answers = set()
    for t in search.candidate_answers():
        d = search.decide(t, want_trace=bool(args.trace))
        if d.value:
            answers.add(t)
            if args.trace:
                traces[",".join(map(str, t))] = d.trace
    out["answers"] = _sorted_answers(answers)
    out["bound"] = search.bound
    if args.trace:
        _emit(json.dumps(traces, sort_keys=True, indent=2, ensure_ascii=False) + "\n", args.trace)
    _write_result(out, cfg)
    return EXIT_OK


def _sorted_answers(answers) -> list:
    return [[str(c) for c in t] for t in sorted(answers, key=lambda t: [c.sort_key for c in t])]


def _write_result(out: dict, cfg: Config):
    if cfg.format == "text":
        if "value" in out:
            _emit(("true" if out["value"] else "false") + "\n")
        else:
            _emit("".join("(" + ", ".join(t) + ")\n" for t in out["answers"]))
    else:
        _emit(json.dumps(out, sort_keys=True, indent=2, ensure_ascii=False) + "\n")


def cmd_chase(args, cfg: Config) -> int:
    program = _load_program(args.program)
    db = _load_database(args.database)
    res = bounded_chase(db, program, max_steps=cfg.max_steps, max_depth=cfg.max_depth,
                        oblivious=args.oblivious)
    if args.dot or args.graph_json:
        g = export_chase_graph(res)
        if args.dot:
            _emit(g.to_dot(), args.dot)
        if args.graph_json:
            _emit(g.to_json(), args.graph_json)
    if cfg.format == "text":
        _emit(serialize_database(res.instance))
    else:
        _emit(serialize_report(res))
    return EXIT_OK if res.terminated else EXIT_BUDGET


def cmd_normalize(args, cfg: Config) -> int:
    program = _load_program(args.program)
    single = args.single_head or not args.level_nf
    level = args.level_nf or not args.single_head
    if level:
        program, trace = normalize(program, level_nf=True) if single else to_levelwise_nf(program)
    else:
        program, trace = to_single_head(program)
    text = serialize_program(program)
    report = serialize_report(trace)
    if args.output:
        _emit(text, args.output)
        _emit(report, args.trace)
    else:
        _emit(text)
        if args.trace:
            _emit(report, args.trace)
    return EXIT_OK


def cmd_rewrite(args, cfg: Config) -> int:
    from .rewriter import rewrite, verify_rewriting

    program = _load_program(args.program)
    q = _load_query(args.query, program)
    _check_query_predicates(q)
    res = rewrite(program, q)
    _emit(serialize_program(res.program), args.output)
    _emit(serialize_query(res.query), args.query_out)
    summary = {"rules": len(res.program), "states": res.states, "bound": res.bound}
    code = EXIT_OK
    if args.verify:
        paths = sorted(Path(args.verify).glob("*.facts"))
        if not paths:
            raise UsageError(f"no .facts files in {args.verify}")
        dbs = [parse_database(p.read_text(encoding="utf-8")) for p in paths]
        engine = "prooftree" if cfg.engine in ("auto", "prooftree") else cfg.engine
        rep = verify_rewriting(program, q, dbs, engine=engine, rewriting=(res.program, res.query))
        for row in rep["results"]:
            row["database"] = paths[row["database"]].name
        summary["verify"] = rep
        if rep["mismatches"]:
            code = EXIT_FALSE
    _emit(serialize_report(summary))
    return code


def _load_tiling(path):
    from .tiling import TilingSystem

    try:
        return TilingSystem.from_json(_read(path))
    except json.JSONDecodeError as e:
        raise UsageError(f"{path}: {e}") from None
    except TypeError as e:
        raise UsageError(f"{path}: {e}") from None


def cmd_tiling_gen(args, cfg: Config) -> int:
    from .tiling import encode_tiling

    t = _load_tiling(args.spec)
    db, prog, q = encode_tiling(t)
    out = Path(args.output)
    out.mkdir(parents=True, exist_ok=True)
    stem = Path(args.spec).stem
    (out / f"{stem}.facts").write_text(serialize_database(db), encoding="utf-8")
    (out / f"{stem}.tgd").write_text(serialize_program(prog), encoding="utf-8")
    (out / f"{stem}.cq").write_text(serialize_query(q), encoding="utf-8")
    return EXIT_OK


def cmd_tiling_check(args, cfg: Config) -> int:
    from .tiling import cross_check

    t = _load_tiling(args.spec)
    rep = cross_check(t, args.budget, (args.max_n, args.max_m))
    _emit(serialize_report(rep))
    if rep["status"] == "disagree":
        log.error("a tiling exists but the terminated chase did not accept")
    if rep["status"] in ("both_true", "chase_only"):
        return EXIT_OK
    if rep["status"] == "tiler_only_budget":
        return EXIT_BUDGET
    return EXIT_FALSE


def cmd_corpus(args, cfg: Config) -> int:
    from .generators import random_case

    out = Path(args.output)
    out.mkdir(parents=True, exist_ok=True)
    seed = args.seed if args.seed is not None else 0
    index = []
    for i in range(args.count):
        c = random_case(seed + i, args.fragment)
        name = f"case{i:03d}"
        (out / f"{name}.tgd").write_text(serialize_program(c.program), encoding="utf-8")
        (out / f"{name}.facts").write_text(serialize_database(c.database), encoding="utf-8")
        (out / f"{name}.cq").write_text(serialize_query(c.query), encoding="utf-8")
        index.append({"name": name, "seed": seed + i, "chase_steps": c.chase_steps})
    (out / "index.json").write_text(serialize_report({"fragment": args.fragment, "cases": index}),
                                    encoding="utf-8")
    return EXIT_OK


# ----------------------------------------------------------------- parser


def _nonneg(text: str) -> int:
    v = int(text)
    if v < 0:
        raise argparse.ArgumentTypeError("must be non-negative")
    return v


def _positive(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be at least 1")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="pwlward", description="Warded, piece-wise linear existential rules.")
    p.add_argument("--version", action="version", version=f"pwlward {__version__}")
    p.add_argument("--config", help="JSON config file (flags and PWLWARD_* variables override it)")
    p.add_argument("--format", choices=["json", "text"], default=None)
    p.add_argument("--log-level", dest="log_level", default=None)
    p.add_argument("--seed", type=int, default=None, help="seed for corpus generation")
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("classify", help="report wardedness, piece-wise linearity and levels")
    c.add_argument("program")
    c.set_defaults(func=cmd_classify)

    a = sub.add_parser("answer", help="certain answers of a query")
    a.add_argument("program")
    a.add_argument("database")
    a.add_argument("query")
    a.add_argument("--engine", choices=["auto", "prooftree", "andor", "chase"], default=None)
    g = a.add_mutually_exclusive_group()
    g.add_argument("--tuple", nargs="?", const="", default=None,
                   help="decide one comma-separated tuple (no value: the empty tuple)")
    g.add_argument("--all", action="store_true", help="print every certain answer (the default)")
    a.add_argument("--trace", metavar="FILE", help="write proof traces as JSON")
    a.add_argument("--specialization", choices=["eager", "full"], default=None)
    a.add_argument("--spec-filter", dest="spec_filter", action="store_const", const=True, default=None)
    a.add_argument("--max-steps", dest="max_steps", type=_nonneg, default=None)
    a.add_argument("--max-depth", dest="max_depth", type=_nonneg, default=None)
    a.add_argument("--no-normalize", dest="no_normalize", action="store_true")
    a.set_defaults(func=cmd_answer)

    ch = sub.add_parser("chase", help="run the restricted (or oblivious) chase")
    ch.add_argument("program")
    ch.add_argument("database")
    ch.add_argument("--max-steps", dest="max_steps", type=_nonneg, default=None)
    ch.add_argument("--max-depth", dest="max_depth", type=_nonneg, default=None)
    ch.add_argument("--oblivious", action="store_true")
    ch.add_argument("--dot", metavar="FILE", help="write the chase graph in DOT")
    ch.add_argument("--graph-json", dest="graph_json", metavar="FILE", help="write the chase graph as JSON")
    ch.set_defaults(func=cmd_chase)

    n = sub.add_parser("normalize", help="single-head and level-wise normal forms")
    n.add_argument("program")
    n.add_argument("--single-head", dest="single_head", action="store_true")
    n.add_argument("--level-nf", dest="level_nf", action="store_true")
    n.add_argument("-o", "--output", metavar="OUT.tgd")
    n.add_argument("--trace", metavar="FILE", help="where to write the trace JSON (stdout with -o)")
    n.set_defaults(func=cmd_normalize)

    r = sub.add_parser("rewrite", help="compile rules and a query into full Datalog")
    r.add_argument("program")
    r.add_argument("query")
    r.add_argument("-o", "--output", metavar="OUT.tgd", required=True)
    r.add_argument("--query-out", dest="query_out", metavar="OUT.cq", required=True)
    r.add_argument("--verify", metavar="DB_DIR", help="compare with the solver on every .facts file")
    r.add_argument("--engine", choices=["auto", "prooftree", "andor"], default=None)
    r.set_defaults(func=cmd_rewrite)

    t = sub.add_parser("tiling", help="tiling-system encodings")
    tsub = t.add_subparsers(dest="tiling_command", required=True)
    tg = tsub.add_parser("gen", help="write the database, rules and query for a tiling system")
    tg.add_argument("spec")
    tg.add_argument("-o", "--output", metavar="DIR", required=True)
    tg.set_defaults(func=cmd_tiling_gen)
    tc = tsub.add_parser("check", help="bounded tiler against the bounded chase")
    tc.add_argument("spec")
    tc.add_argument("--max-n", dest="max_n", type=_positive, default=4)
    tc.add_argument("--max-m", dest="max_m", type=_positive, default=4)
    tc.add_argument("--budget", type=_positive, default=10_000)
    tc.set_defaults(func=cmd_tiling_check)

    co = sub.add_parser("corpus", help="write random test cases (uses --seed)")
    co.add_argument("-o", "--output", metavar="DIR", required=True)
    co.add_argument("--count", type=_positive, default=10)
    co.add_argument("--fragment", choices=["ward_pwl", "ward", "any"], default="ward_pwl")
    co.set_defaults(func=cmd_corpus)
    return p


def main(argv=None) -> int:
    from .tiling import TilingError

    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code) if e.code is not None else EXIT_OK
    try:
        cfg = load_config(args)
    except UsageError as e:
        print(f"pwlward: {e}", file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=cfg.log_level.upper(), format="pwlward: %(levelname)s: %(message)s")
    try:
        return args.func(args, cfg)
    except (UsageError, ParseError, TilingError) as e:
        print(f"pwlward: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (PreconditionError, NormalizationError) as e:
        print(f"pwlward: {e}", file=sys.stderr)
        return EXIT_PRECONDITION


if __name__ == "__main__":
    sys.exit(main())

"""Command-line harness: named experiments, recipe runs, format conversion and reports.

Exit codes: 0 success, 2 a criterion check failed, 3 input error, 4 budget exceeded.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from importlib import resources
from pathlib import Path

from . import io as fio
from .cubes import CubeMap
from .filtration import LaminarFamily
from .orders import order_from_sequence
from .ratio import WORK_BUDGET, BudgetExceeded
from .runners import RUNNERS
from .spaces import from_matrix, make_graph, shortest_path_metric

EXIT_OK, EXIT_FAIL, EXIT_INPUT, EXIT_BUDGET = 0, 2, 3, 4


class SpecError(ValueError):
    pass


@dataclass
class ExperimentSpec:
    name: str
    operation: str
    space: dict = field(default_factory=dict)
    order: dict = field(default_factory=dict)
    params: dict = field(default_factory=dict)
    seed: int = 0
    outputs: dict = field(default_factory=dict)

    def __post_init__(self):
        if not isinstance(self.name, str) or not self.name:
            raise SpecError("name must be a non-empty string")
        if self.operation not in RUNNERS:
            raise SpecError(f"unknown operation {self.operation!r}; "
                            f"known: {', '.join(sorted(RUNNERS))}")
        for key in ("space", "order", "params", "outputs"):
            if not isinstance(getattr(self, key), dict):
                raise SpecError(f"{key} must be an object")
        if isinstance(self.seed, bool) or not isinstance(self.seed, int):
            raise SpecError("seed must be an integer")

    def to_json(self) -> dict:
        return asdict(self)

    @classmethod
    def from_json(cls, obj) -> "ExperimentSpec":
        if not isinstance(obj, dict):
            raise SpecError("recipe must be a JSON object")
        extra = set(obj) - {"name", "operation", "space", "order", "params", "seed", "outputs"}
        if extra:
            raise SpecError(f"unknown recipe fields: {sorted(extra)}")
        if "name" not in obj or "operation" not in obj:
            raise SpecError("recipe needs name and operation")
        return cls(**obj)


def recipe_dir() -> Path:
    return Path(str(resources.files("ordratio") / "recipes"))


def load_recipe(name: str) -> ExperimentSpec:
    path = recipe_dir() / f"{name}.json"
    if not path.exists():
        known = sorted(p.stem for p in recipe_dir().glob("*.json"))
        raise SpecError(f"no recipe named {name!r}; known: {', '.join(known)}")
    return ExperimentSpec.from_json(fio.read_json(path))


def execute(spec: ExperimentSpec, budget: float = WORK_BUDGET) -> tuple[dict, dict]:
    """Run a spec; returns (payload, tables). The payload holds no timing data."""
    runner = RUNNERS[spec.operation]
    results, checks, tables = runner(spec.params, spec.seed, budget, space=spec.space,
                                     order=spec.order)
    checks = {k: bool(v) for k, v in checks.items()}
    payload = {"kind": "experiment", "name": spec.name, "operation": spec.operation,
               "seed": spec.seed, "spec": spec.to_json(), "checks": checks,
               "passed": all(checks.values()), "results": results}
    return payload, tables


def _emit(spec: ExperimentSpec, payload: dict, tables: dict, out: str | None, meta: dict) -> None:
    target = out or spec.outputs.get("dir")
    if target is None:
        sys.stdout.write(fio.canonical_json(payload))
        return
    d = Path(target)
    d.mkdir(parents=True, exist_ok=True)
    fio.write_json(d / f"{spec.name}.json", payload)
    for tname, (header, rows) in tables.items():
        fio.write_csv(d / f"{spec.name}_{tname}.csv", header, rows)
    fio.write_json(d / f"{spec.name}.meta.json", meta)


def _parse_overrides(extra: list[str]) -> dict:
    out = {}
    i = 0
    while i < len(extra):
        key = extra[i]
        if not key.startswith("--") or i + 1 >= len(extra):
            raise SpecError(f"expected --key value pairs, got {extra[i:]}")
        raw = extra[i + 1]
        try:
            val = json.loads(raw)
        except json.JSONDecodeError:
            val = raw
        out[key[2:].replace("-", "_")] = val
        i += 2
    return out


def _run_spec(spec: ExperimentSpec, args) -> int:
    budget = WORK_BUDGET if args.budget is None else float(args.budget)
    warnings = []
    if budget != WORK_BUDGET:
        warnings.append(f"enumeration budget overridden: {budget:g} (default {WORK_BUDGET:g})")
    if args.threads not in (None, 1):
        warnings.append("--threads has no effect: runs are single-threaded")
    for w in warnings:
        print(f"warning: {w}", file=sys.stderr)
    t0 = time.perf_counter()
    payload, tables = execute(spec, budget)
    meta = {"started": datetime.now(timezone.utc).isoformat(), "budget": budget,
            "seconds": time.perf_counter() - t0, "threads": args.threads, "warnings": warnings}
    _emit(spec, payload, tables, args.out, meta)
    for name, ok in payload["checks"].items():
        print(f"{'PASS' if ok else 'FAIL'} {spec.name}.{name}", file=sys.stderr)
    return EXIT_OK if payload["passed"] else EXIT_FAIL


def cmd_exp(args, extra: list[str]) -> int:
    spec = load_recipe(args.name)
    spec.params.update(_parse_overrides(extra))
    if args.seed is not None:
        spec.seed = int(args.seed)
    return _run_spec(spec, args)


def cmd_run(args, extra: list[str]) -> int:
    if extra:
        raise SpecError(f"unexpected arguments {extra}")
    spec = ExperimentSpec.from_json(fio.read_json(args.recipe))
    if args.seed is not None:
        spec.seed = int(args.seed)
    return _run_spec(spec, args)


# convert ----------------------------------------------------------------------------------------

_EXT = {".graph": "graph", ".edges": "graph", ".txt": "graph", ".csv": "matrix",
        ".order": "order", ".json": "json"}


def _fmt_of(path: str, given: str | None) -> str:
    if given:
        return given
    fmt = _EXT.get(Path(path).suffix)
    if fmt is None:
        raise SpecError(f"cannot infer the format of {path}; pass --from/--to")
    return fmt


def _read_any(path: str, fmt: str):
    text = Path(path).read_text()
    if fmt == "graph":
        return "graph", fio.parse_graph(text)
    if fmt == "matrix":
        return "space", from_matrix(fio.parse_matrix(text))
    if fmt == "order":
        return "order", fio.parse_order(text)
    obj = fio.read_json(path)
    kind = obj.get("kind") if isinstance(obj, dict) else None
    if kind == "graph":
        return "graph", make_graph(int(obj["n"]), obj["edges"])
    if kind == "space":
        return "space", from_matrix([[float(x) for x in row] for row in obj["matrix"]])
    if kind == "order":
        return "order", order_from_sequence(obj["seq"], {"constructor": "file"})
    if kind == "laminar_family":
        return "json", LaminarFamily.from_json(obj).to_json()
    if kind == "cube_map":
        return "json", CubeMap.from_json(obj).to_json()
    if kind is not None:
        return "json", obj
    raise fio.FormatError("JSON input has no 'kind' field", 1, 1)


def _write_any(path: str, fmt: str, kind: str, obj) -> None:
    if kind == "graph" and fmt == "matrix":
        obj, kind = shortest_path_metric(obj), "space"
    if kind == "space" and fmt == "graph":
        obj, kind = fio.graph_from_metric(obj), "graph"
    if fmt == "graph" and kind == "graph":
        fio.write_graph(path, obj)
    elif fmt == "matrix" and kind == "space":
        Path(path).write_text(fio.format_matrix(obj.full_matrix()))
    elif fmt == "order" and kind == "order":
        fio.write_order(path, obj)
    elif fmt == "json":
        if kind == "graph":
            obj = {"kind": "graph", "n": obj.n, "edges": obj.edges.tolist()}
        elif kind == "space":
            obj = {"kind": "space", "n": obj.n, "matrix": obj.full_matrix()}
        elif kind == "order":
            obj = {"kind": "order", "seq": obj.seq}
        fio.write_json(path, obj)
    else:
        raise SpecError(f"cannot convert {kind} to {fmt}")


def cmd_convert(args, extra: list[str]) -> int:
    if extra:
        raise SpecError(f"unexpected arguments {extra}")
    kind, obj = _read_any(args.input, _fmt_of(args.input, args.src))
    _write_any(args.output, _fmt_of(args.output, args.dst), kind, obj)
    return EXIT_OK


# report -----------------------------------------------------------------------------------------

REPORT_COLUMNS = ["source", "kind", "name", "value", "passed", "detail"]


def report_row(source: str, obj) -> list:
    """One fixed-column row per JSON report; unknown kinds are a schema error."""
    if not isinstance(obj, dict) or "kind" not in obj:
        raise SpecError(f"{source}: not a report (missing 'kind')")
    kind = obj["kind"]
    stem = Path(source).stem
    if kind == "experiment":
        checks = obj["checks"]
        value = sum(checks.values()) / len(checks) if checks else 1.0
        return [source, kind, obj["name"], value, obj["passed"],
                f"{sum(checks.values())}/{len(checks)} checks"]
    if kind == "ratio":
        return [source, kind, stem, obj["value"], "", f"k={obj['k']} exact={obj['exact']}"]
    if kind == "gap":
        return [source, kind, stem, obj["N_empirical"], obj["all_pass"],
                f"s0={obj['s0']} eps={obj['eps']}"]
    if kind == "probe":
        return [source, kind, stem, obj["success_rate"], "",
                f"runs={obj['runs']} t={obj['params']['t']}"]
    raise SpecError(f"{source}: unsupported report kind {kind!r}")


def build_report(paths: list[str], fmt: str = "csv") -> str:
    rows = [report_row(p, fio.read_json(p)) for p in paths]
    kinds = list(dict.fromkeys(r[1] for r in rows))
    rows = [r for k in kinds for r in rows if r[1] == k]
    if fmt == "csv":
        return fio.format_csv(REPORT_COLUMNS, rows)
    out = []
    for k in kinds:
        out.append(f"## {k}\n")
        out.append("| " + " | ".join(REPORT_COLUMNS) + " |")
        out.append("|" + "---|" * len(REPORT_COLUMNS))
        out += ["| " + " | ".join(str(x) for x in r) + " |" for r in rows if r[1] == k]
        out.append("")
    if not kinds:
        out = ["| " + " | ".join(REPORT_COLUMNS) + " |", "|" + "---|" * len(REPORT_COLUMNS), ""]
    return "\n".join(out)


def cmd_report(args, extra: list[str]) -> int:
    if extra:
        raise SpecError(f"unexpected arguments {extra}")
    text = build_report(args.paths, args.format)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


# entry point --------------------------------------------------------------------------------------


def _globals(p: argparse.ArgumentParser, default) -> None:
    p.add_argument("--seed", type=int, default=default)
    p.add_argument("--threads", type=int, default=default)
    p.add_argument("--budget", type=float, default=default,
                   help=f"exact enumeration work budget (default {WORK_BUDGET:g})")
    p.add_argument("--out", default=default, help="output directory (or file for report)")


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ordratio", description=__doc__)
    _globals(parser, None)
    sub = parser.add_subparsers(dest="command", required=True)
    common = argparse.ArgumentParser(add_help=False)
    _globals(common, argparse.SUPPRESS)
    p = sub.add_parser("exp", parents=[common], help="run a named recipe; extra --key value "
                       "pairs override its params")
    p.add_argument("name")
    p = sub.add_parser("run", parents=[common], help="run a recipe JSON file")
    p.add_argument("recipe")
    p = sub.add_parser("convert", parents=[common], help="convert between file formats")
    p.add_argument("input")
    p.add_argument("output")
    p.add_argument("--from", dest="src", choices=sorted(set(_EXT.values())))
    p.add_argument("--to", dest="dst", choices=sorted(set(_EXT.values())))
    p = sub.add_parser("report", parents=[common], help="merge JSON reports into one table")
    p.add_argument("paths", nargs="*")
    p.add_argument("--format", choices=["csv", "md"], default="csv")
    return parser


COMMANDS = {"exp": cmd_exp, "run": cmd_run, "convert": cmd_convert, "report": cmd_report}


def _diagnostic(exc: Exception) -> None:
    diag = {"error": type(exc).__name__, "message": str(exc)}
    for attr in ("line", "column"):
        if getattr(exc, attr, None) is not None:
            diag[attr] = getattr(exc, attr)
    print(json.dumps(diag, sort_keys=True), file=sys.stderr)


def main(argv: list[str] | None = None) -> int:
    parser = make_parser()
    args, extra = parser.parse_known_args(argv)
    try:
        return COMMANDS[args.command](args, extra)
    except BudgetExceeded as exc:
        _diagnostic(exc)
        return EXIT_BUDGET
    except (ValueError, KeyError, TypeError, OSError) as exc:
        _diagnostic(exc)
        return EXIT_INPUT


if __name__ == "__main__":
    raise SystemExit(main())

from __future__ import annotations

import csv
import io
import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ordratio import io as fio
from ordratio.cli import (EXIT_BUDGET, EXIT_INPUT, EXIT_OK, REPORT_COLUMNS, ExperimentSpec,
                          SpecError, build_report, execute, load_recipe, main, recipe_dir)
from ordratio.filtration import filtration_for
from ordratio.orders import natural_order, random_order
from ordratio.ratio import order_ratio_exact
from ordratio.spaces import (disjoint_union, grid_space, path_graph, random_regular_graph,
                             shortest_path_metric)


# formats ----------------------------------------------------------------------------------------


def test_matrix_text_keeps_inf():
    u = disjoint_union([grid_space(1, 2, 1), grid_space(1, 2, 1)])
    text = fio.format_matrix(u.full_matrix())
    assert "inf" in text
    assert np.array_equal(fio.parse_matrix(text), u.full_matrix())


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 8), st.integers(0, 10_000))
def test_matrix_real_round_trip(n, seed):
    M = np.random.default_rng(seed).random((n, n))
    M = M + M.T
    np.fill_diagonal(M, 0)
    assert np.array_equal(fio.parse_matrix(fio.format_matrix(M)), M)


def test_graph_parse_errors():
    with pytest.raises(fio.FormatError) as e:
        fio.parse_graph("3 2\n0 1\n1 x\n")
    assert e.value.line == 3
    with pytest.raises(fio.FormatError):
        fio.parse_graph("3 2\n0 1\n")
    with pytest.raises(fio.FormatError) as e:
        fio.parse_graph("2 1\n0 5\n")
    assert e.value.line == 2


def test_order_parse_error_line():
    with pytest.raises(fio.FormatError) as e:
        fio.parse_order("0\n1\nz\n")
    assert e.value.line == 3 and "line 3" in str(e.value)


def test_json_decode_error_has_position(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text('{\n  "a": 1,\n  oops\n}\n')
    with pytest.raises(fio.FormatError) as e:
        fio.read_json(p)
    assert e.value.line == 3


def test_plain_values():
    out = fio.plain({"a": np.int64(3), "b": np.inf, "c": np.nan, "d": np.arange(2)})
    assert out == {"a": 3, "b": "inf", "c": None, "d": [0, 1]}


def test_space_file_round_trip(tmp_path):
    sp = grid_space(2, 3, 1)
    fio.write_space(tmp_path / "g.csv", sp, seed=4)
    back = fio.read_space(tmp_path / "g.csv")
    assert np.array_equal(back.full_matrix(), sp.full_matrix())


# convert ----------------------------------------------------------------------------------------


def test_convert_graph_matrix_graph(tmp_path):
    g = random_regular_graph(12, 3, 0)
    fio.write_graph(tmp_path / "a.graph", g)
    assert main(["convert", str(tmp_path / "a.graph"), str(tmp_path / "m.csv")]) == EXIT_OK
    assert main(["convert", str(tmp_path / "m.csv"), str(tmp_path / "b.graph")]) == EXIT_OK
    back = fio.read_graph(tmp_path / "b.graph")
    assert np.array_equal(shortest_path_metric(back).full_matrix(),
                          shortest_path_metric(g).full_matrix())


def test_convert_order_bit_exact(tmp_path):
    src = tmp_path / "o.order"
    fio.write_order(src, random_order(50, 3))
    assert main(["convert", str(src), str(tmp_path / "o.json")]) == EXIT_OK
    assert main(["convert", str(tmp_path / "o.json"), str(tmp_path / "o2.order")]) == EXIT_OK
    assert (tmp_path / "o2.order").read_bytes() == src.read_bytes()


def test_convert_laminar_json(tmp_path):
    fam = filtration_for(grid_space(1, 8, 1))
    fio.write_json(tmp_path / "f.json", fam.to_json())
    assert main(["convert", str(tmp_path / "f.json"), str(tmp_path / "g.json")]) == EXIT_OK
    assert fio.read_json(tmp_path / "g.json") == fio.read_json(tmp_path / "f.json")


def test_convert_malformed_line(tmp_path, capsys):
    p = tmp_path / "bad.graph"
    p.write_text("3 2\n0 1\n1 two\n")
    assert main(["convert", str(p), str(tmp_path / "x.csv")]) == EXIT_INPUT
    diag = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
    assert diag["line"] == 3 and diag["error"] == "FormatError"


def test_convert_unknown_extension(tmp_path):
    p = tmp_path / "a.graph"
    fio.write_graph(p, path_graph(3))
    assert main(["convert", str(p), str(tmp_path / "a.xyz")]) == EXIT_INPUT


# report ------------------------------------------------------------------------------------------


def _ratio_file(path, seed):
    sp = grid_space(1, 8, 1)
    fio.write_json(path, order_ratio_exact(sp, random_order(sp, seed), 3).to_json())


def test_report_two_ratio_rows(tmp_path):
    _ratio_file(tmp_path / "a.json", 0)
    _ratio_file(tmp_path / "b.json", 1)
    text = build_report([str(tmp_path / "a.json"), str(tmp_path / "b.json")])
    rows = list(csv.reader(io.StringIO(text)))
    assert rows[0] == REPORT_COLUMNS and len(rows) == 3
    assert all(r[1] == "ratio" for r in rows[1:])


def test_report_empty_is_header_only(capsys):
    assert main(["report"]) == EXIT_OK
    assert capsys.readouterr().out == ",".join(REPORT_COLUMNS) + "\n"


def test_report_mixed_kinds_grouped(tmp_path):
    _ratio_file(tmp_path / "a.json", 0)
    payload, _ = execute(load_recipe("line_ratio"))
    fio.write_json(tmp_path / "e.json", payload)
    _ratio_file(tmp_path / "b.json", 1)
    paths = [str(tmp_path / p) for p in ("a.json", "e.json", "b.json")]
    rows = list(csv.reader(io.StringIO(build_report(paths))))[1:]
    assert [r[1] for r in rows] == ["ratio", "ratio", "experiment"]
    md = build_report(paths, "md")
    assert md.index("## ratio") < md.index("## experiment")


def test_report_schema_mismatch(tmp_path):
    fio.write_json(tmp_path / "x.json", {"kind": "nonsense"})
    assert main(["report", str(tmp_path / "x.json")]) == EXIT_INPUT
    fio.write_json(tmp_path / "y.json", {"no": "kind"})
    assert main(["report", str(tmp_path / "y.json")]) == EXIT_INPUT


# experiment specs ----------------------------------------------------------------------------------


def test_spec_round_trip():
    spec = ExperimentSpec("x", "ratio", {"type": "line", "n": 8}, {"type": "natural"},
                          {"kmax": 3}, 5, {"dir": "out"})
    again = ExperimentSpec.from_json(json.loads(json.dumps(spec.to_json())))
    assert again == spec


def test_spec_validation():
    with pytest.raises(SpecError):
        ExperimentSpec("x", "no_such_operation")
    with pytest.raises(SpecError):
        ExperimentSpec.from_json({"name": "x", "operation": "ratio", "colour": 1})
    with pytest.raises(SpecError):
        ExperimentSpec("x", "ratio", seed=1.5)


def test_every_recipe_loads():
    names = sorted(p.stem for p in recipe_dir().glob("*.json"))
    assert {"oracle", "circle", "lex", "interleave", "filtration", "wreath", "gap",
            "expander", "sphere", "cubes"} <= set(names)
    for n in names:
        assert load_recipe(n).seed == 0


# commands and exit codes -------------------------------------------------------------------------


def test_exp_circle_csv(tmp_path, capsys):
    assert main(["exp", "circle", "--n", "16", "--k", "4", "--out", str(tmp_path)]) == EXIT_OK
    files = {p.name for p in tmp_path.iterdir()}
    assert "circle.json" in files and "circle.meta.json" in files
    table = next(p for p in tmp_path.iterdir() if p.name.startswith("circle_") and
                 p.suffix == ".csv")
    rows = list(csv.DictReader(table.open()))
    vals = [float(r["or"]) for r in rows if "or" in r and r["or"]]
    assert vals and all(v <= 2 + 1e-9 for v in vals)
    assert "PASS" in capsys.readouterr().err


def test_exp_to_stdout_is_canonical(capsys):
    assert main(["exp", "circle", "--n", "16", "--k", "3"]) == EXIT_OK
    out = capsys.readouterr().out
    payload = json.loads(out)
    assert payload["kind"] == "experiment" and payload["passed"]
    assert out == fio.canonical_json(payload)
    assert "seconds" not in out


def test_run_recipe_file(tmp_path):
    spec = ExperimentSpec("mine", "ratio", {"type": "line", "n": 16}, {"type": "natural"},
                          {"kmax": 3, "limit": 1.0})
    fio.write_json(tmp_path / "r.json", spec.to_json())
    assert main(["run", str(tmp_path / "r.json"), "--out", str(tmp_path / "o")]) == EXIT_OK
    payload = fio.read_json(tmp_path / "o" / "mine.json")
    assert payload["spec"] == spec.to_json()


def test_failed_check_exit_2(tmp_path):
    spec = ExperimentSpec("strict", "ratio", {"type": "grid", "d": 2, "n": 6},
                          {"type": "lex"}, {"kmax": 2, "limit": 1.0})
    fio.write_json(tmp_path / "r.json", spec.to_json())
    assert main(["run", str(tmp_path / "r.json"), "--out", str(tmp_path)]) == 2


def test_unknown_recipe_exit_3(capsys):
    assert main(["exp", "no_such_recipe"]) == EXIT_INPUT
    assert "no recipe" in json.loads(capsys.readouterr().err.strip())["message"]


def test_budget_exit_4(capsys):
    assert main(["--budget", "1000", "exp", "lex"]) == EXIT_BUDGET
    assert "warning" in capsys.readouterr().err


def test_same_seed_same_bytes(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["exp", "circle", "--out", str(a)]) == EXIT_OK
    assert main(["exp", "circle", "--out", str(b)]) == EXIT_OK
    for p in a.iterdir():
        if not p.name.endswith(".meta.json"):
            assert p.read_bytes() == (b / p.name).read_bytes(), p.name
    assert math.isfinite(fio.read_json(a / "circle.meta.json")["seconds"])

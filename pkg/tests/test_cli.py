import json
import math

import pytest
from hypothesis import HealthCheck, given, settings, strategies as st

from wandering.cli import (
    format_record,
    main,
    parse_polynomial,
    parse_record,
    polynomial_fields,
    polynomial_from_fields,
    read_config_file,
)
from wandering.config import verify_in_V
from wandering.cubic import CubicPolynomial

OMEGA_PRIME = -2.958621655489772

scalars = st.one_of(
    st.integers(-10**9, 10**9),
    st.floats(allow_nan=False, allow_infinity=False),
    st.text(max_size=12),
    st.booleans(),
    st.none(),
)
values = st.recursive(scalars, lambda c: st.lists(c, max_size=4) | st.dictionaries(st.text(max_size=6), c, max_size=3),
                      max_leaves=10)
keys = st.text(alphabet="abcdefghijklmnopqrstuvwxyz_", min_size=1, max_size=10)


def run(capsys, *argv):
    code = main(list(argv))
    lines = [parse_record(l) for l in capsys.readouterr().out.splitlines() if l.strip()]
    return code, lines


@settings(max_examples=200, suppress_health_check=[HealthCheck.too_slow, HealthCheck.data_too_large])
@given(st.dictionaries(keys, values, max_size=6))
def test_record_roundtrip(rec):
    assert parse_record(format_record(rec)) == json.loads(json.dumps(rec))


def test_record_shape():
    line = format_record({"command": "x", "z": 1 + 2j, "v": [1, 2], "bad": math.inf})
    assert line == 'command:"x" z:[1.0,2.0] v:[1,2] bad:"inf"'


@settings(max_examples=200)
@given(st.floats(-5, 5), st.floats(-5, 5), st.floats(-5, 5), st.floats(-5, 5))
def test_polynomial_roundtrip(ar, ai, br, bi):
    f = CubicPolynomial(complex(ar, ai), complex(br, bi))
    rec = parse_record(format_record(polynomial_fields(f)))
    assert polynomial_from_fields(rec) == f


def test_reparsed_polynomial_same_checks(seed, seed_regions):
    g = polynomial_from_fields(parse_record(format_record(polynomial_fields(seed))))
    a = verify_in_V(seed, regions=seed_regions).to_records()
    b = verify_in_V(g).to_records()
    assert [r["pass"] for r in a] == [r["pass"] for r in b]


def test_parse_polynomial_specs():
    f, cfg = parse_polynomial("seed")
    assert cfg.triple == (0, 2, 1)
    g, _ = parse_polynomial("crit:1+2i,3")
    assert g.a == 1 + 2j and g.b == 3
    h, cfg = parse_polynomial("f1")
    assert cfg.triple == (2, 2, 3)
    with pytest.raises(ValueError):
        parse_polynomial("nonsense")


def test_trace_ray(capsys):
    code, lines = run(capsys, "trace-ray", "seed", "1/3", "--start", "2.0", "--end", "1e-8")
    assert code == 0 and lines[-1]["status"] == "pass"
    end = complex(*lines[-1]["end"])
    assert abs(end - OMEGA_PRIME) < 1e-5


def test_landing(capsys):
    code, lines = run(capsys, "landing", "seed", "0", "1/2")
    assert code == 0
    assert abs(complex(*lines[1]["landing"]) - (-3.958621655489772)) < 1e-5


def test_verify_seed(capsys):
    code, lines = run(capsys, "verify", "seed")
    assert code == 0
    assert all(c["pass"] for c in lines[-1]["checks"])


def test_verify_failure_exits_one(capsys):
    code, lines = run(capsys, "verify", "crit:-0.9872,-2.9586", "--cfg", "0,2,1")
    assert code == 1 and lines[-1]["status"] == "fail"


def test_pipeline_error_exits_two(capsys):
    code, lines = run(capsys, "solve-config", "2", "1", "-1", "-1")
    assert code == 2 and lines[-1]["status"] == "error"
    code, lines = run(capsys, "verify", "nonsense")
    assert code == 2


def test_solve_config_and_json(capsys):
    code = main(["solve-config", "2", "1", "-0.99", "-2.96", "--json"])
    rec = json.loads(capsys.readouterr().out.splitlines()[-1])
    assert code == 0 and rec["status"] == "pass"
    assert abs(rec["c1"][0] - 8.7534421003338) < 1e-9


def test_config_file_and_flag_priority(capsys, tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# tolerances\ntol = 1e-300\nend_potential = 1e-6\n")
    assert read_config_file(cfg) == {"tol": "1e-300", "end_potential": "1e-6"}
    code, _ = run(capsys, "solve-config", "2", "1", "-0.99", "-2.96", "--config", str(cfg))
    assert code == 2
    code, _ = run(capsys, "solve-config", "2", "1", "-0.99", "-2.96", "--config", str(cfg), "--tol", "1e-12")
    assert code == 0


def test_puzzle_files(capsys, tmp_path):
    code, lines = run(capsys, "puzzle", "seed", "3", "--out", str(tmp_path))
    assert code == 0
    assert lines[-1]["pieces"] == [2, 4, 10, 28]
    assert (tmp_path / "puzzle.csv").exists() and (tmp_path / "puzzle.svg").exists()


def test_render_bytes_stable(capsys, tmp_path):
    args = ["render", "seed", "--center", "-1.98", "--width", "5", "--pixels", "64x48", "--rays", "1/3"]
    assert main(args + ["--out", str(tmp_path / "a")]) == 0
    assert main(args + ["--out", str(tmp_path / "b"), "--threads", "3"]) == 0
    assert (tmp_path / "a" / "render.ppm").read_bytes() == (tmp_path / "b" / "render.ppm").read_bytes()


def test_nodal_seed(capsys):
    code, lines = run(capsys, "nodal", "seed", "--samples", "1024")
    assert code == 0
    assert abs(complex(*lines[-1]["exact"]) - (-0.9862072184965908)) < 1e-12


def test_loop_csv(capsys, tmp_path):
    code, _ = run(capsys, "loop", "seed", "--samples", "64", "--eps", "1e-3", "--out", str(tmp_path))
    assert code == 0 and (tmp_path / "loop.csv").exists()

import json

import numpy as np
import pytest

from singkam.cli import main
from singkam.config import ConfigError, RunConfig
from singkam.parser import CapExceeded, ParseError, parse_poly, print_poly
from singkam.series import Series, random_series

from conftest import ALPHA, PHI, vars2

GOLDEN_CFG = "configs/golden.cfg"


def test_parse_examples(S2):
    v = vars2(S2)
    f = parse_poly("2*q1*p1 - 3*l2^2 + 1.5i*t1*q2", 2, deg_cap=16, t_cap=2)
    assert f == v["q1"] * v["p1"] * 2.0 - v["l2"] ** 2 * 3.0 + v["t1"] * v["q2"] * 1.5j
    g = parse_poly("(alpha1 + t1)*q1*p1", 2, alpha=ALPHA, deg_cap=16, t_cap=2)
    assert g == v["q1"] * v["p1"] + v["t1"] * v["q1"] * v["p1"]
    assert parse_poly("(q1 + p1)^2", 2, deg_cap=16, t_cap=2) == v["q1"] ** 2 + v["q1"] * v["p1"] * 2.0 + v["p1"] ** 2
    assert parse_poly("q1 - q1", 2, deg_cap=16, t_cap=2).is_zero()


@pytest.mark.parametrize("text, pos", [("q1 +* p1", 4), ("q3", 0), ("x1*q1", 0), ("(q1 + p1", 8), ("q1 @ p1", 3)])
def test_parse_errors(text, pos):
    with pytest.raises(ParseError) as err:
        parse_poly(text, 2)
    assert err.value.pos == pos


def test_parse_cap_errors():
    with pytest.raises(CapExceeded):
        parse_poly("q1^17", 2, deg_cap=16)
    with pytest.raises(CapExceeded):
        parse_poly("t1^3", 2, t_cap=2)
    with pytest.raises(ParseError):
        parse_poly("alpha1*q1", 2)


def test_print_examples(S2):
    v = vars2(S2)
    assert print_poly(S2.zero()) == "0"
    assert print_poly(v["q1"] ** 2 * v["p1"]) == "(1.0+0.0i)*q1^2*p1"


@pytest.mark.parametrize("n", [1, 2, 3])
def test_round_trip(n):
    rng = np.random.default_rng(n)
    S = Series(n, deg_cap=12, t_cap=3)
    for _ in range(1000 // 3):
        f = random_series(rng, S, int(rng.integers(0, 12)))
        g = parse_poly(print_poly(f), n, deg_cap=12, t_cap=3)
        assert np.array_equal(f.keys, g.keys) and np.array_equal(f.coeffs, g.coeffs)


def test_config_file():
    cfg = RunConfig.from_file(GOLDEN_CFG)
    assert cfg.alpha == [1.0, PHI] and cfg.K == 3 and cfg.flow is not None
    assert cfg.flow.lambda_star is None and cfg.flow.scales == (1.0, 0.5, 0.25)
    np.testing.assert_allclose(cfg.lower_values(3), [0.1 * 3.0 ** -k for k in range(4)], rtol=1e-14)
    echo = cfg.echo()
    assert echo["alpha"][1] == PHI


@pytest.mark.parametrize("text", [
    "n = 2\nalpha = 1",
    "n = 2\nmode = fast",
    "K = 4\ndeg_cap = 16",
    "s0 = 0.9",
    "colour = blue",
    "lower_seq = geometric 0.1",
    "lower_seq = 0.1, 0.01",
    "alpha = 1, banana",
    "[run]\nn = 2\n[flow]\nt_star = 0.5, 0\nz0 = 0.1, 0.1, 0.1, 0.1",
])
def test_config_errors(text):
    with pytest.raises(ConfigError):
        RunConfig.from_text(text)


def _run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_cli_sigma(capsys):
    code, out, _ = _run(capsys, "sigma", "--alpha", "1,golden", "--kmax", "4")
    assert code == 0
    body = json.loads(out)
    np.testing.assert_allclose(body["sigma"], [PHI - 1, 2 - PHI, 2 * PHI - 3, 5 * PHI - 8, 13 - 8 * PHI], rtol=1e-14)
    code, out, _ = _run(capsys, "sigma", "--alpha", "1,golden", "--kmax", "3", "--lower", "0.9,0.9,0.9,0.9")
    assert json.loads(out)["member"] is False


def test_cli_normalize_and_kam(capsys, tmp_path):
    code, out, _ = _run(capsys, "normalize", "--config", GOLDEN_CFG, "--out", str(tmp_path / "n"))
    assert code == 0 and json.loads(out)["certificate"]["passed"]
    assert (tmp_path / "n" / "norms.csv").exists() and (tmp_path / "n" / "formal_u1.txt").exists()
    code, out, _ = _run(capsys, "kam", "--config", GOLDEN_CFG, "--out", str(tmp_path / "k"))
    body = json.loads(out)
    assert code == 0 and body["agreement"]["relative"] <= 1e-9


def test_cli_exit_codes(capsys, tmp_path):
    res = tmp_path / "res.cfg"
    res.write_text("alpha = 1, 1\nK = 2\nhamiltonian = (alpha1+t1)*q1*p1 + (alpha2+t2)*q2*p2 + 0.1*q1*p2*l1\n")
    code, _, err = _run(capsys, "normalize", "--config", str(res))
    assert code == 3 and json.loads(err)["vector"] in ([1, -1], [-1, 1])
    bad = tmp_path / "bad.cfg"
    bad.write_text("K = 4\ndeg_cap = 16\n")
    assert _run(capsys, "normalize", "--config", str(bad))[0] == 2
    syn = tmp_path / "syn.cfg"
    syn.write_text("hamiltonian = q1 +* p1\n")
    code, _, err = _run(capsys, "kam", "--config", str(syn))
    assert code == 2 and json.loads(err)["error"] == "ParseError"
    assert _run(capsys, "normalize", "--config", str(tmp_path / "missing.cfg"))[0] == 2


def test_cli_deterministic_modulo_timestamp(capsys):
    bodies = []
    for _ in range(2):
        code, out, _ = _run(capsys, "normalize", "--config", GOLDEN_CFG)
        body = json.loads(out)
        body.pop("timestamp")
        bodies.append(body)
    assert bodies[0] == bodies[1]


def test_cli_verify_flow(capsys, tmp_path):
    code, out, _ = _run(capsys, "verify-flow", "--config", GOLDEN_CFG, "--out", str(tmp_path))
    body = json.loads(out)
    assert code == 0 and body["ratio"] >= 1e3
    assert (tmp_path / "trajectory.csv").read_text().startswith("tau,")

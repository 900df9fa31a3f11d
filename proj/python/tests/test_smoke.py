from fractions import Fraction
from pathlib import Path

import pytest

import mrisk

SCENARIOS = Path(__file__).resolve().parents[2] / "scenarios"


def test_coin_endowment_hedge():
    r = mrisk.hedge(SCENARIOS / "cb1.json")
    assert r["initial_capital"] == Fraction(1, 4)
    assert r["strategy"] == [[Fraction(1, 4)] * r["outcomes"]]
    assert r["risk0"] == r["oracle_risk0"] == Fraction(1, 8)


def test_inline_scenario():
    text = """{
      "schema": 1,
      "market": {"type": "binomial", "horizon": 2, "s0": 0, "up": 1, "down": -1, "p": "1/2"},
      "death": {"type": "independent", "q": ["1/3", "1/3"], "beyond": "1/3"},
      "claim": {"term": 2, "survival": "S"}
    }"""
    r = mrisk.hedge(text)
    assert r["initial_capital"] == 0
    assert r["risk0"] == r["oracle_risk0"]


def test_securitization_reaches_oracle():
    for path in ("cb1.json", "hazard.json", "correlated.json"):
        r = mrisk.securitize(SCENARIOS / path, ["endowment", "bond"])
        assert r["model"] == "c"
        assert r["risk0"] == r["oracle_risk0"]
        assert r["risk0"] <= r["base_risk0"]


@pytest.mark.parametrize("family", ["pseudo-stopping", "independent", "f-stopping", "hazard-modulated"])
def test_random_routes_agree(family):
    for seed in range(1, 4):
        r = mrisk.random_check(seed, family, "endowment")
        assert r["routes_agree"]
        assert r["risk0"] == r["direct_risk0"] == r["oracle_risk0"]


def test_cli_exit_codes():
    code, out, _ = mrisk.cli("hedge", SCENARIOS / "cb1.json", "--emit", "xi")
    assert code == 0
    assert "xi[S],1,root|alive,0.25,1" in out
    code, _, err = mrisk.cli("hedge", SCENARIOS / "missing.json")
    assert code == 2 and err


def test_errors_map_to_python_exceptions():
    with pytest.raises(mrisk.InputError):
        mrisk.hedge('{"schema": 1, "market": ')
    with pytest.raises(mrisk.InputError):
        mrisk.random_check(1, "no-such-family")

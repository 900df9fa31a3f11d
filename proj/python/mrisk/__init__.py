"""Exact quadratic hedging of life-insurance claims on finite trees."""

from fractions import Fraction
from pathlib import Path

from . import _core
from ._core import InputError, InvariantError, ValidationError

__all__ = [
    "InputError",
    "InvariantError",
    "ValidationError",
    "cli",
    "hedge",
    "random_check",
    "securitize",
]

_RATIONAL_KEYS = {"initial_capital", "risk0", "base_risk0", "oracle_risk0", "direct_risk0"}


def _fractions(d):
    out = {}
    for key, value in d.items():
        if key in _RATIONAL_KEYS and value is not None:
            out[key] = Fraction(value)
        elif key == "strategy":
            out[key] = [[Fraction(v) for v in row] for row in value]
        else:
            out[key] = value
    return out


def _text(scenario):
    if isinstance(scenario, Path) or (isinstance(scenario, str) and not scenario.lstrip().startswith("{")):
        path = Path(scenario)
        return path.read_text(), str(path)
    return scenario, "<string>"


def cli(*args):
    """Run ``mrisk`` in-process; returns ``(exit_code, stdout, stderr)``."""
    return _core.cli([str(a) for a in args])


def hedge(scenario):
    """Hedge the claim of a scenario given as a path or JSON text."""
    text, origin = _text(scenario)
    return _fractions(_core.hedge(text, origin))


def securitize(scenario, instruments=()):
    """Hedge with the given instruments (default: the scenario's list)."""
    text, origin = _text(scenario)
    return _fractions(_core.securitize(text, list(instruments), origin))


def random_check(seed, family, shape="pure-endowment"):
    """Compare both hedging routes and the least-squares oracle on a seeded scenario."""
    return _fractions(_core.random_check(seed, family, shape))

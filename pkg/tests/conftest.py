import functools

import pytest

from trirhomb.engine import GenerationConfig, generate
from trirhomb.rules import load_default

VARIANTS = ("R28", "R12", "R6")
ALPHAS = (10, 36, 60, 90, 150)


@functools.lru_cache(maxsize=None)
def ruleset(variant, alpha):
    return load_default(variant, alpha)


@functools.lru_cache(maxsize=64)
def patch(variant, alpha, depth):
    return generate(GenerationConfig(depth, variant, alpha), ruleset(variant, alpha))


@pytest.fixture
def gen():
    return patch


def report(n, name, ok, detail=""):
    """One line per acceptance criterion, visible with -s or in the summary."""
    line = f"criterion {n:2d} {name}: {'PASS' if ok else 'FAIL'}"
    if detail:
        line += f" ({detail})"
    print(line)
    return line

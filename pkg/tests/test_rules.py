import math

import numpy as np
import pytest

from trirhomb.rules import (NotPrimitive, RuleVariant, VariantMismatch, as_variant, check_ruleset,
                            is_primitive, load_default, load_ruleset, parse_rules, perron_frequencies,
                            rules_path, serialize_rules, substitution_matrix)

from conftest import ruleset


def test_variant_properties():
    assert [v.rule_count for v in RuleVariant] == [28, 12, 6]
    assert RuleVariant.R28.rotations == (0, 3)
    assert RuleVariant.R6.flip_allowed and not RuleVariant.R12.flip_allowed
    assert as_variant("r6") is RuleVariant.R6
    with pytest.raises(ValueError):
        as_variant("R7")


@pytest.mark.parametrize("variant", ["R28", "R12", "R6"])
def test_rule_file_round_trip(variant):
    text = rules_path(variant).read_text()
    doc = parse_rules(text)
    assert parse_rules(serialize_rules(doc)) == doc


@pytest.mark.parametrize("variant", ["R28", "R12", "R6"])
def test_shipped_rules_pass(variant):
    rep = check_ruleset(ruleset(variant, 36))
    assert rep.passed, rep.lines()
    assert rep.lines()[0].endswith("violations=0")


def test_sampled_method_agrees():
    assert check_ruleset(ruleset("R6", 60), method="sample", samples=2000).passed


def test_wrong_rule_count_is_refused():
    text = rules_path("R6").read_text()
    lines = text.splitlines()
    # drop the last rule block
    last = max(i for i, s in enumerate(lines) if s.startswith("rule "))
    with pytest.raises(VariantMismatch):
        load_ruleset("\n".join(lines[:last]) + "\n", "R6", 60)


def test_missing_section():
    with pytest.raises(VariantMismatch):
        load_ruleset(rules_path("R6"), "R12", 60)


def test_broken_rule_is_reported():
    lines = rules_path("R12").read_text().splitlines()
    k = next(i for i, s in enumerate(lines) if s.strip().startswith("child="))
    # move one child by a unit edge
    s = lines[k]
    lines[k] = s.replace("at={}", "at={(0,0):1}") if "at={}" in s else s.replace("at={", "at={(1,0):3,", 1)
    rs = load_ruleset("\n".join(lines) + "\n", "R12", 60)
    rep = check_ruleset(rs)
    assert not rep.passed
    assert "violations" in rep.to_json()


def test_inflation_factor():
    for a in (10, 60, 90):
        rs = load_default("R12", a)
        assert rs.inflation_factor ** 2 == pytest.approx(7 + 4 * math.sqrt(3) * math.sin(math.radians(a)))


@pytest.mark.parametrize("variant", ["R28", "R12", "R6"])
def test_collapsed_matrix(variant):
    sm = substitution_matrix(ruleset(variant, 60))
    assert (sm.collapsed == [[7, 16], [3, 7]]).all()
    assert sm.full.sum(axis=0).min() >= 10
    ft, fr, ev = perron_frequencies(sm.collapsed)
    assert ev == pytest.approx(7 + 4 * math.sqrt(3))
    assert ft + fr == pytest.approx(1.0)
    assert ft == pytest.approx(4 / (4 + math.sqrt(3)))


def test_primitivity():
    assert is_primitive(np.array([[0, 1], [1, 1]]))
    assert not is_primitive(np.array([[1, 0], [0, 1]]))
    with pytest.raises(NotPrimitive):
        perron_frequencies([[1, 0], [0, 1]])

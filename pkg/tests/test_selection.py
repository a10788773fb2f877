"""Alpha grid search: argmin semantics, tie-breaking, oracle dominance."""

import json

import pytest

from s2rmerge.selection import (
    DEFAULT_ALPHA_GRID,
    AlphaGrid,
    EmptyHeldout,
    EvaluatorFailure,
    SelectionError,
    select_alpha_heldout,
    select_alpha_oracle,
)


def test_default_grid_has_nine_points():
    grid = AlphaGrid()
    assert grid.values == (0.0, 0.125, 0.25, 0.375, 0.5, 0.625, 0.75, 0.875, 1.0)
    assert len(DEFAULT_ALPHA_GRID) == 9


def test_grid_validation():
    with pytest.raises(SelectionError):
        AlphaGrid(())
    with pytest.raises(SelectionError):
        AlphaGrid((0.5, 0.25))
    with pytest.raises(SelectionError):
        AlphaGrid((0.0, 1.5))
    with pytest.raises(SelectionError):
        AlphaGrid((0.25, 0.25))


def test_heldout_v_shaped_objective():
    result = select_alpha_heldout(
        AlphaGrid(), "t", ["h1", "h2"], lambda a, lang: abs(a - 0.5)
    )
    assert result.chosen_alpha == 0.5
    assert result.mode == "heldout"
    assert result.heldout_languages == ["h1", "h2"]
    assert set(result.per_alpha_scores) == set(AlphaGrid().values)


def test_heldout_constant_ties_to_smallest():
    result = select_alpha_heldout(AlphaGrid(), "t", ["h1"], lambda a, lang: 0.37)
    assert result.chosen_alpha == 0.0


def test_heldout_opposing_languages_tie_to_smallest():
    # CER alpha on one language and 1-alpha on the other: mean is 0.5 everywhere
    def evaluate(alpha, lang):
        return alpha if lang == "h1" else 1.0 - alpha

    result = select_alpha_heldout(AlphaGrid(), "t", ["h1", "h2"], evaluate)
    assert result.chosen_alpha == 0.0


def test_heldout_records_all_scores():
    result = select_alpha_heldout(AlphaGrid(), "t", ["h1", "h2"], lambda a, lang: a)
    for alpha in AlphaGrid().values:
        assert result.per_alpha_scores[alpha] == {"h1": alpha, "h2": alpha}


def test_heldout_errors():
    with pytest.raises(EmptyHeldout):
        select_alpha_heldout(AlphaGrid(), "t", [], lambda a, lang: 0.0)
    with pytest.raises(SelectionError):
        select_alpha_heldout(AlphaGrid(), "t", ["t", "h"], lambda a, lang: 0.0)


def test_evaluator_failure_carries_context():
    def broken(alpha, lang):
        if alpha == 0.25 and lang == "h2":
            raise RuntimeError("boom")
        return 0.1

    with pytest.raises(EvaluatorFailure, match="alpha=0.25 language=h2"):
        select_alpha_heldout(AlphaGrid(), "t", ["h1", "h2"], broken)


def test_oracle_unique_minimum():
    result = select_alpha_oracle(AlphaGrid(), "t", lambda a: (a - 0.875) ** 2)
    assert result.chosen_alpha == 0.875
    assert result.mode == "oracle"


def test_oracle_monotone_decreasing_picks_one():
    result = select_alpha_oracle(AlphaGrid(), "t", lambda a: 1.0 - a)
    assert result.chosen_alpha == 1.0


def test_oracle_dominance():
    # oracle minimizes the target objective directly, so its target CER can
    # never exceed the held-out choice's target CER
    import random

    rng = random.Random(17)
    grid = AlphaGrid()
    for _ in range(50):
        target_curve = {a: rng.random() for a in grid.values}
        heldout_curves = {
            lang: {a: rng.random() for a in grid.values} for lang in ("h1", "h2", "h3")
        }
        heldout = select_alpha_heldout(
            grid, "t", list(heldout_curves), lambda a, lang: heldout_curves[lang][a]
        )
        oracle = select_alpha_oracle(grid, "t", lambda a: target_curve[a])
        assert target_curve[oracle.chosen_alpha] <= target_curve[heldout.chosen_alpha]


def test_chosen_alpha_always_in_grid():
    grid = AlphaGrid((0.0, 0.5, 1.0))
    result = select_alpha_heldout(grid, "t", ["h"], lambda a, lang: (a - 0.3) ** 2)
    assert result.chosen_alpha in grid.values
    assert result.chosen_alpha == 0.5


def test_result_json_serialization():
    result = select_alpha_heldout(AlphaGrid((0.0, 0.125)), "t", ["h"], lambda a, lang: a)
    obj = json.loads(result.to_json())
    assert obj["chosen_alpha"] == 0.0
    assert obj["per_alpha_scores"]["0.125"] == {"h": 0.125}

"""Grid search over the interpolation coefficient alpha.

Held-out selection scores each grid point by the mean CER over real
validation data of non-target languages, keeping model selection zero-shot
with respect to the target; the oracle variant scores directly on the
target's own validation data and exists only to bound the cost of the
zero-shot constraint. Ties always break toward the smaller alpha (the most
conservative correction).
"""

from __future__ import annotations

import json
from dataclasses import dataclass

# 0, 0.125, ..., 1.0 — endpoints included, exact binary fractions
DEFAULT_ALPHA_GRID = tuple(i / 8 for i in range(9))


class SelectionError(Exception):
    pass


class EmptyHeldout(SelectionError):
    """No candidate languages to select on."""


class EvaluatorFailure(SelectionError):
    """The evaluation callback raised; carries alpha/language context."""


@dataclass(frozen=True)
class AlphaGrid:
    values: tuple[float, ...] = DEFAULT_ALPHA_GRID

    def __post_init__(self):
        vals = tuple(float(v) for v in self.values)
        if not vals:
            raise SelectionError("alpha grid is empty")
        if any(not (0.0 <= v <= 1.0) for v in vals):
            raise SelectionError(f"grid values outside [0, 1]: {vals}")
        if any(b <= a for a, b in zip(vals, vals[1:])):
            raise SelectionError(f"grid values must be strictly increasing: {vals}")
        object.__setattr__(self, "values", vals)


@dataclass
class SelectionResult:
    chosen_alpha: float
    per_alpha_scores: dict[float, dict[str, float]]
    mode: str
    heldout_languages: list[str]

    def to_json_dict(self) -> dict:
        return {
            "chosen_alpha": self.chosen_alpha,
            "mode": self.mode,
            "heldout_languages": list(self.heldout_languages),
            "per_alpha_scores": {
                repr(a): {lang: self.per_alpha_scores[a][lang] for lang in sorted(self.per_alpha_scores[a])}
                for a in self.per_alpha_scores
            },
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), sort_keys=True, indent=2)


def _evaluate_safely(evaluate, alpha, lang):
    try:
        if lang is None:
            return float(evaluate(alpha))
        return float(evaluate(alpha, lang))
    except Exception as exc:  # noqa: BLE001 - context added, then re-raised
        where = f"alpha={alpha}" + ("" if lang is None else f" language={lang}")
        raise EvaluatorFailure(f"evaluator failed at {where}: {exc}") from exc


def select_alpha_heldout(grid: AlphaGrid, target: str, candidates, evaluate) -> SelectionResult:
    """Pick the grid alpha minimizing mean CER over held-out languages.

    ``evaluate(alpha, language)`` must return the CER of the merge built for
    that alpha, evaluated on the language's real validation data. The target
    itself must not appear among the candidates.
    """
    candidates = list(candidates)
    if not candidates:
        raise EmptyHeldout("held-out candidate list is empty")
    if target in candidates:
        raise SelectionError(f"target {target!r} cannot be part of its own held-out set")
    per_alpha: dict[float, dict[str, float]] = {}
    chosen = None
    best_mean = None
    for alpha in grid.values:
        scores = {lang: _evaluate_safely(evaluate, alpha, lang) for lang in candidates}
        per_alpha[alpha] = scores
        mean = sum(scores[lang] for lang in candidates) / len(candidates)
        if best_mean is None or mean < best_mean:
            best_mean = mean
            chosen = alpha
    return SelectionResult(
        chosen_alpha=chosen,
        per_alpha_scores=per_alpha,
        mode="heldout",
        heldout_languages=candidates,
    )


def select_alpha_oracle(grid: AlphaGrid, target: str, evaluate) -> SelectionResult:
    """Pick the grid alpha minimizing the target's own validation CER."""
    per_alpha: dict[float, dict[str, float]] = {}
    chosen = None
    best = None
    for alpha in grid.values:
        score = _evaluate_safely(evaluate, alpha, None)
        per_alpha[alpha] = {target: score}
        if best is None or score < best:
            best = score
            chosen = alpha
    return SelectionResult(
        chosen_alpha=chosen,
        per_alpha_scores=per_alpha,
        mode="oracle",
        heldout_languages=[],
    )

"""Task-vector algebra: differences, displacement transfer, weighted merges.

A task vector is the elementwise difference between a fine-tuned checkpoint
and its ancestor. Subtracting a synthetic-data task vector from a real-data
task vector isolates the synthetic-to-real displacement for one source
domain; that displacement can then be added (scaled by an interpolation
coefficient alpha and a per-source importance weight beta) to a target model
that has only seen synthetic data.

All arithmetic runs in float64 and accumulates multi-source sums per element
in lexicographic source order, so identical inputs always produce bitwise
identical outputs.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .checkpoint import CheckpointError, ParameterSet, check_compatible

BETA_MODES = ("unit", "uniform", "kl", "hellinger", "jaccard")
SIMILARITY_MODES = ("kl", "hellinger", "jaccard")


class AlphaOutOfRange(CheckpointError):
    """alpha must lie in [0, 1]."""


class InvalidBeta(CheckpointError):
    """beta weights must be finite and non-negative."""


class SourceSetMismatch(CheckpointError):
    """Provided displacement set does not match the plan's source set."""


class MissingSimilarity(CheckpointError):
    """A required (source, target) pair is absent from the similarity matrix."""


class TaskVector:
    """ParameterSet-shaped difference between two compatible checkpoints.

    Entries are float64; ``dtype`` records the storage dtype of the
    checkpoints the vector was derived from, so compatibility checks flow
    through unchanged. Unlike ParameterSet, values are not snapped to f32
    precision — narrowing happens only if the vector is written to disk.
    """

    __slots__ = ("entries", "dtype", "provenance")

    def __init__(
        self,
        entries: dict[str, np.ndarray],
        dtype: str = "f64",
        provenance: tuple[str, str] = ("", ""),
    ):
        normalized = {}
        for name in sorted(entries):
            arr = np.array(entries[name], dtype=np.float64, order="C")
            arr.flags.writeable = False
            normalized[name] = arr
        self.entries = normalized
        self.dtype = dtype
        self.provenance = (str(provenance[0]), str(provenance[1]))

    def names(self) -> list[str]:
        return list(self.entries)

    def __getitem__(self, name: str) -> np.ndarray:
        return self.entries[name]

    def __repr__(self) -> str:
        return f"TaskVector({len(self.entries)} tensors, {self.provenance[0]!r} - {self.provenance[1]!r})"

    def to_parameter_set(self) -> ParameterSet:
        """Wrap as a ParameterSet for serialization (role 'task_vector')."""
        return ParameterSet(
            self.entries,
            dtype=self.dtype,
            metadata={
                "role": "task_vector",
                "minuend": self.provenance[0],
                "subtrahend": self.provenance[1],
            },
        )

    @classmethod
    def from_parameter_set(cls, p: ParameterSet) -> "TaskVector":
        return cls(
            dict(p.entries),
            dtype=p.dtype,
            provenance=(p.metadata.get("minuend", ""), p.metadata.get("subtrahend", "")),
        )


@dataclass(frozen=True)
class MergePlan:
    """Declarative description of one analogy merge for a target language."""

    target: str
    sources: tuple[str, ...]
    beta_mode: str
    betas: dict[str, float]
    alpha: float

    def __post_init__(self):
        if not self.sources:
            raise SourceSetMismatch("merge plan needs at least one source")
        if self.target in self.sources:
            raise SourceSetMismatch(f"target {self.target!r} cannot be one of its own sources")
        if self.beta_mode not in BETA_MODES:
            raise InvalidBeta(f"unknown beta mode {self.beta_mode!r}; expected one of {BETA_MODES}")
        if set(self.betas) != set(self.sources):
            raise SourceSetMismatch(
                f"betas keyed by {sorted(self.betas)} but sources are {sorted(self.sources)}"
            )
        for lang, b in self.betas.items():
            if not math.isfinite(b) or b < 0:
                raise InvalidBeta(f"beta for {lang!r} is {b}; must be finite and >= 0")
        if not (0.0 <= self.alpha <= 1.0):
            raise AlphaOutOfRange(f"alpha {self.alpha} outside [0, 1]")
        object.__setattr__(self, "sources", tuple(self.sources))


def task_vector(fine_tuned: ParameterSet, ancestor: ParameterSet) -> TaskVector:
    """Difference fine_tuned - ancestor, recording provenance ids."""
    check_compatible(fine_tuned, ancestor)
    entries = {
        name: fine_tuned.entries[name] - ancestor.entries[name] for name in fine_tuned.entries
    }
    return TaskVector(
        entries,
        dtype=fine_tuned.dtype,
        provenance=(fine_tuned.metadata.get("id", ""), ancestor.metadata.get("id", "")),
    )


def scale(tv: TaskVector, factor: float) -> TaskVector:
    """Elementwise scaling of a task vector."""
    if not math.isfinite(factor):
        raise InvalidBeta(f"scale factor {factor} is not finite")
    return TaskVector(
        {name: factor * arr for name, arr in tv.entries.items()},
        dtype=tv.dtype,
        provenance=tv.provenance,
    )


def s2r_delta(real_tv: TaskVector, syn_tv: TaskVector) -> TaskVector:
    """Synthetic-to-real displacement: real task vector minus synthetic one.

    Identically equal (up to rounding) to the direct difference between the
    real and synthetic checkpoints, since the shared ancestor cancels.
    """
    check_compatible(real_tv, syn_tv)
    entries = {name: real_tv.entries[name] - syn_tv.entries[name] for name in real_tv.entries}
    return TaskVector(
        entries,
        dtype=real_tv.dtype,
        provenance=(real_tv.provenance[0], syn_tv.provenance[0]),
    )


def _validate_alpha(alpha: float) -> None:
    if not math.isfinite(alpha) or not (0.0 <= alpha <= 1.0):
        raise AlphaOutOfRange(f"alpha {alpha} outside [0, 1]")


def apply_single_analogy(
    target_syn: ParameterSet, delta: TaskVector, alpha: float, beta: float
) -> ParameterSet:
    """target_syn + alpha * beta * delta, tagged with role 'merged'.

    alpha == 0 returns the target checkpoint unchanged (bitwise), for any
    beta.
    """
    _validate_alpha(alpha)
    if not math.isfinite(beta) or beta < 0:
        raise InvalidBeta(f"beta {beta}; must be finite and >= 0")
    check_compatible(target_syn, delta)
    if alpha == 0.0:
        return target_syn.with_metadata(role="merged")
    entries = {
        # grouped as alpha * (beta * delta) to match the multi-source path bit for bit
        name: target_syn.entries[name] + alpha * (beta * delta.entries[name])
        for name in target_syn.entries
    }
    meta = dict(target_syn.metadata)
    meta["role"] = "merged"
    return ParameterSet(entries, dtype=target_syn.dtype, metadata=meta)


def apply_multi_analogy(
    target_syn: ParameterSet, deltas: dict[str, TaskVector], plan: MergePlan
) -> ParameterSet:
    """target_syn + alpha * sum_s beta[s] * delta[s], per element.

    The per-element sum runs in lexicographic source order before the target
    is touched, making the result independent of the order ``deltas`` was
    built in.
    """
    _validate_alpha(plan.alpha)
    if set(deltas) != set(plan.sources):
        raise SourceSetMismatch(
            f"deltas provided for {sorted(deltas)} but plan sources are {sorted(plan.sources)}"
        )
    ordered = sorted(plan.sources)
    for lang in ordered:
        check_compatible(target_syn, deltas[lang])
    if plan.alpha == 0.0:
        return target_syn.with_metadata(role="merged")
    entries = {}
    for name, base in target_syn.entries.items():
        acc = np.zeros_like(base)
        for lang in ordered:
            acc += plan.betas[lang] * deltas[lang].entries[name]
        entries[name] = base + plan.alpha * acc
    meta = dict(target_syn.metadata)
    meta["role"] = "merged"
    return ParameterSet(entries, dtype=target_syn.dtype, metadata=meta)


def resolve_betas(mode: str, sources, target: str, sim=None) -> dict[str, float]:
    """Per-source beta weights for one merge.

    unit    -> 1.0 each
    uniform -> 1/len(sources) each
    kl/hellinger/jaccard -> similarity score(source, target) read from
    ``sim``, used raw (no renormalization across sources; the grid-searched
    alpha absorbs overall scale).
    """
    sources = list(sources)
    if mode == "unit":
        return {s: 1.0 for s in sources}
    if mode == "uniform":
        return {s: 1.0 / len(sources) for s in sources}
    if mode in SIMILARITY_MODES:
        if sim is None:
            raise MissingSimilarity(f"beta mode {mode!r} requires a similarity matrix")
        return {s: sim.score(s, target) for s in sources}
    raise InvalidBeta(f"unknown beta mode {mode!r}; expected one of {BETA_MODES}")


def best_source(sources, target: str, sim) -> str:
    """argmax over sources of score(source, target); ties break to the
    lexicographically smallest language id."""
    ranked = sorted(sources)
    if not ranked:
        raise SourceSetMismatch("no candidate sources")
    best = ranked[0]
    best_score = sim.score(best, target)
    for s in ranked[1:]:
        sc = sim.score(s, target)
        if sc > best_score:
            best, best_score = s, sc
    return best


def parse_merge_plan(obj: dict, sim=None) -> MergePlan:
    """Build a MergePlan from its JSON config form.

    Expected shape:
    {"target": str, "sources": [str...], "beta_mode": str,
     "alpha": {"mode": "fixed"|"heldout"|"oracle", "value": num?},
     "similarity_file": str?}

    The alpha value must already be resolved (present) whatever the mode;
    heldout/oracle modes are selected upstream and recorded here for
    provenance.
    """
    target = obj["target"]
    sources = tuple(obj["sources"])
    beta_mode = obj.get("beta_mode", "unit")
    alpha_spec = obj.get("alpha", {})
    if not isinstance(alpha_spec, dict) or "mode" not in alpha_spec:
        raise AlphaOutOfRange('plan "alpha" must be {"mode": ..., "value": ...}')
    if "value" not in alpha_spec or alpha_spec["value"] is None:
        raise AlphaOutOfRange(
            f'alpha mode {alpha_spec["mode"]!r} has no resolved "value"; '
            "run selection first and record the chosen alpha"
        )
    betas = resolve_betas(beta_mode, sources, target, sim=sim)
    return MergePlan(
        target=target,
        sources=sources,
        beta_mode=beta_mode,
        betas=betas,
        alpha=float(alpha_spec["value"]),
    )


def merge_plan_sidecar(plan: MergePlan) -> str:
    """JSON record of the resolved plan, written next to merged checkpoints."""
    return json.dumps(
        {
            "target": plan.target,
            "sources": list(plan.sources),
            "beta_mode": plan.beta_mode,
            "betas": {k: plan.betas[k] for k in sorted(plan.betas)},
            "alpha": plan.alpha,
        },
        sort_keys=True,
        indent=2,
    )

"""Character n-gram language profiles and pairwise similarity scores.

Profiles count every contiguous length-n character window inside each corpus
line (windows never cross line boundaries, whitespace counts as an ordinary
character) for orders 1..5 by default. Three pairwise scores weight merge
sources:

  kl         averaged per-order KL divergence, mapped to a [0,1] similarity
             by dividing by the largest divergence over all ordered language
             pairs and subtracting from 1
  hellinger  1 - (1/sqrt(2)) * L2 distance between the square roots of the
             concatenated per-order distributions (each order scaled by
             1/num_orders so the concatenation is itself a distribution)
  jaccard    vocabulary overlap: |intersection| / |union| of the pooled
             per-order n-gram sets, frequency-blind

KL smoothing: n-grams present in one profile but absent from the other get
probability ``epsilon`` (default 1e-10) on the absent side, after which that
side is renormalized; this keeps divergences finite while preserving their
ordering. KL uses natural log (the base cancels under max-normalization).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

METRICS = ("kl", "hellinger", "jaccard")

DEFAULT_ORDERS = (1, 2, 3, 4, 5)
DEFAULT_EPSILON = 1e-10


class LangSimError(Exception):
    """Base class for profile and similarity errors."""


class EmptyCorpus(LangSimError):
    """No line of the corpus yields a single n-gram for some requested order."""


class OrderMismatch(LangSimError):
    """Profiles being compared were built with different n-gram orders."""


class DegenerateCorpus(LangSimError):
    """All pairwise divergences are zero; max-normalization is undefined."""


@dataclass
class NgramProfile:
    """Per-language character n-gram frequency distributions."""

    language: str
    orders: tuple[int, ...]
    dists: dict[int, dict[str, float]]
    total_counts: dict[int, int]
    vocab: dict[int, frozenset[str]] = field(default_factory=dict)

    def __post_init__(self):
        if not self.vocab:
            self.vocab = {n: frozenset(self.dists[n]) for n in self.orders}


def build_profile(lines, language: str, orders=DEFAULT_ORDERS) -> NgramProfile:
    """Count n-gram windows over an iterable of corpus lines.

    Each line is treated as an independent sample; only trailing newline
    characters are stripped. Deterministic for a given corpus and invariant
    to line order.
    """
    orders = tuple(orders)
    if not orders or any((not isinstance(n, int)) or n < 1 for n in orders):
        raise OrderMismatch(f"orders must be positive integers, got {orders!r}")
    counts: dict[int, dict[str, int]] = {n: {} for n in orders}
    for raw in lines:
        line = raw.rstrip("\r\n")
        m = len(line)
        for n in orders:
            bucket = counts[n]
            for i in range(m - n + 1):
                gram = line[i : i + n]
                bucket[gram] = bucket.get(gram, 0) + 1
    dists: dict[int, dict[str, float]] = {}
    totals: dict[int, int] = {}
    for n in orders:
        total = sum(counts[n].values())
        if total == 0:
            raise EmptyCorpus(f"corpus for {language!r} has no n-grams of order {n}")
        totals[n] = total
        dists[n] = {g: c / total for g, c in sorted(counts[n].items())}
    return NgramProfile(language=language, orders=orders, dists=dists, total_counts=totals)


def _require_same_orders(a: NgramProfile, b: NgramProfile) -> None:
    if a.orders != b.orders:
        raise OrderMismatch(f"orders {a.orders} vs {b.orders}")


def kl_similarity(a: NgramProfile, b: NgramProfile, epsilon: float = DEFAULT_EPSILON) -> float:
    """Raw KL divergence D(a || b) averaged over n-gram orders, in nats.

    Not symmetric; matrix assembly turns these into bounded scores.
    """
    _require_same_orders(a, b)
    if not (epsilon > 0):
        raise LangSimError(f"epsilon must be positive, got {epsilon}")
    per_order = []
    for n in a.orders:
        pa = a.dists[n]
        pb = b.dists[n]
        absent = len(a.vocab[n] - b.vocab[n])
        denom = 1.0 + epsilon * absent
        div = 0.0
        # iterate in sorted gram order so float accumulation is reproducible
        for gram in sorted(pa):
            p = pa[gram]
            q = pb.get(gram, epsilon) / denom
            div += p * math.log(p / q)
        # KL is non-negative; guard against rounding pushing a near-zero
        # divergence fractionally below 0, which would corrupt max-normalization
        per_order.append(max(0.0, div))
    return sum(per_order) / len(per_order)


def hellinger_similarity(a: NgramProfile, b: NgramProfile) -> float:
    """Bounded [0,1] similarity from the Hellinger distance between the
    concatenated per-order distributions. Symmetric; 1 iff identical."""
    _require_same_orders(a, b)
    num_orders = len(a.orders)
    sq = 0.0
    for n in a.orders:
        pa = a.dists[n]
        pb = b.dists[n]
        for gram in sorted(a.vocab[n] | b.vocab[n]):
            ra = math.sqrt(pa.get(gram, 0.0) / num_orders)
            rb = math.sqrt(pb.get(gram, 0.0) / num_orders)
            sq += (ra - rb) ** 2
    # disjoint supports give sq == 2 up to rounding; keep the score in [0, 1]
    return min(1.0, max(0.0, 1.0 - math.sqrt(sq) / math.sqrt(2.0)))


def jaccard_similarity(a: NgramProfile, b: NgramProfile) -> float:
    """Vocabulary intersection-over-union, pooled across orders.

    Grams are tagged with their order so equal strings from different orders
    never collide. Frequency-blind: duplicating corpus lines changes nothing.
    """
    _require_same_orders(a, b)
    va = {(n, g) for n in a.orders for g in a.vocab[n]}
    vb = {(n, g) for n in b.orders for g in b.vocab[n]}
    union = len(va | vb)
    if union == 0:
        return 1.0
    return len(va & vb) / union


@dataclass
class SimilarityMatrix:
    """Pairwise language scores for one metric, plus raw KL divergences."""

    metric: str
    languages: list[str]
    scores: np.ndarray
    raw_divergences: np.ndarray | None = None
    degenerate: bool = False

    def __post_init__(self):
        self._index = {lang: i for i, lang in enumerate(self.languages)}

    def score(self, source: str, target: str) -> float:
        from .task_arith import MissingSimilarity

        try:
            return float(self.scores[self._index[source], self._index[target]])
        except KeyError as exc:
            raise MissingSimilarity(
                f"pair ({source!r}, {target!r}) absent from {self.metric} matrix "
                f"over {self.languages}"
            ) from exc

    def to_tsv(self) -> str:
        lines = [f"# metric: {self.metric}"]
        if self.degenerate:
            lines.append("# degenerate: true")
        lines.append("\t".join([""] + self.languages))
        for i, lang in enumerate(self.languages):
            row = [lang] + [f"{self.scores[i, j]:.6f}" for j in range(len(self.languages))]
            lines.append("\t".join(row))
        return "\n".join(lines) + "\n"

    def write_tsv(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.to_tsv())

    @classmethod
    def from_tsv(cls, path) -> "SimilarityMatrix":
        with open(path, "r", encoding="utf-8") as fh:
            lines = [ln.rstrip("\n") for ln in fh if ln.strip()]
        metric = "unknown"
        degenerate = False
        body = []
        for ln in lines:
            if ln.startswith("# metric:"):
                metric = ln.split(":", 1)[1].strip()
            elif ln.startswith("# degenerate:"):
                degenerate = ln.split(":", 1)[1].strip() == "true"
            elif not ln.startswith("#"):
                body.append(ln)
        if not body:
            raise LangSimError(f"{path}: no matrix body")
        header = body[0].split("\t")
        languages = header[1:]
        scores = np.zeros((len(languages), len(languages)))
        for i, ln in enumerate(body[1:]):
            cells = ln.split("\t")
            scores[i, :] = [float(c) for c in cells[1:]]
        return cls(metric=metric, languages=languages, scores=scores, degenerate=degenerate)


def build_kl_matrix(profiles, epsilon: float = DEFAULT_EPSILON) -> SimilarityMatrix:
    """Assemble the bounded KL similarity matrix from raw divergences.

    scores[i][j] = 1 - D(i,j) / max over ordered pairs i != j; the pair
    attaining the max therefore scores exactly 0, and diagonals are 1. If
    every pairwise divergence is 0 the matrix degenerates to all ones and is
    flagged instead of raising.
    """
    profiles = list(profiles)
    if len(profiles) < 2:
        raise LangSimError("need at least two profiles to normalize KL scores")
    langs = [p.language for p in profiles]
    k = len(profiles)
    raw = np.zeros((k, k))
    for i in range(k):
        for j in range(k):
            if i != j:
                raw[i, j] = kl_similarity(profiles[i], profiles[j], epsilon)
    max_div = float(raw.max())
    scores = np.ones((k, k))
    if max_div == 0.0:
        return SimilarityMatrix(
            metric="kl", languages=langs, scores=scores, raw_divergences=raw, degenerate=True
        )
    for i in range(k):
        for j in range(k):
            if i != j:
                scores[i, j] = 1.0 - raw[i, j] / max_div
    return SimilarityMatrix(metric="kl", languages=langs, scores=scores, raw_divergences=raw)


def build_matrix(profiles, metric: str, epsilon: float = DEFAULT_EPSILON) -> SimilarityMatrix:
    """Pairwise similarity matrix for one of the supported metrics."""
    if metric == "kl":
        return build_kl_matrix(profiles, epsilon)
    if metric not in METRICS:
        raise LangSimError(f"unknown metric {metric!r}; expected one of {METRICS}")
    fn = hellinger_similarity if metric == "hellinger" else jaccard_similarity
    profiles = list(profiles)
    if len(profiles) < 2:
        raise LangSimError("need at least two profiles")
    langs = [p.language for p in profiles]
    k = len(profiles)
    scores = np.ones((k, k))
    for i in range(k):
        for j in range(i + 1, k):
            s = fn(profiles[i], profiles[j])
            scores[i, j] = s
            scores[j, i] = s
    return SimilarityMatrix(metric=metric, languages=langs, scores=scores)

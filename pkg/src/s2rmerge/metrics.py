"""Character and word error rates over Levenshtein edit distance.

Rates are corpus-level micro-averages: total edit operations divided by
total reference length, so values above 1.0 are possible when hypotheses
run much longer than references. Characters are Unicode scalar values with
no normalization applied; words are maximal runs of non-whitespace.
"""

from __future__ import annotations

import csv
import json
import os
from dataclasses import dataclass, asdict


class MetricsError(Exception):
    pass


class LengthMismatch(MetricsError):
    """Hypothesis and reference lists have different lengths."""


class EmptyReferenceCorpus(MetricsError):
    """Total reference length is zero; the micro-average is undefined."""


def edit_distance(a, b) -> int:
    """Minimal number of single-symbol insertions, deletions, and
    substitutions transforming ``a`` into ``b``.

    Accepts any indexable symbol sequences (strings, lists of words).
    """
    # shared prefixes/suffixes never participate in an optimal edit script
    la, lb = len(a), len(b)
    start = 0
    while start < la and start < lb and a[start] == b[start]:
        start += 1
    end_a, end_b = la, lb
    while end_a > start and end_b > start and a[end_a - 1] == b[end_b - 1]:
        end_a -= 1
        end_b -= 1
    a = a[start:end_a]
    b = b[start:end_b]
    if not a:
        return len(b)
    if not b:
        return len(a)
    if len(a) < len(b):
        a, b = b, a
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, start=1):
        cur = [i]
        append = cur.append
        p = prev
        for j, cb in enumerate(b, start=1):
            cost = p[j - 1] if ca == cb else p[j - 1] + 1
            dele = p[j] + 1
            ins = cur[j - 1] + 1
            if dele < cost:
                cost = dele
            if ins < cost:
                cost = ins
            append(cost)
        prev = cur
    return prev[-1]


@dataclass(frozen=True)
class RateFragment:
    """Edit totals for one corpus; ``rate`` is the micro-average."""

    total_edits: int
    total_ref_units: int

    @property
    def rate(self) -> float:
        return self.total_edits / self.total_ref_units


def _corpus_edits(hypotheses, references, tokenize) -> RateFragment:
    if len(hypotheses) != len(references):
        raise LengthMismatch(
            f"{len(hypotheses)} hypotheses vs {len(references)} references"
        )
    edits = 0
    ref_units = 0
    for hyp, ref in zip(hypotheses, references):
        h, r = tokenize(hyp), tokenize(ref)
        edits += edit_distance(h, r)
        ref_units += len(r)
    if ref_units == 0:
        raise EmptyReferenceCorpus("references contain no units to score against")
    return RateFragment(edits, ref_units)


def cer(hypotheses, references) -> RateFragment:
    """Character error rate fragment over Unicode scalar sequences."""
    return _corpus_edits(hypotheses, references, lambda s: s)


def wer(hypotheses, references) -> RateFragment:
    """Word error rate fragment; words split on runs of whitespace."""
    return _corpus_edits(hypotheses, references, lambda s: s.split())


@dataclass
class EvalReport:
    """Full evaluation record for one (dataset, model) pair."""

    dataset: str
    model: str
    num_samples: int
    cer: float
    wer: float
    total_char_edits: int
    total_ref_chars: int
    total_word_edits: int
    total_ref_words: int

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)


def evaluate(hypotheses, references, dataset: str = "", model: str = "") -> EvalReport:
    """CER and WER for aligned hypothesis/reference lists."""
    c = cer(hypotheses, references)
    w = wer(hypotheses, references)
    return EvalReport(
        dataset=dataset,
        model=model,
        num_samples=len(references),
        cer=c.rate,
        wer=w.rate,
        total_char_edits=c.total_edits,
        total_ref_chars=c.total_ref_units,
        total_word_edits=w.total_edits,
        total_ref_words=w.total_ref_units,
    )


CSV_FIELDS = [
    "dataset",
    "model",
    "num_samples",
    "cer",
    "wer",
    "total_char_edits",
    "total_ref_chars",
    "total_word_edits",
    "total_ref_words",
]


def append_report_csv(report: EvalReport, path) -> None:
    """Append one report row to a CSV, writing the header on first use."""
    new_file = not os.path.exists(path) or os.path.getsize(path) == 0
    with open(path, "a", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=CSV_FIELDS)
        if new_file:
            writer.writeheader()
        writer.writerow(report.to_dict())

"""Edit distance and CER/WER against a brute-force oracle."""

import random

import pytest

from s2rmerge.metrics import (
    EmptyReferenceCorpus,
    LengthMismatch,
    append_report_csv,
    cer,
    edit_distance,
    evaluate,
    wer,
)


def brute_force_distance(a, b):
    """Memoization-free recursive edit distance; exponential, inputs <= 8."""
    if not a:
        return len(b)
    if not b:
        return len(a)
    if a[0] == b[0]:
        return brute_force_distance(a[1:], b[1:])
    return 1 + min(
        brute_force_distance(a[1:], b),
        brute_force_distance(a, b[1:]),
        brute_force_distance(a[1:], b[1:]),
    )


def random_pairs(count, rng, max_len=8, alphabet="abcd"):
    pairs = []
    for _ in range(count):
        la, lb = rng.randint(0, max_len), rng.randint(0, max_len)
        a = "".join(rng.choice(alphabet) for _ in range(la))
        b = "".join(rng.choice(alphabet) for _ in range(lb))
        pairs.append((a, b))
    return pairs


def test_edit_distance_hand_examples():
    assert edit_distance("abc", "abc") == 0
    assert edit_distance("", "ab") == 2
    # full DP table for kitten/sitting gives 3 (s/k, i/e, +g)
    assert edit_distance("kitten", "sitting") == 3


def test_edit_distance_matches_brute_force():
    rng = random.Random(1234)
    for a, b in random_pairs(300, rng):
        assert edit_distance(a, b) == brute_force_distance(a, b), (a, b)


def test_edit_distance_symmetry_and_bounds():
    rng = random.Random(99)
    for a, b in random_pairs(200, rng):
        d = edit_distance(a, b)
        assert d == edit_distance(b, a)
        assert (d == 0) == (a == b)
        assert d <= max(len(a), len(b))


def test_edit_distance_triangle_inequality():
    rng = random.Random(7)
    strings = ["".join(rng.choice("abcd") for _ in range(rng.randint(0, 8))) for _ in range(60)]
    for _ in range(300):
        a, b, c = rng.choice(strings), rng.choice(strings), rng.choice(strings)
        assert edit_distance(a, c) <= edit_distance(a, b) + edit_distance(b, c)


def test_edit_distance_on_word_lists():
    assert edit_distance(["a", "b"], ["a", "c"]) == 1
    assert edit_distance([], ["x"]) == 1


def test_cer_hand_examples():
    assert cer(["abc", "xy"], ["abc", "xy"]).rate == 0.0
    # one substitution over 3 reference characters
    assert cer(["axc"], ["abc"]).rate == pytest.approx(1 / 3)
    # two insertions over 2 reference characters
    assert cer(["abcd"], ["ab"]).rate == 1.0


def test_wer_hand_examples():
    assert wer(["the cat sat"], ["the cat sat"]).rate == 0.0
    assert wer(["the cat sat"], ["the dog sat"]).rate == pytest.approx(1 / 3)
    assert wer(["a b c d"], ["a b"]).rate == 1.0


def test_rates_can_exceed_one():
    assert cer(["aaaaaa"], ["b"]).rate > 1.0
    assert wer(["x y z w"], ["q"]).rate > 1.0


def test_cer_is_corpus_micro_average_and_order_invariant():
    hyps = ["abc", "a", "zzzz"]
    refs = ["abd", "ab", "zz"]
    frag = cer(hyps, refs)
    assert frag.total_edits == 1 + 1 + 2
    assert frag.total_ref_units == 3 + 2 + 2
    reordered = cer(list(reversed(hyps)), list(reversed(refs)))
    assert frag == reordered


def test_cer_micro_average_matches_per_pair_oracle():
    rng = random.Random(5)
    hyps, refs = [], []
    for a, b in random_pairs(120, rng):
        hyps.append(a)
        refs.append(b)
    refs = [r if r else "x" for r in refs]
    frag = cer(hyps, refs)
    total = sum(brute_force_distance(h, r) for h, r in zip(hyps, refs))
    assert frag.total_edits == total
    assert frag.rate == total / sum(len(r) for r in refs)


def test_error_conditions():
    with pytest.raises(LengthMismatch):
        cer(["a"], ["a", "b"])
    with pytest.raises(EmptyReferenceCorpus):
        cer(["a"], [""])
    with pytest.raises(EmptyReferenceCorpus):
        wer(["word"], ["   "])


def test_whitespace_tokenization():
    # runs of arbitrary whitespace collapse; leading/trailing ignored
    assert wer(["  a\tb  "], ["a b"]).rate == 0.0


def test_evaluate_report_fields():
    report = evaluate(["axc", "ab"], ["abc", "ab"], dataset="toy", model="m1")
    assert report.num_samples == 2
    assert report.cer == report.total_char_edits / report.total_ref_chars
    assert report.wer == report.total_word_edits / report.total_ref_words
    assert report.dataset == "toy" and report.model == "m1"
    assert '"cer"' in report.to_json()


def test_append_report_csv(tmp_path):
    path = tmp_path / "sweep.csv"
    report = evaluate(["a"], ["a"], dataset="d", model="m")
    append_report_csv(report, path)
    append_report_csv(report, path)
    lines = path.read_text().strip().splitlines()
    assert lines[0].startswith("dataset,model,")
    assert len(lines) == 3

"""N-gram profiles and the three similarity metrics.

Derived expectations are computed inline from the defining formulas (the
independent oracle), never copied from implementation output.
"""

import math
import random

import numpy as np
import pytest

from s2rmerge.lang_sim import (
    DEFAULT_EPSILON,
    EmptyCorpus,
    OrderMismatch,
    SimilarityMatrix,
    build_kl_matrix,
    build_matrix,
    build_profile,
    hellinger_similarity,
    jaccard_similarity,
    kl_similarity,
)


def test_build_profile_single_line():
    p = build_profile(["aa"], "x", orders=(1,))
    assert p.dists[1] == {"a": 1.0}
    assert p.total_counts[1] == 2


def test_build_profile_two_orders():
    p = build_profile(["ab"], "x", orders=(1, 2))
    assert p.dists[1] == {"a": 0.5, "b": 0.5}
    assert p.dists[2] == {"ab": 1.0}


def test_build_profile_abab_windows():
    # windows of "abab" at order 2: ab, ba, ab
    p = build_profile(["abab"], "x", orders=(2,))
    assert p.dists[2]["ab"] == pytest.approx(2 / 3)
    assert p.dists[2]["ba"] == pytest.approx(1 / 3)


def test_profile_probabilities_sum_to_one():
    rng = random.Random(0)
    lines = ["".join(rng.choice("abcde ") for _ in range(rng.randint(5, 30))) for _ in range(50)]
    p = build_profile(lines, "x", orders=(1, 2, 3))
    for n in p.orders:
        assert sum(p.dists[n].values()) == pytest.approx(1.0, abs=1e-9)
        assert p.vocab[n] == frozenset(p.dists[n])
        assert all(len(g) == n for g in p.vocab[n])
        assert all(prob > 0 for prob in p.dists[n].values())


def test_profile_line_order_invariance():
    lines = ["abcd", "bcda", "xyz"]
    a = build_profile(lines, "x", orders=(1, 2))
    b = build_profile(list(reversed(lines)), "x", orders=(1, 2))
    assert a.dists == b.dists


def test_ngrams_do_not_cross_lines():
    p = build_profile(["ab", "cd"], "x", orders=(2,))
    assert set(p.dists[2]) == {"ab", "cd"}  # no "bc"


def test_whitespace_counts_as_character():
    p = build_profile(["a b"], "x", orders=(1,))
    assert p.dists[1][" "] == pytest.approx(1 / 3)


def test_empty_corpus_errors():
    with pytest.raises(EmptyCorpus):
        build_profile([], "x", orders=(1,))
    with pytest.raises(EmptyCorpus):
        build_profile(["", ""], "x", orders=(1,))
    # lines exist but none long enough for order 5
    with pytest.raises(EmptyCorpus, match="order 5"):
        build_profile(["abc", "de"], "x", orders=(1, 5))


def two_point_profiles():
    # order-1 distributions {a: 1/2, b: 1/2} and {a: 3/4, b: 1/4}
    pa = build_profile(["ab", "ab"], "pa", orders=(1,))
    pb = build_profile(["aaab"], "pb", orders=(1,))
    assert pa.dists[1] == {"a": 0.5, "b": 0.5}
    assert pb.dists[1] == {"a": 0.75, "b": 0.25}
    return pa, pb


def test_kl_self_divergence_is_zero():
    pa, _ = two_point_profiles()
    assert kl_similarity(pa, pa) == 0.0


def test_kl_two_point_value():
    pa, pb = two_point_profiles()
    expected = 0.5 * math.log(0.5 / 0.75) + 0.5 * math.log(0.5 / 0.25)
    assert kl_similarity(pa, pb) == pytest.approx(expected, rel=1e-12)
    assert expected == pytest.approx(0.143841, abs=1e-6)


def test_kl_is_asymmetric():
    pa, pb = two_point_profiles()
    reverse = 0.75 * math.log(0.75 / 0.5) + 0.25 * math.log(0.25 / 0.5)
    assert kl_similarity(pb, pa) == pytest.approx(reverse, rel=1e-12)
    assert kl_similarity(pa, pb) != kl_similarity(pb, pa)


def test_kl_smoothing_keeps_divergence_finite():
    pa = build_profile(["aa"], "pa", orders=(1,))
    pb = build_profile(["bb"], "pb", orders=(1,))
    d = kl_similarity(pa, pb, epsilon=1e-10)
    assert math.isfinite(d) and d > 0


def test_kl_matrix_two_languages():
    pa, pb = two_point_profiles()
    m = build_kl_matrix([pa, pb])
    fwd = 0.5 * math.log(0.5 / 0.75) + 0.5 * math.log(0.5 / 0.25)
    rev = 0.75 * math.log(0.75 / 0.5) + 0.25 * math.log(0.25 / 0.5)
    assert fwd > rev
    # the direction attaining the max divergence scores exactly 0
    assert m.score("pa", "pb") == 0.0
    assert m.score("pb", "pa") == pytest.approx(1.0 - rev / fwd, rel=1e-12)
    assert m.score("pa", "pa") == 1.0 and m.score("pb", "pb") == 1.0
    assert m.raw_divergences[0][1] == pytest.approx(fwd, rel=1e-12)


def test_kl_matrix_degenerate_flag():
    pa = build_profile(["abab"], "x", orders=(1, 2))
    pb = build_profile(["abab"], "y", orders=(1, 2))
    m = build_kl_matrix([pa, pb])
    assert m.degenerate
    assert np.all(m.scores == 1.0)


def test_hellinger_identical_is_one():
    pa, _ = two_point_profiles()
    assert hellinger_similarity(pa, pa) == 1.0


def test_hellinger_disjoint_is_zero():
    pa = build_profile(["aa"], "pa", orders=(1, 2))
    pb = build_profile(["bb"], "pb", orders=(1, 2))
    assert hellinger_similarity(pa, pb) == pytest.approx(0.0, abs=1e-12)


def test_hellinger_two_point_value():
    # P_a = {a: 1}, P_b = {a: 1/2, b: 1/2}, single order
    pa = build_profile(["aa"], "pa", orders=(1,))
    pb = build_profile(["ab"], "pb", orders=(1,))
    expected = 1.0 - math.sqrt((1 - math.sqrt(0.5)) ** 2 + 0.5) / math.sqrt(2.0)
    assert hellinger_similarity(pa, pb) == pytest.approx(expected, rel=1e-12)


def test_hellinger_symmetry():
    rng = random.Random(3)
    mk = lambda tag: build_profile(
        ["".join(rng.choice("abcd") for _ in range(10)) for _ in range(20)], tag, orders=(1, 2)
    )
    pa, pb = mk("a"), mk("b")
    assert hellinger_similarity(pa, pb) == pytest.approx(hellinger_similarity(pb, pa), rel=1e-12)


def test_jaccard_examples():
    pa = build_profile(["abc"], "pa", orders=(2,))  # vocab {ab, bc}
    pb = build_profile(["bcd"], "pb", orders=(2,))  # vocab {bc, cd}
    assert jaccard_similarity(pa, pb) == pytest.approx(1 / 3)
    assert jaccard_similarity(pa, pa) == 1.0
    pc = build_profile(["xy"], "pc", orders=(2,))
    assert jaccard_similarity(pa, pc) == 0.0


def test_jaccard_frequency_blind():
    lines = ["abcab", "bca"]
    pa = build_profile(lines, "pa", orders=(1, 2, 3))
    pb = build_profile(lines + lines, "pb", orders=(1, 2, 3))
    assert jaccard_similarity(pa, pb) == 1.0


def test_order_mismatch():
    pa = build_profile(["ab"], "pa", orders=(1,))
    pb = build_profile(["ab"], "pb", orders=(1, 2))
    for fn in (kl_similarity, hellinger_similarity, jaccard_similarity):
        with pytest.raises(OrderMismatch):
            fn(pa, pb)


def random_profiles(count, seed, orders=(1, 2, 3)):
    rng = random.Random(seed)
    profiles = []
    for i in range(count):
        alphabet = rng.sample("abcdefghij", 6)
        lines = [
            "".join(rng.choice(alphabet) for _ in range(rng.randint(4, 15))) for _ in range(30)
        ]
        profiles.append(build_profile(lines, f"lang{i}", orders))
    return profiles


def test_matrix_contracts_on_random_corpora():
    profiles = random_profiles(6, seed=11)
    for metric in ("kl", "hellinger", "jaccard"):
        m = build_matrix(profiles, metric)
        scores = np.asarray(m.scores)
        assert np.all(scores >= 0.0) and np.all(scores <= 1.0)
        assert np.all(np.diag(scores) == 1.0)
        if metric in ("hellinger", "jaccard"):
            assert np.array_equal(scores, scores.T)
        else:
            k = len(profiles)
            raw = np.asarray(m.raw_divergences)
            off = [raw[i, j] for i in range(k) for j in range(k) if i != j]
            i, j = np.unravel_index(np.argmax(raw), raw.shape)
            assert scores[i, j] == 0.0
            assert max(off) == raw[i, j]


def test_tsv_round_trip(tmp_path):
    profiles = random_profiles(4, seed=21)
    m = build_matrix(profiles, "hellinger")
    path = tmp_path / "hellinger.tsv"
    m.write_tsv(path)
    text = path.read_text()
    assert text.startswith("# metric: hellinger\n")
    assert "1.000000" in text
    back = SimilarityMatrix.from_tsv(path)
    assert back.metric == "hellinger"
    assert back.languages == m.languages
    np.testing.assert_allclose(back.scores, m.scores, atol=5e-7)


def test_tsv_degenerate_flag(tmp_path):
    pa = build_profile(["same"], "x", orders=(1,))
    pb = build_profile(["same"], "y", orders=(1,))
    m = build_kl_matrix([pa, pb])
    path = tmp_path / "kl.tsv"
    m.write_tsv(path)
    assert "# degenerate: true" in path.read_text()
    assert SimilarityMatrix.from_tsv(path).degenerate

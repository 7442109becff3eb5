#
# MIT License
#
# (C) Copyright [2024] Hewlett Packard Enterprise Development LP
#
# Permission is hereby granted, free of charge, to any person obtaining a
# copy of this software and associated documentation files (the "Software"),
# to deal in the Software without restriction, including without limitation
# the rights to use, copy, modify, merge, publish, distribute, sublicense,
# and/or sell copies of the Software, and to permit persons to whom the
# Software is furnished to do so, subject to the following conditions:
#
# The above copyright notice and this permission notice shall be included
# in all copies or substantial portions of the Software.
#
# THE SOFTWARE IS PROVIDED "AS IS", WITHOUT WARRANTY OF ANY KIND, EXPRESS OR
# IMPLIED, INCLUDING BUT NOT LIMITED TO THE WARRANTIES OF MERCHANTABILITY,
# FITNESS FOR A PARTICULAR PURPOSE AND NONINFRINGEMENT. IN NO EVENT SHALL
# THE AUTHORS OR COPYRIGHT HOLDERS BE LIABLE FOR ANY CLAIM, DAMAGES OR
# OTHER LIABILITY, WHETHER IN AN ACTION OF CONTRACT, TORT OR OTHERWISE,
# ARISING FROM, OUT OF OR IN CONNECTION WITH THE SOFTWARE OR THE USE OR
# OTHER DEALINGS IN THE SOFTWARE.
"""Tests of ROUGE scoring.

"""
import json
import random
from itertools import (
    combinations,
    product
)

import pytest

from dhgn_summarizer.private.common import (
    FormatError,
    ValidationError
)
from dhgn_summarizer.private.evaluator import (
    RougeScore,
    tokenize_for_scoring,
    rouge_n,
    rouge_l,
    lcs_length,
    score_pair,
    example_scores,
    corpus_eval,
    read_candidates,
    read_references,
    pair_up,
    render_rouge_table
)


def _longest_common_subsequence(first, second):
    """Exhaustive: the longest subsequence of 'first' that is also a
    subsequence of 'second'.

    """
    def is_subsequence(items, sequence):
        remaining = iter(sequence)
        return all(item in remaining for item in items)
    for size in range(len(first), 0, -1):
        for picked in combinations(first, size):
            if is_subsequence(picked, second):
                return size
    return 0


def test_hand_derived_case():
    candidate = "a b c".split()
    reference = "a c d".split()
    assert rouge_n(candidate, reference, 1).f1 == pytest.approx(2 / 3)
    assert rouge_n(candidate, reference, 2).f1 == 0.0
    assert rouge_l(candidate, reference).f1 == pytest.approx(2 / 3)


def test_identity_scores_one():
    tokens = "bob needs a lift .".split()
    for score in score_pair(tokens, tokens).values():
        assert (score.precision, score.recall, score.f1) == (1.0, 1.0, 1.0)


def test_lcs_matches_exhaustive_search_on_long_sequences():
    rng = random.Random(31)
    for _ in range(300):
        first = [rng.choice("abc") for _ in range(rng.randint(5, 8))]
        second = [rng.choice("abc") for _ in range(rng.randint(0, 8))]
        assert lcs_length(first, second) == \
            _longest_common_subsequence(first, second)


def test_lcs_all_short_pairs():
    sequences = [
        list(items) for size in range(0, 5)
        for items in product("abc", repeat=size)
    ]
    for first, second in product(sequences, repeat=2):
        assert lcs_length(first, second) == \
            _longest_common_subsequence(first, second)


def test_counts_are_clipped():
    score = rouge_n(["the", "the", "the"], ["the", "cat"], 1)
    assert score.precision == pytest.approx(1 / 3)
    assert score.recall == pytest.approx(1 / 2)


def test_empty_sides_score_zero():
    assert rouge_l([], ["a"]) == RougeScore()
    assert rouge_n(["a"], [], 1) == RougeScore()
    assert rouge_n(["a"], ["a"], 2) == RougeScore()


def test_only_unigrams_and_bigrams():
    with pytest.raises(ValidationError):
        rouge_n(["a"], ["a"], 3)


def test_scoring_tokenization():
    assert tokenize_for_scoring("Bob needs a lift.") == [
        "bob", "needs", "a", "lift", "."
    ]
    assert tokenize_for_scoring(["Bob", "Lift"]) == ["bob", "lift"]


def test_reference_modes():
    candidate = "a b".split()
    references = ["a b".split(), "c d".split()]
    best = example_scores(candidate, references, "max")
    mean = example_scores(candidate, references, "avg")
    assert best["rouge-1"].f1 == 1.0
    assert mean["rouge-1"].f1 == pytest.approx(0.5)
    with pytest.raises(ValidationError):
        example_scores(candidate, references, "median")
    with pytest.raises(ValidationError):
        example_scores(candidate, [], "max")


def test_corpus_mean():
    scores = corpus_eval([
        ("a b".split(), ["a b".split()]),
        ("x y".split(), ["a b".split()]),
    ])
    assert scores["rouge-1"].f1 == pytest.approx(0.5)
    assert scores["rouge-2"].f1 == pytest.approx(0.5)
    with pytest.raises(ValidationError):
        corpus_eval([])


def _write_lines(path, records):
    path.write_text(
        "".join(json.dumps(record) + "\n" for record in records),
        encoding='UTF-8'
    )
    return str(path)


def test_files_and_table(tmp_path):
    candidates = _write_lines(tmp_path / "summaries.jsonl", [
        {"id": "d1", "summary": "bob needs a lift .", "log_prob": -1.0},
        {"id": "d2", "summary": "amy will call ben", "log_prob": -2.0},
    ])
    references = _write_lines(tmp_path / "corpus.jsonl", [
        {"id": "d2", "summaries": ["Amy will call Ben."]},
        {"id": "d1", "summary": "Bob needs a lift."},
    ])
    pairs = pair_up(read_candidates(candidates), read_references(references))
    scores = corpus_eval(pairs)
    assert scores["rouge-1"].recall == pytest.approx((1.0 + 4 / 5) / 2)
    table = render_rouge_table([("D-HGN", scores)])
    header = table.splitlines()[0].split()
    assert header == ["Model", "R-1", "R-2", "R-L"]
    assert "rouge-l" in table


def test_file_errors(tmp_path):
    broken = tmp_path / "broken.jsonl"
    broken.write_text("{not json\n", encoding='UTF-8')
    with pytest.raises(FormatError):
        read_candidates(str(broken))
    missing_field = _write_lines(tmp_path / "nosummary.jsonl", [{"id": "x"}])
    with pytest.raises(FormatError):
        read_candidates(missing_field)
    with pytest.raises(FormatError):
        read_references(missing_field)
    with pytest.raises(FormatError):
        pair_up({"x": ["a"]}, {})
    with pytest.raises(FormatError):
        read_references(str(tmp_path / "absent.jsonl"))

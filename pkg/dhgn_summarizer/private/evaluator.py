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
"""ROUGE-1, ROUGE-2 and ROUGE-L scoring of generated summaries, with
multi-reference corpus aggregation.

"""
import json
import math
from collections import Counter
from dataclasses import dataclass

from jinja2 import Template

from .common import (
    FormatError,
    ValidationError
)
from .graph_builder import tokenize

METRICS = ("rouge-1", "rouge-2", "rouge-l")
REFERENCE_MODES = ("max", "avg")


@dataclass(frozen=True)
class RougeScore:
    """Precision, recall and F1 of one metric.

    """
    precision: float = 0.0
    recall: float = 0.0
    f1: float = 0.0

    @classmethod
    def from_counts(cls, overlap, candidate_total, reference_total):
        """Score from an overlap count and the two totals; empty sides
        score zero.

        """
        if not candidate_total or not reference_total:
            return cls()
        precision = overlap / candidate_total
        recall = overlap / reference_total
        if precision + recall == 0:
            return cls(precision, recall, 0.0)
        return cls(
            precision, recall, 2 * precision * recall / (precision + recall)
        )


def tokenize_for_scoring(summary):
    """Scoring tokens: lowercased with punctuation split off; token
    lists are lowercased as given. No stemming.

    """
    if isinstance(summary, str):
        return tokenize(summary)
    return [token.lower() for token in summary]


def ngrams(tokens, n):
    """Counter of the n-grams of a token list.

    """
    return Counter(
        tuple(tokens[start:start + n]) for start in range(len(tokens) - n + 1)
    )


def rouge_n(candidate, reference, n):
    """ROUGE-N with clipped n-gram counts.

    """
    if n not in (1, 2):
        raise ValidationError("ROUGE-N is defined here for n = 1, 2, not %s"
                              % str(n))
    cand = ngrams(list(candidate), n)
    ref = ngrams(list(reference), n)
    overlap = sum((cand & ref).values())
    return RougeScore.from_counts(
        overlap, sum(cand.values()), sum(ref.values())
    )


def lcs_length(first, second):
    """Length of the longest common subsequence.

    """
    previous = [0] * (len(second) + 1)
    for item in first:
        current = [0]
        for column, other in enumerate(second, start=1):
            current.append(
                previous[column - 1] + 1 if item == other
                else max(previous[column], current[column - 1])
            )
        previous = current
    return previous[-1]


def rouge_l(candidate, reference):
    """ROUGE-L from the longest common subsequence.

    """
    candidate = list(candidate)
    reference = list(reference)
    return RougeScore.from_counts(
        lcs_length(candidate, reference), len(candidate), len(reference)
    )


def score_pair(candidate, reference):
    """All three metrics for one candidate/reference pair.

    """
    return {
        "rouge-1": rouge_n(candidate, reference, 1),
        "rouge-2": rouge_n(candidate, reference, 2),
        "rouge-l": rouge_l(candidate, reference),
    }


def _mean_score(scores):
    """Componentwise mean of RougeScores.

    """
    scores = list(scores)
    return RougeScore(
        math.fsum(score.precision for score in scores) / len(scores),
        math.fsum(score.recall for score in scores) / len(scores),
        math.fsum(score.f1 for score in scores) / len(scores),
    )


def example_scores(candidate, references, mode="max"):
    """Per metric score of a candidate against one or more
    references: the best reference by F1 ('max') or the mean over
    references ('avg').

    """
    if mode not in REFERENCE_MODES:
        raise ValidationError(
            "unknown reference mode '%s', expected one of %s" % (
                mode, str(REFERENCE_MODES)
            )
        )
    if not references:
        raise ValidationError("every candidate needs at least one reference")
    per_reference = [score_pair(candidate, ref) for ref in references]
    result = {}
    for metric in METRICS:
        scores = [scores[metric] for scores in per_reference]
        result[metric] = (
            max(scores, key=lambda score: score.f1) if mode == "max"
            else _mean_score(scores)
        )
    return result


def corpus_eval(pairs, mode="max"):
    """Mean over examples of the per example scores of
    (candidate tokens, [reference tokens, ...]) pairs.

    """
    pairs = list(pairs)
    if not pairs:
        raise ValidationError("cannot evaluate an empty list of summaries")
    per_example = [
        example_scores(candidate, references, mode)
        for candidate, references in pairs
    ]
    return {
        metric: _mean_score(scores[metric] for scores in per_example)
        for metric in METRICS
    }


def _read_json_lines(path, what):
    """Decoded records of a JSON-lines file.

    """
    records = []
    try:
        with open(path, 'r', encoding='UTF-8') as stream:
            for line_no, line in enumerate(stream, start=1):
                if not line.strip():
                    continue
                try:
                    records.append((line_no, json.loads(line)))
                except ValueError as err:
                    raise FormatError(
                        "%s '%s' line %d: invalid JSON - %s" % (
                            what, path, line_no, str(err)
                        )
                    ) from err
    except OSError as err:
        raise FormatError(
            "cannot read %s '%s' - %s" % (what, path, str(err))
        ) from err
    return records


def read_candidates(path):
    """{id: summary tokens} from a summaries file
    ({id, summary, log_prob} lines).

    """
    candidates = {}
    for line_no, record in _read_json_lines(path, "summaries file"):
        if not isinstance(record, dict) or 'id' not in record or \
           not isinstance(record.get('summary'), str):
            raise FormatError(
                "summaries file '%s' line %d: expected 'id' and 'summary' "
                "fields" % (path, line_no)
            )
        candidates[str(record['id'])] = tokenize_for_scoring(
            record['summary']
        )
    return candidates


def read_references(path):
    """{id: [reference tokens, ...]} from a corpus or summaries file:
    records with 'summaries' (list of strings) or 'summary' (string).

    """
    references = {}
    for line_no, record in _read_json_lines(path, "references file"):
        found = record.get('summaries', record.get('summary')) \
            if isinstance(record, dict) else None
        if isinstance(found, str):
            found = [found]
        if found is None or 'id' not in record or \
           not isinstance(found, list) or not found:
            raise FormatError(
                "references file '%s' line %d: expected 'id' and "
                "'summaries' fields" % (path, line_no)
            )
        references[str(record['id'])] = [
            tokenize_for_scoring(summary) for summary in found
        ]
    return references


def pair_up(candidates, references):
    """(candidate, references) pairs in candidate id order; every
    candidate must have references.

    """
    missing = sorted(set(candidates) - set(references))
    if missing:
        raise FormatError(
            "no references for summaries: %s" % ", ".join(missing)
        )
    return [
        (candidates[key], references[key]) for key in sorted(candidates)
    ]


ROUGE_TABLE = Template(
    "{{ '%-16s' | format('Model') }} {{ '%7s' | format('R-1') }} "
    "{{ '%7s' | format('R-2') }} {{ '%7s' | format('R-L') }}\n"
    "{% for name, scores in rows %}"
    "{{ '%-16s' | format(name) }}"
    "{% for metric in metrics %} "
    "{{ '%7.2f' | format(100 * scores[metric].f1) }}"
    "{% endfor %}\n"
    "{% endfor %}"
    "{% if detail %}\n"
    "{{ '%-16s' | format('Metric') }} {{ '%9s' | format('Precision') }} "
    "{{ '%9s' | format('Recall') }} {{ '%9s' | format('F1') }}\n"
    "{% for name, scores in rows %}{% for metric in metrics %}"
    "{{ '%-16s' | format(name ~ ' ' ~ metric) }} "
    "{{ '%9.4f' | format(scores[metric].precision) }} "
    "{{ '%9.4f' | format(scores[metric].recall) }} "
    "{{ '%9.4f' | format(scores[metric].f1) }}\n"
    "{% endfor %}{% endfor %}"
    "{% endif %}"
)


def render_rouge_table(rows, detail=True):
    """Render (name, corpus scores) rows as an R-1/R-2/R-L F1 table,
    optionally followed by precision/recall/F1 per metric.

    """
    return ROUGE_TABLE.render(rows=rows, metrics=METRICS, detail=detail)

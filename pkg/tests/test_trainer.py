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
"""Tests of the optimizer, gradient clipping and the training loop.

"""
import json
import math

import numpy as np
import pytest
import yaml

from dhgn_summarizer import (
    BaseConfig,
    SummarizerAPI
)
from dhgn_summarizer.private.common import (
    Hyperparams,
    ValidationError
)
from dhgn_summarizer.private.config import OVERFIT_OVERLAY
from dhgn_summarizer.private.evaluator import (
    read_references,
    tokenize_for_scoring
)
from dhgn_summarizer.private.graph_builder import read_graphs
from dhgn_summarizer.private.parameters import ParameterStore
from dhgn_summarizer.private.vocab import build_vocab
from dhgn_summarizer.private.model import DHGNModel
from dhgn_summarizer.private.optim import (
    Adam,
    clip_grad_norm,
    global_norm
)
from dhgn_summarizer.private.private_summarizer import DEFAULT_TRAIN
from dhgn_summarizer.private.trainer import (
    TrainReport,
    training_examples,
    mean_token_nll,
    train_step,
    train
)


def _gradients(values):
    store = ParameterStore(np.random.default_rng(0), 0.1)
    params = []
    for number, value in enumerate(values):
        param = store.create("p%d" % number, np.shape(value))
        param.grad[...] = value
        params.append(param)
    return params


def _model(hyperparams, graph, **changes):
    values = hyperparams.as_dict()
    values.update(changes)
    return DHGNModel(
        Hyperparams.from_dict(values), build_vocab([graph], min_freq=1)
    )


def test_clipping_rescales_to_the_limit():
    params = _gradients([[[6.0, 0.0]], [[0.0, 8.0]]])
    assert clip_grad_norm(params, 2.0) == pytest.approx(10.0)
    assert abs(global_norm(params) - 2.0) <= 1e-9
    assert np.allclose(params[0].grad, [[1.2, 0.0]])
    assert np.allclose(params[1].grad, [[0.0, 1.6]])


def test_clipping_leaves_small_gradients_alone():
    params = _gradients([[[0.3, 0.4]]])
    assert clip_grad_norm(params, 2.0) == pytest.approx(0.5)
    assert np.array_equal(params[0].grad, [[0.3, 0.4]])


def test_clipping_rejects_bad_inputs():
    with pytest.raises(ValidationError):
        clip_grad_norm(_gradients([[[1.0]]]), 0.0)
    with pytest.raises(ValidationError):
        clip_grad_norm(_gradients([[[math.nan]]]), 2.0)


def test_first_adam_step_moves_by_the_learning_rate():
    params = _gradients([[[4.0, -0.5]]])
    before = params[0].data.copy()
    optimizer = Adam(params, lr=0.01)
    optimizer.step()
    assert np.allclose(params[0].data - before, [[-0.01, 0.01]], atol=1e-8)
    optimizer.zero_grad()
    assert not params[0].grad.any()
    with pytest.raises(ValidationError):
        Adam(params, lr=0.0)


def test_training_steps_lower_the_loss(grad_check_graph, tiny_hyperparams):
    model = _model(tiny_hyperparams, grad_check_graph, lr=0.05)
    examples = training_examples([grad_check_graph])
    assert len(examples) == 1
    before = mean_token_nll(model, examples)
    optimizer = Adam(model.parameters(), lr=0.05)
    for _ in range(5):
        loss, tokens, unknown, norm = train_step(
            model, optimizer, examples, clip_norm=2.0
        )
        assert tokens == len(examples[0][1]) + 1
        assert unknown == 0
        assert norm > 0.0 and math.isfinite(loss)
    assert mean_token_nll(model, examples) < before


def test_non_finite_loss_stops_training(grad_check_graph, tiny_hyperparams):
    model = _model(tiny_hyperparams, grad_check_graph)
    model.encoder.embedding.data[...] = math.nan
    optimizer = Adam(model.parameters())
    with pytest.raises(ValidationError):
        train_step(
            model, optimizer, training_examples([grad_check_graph]), 2.0
        )


def test_train_keeps_the_best_checkpoint(
        tmp_path, grad_check_graph, tiny_hyperparams
):
    model = _model(tiny_hyperparams, grad_check_graph, lr=0.02)
    checkpoint = str(tmp_path / "model.ckpt")
    out_log = str(tmp_path / "train.out")
    report = train(
        model, [grad_check_graph], [], checkpoint,
        (out_log, str(tmp_path / "train.err"))
    )
    assert 1 <= len(report.epochs) <= tiny_hyperparams.max_epochs
    assert 1 <= report.best_epoch <= len(report.epochs)
    assert report.best_score == min(
        record['valid_nll'] for record in report.epochs
    )
    assert DHGNModel.load(checkpoint).checksum() == report.checksum
    assert report.checksum == model.checksum()
    with open(out_log, 'r', encoding='UTF-8') as log:
        records = [json.loads(line) for line in log]
    assert [record['epoch'] for record in records] == \
        list(range(1, len(report.epochs) + 1))
    report_path = str(tmp_path / "report.yaml")
    report.save(report_path)
    with open(report_path, 'r', encoding='UTF-8') as saved:
        assert yaml.safe_load(saved)['best_epoch'] == report.best_epoch


def test_train_needs_references(tmp_path, random_graph, tiny_hyperparams):
    graph = random_graph(np.random.default_rng(0), 3)
    bare = type(graph)(graph.nodes, graph.edges, graph.graph_id)
    model = _model(tiny_hyperparams, graph)
    with pytest.raises(ValidationError):
        train(
            model, [bare], [], str(tmp_path / "model.ckpt"),
            (str(tmp_path / "out"), str(tmp_path / "err"))
        )


def test_empty_report():
    assert TrainReport().final_train_nll() == math.inf


@pytest.mark.slow
def test_overfits_a_single_dialogue(
        tmp_path, grad_check_graph, tiny_hyperparams
):
    model = _model(
        tiny_hyperparams, grad_check_graph, lr=0.05, max_epochs=60,
        patience=60
    )
    report = train(
        model, [grad_check_graph], [], str(tmp_path / "model.ckpt"),
        (str(tmp_path / "out"), str(tmp_path / "err"))
    )
    assert report.final_train_nll() < 0.5 * report.epochs[0]['train_nll']
    assert not report.stopped_early


@pytest.mark.slow
def test_memorizes_the_training_dialogues(tmp_path):
    api = SummarizerAPI(
        {'summarizer': BaseConfig().compose([OVERFIT_OVERLAY])},
        str(tmp_path)
    )
    graphs = str(tmp_path / "train.graphs.jsonl")
    api.build_graphs(DEFAULT_TRAIN, out_path=graphs)
    checkpoint = str(tmp_path / "model.ckpt")
    model, report = api.train(graphs, graphs, checkpoint)
    assert len(report.epochs) <= 300
    assert not report.stopped_early
    examples = training_examples(read_graphs(graphs))
    assert len(examples) == 16
    assert mean_token_nll(model, examples) <= 0.1
    summaries = str(tmp_path / "summaries.jsonl")
    records = api.summarize(graphs, checkpoint, summaries, beam=10)
    references = read_references(DEFAULT_TRAIN)
    exact = sum(
        tokenize_for_scoring(record['summary']) in references[record['id']]
        for record in records
    )
    assert exact >= 12
    scores, _ = api.evaluate(summaries, DEFAULT_TRAIN)
    assert scores['rouge-1'].f1 >= 0.95

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
"""Tests of the assembled model: loss, decoding and checkpoints.

"""
import numpy as np
import pytest

from dhgn_summarizer.private.common import (
    Hyperparams,
    ValidationError
)
from dhgn_summarizer.private.vocab import build_vocab
from dhgn_summarizer.private.model import DHGNModel


def _model(hyperparams, graph, **changes):
    values = hyperparams.as_dict()
    values.update(changes)
    return DHGNModel(
        Hyperparams.from_dict(values), build_vocab([graph], min_freq=1)
    )


def test_loss_counts_targets_and_copies(grad_check_graph, tiny_hyperparams):
    model = _model(tiny_hyperparams, grad_check_graph)
    reference = ["amy", "will", "call", "phone", "zebra"]
    loss, count, unknown = model.nll_loss(
        grad_check_graph, reference, training=False
    )
    assert loss.item() > 0.0
    assert count == len(reference) + 1
    # "phone" is copied from a knowledge node, "zebra" is nowhere.
    assert unknown == 1
    with pytest.raises(ValidationError):
        model.nll_loss(grad_check_graph, [], training=False)


def test_same_seed_same_model(grad_check_graph, tiny_hyperparams):
    first = _model(tiny_hyperparams, grad_check_graph)
    second = _model(tiny_hyperparams, grad_check_graph)
    other = _model(tiny_hyperparams, grad_check_graph, seed=2)
    assert first.checksum() == second.checksum()
    assert first.checksum() != other.checksum()


def test_beam_of_one_is_greedy(grad_check_graph, tiny_hyperparams):
    model = _model(tiny_hyperparams, grad_check_graph)
    greedy = model.summarize(grad_check_graph, beam=1)
    assert len(greedy[0]) <= tiny_hyperparams.max_decode_len
    wide = model.summarize(grad_check_graph, beam=4)
    assert (wide[1], wide[2]) >= (greedy[1], greedy[2])
    assert model.summarize(grad_check_graph, beam=1) == greedy


def test_node_reps(grad_check_graph, tiny_hyperparams):
    model = _model(tiny_hyperparams, grad_check_graph)
    reps = model.node_reps(grad_check_graph)
    assert reps.shape == (len(grad_check_graph.nodes),
                          tiny_hyperparams.graph_dim)
    assert np.isfinite(reps).all()


def test_checkpoint_round_trip(tmp_path, grad_check_graph, tiny_hyperparams):
    model = _model(tiny_hyperparams, grad_check_graph)
    path = str(tmp_path / "model.ckpt")
    model.save(path)
    loaded = DHGNModel.load(path)
    assert loaded.checksum() == model.checksum()
    assert loaded.vocab == model.vocab
    assert loaded.hyperparams == model.hyperparams
    assert loaded.summarize(grad_check_graph, beam=2) == \
        model.summarize(grad_check_graph, beam=2)


def test_checkpoint_shape_must_match_config(
        tmp_path, grad_check_graph, tiny_hyperparams
):
    model = _model(tiny_hyperparams, grad_check_graph)
    path = str(tmp_path / "model.ckpt")
    model.save(path)
    values = tiny_hyperparams.as_dict()
    values['graph_dim'] = 12
    with pytest.raises(ValidationError):
        DHGNModel.load(path, Hyperparams.from_dict(values))
    values = tiny_hyperparams.as_dict()
    values['beam'] = 2
    assert DHGNModel.load(path, Hyperparams.from_dict(values)).checksum() \
        == model.checksum()


@pytest.mark.parametrize("layer_type", ["gcn", "gat", "rgcn"])
def test_homogeneous_baselines_decode(
        grad_check_graph, tiny_hyperparams, layer_type
):
    model = _model(tiny_hyperparams, grad_check_graph, layer_type=layer_type)
    loss, _, _ = model.nll_loss(
        grad_check_graph, list(grad_check_graph.summaries[0]), training=False
    )
    assert np.isfinite(loss.item())
    tokens, _, _ = model.summarize(grad_check_graph, beam=2)
    assert all(isinstance(token, str) for token in tokens)


def test_single_precision(grad_check_graph, tiny_hyperparams):
    model = _model(tiny_hyperparams, grad_check_graph, dtype="float32")
    assert model.node_reps(grad_check_graph).dtype == np.float32

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
"""Bidirectional LSTM node encoder.

All nodes of a graph are encoded as one padded batch: the forward
direction runs over the word ids left to right, the backward direction
over each node's words reversed (left aligned), and a per-step mask
freezes the state of nodes whose words are used up.

"""
from dataclasses import dataclass

import numpy as np

from .common import ValidationError
from .tensor import (
    Tensor,
    add,
    mul,
    sub,
    matmul,
    concat,
    index,
    lookup,
    sigmoid,
    tanh,
    dropout
)


@dataclass
class NodeEncoding:
    """Initial representation of one node: 'h0_node' (1 x D) is the
    forward state at the last word joined with the backward state at
    the first word; 'h0_words' (|words| x D) joins both directions per
    word.

    """
    h0_node: Tensor
    h0_words: Tensor


@dataclass
class NodeBatch:
    """Initial representations of every node of a graph: 'node_reps'
    (N x D), 'word_reps' (total words x D, node by node) and each
    node's word 'lengths'.

    """
    node_reps: Tensor
    word_reps: Tensor
    lengths: tuple

    def offsets(self):
        """First word row of every node in 'word_reps'.

        """
        return tuple(np.concatenate(([0], np.cumsum(self.lengths)[:-1])))


class EncoderParams:
    """Word embedding table plus the forward and backward LSTM cell
    weights. Gates are stacked (input, forget, candidate, output) in
    one (embed + hidden) x 4*hidden matrix per direction.

    """
    def __init__(self, store, vocab_size, embed_dim, encoder_dim,
                 prefix="encoder"):
        """Constructor: create the parameters in 'store'.

        """
        if encoder_dim % 2:
            raise ValidationError(
                "encoder_dim must be even, got %d" % encoder_dim
            )
        self.hidden = encoder_dim // 2
        self.embedding = store.create(
            "%s.embedding" % prefix, (vocab_size, embed_dim)
        )
        self.directions = {}
        for direction in ("fwd", "bwd"):
            self.directions[direction] = (
                store.create(
                    "%s.%s.weight" % (prefix, direction),
                    (embed_dim + self.hidden, 4 * self.hidden)
                ),
                store.create(
                    "%s.%s.bias" % (prefix, direction), (1, 4 * self.hidden)
                ),
            )

    @property
    def output_dim(self):
        """Width of node and word representations.

        """
        return 2 * self.hidden


def lstm_step(inputs, hidden, cell, weight, bias):
    """One LSTM step over a batch: returns (hidden', cell').

    """
    size = hidden.shape[1]
    gates = add(matmul(concat([inputs, hidden], axis=1), weight), bias)

    def gate(number):
        return index(gates, (slice(None), slice(number * size,
                                                (number + 1) * size)))
    cell = add(
        mul(sigmoid(gate(1)), cell), mul(sigmoid(gate(0)), tanh(gate(2)))
    )
    return mul(sigmoid(gate(3)), tanh(cell)), cell


# pylint: disable=too-many-arguments
def _run_direction(ids, lengths, params, direction, dropout_rate, rng,
                   training):
    """Run one direction over the padded id matrix 'ids' (N x T).
    Returns the states of every step stacked step-major
    ((T * N) x hidden).

    """
    count, steps = ids.shape
    weight, bias = params.directions[direction]
    dtype = params.embedding.data.dtype
    hidden = Tensor(np.zeros((count, params.hidden), dtype=dtype))
    cell = Tensor(np.zeros((count, params.hidden), dtype=dtype))
    states = []
    for step in range(steps):
        inputs = dropout(
            lookup(params.embedding, ids[:, step]), dropout_rate, rng,
            training
        )
        new_hidden, new_cell = lstm_step(inputs, hidden, cell, weight, bias)
        live = (lengths > step).astype(dtype).reshape(count, 1)
        if live.all():
            hidden, cell = new_hidden, new_cell
        else:
            hidden = add(hidden, mul(sub(new_hidden, hidden), live))
            cell = add(cell, mul(sub(new_cell, cell), live))
        states.append(hidden)
    return concat(states, axis=0)


def encode_nodes(word_ids, params, dropout_rate=0.0, training=False,
                 rng=None, pad_id=0):
    """Encode a list of nodes, each given as a nonempty list of word
    ids, into a NodeBatch.

    """
    if not word_ids:
        raise ValidationError("cannot encode an empty list of nodes")
    lengths = np.array([len(words) for words in word_ids], dtype=np.int64)
    if (lengths == 0).any():
        raise ValidationError(
            "cannot encode a node with no words (node %d)" %
            int(np.argmin(lengths))
        )
    if training and dropout_rate > 0.0 and rng is None:
        raise ValidationError("training with dropout needs a random generator")
    count, steps = len(word_ids), int(lengths.max())
    forward = np.full((count, steps), pad_id, dtype=np.int64)
    reverse = np.full((count, steps), pad_id, dtype=np.int64)
    for number, words in enumerate(word_ids):
        forward[number, :len(words)] = words
        reverse[number, :len(words)] = words[::-1]
    fwd_states = _run_direction(
        forward, lengths, params, "fwd", dropout_rate, rng, training
    )
    bwd_states = _run_direction(
        reverse, lengths, params, "bwd", dropout_rate, rng, training
    )
    # One mask per state, shared by the node and word rows built from it.
    fwd_states = dropout(fwd_states, dropout_rate, rng, training)
    bwd_states = dropout(bwd_states, dropout_rate, rng, training)
    # Row of (step, node) in the step-major state stacks.
    fwd_rows = [
        step * count + number
        for number, length in enumerate(lengths) for step in range(length)
    ]
    bwd_rows = [
        (length - 1 - step) * count + number
        for number, length in enumerate(lengths) for step in range(length)
    ]
    last_rows = [
        (length - 1) * count + number for number, length in enumerate(lengths)
    ]
    word_reps = concat(
        [lookup(fwd_states, fwd_rows), lookup(bwd_states, bwd_rows)], axis=1
    )
    node_reps = concat(
        [lookup(fwd_states, last_rows), lookup(bwd_states, last_rows)], axis=1
    )
    return NodeBatch(
        node_reps=node_reps,
        word_reps=word_reps,
        lengths=tuple(int(length) for length in lengths),
    )


def encode_node(words, params, dropout_rate=0.0, training=False, rng=None):
    """Encode a single node's word ids into a NodeEncoding.

    """
    if len(words) == 0:
        raise ValidationError("cannot encode a node with no words")
    batch = encode_nodes([list(words)], params, dropout_rate, training, rng)
    return NodeEncoding(h0_node=batch.node_reps, h0_words=batch.word_reps)

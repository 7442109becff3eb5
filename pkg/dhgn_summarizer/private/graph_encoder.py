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
"""Heterogeneous graph transformer layers over a dialogue graph.

Each layer projects nodes with type specific K/Q/M linears, scores
every edge with an edge type specific attention matrix, normalizes the
scores per target node, passes edge type specific messages and updates
each node with A_Linear(Sigmoid(aggregate)) plus a residual, followed by
the positional node embedding. For utterance targets the speaker
message bypasses attention and is added as is (message fusion).

All per-edge work is done as dense matrix products over edge type
groups; the per-target softmax uses a constant target incidence matrix.

"""
import csv
from dataclasses import dataclass

import numpy as np

from .common import (
    NODE_TYPES,
    EDGE_TYPES,
    ValidationError
)
from .parameters import Linear
from .tensor import (
    Tensor,
    add,
    sub,
    mul,
    div,
    matmul,
    concat,
    lookup,
    sigmoid,
    exp,
    no_grad
)


class GraphIndex:
    """Integer view of a HeteroGraph used by the layers: node rows,
    per-type row masks, positions and the edges of each type as
    (source rows, target rows).

    """
    def __init__(self, graph, dtype=np.float64):
        """Constructor

        """
        self.graph = graph
        self.nodes = list(graph.nodes)
        self.count = len(self.nodes)
        if not self.count:
            raise ValidationError(
                "graph '%s' has no nodes" % graph.graph_id
            )
        self.row = {node.id: number for number, node in enumerate(self.nodes)}
        self.type_masks = {
            ntype: np.array(
                [[1.0 if node.ntype == ntype else 0.0] for node in self.nodes],
                dtype=dtype
            )
            for ntype in NODE_TYPES
        }
        self.positions = np.array(
            [node.position for node in self.nodes], dtype=np.int64
        )
        self.edges = {}
        for etype in EDGE_TYPES:
            found = graph.edges_of_type(etype)
            self.edges[etype] = (
                np.array([self.row[edge.src] for edge in found],
                         dtype=np.int64),
                np.array([self.row[edge.dst] for edge in found],
                         dtype=np.int64),
                found,
            )
        self.dtype = dtype

    def node_types(self):
        """Node types present in the graph.

        """
        return [
            ntype for ntype in NODE_TYPES if self.type_masks[ntype].any()
        ]

    def incidence(self, targets):
        """Constant N x E matrix with a 1 where edge e ends at node n.

        """
        matrix = np.zeros((self.count, len(targets)), dtype=self.dtype)
        matrix[targets, np.arange(len(targets))] = 1.0
        return Tensor(matrix)

    def word_owner(self):
        """Node row of every word, node by node.

        """
        return np.repeat(
            np.arange(self.count), [len(node.words) for node in self.nodes]
        )


def typed(index, linears, inputs):
    """Apply the linear of each node's type: sum over types of
    mask_type * linear_type(inputs).

    """
    out = None
    for ntype in index.node_types():
        part = mul(linears[ntype](inputs), index.type_masks[ntype])
        out = part if out is None else add(out, part)
    return out


def head_blocks(graph_dim, heads, dtype=np.float64):
    """Return (indicator, block mask): the graph_dim x heads matrix with a
    1 where a dimension belongs to a head and the block diagonal mask
    restricting a graph_dim x graph_dim matrix to per-head blocks.

    """
    size = graph_dim // heads
    indicator = np.zeros((graph_dim, heads), dtype=dtype)
    for head in range(heads):
        indicator[head * size:(head + 1) * size, head] = 1.0
    return indicator, indicator @ indicator.T


def segment_softmax(scores, targets, index):
    """Softmax of edge scores (E x heads) over the edges sharing a
    target node. Returns E x heads weights.

    """
    with no_grad():
        shift = np.full((index.count, scores.shape[1]), -np.inf,
                        dtype=scores.dtype)
        np.maximum.at(shift, targets, scores.data)
    weights = exp(sub(scores, shift[targets]))
    totals = matmul(index.incidence(targets), weights)
    return div(weights, lookup(totals, targets))


@dataclass
class LayerState:
    """Input and output node representations of one layer, rows in
    graph node order.

    """
    node_reps: Tensor
    updated_reps: Tensor = None


class HGTLayer:
    """Parameters and computation of one heterogeneous graph transformer
    layer.

    """
    # pylint: disable=too-many-arguments
    def __init__(self, store, name, graph_dim, heads=1, max_positions=64,
                 message_fusion=True, node_embedding=True):
        """Constructor: create the layer's parameters in 'store'.

        """
        self.name = name
        self.graph_dim = graph_dim
        self.heads = heads
        self.max_positions = max_positions
        self.message_fusion = message_fusion
        self.node_embedding = node_embedding
        self.proj = {
            kind: {
                ntype: Linear(
                    store, "%s.%s.%s" % (name, kind, ntype),
                    graph_dim, graph_dim
                )
                for ntype in NODE_TYPES
            }
            for kind in ("key", "query", "message", "update")
        }
        self.w_att = {
            etype: store.create(
                "%s.att.%s" % (name, etype), (graph_dim, graph_dim)
            )
            for etype in EDGE_TYPES
        }
        self.w_msg = {
            etype: store.create(
                "%s.msg.%s" % (name, etype), (graph_dim, graph_dim)
            )
            for etype in EDGE_TYPES
        }
        self.w_pos = store.create(
            "%s.position" % name, (max_positions + 1, graph_dim)
        )
        self.indicator, self.block_mask = head_blocks(
            graph_dim, heads, store.dtype
        )

    def edge_matrix(self, matrix):
        """Restrict an edge type matrix to per-head blocks.

        """
        if self.heads == 1:
            return matrix
        return mul(matrix, self.block_mask)

    def participates(self, etype):
        """Whether edges of this type take part in attention.

        """
        return not (self.message_fusion and etype == "speak-by")

    def edge_scores(self, index, reps):
        """Per edge type: (sources, targets, E x heads scores) of the
        edges present in the graph.

        """
        keys = typed(index, self.proj["key"], reps)
        queries = typed(index, self.proj["query"], reps)
        scores = {}
        for etype in EDGE_TYPES:
            sources, targets, _ = index.edges[etype]
            if not len(sources):
                continue
            projected = matmul(
                lookup(keys, sources), self.edge_matrix(self.w_att[etype])
            )
            scores[etype] = matmul(
                mul(projected, lookup(queries, targets)), self.indicator
            )
        return scores

    def attention(self, index, reps):
        """Per participating edge type: E x heads attention weights,
        normalized per target over all participating edge types.

        """
        scores = self.edge_scores(index, reps)
        kinds = [etype for etype in scores if self.participates(etype)]
        if not kinds:
            return {}
        targets = np.concatenate([index.edges[etype][1] for etype in kinds])
        weights = segment_softmax(
            concat([scores[etype] for etype in kinds], axis=0),
            targets, index
        )
        result = {}
        start = 0
        for etype in kinds:
            count = len(index.edges[etype][1])
            result[etype] = lookup(weights, np.arange(start, start + count))
            start += count
        return result

    def messages(self, index, reps):
        """Per edge type: E x graph_dim messages M_Linear(h_s) W_MSG.

        """
        sources = typed(index, self.proj["message"], reps)
        result = {}
        for etype in EDGE_TYPES:
            rows = index.edges[etype][0]
            if not len(rows):
                continue
            result[etype] = matmul(
                lookup(sources, rows), self.edge_matrix(self.w_msg[etype])
            )
        return result

    def aggregate(self, index, attention, messages):
        """Sum attention weighted messages into each target; messages
        of non participating edges are added unweighted. Targets
        without in-edges aggregate to zero.

        """
        total = Tensor(
            np.zeros((index.count, self.graph_dim), dtype=index.dtype)
        )
        for etype, message in messages.items():
            targets = index.edges[etype][1]
            if etype in attention:
                message = mul(
                    message, matmul(attention[etype], self.indicator.T)
                )
            total = add(total, matmul(index.incidence(targets), message))
        return total

    def update(self, index, aggregated, reps):
        """A_Linear(Sigmoid(aggregate)) + residual.

        """
        return add(typed(index, self.proj["update"], sigmoid(aggregated)),
                   reps)

    def add_node_embedding(self, index, reps):
        """Add the learned position row of every node.

        """
        if not self.node_embedding:
            return reps
        return add_node_embedding(index, reps, self.w_pos, self.max_positions)

    def forward(self, index, reps):
        """Apply the layer to N x graph_dim representations.

        """
        aggregated = self.aggregate(
            index, self.attention(index, reps), self.messages(index, reps)
        )
        return self.add_node_embedding(
            index, self.update(index, aggregated, reps)
        )


def add_node_embedding(index, reps, table, max_positions):
    """reps + W_pos[position]; speakers and knowledge use row 0.

    """
    if index.positions.max(initial=0) > max_positions:
        raise ValidationError(
            "graph '%s' has utterance position %d beyond max_positions "
            "(%d)" % (
                index.graph.graph_id, int(index.positions.max()),
                max_positions
            )
        )
    return add(reps, lookup(table, index.positions))


@dataclass
class GraphEncoding:
    """Encoder output for one graph: final node representations
    (N x graph_dim), final per-word representations (W x encoder_dim)
    and the source token of each word row.

    """
    node_reps: Tensor
    word_reps: Tensor
    words: tuple


def hgt_layer_factory(hyperparams):
    """Return a 'factory(store, name)' building HGTLayers sized by
    'hyperparams'.

    """
    def build(store, name):
        return HGTLayer(
            store, name, hyperparams.graph_dim, hyperparams.heads,
            hyperparams.max_positions, hyperparams.message_fusion,
            hyperparams.node_embedding
        )
    return build


class GraphEncoder:
    """Input projection, the graph layers and the final word
    representation map F_Linear([node; word]).

    """
    def __init__(self, store, hyperparams, layer_factory=None):
        """Constructor: 'layer_factory(store, name)' builds one layer;
        by default heterogeneous graph transformer layers.

        """
        self.hyperparams = hyperparams
        graph_dim = hyperparams.graph_dim
        self.input = Linear(
            store, "graph.input", hyperparams.encoder_dim, graph_dim
        )
        if layer_factory is None:
            layer_factory = hgt_layer_factory(hyperparams)
        self.layers = [
            layer_factory(store, "graph.layer%d" % number)
            for number in range(hyperparams.graph_layers)
        ]
        self.final = Linear(
            store, "graph.final", graph_dim + hyperparams.encoder_dim,
            hyperparams.encoder_dim
        )

    def node_states(self, index, batch):
        """Per-layer LayerStates for the initial node representations
        of 'batch'.

        """
        reps = self.input(batch.node_reps)
        states = []
        for layer in self.layers:
            state = LayerState(node_reps=reps)
            state.updated_reps = layer.forward(index, reps)
            reps = state.updated_reps
            states.append(state)
        return states

    def forward(self, graph, batch):
        """Encode a graph whose initial node and word representations
        are in NodeBatch 'batch'.

        """
        index = GraphIndex(graph, batch.node_reps.dtype)
        states = self.node_states(index, batch)
        node_reps = states[-1].updated_reps if states else \
            self.input(batch.node_reps)
        return GraphEncoding(
            node_reps=node_reps,
            word_reps=final_word_reps(index, node_reps, batch, self.final),
            words=tuple(word for node in index.nodes for word in node.words),
        )


def final_word_reps(index, node_reps, batch, final):
    """F_Linear([node rep of the word's node; initial word rep]) for
    every word of every node, node by node.

    """
    return final(
        concat(
            [lookup(node_reps, index.word_owner()), batch.word_reps], axis=1
        )
    )


def mutual_attention(graph, reps, layer):
    """Attention weight of every participating edge of 'graph' under
    'layer' for N x graph_dim node representations 'reps', as
    {Edge: array of per-head weights}.

    """
    index = GraphIndex(graph, reps.dtype)
    with no_grad():
        weights = layer.attention(index, reps)
    return {
        edge: weights[etype].data[number].copy()
        for etype in weights
        for number, edge in enumerate(index.edges[etype][2])
    }


def message_passing(graph, reps, layer):
    """Message of every edge of 'graph' under 'layer' as
    {Edge: vector}.

    """
    index = GraphIndex(graph, reps.dtype)
    with no_grad():
        messages = layer.messages(index, reps)
    return {
        edge: messages[etype].data[number].copy()
        for etype in messages
        for number, edge in enumerate(index.edges[etype][2])
    }


def aggregate(graph, state, layer):
    """Run 'layer' on LayerState 'state', filling in and returning its
    updated representations (before the node embedding).

    """
    index = GraphIndex(graph, state.node_reps.dtype)
    aggregated = layer.aggregate(
        index,
        layer.attention(index, state.node_reps),
        layer.messages(index, state.node_reps)
    )
    state.updated_reps = layer.update(index, aggregated, state.node_reps)
    return state.updated_reps


def export_node_reps(rows, stream):
    """Write (graph, node reps) pairs as CSV rows
    'graph_id,node_id,node_type,v0..v{d-1}'.

    """
    writer = csv.writer(stream, lineterminator="\n")
    header_written = False
    for graph, reps in rows:
        values = reps.data if isinstance(reps, Tensor) else np.asarray(reps)
        if not header_written:
            writer.writerow(
                ["graph_id", "node_id", "node_type"] +
                ["v%d" % number for number in range(values.shape[1])]
            )
            header_written = True
        for node, vector in zip(graph.nodes, values):
            writer.writerow(
                [graph.graph_id, node.id, node.ntype] +
                ["%.10g" % value for value in vector]
            )

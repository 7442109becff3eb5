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
"""Graph layers that ignore node types (and, except for the relational
variant, edge types), for comparison with the heterogeneous layer. They
share its update rule, A_Linear(Sigmoid(aggregate)) + residual, and its
positional node embedding.

"""
from abc import (
    ABCMeta,
    abstractmethod
)

import numpy as np

from .common import (
    EDGE_TYPES,
    ValidationError
)
from .parameters import Linear
from .tensor import (
    Tensor,
    add,
    mul,
    matmul,
    lookup,
    sigmoid,
    leaky_relu
)
from .graph_encoder import (
    add_node_embedding,
    hgt_layer_factory,
    segment_softmax
)


class HomogeneousLayer(metaclass=ABCMeta):
    """Shared parts of the homogeneous layers.

    """
    # pylint: disable=too-many-arguments
    def __init__(self, store, name, graph_dim, max_positions=64,
                 message_fusion=True, node_embedding=True):
        """Constructor

        """
        self.name = name
        self.graph_dim = graph_dim
        self.max_positions = max_positions
        self.message_fusion = message_fusion
        self.node_embedding = node_embedding
        self.update_linear = Linear(
            store, "%s.update" % name, graph_dim, graph_dim
        )
        self.w_pos = store.create(
            "%s.position" % name, (max_positions + 1, graph_dim)
        )

    @abstractmethod
    def aggregate(self, index, reps):
        """Return the N x graph_dim aggregate of every target.

        """

    def forward(self, index, reps):
        """Apply the layer to N x graph_dim representations.

        """
        reps = add(self.update_linear(sigmoid(self.aggregate(index, reps))),
                   reps)
        if not self.node_embedding:
            return reps
        return add_node_embedding(index, reps, self.w_pos, self.max_positions)


def _all_edges(index, kinds=EDGE_TYPES):
    """Concatenated (sources, targets) of the given edge types.

    """
    sources = np.concatenate(
        [index.edges[etype][0] for etype in kinds] + [np.zeros(0, np.int64)]
    )
    targets = np.concatenate(
        [index.edges[etype][1] for etype in kinds] + [np.zeros(0, np.int64)]
    )
    return sources, targets


def _zeros(index, graph_dim):
    return Tensor(np.zeros((index.count, graph_dim), dtype=index.dtype))


class GCNLayer(HomogeneousLayer):
    """Symmetric normalized sum over all in-neighbors with one shared
    weight.

    """
    def __init__(self, store, name, graph_dim, **kwargs):
        """Constructor

        """
        super().__init__(store, name, graph_dim, **kwargs)
        self.weight = store.create("%s.weight" % name, (graph_dim, graph_dim))

    def aggregate(self, index, reps):
        sources, targets = _all_edges(index)
        if not len(sources):
            return _zeros(index, self.graph_dim)
        out_degree = np.bincount(sources, minlength=index.count)
        in_degree = np.bincount(targets, minlength=index.count)
        norm = 1.0 / np.sqrt(out_degree[sources] * in_degree[targets])
        messages = mul(
            lookup(matmul(reps, self.weight), sources),
            norm.reshape(-1, 1).astype(index.dtype)
        )
        return matmul(index.incidence(targets), messages)


class GATLayer(HomogeneousLayer):
    """Graph attention with one shared projection and additive
    LeakyReLU scores; with message fusion, speaker messages to
    utterances bypass attention.

    """
    def __init__(self, store, name, graph_dim, **kwargs):
        """Constructor

        """
        super().__init__(store, name, graph_dim, **kwargs)
        self.weight = store.create("%s.weight" % name, (graph_dim, graph_dim))
        self.att_src = store.create("%s.att_src" % name, (graph_dim, 1))
        self.att_dst = store.create("%s.att_dst" % name, (graph_dim, 1))

    def aggregate(self, index, reps):
        projected = matmul(reps, self.weight)
        kinds = [
            etype for etype in EDGE_TYPES
            if not (self.message_fusion and etype == "speak-by")
        ]
        sources, targets = _all_edges(index, kinds)
        total = _zeros(index, self.graph_dim)
        if len(sources):
            scores = leaky_relu(
                add(
                    lookup(matmul(projected, self.att_src), sources),
                    lookup(matmul(projected, self.att_dst), targets)
                )
            )
            weights = segment_softmax(scores, targets, index)
            total = add(
                total,
                matmul(
                    index.incidence(targets),
                    mul(lookup(projected, sources), weights)
                )
            )
        if self.message_fusion:
            speak_sources, speak_targets, _ = index.edges["speak-by"]
            if len(speak_sources):
                total = add(
                    total,
                    matmul(
                        index.incidence(speak_targets),
                        lookup(projected, speak_sources)
                    )
                )
        return total


class RGCNLayer(HomogeneousLayer):
    """Relational convolution: per edge type weights, mean over each
    relation's in-neighbors, plus a self-loop weight.

    """
    def __init__(self, store, name, graph_dim, **kwargs):
        """Constructor

        """
        super().__init__(store, name, graph_dim, **kwargs)
        self.relation = {
            etype: store.create(
                "%s.relation.%s" % (name, etype), (graph_dim, graph_dim)
            )
            for etype in EDGE_TYPES
        }
        self.self_loop = store.create(
            "%s.self_loop" % name, (graph_dim, graph_dim)
        )

    def aggregate(self, index, reps):
        total = matmul(reps, self.self_loop)
        for etype in EDGE_TYPES:
            sources, targets, _ = index.edges[etype]
            if not len(sources):
                continue
            counts = np.bincount(targets, minlength=index.count)
            messages = mul(
                matmul(lookup(reps, sources), self.relation[etype]),
                (1.0 / counts[targets]).reshape(-1, 1).astype(index.dtype)
            )
            total = add(total, matmul(index.incidence(targets), messages))
        return total


HOMOGENEOUS_LAYERS = {
    "gcn": GCNLayer,
    "gat": GATLayer,
    "rgcn": RGCNLayer,
}


def layer_factory(hyperparams):
    """Return a 'factory(store, name)' building layers of
    hyperparams.layer_type.

    """
    if hyperparams.layer_type == "hgt":
        return hgt_layer_factory(hyperparams)
    if hyperparams.layer_type not in HOMOGENEOUS_LAYERS:
        raise ValidationError(
            "unknown layer_type '%s'" % hyperparams.layer_type
        )
    layer_class = HOMOGENEOUS_LAYERS[hyperparams.layer_type]

    def build(store, name):
        return layer_class(
            store, name, hyperparams.graph_dim,
            max_positions=hyperparams.max_positions,
            message_fusion=hyperparams.message_fusion,
            node_embedding=hyperparams.node_embedding
        )
    return build

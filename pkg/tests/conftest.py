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
"""Shared fixtures for the summarizer tests.

"""
import numpy as np
import pytest

from dhgn_summarizer import BaseConfig
from dhgn_summarizer.private.common import (
    Hyperparams,
    REVERSE_EDGE
)
from dhgn_summarizer.private.api_objects import LexiconTagger
from dhgn_summarizer.private.kb_ingest import (
    ConceptIndex,
    read_dump
)
from dhgn_summarizer.private.graph_builder import (
    Node,
    Edge,
    HeteroGraph,
    read_corpus,
    read_graphs,
    validate_graph
)
from dhgn_summarizer.private.private_summarizer import (
    DEFAULT_DUMP,
    DEFAULT_TRAIN,
    DEFAULT_VALID,
    DEFAULT_GRAD_CHECK_GRAPH
)

WORD_POOL = (
    "call", "text", "phone", "car", "lift", "pizza", "movie", "work",
    "tonight", "late", "will", "you", "me", "the", ".", "?"
)


@pytest.fixture
def test_config():
    """The composed 'summarizer' section with the test overlay.

    """
    return BaseConfig().compose(test=True)


@pytest.fixture
def tagger():
    """Tagger over the bundled lexicon.

    """
    return LexiconTagger()


@pytest.fixture(scope="session")
def fixture_index():
    """Filtered index of the bundled mini knowledge dump.

    """
    return ConceptIndex(read_dump(DEFAULT_DUMP))


@pytest.fixture(scope="session")
def train_dialogues():
    """The bundled training dialogues, keyed by id.

    """
    dialogues, skipped = read_corpus(DEFAULT_TRAIN)
    assert skipped == 0
    return {dialogue.id: dialogue for dialogue in dialogues}


@pytest.fixture
def train_corpus_path():
    return DEFAULT_TRAIN


@pytest.fixture
def valid_corpus_path():
    return DEFAULT_VALID


@pytest.fixture
def grad_check_graph():
    """Two speakers, three utterances, two knowledge nodes.

    """
    return read_graphs(DEFAULT_GRAD_CHECK_GRAPH)[0]


@pytest.fixture
def tiny_hyperparams():
    """Desk sized model settings without dropout.

    """
    return Hyperparams(
        embed_dim=6, encoder_dim=8, decoder_dim=8, graph_dim=6,
        dropout=0.0, init_scale=0.3, beam=4, max_decode_len=8,
        batch_size=2, max_epochs=3, patience=3
    )


def make_random_graph(rng, utterances, speakers=2, knowledge=3,
                      graph_id="random"):
    """A valid random dialogue graph: every knowledge node joins two or
    more distinct utterances, every edge has its reverse twin.

    """
    nodes = [
        Node("S%d" % number, "speaker", ("spk%d" % number,))
        for number in range(speakers)
    ]
    forward = []
    for position in range(1, utterances + 1):
        length = int(rng.integers(1, 6))
        words = tuple(str(word) for word in rng.choice(WORD_POOL, size=length))
        nodes.append(Node("U%d" % position, "utterance", words, position))
        forward.append(
            Edge("S%d" % int(rng.integers(speakers)), "U%d" % position,
                 "speak-by")
        )
    for number in range(knowledge):
        node_id = "K%d" % number
        nodes.append(Node(node_id, "knowledge", ("concept%d" % number,)))
        size = int(rng.integers(2, utterances + 1))
        for position in sorted(
                rng.choice(np.arange(1, utterances + 1), size=size,
                           replace=False)
        ):
            forward.append(Edge("U%d" % position, node_id, "know-by"))
    reverse = [
        Edge(edge.dst, edge.src, REVERSE_EDGE[edge.etype]) for edge in forward
    ]
    graph = HeteroGraph(
        nodes=tuple(nodes), edges=tuple(forward + reverse),
        graph_id=graph_id, summaries=(("spk0", "will", "call", "."),)
    )
    validate_graph(graph)
    return graph


@pytest.fixture
def random_graph():
    """Factory fixture: random_graph(rng, utterances, ...) builds a
    random valid dialogue graph.

    """
    return make_random_graph

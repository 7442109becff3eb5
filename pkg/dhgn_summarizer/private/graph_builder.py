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
"""Heterogeneous dialogue graph construction: ground each dialogue in
commonsense knowledge, connect speakers to their utterances, merge the
two bipartite graphs and add reverse edges.

"""
import re
import json
import math
from itertools import combinations
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from jinja2 import Template
from vtds_base import info_msg

from .common import (
    NODE_TYPES,
    EDGE_TYPES,
    REVERSE_EDGE,
    GRAPH_ABLATIONS,
    FormatError,
    ValidationError
)
from .kb_ingest import (
    content_words,
    retrieve_one_hop
)
from .api_objects import SurfaceNormalizer

GRAPH_FORMAT_VERSION = 1
_TOKEN = re.compile(r"\w+|[^\w\s]")
_NODE_ORDER = {ntype: rank for rank, ntype in enumerate(NODE_TYPES)}


def tokenize(text):
    """Lowercase and split text into word and punctuation tokens.

    """
    return _TOKEN.findall(text.lower())


@dataclass(frozen=True)
class Dialogue:
    """A dialogue: ordered (speaker, tokens) turns and zero or more
    tokenized reference summaries.

    """
    id: str
    turns: tuple
    reference_summaries: tuple = ()

    def __post_init__(self):
        if not self.turns:
            raise ValidationError("dialogue '%s' has no turns" % self.id)
        for number, (speaker, utterance) in enumerate(self.turns, start=1):
            if not speaker or not speaker.strip():
                raise ValidationError(
                    "dialogue '%s' turn %d has an empty speaker" % (
                        self.id, number
                    )
                )
            if not utterance:
                raise ValidationError(
                    "dialogue '%s' turn %d has an empty utterance" % (
                        self.id, number
                    )
                )


@dataclass(frozen=True)
class Node:
    """A graph node. Utterances carry their 1-based dialogue position,
    speakers and knowledge nodes position 0.

    """
    id: str
    ntype: str
    words: tuple
    position: int = 0


@dataclass(frozen=True)
class Edge:
    """A typed directed edge between node ids.

    """
    src: str
    dst: str
    etype: str


@dataclass(frozen=True)
class HeteroGraph:
    """Typed nodes and typed directed edges of one dialogue, together
    with the dialogue id and reference summaries it was built from.

    """
    nodes: tuple
    edges: tuple
    graph_id: str = ""
    summaries: tuple = field(default=())

    def nodes_of_type(self, ntype):
        """Nodes of one type, in graph order.

        """
        return [node for node in self.nodes if node.ntype == ntype]

    def edges_of_type(self, etype):
        """Edges of one type, in graph order.

        """
        return [edge for edge in self.edges if edge.etype == etype]

    def word_count(self):
        """Total number of words over all nodes.

        """
        return sum(len(node.words) for node in self.nodes)


@dataclass(frozen=True)
class GraphStats:
    """Knowledge statistics of a corpus of graphs.

    """
    count: int
    coverage_pct: float
    avg_knowledge_nodes: float


def _speaker_words(speaker):
    """Tokens of a speaker name (never empty).

    """
    return tuple(tokenize(speaker)) or (speaker.strip().lower(),)


def _concept_words(concept):
    """Node text of a knowledge concept: multi-word concepts use
    underscores in the knowledge base.

    """
    return tuple(concept.replace('_', ' ').split()) or (concept,)


def _utterance_support(utterance, index, tagger, normalizer):
    """Map each tail concept reachable from the utterance's content
    words to the distinct tuples supporting it (first seen order).

    """
    support = {}
    for token, _ in content_words(list(utterance), tagger):
        for knowledge in retrieve_one_hop(normalizer.normalize(token), index):
            found = support.setdefault(knowledge.tail, [])
            if knowledge not in found:
                found.append(knowledge)
    return support


def select_tail(pair, shared_tails):
    """Pick the shared tail with the highest mean weight over all of
    its supporting tuples from both utterances of 'pair'; ties go to
    the lexicographically smallest tail.

    """
    if not shared_tails:
        raise ValidationError(
            "no shared tail concepts for utterance pair %s" % str(pair)
        )

    def rank(item):
        tail, tuples = item
        weights = [knowledge.weight for knowledge in tuples]
        return (-math.fsum(weights) / len(weights), tail)
    return min(shared_tails, key=rank)[0]


def build_uk_graph(dialogue, index, tagger, normalizer=None):
    """Build the utterance-knowledge bipartite graph: for every
    unordered utterance pair sharing tail concepts one tail is
    selected, identical selections merge into one knowledge node and
    each involved utterance gets one know-by edge to it. Returns
    (knowledge nodes, know-by edges).

    """
    normalizer = normalizer or SurfaceNormalizer()
    supports = [
        _utterance_support(utterance, index, tagger, normalizer)
        for _, utterance in dialogue.turns
    ]
    linked = {}
    for first, second in combinations(range(len(supports)), 2):
        shared = sorted(set(supports[first]) & set(supports[second]))
        if not shared:
            continue
        tail = select_tail(
            (first + 1, second + 1),
            [
                (concept, supports[first][concept] + supports[second][concept])
                for concept in shared
            ]
        )
        linked.setdefault(tail, set()).update((first + 1, second + 1))
    nodes = []
    edges = []
    for number, tail in enumerate(sorted(linked, key=_concept_words)):
        node = Node("K%d" % number, "knowledge", _concept_words(tail))
        nodes.append(node)
        edges.extend(
            Edge("U%d" % position, node.id, "know-by")
            for position in sorted(linked[tail])
        )
    return nodes, edges


def build_su_graph(dialogue):
    """Build the speaker-utterance bipartite graph: one node per
    distinct speaker (first appearance order) and a speak-by edge to
    each of that speaker's utterances. Returns (speaker nodes, speak-by
    edges).

    """
    speakers = {}
    for speaker, _ in dialogue.turns:
        if speaker not in speakers:
            speakers[speaker] = Node(
                "S%d" % len(speakers), "speaker", _speaker_words(speaker)
            )
    edges = [
        Edge(speakers[speaker].id, "U%d" % position, "speak-by")
        for position, (speaker, _) in enumerate(dialogue.turns, start=1)
    ]
    return list(speakers.values()), edges


# pylint: disable=too-many-arguments
def assemble_hdg(dialogue, index, tagger, ablation="full", normalizer=None,
                 max_positions=64, max_node_tokens=100):
    """Merge the two bipartite graphs into the heterogeneous dialogue
    graph and add a reverse twin for every edge. The 'no_knowledge'
    ablation drops knowledge; 'no_speaker' drops speaker nodes and
    prefixes each utterance with its speaker's tokens instead.

    """
    if ablation not in GRAPH_ABLATIONS:
        raise ValidationError(
            "unknown graph ablation '%s', expected one of %s" % (
                ablation, str(GRAPH_ABLATIONS)
            )
        )
    if not dialogue.turns:
        raise ValidationError("dialogue '%s' has no turns" % dialogue.id)
    if len(dialogue.turns) > max_positions:
        raise ValidationError(
            "dialogue '%s' has %d utterances, more than max_positions "
            "(%d)" % (dialogue.id, len(dialogue.turns), max_positions)
        )
    utterances = []
    for position, (speaker, utterance) in enumerate(dialogue.turns, start=1):
        words = tuple(utterance)
        if ablation == "no_speaker":
            words = _speaker_words(speaker) + words
        utterances.append(
            Node("U%d" % position, "utterance", words[:max_node_tokens],
                 position)
        )
    speakers, speak_edges = (
        build_su_graph(dialogue) if ablation != "no_speaker" else ([], [])
    )
    knowledge, know_edges = (
        build_uk_graph(dialogue, index, tagger, normalizer)
        if ablation != "no_knowledge" else ([], [])
    )
    forward = speak_edges + know_edges
    reverse = [
        Edge(edge.dst, edge.src, REVERSE_EDGE[edge.etype]) for edge in forward
    ]
    graph = HeteroGraph(
        nodes=tuple(speakers + utterances + knowledge),
        edges=tuple(forward + reverse),
        graph_id=dialogue.id,
        summaries=tuple(
            tuple(summary) for summary in dialogue.reference_summaries
        ),
    )
    validate_graph(graph)
    return graph


def _check(condition, context, message):
    """Raise a ValidationError carrying 'context' unless 'condition'.

    """
    if not condition:
        raise ValidationError("%s: %s" % (context, message))


# pylint: disable=too-many-locals
def validate_graph(graph, context=None):
    """Check every structural invariant of a HeteroGraph.

    """
    context = context or "graph '%s'" % graph.graph_id
    by_id = {}
    for node in graph.nodes:
        _check(node.ntype in NODE_TYPES, context,
               "node '%s' has unknown type '%s'" % (node.id, node.ntype))
        _check(node.id not in by_id, context,
               "duplicate node id '%s'" % node.id)
        _check(len(node.words) > 0, context,
               "node '%s' has no words" % node.id)
        by_id[node.id] = node
    utterances = graph.nodes_of_type("utterance")
    _check(
        sorted(node.position for node in utterances) ==
        list(range(1, len(utterances) + 1)),
        context, "utterance positions are not 1..%d" % len(utterances)
    )
    for node in graph.nodes:
        if node.ntype != "utterance":
            _check(node.position == 0, context,
                   "%s node '%s' has position %d" % (
                       node.ntype, node.id, node.position))
    texts = [node.words for node in graph.nodes_of_type("knowledge")]
    _check(len(texts) == len(set(texts)), context,
           "knowledge node texts are not unique")
    expected = {
        "speak-by": ("speaker", "utterance"),
        "know-by": ("utterance", "knowledge"),
        "rev-speak-by": ("utterance", "speaker"),
        "rev-know-by": ("knowledge", "utterance"),
    }
    seen = Counter()
    for edge in graph.edges:
        _check(edge.etype in EDGE_TYPES, context,
               "edge %s->%s has unknown type '%s'" % (
                   edge.src, edge.dst, edge.etype))
        _check(edge.src in by_id and edge.dst in by_id, context,
               "edge %s->%s has an unknown endpoint" % (edge.src, edge.dst))
        _check(
            (by_id[edge.src].ntype, by_id[edge.dst].ntype) ==
            expected[edge.etype],
            context, "%s edge %s->%s joins the wrong node types" % (
                edge.etype, edge.src, edge.dst)
        )
        seen[edge] += 1
    _check(max(seen.values(), default=1) == 1, context, "duplicate edges")
    for etype, reverse_type in REVERSE_EDGE.items():
        forward = Counter(
            (edge.src, edge.dst) for edge in graph.edges_of_type(etype)
        )
        backward = Counter(
            (edge.dst, edge.src) for edge in graph.edges_of_type(reverse_type)
        )
        _check(forward == backward, context,
               "%s edges and %s edges are not reverse twins" % (
                   etype, reverse_type))
    for node in graph.nodes_of_type("knowledge"):
        neighbors = {
            edge.src for edge in graph.edges_of_type("know-by")
            if edge.dst == node.id
        }
        _check(len(neighbors) >= 2, context,
               "knowledge node '%s' has fewer than two utterances" % node.id)


def knowledge_count(graph):
    """Number of knowledge nodes in a graph.

    """
    return len(graph.nodes_of_type("knowledge"))


def stats_from_graphs(graphs):
    """Count, coverage percentage and average knowledge node count of
    already built graphs.

    """
    graphs = list(graphs)
    if not graphs:
        raise ValidationError("cannot compute statistics of an empty corpus")
    counts = [knowledge_count(graph) for graph in graphs]
    return GraphStats(
        count=len(graphs),
        coverage_pct=100.0 * sum(1 for count in counts if count) / len(counts),
        avg_knowledge_nodes=math.fsum(counts) / len(counts),
    )


def graph_stats(corpus, index, tagger, ablation="full", normalizer=None,
                max_positions=64):
    """Build every dialogue's graph and report (count, coverage %,
    average knowledge nodes).

    """
    if not corpus:
        raise ValidationError("cannot compute statistics of an empty corpus")
    return stats_from_graphs(
        assemble_hdg(
            dialogue, index, tagger, ablation, normalizer,
            max_positions=max_positions
        )
        for dialogue in corpus
    )


STATS_TABLE = Template(
    "{{ '%-8s' | format('Split') }} {{ '%8s' | format('#') }} "
    "{{ '%10s' | format('Coverage') }} {{ '%13s' | format('Average Know') }}\n"
    "{% for split, stats in rows %}"
    "{{ '%-8s' | format(split) }} {{ '%8d' | format(stats.count) }} "
    "{{ '%9.2f%%' | format(stats.coverage_pct) }} "
    "{{ '%13.2f' | format(stats.avg_knowledge_nodes) }}\n"
    "{% endfor %}"
)


def render_stats_table(rows):
    """Render (split name, GraphStats) rows in the knowledge
    statistics table layout.

    """
    return STATS_TABLE.render(rows=rows)


def build_corpus_graphs(dialogues, index, tagger, ablation="full",
                        normalizer=None, max_positions=64,
                        max_node_tokens=100, workers=1):
    """Build graphs for a list of dialogues, in input order, fanning
    out over 'workers' threads when more than one.

    """
    def build(dialogue):
        return assemble_hdg(
            dialogue, index, tagger, ablation, normalizer,
            max_positions, max_node_tokens
        )
    if workers <= 1:
        return [build(dialogue) for dialogue in dialogues]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(build, dialogues))


def _canonical_key(node):
    """Sort key: speakers (kept in order), utterances by position,
    knowledge by text.

    """
    rank = _NODE_ORDER.get(node.ntype, len(_NODE_ORDER))
    if node.ntype == "utterance":
        return (rank, node.position, ())
    if node.ntype == "knowledge":
        return (rank, 0, node.words)
    return (rank, 0, ())


def serialize_graph(graph):
    """Serialize a graph to one line of versioned JSON with explicit
    node and edge type tags.

    """
    record = {
        'format_version': GRAPH_FORMAT_VERSION,
        'id': graph.graph_id,
        'summaries': [list(summary) for summary in graph.summaries],
        'nodes': [
            {
                'id': node.id,
                'type': node.ntype,
                'words': list(node.words),
                'position': node.position,
            }
            for node in sorted(graph.nodes, key=_canonical_key)
        ],
        'edges': [
            {'src': edge.src, 'dst': edge.dst, 'type': edge.etype}
            for edge in graph.edges
        ],
    }
    return json.dumps(record, sort_keys=True, separators=(',', ':'))


def _field(record, name, kind, context):
    """Fetch a typed field from a decoded record.

    """
    if not isinstance(record, dict) or name not in record:
        raise FormatError("%s: missing field '%s'" % (context, name))
    value = record[name]
    if not isinstance(value, kind) or isinstance(value, bool):
        raise FormatError(
            "%s: field '%s' should be %s, got %s" % (
                context, name, kind.__name__, type(value).__name__
            )
        )
    return value


def deserialize_graph(text, line_no=None):
    """Parse one serialized graph, validating its structure.

    """
    context = "graph record" + (" at line %d" % line_no if line_no else "")
    try:
        record = json.loads(text)
    except ValueError as err:
        raise FormatError("%s: invalid JSON - %s" % (context, str(err))) \
            from err
    version = _field(record, 'format_version', int, context)
    if version != GRAPH_FORMAT_VERSION:
        raise FormatError(
            "%s: format version %d, expected %d" % (
                context, version, GRAPH_FORMAT_VERSION
            )
        )
    graph_id = _field(record, 'id', str, context)
    nodes = []
    for number, item in enumerate(_field(record, 'nodes', list, context)):
        where = "%s nodes[%d]" % (context, number)
        words = _field(item, 'words', list, where)
        if not all(isinstance(word, str) for word in words):
            raise FormatError("%s: field 'words' must hold strings" % where)
        nodes.append(Node(
            _field(item, 'id', str, where),
            _field(item, 'type', str, where),
            tuple(words),
            _field(item, 'position', int, where),
        ))
    edges = []
    for number, item in enumerate(_field(record, 'edges', list, context)):
        where = "%s edges[%d]" % (context, number)
        edges.append(Edge(
            _field(item, 'src', str, where),
            _field(item, 'dst', str, where),
            _field(item, 'type', str, where),
        ))
    summaries = record.get('summaries', [])
    if not isinstance(summaries, list) or not all(
            isinstance(summary, list) for summary in summaries
    ):
        raise FormatError(
            "%s: field 'summaries' must be a list of token lists" % context
        )
    graph = HeteroGraph(
        nodes=tuple(nodes),
        edges=tuple(edges),
        graph_id=graph_id,
        summaries=tuple(tuple(summary) for summary in summaries),
    )
    validate_graph(graph, "%s (graph '%s')" % (context, graph_id))
    return graph


def write_graphs(graphs, path):
    """Write graphs to a JSON-lines graph file.

    """
    try:
        with open(path, 'w', encoding='UTF-8') as graph_file:
            for graph in graphs:
                graph_file.write(serialize_graph(graph) + "\n")
    except OSError as err:
        raise FormatError(
            "cannot write graph file '%s' - %s" % (path, str(err))
        ) from err


def read_graphs(path):
    """Read every graph of a JSON-lines graph file.

    """
    try:
        with open(path, 'r', encoding='UTF-8') as graph_file:
            return [
                deserialize_graph(line, line_no)
                for line_no, line in enumerate(graph_file, start=1)
                if line.strip()
            ]
    except OSError as err:
        raise FormatError(
            "cannot read graph file '%s' - %s" % (path, str(err))
        ) from err


def parse_dialogue(record, context="dialogue"):
    """Turn one decoded corpus record into a Dialogue.

    """
    dialogue_id = _field(record, 'id', str, context)
    turns = []
    for number, turn in enumerate(_field(record, 'turns', list, context)):
        where = "%s turns[%d]" % (context, number)
        turns.append((
            _field(turn, 'speaker', str, where),
            tuple(tokenize(_field(turn, 'text', str, where))),
        ))
    summaries = record.get('summaries', [])
    if isinstance(summaries, str):
        summaries = [summaries]
    if not isinstance(summaries, list) or not all(
            isinstance(summary, str) for summary in summaries
    ):
        raise FormatError(
            "%s: field 'summaries' must be a list of strings" % context
        )
    return Dialogue(
        dialogue_id,
        tuple(turns),
        tuple(tuple(tokenize(summary)) for summary in summaries)
    )


def read_corpus(path):
    """Read a JSON-lines dialogue corpus. Malformed lines are skipped
    with a warning; returns (dialogues, skipped line count).

    """
    dialogues = []
    skipped = 0
    try:
        with open(path, 'r', encoding='UTF-8') as corpus:
            for line_no, line in enumerate(corpus, start=1):
                if not line.strip():
                    continue
                context = "corpus '%s' line %d" % (path, line_no)
                try:
                    dialogues.append(parse_dialogue(json.loads(line), context))
                except ValueError as err:
                    info_msg("skipping %s: invalid JSON - %s" % (
                        context, str(err)))
                    skipped += 1
                except (FormatError, ValidationError) as err:
                    info_msg("skipping %s" % str(err))
                    skipped += 1
    except OSError as err:
        raise FormatError(
            "cannot read corpus '%s' - %s" % (path, str(err))
        ) from err
    return dialogues, skipped

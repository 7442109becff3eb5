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
"""Commonsense knowledge ingestion: parse a ConceptNet style tuple
dump, filter out useless relations and low weight tuples, and index the
remainder by head concept for one-hop retrieval.

"""
import csv
import json
import zlib
import struct
from types import MappingProxyType
from dataclasses import dataclass

from vtds_base import info_msg

from ..api_objects import CONTENT_TAGS
from .common import FormatError

DUMP_FORMATS = ("tsv", "csv")
DEFAULT_BLOCKLIST = frozenset((
    "Antonym",
    "EtymologicallyDerivedFrom",
    "NotHasProperty",
    "DistinctFrom",
    "NotCapableOf",
    "EtymologicallyRelatedTo",
    "NotDesires",
))
DEFAULT_MIN_WEIGHT = 1.0
INDEX_MAGIC = b"DHGNKIDX"
INDEX_VERSION = 1
_INDEX_HEADER = struct.Struct("<8sI")


@dataclass(frozen=True)
class KnowledgeTuple:
    """One knowledge fact: 'head' is related to 'tail' by 'relation'
    with confidence 'weight'.

    """
    head: str
    relation: str
    tail: str
    weight: float

    def __post_init__(self):
        if not self.head or not self.tail:
            raise FormatError(
                "knowledge tuple with an empty concept: %s" % repr(self)
            )
        if not self.weight >= 0.0:
            raise FormatError(
                "knowledge tuple with a negative weight: %s" % repr(self)
            )


def _concept_from_uri(uri):
    """Return the concept text of a '/c/<lang>/<concept>[/<pos>...]'
    URI, or None when it is not an English concept.

    """
    parts = uri.split('/')
    if len(parts) < 4 or parts[1] != 'c' or parts[2] != 'en':
        return None
    return parts[3].lower()


class DumpParser:
    """Parses dump lines, counting what it could not parse.

    """
    def __init__(self, dump_format):
        """Constructor

        """
        if dump_format not in DUMP_FORMATS:
            raise FormatError(
                "unknown knowledge dump format '%s', expected one of %s" % (
                    dump_format, str(DUMP_FORMATS)
                )
            )
        self.dump_format = dump_format
        self.lines = 0
        self.malformed = 0
        self.skipped = 0

    def __parse_tsv(self, fields):
        """'relation<TAB>head<TAB>tail<TAB>weight'

        """
        if len(fields) != 4:
            return None
        relation, head, tail, weight = fields
        return relation.strip(), head.strip().lower(), tail.strip().lower(), \
            float(weight)

    def __parse_csv(self, fields):
        """Public assertion layout:
        'uri<TAB>/r/relation<TAB>/c/en/head<TAB>/c/en/tail<TAB>{json}'

        """
        if len(fields) != 5 or not fields[1].startswith('/r/'):
            return None
        head = _concept_from_uri(fields[2])
        tail = _concept_from_uri(fields[3])
        if head is None or tail is None:
            # Other languages are not malformed, just not ours.
            self.skipped += 1
            return False
        info = json.loads(fields[4])
        return fields[1][3:], head, tail, float(info['weight'])

    def parse_fields(self, fields):
        """Turn the fields of one line into a KnowledgeTuple, or None
        when the line is malformed (counted) or skipped.

        """
        self.lines += 1
        try:
            parsed = (
                self.__parse_tsv(fields) if self.dump_format == "tsv"
                else self.__parse_csv(fields)
            )
            if parsed is False:
                return None
            if parsed is None:
                self.malformed += 1
                return None
            relation, head, tail, weight = parsed
            if not relation:
                self.malformed += 1
                return None
            return KnowledgeTuple(head, relation, tail, weight)
        except (ValueError, KeyError, TypeError, FormatError):
            self.malformed += 1
            return None


def parse_dump(stream, dump_format="tsv"):
    """Parse every line of 'stream' (an iterable of text lines) into
    KnowledgeTuples. Malformed lines are counted and reported; more
    than half of the lines being malformed is an error (most likely the
    wrong format flag).

    """
    parser = DumpParser(dump_format)
    tuples = []
    try:
        reader = csv.reader(stream, delimiter='\t', quoting=csv.QUOTE_NONE)
        for fields in reader:
            if not fields or (len(fields) == 1 and not fields[0].strip()):
                continue
            knowledge = parser.parse_fields(fields)
            if knowledge is not None:
                tuples.append(knowledge)
    except (OSError, UnicodeDecodeError, csv.Error) as err:
        raise FormatError(
            "cannot read knowledge dump - %s" % str(err)
        ) from err
    if parser.malformed:
        info_msg(
            "knowledge dump: %d of %d lines malformed and ignored" % (
                parser.malformed, parser.lines
            )
        )
    if parser.lines and parser.malformed * 2 > parser.lines:
        raise FormatError(
            "knowledge dump: %d of %d lines are malformed; is the format "
            "'%s' right?" % (parser.malformed, parser.lines, dump_format)
        )
    return tuples


def read_dump(path, dump_format="tsv"):
    """Parse a dump file by path.

    """
    try:
        with open(path, 'r', encoding='UTF-8', newline='') as dump:
            return parse_dump(dump, dump_format)
    except OSError as err:
        raise FormatError(
            "cannot open knowledge dump '%s' - %s" % (path, str(err))
        ) from err


def read_blocklist(path):
    """Read a relation blocklist override (one relation per line).

    """
    try:
        with open(path, 'r', encoding='UTF-8') as blocklist:
            return frozenset(
                line.strip() for line in blocklist
                if line.strip() and not line.startswith('#')
            )
    except OSError as err:
        raise FormatError(
            "cannot open relation blocklist '%s' - %s" % (path, str(err))
        ) from err


class ConceptIndex:
    """Filtered knowledge tuples indexed by head concept. Immutable
    after construction.

    """
    def __init__(self, tuples, blocklist=DEFAULT_BLOCKLIST,
                 min_weight=DEFAULT_MIN_WEIGHT, counts=None):
        """Constructor: filter 'tuples' and index the survivors by head
        concept, preserving dump order. 'counts', when given, replaces
        the parsed and dropped counters of the filter run (a reloaded
        index reports the counts of its original ingest).

        """
        self.blocklist = frozenset(blocklist)
        self.min_weight = float(min_weight)
        index = {}
        self.parsed = 0
        self.dropped_relation = 0
        self.dropped_weight = 0
        for knowledge in tuples:
            self.parsed += 1
            if knowledge.relation in self.blocklist:
                self.dropped_relation += 1
                continue
            if knowledge.weight < self.min_weight:
                self.dropped_weight += 1
                continue
            index.setdefault(knowledge.head, []).append(knowledge)
        if counts is not None:
            self.parsed = int(counts['parsed'])
            self.dropped_relation = int(counts['dropped_relation'])
            self.dropped_weight = int(counts['dropped_weight'])
        self.__index = MappingProxyType(
            {head: tuple(found) for head, found in index.items()}
        )

    @property
    def kept(self):
        """Number of tuples that passed the filter.

        """
        return sum(len(found) for found in self.__index.values())

    def heads(self):
        """The set of indexed head concepts.

        """
        return frozenset(self.__index)

    def tuples(self):
        """Every indexed tuple, grouped by head in first-seen order.

        """
        return [
            knowledge for found in self.__index.values()
            for knowledge in found
        ]

    def retrieve(self, word):
        """All indexed tuples whose head is 'word'.

        """
        return list(self.__index.get(word, ()))

    def report(self):
        """Filtering counts as a dictionary.

        """
        return {
            'parsed': self.parsed,
            'kept': self.kept,
            'dropped_relation': self.dropped_relation,
            'dropped_weight': self.dropped_weight,
        }


def passes_filter(knowledge, index):
    """False iff the tuple's relation is blocked or its weight is
    below the index's minimum weight.

    """
    return (
        knowledge.relation not in index.blocklist and
        knowledge.weight >= index.min_weight
    )


def retrieve_one_hop(word, index):
    """Return every filtered tuple whose head concept is 'word' (the
    caller lowercases), or an empty list.

    """
    return index.retrieve(word)


def content_words(utterance, tagger):
    """Return (token, position) for each token of 'utterance' tagged
    as a noun, verb, adjective or adverb.

    """
    if not utterance:
        return []
    tags = tagger.tag(utterance)
    return [
        (token, position)
        for position, (token, tag) in enumerate(zip(utterance, tags))
        if tag in CONTENT_TAGS
    ]


def save_index(index, path):
    """Persist an index as a versioned, compressed binary cache.

    """
    body = json.dumps(
        {
            'blocklist': sorted(index.blocklist),
            'min_weight': index.min_weight,
            'counts': index.report(),
            'tuples': [
                [item.relation, item.head, item.tail, item.weight]
                for item in index.tuples()
            ],
        },
        sort_keys=True, separators=(',', ':')
    ).encode('UTF-8')
    try:
        with open(path, 'wb') as cache:
            cache.write(_INDEX_HEADER.pack(INDEX_MAGIC, INDEX_VERSION))
            cache.write(zlib.compress(body, 9))
    except OSError as err:
        raise FormatError(
            "cannot write knowledge index '%s' - %s" % (path, str(err))
        ) from err


def load_index(path):
    """Load an index written by save_index().

    """
    try:
        with open(path, 'rb') as cache:
            blob = cache.read()
    except OSError as err:
        raise FormatError(
            "cannot read knowledge index '%s' - %s" % (path, str(err))
        ) from err
    if len(blob) < _INDEX_HEADER.size:
        raise FormatError("knowledge index '%s' is truncated" % path)
    magic, version = _INDEX_HEADER.unpack_from(blob)
    if magic != INDEX_MAGIC:
        raise FormatError("'%s' is not a knowledge index" % path)
    if version != INDEX_VERSION:
        raise FormatError(
            "knowledge index '%s' has format version %d, expected %d" % (
                path, version, INDEX_VERSION
            )
        )
    try:
        body = json.loads(zlib.decompress(blob[_INDEX_HEADER.size:]))
    except (zlib.error, ValueError) as err:
        raise FormatError(
            "knowledge index '%s' is corrupt - %s" % (path, str(err))
        ) from err
    try:
        return ConceptIndex(
            [
                KnowledgeTuple(head, relation, tail, float(weight))
                for relation, head, tail, weight in body['tuples']
            ],
            blocklist=body['blocklist'],
            min_weight=body['min_weight'],
            counts=body['counts'],
        )
    except (KeyError, TypeError, ValueError) as err:
        raise FormatError(
            "knowledge index '%s' has an invalid body - %s: %s" % (
                path, type(err).__name__, str(err)
            )
        ) from err

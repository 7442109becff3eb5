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
"""Token vocabulary shared by the node encoder and the decoder.

"""
from collections import Counter

from .common import (
    FormatError,
    ValidationError
)

PAD = "<pad>"
UNK = "<unk>"
BOS = "<s>"
EOS = "</s>"
SPECIALS = (PAD, UNK, BOS, EOS)
VOCAB_HEADER = "# dhgn-vocab"
VOCAB_VERSION = 1


class Vocabulary:
    """Token <-> id mapping. The special tokens always hold ids 0..3,
    the remaining tokens follow by descending frequency, ties broken
    alphabetically.

    """
    def __init__(self, counts, min_freq=2):
        """Constructor: keep every token of 'counts' (token -> frequency)
        seen at least 'min_freq' times.

        """
        if min_freq < 1:
            raise ValidationError(
                "vocabulary min_freq must be at least 1, got %s" %
                str(min_freq)
            )
        self.min_freq = min_freq
        kept = sorted(
            (
                (token, freq) for token, freq in counts.items()
                if freq >= min_freq and token not in SPECIALS
            ),
            key=lambda item: (-item[1], item[0])
        )
        self.freqs = dict(kept)
        self.itos = list(SPECIALS) + [token for token, _ in kept]
        self.stoi = {token: number for number, token in enumerate(self.itos)}

    pad_id = property(lambda self: self.stoi[PAD])
    unk_id = property(lambda self: self.stoi[UNK])
    bos_id = property(lambda self: self.stoi[BOS])
    eos_id = property(lambda self: self.stoi[EOS])

    def __len__(self):
        return len(self.itos)

    def __contains__(self, token):
        return token in self.stoi

    def __eq__(self, other):
        return isinstance(other, Vocabulary) and self.itos == other.itos

    def __hash__(self):
        return hash(tuple(self.itos))

    def token_id(self, token):
        """Id of 'token', the UNK id when it is not in the vocabulary.

        """
        return self.stoi.get(token, self.stoi[UNK])

    def ids(self, tokens):
        """Ids of a token sequence (OOV -> UNK).

        """
        return [self.token_id(token) for token in tokens]

    def token(self, token_id):
        """Token of an in-vocabulary id.

        """
        return self.itos[token_id]

    def to_list(self):
        """[token, frequency] pairs of the non-special tokens, in id
        order, for checkpoint metadata.

        """
        return [[token, self.freqs[token]] for token in self.itos[4:]]

    @classmethod
    def from_list(cls, pairs, min_freq=1):
        """Rebuild a vocabulary from to_list() output. Frequencies in
        'pairs' already passed the original threshold.

        """
        vocab = cls({}, min_freq=1)
        vocab.min_freq = min_freq
        vocab.freqs = {token: int(freq) for token, freq in pairs}
        vocab.itos = list(SPECIALS) + [token for token, _ in pairs]
        vocab.stoi = {
            token: number for number, token in enumerate(vocab.itos)
        }
        return vocab

    def save(self, path):
        """Write the vocabulary file: a versioned header line, then one
        'token<TAB>frequency' line per non-special token.

        """
        try:
            with open(path, 'w', encoding='UTF-8') as vocab_file:
                vocab_file.write(
                    "%s %d min_freq=%d\n" % (
                        VOCAB_HEADER, VOCAB_VERSION, self.min_freq
                    )
                )
                for token, freq in self.to_list():
                    vocab_file.write("%s\t%d\n" % (token, freq))
        except OSError as err:
            raise FormatError(
                "cannot write vocabulary '%s' - %s" % (path, str(err))
            ) from err

    @classmethod
    def load(cls, path):
        """Read a vocabulary file written by save().

        """
        try:
            with open(path, 'r', encoding='UTF-8') as vocab_file:
                lines = vocab_file.read().split('\n')
        except OSError as err:
            raise FormatError(
                "cannot read vocabulary '%s' - %s" % (path, str(err))
            ) from err
        header = lines[0].split() if lines else []
        if len(header) != 4 or " ".join(header[:2]) != VOCAB_HEADER:
            raise FormatError("'%s' is not a vocabulary file" % path)
        if header[2] != str(VOCAB_VERSION):
            raise FormatError(
                "vocabulary '%s' has format version %s, expected %d" % (
                    path, header[2], VOCAB_VERSION
                )
            )
        pairs = []
        for line_no, line in enumerate(lines[1:], start=2):
            if not line:
                continue
            fields = line.split('\t')
            if len(fields) != 2 or not fields[1].isdigit():
                raise FormatError(
                    "vocabulary '%s' line %d: expected "
                    "'token<TAB>frequency'" % (path, line_no)
                )
            pairs.append((fields[0], int(fields[1])))
        key, _, min_freq = header[3].partition('=')
        if key != "min_freq" or not min_freq.isdigit():
            raise FormatError(
                "vocabulary '%s' has a bad header field '%s'" % (
                    path, header[3]
                )
            )
        return cls.from_list(pairs, int(min_freq))


def count_tokens(graphs):
    """Count the tokens of the speaker and utterance nodes and the
    reference summaries of a list of graphs. Knowledge words are left
    out: they reach the output through the copy distribution.

    """
    counts = Counter()
    for graph in graphs:
        for node in graph.nodes:
            if node.ntype != "knowledge":
                counts.update(node.words)
        for summary in graph.summaries:
            counts.update(summary)
    return counts


def build_vocab(graphs, min_freq=2):
    """Build the training vocabulary from a list of graphs.

    """
    return Vocabulary(count_tokens(graphs), min_freq)

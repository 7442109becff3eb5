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
"""Attention based LSTM pointer-generator decoder with greedy and beam
search decoding.

The output distribution at every step is over the extended vocabulary:
the training vocabulary followed by the source words of the current
graph that are not in it, so every source word can be copied.

"""
from dataclasses import (
    dataclass,
    field
)

import numpy as np

from .common import ValidationError
from .parameters import Linear
from .node_encoder import lstm_step
from .tensor import (
    Tensor,
    add,
    mul,
    matmul,
    concat,
    transpose,
    lookup,
    sigmoid,
    tanh,
    softmax,
    mean,
    log,
    index,
    no_grad
)


class ExtendedVocab:
    """The vocabulary extended with the out-of-vocabulary words of one
    source, plus the constant copy matrix mapping every source word
    position to its extended id.

    """
    def __init__(self, vocab, source_words, dtype=np.float64):
        """Constructor

        """
        self.vocab = vocab
        self.source_words = tuple(source_words)
        self.oov = []
        positions = {}
        for word in self.source_words:
            if word not in vocab and word not in positions:
                positions[word] = len(vocab) + len(self.oov)
                self.oov.append(word)
        self.oov_ids = positions
        self.source_ids = np.array(
            [self.ext_id(word) for word in self.source_words], dtype=np.int64
        )
        self.copy_matrix = np.zeros(
            (len(self.source_words), len(self)), dtype=dtype
        )
        self.copy_matrix[np.arange(len(self.source_words)),
                         self.source_ids] = 1.0

    def __len__(self):
        return len(self.vocab) + len(self.oov)

    def ext_id(self, word):
        """Extended id of a word: its vocabulary id, its copy slot when
        it is a source word outside the vocabulary, UNK otherwise.

        """
        if word in self.vocab:
            return self.vocab.token_id(word)
        return self.oov_ids.get(word, self.vocab.unk_id)

    def input_id(self, ext_id):
        """Vocabulary id to embed for an extended id (copy slots embed
        as UNK).

        """
        return ext_id if ext_id < len(self.vocab) else self.vocab.unk_id

    def token(self, ext_id):
        """Surface string of an extended id.

        """
        if ext_id < len(self.vocab):
            return self.vocab.token(ext_id)
        return self.oov[ext_id - len(self.vocab)]


class DecoderParams:
    """Decoder LSTM, additive attention, generation gate and the two
    layer vocabulary projection. The word embedding table is shared
    with the node encoder.

    """
    def __init__(self, store, embedding, vocab_size, embed_dim,
                 decoder_dim, prefix="decoder"):
        """Constructor

        """
        self.embedding = embedding
        self.dim = decoder_dim
        self.lstm_weight = store.create(
            "%s.lstm.weight" % prefix,
            (embed_dim + 2 * decoder_dim, 4 * decoder_dim)
        )
        self.lstm_bias = store.create(
            "%s.lstm.bias" % prefix, (1, 4 * decoder_dim)
        )
        self.att_memory = Linear(
            store, "%s.att.memory" % prefix, decoder_dim, decoder_dim,
            bias=False
        )
        self.att_state = Linear(
            store, "%s.att.state" % prefix, decoder_dim, decoder_dim
        )
        self.att_v = store.create("%s.att.v" % prefix, (decoder_dim, 1))
        self.gate = Linear(
            store, "%s.gate" % prefix, 2 * decoder_dim + embed_dim, 1
        )
        self.hidden_out = Linear(
            store, "%s.out.hidden" % prefix, 2 * decoder_dim, decoder_dim
        )
        self.vocab_out = Linear(
            store, "%s.out.vocab" % prefix, decoder_dim, vocab_size
        )


@dataclass
class Memory:
    """Source word representations (W x D) with their precomputed
    attention projections.

    """
    word_reps: Tensor
    keys: Tensor


@dataclass
class DecoderState:
    """Decoder LSTM state s_t (and cell), the context vector c_t and the
    extended id of the previous token.

    """
    hidden: Tensor
    cell: Tensor
    context: Tensor
    prev_token: int


@dataclass
class StepOutput:
    """Attention over source words (1 x W), the generation gate p_gen
    (1 x 1) and the distribution over the extended vocabulary
    (1 x |extended|).

    """
    attention: Tensor
    p_gen: Tensor
    distribution: Tensor


@dataclass
class Hypothesis:
    """A partial or complete decoded sequence of extended ids.

    """
    tokens: tuple
    log_prob: float
    state: DecoderState = field(repr=False, default=None)
    finished: bool = False

    def score(self, length_norm=False):
        """Ranking score: cumulative log probability, or its mean per
        token with length normalization.

        """
        if length_norm and self.tokens:
            return self.log_prob / len(self.tokens)
        return self.log_prob


def make_memory(word_reps, params):
    """Wrap source word representations for attention.

    """
    return Memory(word_reps=word_reps, keys=params.att_memory(word_reps))


def init_state(word_reps, bos_id):
    """s_0 is the mean of the source word representations, the cell and
    c_0 start at zero.

    """
    if word_reps.shape[0] == 0:
        raise ValidationError("cannot decode from an empty source")
    hidden = mean(word_reps, axis=0, keepdims=True)
    zeros = np.zeros((1, word_reps.shape[1]), dtype=word_reps.dtype)
    return DecoderState(
        hidden=hidden, cell=Tensor(zeros), context=Tensor(zeros.copy()),
        prev_token=bos_id
    )


def final_distribution(p_gen, vocab_dist, attention, ext):
    """p_gen * P_vocab (zero on copy slots) + (1 - p_gen) * copy
    attention mass of every extended id.

    """
    generated = mul(vocab_dist, p_gen)
    if ext.oov:
        generated = concat(
            [
                generated,
                Tensor(np.zeros((1, len(ext.oov)), dtype=vocab_dist.dtype))
            ],
            axis=1
        )
    copied = matmul(attention, ext.copy_matrix)
    return add(generated, mul(copied, 1.0 - p_gen))


def decode_step(state, memory, params, ext, forced_p_gen=None):
    """Advance the decoder by one token: returns (StepOutput, next
    DecoderState). 'forced_p_gen' pins the generation gate.

    """
    inputs = lookup(params.embedding, [ext.input_id(state.prev_token)])
    hidden, cell = lstm_step(
        concat([inputs, state.context], axis=1), state.hidden, state.cell,
        params.lstm_weight, params.lstm_bias
    )
    energies = matmul(
        tanh(add(memory.keys, params.att_state(hidden))), params.att_v
    )
    attention = softmax(transpose(energies), axis=-1)
    context = matmul(attention, memory.word_reps)
    if forced_p_gen is None:
        p_gen = sigmoid(params.gate(concat([context, hidden, inputs], axis=1)))
    else:
        p_gen = Tensor(np.full((1, 1), forced_p_gen, dtype=hidden.dtype))
    vocab_dist = softmax(
        params.vocab_out(params.hidden_out(concat([hidden, context], axis=1)))
    )
    output = StepOutput(
        attention=attention,
        p_gen=p_gen,
        distribution=final_distribution(p_gen, vocab_dist, attention, ext),
    )
    return output, DecoderState(
        hidden=hidden, cell=cell, context=context, prev_token=None
    )


def step_log_prob(output, ext_id):
    """log P(ext_id) of a StepOutput, as a tensor.

    """
    return log(index(output.distribution, (0, ext_id)))


def _advance(state, token):
    """The next step's state with 'token' as the previous token.

    """
    return DecoderState(state.hidden, state.cell, state.context, token)


def _top_tokens(distribution, count):
    """The 'count' most probable extended ids with their log
    probabilities; ties go to the lower id.

    """
    with np.errstate(divide='ignore'):
        log_probs = np.log(distribution.data[0])
    order = np.argsort(-log_probs, kind='stable')[:count]
    return [(int(token), float(log_probs[token])) for token in order]


def greedy_decode(memory, params, ext, max_len=100):
    """Decode by always taking the most probable token. Returns a
    Hypothesis without the EOS token.

    """
    eos_id = ext.vocab.eos_id
    with no_grad():
        state = init_state(memory.word_reps, ext.vocab.bos_id)
        tokens = []
        total = 0.0
        for _ in range(max_len):
            output, state = decode_step(state, memory, params, ext)
            token, log_prob = _top_tokens(output.distribution, 1)[0]
            total += log_prob
            if token == eos_id:
                return Hypothesis(tuple(tokens), total, None, True)
            tokens.append(token)
            state = _advance(state, token)
    return Hypothesis(tuple(tokens), total, None, False)


def outranks(first, second, length_norm=False):
    """Whether hypothesis 'first' outranks 'second': a finished
    hypothesis beats an unfinished one, then the higher score wins.

    """
    return (first.finished, first.score(length_norm)) > \
        (second.finished, second.score(length_norm))


# pylint: disable=too-many-arguments,too-many-locals
def beam_search(memory, params, ext, beam=10, max_len=100,
                length_norm=False):
    """Length bounded beam search over the extended vocabulary.

    Returns the best completed hypothesis (EOS stripped); if none
    completed within 'max_len' steps, the best live one with
    finished=False. The greedy hypothesis is always a candidate, so
    the result never ranks below greedy decoding.

    """
    if beam < 1:
        raise ValidationError("beam size must be at least 1, got %d" % beam)
    eos_id = ext.vocab.eos_id
    with no_grad():
        live = [
            Hypothesis((), 0.0, init_state(memory.word_reps,
                                           ext.vocab.bos_id))
        ]
        completed = []
        for _ in range(max_len):
            candidates = []
            for hyp in live:
                output, state = decode_step(hyp.state, memory, params, ext)
                for token, log_prob in _top_tokens(
                        output.distribution, beam
                ):
                    if token == eos_id:
                        candidates.append(Hypothesis(
                            hyp.tokens, hyp.log_prob + log_prob, None, True
                        ))
                    else:
                        candidates.append(Hypothesis(
                            hyp.tokens + (token,), hyp.log_prob + log_prob,
                            _advance(state, token)
                        ))
            candidates.sort(
                key=lambda item: (-item.score(length_norm), item.tokens)
            )
            live = []
            for candidate in candidates[:beam]:
                (completed if candidate.finished else live).append(candidate)
            if not live or len(completed) >= beam:
                break
    pool = completed or live
    best = pool[0]
    for candidate in pool[1:]:
        if outranks(candidate, best, length_norm):
            best = candidate
    if beam > 1:
        greedy = greedy_decode(memory, params, ext, max_len)
        if outranks(greedy, best, length_norm):
            best = greedy
    return Hypothesis(best.tokens, best.log_prob, None, best.finished)


def resolve(hypothesis, ext):
    """Surface strings of a hypothesis' tokens.

    """
    return [ext.token(token) for token in hypothesis.tokens]

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
"""The dialogue summarization model: node encoder, graph encoder and
pointer-generator decoder over one shared parameter store.

"""
import numpy as np

from .common import (
    Hyperparams,
    FormatError,
    ValidationError
)
from .parameters import (
    ParameterStore,
    load_checkpoint
)
from .vocab import Vocabulary
from .node_encoder import (
    EncoderParams,
    encode_nodes
)
from .graph_encoder import (
    GraphEncoder,
    GraphIndex
)
from .homogeneous import layer_factory
from .decoder import (
    DecoderParams,
    ExtendedVocab,
    make_memory,
    init_state,
    decode_step,
    step_log_prob,
    greedy_decode,
    beam_search,
    resolve
)
from .tensor import (
    add,
    no_grad
)


class DHGNModel:
    """All model parameters plus the forward computations that use
    them. Randomness (initialization, dropout) derives from the
    hyperparameter seed.

    """
    def __init__(self, hyperparams, vocab):
        """Constructor

        """
        self.hyperparams = hyperparams
        self.vocab = vocab
        init_seed, dropout_seed = np.random.SeedSequence(
            hyperparams.seed
        ).spawn(2)
        self.store = ParameterStore(
            np.random.default_rng(init_seed), hyperparams.init_scale,
            hyperparams.dtype
        )
        self.dropout_rng = np.random.default_rng(dropout_seed)
        self.encoder = EncoderParams(
            self.store, len(vocab), hyperparams.embed_dim,
            hyperparams.encoder_dim
        )
        self.graph_encoder = GraphEncoder(
            self.store, hyperparams, layer_factory(hyperparams)
        )
        self.decoder = DecoderParams(
            self.store, self.encoder.embedding, len(vocab),
            hyperparams.embed_dim, hyperparams.decoder_dim
        )

    def parameters(self):
        """Every parameter, in creation order.

        """
        return list(self.store)

    def encode(self, graph, training=False):
        """Encode a graph into a GraphEncoding.

        """
        batch = encode_nodes(
            [self.vocab.ids(node.words) for node in graph.nodes],
            self.encoder, self.hyperparams.dropout, training,
            self.dropout_rng, self.vocab.pad_id
        )
        return self.graph_encoder.forward(graph, batch)

    def layer_index(self, graph):
        """GraphIndex of a graph at the model's precision.

        """
        return GraphIndex(graph, self.store.dtype)

    def extended_vocab(self, encoding):
        """The extended vocabulary of an encoded graph.

        """
        return ExtendedVocab(self.vocab, encoding.words, self.store.dtype)

    def nll_loss(self, graph, reference, training=True):
        """Teacher forced negative log likelihood of 'reference' (a
        token list, EOS appended here). Returns (loss, target token
        count, count of targets scored as UNK).

        """
        if not reference:
            raise ValidationError(
                "graph '%s': empty reference summary" % graph.graph_id
            )
        encoding = self.encode(graph, training)
        ext = self.extended_vocab(encoding)
        memory = make_memory(encoding.word_reps, self.decoder)
        targets = [ext.ext_id(token) for token in reference]
        unknown = sum(
            1 for token in reference
            if token not in self.vocab and token not in ext.oov_ids
        )
        targets.append(self.vocab.eos_id)
        state = init_state(encoding.word_reps, self.vocab.bos_id)
        loss = None
        for target in targets:
            output, state = decode_step(state, memory, self.decoder, ext)
            term = step_log_prob(output, target)
            loss = term if loss is None else add(loss, term)
            state.prev_token = target
        return -loss, len(targets), unknown

    def summarize(self, graph, beam=None, max_len=None, length_norm=None):
        """Decode a summary: returns (tokens, log probability,
        finished). Beam 1 is greedy decoding.

        """
        hyperparams = self.hyperparams
        beam = hyperparams.beam if beam is None else beam
        max_len = hyperparams.max_decode_len if max_len is None else max_len
        length_norm = (
            hyperparams.length_norm if length_norm is None else length_norm
        )
        with no_grad():
            encoding = self.encode(graph, training=False)
            ext = self.extended_vocab(encoding)
            memory = make_memory(encoding.word_reps, self.decoder)
            if beam == 1:
                hypothesis = greedy_decode(memory, self.decoder, ext, max_len)
            else:
                hypothesis = beam_search(
                    memory, self.decoder, ext, beam, max_len, length_norm
                )
        return resolve(hypothesis, ext), hypothesis.log_prob, \
            hypothesis.finished

    def node_reps(self, graph):
        """Final node representations of a graph as a numpy array.

        """
        with no_grad():
            return self.encode(graph, training=False).node_reps.data.copy()

    def metadata(self):
        """Checkpoint metadata: the hyperparameters and vocabulary the
        parameters belong to.

        """
        return {
            'hyperparams': self.hyperparams.as_dict(),
            'vocab': self.vocab.to_list(),
            'vocab_min_freq': self.vocab.min_freq,
        }

    def save(self, path):
        """Write a checkpoint.

        """
        self.store.save(path, self.metadata())

    def checksum(self):
        """SHA-256 of the parameter values.

        """
        return self.store.checksum()

    @classmethod
    def load(cls, path, hyperparams=None):
        """Rebuild a model from a checkpoint. With 'hyperparams' the
        model is built from those (the runtime settings) and the
        checkpoint must fit its shapes.

        """
        metadata, arrays = load_checkpoint(path)
        try:
            saved = Hyperparams.from_dict(metadata['hyperparams'])
            vocab = Vocabulary.from_list(
                metadata['vocab'], metadata.get('vocab_min_freq', 1)
            )
        except (AttributeError, KeyError, TypeError, ValueError) as err:
            raise FormatError(
                "checkpoint '%s' has incomplete metadata - %s" % (
                    path, str(err)
                )
            ) from err
        if hyperparams is None:
            hyperparams = saved
        mismatched = {
            name: (value, saved.model_shape()[name])
            for name, value in hyperparams.model_shape().items()
            if saved.model_shape()[name] != value
        }
        if mismatched:
            raise ValidationError(
                "checkpoint/config incompatibility for '%s': %s" % (
                    path, ", ".join(
                        "%s is %s in the config but %s in the checkpoint" % (
                            name, str(values[0]), str(values[1])
                        )
                        for name, values in sorted(mismatched.items())
                    )
                )
            )
        model = cls(hyperparams, vocab)
        model.store.restore(arrays)
        return model


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
"""Public API module for the dialogue summarizer, this gives callers
access to the Summarizer API and prevents them from seeing the private
implementation of the API.

"""

from vtds_base import ContextualError
from .private.private_summarizer import PrivateSummarizer


class SummarizerAPI:
    """SummarizerAPI class presents the Summarizer API to callers.

    """
    def __init__(self, config, build_dir):
        """Constructor. Constructs the public API to be used for
        building graphs, training, summarizing and evaluating based on
        the 'config' data structure provided and an absolute path to
        the 'build_dir' which is a scratch area provided by the caller
        for default outputs and logs.

        """
        summarizer_config = config.get('summarizer', None)
        if summarizer_config is None:
            raise ContextualError(
                "no summarizer configuration found in top level "
                "configuration"
            )
        self.private = PrivateSummarizer(summarizer_config, build_dir)

    def hyperparams(self):
        """Return the validated hyperparameters of the configuration.

        """
        return self.private.hyperparams()

    def ingest_kb(self, dump_path=None, dump_format=None,
                  blocklist_path=None, min_weight=None, out_path=None):
        """Parse and filter a commonsense knowledge dump and persist
        the resulting concept index. Returns the index.

        """
        return self.private.ingest_kb(
            dump_path, dump_format, blocklist_path, min_weight, out_path
        )

    def build_graphs(self, corpus_path, index_path=None, out_path=None):
        """Build the heterogeneous dialogue graph of every dialogue of
        a corpus and write them out. Returns (graphs, statistics).

        """
        return self.private.build_graphs(corpus_path, index_path, out_path)

    def stats(self, graph_paths):
        """Return the rendered statistics table of the graph files in
        'graph_paths' ({split name: path}).

        """
        return self.private.stats(graph_paths)

    def build_vocab(self, graph_path, out_path=None):
        """Build and write the vocabulary of a training graph file.

        """
        return self.private.build_vocab(graph_path, out_path)

    def train(self, train_path, valid_path=None, checkpoint_path=None,
              vocab_path=None):
        """Train a model. Returns (model, training report).

        """
        return self.private.train(
            train_path, valid_path, checkpoint_path, vocab_path
        )

    def summarize(self, graph_path, checkpoint_path, out_path=None,
                  beam=None):
        """Generate and write a summary for every graph of a graph
        file. Returns the written records.

        """
        return self.private.summarize(
            graph_path, checkpoint_path, out_path, beam
        )

    def evaluate(self, candidates_path, references_path, mode=None):
        """Score summaries against references. Returns (scores,
        rendered table).

        """
        return self.private.evaluate(candidates_path, references_path, mode)

    def grad_check(self, graph_path=None, epsilon=None):
        """Check analytic gradients against finite differences.
        Returns the maximum relative error.

        """
        return self.private.grad_check(graph_path, epsilon)

    def export_reps(self, graph_path, checkpoint_path, out_path=None):
        """Write final graph layer node representations as CSV.
        Returns the output path.

        """
        return self.private.export_reps(graph_path, checkpoint_path, out_path)

    def pipeline(self, train_corpus=None, valid_corpus=None,
                 dump_path=None):
        """Run ingestion through evaluation end to end. Returns
        (scores, rendered table).

        """
        return self.private.pipeline(train_corpus, valid_corpus, dump_path)

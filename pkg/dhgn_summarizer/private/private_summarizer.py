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
"""Private implementation module for the summarizer pipeline:
knowledge ingestion, graph building, vocabulary, training,
summarization, evaluation, gradient checking and representation
export.

"""
import json
from os.path import join as path_join

from vtds_base import (
    info_msg,
    logfile
)

from .common import (
    Common,
    Hyperparams,
    FormatError,
    ValidationError
)
from . import FIXTURE_DIR
from .api_objects import (
    LexiconTagger,
    SurfaceNormalizer,
    StemLemmatizer,
    read_lexicon
)
from .kb_ingest import (
    DEFAULT_BLOCKLIST,
    ConceptIndex,
    read_dump,
    read_blocklist,
    save_index,
    load_index
)
from .graph_builder import (
    read_corpus,
    read_graphs,
    write_graphs,
    build_corpus_graphs,
    stats_from_graphs,
    render_stats_table
)
from .vocab import (
    Vocabulary,
    build_vocab
)
from .model import DHGNModel
from .trainer import train
from .evaluator import (
    corpus_eval,
    read_candidates,
    read_references,
    pair_up,
    render_rouge_table
)
from .graph_encoder import export_node_reps
from .tensor import grad_check

DEFAULT_DUMP = path_join(FIXTURE_DIR, "mini_conceptnet.tsv")
DEFAULT_TRAIN = path_join(FIXTURE_DIR, "train.jsonl")
DEFAULT_VALID = path_join(FIXTURE_DIR, "valid.jsonl")
DEFAULT_GRAD_CHECK_GRAPH = path_join(FIXTURE_DIR, "grad_check_graph.jsonl")


class PrivateSummarizer:
    """PrivateSummarizer class, implements the summarizer pipeline
    accessed through the python SummarizerAPI.

    """
    def __init__(self, config, build_dir):
        """Constructor, stash the 'summarizer' configuration section
        and the build directory where default outputs and logs go.

        """
        self.common = Common(config, build_dir)

    def __knowledge(self, key):
        """A setting of the 'knowledge' section.

        """
        return self.common.setting('knowledge', key)

    def hyperparams(self):
        """The validated hyperparameters of the configuration.

        """
        return self.common.hyperparams()

    def tagger(self):
        """Part of speech tagger for content word detection.

        """
        lexicon = self.__knowledge('lexicon')
        return LexiconTagger(read_lexicon(lexicon) if lexicon else None)

    def normalizer(self, index):
        """Knowledge query normalizer.

        """
        if self.__knowledge('lemmatize'):
            return StemLemmatizer(index.heads())
        return SurfaceNormalizer()

    def ingest_kb(self, dump_path=None, dump_format=None,
                  blocklist_path=None, min_weight=None, out_path=None):
        """Parse and filter a knowledge dump, persist the index and
        return it.

        """
        dump_path = dump_path or self.__knowledge('dump') or DEFAULT_DUMP
        dump_format = dump_format or self.__knowledge('dump_format')
        blocklist_path = blocklist_path or self.__knowledge('blocklist_file')
        blocklist = (
            read_blocklist(blocklist_path) if blocklist_path
            else frozenset(
                self.common.section('knowledge').get(
                    'blocked_relations', DEFAULT_BLOCKLIST
                ) or ()
            )
        )
        min_weight = (
            self.__knowledge('min_weight') if min_weight is None
            else min_weight
        )
        index = ConceptIndex(
            read_dump(dump_path, dump_format), blocklist, min_weight
        )
        report = index.report()
        info_msg(
            "knowledge: %d tuples parsed, %d kept (%d dropped by relation, "
            "%d by weight)" % (
                report['parsed'], report['kept'], report['dropped_relation'],
                report['dropped_weight']
            )
        )
        save_index(index, out_path or self.common.build_path("knowledge.idx"))
        return index

    def load_knowledge(self, index_path=None):
        """Load a persisted index, or ingest the configured dump when
        no index is given.

        """
        if index_path:
            return load_index(index_path)
        return self.ingest_kb()

    def build_graphs(self, corpus_path, index_path=None, out_path=None):
        """Build and write the graphs of a corpus; returns (graphs,
        statistics).

        """
        index = self.load_knowledge(index_path)
        graph = self.common.section('graph')
        dialogues, skipped = read_corpus(corpus_path)
        if skipped:
            out_path_log, _ = self.common.log_paths("build-graphs")
            with logfile(out_path_log) as log:
                log.write(
                    "%s: %d malformed dialogue lines skipped\n" % (
                        corpus_path, skipped
                    )
                )
            info_msg("%d malformed dialogue lines skipped" % skipped)
        if not dialogues:
            raise ValidationError(
                "no usable dialogues in corpus '%s'" % corpus_path
            )
        hyperparams = self.hyperparams()
        graphs = build_corpus_graphs(
            dialogues, index, self.tagger(),
            ablation=graph.get('ablation', "full"),
            normalizer=self.normalizer(index),
            max_positions=hyperparams.max_positions,
            max_node_tokens=hyperparams.max_node_tokens,
            workers=int(graph.get('workers', 1) or 1),
        )
        write_graphs(
            graphs, out_path or self.common.build_path("graphs.jsonl")
        )
        return graphs, stats_from_graphs(graphs)

    def stats(self, graph_paths):
        """Render the statistics table of named graph files
        ({split name: path}).

        """
        return render_stats_table(
            [
                (split, stats_from_graphs(read_graphs(path)))
                for split, path in graph_paths.items()
            ]
        )

    def build_vocab(self, graph_path, out_path=None):
        """Build and write the vocabulary of a training graph file.

        """
        vocab = build_vocab(
            read_graphs(graph_path),
            self.common.setting('vocabulary', 'min_freq')
        )
        vocab.save(out_path or self.common.build_path("vocab.txt"))
        info_msg("vocabulary: %d tokens" % len(vocab))
        return vocab

    def train(self, train_path, valid_path=None, checkpoint_path=None,
              vocab_path=None):
        """Train a model on a graph file; returns (model, report).
        The report is written as YAML next to the checkpoint.

        """
        train_graphs = read_graphs(train_path)
        valid_graphs = read_graphs(valid_path) if valid_path else []
        vocab = (
            Vocabulary.load(vocab_path) if vocab_path
            else build_vocab(
                train_graphs, self.common.setting('vocabulary', 'min_freq')
            )
        )
        checkpoint_path = checkpoint_path or \
            self.common.build_path("model.ckpt")
        model = DHGNModel(self.hyperparams(), vocab)
        report = train(
            model, train_graphs, valid_graphs, checkpoint_path,
            self.common.log_paths("train")
        )
        report.save(checkpoint_path + ".report.yaml")
        info_msg(
            "best epoch %d of %d, checkpoint '%s'" % (
                report.best_epoch, len(report.epochs), checkpoint_path
            )
        )
        return model, report

    def load_model(self, checkpoint_path):
        """Load a checkpoint into a model shaped by the configuration.

        """
        return DHGNModel.load(checkpoint_path, self.hyperparams())

    def summarize(self, graph_path, checkpoint_path, out_path=None,
                  beam=None):
        """Decode a summary for every graph and write one JSON line
        {id, summary, log_prob} per graph. Returns the records.

        """
        model = self.load_model(checkpoint_path)
        records = []
        unfinished = 0
        for graph in read_graphs(graph_path):
            tokens, log_prob, finished = model.summarize(graph, beam=beam)
            unfinished += 0 if finished else 1
            records.append({
                'id': graph.graph_id,
                'summary': " ".join(tokens),
                'log_prob': log_prob,
            })
        if unfinished:
            info_msg(
                "%d summaries reached the maximum length without an end "
                "token" % unfinished
            )
        out_path = out_path or self.common.build_path("summaries.jsonl")
        try:
            with open(out_path, 'w', encoding='UTF-8') as out:
                for record in records:
                    out.write(json.dumps(record, sort_keys=True) + "\n")
        except OSError as err:
            raise FormatError(
                "cannot write summaries '%s' - %s" % (out_path, str(err))
            ) from err
        return records

    def evaluate(self, candidates_path, references_path, mode=None):
        """Score a summaries file against references; returns (scores,
        rendered table).

        """
        mode = mode or self.common.setting('evaluation', 'reference_mode')
        scores = corpus_eval(
            pair_up(
                read_candidates(candidates_path),
                read_references(references_path)
            ),
            mode
        )
        return scores, render_rouge_table([("D-HGN", scores)])

    def grad_check(self, graph_path=None, epsilon=None):
        """Compare analytic and finite difference gradients of the
        full model's loss on a small graph. Returns the maximum
        relative error; exceeding the configured tolerance is a
        ValidationError.

        """
        settings = self.common.section('grad_check')
        epsilon = settings['epsilon'] if epsilon is None else epsilon
        graphs = read_graphs(graph_path or DEFAULT_GRAD_CHECK_GRAPH)
        graph = graphs[0]
        if not graph.summaries:
            raise ValidationError(
                "grad check graph '%s' has no reference summary" %
                graph.graph_id
            )
        values = self.hyperparams().as_dict()
        values.update({
            'embed_dim': settings['embed_dim'],
            'encoder_dim': settings['encoder_dim'],
            'decoder_dim': settings['encoder_dim'],
            'graph_dim': settings['graph_dim'],
            'heads': 1,
            'init_scale': settings['init_scale'],
            'dropout': 0.0,
            'dtype': "float64",
        })
        model = DHGNModel(Hyperparams.from_dict(values),
                          build_vocab(graphs, min_freq=1))
        reference = list(graph.summaries[0])
        error = grad_check(
            lambda: model.nll_loss(graph, reference, training=False)[0],
            model.parameters(), epsilon, settings['max_coords'],
            seed=model.hyperparams.seed, floor=settings['floor']
        )
        info_msg(
            "gradient check: max relative error %.3e over %d parameters" % (
                error, len(model.parameters())
            )
        )
        if not error < settings['tolerance']:
            raise ValidationError(
                "gradient check failed: max relative error %.3e is not "
                "below %.1e" % (error, settings['tolerance'])
            )
        return error

    def export_reps(self, graph_path, checkpoint_path, out_path=None):
        """Write the final graph layer representation of every node of
        every graph as CSV.

        """
        model = self.load_model(checkpoint_path)
        out_path = out_path or self.common.build_path("node_reps.csv")
        try:
            with open(out_path, 'w', encoding='UTF-8', newline='') as out:
                export_node_reps(
                    (
                        (graph, model.node_reps(graph))
                        for graph in read_graphs(graph_path)
                    ),
                    out
                )
        except OSError as err:
            raise FormatError(
                "cannot write node representations '%s' - %s" % (
                    out_path, str(err)
                )
            ) from err
        return out_path

    def pipeline(self, train_corpus=None, valid_corpus=None,
                 dump_path=None):
        """Ingest, build, train, summarize and evaluate end to end,
        all outputs in the build directory. Returns (scores, table).

        """
        path = self.common.build_path
        self.ingest_kb(dump_path=dump_path, out_path=path("knowledge.idx"))
        _, train_stats = self.build_graphs(
            train_corpus or DEFAULT_TRAIN, path("knowledge.idx"),
            path("train.graphs.jsonl")
        )
        _, valid_stats = self.build_graphs(
            valid_corpus or DEFAULT_VALID, path("knowledge.idx"),
            path("valid.graphs.jsonl")
        )
        info_msg(
            "\n" + render_stats_table(
                [("Train", train_stats), ("Valid", valid_stats)]
            )
        )
        self.build_vocab(path("train.graphs.jsonl"), path("vocab.txt"))
        self.train(
            path("train.graphs.jsonl"), path("valid.graphs.jsonl"),
            path("model.ckpt"), path("vocab.txt")
        )
        self.summarize(
            path("valid.graphs.jsonl"), path("model.ckpt"),
            path("summaries.jsonl")
        )
        return self.evaluate(
            path("summaries.jsonl"), valid_corpus or DEFAULT_VALID
        )

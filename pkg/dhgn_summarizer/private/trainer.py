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
"""Teacher forced maximum likelihood training with Adam, global norm
clipping, early stopping and best checkpoint retention.

"""
import json
import math
import time
from dataclasses import (
    dataclass,
    field,
    asdict
)

import numpy as np
import yaml

from vtds_base import (
    info_msg,
    logfile
)

from .common import (
    FormatError,
    ValidationError
)
from .evaluator import (
    corpus_eval,
    tokenize_for_scoring
)
from .optim import (
    Adam,
    clip_grad_norm
)
from .tensor import (
    backward,
    mul,
    no_grad
)


@dataclass
class TrainReport:
    """Per epoch records and the outcome of a training run.

    """
    epochs: list = field(default_factory=list)
    best_epoch: int = 0
    best_score: float = math.inf
    selection: str = "nll"
    stopped_early: bool = False
    unknown_targets: int = 0
    checksum: str = ""

    def final_train_nll(self):
        """Mean token NLL over the training set in the last epoch.

        """
        return self.epochs[-1]['train_nll'] if self.epochs else math.inf

    def as_dict(self):
        """Plain dictionary (YAML / JSON safe).

        """
        return asdict(self)

    def save(self, path):
        """Write the report as YAML.

        """
        try:
            with open(path, 'w', encoding='UTF-8') as report_file:
                yaml.safe_dump(self.as_dict(), report_file,
                               default_flow_style=False)
        except OSError as err:
            raise FormatError(
                "cannot write training report '%s' - %s" % (path, str(err))
            ) from err


def training_examples(graphs):
    """(graph, reference tokens) for every reference of every graph.

    """
    return [
        (graph, list(summary))
        for graph in graphs for summary in graph.summaries if summary
    ]


def mean_token_nll(model, examples):
    """Mean per token NLL of examples, without dropout or gradients.

    """
    total = 0.0
    tokens = 0
    with no_grad():
        for graph, reference in examples:
            loss, count, _ = model.nll_loss(graph, reference, training=False)
            total += loss.item()
            tokens += count
    return total / tokens if tokens else math.inf


def rouge_l_f1(model, graphs):
    """Corpus ROUGE-L F1 of the model's summaries against the graphs'
    references.

    """
    pairs = []
    for graph in graphs:
        if not graph.summaries:
            continue
        tokens, _, _ = model.summarize(graph)
        pairs.append((
            tokenize_for_scoring(tokens),
            [tokenize_for_scoring(summary) for summary in graph.summaries]
        ))
    if not pairs:
        return 0.0
    return corpus_eval(pairs)['rouge-l'].f1


def train_step(model, optimizer, batch, clip_norm, logs=(None, None)):
    """One optimizer step on a batch of examples, loss averaged per
    token. Returns (summed loss, token count, unknown targets,
    pre-clip gradient norm).

    """
    optimizer.zero_grad()
    batch_tokens = sum(len(reference) + 1 for _, reference in batch)
    total = 0.0
    unknown = 0
    for graph, reference in batch:
        loss, _, unk = model.nll_loss(graph, reference, training=True)
        value = loss.item()
        if not math.isfinite(value):
            raise ValidationError(
                "non-finite training loss %r on graph '%s'" % (
                    value, graph.graph_id
                ),
                *logs
            )
        backward(mul(loss, 1.0 / batch_tokens))
        total += value
        unknown += unk
    norm = clip_grad_norm(optimizer.params, clip_norm)
    optimizer.step()
    return total, batch_tokens, unknown, norm


def _selection_score(model, valid_graphs, valid_examples, selection):
    """Lower is better: validation NLL, or negated ROUGE-L F1.

    """
    if selection == "rouge":
        return -rouge_l_f1(model, valid_graphs)
    return mean_token_nll(model, valid_examples)


# pylint: disable=too-many-locals
def train(model, train_graphs, valid_graphs, checkpoint_path, log_paths):
    """Train 'model' in place. The best scoring parameters (by the
    configured selection) are written to 'checkpoint_path' and loaded
    back into the model at the end. One JSON record per epoch goes to
    the output log of 'log_paths'.

    """
    hyperparams = model.hyperparams
    examples = training_examples(train_graphs)
    if not examples:
        raise ValidationError(
            "no training graphs with reference summaries"
        )
    valid_graphs = list(valid_graphs) or list(train_graphs)
    valid_examples = training_examples(valid_graphs) or examples
    order_rng = np.random.default_rng(
        np.random.SeedSequence(hyperparams.seed).spawn(3)[2]
    )
    optimizer = Adam(
        model.parameters(), hyperparams.lr, hyperparams.betas,
        hyperparams.adam_eps
    )
    report = TrainReport(selection=hyperparams.selection)
    best = None
    waiting = 0
    out_path, err_path = log_paths
    with logfile(out_path) as out:
        for epoch in range(1, hyperparams.max_epochs + 1):
            started = time.perf_counter()
            order = order_rng.permutation(len(examples))
            epoch_loss = 0.0
            epoch_tokens = 0
            norms = []
            for start in range(0, len(order), hyperparams.batch_size):
                batch = [
                    examples[number]
                    for number in order[start:start + hyperparams.batch_size]
                ]
                loss, tokens, unknown, norm = train_step(
                    model, optimizer, batch, hyperparams.grad_clip_norm,
                    (out_path, err_path)
                )
                epoch_loss += loss
                epoch_tokens += tokens
                norms.append(norm)
                if epoch == 1:
                    report.unknown_targets += unknown
            score = _selection_score(
                model, valid_graphs, valid_examples, hyperparams.selection
            )
            record = {
                'epoch': epoch,
                'train_nll': epoch_loss / epoch_tokens,
                'valid_nll': (
                    score if hyperparams.selection == "nll"
                    else mean_token_nll(model, valid_examples)
                ),
                'grad_norm': max(norms),
                'seconds': round(time.perf_counter() - started, 3),
            }
            if hyperparams.selection == "rouge":
                record['valid_rouge_l'] = -score
            out.write(json.dumps(record, sort_keys=True) + "\n")
            out.flush()
            report.epochs.append(record)
            info_msg(
                "epoch %d: train nll %.4f, valid nll %.4f" % (
                    epoch, record['train_nll'], record['valid_nll']
                )
            )
            if score < report.best_score:
                report.best_score = score
                report.best_epoch = epoch
                best = model.store.snapshot()
                model.save(checkpoint_path)
                waiting = 0
            else:
                waiting += 1
                if waiting >= hyperparams.patience:
                    report.stopped_early = True
                    info_msg(
                        "stopping early after epoch %d: no improvement in "
                        "%d epochs" % (epoch, waiting)
                    )
                    break
    if report.unknown_targets:
        info_msg(
            "%d reference tokens were neither in the vocabulary nor in "
            "their source and were scored as UNK" % report.unknown_targets
        )
    if best is not None:
        model.store.restore(best)
    report.checksum = model.checksum()
    return report

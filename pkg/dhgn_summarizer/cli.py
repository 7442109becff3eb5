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
"""Command line entry point of the dialogue summarizer.

"""
import sys
from argparse import ArgumentParser
from os.path import abspath

import yaml
from vtds_base import (
    ContextualError,
    write_out
)

from .base_config import BaseConfig
from .summarizer import SummarizerAPI
from .private.common import (
    ABLATIONS,
    ValidationError
)
from .private.config import apply_ablation
from .private.graph_builder import render_stats_table

EXIT_OK = 0
EXIT_FORMAT = 1
EXIT_VALIDATION = 2


def _parser():
    """Argument parser with the global options and one sub-parser per
    command.

    """
    parser = ArgumentParser(
        prog="dhgn",
        description="Knowledge and speaker aware dialogue summarization"
    )
    parser.add_argument(
        "--config", action="append", default=[], metavar="FILE",
        help="configuration overlay file (repeatable, applied in order)"
    )
    parser.add_argument(
        "--set", action="append", default=[], dest="settings",
        metavar="KEY=VALUE",
        help="override one setting, e.g. 'model.graph_dim=64'"
    )
    parser.add_argument("--ablation", choices=ABLATIONS, default=None)
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--build-dir", default="build")
    parser.add_argument(
        "--test-overlay", action="store_true",
        help="apply the bundled desk sized test configuration"
    )
    commands = parser.add_subparsers(dest="command", required=True)

    command = commands.add_parser(
        "ingest-kb", help="filter a knowledge dump into an index"
    )
    command.add_argument("--dump", default=None)
    command.add_argument("--format", choices=("tsv", "csv"), default=None)
    command.add_argument("--blocklist", default=None)
    command.add_argument("--min-weight", type=float, default=None)
    command.add_argument("--out", default=None)

    command = commands.add_parser(
        "build-graphs", help="build dialogue graphs of a corpus"
    )
    command.add_argument("corpus")
    command.add_argument("--index", default=None)
    command.add_argument("--out", default=None)

    command = commands.add_parser(
        "stats", help="statistics table of graph files"
    )
    command.add_argument(
        "graphs", nargs="+", metavar="SPLIT=PATH",
        help="graph files, optionally named ('Train=train.jsonl')"
    )

    command = commands.add_parser(
        "build-vocab", help="vocabulary of a training graph file"
    )
    command.add_argument("graphs")
    command.add_argument("--out", default=None)

    command = commands.add_parser("train", help="train a model")
    command.add_argument("graphs")
    command.add_argument("--valid", default=None)
    command.add_argument("--vocab", default=None)
    command.add_argument("--checkpoint", default=None)

    command = commands.add_parser(
        "summarize", help="generate summaries of graphs"
    )
    command.add_argument("graphs")
    command.add_argument("checkpoint")
    command.add_argument("--beam", type=int, default=None)
    command.add_argument("--out", default=None)

    command = commands.add_parser(
        "evaluate", help="ROUGE scores of summaries"
    )
    command.add_argument("candidates")
    command.add_argument("references")
    command.add_argument("--mode", choices=("max", "avg"), default=None)

    command = commands.add_parser(
        "grad-check", help="compare analytic and numeric gradients"
    )
    command.add_argument("--graph", default=None)
    command.add_argument("--epsilon", type=float, default=None)

    command = commands.add_parser(
        "export-reps", help="write final graph layer node representations"
    )
    command.add_argument("graphs")
    command.add_argument("checkpoint")
    command.add_argument("--out", default=None)

    command = commands.add_parser(
        "pipeline", help="ingest, build, train, summarize and evaluate"
    )
    command.add_argument("--train", default=None)
    command.add_argument("--valid", default=None)
    command.add_argument("--dump", default=None)
    return parser


def _named_paths(specs):
    """{split name: path} from 'NAME=PATH' or bare 'PATH' arguments.

    """
    named = {}
    for spec in specs:
        name, sep, path = spec.partition('=')
        named[name if sep else spec] = path if sep else spec
    return named


def effective_config(args):
    """The composed 'summarizer' configuration selected by the global
    options.

    """
    config = BaseConfig().compose(
        args.config, args.settings, args.test_overlay
    )
    if args.ablation is not None:
        apply_ablation(config, args.ablation)
    if args.seed is not None:
        config.setdefault('training', {})['seed'] = args.seed
    return config


def _run(args, api):
    """Dispatch one command.

    """
    # pylint: disable=too-many-return-statements
    if args.command == "ingest-kb":
        api.ingest_kb(
            args.dump, args.format, args.blocklist, args.min_weight, args.out
        )
        return
    if args.command == "build-graphs":
        _, stats = api.build_graphs(args.corpus, args.index, args.out)
        write_out(render_stats_table([(args.corpus, stats)]))
        return
    if args.command == "stats":
        write_out(api.stats(_named_paths(args.graphs)))
        return
    if args.command == "build-vocab":
        api.build_vocab(args.graphs, args.out)
        return
    if args.command == "train":
        _, report = api.train(
            args.graphs, args.valid, args.checkpoint, args.vocab
        )
        write_out(
            "best epoch %d, score %.6f, checksum %s\n" % (
                report.best_epoch, report.best_score, report.checksum
            )
        )
        return
    if args.command == "summarize":
        api.summarize(args.graphs, args.checkpoint, args.out, args.beam)
        return
    if args.command == "evaluate":
        _, table = api.evaluate(args.candidates, args.references, args.mode)
        write_out(table)
        return
    if args.command == "grad-check":
        error = api.grad_check(args.graph, args.epsilon)
        settings = effective_config(args)['grad_check']
        write_out(
            "max relative error: %.3e (epsilon %.1e, floor %.1e, "
            "tolerance %.1e)\n" % (
                error,
                settings['epsilon'] if args.epsilon is None
                else args.epsilon,
                settings['floor'], settings['tolerance']
            )
        )
        return
    if args.command == "export-reps":
        write_out(
            "%s\n" % api.export_reps(args.graphs, args.checkpoint, args.out)
        )
        return
    _, table = api.pipeline(args.train, args.valid, args.dump)
    write_out(table)


def main(argv=None):
    """Run the command line in 'argv' (default: the process
    arguments). Returns the process exit code: 0 on success, 1 on an
    I/O or format error, 2 on a validation failure.

    """
    args = _parser().parse_args(argv)
    try:
        config = effective_config(args)
        write_out(
            "# effective configuration\n" +
            yaml.safe_dump(
                {'summarizer': config}, default_flow_style=False,
                sort_keys=True
            )
        )
        _run(args, SummarizerAPI({'summarizer': config},
                                 abspath(args.build_dir)))
    except ValidationError as err:
        sys.stderr.write("ERROR: %s\n" % str(err))
        return EXIT_VALIDATION
    except ContextualError as err:
        sys.stderr.write("ERROR: %s\n" % str(err))
        return EXIT_FORMAT
    return EXIT_OK


def entry():
    """Console script entry point.

    """
    sys.exit(main())

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
"""Tests of the command line: exit codes, outputs and determinism.

"""
import json
import re
import struct

import pytest

from dhgn_summarizer.cli import (
    EXIT_OK,
    EXIT_FORMAT,
    EXIT_VALIDATION,
    main
)
from dhgn_summarizer.private.parameters import (
    CHECKPOINT_MAGIC,
    CHECKPOINT_VERSION
)
from dhgn_summarizer.private.private_summarizer import (
    DEFAULT_TRAIN,
    DEFAULT_VALID
)


def _run(tmp_path, *argv):
    return main(
        ["--test-overlay", "--build-dir", str(tmp_path / "build")] +
        list(argv)
    )


def test_effective_configuration_is_printed(tmp_path, capsys):
    assert _run(tmp_path, "--seed", "11", "grad-check") == EXIT_OK
    out = capsys.readouterr().out
    assert out.startswith("# effective configuration\n")
    assert "seed: 11" in out


def test_grad_check_passes(tmp_path, capsys):
    assert _run(tmp_path, "grad-check") == EXIT_OK
    found = re.search(r"max relative error: (\S+)", capsys.readouterr().out)
    assert found is not None
    assert float(found.group(1)) < 1e-4
    assert "(epsilon 1.0e-05, floor 1.0e-05, tolerance 1.0e-04)" in \
        found.string


def test_missing_dump_is_a_format_error(tmp_path, capsys):
    assert _run(
        tmp_path, "ingest-kb", "--dump", str(tmp_path / "absent.tsv")
    ) == EXIT_FORMAT
    assert capsys.readouterr().err.startswith("ERROR: ")


def test_bad_setting_is_a_validation_error(tmp_path, capsys):
    assert _run(
        tmp_path, "--set", "model.dropout=2.0", "grad-check"
    ) == EXIT_VALIDATION
    assert "dropout" in capsys.readouterr().err


def test_a_command_is_required(tmp_path):
    with pytest.raises(SystemExit):
        _run(tmp_path)


@pytest.mark.parametrize(
    "manifest", [
        {'metadata': {}},
        {'parameters': [], 'metadata': {}},
        {'parameters': [], 'metadata': {'hyperparams': {}}},
    ]
)
def test_corrupt_checkpoint_is_a_format_error(tmp_path, capsys, manifest):
    graphs = str(tmp_path / "valid.graphs.jsonl")
    assert _run(
        tmp_path, "build-graphs", DEFAULT_VALID, "--out", graphs
    ) == EXIT_OK
    checkpoint = tmp_path / "broken.ckpt"
    text = json.dumps(manifest).encode('UTF-8')
    checkpoint.write_bytes(
        struct.pack("<8sIQ", CHECKPOINT_MAGIC, CHECKPOINT_VERSION,
                    len(text)) + text
    )
    capsys.readouterr()
    assert _run(
        tmp_path, "summarize", graphs, str(checkpoint)
    ) == EXIT_FORMAT
    assert capsys.readouterr().err.startswith("ERROR: ")


def test_identical_summaries_score_one(tmp_path, capsys):
    candidates = tmp_path / "candidates.jsonl"
    with open(DEFAULT_VALID, 'r', encoding='UTF-8') as corpus, \
         open(candidates, 'w', encoding='UTF-8') as out:
        for line in corpus:
            record = json.loads(line)
            out.write(json.dumps({
                'id': record['id'], 'summary': record['summaries'][0],
                'log_prob': 0.0
            }) + "\n")
    assert _run(
        tmp_path, "evaluate", str(candidates), DEFAULT_VALID
    ) == EXIT_OK
    row = [
        line for line in capsys.readouterr().out.splitlines()
        if line.startswith("D-HGN ")
    ][0]
    assert row.split()[1:] == ["100.00", "100.00", "100.00"]


def test_graphs_stats_and_vocab(tmp_path, capsys):
    graphs = str(tmp_path / "train.graphs.jsonl")
    vocab = tmp_path / "vocab.txt"
    assert _run(
        tmp_path, "build-graphs", DEFAULT_TRAIN, "--out", graphs
    ) == EXIT_OK
    assert (tmp_path / "build" / "knowledge.idx").is_file()
    assert _run(tmp_path, "stats", "Train=" + graphs) == EXIT_OK
    out = capsys.readouterr().out
    assert any(line.startswith("Train ") for line in out.splitlines())
    assert _run(
        tmp_path, "build-vocab", graphs, "--out", str(vocab)
    ) == EXIT_OK
    assert vocab.read_text(encoding='UTF-8').startswith("# dhgn-vocab")


def _train_and_summarize(tmp_path, build):
    def run(*argv):
        assert main(
            ["--test-overlay", "--seed", "3", "--build-dir", str(build)] +
            list(argv)
        ) == EXIT_OK
    graphs = str(build / "train.graphs.jsonl")
    valid = str(build / "valid.graphs.jsonl")
    checkpoint = str(build / "model.ckpt")
    run("build-graphs", DEFAULT_TRAIN, "--out", graphs)
    run("build-graphs", DEFAULT_VALID, "--out", valid)
    run("train", graphs, "--valid", valid, "--checkpoint", checkpoint)
    run("summarize", valid, checkpoint, "--beam", "1",
        "--out", str(build / "greedy.jsonl"))
    run("--set", "decoding.beam=1", "summarize", valid, checkpoint,
        "--out", str(build / "beam1.jsonl"))
    run("summarize", valid, checkpoint, "--out", str(build / "beam.jsonl"))
    run("export-reps", valid, checkpoint,
        "--out", str(build / "node_reps.csv"))
    return build


@pytest.mark.slow
def test_runs_are_reproducible(tmp_path):
    first = _train_and_summarize(tmp_path, tmp_path / "first")
    second = _train_and_summarize(tmp_path, tmp_path / "second")
    for name in ("model.ckpt", "beam.jsonl", "node_reps.csv"):
        assert (first / name).read_bytes() == (second / name).read_bytes()
    assert (first / "greedy.jsonl").read_bytes() == \
        (first / "beam1.jsonl").read_bytes()
    with open(first / "beam.jsonl", 'r', encoding='UTF-8') as beam:
        records = [json.loads(line) for line in beam]
    assert [record['id'] for record in records] == ["v01", "v02", "v03",
                                                    "v04"]


@pytest.mark.slow
def test_pipeline(tmp_path, capsys):
    assert _run(tmp_path, "pipeline") == EXIT_OK
    build = tmp_path / "build"
    for name in ("knowledge.idx", "train.graphs.jsonl", "vocab.txt",
                 "model.ckpt", "model.ckpt.report.yaml", "summaries.jsonl"):
        assert (build / name).is_file()
    header = [
        line for line in capsys.readouterr().out.splitlines()
        if line.startswith("Model ")
    ]
    assert header

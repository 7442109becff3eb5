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
"""Tests of the parameter store and the checkpoint archive.

"""
import json
import struct

import numpy as np
import pytest

from dhgn_summarizer.private.common import (
    FormatError,
    ValidationError
)
from dhgn_summarizer.private.parameters import (
    CHECKPOINT_MAGIC,
    CHECKPOINT_VERSION,
    ParameterStore,
    Linear,
    parse_checkpoint,
    load_checkpoint
)
from dhgn_summarizer.private.tensor import Tensor


def _store(seed=0):
    store = ParameterStore(np.random.default_rng(seed), 0.1)
    store.create("a.weight", (3, 2))
    store.create("a.bias", (1, 2), zero=True)
    return store


def test_init_is_seeded_and_bounded():
    first = _store(seed=5)
    second = _store(seed=5)
    assert np.array_equal(first["a.weight"].data, second["a.weight"].data)
    assert np.abs(first["a.weight"].data).max() <= 0.1
    assert not first["a.bias"].data.any()


def test_duplicate_name_is_rejected():
    store = _store()
    with pytest.raises(ValidationError):
        store.create("a.weight", (1, 1))


def test_checkpoint_round_trip(tmp_path):
    store = _store(seed=1)
    path = str(tmp_path / "model.ckpt")
    store.save(path, {'note': "kept"})
    metadata, arrays = load_checkpoint(path)
    assert metadata == {'note': "kept"}
    assert list(arrays) == store.names()
    fresh = _store(seed=2)
    fresh.restore(arrays)
    assert fresh.checksum() == store.checksum()


def test_serialization_is_deterministic():
    assert _store(seed=4).to_bytes({'x': 1}) == \
        _store(seed=4).to_bytes({'x': 1})


def test_restore_rejects_other_shapes():
    store = _store()
    _, arrays = parse_checkpoint(store.to_bytes())
    arrays["a.weight"] = np.zeros((2, 2))
    with pytest.raises(ValidationError) as info:
        _store().restore(arrays)
    assert "a.weight" in str(info.value)


def test_restore_rejects_missing_parameters():
    _, arrays = parse_checkpoint(_store().to_bytes())
    del arrays["a.bias"]
    with pytest.raises(ValidationError):
        _store().restore(arrays)


def test_corrupt_archives():
    blob = _store().to_bytes()
    with pytest.raises(FormatError):
        parse_checkpoint(b"NOTACKPT" + blob[8:])
    with pytest.raises(FormatError):
        parse_checkpoint(blob[:10])
    with pytest.raises(FormatError):
        parse_checkpoint(blob[:-4])


def _archive(manifest, payload=b""):
    text = json.dumps(manifest).encode('UTF-8')
    return struct.pack(
        "<8sIQ", CHECKPOINT_MAGIC, CHECKPOINT_VERSION, len(text)
    ) + text + payload


@pytest.mark.parametrize(
    "manifest", [
        {'metadata': {}},
        {'parameters': []},
        {'parameters': [{'name': "w"}], 'metadata': {}},
        {'parameters': [{
            'name': "w", 'offset': 0, 'nbytes': 8, 'dtype': "<f8",
            'shape': [3]
        }], 'metadata': {}},
        {'parameters': [{
            'name': "w", 'offset': 0, 'nbytes': 8, 'dtype': "nonsense",
            'shape': [1]
        }], 'metadata': {}},
        {'parameters': 7, 'metadata': {}},
    ]
)
def test_invalid_manifests(manifest):
    with pytest.raises(FormatError):
        parse_checkpoint(_archive(manifest, bytes(8)))


def test_missing_checkpoint(tmp_path):
    with pytest.raises(FormatError):
        load_checkpoint(str(tmp_path / "absent.ckpt"))


def test_linear():
    store = ParameterStore(np.random.default_rng(0), 0.1)
    layer = Linear(store, "proj", 3, 2)
    out = layer(Tensor(np.ones((4, 3))))
    expected = np.ones((4, 3)) @ layer.weight.data + layer.bias.data
    assert out.shape == (4, 2)
    assert np.allclose(out.data, expected)
    assert store.names() == ["proj.weight", "proj.bias"]
    assert Linear(store, "nobias", 3, 2, bias=False).bias is None

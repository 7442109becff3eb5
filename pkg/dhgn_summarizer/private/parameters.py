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
"""Named parameter collections and the parameter checkpoint archive.

Archive layout (all integers little-endian):

    magic      8 bytes  b"DHGNCKPT"
    version    uint32
    length     uint64   size of the manifest in bytes
    manifest   JSON     {"metadata": {...}, "parameters": [
                          {"name", "shape", "dtype", "offset", "nbytes"}]}
    payload    raw parameter values, in manifest order

"""
import json
import struct
import hashlib
from collections import OrderedDict

import numpy as np

from .common import (
    FormatError,
    ValidationError
)
from .tensor import (
    Parameter,
    add,
    matmul
)

CHECKPOINT_MAGIC = b"DHGNCKPT"
CHECKPOINT_VERSION = 1
_HEADER = struct.Struct("<8sIQ")


class ParameterStore:
    """An ordered collection of uniquely named Parameters plus the
    random generator used to initialize them.

    """
    def __init__(self, rng, init_scale, dtype="float64"):
        """Constructor

        """
        self.rng = rng
        self.init_scale = init_scale
        self.dtype = np.dtype(dtype)
        self.params = OrderedDict()

    def create(self, name, shape, zero=False):
        """Create and register a parameter initialized uniformly in
        [-init_scale, init_scale] (or zeros).

        """
        if name in self.params:
            raise ValidationError(
                "duplicate parameter name '%s'" % name
            )
        data = (
            np.zeros(shape, dtype=self.dtype) if zero
            else self.rng.uniform(
                -self.init_scale, self.init_scale, size=shape
            ).astype(self.dtype)
        )
        param = Parameter(name, data)
        self.params[name] = param
        return param

    def __getitem__(self, name):
        return self.params[name]

    def __contains__(self, name):
        return name in self.params

    def __iter__(self):
        return iter(self.params.values())

    def __len__(self):
        return len(self.params)

    def names(self):
        """Parameter names in creation order.

        """
        return list(self.params)

    def zero_grad(self):
        """Reset every gradient accumulator.

        """
        for param in self.params.values():
            param.zero_grad()

    def snapshot(self):
        """Return a copy of every parameter value keyed by name.

        """
        return {name: param.data.copy() for name, param in self.params.items()}

    def restore(self, snapshot):
        """Copy values from a snapshot (or a loaded archive) into the
        parameters in place, checking names and shapes.

        """
        missing = [name for name in self.params if name not in snapshot]
        if missing:
            raise ValidationError(
                "checkpoint is missing parameters: %s" % ", ".join(missing)
            )
        for name, param in self.params.items():
            values = snapshot[name]
            if tuple(values.shape) != tuple(param.shape):
                raise ValidationError(
                    "checkpoint/config incompatibility: parameter '%s' has "
                    "shape %s in the checkpoint but %s in the model" % (
                        name, str(tuple(values.shape)), str(param.shape)
                    )
                )
            param.data[...] = values

    def to_bytes(self, metadata=None):
        """Serialize every parameter into the archive format.

        """
        entries = []
        payload = []
        offset = 0
        for name, param in self.params.items():
            little = param.data.astype(
                param.data.dtype.newbyteorder('<'), copy=False
            )
            raw = np.ascontiguousarray(little).tobytes()
            entries.append({
                'name': name,
                'shape': list(param.shape),
                'dtype': little.dtype.str,
                'offset': offset,
                'nbytes': len(raw),
            })
            payload.append(raw)
            offset += len(raw)
        manifest = json.dumps(
            {'metadata': metadata or {}, 'parameters': entries},
            sort_keys=True, separators=(',', ':')
        ).encode('UTF-8')
        header = _HEADER.pack(
            CHECKPOINT_MAGIC, CHECKPOINT_VERSION, len(manifest)
        )
        return header + manifest + b"".join(payload)

    def save(self, path, metadata=None):
        """Write the archive to 'path'.

        """
        try:
            with open(path, 'wb') as archive:
                archive.write(self.to_bytes(metadata))
        except OSError as err:
            raise FormatError(
                "cannot write checkpoint '%s' - %s" % (path, str(err))
            ) from err

    def checksum(self):
        """SHA-256 over the serialized parameter values.

        """
        return hashlib.sha256(self.to_bytes()).hexdigest()


class Linear:
    """An affine map x @ W + b (b optional) with parameters registered
    in a ParameterStore under '<name>.weight' and '<name>.bias'.

    """
    def __init__(self, store, name, in_dim, out_dim, bias=True):
        """Constructor

        """
        self.weight = store.create("%s.weight" % name, (in_dim, out_dim))
        self.bias = (
            store.create("%s.bias" % name, (1, out_dim)) if bias else None
        )

    def __call__(self, inputs):
        out = matmul(inputs, self.weight)
        return add(out, self.bias) if self.bias is not None else out


def parse_checkpoint(blob, source="<bytes>"):
    """Decode an archive into (metadata, {name: array}).

    """
    if len(blob) < _HEADER.size:
        raise FormatError("checkpoint '%s' is truncated" % source)
    magic, version, length = _HEADER.unpack_from(blob)
    if magic != CHECKPOINT_MAGIC:
        raise FormatError("'%s' is not a parameter checkpoint" % source)
    if version != CHECKPOINT_VERSION:
        raise FormatError(
            "checkpoint '%s' has format version %d, expected %d" % (
                source, version, CHECKPOINT_VERSION
            )
        )
    start = _HEADER.size
    try:
        manifest = json.loads(blob[start:start + length].decode('UTF-8'))
    except ValueError as err:
        raise FormatError(
            "checkpoint '%s' has a corrupt manifest - %s" % (source, str(err))
        ) from err
    payload = blob[start + length:]
    arrays = OrderedDict()
    try:
        for entry in manifest['parameters']:
            raw = payload[entry['offset']:entry['offset'] + entry['nbytes']]
            if len(raw) != entry['nbytes']:
                raise FormatError(
                    "checkpoint '%s' is truncated in parameter '%s'" % (
                        source, entry['name']
                    )
                )
            arrays[entry['name']] = np.frombuffer(
                raw, dtype=np.dtype(entry['dtype'])
            ).reshape(entry['shape']).copy()
        metadata = manifest['metadata']
    except (KeyError, TypeError, ValueError) as err:
        raise FormatError(
            "checkpoint '%s' has an invalid manifest - %s: %s" % (
                source, type(err).__name__, str(err)
            )
        ) from err
    return metadata, arrays


def load_checkpoint(path):
    """Read an archive from 'path' into (metadata, {name: array}).

    """
    try:
        with open(path, 'rb') as archive:
            blob = archive.read()
    except OSError as err:
        raise FormatError(
            "cannot read checkpoint '%s' - %s" % (path, str(err))
        ) from err
    return parse_checkpoint(blob, path)

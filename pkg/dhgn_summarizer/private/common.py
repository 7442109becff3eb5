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
"""A class that provides common tools based on configuration and so
forth that relate to the dialogue summarizer, along with the error
types shared by every part of the pipeline.

"""
from os import makedirs
from os.path import join as path_join
from dataclasses import (
    dataclass,
    fields,
    asdict
)

from vtds_base import (
    ContextualError,
    log_paths
)

NODE_TYPES = ("speaker", "utterance", "knowledge")
EDGE_TYPES = ("speak-by", "know-by", "rev-speak-by", "rev-know-by")
REVERSE_EDGE = {
    "speak-by": "rev-speak-by",
    "know-by": "rev-know-by",
}
GRAPH_ABLATIONS = ("full", "no_knowledge", "no_speaker")
ABLATIONS = GRAPH_ABLATIONS + ("no_message_fusion", "no_node_embedding")
LAYER_TYPES = ("hgt", "gcn", "gat", "rgcn")


class FormatError(ContextualError):
    """An I/O or file format failure (unreadable file, malformed
    record, wrong archive version).

    """


class ValidationError(ContextualError):
    """A violated invariant or a validation failure (bad
    hyperparameters, incompatible checkpoint, malformed graph
    structure).

    """


class ShapeError(ValidationError):
    """Operand shapes that do not conform for an operation.

    """
    def __init__(self, operation, *shapes):
        """Constructor: record the operation and the offending operand
        shapes so the message names all of them.

        """
        self.operation = operation
        self.shapes = tuple(tuple(shape) for shape in shapes)
        super().__init__(
            "shape mismatch in '%s': %s" % (
                operation, " vs ".join(str(shape) for shape in self.shapes)
            )
        )


# pylint: disable=too-many-instance-attributes
@dataclass(frozen=True)
class Hyperparams:
    """Every numeric setting the model, trainer and decoder use. The
    defaults are the published settings of the model.

    """
    embed_dim: int = 100
    encoder_dim: int = 300
    decoder_dim: int = 300
    graph_dim: int = 200
    graph_layers: int = 1
    heads: int = 1
    layer_type: str = "hgt"
    message_fusion: bool = True
    node_embedding: bool = True
    max_positions: int = 64
    max_node_tokens: int = 100
    dropout: float = 0.5
    init_scale: float = 0.08
    dtype: str = "float64"
    lr: float = 0.001
    betas: tuple = (0.9, 0.999)
    adam_eps: float = 1e-8
    grad_clip_norm: float = 2.0
    batch_size: int = 8
    max_epochs: int = 30
    patience: int = 5
    selection: str = "nll"
    beam: int = 10
    max_decode_len: int = 100
    length_norm: bool = False
    seed: int = 1

    def __post_init__(self):
        """Validate: all sizes and rates positive, dimensions that the
        decoder initialization ties together agree.

        """
        positive = (
            'embed_dim', 'encoder_dim', 'decoder_dim', 'graph_dim',
            'graph_layers', 'heads', 'max_positions', 'max_node_tokens',
            'init_scale', 'lr', 'adam_eps', 'grad_clip_norm',
            'batch_size', 'max_epochs', 'patience', 'beam',
            'max_decode_len'
        )
        for name in positive:
            if not getattr(self, name) > 0:
                raise ValidationError(
                    "hyperparameter '%s' must be positive, got %s" % (
                        name, str(getattr(self, name))
                    )
                )
        if not 0.0 <= self.dropout < 1.0:
            raise ValidationError(
                "hyperparameter 'dropout' must be in [0, 1), got %s" %
                str(self.dropout)
            )
        if self.encoder_dim % 2:
            raise ValidationError(
                "hyperparameter 'encoder_dim' must be even (two encoder "
                "directions), got %d" % self.encoder_dim
            )
        if self.decoder_dim != self.encoder_dim:
            raise ValidationError(
                "decoder_dim (%d) must equal encoder_dim (%d): the decoder "
                "starts from the mean word representation" % (
                    self.decoder_dim, self.encoder_dim
                )
            )
        if self.graph_dim % self.heads:
            raise ValidationError(
                "graph_dim (%d) is not divisible by heads (%d)" % (
                    self.graph_dim, self.heads
                )
            )
        if self.layer_type not in LAYER_TYPES:
            raise ValidationError(
                "unknown layer_type '%s', expected one of %s" % (
                    self.layer_type, str(LAYER_TYPES)
                )
            )
        if self.selection not in ("nll", "rouge"):
            raise ValidationError(
                "unknown selection '%s', expected 'nll' or 'rouge'" %
                self.selection
            )
        if self.dtype not in ("float64", "float32"):
            raise ValidationError(
                "unknown dtype '%s', expected 'float64' or 'float32'" %
                self.dtype
            )

    def as_dict(self):
        """Return the hyperparameters as a plain (YAML / JSON safe)
        dictionary.

        """
        result = asdict(self)
        result["betas"] = list(self.betas)
        return result

    @classmethod
    def from_dict(cls, values):
        """Build a Hyperparams from a flat dictionary, ignoring keys
        that are not hyperparameters.

        """
        names = {item.name for item in fields(cls)}
        kwargs = {key: value for key, value in values.items() if key in names}
        if 'betas' in kwargs:
            kwargs['betas'] = tuple(kwargs['betas'])
        return cls(**kwargs)

    def model_shape(self):
        """Return the subset of hyperparameters that determines
        parameter shapes, for checkpoint compatibility checks.

        """
        return {
            name: getattr(self, name) for name in (
                'embed_dim', 'encoder_dim', 'decoder_dim', 'graph_dim',
                'graph_layers', 'heads', 'layer_type', 'max_positions'
            )
        }


class Common:
    """A class that provides common tools based on configuration and
    so forth that relate to the summarizer.

    """
    # Config section -> hyperparameter names drawn from it.
    HYPERPARAM_SECTIONS = {
        'graph': ('max_positions', 'max_node_tokens'),
        'model': (
            'embed_dim', 'encoder_dim', 'decoder_dim', 'graph_dim',
            'graph_layers', 'heads', 'layer_type', 'message_fusion',
            'node_embedding', 'dropout', 'init_scale', 'dtype'
        ),
        'training': (
            'lr', 'betas', 'adam_eps', 'grad_clip_norm', 'batch_size',
            'max_epochs', 'patience', 'selection', 'seed'
        ),
        'decoding': ('beam', 'max_decode_len', 'length_norm'),
    }

    def __init__(self, config, build_dir):
        """Constructor.

        """
        self.config = config
        self.build_directory = build_dir

    def get_config(self):
        """Get the full config data stored here.

        """
        return self.config

    def get(self, key, default):
        """Perform a 'get' operation on the top level 'config' object
        returning the value of 'default' if 'key' is not found.

        """
        return self.config.get(key, default)

    def section(self, name):
        """Return the named configuration section, failing if it is
        not there.

        """
        section = self.config.get(name, None)
        if section is None:
            raise ValidationError(
                "summarizer config error: cannot find '%s' in "
                "'summarizer'" % name
            )
        return section

    def setting(self, section_name, key):
        """Return a required setting from a configuration section.

        """
        section = self.section(section_name)
        if key not in section:
            raise ValidationError(
                "summarizer config error: cannot find '%s' in "
                "'summarizer.%s'" % (key, section_name)
            )
        return section[key]

    def hyperparams(self):
        """Compose and validate the Hyperparams described by the
        configuration.

        """
        values = {}
        for section_name, names in self.HYPERPARAM_SECTIONS.items():
            section = self.section(section_name)
            values.update(
                {name: section[name] for name in names if name in section}
            )
        try:
            return Hyperparams.from_dict(values)
        except TypeError as err:
            raise ValidationError(
                "summarizer config error: bad hyperparameter value - %s" %
                str(err)
            ) from err

    def build_dir(self):
        """Return the 'build_dir' provided at creation, creating it if
        it is not there yet.

        """
        makedirs(self.build_directory, exist_ok=True)
        return self.build_directory

    def build_path(self, sub_path):
        """Given a sub-path to a file within the build tree, return
        the absolute path.

        """
        return path_join(self.build_dir(), sub_path)

    def log_paths(self, tag):
        """Return the (output, error) log paths in the build tree for
        the activity named by 'tag'.

        """
        return log_paths(self.build_dir(), tag)

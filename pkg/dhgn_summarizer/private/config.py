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
"""Private implementation module for the summarizer base configuration
and the composition of user overlays on top of it.

"""

from os.path import join as path_join
import yaml
from vtds_base import merge_configs
from .common import (
    ABLATIONS,
    GRAPH_ABLATIONS,
    FormatError,
    ValidationError
)
from . import CONFIG_DIR

OVERFIT_OVERLAY = path_join(CONFIG_DIR, "overfit_overlay.yaml")


def _read_yaml(path, what):
    """Parse a YAML file into python data.

    """
    try:
        with open(path, 'r', encoding='UTF-8') as config_stream:
            return yaml.safe_load(config_stream)
    except OSError as err:
        raise FormatError(
            "cannot open %s '%s' - %s" % (what, path, str(err))
        ) from err
    except yaml.YAMLError as err:
        raise FormatError(
            "error parsing %s '%s' - %s" % (what, path, str(err))
        ) from err


def apply_setting(config, setting):
    """Apply one 'dotted.key=value' override (value parsed as YAML) to
    a configuration, in place, and return the configuration.

    """
    key, sep, text = setting.partition('=')
    if not sep or not key.strip():
        raise ValidationError(
            "bad setting '%s', expected 'dotted.key=value'" % setting
        )
    try:
        value = yaml.safe_load(text)
    except yaml.YAMLError as err:
        raise ValidationError(
            "bad value in setting '%s' - %s" % (setting, str(err))
        ) from err
    path = key.strip().split('.')
    node = config
    for name in path[:-1]:
        child = node.get(name, None)
        if child is None:
            child = node[name] = {}
        if not isinstance(child, dict):
            raise ValidationError(
                "bad setting '%s': '%s' is not a configuration section" % (
                    setting, name
                )
            )
        node = child
    node[path[-1]] = value
    return config


def apply_ablation(config, ablation):
    """Switch a 'summarizer' configuration section to one ablated
    variant of the model, in place, and return it.

    """
    if ablation not in ABLATIONS:
        raise ValidationError(
            "unknown ablation '%s', expected one of %s" % (
                ablation, str(ABLATIONS)
            )
        )
    if ablation in GRAPH_ABLATIONS:
        config.setdefault('graph', {})['ablation'] = ablation
    elif ablation == "no_message_fusion":
        config.setdefault('model', {})['message_fusion'] = False
    elif ablation == "no_node_embedding":
        config.setdefault('model', {})['node_embedding'] = False
    return config


class PrivateBaseConfig:
    """BaseConfig class presents operations on the base configuration
    of the summarizer to callers.

    """
    def __init__(self):
        """Constructor

        """

    def get_base_config(self):
        """Retrieve the base configuration for the summarizer in the
        form of a python data structure.

        """
        return _read_yaml(
            path_join(CONFIG_DIR, "config.yaml"),
            "summarizer base config file"
        )

    def get_base_config_text(self):
        """Retrieve the text of the base configuration file as a text
        string (UTF-8 encoded) for use in displaying the configuration
        to users.

        """
        config = path_join(CONFIG_DIR, "config.yaml")
        try:
            with open(config, 'r', encoding='UTF-8') as config_stream:
                return config_stream.read()
        except OSError as err:
            raise FormatError(
                "cannot open summarizer base config file  '%s' - %s" % (
                    config, str(err)
                )
            ) from err

    def get_test_overlay(self):
        """Retrieve the pre-defined test overlay configuration (desk
        sized model dimensions) in the form of a python data structure.

        """
        return _read_yaml(
            path_join(CONFIG_DIR, "test_overlay.yaml"),
            "summarizer test config overlay file"
        )

    def compose(self, overlay_paths=(), settings=(), test=False):
        """Merge the base config, optionally the test overlay, the
        overlay files in order and finally the 'dotted.key=value'
        settings. Returns the 'summarizer' section.

        """
        config = self.get_base_config()
        overlays = [self.get_test_overlay()] if test else []
        overlays += [
            _read_yaml(path, "config overlay file") for path in overlay_paths
        ]
        for overlay in overlays:
            if overlay:
                config = merge_configs(config, overlay)
        for setting in settings:
            apply_setting(
                config,
                setting if setting.startswith("summarizer.")
                else "summarizer." + setting
            )
        summarizer = (config or {}).get('summarizer', None)
        if not isinstance(summarizer, dict):
            raise ValidationError(
                "summarizer config error: no 'summarizer' section in the "
                "configuration"
            )
        return summarizer

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
"""Tests of configuration composition and the Common helpers.

"""
import pytest
import yaml

from vtds_base import ContextualError

from dhgn_summarizer import (
    BaseConfig,
    SummarizerAPI
)
from dhgn_summarizer.private.common import (
    Common,
    FormatError,
    ValidationError
)
from dhgn_summarizer.private.config import (
    apply_setting,
    apply_ablation
)


def test_base_config_matches_its_text():
    base = BaseConfig()
    assert yaml.safe_load(base.get_base_config_text()) == \
        base.get_base_config()
    assert base.get_base_config()['summarizer']['model']['embed_dim'] == 100


def test_test_overlay_shrinks_the_model(test_config):
    assert test_config['model']['embed_dim'] == 8
    assert test_config['model']['encoder_dim'] == 12
    assert test_config['training']['lr'] == 0.001
    assert test_config['knowledge']['dump_format'] == "tsv"


def test_overlays_then_settings(tmp_path):
    overlay = tmp_path / "overlay.yaml"
    overlay.write_text(
        "summarizer:\n  training:\n    seed: 7\n    max_epochs: 4\n",
        encoding='UTF-8'
    )
    config = BaseConfig().compose(
        [str(overlay)],
        ["training.seed=9", "summarizer.decoding.beam=2"]
    )
    assert config['training']['seed'] == 9
    assert config['training']['max_epochs'] == 4
    assert config['decoding']['beam'] == 2
    assert config['model']['embed_dim'] == 100


def test_bad_overlays(tmp_path):
    broken = tmp_path / "broken.yaml"
    broken.write_text("summarizer: [\n", encoding='UTF-8')
    with pytest.raises(FormatError):
        BaseConfig().compose([str(broken)])
    with pytest.raises(FormatError):
        BaseConfig().compose([str(tmp_path / "absent.yaml")])


def test_apply_setting():
    config = {'a': {'b': 1}}
    assert apply_setting(config, "a.c.d=[1, 2]") == \
        {'a': {'b': 1, 'c': {'d': [1, 2]}}}
    assert apply_setting(config, "a.b=off")['a']['b'] is False
    for bad in ("nonsense", "=3", "a.b.c=1", "a.b=[unclosed"):
        with pytest.raises(ValidationError):
            apply_setting(config, bad)


@pytest.mark.parametrize(
    "ablation,section,key,value", [
        ("full", 'graph', 'ablation', "full"),
        ("no_knowledge", 'graph', 'ablation', "no_knowledge"),
        ("no_speaker", 'graph', 'ablation', "no_speaker"),
        ("no_message_fusion", 'model', 'message_fusion', False),
        ("no_node_embedding", 'model', 'node_embedding', False),
    ]
)
def test_ablations(test_config, ablation, section, key, value):
    assert apply_ablation(test_config, ablation)[section][key] == value


def test_unknown_ablation(test_config):
    with pytest.raises(ValidationError):
        apply_ablation(test_config, "no_decoder")


def test_hyperparams_from_config(test_config, tmp_path):
    common = Common(test_config, str(tmp_path / "build"))
    hyperparams = common.hyperparams()
    assert hyperparams.embed_dim == 8
    assert hyperparams.betas == (0.9, 0.999)
    assert hyperparams.max_positions == 64
    assert common.setting('evaluation', 'reference_mode') == "max"
    assert common.build_path("x.txt").endswith("x.txt")
    assert (tmp_path / "build").is_dir()


def test_bad_hyperparams(tmp_path):
    for setting in ("model.heads=0", "model.encoder_dim=9",
                    "model.decoder_dim=10", "model.layer_type=lstm",
                    "model.dropout=1.0", "model.embed_dim=[1]"):
        config = BaseConfig().compose(settings=[setting], test=True)
        with pytest.raises(ValidationError):
            Common(config, str(tmp_path)).hyperparams()


def test_missing_sections(tmp_path):
    common = Common({'graph': {}}, str(tmp_path))
    with pytest.raises(ValidationError):
        common.section('model')
    with pytest.raises(ValidationError):
        common.setting('graph', 'ablation')


def test_api_needs_a_summarizer_section(tmp_path):
    with pytest.raises(ContextualError):
        SummarizerAPI({'provider': {}}, str(tmp_path))
    api = SummarizerAPI(
        {'summarizer': BaseConfig().compose(test=True)}, str(tmp_path)
    )
    assert api.hyperparams().graph_dim == 8

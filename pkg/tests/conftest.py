import numpy as np
import pytest

from emoxfer.data import Manifest, load_waveforms
from emoxfer.network import NetworkConfig
from emoxfer.synth import make_default_specs, synth_generate

CORPUS_SEED = 123


@pytest.fixture(scope="session")
def corpus(tmp_path_factory):
    """The stock 6-domain corpus (20 samples per emotion per domain)."""
    root = tmp_path_factory.mktemp("corpus")
    manifests = synth_generate(make_default_specs(seed=CORPUS_SEED), root)
    return root, manifests


@pytest.fixture(scope="session")
def corpus_data(corpus):
    """{domain: (manifest, waveforms, labels)} at the desk input length."""
    _, manifests = corpus
    cfg = NetworkConfig.desk()
    out = {}
    for domain, path in manifests.items():
        manifest = Manifest.load(path)
        x, y = load_waveforms(manifest, cfg.input_length)
        out[domain] = (manifest, x, y)
    return out


@pytest.fixture(scope="session")
def tiny_corpus(tmp_path_factory):
    """Very small corpus (4 per emotion, 400-sample clips) for harness tests."""
    root = tmp_path_factory.mktemp("tiny")
    specs = make_default_specs(seed=7, samples_per_emotion=4, clip_samples=400)
    manifests = synth_generate(specs, root)
    return root, manifests


def tiny_network_config() -> NetworkConfig:
    return NetworkConfig(input_length=400, conv_filters=(6, 8), conv_widths=(16, 8),
                         conv_strides=(8, 4), lstm_hidden=8, fc_sizes=(16, 16))


@pytest.fixture(scope="session")
def source_union(corpus_data):
    def _union(domains):
        x = np.concatenate([corpus_data[d][1] for d in domains])
        y = np.concatenate([corpus_data[d][2] for d in domains])
        return x, y
    return _union

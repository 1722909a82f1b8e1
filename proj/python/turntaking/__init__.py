"""Turn-taking prediction toolkit.

Thin wrappers over the compiled core: corpus synthesis, IPU segmentation,
gesture tokenization, and multimodal fusion experiments. Functions that
produce documents return parsed dictionaries; file outputs are written by
the core exactly as the CLI writes them.
"""

import json as _json

from turntaking import _core
from turntaking._core import (
    ValidationError,
    RuntimeFailure,
    embed_text_hashed,
    audio_spectral_features,
    build_ipus,
    compute_metrics,
    significance,
    stats_table,
)

__version__ = _core.__version__


def synth(config=None, sessions=4, out_dir="corpus"):
    cfg = config or {}
    text = cfg if isinstance(cfg, str) else _json.dumps(cfg)
    return _json.loads(_core.synth(text, sessions, out_dir))


def segment(corpus, out, **kwargs):
    return _json.loads(_core.segment(corpus, out, **kwargs))


def stats(turns):
    return _json.loads(_core.stats(turns))


def train_vqvae(turns, corpus, out, **kwargs):
    return _json.loads(_core.train_vqvae(turns, corpus, out, **kwargs))


def tokenize(model, turns, corpus, window_s=4.0, out="tokens.jsonl"):
    return _json.loads(_core.tokenize(model, turns, corpus, window_s, out))


def train(config, out=""):
    text = config if isinstance(config, str) else _json.dumps(config)
    return _json.loads(_core.train(text, out))


def evaluate(model, turns, corpus, split="test", out=""):
    return _json.loads(_core.evaluate(model, turns, corpus, split, out))


def compare(report_a, report_b, iterations=10000, seed=0):
    return _json.loads(_core.compare(report_a, report_b, iterations, seed))


def analyze(turns, corpus, out_dir, model="", vqvae=""):
    return _json.loads(_core.analyze(model, vqvae, turns, corpus, out_dir))

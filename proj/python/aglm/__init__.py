"""Korean agglutinative neural language model.

Thin re-export of the compiled core; see the individual docstrings there.
"""

try:
    from . import _aglm as _core  # installed layout: extension inside the package
except ImportError:
    import _aglm as _core  # build-tree layout: extension on sys.path

__all__ = [
    "Checkpoint",
    "CheckpointError",
    "Corpus",
    "EpochMetrics",
    "Lexicon",
    "ModelConfig",
    "TrainConfig",
    "TrainResult",
    "VocabSet",
    "Vocabulary",
    "build_vocabs",
    "complete",
    "compose",
    "decompose",
    "jamo_keystrokes",
    "kss",
    "load_corpus",
    "make_model_config",
    "make_train_config",
    "normalize",
    "parse_corpus",
    "perplexity",
    "split_words",
    "train",
]

for _name in __all__:
    globals()[_name] = getattr(_core, _name)
del _name, _core

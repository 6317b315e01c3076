"""Python access to the jeit transducer library."""

from ._jeit import (
    AnnotationError,
    ConfigError,
    LoadError,
    NumericError,
    TokenizationError,
    Vocab,
    build_vocab,
    default_config,
    detokenize,
    factorize,
    grad_check,
    oracle_check,
    posterior,
    render,
    rnnt_nll,
    run_experiment,
    tokenize,
    uer,
    uppercase_residue,
    wer,
)

__all__ = [
    "AnnotationError",
    "ConfigError",
    "LoadError",
    "NumericError",
    "TokenizationError",
    "Vocab",
    "build_vocab",
    "default_config",
    "detokenize",
    "factorize",
    "grad_check",
    "oracle_check",
    "posterior",
    "render",
    "rnnt_nll",
    "run_experiment",
    "tokenize",
    "uer",
    "uppercase_residue",
    "wer",
]

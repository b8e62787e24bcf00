"""Noun declension toolkit."""

from ._core import (
    Error,
    FormatError,
    LstmModel,
    NgramModel,
    NounInstance,
    ParseError,
    Sentence,
    extract_instances,
    gradient_check,
    levenshtein,
    parse_conllu,
    sentence_bleu,
    split_corpus,
    to_conllu,
)

__all__ = [
    "Error",
    "FormatError",
    "LstmModel",
    "NgramModel",
    "NounInstance",
    "ParseError",
    "Sentence",
    "extract_instances",
    "gradient_check",
    "levenshtein",
    "parse_conllu",
    "sentence_bleu",
    "split_corpus",
    "to_conllu",
]

"""Learned semantic text transmission over simulated wireless channels.

The package trains a transformer-based transceiver that maps words to a
small number of complex channel symbols and decodes them after AWGN or
Rayleigh fading, alongside an exact finite-alphabet oracle for the
information quantities the training loss is built from, an adaptive
symbols-per-word allocator, and a classical Huffman / 64-QAM baseline.
"""

from semcom.corpus import (
    ParallelCorpus,
    Vocab,
    build_vocab,
    load_corpus,
    reweight_entropy,
    source_distribution,
    tokenize,
)
from semcom.channel import ChannelConfig, DeepFadeError
from semcom.infotheory import FiniteDistribution, FiniteSemanticSystem, analyze
from semcom.allocation import AllocationPolicy, allocate, expected_n
from semcom.metrics import MetricsReport, bleu, bleu_score
from semcom.estimator import HuffmanQamLink, SemanticTransceiver

__version__ = "0.1.0"

__all__ = [
    "AllocationPolicy",
    "ChannelConfig",
    "DeepFadeError",
    "FiniteDistribution",
    "FiniteSemanticSystem",
    "HuffmanQamLink",
    "MetricsReport",
    "ParallelCorpus",
    "SemanticTransceiver",
    "Vocab",
    "allocate",
    "analyze",
    "bleu",
    "bleu_score",
    "build_vocab",
    "expected_n",
    "load_corpus",
    "reweight_entropy",
    "source_distribution",
    "tokenize",
]

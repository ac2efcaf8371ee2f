"""Secure federated k-means over Lagrange-coded secret shares."""

from .clustering import ClusterAssignment, Dataset, clustering_loss, lloyd_run
from .codec import QuantizerConfig, SharingParams, dequantize, quantize
from .errors import SecFCError
from .field import EvalPoints, PrimeField
from .protocol import ProtocolConfig, TranscriptLog, secfc_run, share_phase
from .report import RunReport

__version__ = "0.1.0"

__all__ = [
    "ClusterAssignment",
    "Dataset",
    "EvalPoints",
    "PrimeField",
    "ProtocolConfig",
    "QuantizerConfig",
    "RunReport",
    "SecFCError",
    "SharingParams",
    "TranscriptLog",
    "clustering_loss",
    "dequantize",
    "lloyd_run",
    "quantize",
    "secfc_run",
    "share_phase",
]

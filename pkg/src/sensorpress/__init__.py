"""Error-bounded sensor data compression with a sigmoid autoencoder."""

from .autoencoder import AutoencoderParams, Hyperparams, Variant, load_params, save_params, train
from .codec import CompressedFrame, ErrorBoundConfig, compress, decompress, deserialize, serialize
from .dataset import SensorMatrix, SyntheticModel, ingest_csv, make_vectors, synthesize
from .sphering import SpheringScale, denormalize, fit_sigma, normalize

__version__ = "0.1.0"

__all__ = [
    "AutoencoderParams",
    "CompressedFrame",
    "ErrorBoundConfig",
    "Hyperparams",
    "SensorMatrix",
    "SpheringScale",
    "SyntheticModel",
    "Variant",
    "compress",
    "decompress",
    "denormalize",
    "deserialize",
    "fit_sigma",
    "ingest_csv",
    "load_params",
    "make_vectors",
    "normalize",
    "save_params",
    "serialize",
    "synthesize",
    "train",
]

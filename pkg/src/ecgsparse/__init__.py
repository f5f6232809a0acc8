"""ecgsparse: ECG beat compression and classification.

Learns an overcomplete sparse dictionary online from windowed wavelet
features of ECG beats, stores beats as sparse coefficient matrices, and
classifies beats via time-pyramid-matched pooled features fed to an SVM.
"""

__version__ = "0.1.0"

from . import (classify, codec, dictionary, errors, features, ingest,
               sparse_coding, synthetic, wavelet)

__all__ = ["classify", "codec", "dictionary", "errors", "features",
           "ingest", "sparse_coding", "synthetic", "wavelet", "__version__"]

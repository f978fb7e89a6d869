"""Surrogate-accelerated Bayesian recovery of injection rate from surface displacement.

LSTM encoder-decoder reduced-order models of displacement time series,
trained under nonoverlapping or sliding windows, drive an adaptive
Metropolis sampler that estimates the injection rate behind noisy data.
"""

from .errors import RomInvertError
from .series import TimeSeries, WindowSpec, WindowedDataset, NoiseModel

__version__ = "0.1.0"

__all__ = [
    "RomInvertError",
    "TimeSeries",
    "WindowSpec",
    "WindowedDataset",
    "NoiseModel",
    "__version__",
]

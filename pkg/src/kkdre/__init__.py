"""Desk-scale simulator of a direct-detection optical link whose carrier
tone is added digitally at the transmitter, with optional quantization-
noise shaping in the DAC and phase-retrieval reception from a single
photodiode.
"""

from ._kernels import BACKEND as KERNEL_BACKEND  # noqa: F401

__version__ = "0.1.0"

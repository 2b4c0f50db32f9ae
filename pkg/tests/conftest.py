import numpy as np
import pytest

from kkdre.sigproc import RrcSpec, Waveform
from kkdre.txdsp import generate_bits, make_constellation, map_qam, pulse_shape


@pytest.fixture(scope="session")
def qam64():
    return make_constellation(6)


@pytest.fixture(scope="session")
def qpsk():
    return make_constellation(2)


@pytest.fixture(scope="session")
def rrc_default():
    return RrcSpec(rolloff=0.01, samples_per_symbol=4, span_symbols=128)


@pytest.fixture(scope="session")
def shaped_frame(qam64, rrc_default):
    """A 64-QAM RRC waveform at 100 GSa/s, unit-ish power (no tone)."""
    bits = generate_bits(123, 6 * 8192)
    syms = map_qam(bits, qam64)
    return pulse_shape(syms, rrc_default, 25e9)


def rel_rms(a: np.ndarray, b: np.ndarray) -> float:
    a = np.asarray(a)
    b = np.asarray(b)
    return float(np.sqrt(np.mean(np.abs(a - b) ** 2) / np.mean(np.abs(b) ** 2)))


@pytest.fixture(scope="session")
def white_complex():
    rng = np.random.default_rng(2024)
    n = 1 << 18
    return Waveform((rng.standard_normal(n) + 1j * rng.standard_normal(n)) / np.sqrt(2), 100e9)

import numpy as np
import pytest

from kkdre.errors import EmptyWaveform, NonPositiveRate, TooShort
from kkdre.sigproc import (
    RrcSpec,
    Spectrum,
    Waveform,
    band_power,
    filter_fft,
    hilbert,
    power,
    psd,
    resample,
    rrc_spectrum,
    rrc_taps,
    snap_to_grid,
    spectrum_integral,
)

from conftest import rel_rms


class TestResample:
    def test_identity_rate(self, shaped_frame):
        out = resample(shaped_frame, shaped_frame.sample_rate_hz)
        assert np.array_equal(out.samples, shaped_frame.samples)

    def test_tone_stays_put(self):
        n = 10000
        fs = 100e9
        f0 = 10e9  # 1000 cycles in the frame, on both grids
        t = np.arange(n) / fs
        w = Waveform(np.exp(2j * np.pi * f0 * t), fs)
        out = resample(w, 80e9)
        spec = np.abs(np.fft.fft(out.samples))
        freqs = np.fft.fftfreq(out.samples.size, d=1 / 80e9)
        assert freqs[np.argmax(spec)] == pytest.approx(f0, abs=1.0)
        # single line: dominant bin carries essentially everything
        assert spec.max() ** 2 / np.sum(spec**2) > 0.999

    def test_round_trip_inband_error(self, shaped_frame):
        down = resample(shaped_frame, 80e9)
        back = resample(down, 100e9)
        keep = min(len(back), len(shaped_frame))
        err = Waveform(back.samples[:keep] - shaped_frame.samples[:keep], 100e9)
        ref = Waveform(shaped_frame.samples[:keep], 100e9)
        ratio = band_power(err, -14e9, 14e9) / band_power(ref, -14e9, 14e9)
        assert np.sqrt(ratio) < 1e-6

    def test_deterministic(self, shaped_frame):
        a = resample(shaped_frame, 80e9)
        b = resample(shaped_frame, 80e9)
        assert np.array_equal(a.samples, b.samples)

    def test_errors(self, shaped_frame):
        with pytest.raises(NonPositiveRate):
            resample(shaped_frame, -1.0)
        with pytest.raises(EmptyWaveform):
            Waveform(np.array([]), 1.0)


class TestRrcTaps:
    def test_beta_zero_is_sinc(self):
        spec = RrcSpec(rolloff=0.0, samples_per_symbol=4, span_symbols=32)
        taps = rrc_taps(spec)
        t = np.arange(-64, 65) / 4
        ref = np.sinc(t)
        ref = ref / np.sqrt(np.sum(ref**2))
        assert np.max(np.abs(taps - ref)) < 1e-12

    def test_symmetric_unit_energy(self):
        spec = RrcSpec(rolloff=0.01, samples_per_symbol=4, span_symbols=64)
        taps = rrc_taps(spec)
        assert np.array_equal(taps, taps[::-1])
        assert np.sum(taps**2) == pytest.approx(1.0, abs=1e-12)

    def test_truncated_cascade_isi_shrinks_with_span(self):
        # 1/t tail at rolloff 0.01: truncation ISI is real, and must fall
        # as the span grows; the exact Nyquist contract lives on the
        # spectral cascade below.
        isi = []
        for span in (32, 64, 128):
            spec = RrcSpec(rolloff=0.01, samples_per_symbol=4, span_symbols=span)
            taps = rrc_taps(spec)
            rc = np.convolve(taps, taps)
            c = rc.size // 2
            isi.append(np.max(np.abs(rc[c::4][1:])) / rc[c])
        assert isi[0] > isi[1] > isi[2]
        assert isi[2] < 5e-3

    def test_moderate_rolloff_cascade_is_tight(self):
        spec = RrcSpec(rolloff=0.25, samples_per_symbol=4, span_symbols=64)
        taps = rrc_taps(spec)
        rc = np.convolve(taps, taps)
        c = rc.size // 2
        assert np.max(np.abs(rc[c::4][1:])) < 1e-4

    def test_spectral_cascade_nyquist(self):
        # exact grid shaping: symbol-spaced cascade is a discrete delta
        n, fs, baud = 1 << 14, 100e9, 25e9
        rc = np.fft.ifft(rrc_spectrum(n, fs, baud, 0.01) ** 2).real
        at_sym = rc[::4]
        assert np.max(np.abs(at_sym[1:])) / at_sym[0] < 1e-6

    def test_shaped_psd_confined(self, shaped_frame):
        s = psd(shaped_frame, 4096)
        peak = s.psd_db_hz.max()
        outside = np.abs(s.freq_hz) > 0.5 * 25e9 * 1.01 + 0.5e9
        assert np.all(s.psd_db_hz[outside] < peak - 40.0)

    def test_invalid_specs(self):
        from kkdre.errors import InvalidRolloff

        with pytest.raises(InvalidRolloff):
            RrcSpec(rolloff=1.5, samples_per_symbol=4, span_symbols=32)
        with pytest.raises(InvalidRolloff):
            RrcSpec(rolloff=0.1, samples_per_symbol=1, span_symbols=32)
        with pytest.raises(InvalidRolloff):
            RrcSpec(rolloff=0.1, samples_per_symbol=4, span_symbols=31)


class TestHilbert:
    def test_cos_to_sin(self):
        n = 1024
        t = np.arange(n)
        x = np.cos(2 * np.pi * 8 * t / n)
        y = hilbert(x)
        assert rel_rms(y, np.sin(2 * np.pi * 8 * t / n)) < 1e-9

    def test_constant_to_zero(self):
        assert np.max(np.abs(hilbert(np.full(64, 3.7)))) < 1e-12

    def test_involution(self):
        rng = np.random.default_rng(5)
        n = 512
        # zero-mean, zero-Nyquist input: double transform is exactly -x
        spec = rng.standard_normal(n // 2 - 1) + 1j * rng.standard_normal(n // 2 - 1)
        full = np.zeros(n, dtype=complex)
        full[1 : n // 2] = spec
        full[n // 2 + 1 :] = np.conj(spec[::-1])
        x = np.fft.ifft(full).real
        assert np.max(np.abs(hilbert(hilbert(x)) + x)) < 1e-9

    def test_linearity(self):
        rng = np.random.default_rng(6)
        x, y = rng.standard_normal(256), rng.standard_normal(256)
        lhs = hilbert(2.5 * x - 1.25 * y)
        rhs = 2.5 * hilbert(x) - 1.25 * hilbert(y)
        assert np.max(np.abs(lhs - rhs)) < 1e-12

    def test_too_short(self):
        with pytest.raises(TooShort):
            hilbert(np.ones(4))


class TestPsd:
    def test_tone_line(self):
        n, fs = 1 << 16, 100e9
        f0 = snap_to_grid(10e9, 4096, fs)  # on the segment grid
        t = np.arange(n) / fs
        w = Waveform(np.exp(2j * np.pi * f0 * t), fs)
        s = psd(w, 4096)
        lin = s.linear()
        k = int(np.argmax(lin))
        assert s.freq_hz[k] == pytest.approx(f0, abs=fs / 4096 / 2)
        # Hann mainlobe: the line lives in the peak bin +/- 2
        frac = lin[k - 2 : k + 3].sum() / lin.sum()
        assert frac > 0.99

    def test_white_noise_flat(self):
        rng = np.random.default_rng(8)
        n = 1 << 18
        w = Waveform((rng.standard_normal(n) + 1j * rng.standard_normal(n)) / np.sqrt(2), 1.0)
        s = psd(w, 1024)
        dev = s.psd_db_hz - np.mean(s.psd_db_hz)
        assert np.max(np.abs(dev)) < 1.0

    def test_parseval_additivity(self):
        n, fs = 1 << 16, 100e9
        t = np.arange(n) / fs
        a = 1.3 * np.exp(2j * np.pi * snap_to_grid(5e9, n, fs) * t)
        b = 0.7 * np.exp(2j * np.pi * snap_to_grid(-17e9, n, fs) * t)
        w = Waveform(a + b, fs)
        total = spectrum_integral(psd(w, 4096))
        assert total == pytest.approx(power(Waveform(a, fs)) + power(Waveform(b, fs)), rel=0.01)

    def test_integral_matches_power(self, white_complex):
        s = psd(white_complex, 4096)
        assert spectrum_integral(s) == pytest.approx(power(white_complex), rel=0.01)

    def test_segment_constraints(self, white_complex):
        with pytest.raises(TooShort):
            psd(white_complex, 4096 + 1)
        with pytest.raises(TooShort):
            psd(Waveform(np.ones(16), 1.0), 32)


class TestFilterFft:
    def test_parseval_white_noise(self, white_complex):
        # unit-energy taps pass white-noise power through unchanged
        taps = rrc_taps(RrcSpec(rolloff=0.25, samples_per_symbol=4, span_symbols=32))
        out = filter_fft(white_complex, taps)
        assert power(out) == pytest.approx(power(white_complex), rel=0.01)

    def test_linearity(self):
        rng = np.random.default_rng(9)
        taps = np.array([0.25, 0.5, 0.25])
        x = Waveform(rng.standard_normal(512), 1.0)
        y = Waveform(rng.standard_normal(512), 1.0)
        both = filter_fft(Waveform(3.0 * x.samples - 2.0 * y.samples, 1.0), taps)
        ref = 3.0 * filter_fft(x, taps).samples - 2.0 * filter_fft(y, taps).samples
        assert np.max(np.abs(both.samples - ref)) < 1e-12

    def test_zero_phase_no_delay(self):
        x = np.zeros(128)
        x[50] = 1.0
        out = filter_fft(Waveform(x, 1.0), np.array([0.2, 0.6, 0.2]))
        assert int(np.argmax(out.samples)) == 50


class TestSpectrumType:
    def test_length_mismatch(self):
        with pytest.raises(TooShort):
            Spectrum(freq_hz=np.arange(4.0), psd_db_hz=np.arange(3.0))

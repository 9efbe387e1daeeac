import numpy as np
import pytest

from duloc.array import ArrayGeometry, steering_vector, tdoa
from duloc.simulator import (
    SourceSpec,
    add_noise,
    generate_source,
    max_delay_samples,
    mix,
    propagate_freefield,
    simulate_scene,
)
from duloc.spectral import MultichannelSignal, estimate_psd, stft

FS = 44100.0


class TestGenerateSource:
    def test_sinusoid_power(self):
        x = generate_source(SourceSpec("sinusoid", 0.0, power=0.5, frequency=1000.0), FS)
        # least-squares amplitude over sine/cosine at the known frequency
        t = np.arange(x.size) / FS
        basis = np.stack([np.sin(2 * np.pi * 1000 * t), np.cos(2 * np.pi * 1000 * t)], axis=1)
        coef = np.linalg.lstsq(basis, x, rcond=None)[0]
        assert np.hypot(*coef) == pytest.approx(1.0, abs=1e-9)
        assert np.mean(x**2) == pytest.approx(0.5, abs=1e-6)

    def test_white_power(self):
        x = generate_source(SourceSpec("white_broadband", 0.0), FS, seed=3)
        assert x.size == 44100
        assert np.var(x) == pytest.approx(1.0, rel=0.01)

    def test_bandlimited_band(self):
        spec = SourceSpec("bandlimited", 0.0, power=2.0, f_lo=80.0, f_hi=8000.0)
        x = generate_source(spec, FS, seed=1)
        assert np.mean(x**2) == pytest.approx(2.0, rel=0.01)
        f = np.fft.rfftfreq(x.size, 1 / FS)
        X = np.abs(np.fft.rfft(x)) ** 2
        assert X[(f < 79) | (f > 8001)].sum() < 1e-12 * X.sum()

    def test_deterministic(self):
        spec = SourceSpec("white_broadband", 0.0)
        np.testing.assert_array_equal(generate_source(spec, FS, 9), generate_source(spec, FS, 9))
        assert not np.array_equal(generate_source(spec, FS, 9), generate_source(spec, FS, 10))

    def test_aliasing(self):
        with pytest.raises(ValueError, match="aliasing"):
            generate_source(SourceSpec("sinusoid", 0.0, frequency=30000.0), FS)

    @pytest.mark.parametrize("kw", [dict(duration=0), dict(doa=95.0), dict(power=0.0)])
    def test_invalid_spec(self, kw):
        base = dict(kind="white_broadband", doa=0.0)
        with pytest.raises(ValueError):
            SourceSpec(**{**base, **kw})


class TestPropagate:
    def test_broadside_identical(self, ula8, rng):
        x = rng.normal(size=4096)
        out = propagate_freefield(x, ula8, 0.0, FS)
        for ch in out.data:
            np.testing.assert_array_equal(ch, x)

    def test_integer_delay(self, rng):
        d = 3 * 343.0 / FS  # three samples at endfire
        g = ArrayGeometry.ula(2, d)
        assert tdoa(g, 90.0)[1] * FS == pytest.approx(3.0, abs=1e-12)
        x = rng.normal(size=4096)
        out = propagate_freefield(x, g, 90.0, FS, trim=3)
        np.testing.assert_array_equal(out.data[0], x[3:-3])
        # time-domain shift oracle
        assert np.max(np.abs(out.data[1] - x[:-6])) < 1e-9

    def test_cross_correlation_lag(self, ula8):
        x = generate_source(SourceSpec("white_broadband", 0.0, duration=0.5), FS, seed=5)
        theta = 40.0
        out = propagate_freefield(x, ula8, theta, FS)
        lags = np.arange(-40, 41)
        ref = out.data[0]
        for n in (1, 4, 7):
            ch = out.data[n]
            xc = [np.dot(ref[40:-40], np.roll(ch, -lag)[40:-40]) for lag in lags]
            assert lags[int(np.argmax(xc))] == round(tdoa(ula8, theta)[n] * FS)

    def test_trim_length(self, ula8, rng):
        x = rng.normal(size=5000)
        t = max_delay_samples(ula8, FS)
        assert 63 <= t <= 64  # 0.49 m / 343 m/s * 44100 Hz = 63 samples, rounded up
        assert len(propagate_freefield(x, ula8, 90.0, FS, trim=t)) == 5000 - 2 * t


class TestMix:
    def test_identity(self, rng):
        s = MultichannelSignal(rng.normal(size=(3, 100)), FS)
        assert mix([s]) is s

    def test_cancellation(self, rng):
        s = MultichannelSignal(rng.normal(size=(3, 100)), FS)
        neg = MultichannelSignal(-s.data, FS)
        np.testing.assert_array_equal(mix([s, neg]).data, 0.0)

    def test_mismatch(self, rng):
        with pytest.raises(ValueError):
            mix([MultichannelSignal(np.zeros((2, 10)), FS), MultichannelSignal(np.zeros((3, 10)), FS)])

    def test_power_adds(self):
        g = ArrayGeometry.ula(16, 0.2)
        srcs = [SourceSpec("bandlimited", -11.0, power=1.0, f_lo=80, f_hi=8000),
                SourceSpec("bandlimited", 31.0, power=0.8, f_lo=80, f_hi=8000)]
        scene, _ = simulate_scene(srcs, g, FS, None, seed=4)
        p = np.mean(scene.data**2, axis=1)
        np.testing.assert_allclose(p, 1.8, rtol=0.05)


class TestAddNoise:
    def test_infinite_snr(self, rng):
        s = MultichannelSignal(rng.normal(size=(2, 100)), FS)
        out, s2 = add_noise(s, None)
        assert out is s and s2 == 0
        assert add_noise(s, float("inf"))[1] == 0

    def test_zero_db(self):
        x = generate_source(SourceSpec("white_broadband", 0.0), FS, seed=2)
        s = MultichannelSignal(np.tile(x, (4, 1)), FS)
        out, s2 = add_noise(s, 0.0, seed=7)
        assert s2 == pytest.approx(np.mean(x**2))
        noise = out.data - s.data
        np.testing.assert_allclose(np.mean(noise**2, axis=1), np.mean(x**2), rtol=0.02)
        c = np.corrcoef(noise)
        assert np.max(np.abs(c[np.triu_indices(4, 1)])) < 0.01

    def test_zero_signal(self):
        with pytest.raises(ValueError):
            add_noise(MultichannelSignal(np.zeros((2, 10)), FS), 10.0)


class TestScene:
    def test_exact_length_and_determinism(self, ula8):
        src = [SourceSpec("bandlimited", -18.0, f_lo=80, f_hi=8000)]
        a, s2a = simulate_scene(src, ula8, FS, 20.0, seed=11)
        b, s2b = simulate_scene(src, ula8, FS, 20.0, seed=11)
        assert a.data.shape == (8, 44100)
        np.testing.assert_array_equal(a.data, b.data)
        assert s2a == s2b > 0

    def test_rank_one_end_to_end(self, ula8):
        k, L = 46, 2048
        f0 = k * FS / L
        scene, _ = simulate_scene([SourceSpec("sinusoid", -18.0, frequency=f0)], ula8, FS, None)
        X = stft(scene, L, 1536, "rectangular")
        phi = estimate_psd(X, 9, 10, [k]).phi[0]
        ev = np.linalg.eigvalsh(phi)[::-1]
        assert np.all(ev[1:] < 1e-6 * ev[0])
        u = np.linalg.eigh(phi)[1][:, -1]
        a = steering_vector(ula8, k, L, FS, -18.0)
        assert abs(np.vdot(u, a)) / np.sqrt(8) > 0.999

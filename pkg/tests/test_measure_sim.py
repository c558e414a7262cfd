import numpy as np
import pytest

from rnet.lattice import build_lattice, random_conductances, response_matrix, uniform_conductances
from rnet.measure_sim import (
    NO_NOISE,
    ElementwiseNoise,
    NoNoise,
    ProtocolNoise,
    apply_elementwise_noise,
    noise_spec_string,
    parse_noise_spec,
    simulate_measurement,
    snr_to_sigma,
)


class TestSnrToSigma:
    def test_metal_film_snr(self):
        assert snr_to_sigma(230.0) == pytest.approx(0.004348, rel=1e-3)

    def test_silicone_snr(self):
        assert snr_to_sigma(650.0) == pytest.approx(0.001538, rel=1e-3)

    def test_large_snr_limit(self):
        assert snr_to_sigma(1e12) == pytest.approx(0.0, abs=1e-11)

    @pytest.mark.parametrize("bad", [0.0, -3.0, float("nan"), float("inf")])
    def test_nonpositive_rejected(self, bad):
        with pytest.raises(ValueError):
            snr_to_sigma(bad)


class TestNoiseSpecGrammar:
    @pytest.mark.parametrize("text,model", [
        ("none", NoNoise()),
        ("elementwise:0.01", ElementwiseNoise(0.01)),
        ("protocol:230", ProtocolNoise(230.0)),
        ("protocol:230:1e-9", ProtocolNoise(230.0, quant_step=1e-9)),
    ])
    def test_parse(self, text, model):
        assert parse_noise_spec(text) == model

    @pytest.mark.parametrize("text", [
        "", "nonsense", "elementwise", "elementwise:x", "protocol",
        "protocol:-5", "elementwise:-0.1", "protocol:230:1:2", "none:0",
    ])
    def test_bad_specs_rejected(self, text):
        with pytest.raises(ValueError):
            parse_noise_spec(text)

    @pytest.mark.parametrize("model", [
        NoNoise(), ElementwiseNoise(0.25), ProtocolNoise(650.0),
        ProtocolNoise(230.0, quant_step=2e-8),
    ])
    def test_round_trip(self, model):
        assert parse_noise_spec(noise_spec_string(model)) == model


class TestSimulateMeasurement:
    def test_noise_free_matches_forward_model(self):
        net = random_conductances(build_lattice(3), np.random.default_rng(0))
        lam = response_matrix(net).entries
        record = simulate_measurement(net, NO_NOISE, seed=1)
        assert np.abs(record.lam.entries - lam).max() <= 1e-12 * np.abs(lam).max()

    def test_symmetrization_is_noop_on_exact_data(self):
        net = uniform_conductances(build_lattice(2))
        record = simulate_measurement(net, NO_NOISE, seed=0)
        pre = record.raw_columns / 5.0
        assert np.abs(record.lam.entries - pre).max() <= 1e-15

    @pytest.mark.parametrize("model", [
        NO_NOISE,
        ElementwiseNoise(0.05),
        ProtocolNoise(100.0),
        ProtocolNoise(100.0, quant_step=1e-7),
    ])
    def test_raw_columns_conserve_current_exactly(self, model):
        net = random_conductances(build_lattice(2), np.random.default_rng(4))
        record = simulate_measurement(net, model, seed=3)
        raw = record.raw_columns
        for col in range(raw.shape[1]):
            others = np.delete(raw[:, col], col)
            assert raw[col, col] == -np.sum(others)

    def test_output_exactly_symmetric(self):
        net = random_conductances(build_lattice(3), np.random.default_rng(5))
        record = simulate_measurement(net, ElementwiseNoise(0.02), seed=9)
        assert np.array_equal(record.lam.entries, record.lam.entries.T)

    def test_deterministic_per_seed(self):
        net = random_conductances(build_lattice(2), np.random.default_rng(6))
        a = simulate_measurement(net, ProtocolNoise(230.0), seed=42)
        b = simulate_measurement(net, ProtocolNoise(230.0), seed=42)
        c = simulate_measurement(net, ProtocolNoise(230.0), seed=43)
        assert np.array_equal(a.lam.entries, b.lam.entries)
        assert np.array_equal(a.raw_columns, b.raw_columns)
        assert not np.array_equal(a.lam.entries, c.lam.entries)

    def test_protocol_empirical_deviation_matches_snr(self):
        # std of relative reading error over many acquisitions ~ 1/snr
        net = uniform_conductances(build_lattice(2))
        exact = response_matrix(net).entries
        volts = 5.0
        snr = 230.0
        ratios = []
        for seed in range(1000):
            record = simulate_measurement(net, ProtocolNoise(snr), seed=seed)
            for col in range(8):
                others = np.arange(8) != col
                exact_currents = volts * exact[others, col]
                measured = record.raw_columns[others, col]
                ratios.extend(measured / exact_currents - 1.0)
        std = np.std(ratios)
        assert std == pytest.approx(1.0 / snr, rel=0.10)

    def test_quantization_rounds_readings(self):
        net = uniform_conductances(build_lattice(1), 1e-4)
        q = 1e-6
        record = simulate_measurement(net, ProtocolNoise(1e9, quant_step=q), seed=2)
        raw = record.raw_columns
        for col in range(4):
            others = np.delete(raw[:, col], col)
            assert np.allclose(others / q, np.round(others / q), atol=1e-9)


class TestApplyElementwiseNoise:
    def test_sigma_zero_is_identity(self):
        net = random_conductances(build_lattice(3), np.random.default_rng(8))
        lam = response_matrix(net)
        out = apply_elementwise_noise(lam, 0.0, seed=5)
        assert np.array_equal(out.entries, lam.entries)

    def test_output_symmetric(self):
        net = random_conductances(build_lattice(2), np.random.default_rng(9))
        out = apply_elementwise_noise(response_matrix(net), 0.3, seed=6)
        assert np.array_equal(out.entries, out.entries.T)

    def test_negative_sigma_rejected(self):
        net = uniform_conductances(build_lattice(1))
        with pytest.raises(ValueError):
            apply_elementwise_noise(response_matrix(net), -0.1, seed=0)

    def test_pair_averaging_reduces_offdiagonal_noise(self):
        # averaging entry (i,j) with (j,i) leaves relative std sigma/sqrt(2)
        net = uniform_conductances(build_lattice(3))
        lam = response_matrix(net)
        sigma = 0.01
        samples = []
        mask = ~np.eye(12, dtype=bool)
        for seed in range(120):
            noisy = apply_elementwise_noise(lam, sigma, seed=seed)
            ratio = noisy.entries[mask] / lam.entries[mask] - 1.0
            samples.extend(ratio)
        assert len(samples) >= 10_000
        assert np.std(samples) == pytest.approx(sigma / np.sqrt(2.0), rel=0.15)

    def test_determinism(self):
        net = uniform_conductances(build_lattice(2))
        lam = response_matrix(net)
        a = apply_elementwise_noise(lam, 0.05, seed=11)
        b = apply_elementwise_noise(lam, 0.05, seed=11)
        assert np.array_equal(a.entries, b.entries)

import math

import numpy as np
import pytest

from rnet.errors import SpecMismatchError
from rnet.experiments import (
    CSV_HEADER,
    rmse_metrics,
    run_noise_sweep,
    run_size_sweep,
    run_timing_profile,
    sweep_to_csv,
)
from rnet.lattice import ConductanceMap, build_lattice, random_conductances, response_matrix
from rnet.reconstruct import ReconstructionResult, reconstruct_full


def make_result(net, resistances):
    conduct = {e: 1.0 / r for e, r in resistances.items()}
    return ReconstructionResult(
        conductances=ConductanceMap(net.spec, conduct, check_values=False),
        resistances=resistances,
        report=(),
        elapsed_ms=1.0,
    )


def strip_time_columns(csv_text: str) -> str:
    lines = []
    for line in csv_text.splitlines():
        if line.startswith("#"):
            lines.append(line)
            continue
        cells = line.split(",")
        del cells[5:7]  # time_ms_mean, time_ms_std
        lines.append(",".join(cells))
    return "\n".join(lines)


class TestRmseMetrics:
    def test_exact_reconstruction_is_zero(self):
        net = random_conductances(build_lattice(3), np.random.default_rng(0))
        rec = reconstruct_full(response_matrix(net), 3)
        metrics = rmse_metrics(net, rec)
        assert metrics.rmse <= 1e-12
        assert metrics.rel_rmse <= 1e-12

    def test_constant_offset(self):
        net = random_conductances(build_lattice(2), np.random.default_rng(1))
        d = 0.05
        shifted = {e: 1.0 / g + d for e, g in net.values.items()}
        metrics = rmse_metrics(net, make_result(net, shifted))
        assert metrics.rmse == pytest.approx(d, rel=1e-12)

    def test_relative_metric(self):
        net = random_conductances(build_lattice(2), np.random.default_rng(2))
        scaled = {e: 1.02 / g for e, g in net.values.items()}
        metrics = rmse_metrics(net, make_result(net, scaled))
        assert metrics.rel_rmse == pytest.approx(0.02, rel=1e-10)

    def test_spec_mismatch(self):
        net2 = random_conductances(build_lattice(2), np.random.default_rng(3))
        net3 = random_conductances(build_lattice(3), np.random.default_rng(4))
        rec3 = reconstruct_full(response_matrix(net3), 3)
        with pytest.raises(SpecMismatchError):
            rmse_metrics(net2, rec3)


class TestSizeSweep:
    def test_noise_free_small_lengths_are_exact(self):
        res = run_size_sweep([2, 3, 4], trials=5, seed=0)
        for row in res.rows:
            assert row.failures == 0
            assert row.rmse_mean < 1e-10
            assert row.time_ms_mean > 0

    def test_deterministic_csv_bytes_outside_time_columns(self):
        # Wall-clock columns cannot be bit-reproducible; everything else must be.
        a = sweep_to_csv(run_size_sweep([2, 3], trials=4, seed=11))
        b = sweep_to_csv(run_size_sweep([2, 3], trials=4, seed=11))
        assert strip_time_columns(a) == strip_time_columns(b)

    def test_different_seeds_differ(self):
        a = run_size_sweep([3], trials=4, seed=1)
        b = run_size_sweep([3], trials=4, seed=2)
        assert a.rows[0].rmse_mean != b.rows[0].rmse_mean

    def test_parallel_matches_sequential(self):
        seq = run_size_sweep([2, 3], trials=6, seed=5, workers=None)
        par = run_size_sweep([2, 3], trials=6, seed=5, workers=2)
        for s_row, p_row in zip(seq.rows, par.rows):
            assert s_row.param == p_row.param
            assert s_row.rmse_mean == p_row.rmse_mean
            assert s_row.rmse_std == p_row.rmse_std
            assert s_row.rel_rmse_mean == p_row.rel_rmse_mean
            assert s_row.failures == p_row.failures

    def test_trials_validated(self):
        with pytest.raises(ValueError):
            run_size_sweep([2], trials=0)


class TestNoiseSweep:
    def test_sigma_zero_reproduces_noise_free_sweep(self):
        size = run_size_sweep([3], trials=6, seed=9)
        noise = run_noise_sweep([3], [0.0], trials=6, seed=9)
        assert noise.rows[0].rmse_mean == size.rows[0].rmse_mean
        assert noise.rows[0].rel_rmse_mean == size.rows[0].rel_rmse_mean

    def test_param_format_and_grid(self):
        res = run_noise_sweep([3, 4], [0.001, 0.01], trials=2, seed=0)
        assert [row.param for row in res.rows] == [
            "3:0.001", "3:0.01", "4:0.001", "4:0.01",
        ]

    def test_error_grows_with_sigma(self):
        res = run_noise_sweep([4], [1e-6, 1e-3], trials=10, seed=3)
        assert res.rows[1].rmse_mean > res.rows[0].rmse_mean * 10

    def test_overwhelming_noise_counts_failures(self):
        res = run_noise_sweep([4], [3.0], trials=10, seed=7)
        row = res.rows[0]
        assert row.failures == 10
        assert math.isnan(row.rmse_mean)

    def test_invalid_sigma_rejected(self):
        with pytest.raises(ValueError):
            run_noise_sweep([3], [-0.1], trials=2)


class TestTimingProfile:
    def test_reports_positive_times(self):
        res = run_timing_profile([2, 4], trials=4, seed=0)
        for row in res.rows:
            assert row.time_ms_mean > 0
            assert row.time_ms_std >= 0
            assert row.failures == 0

    def test_time_grows_with_length(self):
        res = run_timing_profile([2, 8], trials=5, seed=1)
        assert res.rows[1].time_ms_mean > res.rows[0].time_ms_mean


class TestSweepCsv:
    def test_header_and_comments(self):
        res = run_size_sweep([2], trials=2, seed=4)
        text = sweep_to_csv(res)
        lines = text.strip().split("\n")
        comments = [line for line in lines if line.startswith("# ")]
        assert comments
        assert any(line == "# seed=4" for line in comments)
        header_idx = len(comments)
        assert lines[header_idx] == ",".join(CSV_HEADER)
        assert len(lines) == header_idx + 1 + 1

    def test_rows_parse_back(self):
        import csv as csvmod
        import io

        res = run_noise_sweep([3], [0.001], trials=3, seed=2)
        text = sweep_to_csv(res)
        data_lines = [line for line in text.splitlines() if not line.startswith("#")]
        rows = list(csvmod.reader(io.StringIO("\n".join(data_lines))))
        assert rows[0] == CSV_HEADER
        param, trials, rmse_mean = rows[1][0], int(rows[1][1]), float(rows[1][2])
        assert param == "3:0.001"
        assert trials == 3
        assert rmse_mean > 0

"""Virtual measurement rig for the boundary response matrix.

Reproduces the column-by-column acquisition protocol: drive one boundary
node at the source voltage with the rest grounded, read the currents at
all other nodes, and derive the driven node's current from conservation
(it is never measured directly).  Two corruption models are provided:

* ``ElementwiseNoise``: every matrix entry multiplied by an independent
  Normal(1, sigma) factor - the model used for the accuracy sweeps.
* ``ProtocolNoise``: per-measurement relative noise of 1/SNR on the
  non-driven current readings, optionally quantized to an ADC step, with
  the driven entry inheriting the correlated conservation-derived error -
  the model matching the physical rig.

Both paths end with transpose-averaging so the returned matrix is
exactly symmetric.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from . import matrixkit
from .lattice import ConductanceMap, ResponseMatrix, response_matrix

DEFAULT_SOURCE_VOLTS = 5.0


@dataclass(frozen=True)
class NoNoise:
    """Exact measurement."""


@dataclass(frozen=True)
class ElementwiseNoise:
    """Independent multiplicative Normal(1, sigma) on every entry."""

    sigma: float

    def __post_init__(self):
        if not (math.isfinite(self.sigma) and self.sigma >= 0):
            raise ValueError(f"sigma must be >= 0, got {self.sigma!r}")


@dataclass(frozen=True)
class ProtocolNoise:
    """Per-reading relative noise of 1/snr, optional quantization step."""

    snr: float
    quant_step: float = 0.0
    source_volts: float = DEFAULT_SOURCE_VOLTS

    def __post_init__(self):
        if not (math.isfinite(self.snr) and self.snr > 0):
            raise ValueError(f"snr must be > 0, got {self.snr!r}")
        if not (math.isfinite(self.quant_step) and self.quant_step >= 0):
            raise ValueError(f"quant_step must be >= 0, got {self.quant_step!r}")
        if not (math.isfinite(self.source_volts) and self.source_volts > 0):
            raise ValueError(f"source_volts must be > 0, got {self.source_volts!r}")


NoiseModel = Union[NoNoise, ElementwiseNoise, ProtocolNoise]

NO_NOISE = NoNoise()


def snr_to_sigma(snr: float) -> float:
    """Relative noise level implied by a mean-over-std measurement ratio."""
    if not (math.isfinite(snr) and snr > 0):
        raise ValueError(f"snr must be > 0, got {snr!r}")
    return 1.0 / snr


def parse_noise_spec(text: str) -> NoiseModel:
    """Parse "none", "elementwise:<sigma>" or "protocol:<snr>[:<quantStep>]"."""
    parts = text.strip().split(":")
    try:
        if parts == ["none"]:
            return NO_NOISE
        if parts[0] == "elementwise" and len(parts) == 2:
            return ElementwiseNoise(sigma=float(parts[1]))
        if parts[0] == "protocol" and len(parts) in (2, 3):
            quant = float(parts[2]) if len(parts) == 3 else 0.0
            return ProtocolNoise(snr=float(parts[1]), quant_step=quant)
    except ValueError as exc:
        raise ValueError(f"bad noise spec {text!r}: {exc}") from None
    raise ValueError(f"bad noise spec {text!r}")


def noise_spec_string(model: NoiseModel) -> str:
    if isinstance(model, NoNoise):
        return "none"
    if isinstance(model, ElementwiseNoise):
        return f"elementwise:{model.sigma:g}"
    if isinstance(model, ProtocolNoise):
        if model.quant_step > 0:
            return f"protocol:{model.snr:g}:{model.quant_step:g}"
        return f"protocol:{model.snr:g}"
    raise TypeError(f"unknown noise model {model!r}")


@dataclass(frozen=True, eq=False)
class MeasurementRecord:
    """One simulated acquisition of the full response matrix.

    ``raw_columns`` holds the pre-symmetrization current readings in
    amperes: column ``j`` is the boundary current vector while node
    ``j+1`` is driven.  Each column sums to zero exactly because the
    driven entry is set to minus the sum of the others.
    """

    lam: ResponseMatrix
    raw_columns: np.ndarray
    seed: "int | np.random.SeedSequence"
    model: NoiseModel


def _relative_sigma(model: NoiseModel) -> float:
    if isinstance(model, NoNoise):
        return 0.0
    if isinstance(model, ElementwiseNoise):
        return model.sigma
    if isinstance(model, ProtocolNoise):
        return snr_to_sigma(model.snr)
    raise TypeError(f"unknown noise model {model!r}")


def simulate_measurement(net: ConductanceMap, model: NoiseModel, seed) -> MeasurementRecord:
    """Measure a network's response matrix column by column.

    Deterministic in ``(net, model, seed)``: the seed is split into one
    independent stream per driven column, so columns could be acquired in
    parallel without changing the result.
    """
    exact = response_matrix(net).entries
    n = exact.shape[0]
    volts = model.source_volts if isinstance(model, ProtocolNoise) else DEFAULT_SOURCE_VOLTS
    sigma = _relative_sigma(model)
    seed_seq = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    column_seeds = seed_seq.spawn(n)

    raw = np.empty((n, n))
    for col in range(n):
        currents = volts * exact[:, col]
        others = np.arange(n) != col
        readings = currents[others]
        if sigma > 0.0:
            rng = np.random.default_rng(column_seeds[col])
            readings = readings * rng.normal(1.0, sigma, size=n - 1)
        if isinstance(model, ProtocolNoise) and model.quant_step > 0.0:
            readings = np.round(readings / model.quant_step) * model.quant_step
        raw[others, col] = readings
        raw[col, col] = -np.sum(readings)

    lam = matrixkit.symmetrize_average(raw / volts)
    return MeasurementRecord(lam=ResponseMatrix(lam), raw_columns=raw, seed=seed, model=model)


def apply_elementwise_noise(lam: ResponseMatrix, sigma: float, seed) -> ResponseMatrix:
    """Multiply every entry by an independent Normal(1, sigma), then symmetrize."""
    if not (math.isfinite(sigma) and sigma >= 0):
        raise ValueError(f"sigma must be >= 0, got {sigma!r}")
    rng = np.random.default_rng(seed)
    factors = rng.normal(1.0, sigma, size=lam.entries.shape)
    return ResponseMatrix(matrixkit.symmetrize_average(lam.entries * factors))

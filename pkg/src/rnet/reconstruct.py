"""Inverse solver: recover every conductance from the boundary response alone.

One pass over the current boundary works in three moves:

1. Split the response matrix into 16 face blocks and, for each face,
   eliminate the opposite face to get that face's reduction matrix.  Its
   diagonal is the spike conductances; consecutive spike pairs combined
   with its subdiagonal give the tangential boundary-edge conductances.
2. Remove the now-known boundary resistors from the response matrix with
   the two exact update rules (spike removal re-roots a boundary index at
   the spike's interior endpoint; edge removal is additive).
3. Eight indices become structurally isolated; deleting their rows and
   columns leaves the response matrix of the length ``k-2`` sub-network.
   Repeat until nothing is left.

Boundary indices in this module are 1-based, matching the lattice
numbering; array storage is 0-based internally.
"""

from __future__ import annotations

import json
import math
import time
import warnings as _warnings
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from . import matrixkit
from .errors import (
    DegenerateDeltaError,
    DimensionMismatchError,
    InvalidConductanceError,
    NetworkFormatError,
    ResidualTooLargeError,
    SingularBlockError,
    SingularMatrixError,
    ZeroDivisorError,
    annotate_layer,
)
from .lattice import (
    FACES,
    ConductanceMap,
    EdgeId,
    LatticeSpec,
    ResponseMatrix,
    layer_boundary_node,
    layer_spike_edge,
    layer_tangential_edge,
)

# Relative floor below which the spike-removal denominator counts as zero.
DELTA_FLOOR = 1e-13
# Relative floor for the off-diagonal divisor in the boundary-edge formula.
DIVISOR_FLOOR = 1e-13
# Isolated rows after a peel should be zero; warn above this (noise-free).
RESIDUAL_WARN = 1e-8
# Warn when the input matrix is less symmetric than this, relative.
ASYMMETRY_WARN = 1e-6


@dataclass(frozen=True, eq=False)
class FaceBlocks:
    """The 16 face-by-face blocks of a response matrix."""

    length: int
    blocks: dict[tuple[str, str], np.ndarray]

    def __getitem__(self, pair: tuple[str, str]) -> np.ndarray:
        return self.blocks[pair]

    def assemble(self) -> np.ndarray:
        rows = [np.hstack([self.blocks[(f, g)] for g in FACES]) for f in FACES]
        return np.vstack(rows)


def face_blocks(lam, k: int | None = None) -> FaceBlocks:
    """Split a ``4m``-by-``4m`` response matrix into its face blocks."""
    a = matrixkit.as_matrix(lam)
    if a.shape[0] != a.shape[1] or a.shape[0] % 4 != 0 or a.shape[0] == 0:
        raise DimensionMismatchError(
            f"response matrix order must be a positive multiple of 4, got {a.shape}"
        )
    m = a.shape[0] // 4
    if k is not None and k != m:
        raise DimensionMismatchError(f"expected length {k}, matrix implies {m}")
    ranges = {face: slice(idx * m, (idx + 1) * m) for idx, face in enumerate(FACES)}
    blocks = {
        (f, g): a[ranges[f], ranges[g]].copy() for f in FACES for g in FACES
    }
    return FaceBlocks(length=m, blocks=blocks)


@dataclass(frozen=True, eq=False)
class FaceTildeSet:
    """Per-face reduction matrices (opposite face eliminated)."""

    length: int
    matrices: dict[str, np.ndarray]
    condition: dict[str, float]

    def __getitem__(self, face: str) -> np.ndarray:
        return self.matrices[face]


# For each face: (coupling to the adjacent face, opposite-face block to
# invert, continuation back to this face).
_TILDE_RECIPE = {
    "N": (("N", "E"), ("W", "E"), ("W", "N")),
    "E": (("E", "N"), ("S", "N"), ("S", "E")),
    "S": (("S", "W"), ("E", "W"), ("E", "S")),
    "W": (("W", "S"), ("N", "S"), ("N", "W")),
}


def tilde_face_matrices(blocks: FaceBlocks) -> FaceTildeSet:
    """Eliminate each face's opposite block and return the four reductions.

    Raises:
        SingularBlockError: when an opposite-face block cannot be inverted,
            which signals a degenerate or overly noisy response matrix.
    """
    matrices: dict[str, np.ndarray] = {}
    condition: dict[str, float] = {}
    for face in FACES:
        ab, inv_block, cd = _TILDE_RECIPE[face]
        try:
            x = matrixkit.solve_linear_system(blocks[inv_block], blocks[cd])
        except SingularMatrixError as exc:
            raise SingularBlockError(
                f"opposite-face block {inv_block[0]}{inv_block[1]} is singular: {exc}",
                face=face,
            ) from None
        matrices[face] = blocks[(face, face)] - blocks[ab] @ x
        condition[face] = matrixkit.condition_estimate(blocks[inv_block])
    return FaceTildeSet(length=blocks.length, matrices=matrices, condition=condition)


@dataclass(frozen=True)
class PeelExtraction:
    """Spike and tangential-edge conductances read off one boundary layer.

    ``spikes`` maps the layer's boundary index to its spike conductance;
    ``edges`` maps ``(i, i+1)`` index pairs along a face to the tangential
    conductance between their anchors.  Nonpositive or non-finite
    estimates (possible under noise) are listed in ``flags``, not clamped.
    """

    length: int
    spikes: dict[int, float]
    edges: dict[tuple[int, int], float]
    flags: tuple[str, ...] = ()


# Which triangle of a face's reduction carries the boundary-edge values.
# The reductions for N and S continue through the clockwise-next face and
# put the information on the subdiagonal; E and W continue the other way
# and use the superdiagonal.  (The opposite triangle is identically zero
# for exact data: verified per face against the forward model on unit and
# random networks.)
_EDGE_DIVISOR_IS_SUBDIAGONAL = {"N": True, "E": False, "S": True, "W": False}


def extract_boundary_conductances(tilde: FaceTildeSet) -> PeelExtraction:
    """Read all spike and boundary-edge conductances from the face reductions.

    The spike at face-local position ``j`` is the ``j``-th diagonal entry of
    that face's reduction; the edge between positions ``j`` and ``j+1``
    divides the spike product by the informative off-diagonal entry
    (``[j+1, j]`` for faces N and S, ``[j, j+1]`` for E and W).
    """
    m = tilde.length
    spikes: dict[int, float] = {}
    edges: dict[tuple[int, int], float] = {}
    flags: list[str] = []
    for offset, face in zip(range(0, 4 * m, m), FACES):
        t = tilde.matrices[face]
        lower = _EDGE_DIVISOR_IS_SUBDIAGONAL[face]
        for j in range(1, m + 1):
            gamma = float(t[j - 1, j - 1])
            spikes[offset + j] = gamma
            if not (math.isfinite(gamma) and gamma > 0):
                flags.append(f"spike {offset + j}: nonpositive estimate {gamma!r}")
        for j in range(1, m):
            pair = (offset + j, offset + j + 1)
            product = spikes[pair[0]] * spikes[pair[1]]
            divisor = float(t[j, j - 1]) if lower else float(t[j - 1, j])
            if divisor == 0.0 or abs(divisor) < DIVISOR_FLOOR * abs(product):
                raise ZeroDivisorError(
                    f"face {face} edge {pair}: divisor {divisor!r} too small "
                    f"for spike product {product!r}"
                )
            gamma_p = product / divisor
            edges[pair] = gamma_p
            if not (math.isfinite(gamma_p) and gamma_p > 0):
                flags.append(f"edge {pair}: nonpositive estimate {gamma_p!r}")
    return PeelExtraction(length=m, spikes=spikes, edges=edges, flags=tuple(flags))


def apply_spike_removal(lam, node: int, gamma: float) -> np.ndarray:
    """Response matrix after deleting the spike at boundary index ``node``.

    The returned matrix describes the network with that resistor removed;
    index ``node`` afterwards refers to the interior node the spike was
    attached to, which has become a boundary node.

    Raises:
        InvalidConductanceError: ``gamma`` must be positive and finite.
        DegenerateDeltaError: the diagonal minus ``gamma`` is numerically
            zero, i.e. ``gamma`` is inconsistent with the matrix.
    """
    a = matrixkit.as_matrix(lam)
    n = a.shape[0]
    if a.shape[0] != a.shape[1]:
        raise DimensionMismatchError(f"expected square matrix, got {a.shape}")
    if not 1 <= node <= n:
        raise ValueError(f"boundary index {node} out of range 1..{n}")
    if not (isinstance(gamma, (int, float)) and math.isfinite(gamma) and gamma > 0):
        raise InvalidConductanceError(f"spike conductance must be positive, got {gamma!r}")
    i = node - 1
    diag = a[i, i]
    delta = diag - gamma
    if abs(delta) <= DELTA_FLOOR * abs(diag):
        raise DegenerateDeltaError(
            f"node {node}: removing {gamma!r} from diagonal {diag!r} leaves delta {delta!r}"
        )
    others = np.arange(n) != i
    row = a[i, others]
    col = a[others, i]
    out = np.empty_like(a)
    out[np.ix_(others, others)] = a[np.ix_(others, others)] - np.outer(col, row) / delta
    out[i, others] = -(gamma / delta) * row
    out[others, i] = -(gamma / delta) * col
    out[i, i] = -gamma - gamma * gamma / delta
    return out


def apply_edge_removal(lam, i: int, j: int, gamma_prime: float) -> np.ndarray:
    """Response matrix after deleting a resistor joining boundary nodes i, j.

    Purely additive: subtracts the conductance from both diagonals and adds
    it to the two off-diagonal entries.
    """
    a = matrixkit.as_matrix(lam)
    n = a.shape[0]
    if a.shape[0] != a.shape[1]:
        raise DimensionMismatchError(f"expected square matrix, got {a.shape}")
    if i == j:
        raise ValueError("edge endpoints must differ")
    for idx in (i, j):
        if not 1 <= idx <= n:
            raise ValueError(f"boundary index {idx} out of range 1..{n}")
    out = a.copy()
    g = float(gamma_prime)
    out[i - 1, i - 1] -= g
    out[j - 1, j - 1] -= g
    out[i - 1, j - 1] += g
    out[j - 1, i - 1] += g
    return out


# ---------------------------------------------------------------------------
# Peeling

@dataclass
class LayerDiagnostics:
    """What one boundary layer looked like while it was being extracted."""

    layer: int
    length: int
    condition: dict[str, float]
    asymmetry: float
    residual_max: float | None = None
    flags: tuple[str, ...] = ()


@dataclass(frozen=True, eq=False)
class PeelState:
    """Working state of the reconstruction between layers."""

    spec: LatticeSpec
    current_lambda: np.ndarray
    current_length: int
    layer: int
    index_map: tuple
    diagnostics: tuple[LayerDiagnostics, ...] = ()
    last_residual_max: float | None = None

    @classmethod
    def initial(cls, spec: LatticeSpec, lam: np.ndarray) -> "PeelState":
        index_map = tuple(
            layer_boundary_node(spec, 0, j) for j in range(1, spec.n_boundary + 1)
        )
        return cls(
            spec=spec,
            current_lambda=matrixkit.as_matrix(lam),
            current_length=spec.length,
            layer=0,
            index_map=index_map,
        )


def corner_index_pairs(m: int) -> list[tuple[int, int]]:
    """Boundary index pairs sharing one corner anchor, (lower face, higher face)."""
    return [(1, 4 * m), (m, m + 1), (2 * m, 2 * m + 1), (3 * m, 3 * m + 1)]


def anchor_labels(m: int, corner_low_first: bool = True) -> dict[tuple[int, int], int]:
    """Boundary index labeling each face-local anchor after spike removals.

    Keyed by ``(face_index, local_position)``.  A corner anchor is shared
    by two faces and ends up labeled by whichever of its two boundary
    indices had its spike removed with the spike rule; ``corner_low_first``
    picks the lower-face index (the canonical choice).
    """
    labels = {
        (fi, i): fi * m + i for fi in range(4) for i in range(1, m + 1)
    }
    corners = corner_index_pairs(m)
    picks = [low if corner_low_first else high for low, high in corners]
    labels[(0, 1)] = picks[0]   # top-left anchor, shared by N and W
    labels[(3, m)] = picks[0]
    labels[(0, m)] = picks[1]   # top-right, N and E
    labels[(1, 1)] = picks[1]
    labels[(1, m)] = picks[2]   # bottom-right, E and S
    labels[(2, 1)] = picks[2]
    labels[(2, m)] = picks[3]   # bottom-left, S and W
    labels[(3, 1)] = picks[3]
    return labels


def removal_schedule(
    m: int, extraction: PeelExtraction, corner_low_first: bool = True
) -> list[tuple]:
    """Canonical removal order for one boundary layer of current length ``m``.

    Corner anchors carry two spikes; only the first removal at an anchor
    may use the spike rule (its far end must still be interior), so one
    spike per corner goes first and the partner is removed as an edge
    between boundary indices afterwards.  Tangential ring edges follow,
    addressed via the labels their anchors ended up with.
    """
    if m < 3:
        raise ValueError(f"peeling needs current length >= 3, got {m}")
    corners = corner_index_pairs(m)
    deferred = {(high if corner_low_first else low) for low, high in corners}
    steps: list[tuple] = []
    for b in range(1, 4 * m + 1):
        if b not in deferred:
            steps.append(("spike", b, extraction.spikes[b]))
    labels = anchor_labels(m, corner_low_first)
    for low, high in corners:
        kept, removed = (low, high) if corner_low_first else (high, low)
        steps.append(("edge", removed, kept, extraction.spikes[removed]))
    for fi in range(4):
        offset = fi * m
        for j in range(1, m):
            steps.append(
                (
                    "edge",
                    labels[(fi, j)],
                    labels[(fi, j + 1)],
                    extraction.edges[(offset + j, offset + j + 1)],
                )
            )
    return steps


def isolated_indices(m: int) -> tuple[int, ...]:
    """Boundary indices whose rows become zero after the layer's removals.

    These are the four old boundary nodes whose spikes were removed as
    edges, plus the four corner anchors, which lose all incident edges.
    """
    return tuple(sorted({1, m, m + 1, 2 * m, 2 * m + 1, 3 * m, 3 * m + 1, 4 * m}))


def apply_schedule(lam: np.ndarray, steps: Sequence[tuple]) -> np.ndarray:
    cur = lam
    for step in steps:
        if step[0] == "spike":
            _, node, gamma = step
            cur = apply_spike_removal(cur, node, gamma)
        elif step[0] == "edge":
            _, i, j, gamma_p = step
            cur = apply_edge_removal(cur, i, j, gamma_p)
        else:
            raise ValueError(f"unknown removal step {step!r}")
    return cur


def peel_layer(
    state: PeelState,
    extraction: PeelExtraction,
    schedule: Sequence[tuple] | None = None,
    residual_limit: float | None = None,
) -> PeelState:
    """Remove the current boundary layer and compact the response matrix.

    Which rows get deleted is decided by lattice combinatorics, never by
    thresholding; their residual max-norm is recorded (and warned about
    beyond ``RESIDUAL_WARN`` relative to the largest diagonal), because
    under noise the "zero" rows are merely small.

    Raises:
        ResidualTooLargeError: only when ``residual_limit`` is given and
            exceeded; by default large residuals warn and proceed.
    """
    m = state.current_length
    if m < 3:
        raise ValueError(f"peeling needs current length >= 3, got {m}")
    if extraction.length != m:
        raise DimensionMismatchError(
            f"extraction is for length {extraction.length}, state has {m}"
        )
    steps = removal_schedule(m, extraction) if schedule is None else schedule
    stripped = apply_schedule(state.current_lambda, steps)

    gone = isolated_indices(m)
    scale = float(np.abs(np.diag(state.current_lambda)).max()) or 1.0
    gone0 = [idx - 1 for idx in gone]
    residual = float(np.abs(stripped[gone0, :]).max())
    if residual > RESIDUAL_WARN * scale:
        message = (
            f"layer {state.layer}: isolated-row residual {residual:.3e} "
            f"exceeds {RESIDUAL_WARN:.0e} * diagonal scale {scale:.3e}"
        )
        if residual_limit is not None and residual > residual_limit:
            raise ResidualTooLargeError(message)
        _warnings.warn(message, RuntimeWarning, stacklevel=2)

    survivors = [idx - 1 for idx in range(1, 4 * m + 1) if idx not in gone]
    compact = stripped[np.ix_(survivors, survivors)]
    new_layer = state.layer + 1
    new_m = m - 2
    index_map = tuple(
        layer_boundary_node(state.spec, new_layer, j) for j in range(1, 4 * new_m + 1)
    )
    return replace(
        state,
        current_lambda=compact,
        current_length=new_m,
        layer=new_layer,
        index_map=index_map,
        last_residual_max=residual,
    )


# ---------------------------------------------------------------------------
# Full reconstruction

@dataclass(frozen=True, eq=False)
class ReconstructionResult:
    """Every edge conductance recovered from a response matrix."""

    conductances: ConductanceMap
    resistances: dict[EdgeId, float]
    report: tuple[LayerDiagnostics, ...]
    elapsed_ms: float
    warnings: tuple[str, ...] = ()

    @property
    def spec(self) -> LatticeSpec:
        return self.conductances.spec


def _safe_reciprocal(g: float) -> float:
    if g == 0.0:
        return math.inf
    return 1.0 / g


def reconstruct_full(lam: ResponseMatrix | np.ndarray, k: int) -> ReconstructionResult:
    """Recover all ``2k^2 + 2k`` conductances of a length-``k`` network.

    The input must already be symmetrized if it came from a noisy
    measurement; a relative asymmetry above ``ASYMMETRY_WARN`` only warns.
    Solver failures on degenerate input propagate with the peel layer
    number prepended to the message.
    """
    t0 = time.perf_counter()
    entries = lam.entries if isinstance(lam, ResponseMatrix) else matrixkit.as_matrix(lam)
    if entries.shape != (4 * k, 4 * k):
        raise DimensionMismatchError(
            f"expected a {4 * k}x{4 * k} response matrix for length {k}, got {entries.shape}"
        )
    spec = LatticeSpec(k)
    notes: list[str] = []
    scale = float(np.abs(entries).max()) or 1.0
    asym = float(np.abs(entries - entries.T).max()) / scale
    if asym > ASYMMETRY_WARN:
        note = f"input asymmetry {asym:.3e} above {ASYMMETRY_WARN:.0e}; symmetrize first"
        notes.append(note)
        _warnings.warn(note, RuntimeWarning, stacklevel=2)

    values: dict[EdgeId, float] = {}
    report: list[LayerDiagnostics] = []
    state = PeelState.initial(spec, entries)
    while True:
        layer = state.layer
        m = state.current_length
        cur = state.current_lambda
        cur_scale = float(np.abs(cur).max()) or 1.0
        layer_asym = float(np.abs(cur - cur.T).max()) / cur_scale
        try:
            blocks = face_blocks(cur, m)
            tilde = tilde_face_matrices(blocks)
            extraction = extract_boundary_conductances(tilde)
        except (SingularBlockError, ZeroDivisorError, SingularMatrixError) as exc:
            raise annotate_layer(exc, layer)

        for j, gamma in extraction.spikes.items():
            values[layer_spike_edge(spec, layer, j)] = gamma
        for offset, face in zip(range(0, 4 * m, m), FACES):
            for i in range(1, m):
                values[layer_tangential_edge(spec, layer, face, i)] = extraction.edges[
                    (offset + i, offset + i + 1)
                ]

        diag = LayerDiagnostics(
            layer=layer,
            length=m,
            condition=dict(tilde.condition),
            asymmetry=layer_asym,
            flags=extraction.flags,
        )
        notes.extend(f"layer {layer}: {f}" for f in extraction.flags)
        if m <= 2:
            report.append(diag)
            break
        try:
            state = peel_layer(state, extraction)
        except (DegenerateDeltaError, InvalidConductanceError, ZeroDivisorError) as exc:
            raise annotate_layer(exc, layer)
        diag.residual_max = state.last_residual_max
        report.append(diag)
        state = replace(state, diagnostics=tuple(report))

    conductances = ConductanceMap(spec, values, check_values=False)
    resistances = {e: _safe_reciprocal(values[e]) for e in spec.edges}
    elapsed_ms = (time.perf_counter() - t0) * 1000.0
    return ReconstructionResult(
        conductances=conductances,
        resistances=resistances,
        report=tuple(report),
        elapsed_ms=elapsed_ms,
        warnings=tuple(notes),
    )


# ---------------------------------------------------------------------------
# Reconstruction document serialization

RECONSTRUCTION_SCHEMA = "rnet-recon/1"


def _json_number(x: float):
    # JSON has no Inf/NaN; emit null for the rare non-finite estimate.
    return x if math.isfinite(x) else None


def reconstruction_to_json(result: ReconstructionResult) -> str:
    spec = result.spec
    doc = {
        "schema": RECONSTRUCTION_SCHEMA,
        "length": spec.length,
        "edges": [
            {
                "id": str(e),
                "conductance": _json_number(result.conductances.values[e]),
                "resistance": _json_number(result.resistances[e]),
            }
            for e in spec.edges
        ],
        "diagnostics": {
            "layers": [
                {
                    "layer": d.layer,
                    "condition": [_json_number(d.condition[f]) for f in FACES],
                    "residualMax": _json_number(d.residual_max)
                    if d.residual_max is not None
                    else None,
                }
                for d in result.report
            ],
            "elapsedMs": result.elapsed_ms,
        },
    }
    return json.dumps(doc, indent=2) + "\n"


def reconstruction_edges_from_json(text: str) -> tuple[LatticeSpec, dict[EdgeId, float]]:
    """Load ``(spec, per-edge resistance)`` from a reconstruction document."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise NetworkFormatError(f"invalid JSON: {exc}") from None
    if not isinstance(doc, dict) or doc.get("schema") != RECONSTRUCTION_SCHEMA:
        raise NetworkFormatError(f"expected schema {RECONSTRUCTION_SCHEMA!r}")
    length = doc.get("length")
    if not isinstance(length, int) or length < 1:
        raise NetworkFormatError(f"invalid length {length!r}")
    spec = LatticeSpec(length)
    edges = doc.get("edges")
    if not isinstance(edges, list):
        raise NetworkFormatError("missing edges array")
    resist: dict[EdgeId, float] = {}
    for item in edges:
        if not isinstance(item, dict) or "id" not in item:
            raise NetworkFormatError("malformed edge record")
        edge = EdgeId.parse(item["id"])
        if edge in resist:
            raise NetworkFormatError(f"duplicate edge {item['id']!r}")
        value = item.get("resistance")
        if value is None:
            value = math.nan
        elif not isinstance(value, (int, float)) or isinstance(value, bool):
            raise NetworkFormatError(f"resistance of {item['id']} must be a number")
        resist[edge] = float(value)
    if set(resist) != set(spec.edges):
        raise NetworkFormatError("edge set does not match the declared length")
    return spec, resist

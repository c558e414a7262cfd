"""Square resistor-network topology, Kirchhoff matrix and forward model.

Conventions frozen here and relied on everywhere else:

* A network of length ``k`` has a ``k``-by-``k`` grid of interior nodes,
  addressed ``(row, col)`` with ``(1, 1)`` at the top left, plus ``4k``
  boundary nodes numbered clockwise starting from the top-left corner:
  north face ``1..k`` (left to right), east ``k+1..2k`` (top to bottom),
  south ``2k+1..3k`` (right to left), west ``3k+1..4k`` (bottom to top).
* Every boundary node hangs off one interior anchor by a "spike" resistor;
  corner interior nodes carry two spikes, one from each adjacent face.
* Interior resistors join horizontally or vertically adjacent grid nodes.
  Total resistor count is ``4k + 2k(k-1) = 2k^2 + 2k``.
* The boundary response matrix maps boundary voltages to boundary
  currents (positive = flowing into the network).  It is the Schur
  complement of the Kirchhoff matrix onto the boundary nodes: positive
  diagonal, nonpositive off-diagonals, zero row sums.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterator, Mapping

import numpy as np

from . import matrixkit
from .errors import NetworkFormatError

FACES = ("N", "E", "S", "W")


@dataclass(frozen=True)
class EdgeId:
    """Stable name of one resistor.

    ``S:<b>`` is the spike of boundary node ``b``; ``H:<r>:<c>`` joins
    interior ``(r, c)``-``(r, c+1)``; ``V:<r>:<c>`` joins ``(r, c)``-``(r+1, c)``.
    """

    kind: str
    i: int
    j: int = 0

    @staticmethod
    def spike(b: int) -> "EdgeId":
        return EdgeId("S", b)

    @staticmethod
    def horizontal(r: int, c: int) -> "EdgeId":
        return EdgeId("H", r, c)

    @staticmethod
    def vertical(r: int, c: int) -> "EdgeId":
        return EdgeId("V", r, c)

    def __str__(self) -> str:
        if self.kind == "S":
            return f"S:{self.i}"
        return f"{self.kind}:{self.i}:{self.j}"

    @staticmethod
    def parse(text: str) -> "EdgeId":
        parts = text.split(":")
        try:
            if parts[0] == "S" and len(parts) == 2:
                return EdgeId.spike(int(parts[1]))
            if parts[0] in ("H", "V") and len(parts) == 3:
                return EdgeId(parts[0], int(parts[1]), int(parts[2]))
        except ValueError:
            pass
        raise NetworkFormatError(f"malformed edge id {text!r}")


@dataclass(frozen=True)
class LatticeSpec:
    """Topology of a length-``k`` square resistor network."""

    length: int

    def __post_init__(self):
        if not isinstance(self.length, int) or self.length < 1:
            raise ValueError(f"network length must be a positive integer, got {self.length!r}")

    @property
    def n_boundary(self) -> int:
        return 4 * self.length

    @property
    def n_interior(self) -> int:
        return self.length * self.length

    @property
    def n_nodes(self) -> int:
        return self.n_boundary + self.n_interior

    @property
    def n_edges(self) -> int:
        return 2 * self.length * self.length + 2 * self.length

    @property
    def edges(self) -> tuple[EdgeId, ...]:
        """Canonical edge catalog: spikes, then horizontals, then verticals."""
        return _edge_catalog(self.length)

    def spike_anchor(self, b: int) -> tuple[int, int]:
        """Interior grid node the spike of boundary node ``b`` attaches to."""
        k = self.length
        if not 1 <= b <= 4 * k:
            raise ValueError(f"boundary index {b} out of range 1..{4 * k}")
        if b <= k:                      # north, left to right
            return (1, b)
        if b <= 2 * k:                  # east, top to bottom
            return (b - k, k)
        if b <= 3 * k:                  # south, right to left
            return (k, k + 1 - (b - 2 * k))
        return (k + 1 - (b - 3 * k), 1)  # west, bottom to top

    def boundary_node_index(self, b: int) -> int:
        """0-based position of boundary node ``b`` in Kirchhoff ordering."""
        if not 1 <= b <= self.n_boundary:
            raise ValueError(f"boundary index {b} out of range")
        return b - 1

    def interior_node_index(self, r: int, c: int) -> int:
        """0-based position of interior node ``(r, c)`` in Kirchhoff ordering."""
        k = self.length
        if not (1 <= r <= k and 1 <= c <= k):
            raise ValueError(f"interior node ({r}, {c}) out of range")
        return 4 * k + (r - 1) * k + (c - 1)

    def edge_endpoints(self, edge: EdgeId) -> tuple[int, int]:
        """Kirchhoff-ordering node indices of an edge's two endpoints."""
        k = self.length
        if edge.kind == "S":
            r, c = self.spike_anchor(edge.i)
            return (self.boundary_node_index(edge.i), self.interior_node_index(r, c))
        if edge.kind == "H":
            if not (1 <= edge.i <= k and 1 <= edge.j <= k - 1):
                raise ValueError(f"edge {edge} out of range for length {k}")
            return (
                self.interior_node_index(edge.i, edge.j),
                self.interior_node_index(edge.i, edge.j + 1),
            )
        if edge.kind == "V":
            if not (1 <= edge.i <= k - 1 and 1 <= edge.j <= k):
                raise ValueError(f"edge {edge} out of range for length {k}")
            return (
                self.interior_node_index(edge.i, edge.j),
                self.interior_node_index(edge.i + 1, edge.j),
            )
        raise ValueError(f"unknown edge kind {edge.kind!r}")


@lru_cache(maxsize=None)
def _edge_catalog(k: int) -> tuple[EdgeId, ...]:
    edges = [EdgeId.spike(b) for b in range(1, 4 * k + 1)]
    edges += [EdgeId.horizontal(r, c) for r in range(1, k + 1) for c in range(1, k)]
    edges += [EdgeId.vertical(r, c) for r in range(1, k) for c in range(1, k + 1)]
    return tuple(edges)


def build_lattice(k: int) -> LatticeSpec:
    """Topology of the length-``k`` network, with its ordered edge catalog."""
    return LatticeSpec(k)


@dataclass(frozen=True)
class ConductanceMap:
    """Positive conductance assigned to every edge of a lattice.

    ``check_values=False`` skips the positivity/finiteness check; it is
    meant for reconstruction outputs, which under noisy input may contain
    nonpositive estimates that are reported rather than clamped.
    """

    spec: LatticeSpec
    values: Mapping[EdgeId, float]
    check_values: bool = field(default=True, repr=False, compare=False)

    def __post_init__(self):
        catalog = set(self.spec.edges)
        got = set(self.values.keys())
        if got != catalog:
            missing = sorted(str(e) for e in catalog - got)[:4]
            extra = sorted(str(e) for e in got - catalog)[:4]
            raise ValueError(
                f"edge set mismatch for length {self.spec.length}: "
                f"missing {missing}, extra {extra}"
            )
        if self.check_values:
            for e, g in self.values.items():
                if not (isinstance(g, (int, float)) and math.isfinite(g) and g > 0):
                    raise ValueError(f"conductance of {e} must be positive and finite, got {g!r}")

    def __getitem__(self, edge: EdgeId) -> float:
        return self.values[edge]

    def __iter__(self) -> Iterator[EdgeId]:
        return iter(self.spec.edges)

    def resistances(self) -> dict[EdgeId, float]:
        return {e: 1.0 / self.values[e] for e in self.spec.edges}

    def scaled(self, factor: float) -> "ConductanceMap":
        return ConductanceMap(self.spec, {e: factor * g for e, g in self.values.items()})


def uniform_conductances(spec: LatticeSpec, value: float = 1.0) -> ConductanceMap:
    return ConductanceMap(spec, {e: value for e in spec.edges})


def random_conductances(
    spec: LatticeSpec,
    rng: np.random.Generator,
    resistance_low: float = 1.0,
    resistance_high: float = 2.0,
) -> ConductanceMap:
    """Network with i.i.d. uniform resistances, drawn in catalog order."""
    if not 0 < resistance_low <= resistance_high:
        raise ValueError("need 0 < resistance_low <= resistance_high")
    resist = rng.uniform(resistance_low, resistance_high, size=spec.n_edges)
    return ConductanceMap(spec, {e: 1.0 / r for e, r in zip(spec.edges, resist)})


@dataclass(frozen=True, eq=False)
class ResponseMatrix:
    """The ``4k``-by-``4k`` boundary voltage-to-current map."""

    entries: np.ndarray

    def __post_init__(self):
        a = matrixkit.as_matrix(self.entries)
        if a.shape[0] != a.shape[1]:
            raise ValueError(f"response matrix must be square, got {a.shape}")
        if a.shape[0] % 4 != 0 or a.shape[0] == 0:
            raise ValueError(f"response matrix order must be a positive multiple of 4, got {a.shape[0]}")
        object.__setattr__(self, "entries", a)

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    @property
    def length(self) -> int:
        return self.n // 4

    def asymmetry(self) -> float:
        """max|A - A^T| relative to max|A|."""
        scale = float(np.abs(self.entries).max()) or 1.0
        return float(np.abs(self.entries - self.entries.T).max()) / scale

    def scaled(self, factor: float) -> "ResponseMatrix":
        return ResponseMatrix(factor * self.entries)


def build_kirchhoff(net: ConductanceMap) -> np.ndarray:
    """Conductance-weighted graph Laplacian over boundary then interior nodes."""
    spec = net.spec
    n = spec.n_nodes
    kirchhoff = np.zeros((n, n))
    for edge in spec.edges:
        g = net.values[edge]
        u, v = spec.edge_endpoints(edge)
        kirchhoff[u, u] += g
        kirchhoff[v, v] += g
        kirchhoff[u, v] -= g
        kirchhoff[v, u] -= g
    return kirchhoff


def response_matrix(net: ConductanceMap) -> ResponseMatrix:
    """Boundary response matrix: Schur complement eliminating interior nodes.

    The analytic result is symmetric; the returned matrix is symmetrized
    so that it is exactly so.
    """
    spec = net.spec
    kirchhoff = build_kirchhoff(net)
    boundary = range(spec.n_boundary)
    interior = range(spec.n_boundary, spec.n_nodes)
    lam = matrixkit.schur_complement(kirchhoff, boundary, interior)
    return ResponseMatrix(matrixkit.symmetrize_average(lam))


@dataclass(frozen=True, eq=False)
class BoundaryResponse:
    """Currents induced at the boundary plus the interior potential profile."""

    currents: np.ndarray
    interior_potentials: np.ndarray


def forward_boundary_solve(net: ConductanceMap, voltages) -> BoundaryResponse:
    """Currents drawn at every boundary node under the given voltages.

    Also returns the interior node potentials (the harmonic extension of
    the boundary data), ordered row-major over the interior grid.
    """
    spec = net.spec
    u = np.asarray(voltages, dtype=np.float64)
    if u.shape != (spec.n_boundary,):
        raise ValueError(f"expected {spec.n_boundary} boundary voltages, got shape {u.shape}")
    lam = response_matrix(net)
    currents = lam.entries @ u
    kirchhoff = build_kirchhoff(net)
    nb = spec.n_boundary
    k_ii = kirchhoff[nb:, nb:]
    k_ib = kirchhoff[nb:, :nb]
    interior = matrixkit.solve_linear_system(k_ii, -(k_ib @ u))
    return BoundaryResponse(currents=currents, interior_potentials=interior)


# ---------------------------------------------------------------------------
# Quarter-turn symmetry

def rotate_boundary_index(k: int, b: int) -> int:
    """Boundary index after rotating the network a quarter turn clockwise."""
    return (b - 1 + k) % (4 * k) + 1


def rotate_edge(k: int, edge: EdgeId) -> EdgeId:
    """Image of an edge under the quarter-turn rotation ``(r,c) -> (c, k+1-r)``."""
    if edge.kind == "S":
        return EdgeId.spike(rotate_boundary_index(k, edge.i))
    r, c = edge.i, edge.j
    if edge.kind == "H":
        return EdgeId.vertical(c, k + 1 - r)
    return EdgeId.horizontal(c, k - r)


def rotate_network(net: ConductanceMap) -> ConductanceMap:
    """Transport every conductance to its quarter-turn image edge."""
    k = net.spec.length
    return ConductanceMap(net.spec, {rotate_edge(k, e): g for e, g in net.values.items()})


# ---------------------------------------------------------------------------
# Layer geometry for the peeling reconstruction
#
# Layer 0 is the physical boundary; peeling layer L exposes interior ring
# L as the new boundary of a length k-2L sub-network.  The functions below
# are the single source of truth mapping a layer's boundary indices to
# physical nodes and edges.

def layer_length(k: int, layer: int) -> int:
    m = k - 2 * layer
    if layer < 0 or m < 1:
        raise ValueError(f"layer {layer} out of range for length {k}")
    return m


def _layer_face_local(m: int, j: int) -> tuple[str, int]:
    if not 1 <= j <= 4 * m:
        raise ValueError(f"boundary index {j} out of range 1..{4 * m}")
    face = FACES[(j - 1) // m]
    return face, (j - 1) % m + 1


def layer_boundary_node(spec: LatticeSpec, layer: int, j: int):
    """Physical node behind boundary index ``j`` of the layer's sub-network.

    Returns ``("B", b)`` at layer 0, ``("I", r, c)`` (a ring-``layer``
    interior node) afterwards.
    """
    k = spec.length
    m = layer_length(k, layer)
    if layer == 0:
        _layer_face_local(m, j)
        return ("B", j)
    face, i = _layer_face_local(m, j)
    if face == "N":
        return ("I", layer, layer + i)
    if face == "E":
        return ("I", layer + i, k + 1 - layer)
    if face == "S":
        return ("I", k + 1 - layer, k + 1 - layer - i)
    return ("I", k + 1 - layer - i, layer)


def layer_anchor(spec: LatticeSpec, layer: int, j: int) -> tuple[int, int]:
    """Interior node the layer-``layer`` spike at boundary index ``j`` leads to."""
    k = spec.length
    m = layer_length(k, layer)
    face, i = _layer_face_local(m, j)
    if face == "N":
        return (layer + 1, layer + i)
    if face == "E":
        return (layer + i, k - layer)
    if face == "S":
        return (k - layer, k + 1 - layer - i)
    return (k + 1 - layer - i, layer + 1)


def layer_spike_edge(spec: LatticeSpec, layer: int, j: int) -> EdgeId:
    """Physical edge acting as the spike of boundary index ``j`` at a layer."""
    k = spec.length
    m = layer_length(k, layer)
    if layer == 0:
        _layer_face_local(m, j)
        return EdgeId.spike(j)
    face, i = _layer_face_local(m, j)
    if face == "N":
        return EdgeId.vertical(layer, layer + i)
    if face == "E":
        return EdgeId.horizontal(layer + i, k - layer)
    if face == "S":
        return EdgeId.vertical(k - layer, k + 1 - layer - i)
    return EdgeId.horizontal(k + 1 - layer - i, layer)


def layer_tangential_edge(spec: LatticeSpec, layer: int, face: str, i: int) -> EdgeId:
    """Physical edge between anchors ``i`` and ``i+1`` of a face at a layer."""
    k = spec.length
    m = layer_length(k, layer)
    if face not in FACES:
        raise ValueError(f"unknown face {face!r}")
    if not 1 <= i <= m - 1:
        raise ValueError(f"tangential index {i} out of range 1..{m - 1}")
    if face == "N":
        return EdgeId.horizontal(layer + 1, layer + i)
    if face == "E":
        return EdgeId.vertical(layer + i, k - layer)
    if face == "S":
        return EdgeId.horizontal(k - layer, k - layer - i)
    return EdgeId.vertical(k - layer - i, layer + 1)


# ---------------------------------------------------------------------------
# Network document serialization

NETWORK_SCHEMA = "rnet-network/1"


def network_to_json(net: ConductanceMap) -> str:
    doc = {
        "schema": NETWORK_SCHEMA,
        "length": net.spec.length,
        "conductances": {str(e): net.values[e] for e in net.spec.edges},
    }
    return json.dumps(doc, indent=2) + "\n"


def _reject_duplicate_keys(pairs):
    seen = set()
    for key, _ in pairs:
        if key in seen:
            raise NetworkFormatError(f"duplicate key {key!r}")
        seen.add(key)
    return dict(pairs)


def network_from_json(text: str) -> ConductanceMap:
    """Parse a network document, rejecting missing/extra/duplicate edges."""
    try:
        doc = json.loads(text, object_pairs_hook=_reject_duplicate_keys)
    except json.JSONDecodeError as exc:
        raise NetworkFormatError(f"invalid JSON: {exc}") from None
    if not isinstance(doc, dict) or doc.get("schema") != NETWORK_SCHEMA:
        raise NetworkFormatError(f"expected schema {NETWORK_SCHEMA!r}")
    length = doc.get("length")
    if not isinstance(length, int) or length < 1:
        raise NetworkFormatError(f"invalid length {length!r}")
    raw = doc.get("conductances")
    if not isinstance(raw, dict):
        raise NetworkFormatError("missing conductances object")
    spec = LatticeSpec(length)
    values: dict[EdgeId, float] = {}
    for key, val in raw.items():
        edge = EdgeId.parse(key)
        if not isinstance(val, (int, float)) or isinstance(val, bool):
            raise NetworkFormatError(f"conductance of {key} must be a number")
        if not math.isfinite(val) or val <= 0:
            raise NetworkFormatError(f"conductance of {key} must be positive and finite")
        values[edge] = float(val)
    try:
        return ConductanceMap(spec, values)
    except ValueError as exc:
        raise NetworkFormatError(str(exc)) from None

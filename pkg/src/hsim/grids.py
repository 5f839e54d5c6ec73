"""Power-of-two grids, field encoding into normalized state vectors, bit-pattern regions.

Register layout is fixed throughout the package: the component index is most
significant, followed by the axis registers in x, y, z order, each axis MSB
first.  The flat amplitude index of (mu, jx, jy, jz) is therefore
``((mu * Nx + jx) * Ny + jy) * Nz + jz``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

BOUNDARY_CONDITIONS = ("dirichlet", "neumann", "periodic")


@dataclass(frozen=True)
class GridSpec:
    """Uniform grid with 2**n points per axis and one boundary condition per axis."""

    dim: int
    n_axis: tuple[int, ...]
    h: float
    bc: tuple[str, ...]

    def __post_init__(self):
        if self.dim not in (1, 2, 3):
            raise ValueError(f"dim must be 1, 2 or 3, got {self.dim}")
        object.__setattr__(self, "n_axis", tuple(int(n) for n in self.n_axis))
        object.__setattr__(self, "bc", tuple(self.bc))
        if len(self.n_axis) != self.dim:
            raise ValueError("n_axis length must equal dim")
        if any(n < 1 for n in self.n_axis):
            raise ValueError("each active axis needs at least one qubit")
        if not self.h > 0:
            raise ValueError("grid spacing must be positive")
        if len(self.bc) != self.dim:
            raise ValueError("bc length must equal dim")
        for b in self.bc:
            if b not in BOUNDARY_CONDITIONS:
                raise ValueError(f"unknown boundary condition {b!r}")

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(1 << n for n in self.n_axis)

    @property
    def n_total(self) -> int:
        """Total spatial qubits."""
        return sum(self.n_axis)

    @property
    def size(self) -> int:
        """Total number of grid points."""
        return 1 << self.n_total

    def linear_index(self, *coords: int) -> int:
        if len(coords) != self.dim:
            raise ValueError("coordinate count must equal dim")
        idx = 0
        for c, n in zip(coords, self.shape):
            if not 0 <= c < n:
                raise ValueError(f"coordinate {c} outside [0, {n})")
            idx = idx * n + c
        return idx


@dataclass
class MaterialField:
    """Per-grid-point propagation speed; c = 1 is vacuum."""

    c: np.ndarray
    grid: GridSpec

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float).reshape(self.grid.shape)
        if not np.all(np.isfinite(self.c)):
            raise ValueError("material speeds must be finite")
        if not np.all(self.c > 0):
            raise ValueError("material speeds must be positive")

    @classmethod
    def uniform(cls, grid: GridSpec, value: float = 1.0) -> "MaterialField":
        return cls(np.full(grid.shape, float(value)), grid)

    @property
    def flat(self) -> np.ndarray:
        return self.c.reshape(-1)


@dataclass
class StateVector:
    """Unit-norm amplitudes over (component register) x (spatial registers).

    ``n_idx`` is the component-register qubit count (2 for the three-component
    TM system, 4 for the twelve-component 3D system); components at index
    >= n_active are padding and stay zero under evolution.  ``normalization``
    records the Euclidean norm of the physical field stack that was encoded,
    so unnormalized values can be recovered.
    """

    amplitudes: np.ndarray
    n_idx: int
    grid: GridSpec
    n_active: int = 0
    normalization: float | None = None

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        expected = (1 << self.n_idx) * self.grid.size
        if self.amplitudes.size != expected:
            raise ValueError(
                f"amplitude length {self.amplitudes.size} != {expected} for "
                f"n_idx={self.n_idx} on this grid"
            )
        if self.n_active == 0:
            self.n_active = 1 << self.n_idx

    @property
    def n_components(self) -> int:
        return 1 << self.n_idx

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def component(self, mu: int) -> np.ndarray:
        """Flat view of the amplitude slice for component ``mu``."""
        if not 0 <= mu < self.n_components:
            raise ValueError(f"component {mu} outside register range")
        n = self.grid.size
        return self.amplitudes[mu * n : (mu + 1) * n]

    def as_tensor(self) -> np.ndarray:
        """View shaped (n_components, *grid.shape)."""
        return self.amplitudes.reshape((self.n_components,) + self.grid.shape)

    def copy(self) -> "StateVector":
        return StateVector(
            self.amplitudes.copy(), self.n_idx, self.grid, self.n_active, self.normalization
        )


def encode_scalar_field(values: np.ndarray, grid: GridSpec) -> tuple[np.ndarray, float]:
    """Normalize a scalar field into spatial-register amplitudes.

    Returns (amplitudes, normalization) with amplitudes[j] = values[j] / ||values||
    in linear grid-index order.
    """
    values = np.asarray(values, dtype=complex).reshape(-1)
    if values.size != grid.size:
        raise ValueError(f"field has {values.size} entries, grid has {grid.size}")
    norm = float(np.linalg.norm(values))
    if norm == 0.0:
        raise ValueError("unnormalizable field: all entries are zero")
    return values / norm, norm


def state_from_components(
    fields: list[np.ndarray], grid: GridSpec, n_idx: int
) -> StateVector:
    """Stack per-component fields, normalize jointly, and record the norm.

    ``fields`` lists the physical components in register order; missing
    trailing components (padding) are zero-filled.
    """
    n_components = 1 << n_idx
    if len(fields) > n_components:
        raise ValueError("more components than the index register can hold")
    stack = np.zeros((n_components, grid.size), dtype=complex)
    for mu, f in enumerate(fields):
        f = np.asarray(f, dtype=complex).reshape(-1)
        if f.size != grid.size:
            raise ValueError("component field size mismatch")
        stack[mu] = f
    norm = float(np.linalg.norm(stack))
    if norm == 0.0:
        raise ValueError("unnormalizable field: all entries are zero")
    return StateVector(
        stack.reshape(-1) / norm,
        n_idx=n_idx,
        grid=grid,
        n_active=len(fields),
        normalization=norm,
    )


def decode_component(state: StateVector, mu: int) -> np.ndarray:
    """Amplitude slice for component ``mu``, shaped like the grid (jx major)."""
    return state.component(mu).reshape(state.grid.shape).copy()


@dataclass(frozen=True)
class RegionMask:
    """Union of axis-aligned index cubes given as per-axis {0,1,x} patterns."""

    cubes: tuple[tuple[str, ...], ...]
    indices: frozenset[int] = field(repr=False)
    grid: GridSpec

    @property
    def size(self) -> int:
        return len(self.indices)

    def sorted_indices(self) -> np.ndarray:
        return np.fromiter(sorted(self.indices), dtype=np.int64, count=len(self.indices))

    def as_mask(self) -> np.ndarray:
        mask = np.zeros(self.grid.size, dtype=bool)
        mask[self.sorted_indices()] = True
        return mask.reshape(self.grid.shape)


def _axis_pattern_values(pattern: str, n_bits: int, axis: int) -> list[int]:
    if len(pattern) != n_bits:
        raise ValueError(
            f"pattern {pattern!r} has {len(pattern)} bits, axis {axis} has {n_bits}"
        )
    values = [0]
    for ch in pattern:  # MSB first
        if ch == "0":
            values = [v << 1 for v in values]
        elif ch == "1":
            values = [(v << 1) | 1 for v in values]
        elif ch in ("x", "X"):
            values = [w for v in values for w in ((v << 1), (v << 1) | 1)]
        else:
            raise ValueError(f"invalid character {ch!r} in pattern {pattern!r}")
    return values


def parse_region(
    patterns: list[tuple[str, ...]] | tuple[str, ...], grid: GridSpec
) -> RegionMask:
    """Resolve don't-care bit patterns to a grid-index set (union over cubes).

    Each cube is one per-axis pattern tuple like ("0111xx", "1010xx"); a bare
    tuple is treated as a single cube.
    """
    if patterns and isinstance(patterns[0], str):
        patterns = [tuple(patterns)]  # type: ignore[list-item]
    cubes = tuple(tuple(p) for p in patterns)
    indices: set[int] = set()
    for cube in cubes:
        if len(cube) != grid.dim:
            raise ValueError(f"cube {cube} has {len(cube)} axes, grid has {grid.dim}")
        per_axis = [
            _axis_pattern_values(p, n, axis)
            for axis, (p, n) in enumerate(zip(cube, grid.n_axis))
        ]
        coords = [0]
        for axis, vals in enumerate(per_axis):
            n = grid.shape[axis]
            coords = [c * n + v for c in coords for v in vals]
        indices.update(coords)
    return RegionMask(cubes=cubes, indices=frozenset(indices), grid=grid)


def parse_region_text(text: str, grid: GridSpec) -> RegionMask:
    """Parse regions written as "(0111xx,1010xx),(1000xx,1010xx)".

    Braces, whitespace and a trailing "_2" per cube are tolerated.
    """
    stripped = text.strip().strip("{}").replace(" ", "")
    cubes = []
    for chunk in stripped.replace("),(", ")|(").split("|"):
        chunk = chunk.strip().strip(",")
        if chunk.endswith("_2"):
            chunk = chunk[:-2]
        if not (chunk.startswith("(") and chunk.endswith(")")):
            raise ValueError(f"malformed region cube {chunk!r}")
        cubes.append(tuple(chunk[1:-1].split(",")))
    return parse_region(cubes, grid)


def _range_to_patterns(lo: int, hi: int, n_bits: int) -> list[str]:
    """Cover the inclusive index range [lo, hi] with maximal aligned patterns."""
    if not 0 <= lo <= hi < (1 << n_bits):
        raise ValueError(f"range [{lo}, {hi}] outside {n_bits}-bit axis")
    patterns = []
    while lo <= hi:
        k = 0
        while k < n_bits:
            step = 1 << (k + 1)
            if lo % step != 0 or lo + step - 1 > hi:
                break
            k += 1
        prefix = format(lo >> k, f"0{n_bits - k}b") if k < n_bits else ""
        patterns.append(prefix + "x" * k)
        lo += 1 << k
    return patterns


def rectangle_region(grid: GridSpec, *ranges: tuple[int, int]) -> RegionMask:
    """Region for an axis-aligned box of inclusive per-axis index ranges."""
    if len(ranges) != grid.dim:
        raise ValueError("one (lo, hi) range per axis required")
    per_axis = [
        _range_to_patterns(lo, hi, n) for (lo, hi), n in zip(ranges, grid.n_axis)
    ]
    cubes = [()]
    for pats in per_axis:
        cubes = [c + (p,) for c in cubes for p in pats]
    return parse_region(cubes, grid)

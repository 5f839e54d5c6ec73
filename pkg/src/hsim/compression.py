"""Cube compression of diagonal material operators.

A diagonal over n qubits is rewritten as baseline * identity plus one term per
cube, where a cube is a {0,1,x} pattern selecting an aligned index subset.
Each value class is covered by mutually disjoint cubes so that summing cube
contributions reproduces the original diagonal exactly; this is what makes the
compressed operator a faithful replacement rather than an approximation.

Cubes are carried internally as (bits, mask) integer pairs: mask has 1s at
don't-care positions, bits holds the fixed values (zero at don't-care
positions).  Bit n-1 of the integer is the leftmost pattern character.
"""

from __future__ import annotations

import heapq
from collections import Counter, defaultdict
from dataclasses import dataclass
from math import nextafter

import numpy as np

from .errors import CostGuardError
from .grids import GridSpec, MaterialField

EXACT_MODE_MAX_QUBITS = 16


def _pattern(bits: int, mask: int, n: int) -> str:
    chars = []
    for pos in range(n - 1, -1, -1):
        b = 1 << pos
        chars.append("x" if mask & b else ("1" if bits & b else "0"))
    return "".join(chars)


def _pattern_to_cube(pattern: str) -> tuple[int, int]:
    bits = 0
    mask = 0
    for ch in pattern:
        bits <<= 1
        mask <<= 1
        if ch == "1":
            bits |= 1
        elif ch in ("x", "X"):
            mask |= 1
        elif ch != "0":
            raise ValueError(f"invalid character {ch!r} in pattern {pattern!r}")
    return bits, mask


def _expand_cube(bits: int, mask: int) -> list[int]:
    points = [bits]
    sub = mask
    while sub:
        low = sub & -sub
        points += [p | low for p in points]
        sub ^= low
    return points


def _prime_implicants(onset: set[int], n: int) -> list[tuple[int, int]]:
    """All maximal fully-contained cubes of an index set (classic merging)."""
    primes: list[tuple[int, int]] = []
    current: dict[int, set[int]] = {0: set(onset)}
    while current:
        nxt: dict[int, set[int]] = defaultdict(set)
        merged: set[tuple[int, int]] = set()
        for mask, vals in current.items():
            free = [1 << b for b in range(n) if not mask & (1 << b)]
            for v in vals:
                for bit in free:
                    partner = v ^ bit
                    if partner in vals:
                        merged.add((mask, v))
                        if v < partner:
                            nxt[mask | bit].add(v)
        for mask, vals in current.items():
            for v in vals:
                if (mask, v) not in merged:
                    primes.append((v, mask))
        current = dict(nxt)
    return primes


def _grow_cube(point: int, remaining: set[int], n: int) -> tuple[int, int]:
    """Greedily free bits (LSB first) while the whole cube stays uncovered."""
    bits, mask = point, 0
    points = [point]
    for b in range(n):
        bit = 1 << b
        mirrored = [p ^ bit for p in points]
        if all(p in remaining for p in mirrored):
            mask |= bit
            bits &= ~bit
            points += mirrored
    return bits, mask


def _greedy_disjoint_cover(onset: set[int], n: int) -> list[tuple[int, int]]:
    """Greedy prime-implicant selection under a disjointness constraint.

    Primes are taken largest-coverage first (ties by lowest pattern in
    lexicographic order) as long as they fit entirely inside the uncovered
    set; a prime that partially overlaps earlier picks can never become
    selectable again, so it is dropped.  Points no whole prime fits around
    are covered by maximal grown subcubes.
    """
    remaining = set(onset)
    heap = [
        (-(1 << mask.bit_count()), _pattern(bits, mask, n), bits, mask)
        for bits, mask in _prime_implicants(onset, n)
    ]
    heapq.heapify(heap)
    cover: list[tuple[int, int]] = []
    while remaining and heap:
        _, _, bits, mask = heapq.heappop(heap)
        points = _expand_cube(bits, mask)
        if all(p in remaining for p in points):
            cover.append((bits, mask))
            remaining.difference_update(points)
    while remaining:
        bits, mask = _grow_cube(min(remaining), remaining, n)
        cover.append((bits, mask))
        remaining.difference_update(_expand_cube(bits, mask))
    return cover


def _cubes_within(point: int, remaining: set[int], n: int) -> list[tuple[int, int]]:
    """All cubes containing ``point`` that lie entirely inside ``remaining``."""
    out: list[tuple[int, int]] = []

    def extend(bits: int, mask: int, points: list[int], start: int):
        out.append((bits, mask))
        for b in range(start, n):
            bit = 1 << b
            mirrored = [p ^ bit for p in points]
            if all(p in remaining for p in mirrored):
                extend(bits & ~bit, mask | bit, points + mirrored, b + 1)

    extend(point, 0, [point], 0)
    return out


def _min_disjoint_cover(onset: set[int], n: int) -> list[tuple[int, int]]:
    """Minimum-cardinality disjoint cube cover by branch and bound.

    Branches on the lowest uncovered index; candidate cubes are every cube
    around it that fits inside the uncovered set, largest first.  The greedy
    cover seeds the bound.
    """
    best = _greedy_disjoint_cover(onset, n)

    def search(remaining: set[int], acc: list[tuple[int, int]]):
        nonlocal best
        if not remaining:
            if len(acc) < len(best):
                best = list(acc)
            return
        if len(acc) + 1 >= len(best):
            return
        pivot = min(remaining)
        cands = _cubes_within(pivot, remaining, n)
        cands.sort(key=lambda c: (-(1 << c[1].bit_count()), _pattern(c[0], c[1], n)))
        for bits, mask in cands:
            points = set(_expand_cube(bits, mask))
            acc.append((bits, mask))
            search(remaining - points, acc)
            acc.pop()

    search(set(onset), [])
    return best


@dataclass(frozen=True)
class CubeTerm:
    """One compressed diagonal contribution.

    ``delta`` is the offset from the baseline; ``value`` is the exact class
    value, kept alongside because baseline + delta can differ from it by one
    rounding ulp and reconstruction must be bit-exact.
    """

    delta: float
    value: float
    pattern: str

    def axis_patterns(self, grid: GridSpec) -> tuple[str, ...]:
        parts = []
        pos = 0
        for n in grid.n_axis:
            parts.append(self.pattern[pos : pos + n])
            pos += n
        return tuple(parts)


@dataclass(frozen=True)
class CubeTermSet:
    """Compressed diagonal: baseline plus disjoint per-value-class cubes."""

    baseline: float
    cubes: tuple[CubeTerm, ...]
    n: int

    @property
    def term_count(self) -> int:
        return len(self.cubes)


def _delta_for(value: float, baseline: float) -> float:
    """Offset d with baseline + d as close to value as the format allows."""
    d = value - baseline
    for _ in range(4):
        got = baseline + d
        if got == value:
            break
        d = nextafter(d, d + (value - got))
    return d


def compress_diagonal(
    material: MaterialField, grid: GridSpec, mode: str = "heuristic"
) -> CubeTermSet:
    """Compress a positive diagonal field into baseline + disjoint cube terms.

    The baseline is the most frequent value (largest value wins ties, so a
    vacuum speed of 1.0 beats slower material values).  Remaining value
    classes are covered independently: ``exact`` searches for a minimum
    disjoint cover, ``heuristic`` uses greedy prime-implicant selection.
    """
    if mode not in ("exact", "heuristic"):
        raise ValueError(f"mode must be 'exact' or 'heuristic', got {mode!r}")
    n = grid.n_total
    if mode == "exact" and n > EXACT_MODE_MAX_QUBITS:
        raise CostGuardError(
            f"exact minimization allowed up to {EXACT_MODE_MAX_QUBITS} qubits, got {n}"
        )
    values = material.flat
    if values.size != grid.size:
        raise ValueError("field size does not match grid")
    counts = Counter(values.tolist())
    baseline = max(counts.items(), key=lambda kv: (kv[1], kv[0]))[0]
    minimize = _min_disjoint_cover if mode == "exact" else _greedy_disjoint_cover
    cubes: list[CubeTerm] = []
    for value in sorted(v for v in counts if v != baseline):
        onset = {int(i) for i in np.flatnonzero(values == value)}
        delta = _delta_for(value, baseline)
        for bits, mask in minimize(onset, n):
            cubes.append(CubeTerm(delta=delta, value=value, pattern=_pattern(bits, mask, n)))
    return CubeTermSet(baseline=baseline, cubes=tuple(cubes), n=n)


def expand_cubes(terms: CubeTermSet, grid: GridSpec) -> np.ndarray:
    """Reconstruct the diagonal from a cube term set (inverse of compression)."""
    if terms.n != grid.n_total:
        raise ValueError("cube set qubit count does not match grid")
    out = np.full(grid.size, terms.baseline, dtype=float)
    hit = np.zeros(grid.size, dtype=bool)
    for term in terms.cubes:
        if len(term.pattern) != terms.n:
            raise ValueError(f"malformed pattern {term.pattern!r}")
        bits, mask = _pattern_to_cube(term.pattern)
        idx = _expand_cube(bits, mask)
        overlapping = hit[idx]
        if overlapping.any():
            # Only reachable for hand-built overlapping sets: fall back to sums.
            out[idx] += term.delta
        else:
            out[idx] = term.value
        hit[idx] = True
    return out.reshape(grid.shape)


@dataclass(frozen=True)
class CompressionReport:
    """Term counts before/after compression, as a ratio."""

    before: int
    after: int
    ratio: float
    homogeneous: bool
    terms: CubeTermSet


def compression_report(
    material: MaterialField, grid: GridSpec, mode: str = "heuristic"
) -> CompressionReport:
    """Count diagonal terms before (non-baseline sites) and after compression."""
    terms = compress_diagonal(material, grid, mode=mode)
    before = int(np.count_nonzero(material.flat != terms.baseline))
    after = terms.term_count
    if before == 0:
        return CompressionReport(0, 0, 0.0, True, terms)
    return CompressionReport(before, after, after / before, False, terms)

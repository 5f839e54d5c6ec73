"""Region-projector measurements, electric-field reconstruction, focal scans."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grids import MaterialField, RegionMask, StateVector


def region_expectation(state: StateVector, region: RegionMask, component: int = 0) -> float:
    """Probability weight of one component inside a region.

    Equals the expectation of the projector onto |component> tensor the
    region's index set.
    """
    amps = state.component(component)[region.sorted_indices()]
    return float(np.sum(np.abs(amps) ** 2))


def reconstruct_ez(state: StateVector, material: MaterialField) -> np.ndarray:
    """Physical out-of-plane electric field from a TM state.

    Component 0 carries d/dt of the potential scaled by 1/c, so
    Ez = -c * normalization * Re(amplitude).  Real initial data evolves with
    real amplitudes; the real part discards only roundoff.
    """
    if state.normalization is None:
        raise ValueError("state has no recorded normalization")
    u0 = np.real(state.component(0)).reshape(state.grid.shape)
    return -material.c * state.normalization * u0


@dataclass(frozen=True)
class IntensityRecord:
    """Intensity of one region at one snapshot time."""

    time: float
    region_id: int
    projector_expectation: float
    ez_power: float


@dataclass(frozen=True)
class RegionScanRow:
    region_id: int
    peak: float
    accumulated: float
    t_of_peak: float


@dataclass(frozen=True)
class FocalScanResult:
    rows: tuple[RegionScanRow, ...]
    peak_argmax: int
    accumulated_argmax: int
    metric: str

    def row(self, region_id: int) -> RegionScanRow:
        return self.rows[region_id]


def intensity_records(
    trajectory: list[tuple[float, StateVector]],
    regions: list[RegionMask],
    material: MaterialField,
) -> list[IntensityRecord]:
    records = []
    for t, state in trajectory:
        ez2 = reconstruct_ez(state, material).reshape(-1) ** 2
        u02 = np.abs(state.component(0)) ** 2
        for rid, region in enumerate(regions):
            idx = region.sorted_indices()
            records.append(
                IntensityRecord(
                    time=t,
                    region_id=rid,
                    projector_expectation=float(u02[idx].sum()),
                    ez_power=float(ez2[idx].sum()),
                )
            )
    return records


def focal_scan(
    trajectory: list[tuple[float, StateVector]],
    regions: list[RegionMask],
    window: tuple[float, float],
    material: MaterialField,
    metric: str = "ez",
) -> FocalScanResult:
    """Peak and time-accumulated region intensities over a time window.

    metric "ez" sums the physical |Ez|^2 over each region; "projector" sums
    component-0 probability weight.  Accumulation is a left rectangle rule at
    snapshot resolution over t in [t0, t1).
    """
    if metric not in ("ez", "projector"):
        raise ValueError(f"unknown metric {metric!r}")
    t0, t1 = window
    picked = [(t, s) for t, s in trajectory if t0 <= t < t1]
    if not picked:
        raise ValueError(f"no snapshots in window [{t0}, {t1})")
    if len(picked) > 1:
        dt_snap = float(picked[1][0] - picked[0][0])
    else:
        dt_snap = t1 - t0
    index_sets = [r.sorted_indices() for r in regions]
    powers = np.zeros((len(picked), len(regions)))
    for i, (t, state) in enumerate(picked):
        if metric == "ez":
            values = reconstruct_ez(state, material).reshape(-1) ** 2
        else:
            values = np.abs(state.component(0)) ** 2
        for rid, idx in enumerate(index_sets):
            powers[i, rid] = values[idx].sum()
    rows = []
    for rid in range(len(regions)):
        series = powers[:, rid]
        k = int(np.argmax(series))
        rows.append(
            RegionScanRow(
                region_id=rid,
                peak=float(series[k]),
                accumulated=float(series.sum() * dt_snap),
                t_of_peak=float(picked[k][0]),
            )
        )
    del times
    return FocalScanResult(
        rows=tuple(rows),
        peak_argmax=int(np.argmax([r.peak for r in rows])),
        accumulated_argmax=int(np.argmax([r.accumulated for r in rows])),
        metric=metric,
    )

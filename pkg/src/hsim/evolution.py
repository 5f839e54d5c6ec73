"""Time evolution: first-order Trotter product stepping, exact exponential
propagation, and a classical RK4 integrator for cross-checks.

The Trotter stepper caches the group exponentials once per (group, dt).  A
group whose terms each couple two components through a single-axis difference
block-diagonalizes over the other axes, so its exponential is stored as a
batch of small dense blocks and applied with batched matrix products; that is
what makes the 64x64 scenario runs cheap.  Exponentials of the full padded
space are only ever formed for small custom groupings.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import CostGuardError
from .grids import StateVector
from .operators import HamiltonianOperator, HamiltonianTerm

EXACT_ACTIVE_DIM_LIMIT = 1 << 20
DENSE_EXPM_DIM_LIMIT = 4096
_HERMITICITY_TOL = 1e-12


@dataclass(frozen=True)
class EvolutionPlan:
    """What to run: method, step size, step count, term grouping, snapshots."""

    method: str
    dt: float
    n_steps: int
    term_grouping: tuple[tuple[int, ...], ...] | None = None
    snapshot_stride: int = 1

    def __post_init__(self):
        if self.method not in ("trotter1", "exact", "rk4"):
            raise ValueError(f"unknown method {self.method!r}")
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.n_steps < 1:
            raise ValueError("n_steps must be at least 1")
        if self.snapshot_stride < 1:
            raise ValueError("snapshot_stride must be at least 1")


class _AxisTermPropagator:
    """exp(-i dt T) for one two-component single-axis coupling term.

    For fixed indices on the other axes the term reduces to a Hermitian
    2N x 2N block; all blocks are exponentiated with one batched
    eigendecomposition and applied as batched matvecs.
    """

    def __init__(self, term: HamiltonianTerm, op: HamiltonianOperator, dt: float):
        grid = op.grid
        self.term = term
        self.axis = term.axis
        self.n_mu = grid.shape[term.axis]
        self.grid_shape = grid.shape
        self.n_other = grid.size // self.n_mu
        self._moved_shape = tuple(
            s for i, s in enumerate(grid.shape) if i != term.axis
        ) + (self.n_mu,)
        d = term.diff_1axis.toarray()

        def slices(diag: np.ndarray | None) -> np.ndarray:
            if diag is None:
                return np.ones((self.n_other, self.n_mu))
            arr = diag.reshape(grid.shape)
            arr = np.moveaxis(arr, term.axis, -1)
            return arr.reshape(-1, self.n_mu)
        left = slices(term.left_diag)
        right = slices(term.right_diag)
        a = left[:, :, None] * d[None, :, :] * right[:, None, :]
        n = self.n_mu
        blocks = np.zeros((self.n_other, 2 * n, 2 * n), dtype=complex)
        blocks[:, :n, n:] = 1j * a
        blocks[:, n:, :n] = -1j * np.conj(np.transpose(a, (0, 2, 1)))
        w, v = np.linalg.eigh(blocks)
        phases = np.exp(-1j * dt * w)
        self.u = np.einsum("kij,kj,klj->kil", v, phases, v.conj())

    def apply(self, tensor: np.ndarray) -> None:
        """In-place update of the (n_components, *grid.shape) amplitude tensor."""
        r, s = self.term.comp_row, self.term.comp_col
        n = self.n_mu
        sub = np.stack([tensor[r], tensor[s]])
        sub = np.moveaxis(sub, 1 + self.axis, -1).reshape(2, self.n_other, n)
        vec = np.concatenate([sub[0], sub[1]], axis=1)
        out = np.matmul(self.u, vec[:, :, None])[:, :, 0]
        res = np.stack([out[:, :n], out[:, n:]]).reshape((2,) + self._moved_shape)
        res = np.moveaxis(res, -1, 1 + self.axis)
        tensor[r] = res[0]
        tensor[s] = res[1]


class _DenseGroupPropagator:
    """Cached dense exponential of one whole term group."""

    def __init__(self, matrix: sp.csr_matrix, dt: float):
        h = matrix.toarray()
        w, v = np.linalg.eigh(h)
        self.u = (v * np.exp(-1j * dt * w)) @ v.conj().T

    def apply(self, tensor: np.ndarray) -> None:
        flat = tensor.reshape(-1)
        flat[:] = self.u @ flat


class _KrylovGroupPropagator:
    """Uncached sparse exponential action, for large custom groupings."""

    def __init__(self, matrix: sp.csr_matrix, dt: float):
        self.gen = (-1j * dt) * matrix.tocsc()

    def apply(self, tensor: np.ndarray) -> None:
        flat = tensor.reshape(-1)
        flat[:] = spla.expm_multiply(self.gen, flat)


def _check_hermitian(matrix: sp.spmatrix, what: str) -> None:
    d = matrix - matrix.conj().T
    defect = 0.0 if d.nnz == 0 else float(np.abs(d.data).max())
    scale = float(np.abs(matrix.data).max()) if matrix.nnz else 1.0
    if defect > _HERMITICITY_TOL * max(scale, 1.0):
        raise ValueError(f"{what} is not Hermitian (defect {defect:.3g})")


class TrotterPropagator:
    """First-order product-formula stepper with cached group exponentials."""

    def __init__(
        self,
        op: HamiltonianOperator,
        dt: float,
        grouping: tuple[tuple[int, ...], ...] | None = None,
    ):
        if grouping is None:
            grouping = op.default_grouping()
        flat = sorted(i for g in grouping for i in g)
        if flat != list(range(len(op.terms))):
            raise ValueError("term grouping must partition the Hamiltonian's term list")
        self.op = op
        self.dt = dt
        self.grouping = tuple(tuple(g) for g in grouping)
        self._group_appliers = [self._build_group(g) for g in self.grouping]

    def _build_group(self, indices: tuple[int, ...]):
        terms = [self.op.terms[i] for i in indices]
        comps = [frozenset((t.comp_row, t.comp_col)) for t in terms]
        disjoint = all(
            comps[i].isdisjoint(comps[j])
            for i in range(len(comps))
            for j in range(i + 1, len(comps))
        )
        if disjoint:
            for t in terms:
                _check_hermitian(t.matrix(self.op.n_idx, self.op.grid.size), "group term")
            return [_AxisTermPropagator(t, self.op, self.dt) for t in terms]
        matrix = self.op.group_matrix(indices)
        _check_hermitian(matrix, "group sum")
        if self.op.dim <= DENSE_EXPM_DIM_LIMIT:
            return [_DenseGroupPropagator(matrix, self.dt)]
        return [_KrylovGroupPropagator(matrix, self.dt)]

    def step_tensor(self, tensor: np.ndarray) -> None:
        for group in self._group_appliers:
            for applier in group:
                applier.apply(tensor)

    def step(self, state: StateVector) -> StateVector:
        out = state.copy()
        self.step_tensor(out.as_tensor())
        return out


def trotter_step(
    state: StateVector, plan: EvolutionPlan, op: HamiltonianOperator
) -> StateVector:
    """One first-order Trotter step.  For many steps, use ``evolve_trajectory``
    (or hold a TrotterPropagator) so the group exponentials are built once."""
    if plan.method != "trotter1":
        raise ValueError("trotter_step requires method 'trotter1'")
    return TrotterPropagator(op, plan.dt, plan.term_grouping).step(state)


def exact_evolve(state: StateVector, op: HamiltonianOperator, t: float) -> StateVector:
    """Propagate by the exact exponential of the full Hamiltonian."""
    if op.active_dim > EXACT_ACTIVE_DIM_LIMIT:
        raise CostGuardError(
            f"exact evolution limited to active dimension {EXACT_ACTIVE_DIM_LIMIT}"
        )
    out = state.copy()
    if op.dim <= DENSE_EXPM_DIM_LIMIT:
        w, v = np.linalg.eigh(op.total.toarray())
        out.amplitudes = v @ (np.exp(-1j * t * w) * (v.conj().T @ state.amplitudes))
    else:
        out.amplitudes = spla.expm_multiply((-1j * t) * op.total.tocsc(), state.amplitudes)
    return out


def _rk4_step(h: sp.csr_matrix, psi: np.ndarray, dt: float) -> np.ndarray:
    k1 = -1j * (h @ psi)
    k2 = -1j * (h @ (psi + 0.5 * dt * k1))
    k3 = -1j * (h @ (psi + 0.5 * dt * k2))
    k4 = -1j * (h @ (psi + dt * k3))
    return psi + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)


def evolve_trajectory(
    state: StateVector, plan: EvolutionPlan, op: HamiltonianOperator
) -> list[tuple[float, StateVector]]:
    """Run the plan and return (time, state) snapshots.

    Snapshots are taken at t = 0, every ``snapshot_stride`` steps, and at the
    final step; final time is n_steps * dt.
    """
    snaps: list[tuple[float, StateVector]] = [(0.0, state.copy())]

    def record(k: int, current: StateVector):
        if k % plan.snapshot_stride == 0 or k == plan.n_steps:
            snaps.append((k * plan.dt, current.copy()))

    if plan.method == "trotter1":
        prop = TrotterPropagator(op, plan.dt, plan.term_grouping)
        current = state.copy()
        tensor = current.as_tensor()
        for k in range(1, plan.n_steps + 1):
            prop.step_tensor(tensor)
            record(k, current)
    elif plan.method == "exact":
        if op.dim <= DENSE_EXPM_DIM_LIMIT:
            w, v = np.linalg.eigh(op.total.toarray())
            proj = v.conj().T @ state.amplitudes
            for k in range(1, plan.n_steps + 1):
                if k % plan.snapshot_stride == 0 or k == plan.n_steps:
                    current = state.copy()
                    current.amplitudes = v @ (np.exp(-1j * k * plan.dt * w) * proj)
                    snaps.append((k * plan.dt, current))
        else:
            current = state.copy()
            for k in range(1, plan.n_steps + 1):
                current = exact_evolve(current, op, plan.dt)
                record(k, current)
    else:  # rk4
        current = state.copy()
        for k in range(1, plan.n_steps + 1):
            current.amplitudes = _rk4_step(op.total, current.amplitudes, plan.dt)
            record(k, current)
    return snaps


def energy_expectation(state: StateVector, op: HamiltonianOperator) -> float:
    return float(np.real(np.vdot(state.amplitudes, op.total @ state.amplitudes)))

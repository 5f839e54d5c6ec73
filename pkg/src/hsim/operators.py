"""Shift and difference operators with boundary corrections, and Hermitian
Hamiltonian assembly for the TM (2D, 3 components) and full 3D (12 components)
first-order wave systems.

Hermiticity is enforced constructively: every lower coupling block is the
negated adjoint of the matching upper block.  Backward operators obtained that
way coincide with the literal backward stencils for Dirichlet and periodic
boundaries; for Neumann they are the adjoint-consistent variant.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .grids import GridSpec, MaterialField, StateVector


def build_shift(axis: int, direction: str, grid: GridSpec) -> sp.csr_matrix:
    """One-axis shift operator without wrap-around.

    The "down" shift maps basis state |j+1> to |j| (matrix element [j, j+1] = 1)
    and annihilates |0>; "up" is its adjoint.
    """
    if not 0 <= axis < grid.dim:
        raise ValueError(f"axis {axis} not active on a {grid.dim}D grid")
    n = grid.shape[axis]
    ones = np.ones(n - 1)
    down = sp.diags(ones, offsets=1, shape=(n, n), format="csr")
    if direction == "down":
        return down
    if direction == "up":
        return sp.csr_matrix(down.T)
    raise ValueError(f"direction must be 'down' or 'up', got {direction!r}")


@dataclass(frozen=True)
class DiffOperator:
    """Single-axis finite-difference operator with boundary correction."""

    axis: int
    direction: str
    bc: str
    h: float
    matrix: sp.csr_matrix


def build_diff(axis: int, direction: str, bc: str, grid: GridSpec) -> DiffOperator:
    """First-order difference stencil on one axis.

    forward row j:  (u[j+1] - u[j]) / h, closed at j = N-1 by the boundary rule
    backward row j: (u[j] - u[j-1]) / h, closed at j = 0

    Dirichlet uses a zero ghost value, Neumann a copied ghost value (zero row),
    periodic wraps around.
    """
    if not 0 <= axis < grid.dim:
        raise ValueError(f"axis {axis} not active on a {grid.dim}D grid")
    n = grid.shape[axis]
    h = grid.h
    m = sp.lil_matrix((n, n))
    if direction == "forward":
        for j in range(n - 1):
            m[j, j] = -1.0
            m[j, j + 1] = 1.0
        if bc == "dirichlet":
            m[n - 1, n - 1] = -1.0
        elif bc == "periodic":
            m[n - 1, n - 1] = -1.0
            m[n - 1, 0] = 1.0
        elif bc != "neumann":
            raise ValueError(f"unknown boundary condition {bc!r}")
    elif direction == "backward":
        for j in range(1, n):
            m[j, j] = 1.0
            m[j, j - 1] = -1.0
        if bc == "dirichlet":
            m[0, 0] = 1.0
        elif bc == "periodic":
            m[0, 0] = 1.0
            m[0, n - 1] = -1.0
        elif bc != "neumann":
            raise ValueError(f"unknown boundary condition {bc!r}")
    else:
        raise ValueError(f"direction must be 'forward' or 'backward', got {direction!r}")
    return DiffOperator(axis, direction, bc, h, sp.csr_matrix(m / h))


def adjoint_backward(forward_op: DiffOperator) -> DiffOperator:
    """Backward operator defined as the negated adjoint of a forward one.

    This is the pairing used in every Hamiltonian block, so assembled
    operators are Hermitian for all boundary conditions.
    """
    if forward_op.direction != "forward":
        raise ValueError("adjoint_backward expects a forward operator")
    m = sp.csr_matrix(-forward_op.matrix.conj().T)
    return DiffOperator(forward_op.axis, "backward", forward_op.bc, forward_op.h, m)


def extend_to_grid(matrix: sp.spmatrix, axis: int, grid: GridSpec) -> sp.csr_matrix:
    """Tensor-extend a one-axis operator with identities on the other axes."""
    before = int(np.prod(grid.shape[:axis], dtype=np.int64))
    after = int(np.prod(grid.shape[axis + 1 :], dtype=np.int64))
    out = sp.kron(sp.identity(before, format="csr"), matrix, format="csr")
    return sp.kron(out, sp.identity(after, format="csr"), format="csr")


def build_material_diag(material: MaterialField, grid: GridSpec) -> sp.csr_matrix:
    """Diagonal operator carrying the propagation speed at every grid point."""
    c = np.asarray(material.c, dtype=float).reshape(-1)
    if c.size != grid.size:
        raise ValueError("material not defined on every grid point")
    if not np.all(c > 0):
        raise ValueError("material speeds must be positive")
    return sp.diags(c, format="csr")


@dataclass(frozen=True)
class HamiltonianTerm:
    """One Hermitian coupling pair: i (E[row,col] x spatial) + adjoint.

    ``spatial`` already contains the material weighting; ``axis`` and the raw
    difference pieces are kept so steppers can exploit the one-axis structure.
    """

    axis: int
    comp_row: int
    comp_col: int
    spatial: sp.csr_matrix
    diff_1axis: sp.csr_matrix
    left_diag: np.ndarray | None
    right_diag: np.ndarray | None

    def matrix(self, n_idx: int, grid_size: int) -> sp.csr_matrix:
        dim = (1 << n_idx) * grid_size
        upper = (1j * self.spatial).tocoo()
        r0 = self.comp_row * grid_size
        c0 = self.comp_col * grid_size
        full = sp.coo_matrix(
            (
                np.concatenate([upper.data, np.conj(upper.data)]),
                (
                    np.concatenate([upper.row + r0, upper.col + c0]),
                    np.concatenate([upper.col + c0, upper.row + r0]),
                ),
            ),
            shape=(dim, dim),
        )
        return full.tocsr()


@dataclass(frozen=True)
class HamiltonianOperator:
    """Hermitian wave Hamiltonian with a declared term decomposition."""

    dim_system: str
    grid: GridSpec
    material: MaterialField
    n_idx: int
    n_active: int
    terms: tuple[HamiltonianTerm, ...]
    total: sp.csr_matrix

    @property
    def dim(self) -> int:
        return (1 << self.n_idx) * self.grid.size

    @property
    def active_dim(self) -> int:
        return self.n_active * self.grid.size

    def default_grouping(self) -> tuple[tuple[int, ...], ...]:
        """Axis-wise term grouping (terms are ordered axis-major already)."""
        groups: dict[int, list[int]] = {}
        for i, t in enumerate(self.terms):
            groups.setdefault(t.axis, []).append(i)
        return tuple(tuple(groups[a]) for a in sorted(groups))

    def group_matrix(self, indices: tuple[int, ...]) -> sp.csr_matrix:
        out = sp.csr_matrix((self.dim, self.dim), dtype=complex)
        for i in indices:
            out = out + self.terms[i].matrix(self.n_idx, self.grid.size)
        return out


def _assemble(
    dim_system: str,
    grid: GridSpec,
    material: MaterialField,
    n_idx: int,
    couplings: list[tuple[int, int, int, str]],
) -> HamiltonianOperator:
    """couplings: (axis, row component, col component, material side)."""
    c = material.flat
    cdiag = sp.diags(c, format="csr")
    terms = []
    for axis, row, col, side in couplings:
        d_fwd = build_diff(axis, "forward", grid.bc[axis], grid)
        d_ext = extend_to_grid(d_fwd.matrix, axis, grid)
        if side == "right":
            spatial = sp.csr_matrix(d_ext @ cdiag)
            left, right = None, c
        else:
            spatial = sp.csr_matrix(cdiag @ d_ext)
            left, right = c, None
        terms.append(
            HamiltonianTerm(
                axis=axis,
                comp_row=row,
                comp_col=col,
                spatial=spatial,
                diff_1axis=d_fwd.matrix,
                left_diag=left,
                right_diag=right,
            )
        )
    n_active = {"tm2d": 3, "full3d": 12}[dim_system]
    total = sp.csr_matrix(((1 << n_idx) * grid.size,) * 2, dtype=complex)
    for t in terms:
        total = total + t.matrix(n_idx, grid.size)
    return HamiltonianOperator(
        dim_system=dim_system,
        grid=grid,
        material=material,
        n_idx=n_idx,
        n_active=n_active,
        terms=tuple(terms),
        total=total,
    )


def assemble_tm2d(grid: GridSpec, material: MaterialField) -> HamiltonianOperator:
    """TM-mode Hamiltonian on a 2D grid, embedded in a 4-component register.

    Component 0 carries the scaled time derivative of the out-of-plane
    potential; components 1 and 2 its in-plane gradients.  Upper blocks apply
    the material diagonal before the forward difference; lower blocks are the
    negated adjoints.
    """
    if grid.dim != 2:
        raise ValueError("TM assembly needs a 2D grid")
    couplings = [(0, 0, 1, "right"), (1, 0, 2, "right")]
    return _assemble("tm2d", grid, material, n_idx=2, couplings=couplings)


def assemble_full3d(grid: GridSpec, material: MaterialField) -> HamiltonianOperator:
    """Full 12-component Hamiltonian on a 3D grid in a 16-component register.

    Component r < 3 couples to component 3 + 3r + axis (the gradient slot of
    the same vector-potential component); here the material diagonal sits to
    the left of the forward difference.
    """
    if grid.dim != 3:
        raise ValueError("full 3D assembly needs a 3D grid")
    couplings = []
    for axis in range(3):
        for r in range(3):
            couplings.append((axis, r, 3 + 3 * r + axis, "left"))
    return _assemble("full3d", grid, material, n_idx=4, couplings=couplings)


# Gradient-slot bookkeeping for the 12-component system: slot 3 + 3r + mu holds
# the mu-derivative of vector-potential component r.
_B_COMPONENTS = (
    (3 + 3 * 2 + 1, 3 + 3 * 1 + 2),  # Bx = dy Az - dz Ay
    (3 + 3 * 0 + 2, 3 + 3 * 2 + 0),  # By = dz Ax - dx Az
    (3 + 3 * 1 + 0, 3 + 3 * 0 + 1),  # Bz = dx Ay - dy Ax
)


def _backward_ops(grid: GridSpec) -> list[sp.csr_matrix]:
    return [
        extend_to_grid(
            adjoint_backward(build_diff(axis, "forward", grid.bc[axis], grid)).matrix,
            axis,
            grid,
        )
        for axis in range(grid.dim)
    ]


def discrete_div_b(state: StateVector) -> np.ndarray:
    """Discrete divergence of the magnetic field read off a 12-component state.

    Uses the same backward differences as the Hamiltonian's gradient rows on
    all axes, so states assembled from consistent discrete gradients give an
    exactly vanishing result.
    """
    grid = state.grid
    if grid.dim != 3 or state.n_idx != 4:
        raise ValueError("magnetic divergence is defined for the 3D system only")
    ops = _backward_ops(grid)
    div = np.zeros(grid.size, dtype=complex)
    for axis, (plus, minus) in enumerate(_B_COMPONENTS):
        b = state.component(plus) - state.component(minus)
        div += ops[axis] @ b
    return np.real(div).reshape(grid.shape)


def full3d_state_from_potentials(
    a: np.ndarray, a_dot: np.ndarray, material: MaterialField, grid: GridSpec
) -> StateVector:
    """Build a 12-component state whose gradient slots are consistent discrete
    gradients of the vector potential ``a`` (shape (3, *grid.shape))."""
    a = np.asarray(a, dtype=float).reshape((3,) + grid.shape)
    a_dot = np.asarray(a_dot, dtype=float).reshape((3,) + grid.shape)
    ops = _backward_ops(grid)
    c = material.flat
    fields = [a_dot[r].reshape(-1) / c for r in range(3)]
    for r in range(3):
        for axis in range(3):
            fields.append(ops[axis] @ a[r].reshape(-1))
    from .grids import state_from_components

    return state_from_components(fields, grid, n_idx=4)


def hermiticity_defect(op: HamiltonianOperator) -> float:
    """Max-norm of H - H^dagger."""
    d = op.total - op.total.conj().T
    return 0.0 if d.nnz == 0 else float(np.abs(d.data).max())

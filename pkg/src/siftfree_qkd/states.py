"""Dense pure-state engine for small registers of labeled qudits.

A state is one complex amplitude vector over an ordered list of labeled
subsystems. Index order is mixed-radix with the FIRST listed subsystem as
the most significant digit, i.e. a C-order reshape over the subsystem
dimensions. Everything here is immutable; operations return new objects.

The engine tracks global phase faithfully: nothing ever rotates a state to
a canonical phase behind the caller's back. Only `fidelity` is phase-blind.

Model limits: pure states only, dense storage, total dimension capped at
MAX_AMPLITUDES. Mixed states are handled by the callers via trajectory
sampling, not density matrices.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import prod
from typing import Sequence

import numpy as np

from .rng import Rng

__all__ = [
    "NORM_TOL",
    "ZERO_PROB",
    "MAX_AMPLITUDES",
    "LabelError",
    "DimensionError",
    "ZeroProbabilityError",
    "FactorizationError",
    "StateVector",
    "UnitaryOp",
    "MeasurementBasis",
    "basis_state",
    "tensor",
    "apply_unitary",
    "measure",
    "measure_forced",
    "fidelity",
    "factor",
    "relabel",
]

# Tolerance for algebraic identities (norms, unitarity, orthonormality).
NORM_TOL = 1e-9
# Probabilities below this cutoff count as impossible outcomes.
ZERO_PROB = 1e-12
# Dense-storage cap on the total amplitude count of any one state.
MAX_AMPLITUDES = 2**16


class LabelError(ValueError):
    """Unknown, duplicate, or otherwise malformed subsystem labels."""


class DimensionError(ValueError):
    """Dimension bookkeeping violated (sizes, caps, mismatched operands)."""


class ZeroProbabilityError(ValueError):
    """A forced measurement requested an outcome of probability ~ 0."""


class FactorizationError(ValueError):
    """A subsystem split was requested across entanglement."""


def _as_complex_vector(values, length: int | None = None) -> np.ndarray:
    arr = np.asarray(values, dtype=np.complex128).reshape(-1).copy()
    if length is not None and arr.size != length:
        raise DimensionError(f"expected {length} amplitudes, got {arr.size}")
    if not np.all(np.isfinite(arr.view(np.float64))):
        raise DimensionError("amplitudes must be finite (no NaN/Inf)")
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class StateVector:
    """Normalized pure state over labeled qudit subsystems.

    labels: subsystem names, unique, in significance order (first = most
        significant mixed-radix digit).
    dims:   per-subsystem dimensions, each >= 2.
    amps:   complex amplitude vector of length prod(dims), unit norm
        within NORM_TOL.
    """

    labels: tuple[str, ...]
    dims: tuple[int, ...]
    amps: np.ndarray

    def __post_init__(self):
        labels = tuple(str(x) for x in self.labels)
        dims = tuple(int(x) for x in self.dims)
        if len(labels) != len(dims) or not labels:
            raise LabelError("labels and dims must be non-empty and same length")
        if len(set(labels)) != len(labels):
            raise LabelError(f"duplicate subsystem labels in {labels}")
        if any(d < 2 for d in dims):
            raise DimensionError("every subsystem dimension must be >= 2")
        total = prod(dims)
        if total > MAX_AMPLITUDES:
            raise DimensionError(
                f"state of dimension {total} exceeds cap {MAX_AMPLITUDES}"
            )
        amps = _as_complex_vector(self.amps, total)
        nrm = float(np.vdot(amps, amps).real)
        if abs(nrm - 1.0) > NORM_TOL:
            raise DimensionError(f"state norm^2 = {nrm!r}, not 1 within {NORM_TOL}")
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "amps", amps)

    @property
    def subsystems(self) -> tuple[tuple[str, int], ...]:
        return tuple(zip(self.labels, self.dims))

    @property
    def dim(self) -> int:
        return prod(self.dims)

    def axis(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise LabelError(f"no subsystem labeled {label!r} in {self.labels}") from None

    def dim_of(self, label: str) -> int:
        return self.dims[self.axis(label)]


@dataclass(frozen=True, eq=False)
class UnitaryOp:
    """Unitary matrix acting on a dim-dimensional space (or target group)."""

    dim: int
    matrix: np.ndarray

    def __post_init__(self):
        dim = int(self.dim)
        mat = np.asarray(self.matrix, dtype=np.complex128).copy()
        if mat.shape != (dim, dim):
            raise DimensionError(f"matrix shape {mat.shape} != ({dim}, {dim})")
        defect = np.abs(mat @ mat.conj().T - np.eye(dim)).max()
        if defect > NORM_TOL:
            raise DimensionError(f"matrix is not unitary (defect {defect:.3e})")
        mat.flags.writeable = False
        object.__setattr__(self, "dim", dim)
        object.__setattr__(self, "matrix", mat)

    def inverse(self) -> "UnitaryOp":
        return UnitaryOp(self.dim, self.matrix.conj().T)

    def __matmul__(self, other: "UnitaryOp") -> "UnitaryOp":
        if self.dim != other.dim:
            raise DimensionError("cannot compose unitaries of different dimension")
        return UnitaryOp(self.dim, self.matrix @ other.matrix)


@dataclass(frozen=True, eq=False)
class MeasurementBasis:
    """Orthonormal basis defining a projective measurement.

    vectors[j] is the outcome-j vector; there are exactly dim of them.
    """

    dim: int
    vectors: np.ndarray

    def __post_init__(self):
        dim = int(self.dim)
        vecs = np.asarray(self.vectors, dtype=np.complex128).copy()
        if vecs.shape != (dim, dim):
            raise DimensionError(f"need {dim} vectors of length {dim}, got {vecs.shape}")
        gram = vecs.conj() @ vecs.T
        defect = np.abs(gram - np.eye(dim)).max()
        if defect > NORM_TOL:
            raise DimensionError(f"basis is not orthonormal (defect {defect:.3e})")
        vecs.flags.writeable = False
        object.__setattr__(self, "dim", dim)
        object.__setattr__(self, "vectors", vecs)


def basis_state(d: int, value: int, label: str) -> StateVector:
    """Computational basis state |value> of a single d-level subsystem."""
    if not 0 <= value < d:
        raise DimensionError(f"value {value} outside 0..{d - 1}")
    amps = np.zeros(d, dtype=np.complex128)
    amps[value] = 1.0
    return StateVector((label,), (d,), amps)


def tensor(parts: Sequence[StateVector]) -> StateVector:
    """Tensor product of states, subsystems concatenated in the given order."""
    if not parts:
        raise LabelError("tensor needs at least one state")
    labels: tuple[str, ...] = ()
    dims: tuple[int, ...] = ()
    amps = np.ones(1, dtype=np.complex128)
    for part in parts:
        labels += part.labels
        dims += part.dims
        if prod(dims) > MAX_AMPLITUDES:
            raise DimensionError(
                f"tensor product dimension {prod(dims)} exceeds cap {MAX_AMPLITUDES}"
            )
        amps = np.kron(amps, part.amps)
    return StateVector(labels, dims, amps)


def _target_axes(state: StateVector, targets: Sequence[str]) -> list[int]:
    targets = list(targets)
    if not targets:
        raise LabelError("need at least one target label")
    if len(set(targets)) != len(targets):
        raise LabelError(f"duplicate target labels {targets}")
    return [state.axis(t) for t in targets]


def _target_matrix(state: StateVector, targets: Sequence[str]):
    """Amplitudes as a (target_group_dim, rest_dim) matrix.

    Target axes come first, in the order the caller listed them; the other
    subsystems keep their relative order.
    """
    axes = _target_axes(state, targets)
    arr = state.amps.reshape(state.dims)
    moved = np.moveaxis(arr, axes, range(len(axes)))
    tdim = prod(moved.shape[: len(axes)])
    return moved.reshape(tdim, -1), axes, moved.shape


def _rebuild(state: StateVector, axes: list[int], shape, flat: np.ndarray) -> StateVector:
    arr = flat.reshape(shape)
    arr = np.moveaxis(arr, range(len(axes)), axes)
    return StateVector(state.labels, state.dims, arr.reshape(-1))


def apply_unitary(state: StateVector, op: UnitaryOp, targets: Sequence[str]) -> StateVector:
    """Apply `op` to the listed subsystems (in listed significance order)."""
    mat, axes, shape = _target_matrix(state, targets)
    if mat.shape[0] != op.dim:
        raise DimensionError(
            f"operator dim {op.dim} != target group dim {mat.shape[0]}"
        )
    return _rebuild(state, axes, shape, op.matrix @ mat)


def _outcome_amplitudes(state: StateVector, targets: Sequence[str], basis: MeasurementBasis):
    mat, axes, shape = _target_matrix(state, targets)
    if mat.shape[0] != basis.dim:
        raise DimensionError(
            f"basis dim {basis.dim} != target group dim {mat.shape[0]}"
        )
    branch = basis.vectors.conj() @ mat  # row w: unnormalized rest-state for outcome w
    probs = np.einsum("wr,wr->w", branch, branch.conj()).real
    return branch, probs, axes, shape


def _collapse(
    state: StateVector,
    basis: MeasurementBasis,
    branch_row: np.ndarray,
    prob: float,
    outcome: int,
    axes: list[int],
    shape,
) -> StateVector:
    rest = branch_row / np.sqrt(prob)
    full = np.multiply.outer(basis.vectors[outcome], rest)
    return _rebuild(state, axes, shape, full)


def measure(
    state: StateVector,
    targets: Sequence[str],
    basis: MeasurementBasis,
    rng: Rng,
) -> tuple[int, StateVector, float]:
    """Projective measurement of the target group in `basis`.

    Returns (outcome_index, post_state, probability). The post state keeps
    the targets, collapsed onto the outcome vector.
    """
    branch, probs, axes, shape = _outcome_amplitudes(state, targets, basis)
    outcome = rng.pick(probs)
    post = _collapse(state, basis, branch[outcome], probs[outcome], outcome, axes, shape)
    return outcome, post, float(probs[outcome])


def measure_forced(
    state: StateVector,
    targets: Sequence[str],
    basis: MeasurementBasis,
    outcome: int,
) -> tuple[StateVector, float]:
    """Deterministically select a measurement branch; used by exact tests.

    Raises ZeroProbabilityError if the branch has probability < ZERO_PROB.
    """
    branch, probs, axes, shape = _outcome_amplitudes(state, targets, basis)
    if not 0 <= outcome < basis.dim:
        raise DimensionError(f"outcome {outcome} outside 0..{basis.dim - 1}")
    p = float(probs[outcome])
    if p < ZERO_PROB:
        raise ZeroProbabilityError(
            f"outcome {outcome} has probability {p!r}, below {ZERO_PROB}"
        )
    post = _collapse(state, basis, branch[outcome], p, outcome, axes, shape)
    return post, p


def fidelity(a: StateVector, b: StateVector) -> float:
    """|<a|b>|^2, insensitive to global phase. Labels must match as a set."""
    if set(a.labels) != set(b.labels):
        raise LabelError(f"label sets differ: {a.labels} vs {b.labels}")
    if a.labels == b.labels:
        if a.dims != b.dims:
            raise DimensionError("subsystem dimensions differ")
        overlap = np.vdot(a.amps, b.amps)
    else:
        src = [b.axis(l) for l in a.labels]
        arr = np.moveaxis(b.amps.reshape(b.dims), src, range(len(src)))
        if arr.shape != tuple(a.dims):
            raise DimensionError("subsystem dimensions differ")
        overlap = np.vdot(a.amps, arr.reshape(-1))
    return float(min(abs(overlap) ** 2, 1.0))


def factor(state: StateVector, labels: Sequence[str]) -> tuple[StateVector, StateVector]:
    """Split a product state into (part on `labels`, part on the rest).

    Requires the split to be exact (Schmidt rank 1 across the cut); raises
    FactorizationError otherwise. Global phase stays on the product: the
    extracted part gets a real-positive leading amplitude and the remainder
    carries the rest of the phase.
    """
    labels = list(labels)
    if len(labels) >= len(state.labels):
        raise LabelError("factor must leave at least one subsystem behind")
    mat, axes, shape = _target_matrix(state, labels)
    u, s, vh = np.linalg.svd(mat, full_matrices=False)
    if len(s) > 1 and s[1] > 1e-6:
        raise FactorizationError(
            f"subsystems {labels} are entangled with the rest (second Schmidt "
            f"coefficient {s[1]:.3e})"
        )
    part = u[:, 0]
    rest = s[0] * vh[0]
    lead = part[int(np.argmax(np.abs(part)))]
    phase = lead / abs(lead)
    part = part / phase
    rest = rest * phase
    part_dims = tuple(state.dims[i] for i in axes)
    rest_labels = tuple(l for l in state.labels if l not in labels)
    rest_dims = tuple(state.dims[state.axis(l)] for l in rest_labels)
    return (
        StateVector(tuple(labels), part_dims, part),
        StateVector(rest_labels, rest_dims, rest),
    )


def relabel(state: StateVector, mapping: dict[str, str]) -> StateVector:
    """Rename subsystems; order and amplitudes are untouched."""
    for old in mapping:
        state.axis(old)  # raises LabelError on unknown names
    new_labels = tuple(mapping.get(l, l) for l in state.labels)
    return StateVector(new_labels, state.dims, state.amps)

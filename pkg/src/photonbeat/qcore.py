"""Dense complex linear algebra for small composite Hilbert spaces.

Every state and operator carries a reference to the :class:`HilbertSpace` it
lives on, and all operations reject mismatched spaces.  Basis ordering
convention: subsystems appear in declaration order, with the first label most
significant (plain ``numpy.kron`` ordering), and levels 0, 1, ... within each
subsystem.  For example on a space with dims ``(2, 2)`` the basis is
``|00>, |01>, |10>, |11>`` at flat indices 0..3.

States may be unnormalized: the squared norm (or trace) of a conditional
state is the probability that the no-click record producing it actually
occurred, so it lies in [0, 1].  Intermediate algebra (e.g. a jump operator
applied to a state) can leave this range, so range checks live in the
``validate`` methods rather than in constructors.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

__all__ = [
    "DEFAULT_TOL",
    "HilbertSpace",
    "StateVector",
    "Operator",
    "DensityMatrix",
    "SpaceMismatchError",
    "tensor_product",
    "apply",
    "trace",
    "norm_squared",
    "basis_state",
    "identity",
    "transition",
    "projector",
    "lowering",
    "number_op",
    "embed",
]

#: Default tolerance for hermiticity / positivity / norm checks, in natural
#: units where the reference decay rate is 1.
DEFAULT_TOL = 1e-10


class SpaceMismatchError(ValueError):
    """Raised when two objects living on different spaces are combined."""


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=complex)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class HilbertSpace:
    """Ordered tensor product of finite-dimensional subsystems."""

    dims: tuple[int, ...]
    labels: tuple[str, ...]

    def __init__(self, dims: Sequence[int], labels: Sequence[str]):
        dims = tuple(int(d) for d in dims)
        labels = tuple(str(s) for s in labels)
        if len(dims) != len(labels):
            raise ValueError("dims and labels must have equal length")
        if any(d < 1 for d in dims):
            raise ValueError(f"subsystem dimensions must be positive: {dims}")
        if len(set(labels)) != len(labels):
            raise ValueError(f"subsystem labels must be unique: {labels}")
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "labels", labels)

    @property
    def dim(self) -> int:
        return int(np.prod(self.dims))

    def axis(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise KeyError(f"unknown subsystem label {label!r}") from None

    def flat_index(self, levels: Sequence[int]) -> int:
        """Flat basis index of the product state with the given levels."""
        if len(levels) != len(self.dims):
            raise ValueError("need one level per subsystem")
        idx = 0
        for lvl, d in zip(levels, self.dims):
            if not 0 <= lvl < d:
                raise ValueError(f"level {lvl} out of range for dim {d}")
            idx = idx * d + lvl
        return idx

    def __mul__(self, other: "HilbertSpace") -> "HilbertSpace":
        common = set(self.labels) & set(other.labels)
        if common:
            raise ValueError(f"duplicate subsystem labels: {sorted(common)}")
        return HilbertSpace(self.dims + other.dims, self.labels + other.labels)


def _require_same_space(a, b) -> None:
    if a.space != b.space:
        raise SpaceMismatchError(
            f"objects live on different spaces: {a.space.labels} vs {b.space.labels}"
        )


@dataclass(frozen=True, eq=False)
class StateVector:
    """Possibly-unnormalized pure state; squared norm = survival probability."""

    amplitudes: np.ndarray
    space: HilbertSpace

    def __post_init__(self):
        amp = _freeze(np.asarray(self.amplitudes).reshape(-1))
        if amp.shape != (self.space.dim,):
            raise ValueError(
                f"amplitude vector has length {amp.shape[0]}, space has dim {self.space.dim}"
            )
        if not np.all(np.isfinite(amp.view(float))):
            raise ValueError("amplitudes must be finite")
        object.__setattr__(self, "amplitudes", amp)

    def norm_squared(self) -> float:
        return float(np.real(np.vdot(self.amplitudes, self.amplitudes)))

    def normalized(self) -> "StateVector":
        n2 = self.norm_squared()
        if n2 <= 0.0:
            raise ValueError("cannot normalize a zero state")
        return StateVector(self.amplitudes / np.sqrt(n2), self.space)

    def overlap(self, other: "StateVector") -> complex:
        """<self|other>."""
        _require_same_space(self, other)
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def to_density_matrix(self) -> "DensityMatrix":
        return DensityMatrix(np.outer(self.amplitudes, self.amplitudes.conj()), self.space)

    def validate(self, tol: float = DEFAULT_TOL) -> None:
        n2 = self.norm_squared()
        if not 0.0 <= n2 <= 1.0 + tol:
            raise ValueError(f"squared norm {n2} outside [0, 1+tol]")


@dataclass(frozen=True, eq=False)
class Operator:
    """Dense square operator; entries carry the units of what it represents."""

    matrix: np.ndarray
    space: HilbertSpace

    def __post_init__(self):
        m = _freeze(np.asarray(self.matrix))
        d = self.space.dim
        if m.shape != (d, d):
            raise ValueError(f"operator shape {m.shape} does not match space dim {d}")
        if not np.all(np.isfinite(m.view(float))):
            raise ValueError("operator entries must be finite")
        object.__setattr__(self, "matrix", m)

    def dag(self) -> "Operator":
        return Operator(self.matrix.conj().T, self.space)

    def is_hermitian(self, tol: float = DEFAULT_TOL) -> bool:
        return bool(np.max(np.abs(self.matrix - self.matrix.conj().T)) <= tol)

    def __matmul__(self, other):
        _require_same_space(self, other)
        if isinstance(other, Operator):
            return Operator(self.matrix @ other.matrix, self.space)
        if isinstance(other, StateVector):
            return StateVector(self.matrix @ other.amplitudes, self.space)
        return NotImplemented

    def __add__(self, other: "Operator") -> "Operator":
        _require_same_space(self, other)
        return Operator(self.matrix + other.matrix, self.space)

    def __sub__(self, other: "Operator") -> "Operator":
        _require_same_space(self, other)
        return Operator(self.matrix - other.matrix, self.space)

    def __mul__(self, scalar: complex) -> "Operator":
        return Operator(self.matrix * scalar, self.space)

    __rmul__ = __mul__

    def expectation(self, psi: StateVector) -> complex:
        _require_same_space(self, psi)
        return complex(np.vdot(psi.amplitudes, self.matrix @ psi.amplitudes))


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Possibly-unnormalized mixed state; trace = survival probability."""

    matrix: np.ndarray
    space: HilbertSpace

    def __post_init__(self):
        m = _freeze(np.asarray(self.matrix))
        d = self.space.dim
        if m.shape != (d, d):
            raise ValueError(f"density matrix shape {m.shape} does not match space dim {d}")
        if not np.all(np.isfinite(m.view(float))):
            raise ValueError("density matrix entries must be finite")
        object.__setattr__(self, "matrix", m)

    def trace(self) -> float:
        return float(np.real(np.trace(self.matrix)))

    def normalized(self) -> "DensityMatrix":
        tr = self.trace()
        if tr <= 0.0:
            raise ValueError("cannot normalize a zero-trace density matrix")
        return DensityMatrix(self.matrix / tr, self.space)

    def element(self, bra_levels: Sequence[int], ket_levels: Sequence[int]) -> complex:
        """<bra|rho|ket> for product basis states given by subsystem levels."""
        return complex(
            self.matrix[self.space.flat_index(bra_levels), self.space.flat_index(ket_levels)]
        )

    def validate(self, tol: float = DEFAULT_TOL) -> None:
        m = self.matrix
        herm = np.max(np.abs(m - m.conj().T))
        if herm > tol:
            raise ValueError(f"not Hermitian: max deviation {herm}")
        eigs = np.linalg.eigvalsh((m + m.conj().T) / 2)
        if eigs.min() < -tol:
            raise ValueError(f"not positive semidefinite: min eigenvalue {eigs.min()}")
        tr = self.trace()
        if not -tol <= tr <= 1.0 + tol:
            raise ValueError(f"trace {tr} outside [0, 1+tol]")


# ---------------------------------------------------------------------------
# operations


def tensor_product(a, b):
    """Kronecker product of two states or two operators on disjoint label sets."""
    space = a.space * b.space
    if isinstance(a, StateVector) and isinstance(b, StateVector):
        return StateVector(np.kron(a.amplitudes, b.amplitudes), space)
    if isinstance(a, Operator) and isinstance(b, Operator):
        return Operator(np.kron(a.matrix, b.matrix), space)
    if isinstance(a, DensityMatrix) and isinstance(b, DensityMatrix):
        return DensityMatrix(np.kron(a.matrix, b.matrix), space)
    raise TypeError(f"cannot tensor {type(a).__name__} with {type(b).__name__}")


def apply(op: Operator, psi: StateVector) -> StateVector:
    """Matrix-vector product ``op @ psi`` with no implicit normalization."""
    return op @ psi


def trace(rho: DensityMatrix) -> float:
    return rho.trace()


def norm_squared(psi: StateVector) -> float:
    return psi.norm_squared()


# ---------------------------------------------------------------------------
# constructors


def basis_state(space: HilbertSpace, levels: Sequence[int] | Mapping[str, int]) -> StateVector:
    """Product basis state; unspecified labels (mapping form) default to level 0."""
    if isinstance(levels, Mapping):
        unknown = set(levels) - set(space.labels)
        if unknown:
            raise KeyError(f"unknown subsystem labels {sorted(unknown)}")
        levels = [levels.get(lbl, 0) for lbl in space.labels]
    amp = np.zeros(space.dim, dtype=complex)
    amp[space.flat_index(list(levels))] = 1.0
    return StateVector(amp, space)


def identity(space: HilbertSpace) -> Operator:
    return Operator(np.eye(space.dim, dtype=complex), space)


def embed(space: HilbertSpace, label: str, local: np.ndarray) -> Operator:
    """Lift a single-subsystem matrix to the full space (identity elsewhere)."""
    axis = space.axis(label)
    mats: Iterable[np.ndarray] = (
        np.asarray(local, dtype=complex) if i == axis else np.eye(d, dtype=complex)
        for i, d in enumerate(space.dims)
    )
    out = np.array([[1.0 + 0j]])
    for m in mats:
        out = np.kron(out, m)
    return Operator(out, space)


def transition(space: HilbertSpace, label: str, to_level: int, from_level: int) -> Operator:
    """|to><from| on one subsystem, identity on the rest."""
    d = space.dims[space.axis(label)]
    local = np.zeros((d, d), dtype=complex)
    local[to_level, from_level] = 1.0
    return embed(space, label, local)


def projector(space: HilbertSpace, label: str, level: int) -> Operator:
    return transition(space, label, level, level)


def lowering(space: HilbertSpace, label: str) -> Operator:
    """Bosonic lowering operator truncated to the subsystem dimension."""
    d = space.dims[space.axis(label)]
    local = np.diag(np.sqrt(np.arange(1, d, dtype=float)), k=1).astype(complex)
    return embed(space, label, local)


def number_op(space: HilbertSpace, label: str) -> Operator:
    d = space.dims[space.axis(label)]
    return embed(space, label, np.diag(np.arange(d, dtype=float)).astype(complex))

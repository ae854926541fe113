"""Dense complex linear algebra for small multi-qubit Hilbert spaces.

Conventions
-----------
Tensor products are big-endian: the leftmost factor is qubit 0, so the
computational basis index of a bitstring ``b_0 b_1 ... b_{n-1}`` is
``sum_k b_k * 2**(n-1-k)``.  Pauli strings are written qubit 0 first,
e.g. ``"XZ"`` is ``sigma_x (x) sigma_z``.
"""

from __future__ import annotations

import functools
import itertools
from typing import Iterable, NamedTuple, Sequence

import numpy as np

HERMITIAN_TOL = 1e-10
NORM_TOL = 1e-10
EIGEN_MERGE_TOL = 1e-9


class DimensionError(ValueError):
    """Raised when matrix or state shapes do not agree."""


class NotHermitianError(ValueError):
    """Raised when an operator is required to be Hermitian but is not."""


class NotNormalizedError(ValueError):
    """Raised when a state vector does not have unit norm."""


# ---------------------------------------------------------------------------
# validation helpers


def as_matrix(a, *, square: bool = True) -> np.ndarray:
    """Return ``a`` as a finite complex 2-D array."""
    m = np.asarray(a, dtype=np.complex128)
    if m.ndim != 2:
        raise DimensionError(f"expected a 2-D matrix, got shape {m.shape}")
    if square and m.shape[0] != m.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix has non-finite entries")
    return m


def as_state(psi, dim: int | None = None) -> np.ndarray:
    """Return ``psi`` as a unit-norm complex vector (norm checked, not fixed)."""
    v = np.asarray(psi, dtype=np.complex128).reshape(-1)
    if not np.all(np.isfinite(v)):
        raise ValueError("state has non-finite amplitudes")
    if dim is not None and v.shape[0] != dim:
        raise DimensionError(f"expected a state of dimension {dim}, got {v.shape[0]}")
    norm2 = float(np.vdot(v, v).real)
    if abs(norm2 - 1.0) > NORM_TOL:
        raise NotNormalizedError(f"state norm^2 is {norm2!r}, expected 1")
    return v


def normalized(psi) -> np.ndarray:
    v = np.asarray(psi, dtype=np.complex128).reshape(-1)
    return v / np.linalg.norm(v)


def is_hermitian(a, tol: float = HERMITIAN_TOL) -> bool:
    m = np.asarray(a)
    return m.ndim == 2 and m.shape[0] == m.shape[1] and bool(np.all(np.abs(m - m.conj().T) <= tol))


def check_hermitian(a, tol: float = HERMITIAN_TOL) -> np.ndarray:
    m = as_matrix(a)
    if not is_hermitian(m, tol):
        dev = float(np.max(np.abs(m - m.conj().T)))
        raise NotHermitianError(f"matrix is not Hermitian (max deviation {dev:.3g})")
    return m


def check_unitary(u, tol: float = HERMITIAN_TOL) -> np.ndarray:
    m = as_matrix(u)
    dev = np.max(np.abs(m.conj().T @ m - np.eye(m.shape[0])))
    if dev > tol:
        raise ValueError(f"matrix is not unitary (max deviation {dev:.3g})")
    return m


def check_density_matrix(rho, tol: float = HERMITIAN_TOL) -> np.ndarray:
    """Hermitian, unit trace and PSD (eigenvalues >= -1e-9)."""
    m = check_hermitian(rho, tol)
    tr = np.trace(m)
    if abs(tr - 1.0) > tol:
        raise ValueError(f"density matrix has trace {tr!r}")
    lo = float(np.linalg.eigvalsh(m).min())
    if lo < -EIGEN_MERGE_TOL:
        raise ValueError(f"density matrix is not positive semidefinite (min eigenvalue {lo:.3g})")
    return m


def num_qubits(dim: int) -> int:
    n = int(dim).bit_length() - 1
    if dim < 1 or 1 << n != dim:
        raise DimensionError(f"dimension {dim} is not a power of two")
    return n


# ---------------------------------------------------------------------------
# products and partial trace


def tensor_product(a, b) -> np.ndarray:
    """Kronecker product ``a (x) b`` with ``a`` as the leading (qubit 0) factor."""
    return np.kron(np.asarray(a, dtype=np.complex128), np.asarray(b, dtype=np.complex128))


def kron_all(factors: Iterable) -> np.ndarray:
    return functools.reduce(tensor_product, factors, np.ones((1, 1), dtype=np.complex128))


def projector(psi) -> np.ndarray:
    v = np.asarray(psi, dtype=np.complex128).reshape(-1)
    return np.outer(v, v.conj())


def partial_trace(rho, dims: Sequence[int], keep: Iterable[int]) -> np.ndarray:
    """Reduced density matrix of the subsystems listed in ``keep``.

    Parameters
    ----------
    rho : array_like
        Square matrix on the composite space ``dims[0] x dims[1] x ...``.
    dims : sequence of int
        Local dimension of every subsystem, in tensor order.
    keep : iterable of int
        Subsystem indices to keep.  The result is ordered by increasing index.
        An empty ``keep`` returns the 1x1 total trace.
    """
    m = as_matrix(rho)
    dims = [int(d) for d in dims]
    if any(d < 1 for d in dims) or int(np.prod(dims)) != m.shape[0]:
        raise DimensionError(f"subsystem dims {dims} do not match matrix of shape {m.shape}")
    n = len(dims)
    keep = sorted(set(int(k) for k in keep))
    if any(k < 0 or k >= n for k in keep):
        raise DimensionError(f"keep indices {keep} out of range for {n} subsystems")

    t = m.reshape(dims + dims)
    # einsum labels: row index i_k, column index j_k; traced systems share one label
    letters = iter("abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ")
    rows = [next(letters) for _ in range(n)]
    cols = [rows[k] if k not in keep else next(letters) for k in range(n)]
    out = [rows[k] for k in keep] + [cols[k] for k in keep]
    red = np.einsum("".join(rows) + "".join(cols) + "->" + "".join(out), t)
    d_keep = int(np.prod([dims[k] for k in keep])) if keep else 1
    return red.reshape(d_keep, d_keep)


# ---------------------------------------------------------------------------
# Pauli algebra

_PAULI = {
    "I": np.array([[1, 0], [0, 1]], dtype=np.complex128),
    "X": np.array([[0, 1], [1, 0]], dtype=np.complex128),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=np.complex128),
    "Z": np.array([[1, 0], [0, -1]], dtype=np.complex128),
}
for _m in _PAULI.values():
    _m.setflags(write=False)


class SignedAxis(NamedTuple):
    """One of the six polarization directions ``(+/-) x, y, z``."""

    axis: str
    sign: int

    def label(self) -> str:
        return ("+" if self.sign > 0 else "-") + self.axis


SIGNED_AXES: tuple[SignedAxis, ...] = tuple(
    SignedAxis(axis, sign) for axis in "xyz" for sign in (+1, -1)
)


def _check_axis(axis: str) -> str:
    a = axis.lower()
    if a not in ("x", "y", "z"):
        raise ValueError(f"unknown axis {axis!r}")
    return a


def pauli_matrix(a: str | SignedAxis) -> np.ndarray:
    """Pauli matrix for an axis name, or the projector ``(I + sign*sigma)/2`` for a SignedAxis."""
    if isinstance(a, SignedAxis):
        sigma = _PAULI[_check_axis(a.axis).upper()]
        if a.sign not in (1, -1):
            raise ValueError(f"sign must be +1 or -1, got {a.sign}")
        return (_PAULI["I"] + a.sign * sigma) / 2
    key = a.upper()
    if key not in _PAULI:
        raise ValueError(f"unknown Pauli label {a!r}")
    return _PAULI[key].copy()


def axis_state(a: SignedAxis) -> np.ndarray:
    """Unit vector spanning the range of ``pauli_matrix(a)``."""
    s = 1 / np.sqrt(2)
    axis = _check_axis(a.axis)
    if axis == "z":
        return np.array([1, 0] if a.sign > 0 else [0, 1], dtype=np.complex128)
    if axis == "x":
        return np.array([s, a.sign * s], dtype=np.complex128)
    return np.array([s, a.sign * 1j * s], dtype=np.complex128)


def basis_state(bits: str) -> np.ndarray:
    """Computational basis ket for a bitstring such as ``"01"`` (qubit 0 first)."""
    if not bits or set(bits) - {"0", "1"}:
        raise ValueError(f"invalid bitstring {bits!r}")
    v = np.zeros(1 << len(bits), dtype=np.complex128)
    v[int(bits, 2)] = 1.0
    return v


def pauli_string_matrix(label: str) -> np.ndarray:
    label = label.strip().upper()
    if not label or set(label) - set("IXYZ"):
        raise ValueError(f"invalid Pauli string {label!r}")
    return kron_all(_PAULI[c] for c in label)


def pauli_strings(n_qubits: int) -> list[str]:
    return ["".join(p) for p in itertools.product("IXYZ", repeat=n_qubits)]


def pauli_expand(rho) -> dict[str, float]:
    """Real coefficients ``c_P = Tr(rho P) / 2**n`` for every n-qubit Pauli string.

    The returned dict lists all ``4**n`` strings in lexicographic ``IXYZ`` order,
    zeros included, and satisfies ``rho == sum(c_P * P)``.
    """
    m = check_hermitian(rho)
    n = num_qubits(m.shape[0])
    out = {}
    for label in pauli_strings(n):
        # Tr(rho P) = sum_ij rho_ij P_ji
        c = np.sum(m * pauli_string_matrix(label).T) / m.shape[0]
        if abs(c.imag) > HERMITIAN_TOL:
            raise NotHermitianError(f"coefficient of {label} has imaginary part {c.imag:.3g}")
        out[label] = float(c.real)
    return out


def from_pauli_expansion(coeffs: dict[str, float]) -> np.ndarray:
    labels = list(coeffs)
    if not labels:
        raise ValueError("empty Pauli expansion")
    n = len(labels[0])
    total = np.zeros((1 << n, 1 << n), dtype=np.complex128)
    for label, c in coeffs.items():
        if len(label) != n:
            raise DimensionError("Pauli strings of mixed length")
        total += c * pauli_string_matrix(label)
    return total


# ---------------------------------------------------------------------------
# spectral decomposition


class EigenDecomposition(NamedTuple):
    """Distinct eigenvalues (ascending) with their eigenspace projectors."""

    eigenvalues: np.ndarray
    eigenprojectors: tuple[np.ndarray, ...]

    def reconstruct(self) -> np.ndarray:
        return sum(lam * p for lam, p in zip(self.eigenvalues, self.eigenprojectors))


def eigendecompose(omega, merge_tol: float = EIGEN_MERGE_TOL) -> EigenDecomposition:
    """Spectral decomposition of a Hermitian matrix with degenerate eigenvalues merged.

    Consecutive sorted eigenvalues closer than ``merge_tol`` form one cluster;
    the cluster is represented by its mean and the projector onto the span of
    its eigenvectors.
    """
    m = check_hermitian(omega)
    # symmetrize so eigh sees an exactly Hermitian input
    vals, vecs = np.linalg.eigh((m + m.conj().T) / 2)
    clusters: list[list[int]] = []
    for i, v in enumerate(vals):
        if clusters and v - vals[clusters[-1][-1]] <= merge_tol:
            clusters[-1].append(i)
        else:
            clusters.append([i])
    eigenvalues = np.array([vals[c].mean() for c in clusters])
    projs = []
    for c in clusters:
        v = vecs[:, c]
        projs.append(v @ v.conj().T)
    return EigenDecomposition(eigenvalues, tuple(projs))


def concurrence(psi) -> float:
    """Concurrence ``2|ad - bc|`` of a two-qubit pure state ``(a, b, c, d)``."""
    v = as_state(psi)
    if v.shape[0] != 4:
        raise DimensionError(f"concurrence needs a 2-qubit state, got dimension {v.shape[0]}")
    a, b, c, d = v
    return float(min(1.0, 2 * abs(a * d - b * c)))

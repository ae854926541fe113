"""Per-molecule observables whose sum over molecules gives a collective observable.

A collective observable ``Omega = sum_i Omega(i)`` is stored only through its
single-molecule operator ``Omega(i)``; the N-fold sum is never built.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from numbers import Real

import numpy as np

from .linalg import (
    DimensionError,
    EigenDecomposition,
    check_hermitian,
    eigendecompose,
    from_pauli_expansion,
    pauli_matrix,
    pauli_string_matrix,
    tensor_product,
)

MAX_QUBITS = 10


@dataclass(frozen=True, eq=False)
class CollectiveObservable:
    label: str
    per_molecule: np.ndarray

    def __post_init__(self):
        m = check_hermitian(self.per_molecule)
        m = m.copy()
        m.setflags(write=False)
        object.__setattr__(self, "per_molecule", m)

    @cached_property
    def spectrum(self) -> EigenDecomposition:
        return eigendecompose(self.per_molecule)

    @property
    def dim(self) -> int:
        return self.per_molecule.shape[0]

    def __repr__(self):
        return f"CollectiveObservable({self.label!r}, dim={self.dim})"


def per_molecule_matrix(omega) -> np.ndarray:
    """Accept a CollectiveObservable or a bare Hermitian matrix."""
    if isinstance(omega, CollectiveObservable):
        return omega.per_molecule
    return check_hermitian(omega)


def spectrum_of(omega) -> EigenDecomposition:
    if isinstance(omega, CollectiveObservable):
        return omega.spectrum
    return eigendecompose(omega)


def observable_label(omega) -> str:
    return omega.label if isinstance(omega, CollectiveObservable) else "custom"


def sigma_z_single() -> CollectiveObservable:
    return CollectiveObservable("Sigma_z", pauli_matrix("z"))


def sigma_x_single() -> CollectiveObservable:
    return CollectiveObservable("Sigma_x", pauli_matrix("x"))


def sigma_zz_pair() -> CollectiveObservable:
    return CollectiveObservable("Sigma_zz", tensor_product(pauli_matrix("z"), pauli_matrix("z")))


def pairwise_zz(n_qubits: int) -> CollectiveObservable:
    """Sum of ``sigma_z(a) sigma_z(b)`` over all qubit pairs ``a < b`` of one molecule.

    The operator is diagonal; a basis state with ``k`` ones has eigenvalue
    ``C(n-k, 2) + C(k, 2) - k(n-k)``.
    """
    n = int(n_qubits)
    if not 2 <= n <= MAX_QUBITS:
        raise ValueError(f"pairwise_zz needs 2 <= n_qubits <= {MAX_QUBITS}, got {n_qubits}")
    # z_a = +1 for bit 0, -1 for bit 1
    idx = np.arange(1 << n)
    z = 1 - 2 * ((idx[:, None] >> (n - 1 - np.arange(n))[None, :]) & 1)
    s = z.sum(axis=1)
    diag = (s * s - n) // 2
    return CollectiveObservable(f"Sigma_zz[{n}q]", np.diag(diag.astype(np.complex128)))


def from_pauli_terms(n_qubits: int, terms: dict[str, float], label: str | None = None) -> CollectiveObservable:
    n = int(n_qubits)
    if not 1 <= n <= MAX_QUBITS:
        raise ValueError(f"n_qubits must be in 1..{MAX_QUBITS}, got {n_qubits}")
    if not terms:
        raise ValueError("no Pauli terms given")
    clean = {}
    for key, c in terms.items():
        if not isinstance(c, Real):
            raise ValueError(f"coefficient of {key!r} must be real, got {c!r}")
        key = key.strip().upper()
        if len(key) != n:
            raise DimensionError(f"Pauli string {key!r} does not act on {n} qubits")
        pauli_string_matrix(key)  # validates the alphabet
        clean[key] = clean.get(key, 0.0) + float(c)
    if label is None:
        label = "+".join(f"{c:g}*{k}" if c != 1 else k for k, c in clean.items())
    return CollectiveObservable(label, from_pauli_expansion(clean))


def parse_pauli_observable(text: str) -> CollectiveObservable:
    """Parse ``"ZZ"``, ``"XX+ZZ"`` or ``"0.5*XX - YY"`` into an observable."""
    s = text.replace(" ", "").upper()
    if not s:
        raise ValueError("empty observable string")
    terms: dict[str, float] = {}
    for chunk in s.replace("-", "+-").split("+"):
        if not chunk:
            continue
        sign = -1.0 if chunk.startswith("-") else 1.0
        chunk = chunk.lstrip("-")
        if "*" in chunk:
            coef, _, word = chunk.partition("*")
            c = sign * float(coef)
        else:
            word, c = chunk, sign
        terms[word] = terms.get(word, 0.0) + c
    n = len(next(iter(terms)))
    label = text.strip() if len(terms) > 1 or "*" in s or s.startswith("-") else f"Sigma_{s.lower()}"
    return from_pauli_terms(n, terms, label=label)

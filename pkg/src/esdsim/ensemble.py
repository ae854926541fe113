"""Ensembles as explicit compositions of pure states.

An :class:`EnsembleComposition` records how many molecules were prepared in
each pure state.  Its density matrix forgets that record; the fluctuation of
a collective observable does not.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

import numpy as np

from .linalg import (
    DimensionError,
    as_state,
    check_density_matrix,
    check_unitary,
    concurrence,
    eigendecompose,
    projector,
)
from .observables import per_molecule_matrix

PHASE_MERGE_TOL = 1e-10
RADICAND_TOL = 1e-9
MAX_PRODUCT_DIM = 1 << 20


class NumericalInconsistencyError(ArithmeticError):
    """Two algebraically equal variance forms disagree beyond roundoff."""


class OracleCapacityError(ValueError):
    """The full product state would exceed ``MAX_PRODUCT_DIM`` amplitudes."""


def _same_ray(a: np.ndarray, b: np.ndarray) -> bool:
    return abs(abs(np.vdot(a, b)) - 1.0) <= PHASE_MERGE_TOL


class EnsembleComposition:
    """Counts of molecules per pure state, in canonical (merged) form.

    Components whose states coincide up to a global phase are merged on
    construction; the first occurrence supplies the representative state and
    the input order of first occurrences is kept.  Counts are nonnegative
    reals, so weights such as ``N * p`` need not be rounded.
    """

    __slots__ = ("counts", "states", "dim", "label")

    def __init__(self, components: Iterable[tuple[float, Sequence[complex]]], label: str = ""):
        counts: list[float] = []
        states: list[np.ndarray] = []
        dim = None
        for count, psi in components:
            count = float(count)
            if not math.isfinite(count) or count < 0:
                raise ValueError(f"molecule counts must be finite and nonnegative, got {count}")
            v = as_state(psi, dim)
            dim = v.shape[0]
            for k, s in enumerate(states):
                if _same_ray(s, v):
                    counts[k] += count
                    break
            else:
                v = v.copy()
                v.setflags(write=False)
                states.append(v)
                counts.append(count)
        if not states:
            raise ValueError("a composition needs at least one component")
        if sum(counts) <= 0:
            raise ValueError("total molecule count must be positive")
        self.counts = np.array(counts)
        self.counts.setflags(write=False)
        self.states = tuple(states)
        self.dim = int(dim)
        self.label = label

    @property
    def total(self) -> float:
        return float(self.counts.sum())

    @property
    def n_components(self) -> int:
        return len(self.states)

    def __iter__(self) -> Iterator[tuple[float, np.ndarray]]:
        return iter(zip(self.counts.tolist(), self.states))

    def __len__(self):
        return len(self.states)

    def __repr__(self):
        name = f"{self.label!r}, " if self.label else ""
        return f"EnsembleComposition({name}N={self.total:g}, m={self.n_components}, d={self.dim})"

    def scaled(self, k: float) -> "EnsembleComposition":
        return EnsembleComposition(((k * c, s) for c, s in self), label=self.label)

    def relabeled(self, label: str) -> "EnsembleComposition":
        return EnsembleComposition(iter(self), label=label)

    def is_integral(self) -> bool:
        return bool(np.all(self.counts == np.round(self.counts)))


@dataclass(frozen=True)
class IdenticalMixedEnsemble:
    """N molecules that are each, individually, in the same mixed state ``rho``."""

    n_molecules: float
    rho: np.ndarray

    def __post_init__(self):
        if not self.n_molecules > 0:
            raise ValueError("n_molecules must be positive")
        object.__setattr__(self, "rho", check_density_matrix(self.rho))


@dataclass(frozen=True)
class FluctuationReport:
    """Exact collective expectation and fluctuation of a composition.

    ``per_component_variance[i]`` is the contribution ``N_i * Var_i`` of
    component ``i``; these sum to ``fluctuation**2``.
    """

    expectation_ensemble: float
    fluctuation: float
    per_component_variance: tuple[float, ...] = field(default=())


def _check_dims(comp: EnsembleComposition, m: np.ndarray):
    if m.shape[0] != comp.dim:
        raise DimensionError(f"observable of dimension {m.shape[0]} on molecules of dimension {comp.dim}")


def density_matrix(comp: EnsembleComposition) -> np.ndarray:
    """``rho = sum_i (N_i / N) |psi_i><psi_i|``."""
    n = comp.total
    rho = sum((c / n) * projector(s) for c, s in comp)
    return (rho + rho.conj().T) / 2


def molecule_expectation(rho, a) -> float:
    """``Tr(rho A)`` for one averaged molecule."""
    m = per_molecule_matrix(a)
    rho = np.asarray(rho, dtype=np.complex128)
    if rho.shape != m.shape:
        raise DimensionError(f"rho has shape {rho.shape}, observable {m.shape}")
    return float(np.sum(rho * m.T).real)


def ensemble_expectation(comp: EnsembleComposition, a) -> float:
    m = per_molecule_matrix(a)
    _check_dims(comp, m)
    return comp.total * molecule_expectation(density_matrix(comp), m)


def _component_moments(comp: EnsembleComposition, m: np.ndarray):
    """Per-component mean ``<psi|O|psi>`` and variance ``||(O - mean) psi||^2``."""
    means, variances = [], []
    # variances below this floor are roundoff on an eigenstate
    floor = (64 * np.finfo(float).eps * np.linalg.norm(m, 2)) ** 2
    for s in comp.states:
        ms = m @ s
        mu = float(np.vdot(s, ms).real)
        r = ms - mu * s
        means.append(mu)
        var = float(np.vdot(r, r).real)
        variances.append(var if var > floor else 0.0)
    return np.array(means), np.array(variances)


def _check_consistency(centered: float, uncentered: float, scale: float):
    # both forms of the variance must agree up to roundoff
    if uncentered < -RADICAND_TOL * max(1.0, scale) or abs(centered - uncentered) > RADICAND_TOL * max(1.0, scale):
        raise NumericalInconsistencyError(
            f"variance forms disagree: centered {centered:.6g}, uncentered {uncentered:.6g}"
        )


def fluctuation_proper(comp: EnsembleComposition, omega) -> FluctuationReport:
    """Fluctuation of ``sum_i Omega(i)`` over an ensemble of definite pure states.

    ``sqrt(N Tr(rho Omega^2) - sum_i N_i <psi_i|Omega|psi_i>^2)``; the second
    term is what depends on the composition rather than on ``rho`` alone.  The
    value is accumulated as ``sum_i N_i ||(Omega - <Omega>_i) psi_i||^2``, the
    same quantity without cancellation, and checked against the form above.
    """
    m = per_molecule_matrix(omega)
    _check_dims(comp, m)
    n = comp.total
    rho = density_matrix(comp)
    means, variances = _component_moments(comp, m)
    contributions = comp.counts * variances
    centered = float(np.sum(contributions))
    second = n * molecule_expectation(rho, m @ m)
    uncentered = second - float(np.sum(comp.counts * means**2))
    _check_consistency(centered, uncentered, abs(second))
    return FluctuationReport(
        expectation_ensemble=n * molecule_expectation(rho, m),
        fluctuation=math.sqrt(centered),
        per_component_variance=tuple(float(c) for c in contributions),
    )


def fluctuation_identical_mixed(ens: IdenticalMixedEnsemble, omega) -> float:
    """``sqrt(N Tr(rho Omega^2) - N Tr(rho Omega)^2)`` when every molecule is in ``rho``."""
    m = per_molecule_matrix(omega)
    if m.shape != ens.rho.shape:
        raise DimensionError(f"observable shape {m.shape} vs rho {ens.rho.shape}")
    n = ens.n_molecules
    mean = molecule_expectation(ens.rho, m)
    second = molecule_expectation(ens.rho, m @ m)
    shifted = m - mean * np.eye(m.shape[0])
    centered = max(n * molecule_expectation(ens.rho, shifted @ shifted), 0.0)
    _check_consistency(centered, n * second - n * mean**2, n * abs(second))
    return math.sqrt(centered)


def same_density_matrix(a: EnsembleComposition, b: EnsembleComposition, tol: float = 1e-10) -> bool:
    if a.dim != b.dim:
        raise DimensionError(f"compositions have dimensions {a.dim} and {b.dim}")
    return bool(np.all(np.abs(density_matrix(a) - density_matrix(b)) <= tol))


# ---------------------------------------------------------------------------
# brute-force oracle on the full N-molecule product state


def _integral_counts(comp: EnsembleComposition) -> list[int]:
    if not comp.is_integral():
        raise ValueError(f"integer molecule counts required, got {comp.counts.tolist()}")
    return [int(c) for c in comp.counts]


def full_product_state(comp: EnsembleComposition) -> np.ndarray:
    """``|psi_1>^(x)N_1 (x) |psi_2>^(x)N_2 (x) ...`` with molecules in component order."""
    counts = _integral_counts(comp)
    n = sum(counts)
    if comp.dim**n > MAX_PRODUCT_DIM:
        raise OracleCapacityError(f"{comp.dim}^{n} amplitudes exceed the cap of {MAX_PRODUCT_DIM}")
    psi = np.ones(1, dtype=np.complex128)
    for c, s in zip(counts, comp.states):
        for _ in range(c):
            psi = np.kron(psi, s)
    return psi


def _apply_on_slot(m: np.ndarray, tensor: np.ndarray, slot: int) -> np.ndarray:
    out = np.tensordot(m, tensor, axes=([1], [slot]))
    return np.moveaxis(out, 0, slot)


def oracle_fluctuation(comp: EnsembleComposition, omega) -> tuple[float, float]:
    """Collective mean and standard deviation computed on the full product state.

    ``Sigma|psi>`` is accumulated slot by slot (``Omega`` acting on one
    molecule at a time), so only vectors of length ``d**N`` are stored.
    """
    m = per_molecule_matrix(omega)
    _check_dims(comp, m)
    psi = full_product_state(comp)
    n = int(round(comp.total))
    d = comp.dim
    t = psi.reshape((d,) * n) if n else psi
    acc = np.zeros_like(t)
    for slot in range(n):
        acc += _apply_on_slot(m, t, slot)
    sigma_psi = acc.reshape(-1)
    mean = float(np.vdot(psi, sigma_psi).real)
    second = float(np.vdot(sigma_psi, sigma_psi).real)
    r = sigma_psi - mean * psi
    centered = float(np.vdot(r, r).real)
    _check_consistency(centered, second - mean**2, second)
    return mean, math.sqrt(centered)


def collective_distribution(comp: EnsembleComposition, omega, decimals: int = 9) -> dict[float, float]:
    """Exact distribution of the measured value of ``sum_i Omega(i)``.

    Each molecule yields an eigenvalue of ``Omega`` by the Born rule,
    independently of the others, so the collective outcome distribution is the
    convolution of the per-molecule distributions.  Outcomes are keyed after
    rounding to ``decimals`` places.  Requires integer counts but scales to
    ensembles far beyond the product-state cap.
    """
    m = per_molecule_matrix(omega)
    _check_dims(comp, m)
    counts = _integral_counts(comp)
    eig = eigendecompose(m)
    dist: dict[float, float] = {0.0: 1.0}
    for c, s in zip(counts, comp.states):
        probs = [float(np.vdot(s, p @ s).real) for p in eig.eigenprojectors]
        single = [(float(lam), p) for lam, p in zip(eig.eigenvalues, probs) if p > 1e-15]
        for _ in range(c):
            nxt: dict[float, float] = {}
            for x, px in dist.items():
                for lam, p in single:
                    key = round(x + lam, decimals)
                    nxt[key] = nxt.get(key, 0.0) + px * p
            dist = nxt
    return dist


def distribution_moments(dist: dict[float, float]) -> tuple[float, float]:
    values = np.array(list(dist.keys()))
    probs = np.array(list(dist.values()))
    probs = probs / probs.sum()
    mean = float(np.dot(values, probs))
    var = float(np.dot((values - mean) ** 2, probs))
    return mean, math.sqrt(max(var, 0.0))


# ---------------------------------------------------------------------------
# unitary evolution and entanglement bookkeeping


def apply_unitary(comp: EnsembleComposition, u) -> EnsembleComposition:
    """Evolve every molecule by ``U``; counts stay, components may merge."""
    u = check_unitary(u)
    if u.shape[0] != comp.dim:
        raise DimensionError(f"unitary of dimension {u.shape[0]} on molecules of dimension {comp.dim}")
    return EnsembleComposition(((c, u @ s) for c, s in comp), label=comp.label)


def entanglement_census(comp: EnsembleComposition, threshold: float = 1e-9) -> float:
    """Fraction of molecules whose two-qubit state is entangled (concurrence > threshold)."""
    if comp.dim != 4:
        raise DimensionError(f"entanglement census supports 2-qubit molecules only, got d={comp.dim}")
    entangled = sum(c for c, s in comp if concurrence(s) > threshold)
    return float(entangled / comp.total)

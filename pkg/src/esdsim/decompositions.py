"""Effective pure states and alternative ways of preparing the same density matrix.

Includes the 36-term product-state decomposition of the effective Bell state,
random-kick dephasing and the Gorter relaxation-time formula.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .ensemble import EnsembleComposition
from .linalg import (
    SIGNED_AXES,
    SignedAxis,
    as_state,
    axis_state,
    basis_state,
    check_density_matrix,
    pauli_matrix,
    projector,
    tensor_product,
)

WEIGHT_TOL = 1e-12

BELL_STATE = np.array([1, 0, 0, 1], dtype=np.complex128) / np.sqrt(2)
BELL_STATE.setflags(write=False)

# sigma_a (x) sigma_a coefficient sign of |Phi+><Phi+| = (II + XX - YY + ZZ)/4
_BELL_CORRELATION = {"x": 1, "y": -1, "z": 1}


class PositivityError(ValueError):
    """A decomposition weight is negative, so no physical ensemble realizes it."""

    def __init__(self, message: str, most_negative: float):
        super().__init__(message)
        self.most_negative = most_negative


@dataclass(frozen=True)
class EffectivePureParams:
    dim: int
    epsilon: float
    target: np.ndarray = field(default=None)

    def __post_init__(self):
        if not 0.0 <= self.epsilon <= 1.0:
            raise ValueError(f"epsilon must be in [0, 1], got {self.epsilon}")
        if self.dim < 1:
            raise ValueError("dim must be positive")
        target = BELL_STATE if self.target is None and self.dim == 4 else self.target
        if target is None:
            raise ValueError("a target state is required unless dim == 4 (Bell default)")
        object.__setattr__(self, "target", as_state(target, self.dim))


def effective_pure_density(p: EffectivePureParams) -> np.ndarray:
    """``(1 - eps) I/d + eps |target><target|``."""
    return (1 - p.epsilon) * np.eye(p.dim, dtype=np.complex128) / p.dim + p.epsilon * projector(p.target)


def effective_bell_composition(n: float, epsilon: float) -> EnsembleComposition:
    """``eps*N`` molecules in the Bell state plus ``(1-eps)*N/4`` in each basis state."""
    if not 0.0 <= epsilon <= 1.0:
        raise ValueError(f"epsilon must be in [0, 1], got {epsilon}")
    if not n > 0:
        raise ValueError("n must be positive")
    rest = (1 - epsilon) * n / 4
    comps = [(epsilon * n, BELL_STATE)] + [(rest, basis_state(b)) for b in ("00", "01", "10", "11")]
    # drop empty components so eps=1 is a single-component ensemble
    comps = [(c, s) for c, s in comps if c > 0]
    return EnsembleComposition(comps, label=f"effective-bell(eps={epsilon:g})")


@dataclass(frozen=True)
class ProductDecomposition:
    """Weights ``p[(i, j)]`` of the product projectors ``P_i (x) P_j`` over signed axes."""

    weights: Mapping[tuple[SignedAxis, SignedAxis], float]

    def __post_init__(self):
        if len(self.weights) != 36:
            raise ValueError("a product decomposition has 36 weights")
        total = math.fsum(self.weights.values())
        if abs(total - 1.0) > WEIGHT_TOL:
            raise ValueError(f"weights sum to {total!r}")

    @property
    def min_weight(self) -> float:
        return min(self.weights.values())

    def reconstruct(self) -> np.ndarray:
        return sum(
            w * tensor_product(pauli_matrix(i), pauli_matrix(j)) for (i, j), w in self.weights.items()
        )

    def correlation_coefficients(self) -> dict[tuple[SignedAxis, SignedAxis], float]:
        """``C_ij`` in ``p_ij = (1/4)(1/9 + C_ij)``."""
        return {k: 4 * w - 1 / 9 for k, w in self.weights.items()}


def braunstein_weights(epsilon: float) -> dict[tuple[SignedAxis, SignedAxis], float]:
    """Closed-form weights ``(1 + 9 eps d_a s t [a == b]) / 36``, no positivity check.

    ``d_x = d_z = +1`` and ``d_y = -1`` follow the Bell correlations.  This is
    the minimum-norm solution of the Pauli-coefficient linear system that maps
    36 weights onto the effective Bell density.
    """
    out = {}
    for i in SIGNED_AXES:
        for j in SIGNED_AXES:
            corr = _BELL_CORRELATION[i.axis] * i.sign * j.sign if i.axis == j.axis else 0
            out[(i, j)] = (1 + 9 * epsilon * corr) / 36
    return out


def braunstein_decomposition(epsilon: float) -> ProductDecomposition:
    """Separable product-state decomposition of the effective Bell state.

    Raises
    ------
    PositivityError
        If ``epsilon > 1/9``; the error carries the most negative weight.
    """
    if not 0.0 <= epsilon <= 1.0:
        raise ValueError(f"epsilon must be in [0, 1], got {epsilon}")
    w = braunstein_weights(epsilon)
    lo = min(w.values())
    if lo < -WEIGHT_TOL:
        raise PositivityError(
            f"epsilon={epsilon:g} gives a negative weight {lo:.6g}; product decomposition needs epsilon <= 1/9",
            lo,
        )
    return ProductDecomposition({k: max(v, 0.0) for k, v in w.items()})


def decomposition_to_composition(d: ProductDecomposition, n: float) -> EnsembleComposition:
    if not n > 0:
        raise ValueError("n must be positive")
    comps = [(n * w, np.kron(axis_state(i), axis_state(j))) for (i, j), w in d.weights.items()]
    return EnsembleComposition(comps, label="braunstein-product")


# ---------------------------------------------------------------------------
# random kicks


@dataclass(frozen=True)
class KickModel:
    """Distribution of the kick angle theta (hbar = 1).

    Either a quadrature rule (``nodes``/``weights``) or, with ``nodes`` left
    empty, the uniform density on ``[low, high)`` handled analytically.
    """

    nodes: tuple[float, ...] = ()
    weights: tuple[float, ...] = ()
    low: float = 0.0
    high: float = 2 * math.pi

    def __post_init__(self):
        if self.nodes:
            if len(self.nodes) != len(self.weights):
                raise ValueError("nodes and weights differ in length")
            if any(w < 0 for w in self.weights):
                raise ValueError("quadrature weights must be nonnegative")
            if abs(math.fsum(self.weights) - 1.0) > WEIGHT_TOL:
                raise ValueError("quadrature weights must sum to 1")
        elif not self.high > self.low:
            raise ValueError("uniform range needs high > low")

    @classmethod
    def uniform(cls, low: float = 0.0, high: float = 2 * math.pi) -> "KickModel":
        return cls(low=low, high=high)

    @classmethod
    def point(cls, theta: float) -> "KickModel":
        return cls(nodes=(theta,), weights=(1.0,))

    @classmethod
    def quadrature(cls, nodes: Sequence[float], weights: Sequence[float]) -> "KickModel":
        return cls(nodes=tuple(map(float, nodes)), weights=tuple(map(float, weights)))

    @classmethod
    def uniform_grid(cls, k: int, low: float = 0.0, high: float = 2 * math.pi) -> "KickModel":
        """Equally weighted midpoints; exact for trigonometric moments of order < k."""
        h = (high - low) / k
        return cls.quadrature([low + (i + 0.5) * h for i in range(k)], [1.0 / k] * k)


def kick_operator(theta: float) -> np.ndarray:
    """``exp(i sigma_z theta)``."""
    return np.diag([np.exp(1j * theta), np.exp(-1j * theta)])


def _uniform_phase_average(low: float, high: float) -> complex:
    # mean of exp(2i theta) over [low, high)
    width = high - low
    periods = width / math.pi
    if abs(periods - round(periods)) <= 1e-12:
        return 0j
    return (np.exp(2j * high) - np.exp(2j * low)) / (2j * width)


def random_kick_average(rho, kick: KickModel) -> np.ndarray:
    rho = check_density_matrix(rho)
    if rho.shape != (2, 2):
        raise ValueError("random kicks act on a single qubit")
    if kick.nodes:
        out = np.zeros((2, 2), dtype=np.complex128)
        for theta, w in zip(kick.nodes, kick.weights):
            k = kick_operator(theta)
            out += w * (k @ rho @ k.conj().T)
        return out
    f = _uniform_phase_average(kick.low, kick.high)
    out = rho.copy()
    out[0, 1] = f * rho[0, 1]
    out[1, 0] = np.conj(f) * rho[1, 0]
    return out


def kicked_composition(psi, n: float, kick: KickModel) -> EnsembleComposition:
    """Molecules each in a definite kicked state ``K(theta)|psi>``, weighted by the quadrature."""
    if not kick.nodes:
        raise ValueError("kicked_composition needs a quadrature KickModel")
    psi = as_state(psi, 2)
    return EnsembleComposition(
        ((n * w, kick_operator(t) @ psi) for t, w in zip(kick.nodes, kick.weights)), label="kicked"
    )


# ---------------------------------------------------------------------------
# Gorter formula


class NoRelaxationError(ValueError):
    """All transition terms vanish, so T1 is unbounded."""


@dataclass(frozen=True)
class GorterInput:
    energies: tuple[float, ...]
    rates: Mapping[tuple[int, int], float]

    def __post_init__(self):
        object.__setattr__(self, "energies", tuple(float(e) for e in self.energies))
        if math.fsum(e * e for e in self.energies) <= 0:
            raise ValueError("sum of squared energies must be positive")
        for (n, m), w in self.rates.items():
            if w < 0:
                raise ValueError(f"rate W[{n},{m}] is negative")
            if not (0 <= n < len(self.energies) and 0 <= m < len(self.energies)):
                raise ValueError(f"rate index ({n},{m}) out of range")


def gorter_t1(g: GorterInput) -> float:
    """``T1 = 1 / (0.5 * sum_{n != m} W[n,m] (E_m - E_n)^2 / sum_n E_n^2)``."""
    e = g.energies
    num = math.fsum(w * (e[m] - e[n]) ** 2 for (n, m), w in g.rates.items() if n != m)
    if num <= 0:
        raise NoRelaxationError("no relaxation: every rate-weighted energy gap vanishes")
    rate = 0.5 * num / math.fsum(x * x for x in e)
    return 1.0 / rate

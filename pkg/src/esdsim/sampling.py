"""Seeded Born-rule simulation of collective measurements.

Every Monte Carlo round is a fresh preparation of the ensemble.  Round ``r``
draws from its own stream derived from ``(seed, r)``, and inside a round
molecules are sampled in composition order, so results do not depend on how
rounds are spread over threads.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .ensemble import EnsembleComposition, IdenticalMixedEnsemble, fluctuation_proper
from .linalg import DimensionError, as_state, eigendecompose, kron_all, pauli_matrix
from .observables import observable_label, per_molecule_matrix, spectrum_of

PROB_TOL = 1e-9


@dataclass(frozen=True)
class SampleConfig:
    seed: int
    rounds: int
    stream: int = 0

    def __post_init__(self):
        if self.rounds < 1:
            raise ValueError("rounds must be >= 1")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")


@dataclass(frozen=True)
class EstimateReport:
    empirical_mean: float
    empirical_std: float
    stderr_of_std: float
    rounds: int
    exact_reference: tuple[float, float] | None = None

    def covers_exact(self, k: float = 4.0) -> bool:
        if self.exact_reference is None:
            raise ValueError("no exact reference attached")
        return abs(self.empirical_std - self.exact_reference[1]) <= k * self.stderr_of_std


@dataclass(frozen=True)
class PreskillResult:
    agreement_rate: float
    basis_used: str
    pairs: int


@dataclass(frozen=True)
class DistinguishReport:
    observable_label: str
    z_statistic: float
    chosen: str
    threshold: float
    z_first: float = math.nan
    z_second: float = math.nan


def round_stream(seed: int, round_index: int, stream: int = 0) -> np.random.Generator:
    """Independent generator addressed by ``(seed, stream, round_index)``.

    ``stream`` separates unrelated experiments sharing one seed.
    """
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(int(stream), int(round_index)))
    return np.random.Generator(np.random.Philox(ss))


def largest_remainder(counts: Sequence[float]) -> list[int]:
    """Apportion real counts to integers that keep the (rounded) total.

    Ties in the fractional part go to the earlier component.
    """
    c = np.asarray(counts, dtype=float)
    total = int(round(c.sum()))
    base = np.floor(c + 1e-9).astype(int)
    short = total - int(base.sum())
    frac = c - base
    order = sorted(range(len(c)), key=lambda i: (-frac[i], i))
    for i in order[: max(short, 0)]:
        base[i] += 1
    return base.tolist()


def integer_composition(comp: EnsembleComposition) -> EnsembleComposition:
    if comp.is_integral():
        return comp
    ints = largest_remainder(comp.counts)
    return EnsembleComposition(zip(ints, comp.states), label=comp.label)


def born_probabilities(state, omega) -> tuple[np.ndarray, np.ndarray]:
    """Distinct eigenvalues of ``omega`` and their Born probabilities in ``state``."""
    m = per_molecule_matrix(omega)
    psi = as_state(state)
    if psi.shape[0] != m.shape[0]:
        raise DimensionError(f"state of dimension {psi.shape[0]} vs observable {m.shape[0]}")
    eig = spectrum_of(omega)
    probs = np.array([np.vdot(psi, p @ psi).real for p in eig.eigenprojectors])
    if abs(probs.sum() - 1.0) > PROB_TOL:
        raise ArithmeticError(f"Born probabilities sum to {probs.sum()!r}")
    # exact eigenstates must stay deterministic
    probs[probs < 1e-15] = 0.0
    return eig.eigenvalues, probs / probs.sum()


def born_sample(state, omega, stream: np.random.Generator) -> float:
    values, probs = born_probabilities(state, omega)
    return float(values[stream.choice(len(values), p=probs)])


class _RoundSampler:
    """Born tables for one (composition, observable) pair.

    A round draws one uniform variate per molecule, in composition order, and
    maps it through that molecule's cumulative Born distribution.
    """

    def __init__(self, comp: EnsembleComposition, omega):
        if not comp.is_integral():
            raise ValueError("sampling needs integer molecule counts; use integer_composition()")
        m = per_molecule_matrix(omega)
        if m.shape[0] != comp.dim:
            raise DimensionError(f"observable of dimension {m.shape[0]} on molecules of dimension {comp.dim}")
        tables = []
        for c, s in comp:
            values, probs = born_probabilities(s, m)
            tables.append((int(c), values, probs))
        self._build(tables)

    @classmethod
    def from_tables(cls, tables):
        self = cls.__new__(cls)
        self._build(tables)
        return self

    def _build(self, tables):
        k = max(len(v) for _, v, _ in tables)
        values = np.zeros((len(tables), k))
        cdf = np.ones((len(tables), k))
        for i, (_, v, p) in enumerate(tables):
            values[i, : len(v)] = v
            c = np.cumsum(p)
            c[-1] = 1.0
            cdf[i, : len(v)] = c
        counts = [c for c, _, _ in tables]
        self.component = np.repeat(np.arange(len(tables)), counts)
        self.values = values
        self.cdf = cdf

    def __call__(self, stream: np.random.Generator) -> float:
        u = stream.random(self.component.shape[0])
        outcome = np.sum(u[:, None] >= self.cdf[self.component], axis=1)
        return float(np.sum(self.values[self.component, outcome]))


def sample_collective_round(comp: EnsembleComposition, omega, stream: np.random.Generator) -> float:
    """One measured value of ``sum_i Omega(i)``: a Born sample per molecule, summed."""
    return _RoundSampler(comp, omega)(stream)


def sample_rounds(comp: EnsembleComposition, omega, cfg: SampleConfig, workers: int = 1) -> np.ndarray:
    """Round sums for rounds ``0..R-1``; identical for any ``workers``."""
    return _run_rounds(_RoundSampler(comp, omega), cfg, workers)


def _run_rounds(sampler, cfg: SampleConfig, workers: int) -> np.ndarray:
    out = np.empty(cfg.rounds)

    def run(lo: int, hi: int):
        for r in range(lo, hi):
            out[r] = sampler(round_stream(cfg.seed, r, cfg.stream))

    if workers <= 1:
        run(0, cfg.rounds)
    else:
        edges = np.linspace(0, cfg.rounds, workers + 1).astype(int)
        with ThreadPoolExecutor(max_workers=workers) as pool:
            for f in [pool.submit(run, lo, hi) for lo, hi in zip(edges[:-1], edges[1:])]:
                f.result()
    return out


def sample_identical_mixed_rounds(ens: IdenticalMixedEnsemble, omega, cfg: SampleConfig, workers: int = 1) -> np.ndarray:
    """Round sums when every molecule is in the same mixed state."""
    if not float(ens.n_molecules).is_integer():
        raise ValueError("sampling needs an integer number of molecules")
    m = per_molecule_matrix(omega)
    if m.shape != ens.rho.shape:
        raise DimensionError(f"observable shape {m.shape} vs rho {ens.rho.shape}")
    eig = eigendecompose(m)
    probs = np.array([np.sum(ens.rho * p.T).real for p in eig.eigenprojectors])
    if abs(probs.sum() - 1.0) > PROB_TOL:
        raise ArithmeticError(f"Born probabilities sum to {probs.sum()!r}")
    probs[probs < 1e-15] = 0.0
    probs /= probs.sum()
    sampler = _RoundSampler.from_tables([(int(ens.n_molecules), eig.eigenvalues, probs)])
    return _run_rounds(sampler, cfg, workers)


def summarize_rounds(data: Sequence[float], exact: tuple[float, float] | None = None) -> EstimateReport:
    x = np.asarray(data, dtype=float)
    r = x.shape[0]
    if r < 2:
        raise ValueError("need at least two rounds")
    std = float(np.std(x, ddof=1))
    return EstimateReport(
        empirical_mean=float(np.mean(x)),
        empirical_std=std,
        stderr_of_std=std / math.sqrt(2 * (r - 1)),
        rounds=r,
        exact_reference=exact,
    )


def estimate_fluctuation(comp: EnsembleComposition, omega, cfg: SampleConfig, workers: int = 1) -> EstimateReport:
    """Monte Carlo mean and standard deviation of the collective observable.

    Real-valued counts are apportioned to whole molecules first; the exact
    reference is computed for that integer composition.
    """
    if cfg.rounds < 2:
        raise ValueError("estimate_fluctuation needs rounds >= 2")
    comp = integer_composition(comp)
    exact = fluctuation_proper(comp, omega)
    data = sample_rounds(comp, omega, cfg, workers)
    return summarize_rounds(data, (exact.expectation_ensemble, exact.fluctuation))


# ---------------------------------------------------------------------------
# Preskill's shared-pair protocol

_BELL = np.array([1, 0, 0, 1], dtype=np.complex128) / np.sqrt(2)


def _bob_branches(bob_basis: str):
    """Outcome (+1/-1), probability and Alice's post-measurement state for each Bob result."""
    eig = eigendecompose(pauli_matrix(bob_basis))
    branches = []
    for lam, p in zip(eig.eigenvalues, eig.eigenprojectors):
        post = kron_all([np.eye(2), p]) @ _BELL
        prob = float(np.vdot(post, post).real)
        # Alice's qubit after Bob's projection: contract Bob's factor
        alice = post.reshape(2, 2)
        rho_a = alice @ alice.conj().T / prob
        vals, vecs = np.linalg.eigh(rho_a)
        branches.append((float(lam), prob, vecs[:, -1]))
    return branches


def preskill_protocol(pairs: int, bob_basis: str, stream: np.random.Generator) -> PreskillResult:
    """Bob measures his half of each Bell pair in ``bob_basis``; Alice measures sigma_z.

    Agreement means Alice's outcome equals Bob's outcome value (+1 for
    ``|0>``/``|+x>``, -1 for ``|1>``/``|-x>``).
    """
    if pairs < 1:
        raise ValueError("pairs must be >= 1")
    basis = bob_basis.lower()
    if basis not in ("z", "x"):
        raise ValueError(f"bob_basis must be 'z' or 'x', got {bob_basis!r}")
    branches = _bob_branches(basis)
    bob_probs = np.array([b[1] for b in branches])
    bob_idx = stream.choice(len(branches), size=pairs, p=bob_probs / bob_probs.sum())
    matches = 0
    sz = pauli_matrix("z")
    for k, (bob_value, _, alice_state) in enumerate(branches):
        n_k = int(np.sum(bob_idx == k))
        if n_k == 0:
            continue
        values, probs = born_probabilities(alice_state, sz)
        if probs.max() == 1.0:
            alice = np.full(n_k, values[int(np.argmax(probs))])
        else:
            alice = values[stream.choice(len(values), size=n_k, p=probs)]
        matches += int(np.sum(alice == bob_value))
    return PreskillResult(agreement_rate=matches / pairs, basis_used=basis, pairs=pairs)


# ---------------------------------------------------------------------------
# moment-matching hypothesis test


def _z_score(emp_mean, emp_std, rounds, mean, std) -> float:
    scale = max(std, emp_std)
    if scale == 0.0:
        return 0.0 if math.isclose(emp_mean, mean, rel_tol=1e-12, abs_tol=1e-9) else math.inf
    z_mean = abs(emp_mean - mean) / (scale / math.sqrt(rounds))
    z_std = abs(emp_std - std) / (scale / math.sqrt(2 * max(rounds - 1, 1)))
    return math.hypot(z_mean, z_std)


def distinguish_compositions(
    a: EnsembleComposition,
    b: EnsembleComposition,
    omega,
    data: Sequence[float],
    threshold: float = 3.0,
) -> DistinguishReport:
    """Decide which composition produced the observed round sums.

    Each hypothesis predicts a collective (mean, std); its combined z-score is
    the root-sum-square of the mean and std z-scores against the empirical
    moments.  Both within ``threshold`` (or identical predictions) gives
    ``"inconclusive"``; otherwise the smaller z-score wins.
    """
    x = np.asarray(data, dtype=float)
    if x.size == 0:
        raise ValueError("no data")
    r = x.size
    emp_mean = float(x.mean())
    emp_std = float(x.std(ddof=1)) if r > 1 else 0.0
    fa = fluctuation_proper(a, omega)
    fb = fluctuation_proper(b, omega)
    za = _z_score(emp_mean, emp_std, r, fa.expectation_ensemble, fa.fluctuation)
    zb = _z_score(emp_mean, emp_std, r, fb.expectation_ensemble, fb.fluctuation)
    label = observable_label(omega)
    same = math.isclose(fa.expectation_ensemble, fb.expectation_ensemble, rel_tol=1e-9, abs_tol=1e-9) and math.isclose(
        fa.fluctuation, fb.fluctuation, rel_tol=1e-9, abs_tol=1e-9
    )
    if same or (za <= threshold and zb <= threshold):
        chosen, z = "inconclusive", min(za, zb)
    elif za <= zb:
        chosen, z = "first", za
    else:
        chosen, z = "second", zb
    return DistinguishReport(label, z, chosen, threshold, za, zb)

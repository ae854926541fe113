"""Self-check suite behind ``esdsim verify``.

Functions are looked up through their modules at call time so a patched
implementation is what gets checked.
"""

from __future__ import annotations

import math
from typing import Callable, NamedTuple

import numpy as np

from . import decompositions as dec
from . import ensemble as ens
from . import linalg
from .observables import sigma_z_single, sigma_zz_pair


class CheckResult(NamedTuple):
    name: str
    passed: bool
    detail: str


def random_state(rng: np.random.Generator, d: int) -> np.ndarray:
    v = rng.normal(size=d) + 1j * rng.normal(size=d)
    return v / np.linalg.norm(v)


def random_hermitian(rng: np.random.Generator, d: int) -> np.ndarray:
    a = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    return (a + a.conj().T) / 2


def random_integer_composition(rng: np.random.Generator, d: int, max_molecules: int) -> ens.EnsembleComposition:
    n = int(rng.integers(1, max_molecules + 1))
    m = int(rng.integers(1, n + 1))
    cuts = np.sort(rng.choice(np.arange(1, n), size=m - 1, replace=False)) if m > 1 else np.array([], int)
    counts = np.diff(np.concatenate([[0], cuts, [n]]))
    return ens.EnsembleComposition([(int(c), random_state(rng, d)) for c in counts])


def _s_one(n):
    return ens.EnsembleComposition([(n / 2, linalg.basis_state("0")), (n / 2, linalg.basis_state("1"))])


def _s_two(n):
    plus, minus = (linalg.axis_state(linalg.SignedAxis("x", s)) for s in (1, -1))
    return ens.EnsembleComposition([(n / 2, plus), (n / 2, minus)])


def check_despagnat() -> CheckResult:
    worst = 0.0
    for n in (2, 100, 10**6):
        f1 = ens.fluctuation_proper(_s_one(n), sigma_z_single()).fluctuation
        f2 = ens.fluctuation_proper(_s_two(n), sigma_z_single()).fluctuation
        worst = max(worst, abs(f1), abs(f2 - math.sqrt(n)))
    return CheckResult("despagnat_fluctuations", worst <= 1e-10, f"max error {worst:.3g}")


def check_oracle_equivalence(samples: int = 60, seed: int = 7) -> CheckResult:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(samples):
        d = int(rng.choice([2, 4]))
        comp = random_integer_composition(rng, d, 5)
        omega = random_hermitian(rng, d)
        exact = ens.fluctuation_proper(comp, omega)
        mean, std = ens.oracle_fluctuation(comp, omega)
        worst = max(worst, abs(exact.fluctuation - std), abs(exact.expectation_ensemble - mean))
    return CheckResult("oracle_equivalence", worst <= 1e-8, f"{samples} compositions, max error {worst:.3g}")


def check_bell_oracle() -> CheckResult:
    # counts (4, 3, 3, 3, 3) at N=16; product decomposition is integral at N=36, eps=1/9
    bell = dec.effective_bell_composition(16, 0.25)
    product = dec.decomposition_to_composition(dec.braunstein_decomposition(1 / 9), 36)
    errs = []
    for comp, expected in ((bell, 0.0), (product, math.sqrt(8 * 36 / 9))):
        f = ens.fluctuation_proper(comp, sigma_zz_pair()).fluctuation
        _, oracle_std = ens.distribution_moments(ens.collective_distribution(comp, sigma_zz_pair()))
        errs += [abs(f - expected), abs(oracle_std - expected)]
    small = dec.effective_bell_composition(8, 0.5)
    errs.append(abs(ens.oracle_fluctuation(small, sigma_zz_pair())[1]))
    worst = max(errs)
    return CheckResult("bell_scenario_fluctuations", worst <= 1e-8, f"max error {worst:.3g}")


def check_decomposition() -> CheckResult:
    worst = 0.0
    labels = linalg.pauli_strings(2)
    keys = [(i, j) for i in linalg.SIGNED_AXES for j in linalg.SIGNED_AXES]
    system = np.array(
        [[linalg.pauli_expand(linalg.tensor_product(linalg.pauli_matrix(i), linalg.pauli_matrix(j)))[p] for i, j in keys] for p in labels]
    )
    for eps in (0.0, 0.05, 1 / 9):
        target = dec.effective_pure_density(dec.EffectivePureParams(4, eps))
        d = dec.braunstein_decomposition(eps)
        worst = max(worst, float(np.max(np.abs(d.reconstruct() - target))))
        rhs = np.array([linalg.pauli_expand(target)[p] for p in labels])
        min_norm = np.linalg.lstsq(system, rhs, rcond=None)[0]
        worst = max(worst, float(np.max(np.abs(min_norm - np.array([d.weights[k] for k in keys])))))
        worst = max(worst, abs(d.min_weight - (1 - 9 * eps) / 36))
    try:
        dec.braunstein_decomposition(0.12)
        raised = False
    except dec.PositivityError:
        raised = True
    ok = worst <= 1e-12 and raised
    return CheckResult("decomposition_reconstruction", ok, f"max error {worst:.3g}, eps=0.12 rejected={raised}")


def check_esd_expectation(seed: int = 11) -> CheckResult:
    rng = np.random.default_rng(seed)
    pairs = [
        (_s_one(100), _s_two(100)),
        (dec.effective_bell_composition(900, 0.1), dec.decomposition_to_composition(dec.braunstein_decomposition(0.1), 900)),
    ]
    worst = 0.0
    for a, b in pairs:
        if not ens.same_density_matrix(a, b):
            return CheckResult("esd_expectation_invariance", False, "pair does not share rho")
        for _ in range(20):
            omega = random_hermitian(rng, a.dim)
            ea, eb = ens.ensemble_expectation(a, omega), ens.ensemble_expectation(b, omega)
            worst = max(worst, abs(ea - eb) / max(1.0, abs(ea)))
    gap = abs(
        ens.fluctuation_proper(pairs[0][0], sigma_z_single()).fluctuation
        - ens.fluctuation_proper(pairs[0][1], sigma_z_single()).fluctuation
    )
    ok = worst <= 1e-9 and gap > 1e-6
    return CheckResult("esd_expectation_invariance", ok, f"max rel error {worst:.3g}, S_I/S_II fluctuation gap {gap:.6g}")


def check_identical_mixed() -> CheckResult:
    mixed = ens.fluctuation_identical_mixed(ens.IdenticalMixedEnsemble(100, np.eye(2) / 2), sigma_z_single())
    proper = ens.fluctuation_proper(_s_one(100), sigma_z_single()).fluctuation
    ok = abs(mixed - 10) <= 1e-10 and abs(proper) <= 1e-10
    return CheckResult("identical_mixed_contrast", ok, f"identical-mixed {mixed:.12g}, proper {proper:.12g}")


def check_gorter() -> CheckResult:
    two = dec.gorter_t1(dec.GorterInput((-1.0, 1.0), {(0, 1): 2.0, (1, 0): 2.0}))
    three = dec.gorter_t1(
        dec.GorterInput((0.0, 1.0, 2.0), {(n, m): 1.0 for n in range(3) for m in range(3) if n != m})
    )
    err = max(abs(two - 0.25) / 0.25, abs(three - 1 / 1.2) * 1.2)
    return CheckResult("gorter_t1", err <= 1e-12, f"max rel error {err:.3g}")


def check_kick() -> CheckResult:
    plus = linalg.projector(linalg.axis_state(linalg.SignedAxis("x", 1)))
    full = dec.random_kick_average(plus, dec.KickModel.uniform())
    half_grid = dec.random_kick_average(plus, dec.KickModel.uniform_grid(16, 0.0, math.pi))
    err = max(float(np.max(np.abs(full - np.eye(2) / 2))), float(np.max(np.abs(half_grid - np.eye(2) / 2))))
    return CheckResult("random_kick_dephasing", err <= 1e-10, f"max error {err:.3g}")


CHECKS: tuple[Callable[[], CheckResult], ...] = (
    check_despagnat,
    check_oracle_equivalence,
    check_bell_oracle,
    check_decomposition,
    check_esd_expectation,
    check_identical_mixed,
    check_gorter,
    check_kick,
)


def run_checks() -> list[CheckResult]:
    out = []
    for check in CHECKS:
        try:
            out.append(check())
        except Exception as exc:  # a crash is a failed check, not a crashed suite
            out.append(CheckResult(check.__name__.removeprefix("check_"), False, f"{type(exc).__name__}: {exc}"))
    return out

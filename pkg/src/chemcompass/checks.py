"""Built-in invariant suite run by ``chemcompass check``."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .dynamics import MasterEquation, Theory, evolve
from .entanglement import concurrence, concurrence_pure, entanglement_of_formation
from .spinspace import (
    SINGLET,
    HamiltonianSpec,
    Hyperfine,
    build_hamiltonian,
    build_space,
    electron_state_operator,
    is_hermitian,
    singlet_projector,
    triplet_projector,
)

SEED = 20100301


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


def _dg_pair():
    space = build_space([])
    H = build_hamiltonian(space, HamiltonianSpec(1.5, 0.5))
    return space, H, electron_state_operator(SINGLET, space)


def check_projector_algebra() -> CheckResult:
    worst = 0.0
    for spins in ([], [0.5], [0.5, 1.0], [1.5]):
        space = build_space(spins)
        qs, qt = singlet_projector(space), triplet_projector(space)
        eye = np.eye(space.dim)
        worst = max(
            worst,
            np.abs(qs @ qs - qs).max(),
            np.abs(qs - qs.conj().T).max(),
            np.abs(qs + qt - eye).max(),
            np.abs(qs @ qt).max(),
            abs(np.trace(qs).real - space.M),
        )
    return CheckResult("projector algebra", worst < 1e-12, f"max deviation {worst:.2e}")


def check_hamiltonians_hermitian() -> CheckResult:
    rng = np.random.default_rng(SEED)
    space = build_space([0.5, 1.0])
    ok = True
    for _ in range(20):
        w1, w2, a1, a2 = rng.normal(size=4)
        spec = HamiltonianSpec(w1, w2, (Hyperfine(1, 0, a1), Hyperfine(2, 1, a2)))
        ok &= is_hermitian(build_hamiltonian(space, spec))
    return CheckResult("hamiltonians hermitian", bool(ok), "20 random electron-nuclear specs")


def check_trajectories_physical() -> CheckResult:
    space, H, rho0 = _dg_pair()
    herm = neg = qs_out = 0.0
    monotone = True
    for kind in Theory:
        traj = evolve(rho0, MasterEquation(kind, 1.0, 1.0), H, 20.0, points=200)
        rhos = traj.rhos
        herm = max(herm, np.abs(rhos - rhos.conj().transpose(0, 2, 1)).max())
        neg = min(neg, min(np.linalg.eigvalsh(r)[0] for r in rhos))
        monotone &= bool(np.all(np.diff(traj.trace) <= 1e-15))
        q = traj.qs_norm[np.isfinite(traj.qs_norm)]
        qs_out = max(qs_out, -q.min(), q.max() - 1.0)
    passed = herm < 1e-9 and neg >= -1e-8 and monotone and qs_out <= 1e-8
    return CheckResult(
        "hermiticity/positivity along trajectories",
        passed,
        f"|rho-rho^+| {herm:.1e}, min eig {neg:.1e}, trace monotone {monotone}",
    )


def check_trace_law() -> CheckResult:
    space, H, rho0 = _dg_pair()
    k = 0.7
    worst = 0.0
    for kind in Theory:
        traj = evolve(rho0, MasterEquation(kind, k, k), H, 10.0 / k, points=200)
        worst = max(worst, np.abs(traj.trace - np.exp(-k * traj.times)).max())
    return CheckResult("trace law exp(-kt)", worst < 1e-6, f"max error {worst:.2e}")


def check_concurrence_dual_path(samples: int = 10_000) -> CheckResult:
    rng = np.random.default_rng(SEED)
    psi = rng.normal(size=(samples, 4)) + 1j * rng.normal(size=(samples, 4))
    psi /= np.linalg.norm(psi, axis=1, keepdims=True)
    worst = 0.0
    for v in psi:
        c_mixed = concurrence(np.outer(v, v.conj()), validate=False)
        worst = max(worst, abs(c_mixed - concurrence_pure(v)))
    return CheckResult(
        "concurrence dual path", worst < 1e-10, f"{samples} random pure states, max diff {worst:.2e}"
    )


def check_eof_monotone() -> CheckResult:
    C = np.linspace(0.0, 1.0, 10_001)
    E = entanglement_of_formation(C)
    passed = bool(np.all(np.diff(E) > 0)) and E[0] == 0.0 and abs(E[-1] - 1.0) < 1e-15
    return CheckResult("EoF monotone in C", passed, f"E(0)={E[0]:.1f}, E(1)={E[-1]:.15f}")


def check_step_halving() -> CheckResult:
    space, H, rho0 = _dg_pair()
    worst = 0.0
    for kind in Theory:
        me = MasterEquation(kind, 1.0, 1.0)
        coarse = evolve(rho0, me, H, 20.0, dt=1 / 300, points=100)
        fine = evolve(rho0, me, H, 20.0, dt=1 / 600, points=100)
        for a, b in zip(coarse.table().T, fine.table().T):
            ok = np.isfinite(a) & np.isfinite(b)
            worst = max(worst, np.abs(a[ok] - b[ok]).max())
    return CheckResult("step-halving convergence", worst < 1e-8, f"max change {worst:.2e}")


def check_zero_rate_agreement() -> CheckResult:
    space, H, rho0 = _dg_pair()
    runs = [evolve(rho0, MasterEquation(k), H, 20.0, points=100).rhos for k in Theory]
    worst = max(np.abs(r - runs[0]).max() for r in runs[1:])
    return CheckResult("theories agree without reaction", worst < 1e-10, f"max diff {worst:.2e}")


ALL_CHECKS: tuple[Callable[[], CheckResult], ...] = (
    check_projector_algebra,
    check_hamiltonians_hermitian,
    check_trajectories_physical,
    check_trace_law,
    check_concurrence_dual_path,
    check_eof_monotone,
    check_step_halving,
    check_zero_rate_agreement,
)


def run_checks() -> list[CheckResult]:
    return [check() for check in ALL_CHECKS]

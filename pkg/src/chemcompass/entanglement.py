"""
Two-electron entanglement measures: Wootters concurrence, entanglement of
formation and a threshold-based entanglement lifetime.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np
from numpy.typing import NDArray

from .exceptions import ValidationError

if TYPE_CHECKING:
    from .dynamics import Trajectory

SIGMA_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]])
SIGMA_YY = np.kron(SIGMA_Y, SIGMA_Y)

STATE_TOL = 1e-8


@dataclass(frozen=True)
class EntanglementRecord:
    time: float
    concurrence: float
    eof: float
    normalized: bool = True


def spin_flip(rho: NDArray) -> NDArray:
    """(sigma_y x sigma_y) rho* (sigma_y x sigma_y)."""
    return SIGMA_YY @ np.conj(rho) @ SIGMA_YY


def _check_state(rho: NDArray) -> None:
    if rho.shape != (4, 4):
        raise ValidationError(f"concurrence needs a 4x4 density matrix, got {rho.shape}")
    if np.max(np.abs(rho - rho.conj().T)) > STATE_TOL:
        raise ValidationError("density matrix is not Hermitian")
    if abs(np.trace(rho) - 1.0) > STATE_TOL:
        raise ValidationError(f"density matrix trace {np.trace(rho).real:.3g} != 1")
    if np.linalg.eigvalsh(rho)[0] < -STATE_TOL:
        raise ValidationError("density matrix is not positive semidefinite")


def concurrence(rho: NDArray, validate: bool = True) -> float:
    """Wootters concurrence ``max(0, l1 - l2 - l3 - l4)`` of a two-qubit state.

    The ``l_i`` (square roots of the eigenvalues of ``rho @ spin_flip(rho)``)
    are obtained as singular values of ``W^+ (sy x sy) W*`` with
    ``rho = W W^+``; this avoids square roots of roundoff-level eigenvalues.
    """
    rho = np.asarray(rho, dtype=complex)
    if validate:
        _check_state(rho)
    w, U = np.linalg.eigh(0.5 * (rho + rho.conj().T))
    W = U * np.sqrt(np.clip(w, 0.0, None))
    tau = W.conj().T @ SIGMA_YY @ W.conj()
    lam = np.linalg.svd(tau, compute_uv=False)
    return float(max(0.0, lam[0] - lam[1] - lam[2] - lam[3]))


def concurrence_pure(psi: NDArray) -> float:
    """|<psi| sigma_y x sigma_y |psi*>| for a normalized two-qubit vector."""
    psi = np.asarray(psi, dtype=complex)
    return float(abs(np.vdot(psi, SIGMA_YY @ np.conj(psi))))


def _binary_entropy(x):
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    inner = (x > 0.0) & (x < 1.0)
    xi = x[inner]
    out[inner] = -xi * np.log2(xi) - (1.0 - xi) * np.log2(1.0 - xi)
    return out


def entanglement_of_formation(C):
    """E(C) = h((1 + sqrt(1 - C^2)) / 2) with h the binary entropy in bits.

    Accepts a scalar or an array; NaN entries pass through.
    """
    C_arr = np.asarray(C, dtype=float)
    finite = C_arr[np.isfinite(C_arr)]
    if finite.size and (finite.min() < -1e-9 or finite.max() > 1.0 + 1e-9):
        raise ValidationError("concurrence must lie in [0, 1]")
    Cc = np.clip(C_arr, 0.0, 1.0)
    out = _binary_entropy(0.5 * (1.0 + np.sqrt(1.0 - Cc * Cc)))
    out = np.where(np.isnan(C_arr), np.nan, out)
    if np.ndim(C) == 0:
        return float(out)
    return out


def entanglement_records(traj: "Trajectory") -> list[EntanglementRecord]:
    return [
        EntanglementRecord(float(t), float(c), float(e), True)
        for t, c, e in zip(traj.times, traj.concurrence_norm, traj.eof_norm)
    ]


def entanglement_lifetime(traj: "Trajectory", threshold: float = 0.01) -> float | None:
    """Earliest recorded time after which normalized EoF stays below ``threshold``.

    Times where the pair population has fallen under the trace floor carry no
    entanglement value and are skipped. Returns ``None`` if the crossing is
    never sustained.
    """
    if not 0.0 < threshold < 1.0:
        raise ValidationError("threshold must lie strictly between 0 and 1")
    eof = getattr(traj, "eof_norm", None)
    if eof is None or len(eof) != len(traj.times):
        raise ValidationError("trajectory carries no entanglement records")
    eof = np.asarray(eof)
    ok = np.isfinite(eof)
    if not ok.any():
        raise ValidationError("trajectory carries no available entanglement values")
    times = np.asarray(traj.times)[ok]
    below = eof[ok] < threshold
    if not below[-1]:
        return None
    above = np.flatnonzero(~below)
    first = 0 if above.size == 0 else above[-1] + 1
    return float(times[first])

"""
Reaction yields and magnetometric sensitivity limits of a radical-pair sensor.

Unit convention
---------------
The sensitivity calculators take the electron gyromagnetic ratio in Hz/G
(``GAMMA_E = 2.8e6``), times in seconds, and return field precisions in gauss.
The spin dynamics work with angular frequencies, so converting a field into
Larmor frequencies (:func:`larmor_frequencies`) is the only place a factor
``2*pi`` appears.

The shot-noise limit follows from maximizing ``t*sqrt(N0 exp(-t/T_r))``,
which peaks at ``t = OPTIMAL_READOUT_FACTOR * T_r``. Order-unity factors from
that optimum are dropped, so only the final closed form is implemented.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np
from numpy.typing import NDArray

from .dynamics import MasterEquation, Theory, default_timestep, make_rhs
from .exceptions import IntegrationError, ValidationError
from .spinspace import (
    HamiltonianSpec,
    Hyperfine,
    SpinSpace,
    build_hamiltonian,
    eigendecompose,
    singlet_projector,
)

GAMMA_E = 2.8e6  # Hz/G
G_FREE = 2.0023
OPTIMAL_READOUT_FACTOR = 2.0


@dataclass(frozen=True)
class SensitivityInput:
    """Inputs of the sensitivity calculators; unused fields may stay ``None``."""

    N0: float | None = None
    T_r: float | None = None
    tau: float | None = None
    snr: float | None = None
    gamma: float = GAMMA_E

    def __post_init__(self):
        for name in ("N0", "T_r", "tau", "snr", "gamma"):
            value = getattr(self, name)
            if value is not None and not value > 0:
                raise ValidationError(f"{name} must be positive, got {value!r}")

    def require(self, *names: str) -> None:
        missing = [n for n in names if getattr(self, n) is None]
        if missing:
            raise ValidationError(f"missing sensitivity input(s): {', '.join(missing)}")


@dataclass(frozen=True)
class YieldResult:
    Y_S: float
    Y_T: float
    method: str


class BoundCheck(NamedTuple):
    satisfied: bool
    ratio: float


# -- yields -----------------------------------------------------------------


def singlet_yield_eigenbasis(
    H: NDArray, Q_S: NDArray, k: float, M: int | None = None
) -> YieldResult:
    """Singlet yield for equal recombination rates ``k``, from the spectrum of H.

    Y_S = (1/M) sum_nm |(Q_S)_nm|^2 k^2 / (k^2 + (w_n - w_m)^2)

    with ``(Q_S)_nm`` taken in the eigenbasis of ``H`` and the pair born as a
    singlet with unpolarized nuclei.
    """
    if not k > 0:
        raise ValidationError("recombination rate k must be positive")
    H = np.asarray(H)
    if M is None:
        M = H.shape[0] // 4
    w, V = eigendecompose(H)
    q = V.conj().T @ np.asarray(Q_S) @ V
    dw = w[:, None] - w[None, :]
    k2 = k * k
    y_s = float(np.sum(np.abs(q) ** 2 * (k2 / (k2 + dw * dw))).real) / M
    return YieldResult(y_s, 1.0 - y_s, "eigenbasis")


def singlet_yield_timedomain(
    rho0: NDArray,
    me: MasterEquation,
    H: NDArray,
    Q_S: NDArray,
    dt: float | None = None,
    trace_tol: float = 1e-8,
) -> YieldResult:
    """Yields by integrating the traditional master equation to completion.

    ``Y_S = k_S * int Tr{Q_S rho} dt`` (likewise ``Y_T``) is accumulated with
    the same fourth-order stages that advance ``rho``, until the surviving
    population drops below ``trace_tol``. Integration is capped at
    ``t = 50 / min(k_S, k_T)``.
    """
    if me.kind is not Theory.TRADITIONAL:
        raise ValidationError("time-domain yields use the traditional master equation")
    if not (me.k_s > 0 and me.k_t > 0):
        raise ValidationError("time-domain yields need k_S > 0 and k_T > 0")
    rho = np.asarray(rho0, dtype=complex)
    H = np.asarray(H, dtype=complex)
    Q_S = np.asarray(Q_S, dtype=complex)
    Q_T = np.eye(H.shape[0]) - Q_S
    init_trace = np.trace(rho).real
    if dt is None:
        dt = default_timestep(float(np.max(np.abs(np.linalg.eigvalsh(H)))), me)
    t_cap = 50.0 / min(me.k_s, me.k_t)
    rhs = make_rhs(me, H, Q_S)

    def fluxes(r):
        return me.k_s * np.einsum("ij,ji->", Q_S, r).real, me.k_t * np.einsum(
            "ij,ji->", Q_T, r
        ).real

    y_s = y_t = 0.0
    t = 0.0
    h = dt
    while np.trace(rho).real >= trace_tol * init_trace:
        if t > t_cap:
            raise IntegrationError(
                f"population still {np.trace(rho).real:.3g} at t={t:.4g}; yield not converged"
            )
        k1 = rhs(rho)
        r2 = rho + (0.5 * h) * k1
        k2 = rhs(r2)
        r3 = rho + (0.5 * h) * k2
        k3 = rhs(r3)
        r4 = rho + h * k3
        k4 = rhs(r4)
        f = [fluxes(r) for r in (rho, r2, r3, r4)]
        y_s += h / 6.0 * (f[0][0] + 2 * f[1][0] + 2 * f[2][0] + f[3][0])
        y_t += h / 6.0 * (f[0][1] + 2 * f[1][1] + 2 * f[2][1] + f[3][1])
        rho = rho + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        t += h
    return YieldResult(float(y_s), float(y_t), "timedomain")


def larmor_frequencies(
    field: float, g_factors: Sequence[float], gamma: float = GAMMA_E
) -> tuple[float, ...]:
    """Angular Larmor frequencies ``2 pi gamma (g/G_FREE) B`` (rad/s for B in G)."""
    return tuple(2 * math.pi * gamma * (g / G_FREE) * field for g in g_factors)


def yield_at_field(
    field: float,
    g1: float,
    g2: float,
    k: float,
    space: SpinSpace | None = None,
    hyperfine: Sequence[Hyperfine] = (),
    gamma: float = GAMMA_E,
) -> float:
    """Eigenbasis singlet yield with Zeeman frequencies set by ``field``."""
    space = space or SpinSpace()
    w1, w2 = larmor_frequencies(field, (g1, g2), gamma)
    H = build_hamiltonian(space, HamiltonianSpec(w1, w2, tuple(hyperfine)))
    return singlet_yield_eigenbasis(H, singlet_projector(space), k, space.M).Y_S


def yield_field_slope(
    field: float,
    g1: float,
    g2: float,
    k: float,
    space: SpinSpace | None = None,
    hyperfine: Sequence[Hyperfine] = (),
    gamma: float = GAMMA_E,
    rel_step: float = 1e-4,
) -> float:
    """dY_S/dB by a central difference with step ``rel_step * |field|``."""
    if field == 0:
        raise ValidationError("field scale must be non-zero")
    h = rel_step * abs(field)
    up = yield_at_field(field + h, g1, g2, k, space, hyperfine, gamma)
    down = yield_at_field(field - h, g1, g2, k, space, hyperfine, gamma)
    return (up - down) / (2 * h)


# -- sensitivity limits -------------------------------------------------------


def shot_noise_limit(inp: SensitivityInput) -> float:
    """1 / (gamma sqrt(N0 tau T_r)), in gauss."""
    inp.require("N0", "tau", "T_r")
    return 1.0 / (inp.gamma * math.sqrt(inp.N0 * inp.tau * inp.T_r))


def snr_limit(inp: SensitivityInput) -> float:
    """1 / (gamma (S/N) T_r), in gauss; intended for S/N <= sqrt(N0)."""
    inp.require("snr", "T_r")
    if inp.N0 is not None and inp.snr > math.sqrt(inp.N0) * (1 + 1e-12):
        warnings.warn(
            f"S/N={inp.snr:.4g} exceeds the shot-noise ceiling sqrt(N0)={math.sqrt(inp.N0):.4g}",
            stacklevel=2,
        )
    return 1.0 / (inp.gamma * inp.snr * inp.T_r)


def observable_sensitivity(delta_O: float, dO_dB: float) -> float:
    """Field precision delta_O/|dO/dB|; ``inf`` when the observable ignores B."""
    if dO_dB == 0:
        return math.inf
    return abs(delta_O) / abs(dO_dB)


def lifetime_precision(T_E: float, T_r: float, snr: float) -> float:
    """Best precision on a lifetime read out during ``T_r``: T_E^2 / (T_r S/N)."""
    return T_E * T_E / (T_r * snr)


def entanglement_lifetime_sensitivity(
    inp: SensitivityInput, T_E: float, dTE_dB: float
) -> float:
    inp.require("snr", "T_r")
    if not T_E > 0:
        raise ValidationError("entanglement lifetime must be positive")
    return observable_sensitivity(lifetime_precision(T_E, inp.T_r, inp.snr), dTE_dB)


def bound_check(T_E: float, dTE_dB: float, gamma: float = GAMMA_E) -> BoundCheck:
    """Test |dT_E/dB| <= gamma T_E^2, without which the S/N limit is beaten."""
    if not T_E > 0:
        raise ValidationError("entanglement lifetime must be positive")
    ratio = abs(dTE_dB) / (gamma * T_E * T_E)
    # exact-boundary inputs land within a few ulp of 1
    return BoundCheck(ratio <= 1.0 + 4 * np.finfo(float).eps, ratio)

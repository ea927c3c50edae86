"""
Reaction master equations for radical-pair spin density matrices.

Every theory evolves ``drho/dt = -i[H, rho] + L(rho)`` and differs only in the
reaction superoperator ``L``. With ``Q_T = 1 - Q_S``:

traditional
    ``-(kS/2){Q_S, rho} - (kT/2){Q_T, rho}``
jones-hore
    ``-kS (rho - Q_T rho Q_T) - kT (rho - Q_S rho Q_S)``
kominis
    ``-((kS + kT)/4)(Q_S rho + rho Q_S - 2 Q_S rho Q_S) - (kS<Q_S> + kT<Q_T>) rho``,
    i.e. a singlet/triplet measurement dissipator at rate ``(kS + kT)/2`` plus
    a state-dependent population loss, ``<Q> = Tr{Q rho}/Tr{rho}``.

All three agree when ``kS = kT = 0``. Trajectories are produced by a classical
fixed-step fourth-order Runge-Kutta scheme.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from numpy.typing import NDArray

from .entanglement import concurrence, entanglement_of_formation
from .exceptions import DegenerateStateError, IntegrationError, ValidationError
from .spinspace import SINGLET, TRIPLET_ZERO, SpinSpace, partial_trace_nuclear

TRACE_FLOOR = 1e-12
DEFAULT_POINTS = 500
STEPS_PER_TIMESCALE = 200
_INSTABILITY_TOL = 1e-6


class Theory(str, enum.Enum):
    TRADITIONAL = "traditional"
    JONES_HORE = "jones-hore"
    KOMINIS = "kominis"


class KominisLoss(str, enum.Enum):
    """Population-loss variant used by the Kominis kind."""

    NONLINEAR = "nonlinear"
    ANTICOMMUTATOR = "anticommutator"


@dataclass(frozen=True)
class MasterEquation:
    kind: Theory
    k_s: float = 0.0
    k_t: float = 0.0
    kominis_loss: KominisLoss = KominisLoss.NONLINEAR

    def __post_init__(self):
        try:
            object.__setattr__(self, "kind", Theory(self.kind))
            object.__setattr__(self, "kominis_loss", KominisLoss(self.kominis_loss))
        except ValueError as exc:
            raise ValidationError(str(exc)) from None
        if not (self.k_s >= 0 and self.k_t >= 0):
            raise ValidationError("recombination rates must be non-negative")


def singlet_projector_for_dim(dim: int) -> NDArray:
    """|S><S| tensored with the identity on ``dim // 4`` nuclear states."""
    if dim % 4:
        raise ValidationError(f"dimension {dim} is not a multiple of 4")
    return np.kron(np.outer(SINGLET, SINGLET.conj()), np.eye(dim // 4))


def make_rhs(me: MasterEquation, H: NDArray, Q_S: NDArray) -> Callable[[NDArray], NDArray]:
    """Return ``rho -> drho/dt`` for fixed ``me``, ``H`` and ``Q_S``."""
    H = np.asarray(H, dtype=complex)
    Q_S = np.asarray(Q_S, dtype=complex)
    if H.shape != Q_S.shape or H.ndim != 2 or H.shape[0] != H.shape[1]:
        raise ValidationError("H and Q_S must be square matrices of equal dimension")
    Q_T = np.eye(H.shape[0]) - Q_S
    k_s, k_t = me.k_s, me.k_t
    kind = me.kind

    def commutator(rho):
        return -1j * (H @ rho - rho @ H)

    if k_s == 0 and k_t == 0:
        return commutator

    if kind is Theory.TRADITIONAL:
        # {Q_T, rho} = 2 rho - {Q_S, rho}
        c = 0.5 * (k_s - k_t)

        def rhs(rho):
            return commutator(rho) - c * (Q_S @ rho + rho @ Q_S) - k_t * rho

    elif kind is Theory.JONES_HORE:
        def rhs(rho):
            return (
                commutator(rho)
                - (k_s + k_t) * rho
                + k_s * (Q_T @ rho @ Q_T)
                + k_t * (Q_S @ rho @ Q_S)
            )

    else:
        dephase = 0.25 * (k_s + k_t)
        nonlinear = me.kominis_loss is KominisLoss.NONLINEAR
        c = 0.5 * (k_s - k_t)

        def rhs(rho):
            tr = np.trace(rho).real
            if not tr > 0:
                raise DegenerateStateError("Kominis reaction term needs Tr(rho) > 0")
            QSr = Q_S @ rho
            rQS = rho @ Q_S
            out = commutator(rho) - dephase * (QSr + rQS - 2.0 * (QSr @ Q_S))
            if nonlinear:
                p_s = np.trace(QSr).real / tr
                out -= (k_s * p_s + k_t * (1.0 - p_s)) * rho
            else:
                out -= c * (QSr + rQS) + k_t * rho
            return out

    return rhs


def apply_liouvillian(me: MasterEquation, H: NDArray, Q_S: NDArray, rho: NDArray) -> NDArray:
    """drho/dt, unitary part included."""
    return make_rhs(me, H, Q_S)(np.asarray(rho, dtype=complex))


def rk4_step(rhs, rho: NDArray, h: float) -> NDArray:
    k1 = rhs(rho)
    k2 = rhs(rho + (0.5 * h) * k1)
    k3 = rhs(rho + (0.5 * h) * k2)
    k4 = rhs(rho + h * k3)
    return rho + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def default_timestep(frequency_scale: float, me: MasterEquation) -> float:
    """(1/200) * min(1/max frequency, 1/max rate)."""
    freq = max(abs(frequency_scale), 1e-300)
    rate = max(me.k_s, me.k_t, 1e-300)
    return min(1.0 / freq, 1.0 / rate) / STEPS_PER_TIMESCALE


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Recorded snapshots of one integration run.

    Normalized observables are NaN once the trace has dropped to
    ``trace_floor`` or below.
    """

    times: NDArray
    rhos: NDArray
    trace: NDArray
    qs_norm: NDArray
    concurrence_norm: NDArray
    eof_norm: NDArray
    M: int
    master_equation: MasterEquation
    dt: float
    trace_floor: float = TRACE_FLOOR

    def table(self) -> NDArray:
        """Columns ``t, trace, qs_norm, concurrence_norm, eof_norm``."""
        return np.column_stack(
            [self.times, self.trace, self.qs_norm, self.concurrence_norm, self.eof_norm]
        )


def _available(trace: NDArray, floor: float) -> NDArray:
    """True up to (excluding) the first time the trace reaches ``floor``."""
    return np.cumprod(trace > floor).astype(bool)


def evolve(
    rho0: NDArray,
    me: MasterEquation,
    H: NDArray,
    t_max: float,
    dt: float | None = None,
    *,
    space: SpinSpace | None = None,
    points: int = DEFAULT_POINTS,
    trace_floor: float = TRACE_FLOOR,
) -> Trajectory:
    """Integrate the master equation from ``rho0`` up to ``t_max``.

    ``points`` snapshots are recorded after ``t = 0``, evenly spaced. The step
    actually used is the largest value not exceeding ``dt`` that lands exactly
    on every recording time. When ``dt`` is None it follows
    :func:`default_timestep` with the spectral radius of ``H`` as frequency
    scale.

    Raises
    ------
    IntegrationError
        If the trace grows or the state turns negative beyond 1e-6, which
        signals a step too large for the fastest rate.
    """
    rho0 = np.asarray(rho0, dtype=complex)
    H = np.asarray(H, dtype=complex)
    dim = H.shape[0]
    if rho0.shape != (dim, dim):
        raise ValidationError("rho0 and H dimensions differ")
    if not (t_max > 0):
        raise ValidationError("t_max must be positive")
    if points < 1:
        raise ValidationError("points must be at least 1")
    if np.max(np.abs(rho0 - rho0.conj().T)) > 1e-9:
        raise ValidationError("rho0 is not Hermitian")
    if abs(np.trace(rho0).real - 1.0) > 1e-9:
        raise ValidationError("rho0 must have unit trace")
    if np.linalg.eigvalsh(rho0)[0] < -1e-9:
        raise ValidationError("rho0 is not positive semidefinite")
    if dt is None:
        dt = default_timestep(float(np.max(np.abs(np.linalg.eigvalsh(H)))), me)
    if not (dt > 0):
        raise ValidationError("dt must be positive")

    M = space.M if space is not None else dim // 4
    if 4 * M != dim:
        raise ValidationError("space dimension does not match H")
    Q_S = singlet_projector_for_dim(dim)
    rhs = make_rhs(me, H, Q_S)

    stride = max(1, math.ceil(t_max / (dt * points) - 1e-9))
    h = t_max / (stride * points)

    rhos = np.empty((points + 1, dim, dim), dtype=complex)
    rhos[0] = rho0
    rho = rho0
    prev_trace = 1.0
    for i in range(1, points + 1):
        for _ in range(stride):
            rho = rk4_step(rhs, rho, h)
        tr = np.trace(rho).real
        if not np.isfinite(tr) or tr > prev_trace * (1 + _INSTABILITY_TOL):
            raise IntegrationError(
                f"trace grew at t={i * stride * h:.4g}; reduce dt (now {h:.3g})"
            )
        if tr > 0 and np.max(np.abs(rho - rho.conj().T)) > 1e-9 * tr:
            raise IntegrationError(f"state lost Hermiticity at t={i * stride * h:.4g}")
        if tr > 0 and np.linalg.eigvalsh(rho / tr)[0] < -_INSTABILITY_TOL:
            raise IntegrationError(
                f"state lost positivity at t={i * stride * h:.4g}; reduce dt (now {h:.3g})"
            )
        prev_trace = tr
        rhos[i] = rho

    times = np.arange(points + 1) * (stride * h)
    trace = np.einsum("tii->t", rhos).real
    ok = _available(trace, trace_floor)
    qs = np.full(points + 1, np.nan)
    conc = np.full(points + 1, np.nan)
    for i in np.flatnonzero(ok):
        rn = rhos[i] / trace[i]
        qs[i] = np.einsum("ij,ji->", Q_S, rn).real
        el = partial_trace_nuclear(rn, M)
        conc[i] = concurrence(0.5 * (el + el.conj().T), validate=False)
    return Trajectory(
        times=times,
        rhos=rhos,
        trace=trace,
        qs_norm=qs,
        concurrence_norm=conc,
        eof_norm=entanglement_of_formation(conc),
        M=M,
        master_equation=me,
        dt=h,
        trace_floor=trace_floor,
    )


def normalized_observable(
    traj: Trajectory, O: NDArray, trace_floor: float | None = None
) -> NDArray:
    """Tr{O rho(t)}/Tr{rho(t)}; NaN from the first time the trace hits the floor."""
    floor = traj.trace_floor if trace_floor is None else trace_floor
    O = np.asarray(O)
    values = np.einsum("ij,tji->t", O, traj.rhos).real
    out = np.full(len(traj.times), np.nan)
    ok = _available(traj.trace, floor)
    out[ok] = values[ok] / traj.trace[ok]
    return out


def closed_form_two_spin(t: float, delta_omega: float) -> NDArray:
    """Singlet evolved under ``w1 s1z + w2 s2z`` (no nuclei), global phase kept.

    ``exp(-i dw t/2) [(1 + exp(i dw t))|S> + (1 - exp(i dw t))|T0>] / 2``
    """
    e = np.exp(1j * delta_omega * t)
    return np.exp(-0.5j * delta_omega * t) * ((1 + e) * SINGLET + (1 - e) * TRIPLET_ZERO) / 2

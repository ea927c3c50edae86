"""
Spin Hilbert spaces for a radical pair: two electrons tensored with nuclei.

Basis ordering is electron 1, electron 2, then nuclei in list order. The
electron block is ``|++>, |+->, |-+>, |-->`` with electron 1 the leftmost
factor. Operators are plain dense complex ``numpy`` arrays.

Units: angular frequencies in rad per unit time, hbar = 1.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import prod
from typing import Sequence

import numpy as np
from numpy.typing import NDArray

from .exceptions import ValidationError

HERMITIAN_RTOL = 1e-12

SINGLET = np.array([0.0, 1.0, -1.0, 0.0], dtype=complex) / np.sqrt(2.0)
TRIPLET_ZERO = np.array([0.0, 1.0, 1.0, 0.0], dtype=complex) / np.sqrt(2.0)
TRIPLET_PLUS = np.array([1.0, 0.0, 0.0, 0.0], dtype=complex)
TRIPLET_MINUS = np.array([0.0, 0.0, 0.0, 1.0], dtype=complex)

_AXES = ("x", "y", "z")


def spin_matrices(spin: float) -> tuple[NDArray, NDArray, NDArray]:
    """Return (Sx, Sy, Sz) for a single spin of quantum number ``spin``.

    Basis runs from m = +spin down to m = -spin.
    """
    mult = int(round(2 * spin)) + 1
    m = spin - np.arange(mult)
    # <m+1|S+|m> = sqrt(s(s+1) - m(m+1))
    raise_diag = np.sqrt(spin * (spin + 1) - m[1:] * (m[1:] + 1))
    s_plus = np.diag(raise_diag, k=1).astype(complex)
    s_minus = s_plus.conj().T
    sx = 0.5 * (s_plus + s_minus)
    sy = -0.5j * (s_plus - s_minus)
    sz = np.diag(m).astype(complex)
    return sx, sy, sz


@dataclass(frozen=True)
class SpinSpace:
    """Two electron spins plus an arbitrary list of nuclear spins."""

    nuclear_spins: tuple[float, ...] = ()
    M: int = field(init=False)
    dim: int = field(init=False)

    def __post_init__(self):
        spins = tuple(float(s) for s in self.nuclear_spins)
        for s in spins:
            twice = 2 * s
            if s < 0 or abs(twice - round(twice)) > 1e-12:
                raise ValidationError(
                    f"nuclear spin {s!r} is not a non-negative half-integer"
                )
        object.__setattr__(self, "nuclear_spins", spins)
        mult = prod(int(round(2 * s)) + 1 for s in spins)
        object.__setattr__(self, "M", mult)
        object.__setattr__(self, "dim", 4 * mult)

    @property
    def multiplicities(self) -> list[int]:
        return [int(round(2 * s)) + 1 for s in self.nuclear_spins]


def build_space(nuclear_spins: Sequence[float] = ()) -> SpinSpace:
    """Build a :class:`SpinSpace`; raises ``ValidationError`` on bad spins."""
    return SpinSpace(tuple(nuclear_spins))


def _embed(space: SpinSpace, position: int, op: NDArray) -> NDArray:
    """Kronecker-embed ``op`` at factor ``position`` (0, 1 electrons; 2+ nuclei)."""
    dims = [2, 2] + space.multiplicities
    out = np.ones((1, 1), dtype=complex)
    for i, d in enumerate(dims):
        out = np.kron(out, op if i == position else np.eye(d))
    return out


def electron_spin_op(space: SpinSpace, electron: int, axis: str) -> NDArray:
    """Spin-1/2 operator of ``electron`` (1 or 2) along ``axis``."""
    if electron not in (1, 2):
        raise ValidationError(f"electron index must be 1 or 2, got {electron!r}")
    if axis not in _AXES:
        raise ValidationError(f"axis must be one of x, y, z, got {axis!r}")
    single = spin_matrices(0.5)[_AXES.index(axis)]
    return _embed(space, electron - 1, single)


def nuclear_spin_op(space: SpinSpace, nucleus: int, axis: str) -> NDArray:
    """Spin operator of nucleus ``nucleus`` (0-based list index) along ``axis``."""
    if not 0 <= nucleus < len(space.nuclear_spins):
        raise ValidationError(
            f"nucleus index {nucleus} out of range for {len(space.nuclear_spins)} nuclei"
        )
    if axis not in _AXES:
        raise ValidationError(f"axis must be one of x, y, z, got {axis!r}")
    single = spin_matrices(space.nuclear_spins[nucleus])[_AXES.index(axis)]
    return _embed(space, nucleus + 2, single)


def singlet_projector(space: SpinSpace) -> NDArray:
    """Q_S = (1/4 - S1.S2) tensored with the nuclear identity."""
    s1s2 = sum(
        electron_spin_op(space, 1, a) @ electron_spin_op(space, 2, a) for a in _AXES
    )
    return 0.25 * np.eye(space.dim, dtype=complex) - s1s2


def triplet_projector(space: SpinSpace) -> NDArray:
    return np.eye(space.dim, dtype=complex) - singlet_projector(space)


@dataclass(frozen=True)
class Hyperfine:
    """Isotropic coupling ``a * I_nucleus . S_electron`` (``a`` in rad/time)."""

    electron: int
    nucleus: int
    a: float


@dataclass(frozen=True)
class HamiltonianSpec:
    omega1: float = 0.0
    omega2: float = 0.0
    hyperfine: tuple[Hyperfine, ...] = ()

    @property
    def delta_omega(self) -> float:
        """S-T0 mixing frequency of the nucleus-free model."""
        return self.omega1 - self.omega2

    def frequency_scale(self) -> float:
        """Largest magnetic frequency, used to pick a default time step."""
        scales = [abs(self.omega1), abs(self.omega2)]
        scales += [abs(h.a) for h in self.hyperfine]
        return max(scales)


def build_hamiltonian(space: SpinSpace, spec: HamiltonianSpec) -> NDArray:
    """Zeeman terms ``w1 s1z + w2 s2z`` plus isotropic hyperfine couplings."""
    H = spec.omega1 * electron_spin_op(space, 1, "z")
    H = H + spec.omega2 * electron_spin_op(space, 2, "z")
    for hf in spec.hyperfine:
        if hf.electron not in (1, 2):
            raise ValidationError(f"hyperfine electron index must be 1 or 2, got {hf.electron!r}")
        if not 0 <= hf.nucleus < len(space.nuclear_spins):
            raise ValidationError(
                f"hyperfine nucleus index {hf.nucleus} out of range "
                f"for {len(space.nuclear_spins)} nuclei"
            )
        for axis in _AXES:
            H = H + hf.a * (
                nuclear_spin_op(space, hf.nucleus, axis)
                @ electron_spin_op(space, hf.electron, axis)
            )
    return H


def is_hermitian(op: NDArray, rtol: float = HERMITIAN_RTOL) -> bool:
    scale = max(1.0, float(np.max(np.abs(op))) if op.size else 1.0)
    return bool(np.max(np.abs(op - op.conj().T), initial=0.0) <= rtol * scale)


def eigendecompose(H: NDArray) -> tuple[NDArray, NDArray]:
    """Eigenfrequencies (ascending) and unitary eigenbasis of a Hermitian ``H``.

    ``H == V @ diag(w) @ V.conj().T``.
    """
    H = np.asarray(H)
    if H.ndim != 2 or H.shape[0] != H.shape[1]:
        raise ValidationError(f"expected a square matrix, got shape {H.shape}")
    if not is_hermitian(H):
        raise ValidationError("Hamiltonian is not Hermitian")
    w, V = np.linalg.eigh(H)
    return w, V


def partial_trace_nuclear(rho: NDArray, space: SpinSpace | int) -> NDArray:
    """Trace out the nuclei, leaving the 4x4 two-electron operator.

    ``space`` may also be given as the nuclear multiplicity ``M``.
    """
    M = space if isinstance(space, (int, np.integer)) else space.M
    rho = np.asarray(rho)
    if rho.shape != (4 * M, 4 * M):
        raise ValidationError(
            f"density matrix shape {rho.shape} does not match dimension {4 * M}"
        )
    return np.einsum("iaja->ij", rho.reshape(4, M, 4, M))


def electron_state_operator(psi: NDArray, space: SpinSpace) -> NDArray:
    """``|psi><psi|`` on the electrons tensored with the maximally mixed nuclei."""
    el = np.outer(psi, np.conj(psi))
    return np.kron(el, np.eye(space.M) / space.M)

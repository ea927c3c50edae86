"""Scenario files: one TOML document describes one simulation setup."""

from __future__ import annotations

import re
import sys
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Any

import tomli_w

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .dynamics import DEFAULT_POINTS, KominisLoss, MasterEquation, Theory
from .exceptions import ValidationError
from .magnetometry import GAMMA_E, larmor_frequencies
from .spinspace import HamiltonianSpec, Hyperfine, SpinSpace

PRESETS = ("fig2a", "fig2bc", "yield-dg")


class ConfigError(ValidationError):
    def __init__(self, message: str, line: int | None = None, source: str | None = None):
        self.line = line
        self.source = source
        where = source or "<config>"
        if line is not None:
            where = f"{where}:{line}"
        super().__init__(f"{where}: {message}")


@dataclass(frozen=True)
class Scenario:
    name: str
    theories: tuple[Theory, ...]
    nuclear_spins: tuple[float, ...] = ()
    omega1: float | None = None
    omega2: float | None = None
    g1: float | None = None
    g2: float | None = None
    field: float | None = None
    gamma: float = GAMMA_E
    hyperfine: tuple[Hyperfine, ...] = ()
    k_s: float = 0.0
    k_t: float = 0.0
    kominis_loss: KominisLoss = KominisLoss.NONLINEAR
    t_max: float = 1.0
    dt: float | None = None
    points: int = DEFAULT_POINTS
    threshold: float = 0.01
    output: str = "."

    def space(self) -> SpinSpace:
        return SpinSpace(self.nuclear_spins)

    def hamiltonian_spec(self, field: float | None = None) -> HamiltonianSpec:
        if self.omega1 is not None:
            return HamiltonianSpec(self.omega1, self.omega2, self.hyperfine)
        B = self.field if field is None else field
        w1, w2 = larmor_frequencies(B, (self.g1, self.g2), self.gamma)
        return HamiltonianSpec(w1, w2, self.hyperfine)

    def master_equation(self, kind: Theory) -> MasterEquation:
        return MasterEquation(kind, self.k_s, self.k_t, self.kominis_loss)

    def to_dict(self) -> dict[str, Any]:
        ham: dict[str, Any] = {}
        if self.omega1 is not None:
            ham["omega1"] = self.omega1
            ham["omega2"] = self.omega2
        else:
            ham.update(g1=self.g1, g2=self.g2, field=self.field, gamma=self.gamma)
        ham["hyperfine"] = [
            {"electron": h.electron, "nucleus": h.nucleus, "a": h.a} for h in self.hyperfine
        ]
        integration: dict[str, Any] = {"t_max": self.t_max, "points": self.points}
        if self.dt is not None:
            integration["dt"] = self.dt
        return {
            "name": self.name,
            "theories": [t.value for t in self.theories],
            "space": {"nuclear_spins": list(self.nuclear_spins)},
            "hamiltonian": ham,
            "reaction": {
                "k_s": self.k_s,
                "k_t": self.k_t,
                "kominis_loss": self.kominis_loss.value,
            },
            "integration": integration,
            "entanglement": {"threshold": self.threshold},
            "output": {"directory": self.output},
        }


def _line_of(text: str | None, key: str) -> int | None:
    if not text:
        return None
    pattern = re.compile(rf"^\s*(\[+\s*)?{re.escape(key)}\b")
    for n, line in enumerate(text.splitlines(), start=1):
        if pattern.match(line):
            return n
    return None


def _number(table: dict, key: str, default=None, *, ctx) -> float | None:
    value = table.get(key, default)
    if value is None:
        return None
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        ctx(f"'{key}' must be a number", key)
    return float(value)


def scenario_from_dict(data: dict[str, Any], text: str | None = None, source: str | None = None) -> Scenario:
    def fail(message: str, key: str | None = None):
        raise ConfigError(message, _line_of(text, key) if key else None, source)

    known = {"name", "theories", "space", "hamiltonian", "reaction", "integration", "entanglement", "output"}
    for key in data:
        if key not in known:
            fail(f"unknown key '{key}'", key)

    name = data.get("name")
    if not isinstance(name, str) or not name:
        fail("'name' must be a non-empty string", "name")
    theories = data.get("theories")
    if isinstance(theories, str):
        theories = [theories]
    if not theories:
        fail("at least one theory is required", "theories")
    try:
        kinds = tuple(Theory(t) for t in theories)
    except ValueError as exc:
        fail(str(exc), "theories")

    space_t = data.get("space", {})
    spins = space_t.get("nuclear_spins", [])
    try:
        SpinSpace(tuple(spins))
    except (ValidationError, TypeError, ValueError) as exc:
        fail(str(exc), "nuclear_spins")

    ham = data.get("hamiltonian", {})
    omega1 = _number(ham, "omega1", ctx=fail)
    omega2 = _number(ham, "omega2", ctx=fail)
    g1 = _number(ham, "g1", ctx=fail)
    g2 = _number(ham, "g2", ctx=fail)
    B = _number(ham, "field", ctx=fail)
    gamma = _number(ham, "gamma", GAMMA_E, ctx=fail)
    if (omega1 is None) != (omega2 is None):
        fail("give both omega1 and omega2", "omega1" if omega1 is None else "omega2")
    if omega1 is None and None in (g1, g2, B):
        fail("hamiltonian needs omega1/omega2 or g1/g2/field", "hamiltonian")
    if omega1 is not None and any(v is not None for v in (g1, g2, B)):
        fail("give either omega1/omega2 or g1/g2/field, not both", "hamiltonian")
    hyperfine = []
    for entry in ham.get("hyperfine", []):
        try:
            hf = Hyperfine(int(entry["electron"]), int(entry["nucleus"]), float(entry["a"]))
        except (KeyError, TypeError, ValueError):
            fail("hyperfine entries need integer 'electron', 'nucleus' and numeric 'a'", "hyperfine")
        if hf.electron not in (1, 2):
            fail(f"hyperfine electron must be 1 or 2, got {hf.electron}", "hyperfine")
        if not 0 <= hf.nucleus < len(spins):
            fail(
                f"hyperfine nucleus index {hf.nucleus} out of range for {len(spins)} nuclear spin(s)",
                "hyperfine",
            )
        hyperfine.append(hf)

    reaction = data.get("reaction", {})
    k_s = _number(reaction, "k_s", 0.0, ctx=fail)
    k_t = _number(reaction, "k_t", 0.0, ctx=fail)
    if k_s < 0 or k_t < 0:
        fail("recombination rates must be non-negative", "k_s" if k_s < 0 else "k_t")
    try:
        loss = KominisLoss(reaction.get("kominis_loss", KominisLoss.NONLINEAR.value))
    except ValueError as exc:
        fail(str(exc), "kominis_loss")

    integ = data.get("integration", {})
    t_max = _number(integ, "t_max", ctx=fail)
    if t_max is None or not t_max > 0:
        fail("'t_max' must be positive", "t_max")
    dt = _number(integ, "dt", ctx=fail)
    if dt is not None and not dt > 0:
        fail("'dt' must be positive", "dt")
    points = integ.get("points", DEFAULT_POINTS)
    if not isinstance(points, int) or isinstance(points, bool) or points < 1:
        fail("'points' must be a positive integer", "points")

    threshold = _number(data.get("entanglement", {}), "threshold", 0.01, ctx=fail)
    if not 0 < threshold < 1:
        fail("'threshold' must lie in (0, 1)", "threshold")
    output = data.get("output", {}).get("directory", ".")
    if not isinstance(output, str):
        fail("output 'directory' must be a string", "directory")

    return Scenario(
        name=name,
        theories=kinds,
        nuclear_spins=tuple(float(s) for s in spins),
        omega1=omega1,
        omega2=omega2,
        g1=g1,
        g2=g2,
        field=B,
        gamma=gamma,
        hyperfine=tuple(hyperfine),
        k_s=k_s,
        k_t=k_t,
        kominis_loss=loss,
        t_max=t_max,
        dt=dt,
        points=points,
        threshold=threshold,
        output=output,
    )


def loads(text: str, source: str | None = None) -> Scenario:
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        m = re.search(r"line (\d+)", str(exc))
        raise ConfigError(str(exc), int(m.group(1)) if m else None, source) from None
    return scenario_from_dict(data, text, source)


def dumps(scenario: Scenario) -> str:
    return tomli_w.dumps(scenario.to_dict())


def preset_text(name: str) -> str:
    return resources.files("chemcompass").joinpath("presets").joinpath(f"{name}.toml").read_text()


def load(path_or_preset: str) -> Scenario:
    """Read a scenario file, or a shipped preset when given its bare name."""
    path = Path(path_or_preset)
    if path.is_file():
        return loads(path.read_text(), str(path))
    if path_or_preset in PRESETS:
        return loads(preset_text(path_or_preset), f"preset:{path_or_preset}")
    raise ConfigError(f"no such scenario file or preset: {path_or_preset}")

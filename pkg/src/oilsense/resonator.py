"""Two-mode notch surrogate for the split-ring sensor's S21 response.

Each mode is a Lorentzian dip in dB. An oil sample at standoff ``z`` couples
into a mode through a filling factor that decays exponentially with ``z``;
the coupled permittivity pulls the resonance down and the coupled loss
broadens and shallows the dip.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import NamedTuple

import numpy as np

from .dielectric import AIR, MaterialModel, permittivity_at
from .errors import ConvergenceError, DomainError

DEFAULT_BAND = (1.0e9, 4.0e9)


@dataclass(frozen=True)
class ResonatorGeometry:
    """Layout dimensions in mm. Carried as metadata; not used by the model."""

    a: float = 110.0
    b: float = 70.0
    c: float = 18.35
    d: float = 1.9
    e: float = 38.1
    f: float = 7.8
    g: float = 15.7
    h: float = 30.0
    i: float = 0.5
    j: float = 33.8
    k: float = 23.0
    l: float = 35.7  # noqa: E741
    substrate_thickness: float = 1.6
    copper_thickness: float = 0.035

    def __post_init__(self):
        for name, value in asdict(self).items():
            if not value > 0:
                raise DomainError(f"geometry.{name} must be positive, got {value}")


@dataclass(frozen=True)
class ModeModel:
    f0: float
    q0: float
    depth0_db: float
    kappa0: float
    delta: float

    def __post_init__(self):
        if not self.f0 > 0:
            raise DomainError(f"f0 must be positive, got {self.f0}")
        if not self.q0 > 1:
            raise DomainError(f"q0 must exceed 1, got {self.q0}")
        if not self.depth0_db > 0:
            raise DomainError(f"depth0_db must be positive, got {self.depth0_db}")
        if not 0 < self.kappa0 < 1:
            raise DomainError(f"kappa0 must lie in (0, 1), got {self.kappa0}")
        if not self.delta > 0:
            raise DomainError(f"delta must be positive, got {self.delta}")


DEFAULT_MODES = (
    ModeModel(f0=1.45e9, q0=120.0, depth0_db=22.0, kappa0=0.30, delta=2.0),
    ModeModel(f0=2.80e9, q0=150.0, depth0_db=18.0, kappa0=0.26, delta=1.6),
)


@dataclass(frozen=True)
class ResonatorModel:
    modes: tuple[ModeModel, ModeModel] = DEFAULT_MODES
    geometry: ResonatorGeometry = field(default_factory=ResonatorGeometry)

    def __post_init__(self):
        if len(self.modes) != 2:
            raise DomainError(f"exactly two modes required, got {len(self.modes)}")
        if not self.modes[0].f0 < self.modes[1].f0:
            raise DomainError("modes must be ordered by increasing f0")

    def to_dict(self) -> dict:
        return {
            "modes": [asdict(m) for m in self.modes],
            "geometry": asdict(self.geometry),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ResonatorModel":
        return cls(
            modes=tuple(ModeModel(**m) for m in data["modes"]),
            geometry=ResonatorGeometry(**data.get("geometry", {})),
        )


class LoadedMode(NamedTuple):
    f_res: float
    q_loaded: float
    depth_db: float


class Trace(NamedTuple):
    frequency: np.ndarray
    s21_db: np.ndarray


def effective_coupling(mode: ModeModel, z: float) -> float:
    if z < 0:
        raise DomainError(f"standoff z must be >= 0 mm, got {z}")
    return mode.kappa0 * np.exp(-z / mode.delta)


def loaded_resonance(
    mode: ModeModel,
    material: MaterialModel,
    z: float,
    tol_hz: float = 1e3,
    max_iter: int = 100,
) -> tuple[float, float]:
    """Loaded (f_res, q_loaded) for ``material`` at standoff ``z`` mm.

    The resonance depends on the permittivity at the resonance itself, so
    f_res is found by fixed-point iteration starting from the unloaded f0.
    """
    kappa = effective_coupling(mode, z)
    f = mode.f0
    for _ in range(max_iter):
        eps = permittivity_at(material, f)
        f_next = mode.f0 / np.sqrt(1.0 + kappa * (eps.eps_real - 1.0))
        if abs(f_next - f) < tol_hz:
            f = f_next
            break
        f = f_next
    else:
        raise ConvergenceError(
            f"f_res iteration for {material.name} did not converge in {max_iter} steps"
        )
    eps = permittivity_at(material, f)
    q = 1.0 / (1.0 / mode.q0 + kappa * eps.loss_tangent)
    return float(f), float(q)


def loaded_modes(
    resonator: ResonatorModel, material: MaterialModel | None, z: float
) -> tuple[LoadedMode, ...]:
    material = AIR if material is None else material
    out = []
    for mode in resonator.modes:
        f_res, q = loaded_resonance(mode, material, z)
        out.append(LoadedMode(f_res, q, mode.depth0_db * q / mode.q0))
    return tuple(out)


def lorentzian_db(frequency, f_res, q, depth_db):
    x = (frequency - f_res) / f_res
    return -depth_db / (1.0 + 4.0 * q * q * x * x)


def s21_response(
    resonator: ResonatorModel,
    material: MaterialModel | None,
    z: float,
    frequencies,
    noise_sigma_db: float = 0.0,
    seed: int | np.random.SeedSequence | None = 0,
    band: tuple[float, float] = DEFAULT_BAND,
) -> Trace:
    """Sampled |S21| in dB; ``material=None`` means an unloaded (air) sensor."""
    f = np.asarray(frequencies, dtype=float)
    if f.ndim != 1 or f.size == 0:
        raise DomainError("frequency grid must be a non-empty 1-D sequence")
    if f.size > 1 and np.any(np.diff(f) <= 0):
        raise DomainError("frequency grid must be strictly increasing")
    lo, hi = band
    if f[0] < lo or f[-1] > hi:
        raise DomainError(f"frequency grid [{f[0]:g}, {f[-1]:g}] Hz leaves band [{lo:g}, {hi:g}]")
    if noise_sigma_db < 0:
        raise DomainError("noise_sigma_db must be >= 0")

    s21 = np.zeros_like(f)
    for lm in loaded_modes(resonator, material, z):
        s21 += lorentzian_db(f, lm.f_res, lm.q_loaded, lm.depth_db)
    if noise_sigma_db > 0:
        rng = np.random.default_rng(seed)
        s21 += rng.normal(0.0, noise_sigma_db, size=f.size)
    return Trace(f, s21)

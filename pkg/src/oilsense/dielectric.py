"""Single-pole Debye permittivity models for the oil library."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np
from scipy.constants import epsilon_0

from .errors import DomainError


@dataclass(frozen=True)
class MaterialModel:
    name: str
    eps_static: float
    eps_inf: float
    tau: float
    sigma_dc: float = 0.0

    def __post_init__(self):
        if not (self.eps_static >= self.eps_inf >= 1.0):
            raise DomainError(
                f"{self.name}: need eps_static >= eps_inf >= 1, "
                f"got {self.eps_static}, {self.eps_inf}"
            )
        if not self.tau > 0:
            raise DomainError(f"{self.name}: tau must be positive, got {self.tau}")
        if not self.sigma_dc >= 0:
            raise DomainError(f"{self.name}: sigma_dc must be >= 0, got {self.sigma_dc}")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class ComplexPermittivity:
    eps_real: float | np.ndarray
    eps_imag: float | np.ndarray

    @property
    def loss_tangent(self):
        return self.eps_imag / self.eps_real


# Free space. Any positive tau works since the dispersion amplitude is zero.
AIR = MaterialModel("air", 1.0, 1.0, 1e-12)


def permittivity_at(model: MaterialModel, frequency) -> ComplexPermittivity:
    """Debye permittivity (plus DC conduction loss) at ``frequency`` in Hz.

    Scalars give scalar fields; arrays broadcast.
    """
    f = np.asarray(frequency, dtype=float)
    if np.any(~(f > 0)):
        raise DomainError(f"frequency must be positive, got {frequency!r}")
    omega = 2.0 * np.pi * f
    wt = omega * model.tau
    denom = 1.0 + wt * wt
    delta = model.eps_static - model.eps_inf
    real = model.eps_inf + delta / denom
    imag = delta * wt / denom
    if model.sigma_dc:
        imag = imag + model.sigma_dc / (omega * epsilon_0)
    if f.ndim == 0:
        return ComplexPermittivity(float(real), float(imag))
    return ComplexPermittivity(real, imag)


_DEFAULTS = (
    ("coconut", 2.95, 2.45, 55e-12),
    ("olive", 3.10, 2.50, 40e-12),
    ("peanut", 3.05, 2.50, 28e-12),
    ("soybean", 3.12, 2.55, 20e-12),
)


def default_material_library() -> tuple[MaterialModel, ...]:
    """The four default oils, sorted by name (label order)."""
    return tuple(sorted((MaterialModel(*row) for row in _DEFAULTS), key=lambda m: m.name))

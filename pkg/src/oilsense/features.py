"""Per-harmonic resonance descriptors extracted from swept S21 traces."""

from __future__ import annotations

from itertools import permutations
from typing import NamedTuple

import numpy as np
from scipy.signal import find_peaks

from .dataset import (
    RESONANCE_COLUMNS,
    SCHEMA_VERSION,
    STAGE_GENERATE,
    Dataset,
    derive_seed,
)
from .errors import BandEdgeError, DomainError, ExtractionError
from .resonator import DEFAULT_BAND, ResonatorModel, s21_response


class ModeFeatures(NamedTuple):
    f_res: float
    normalized_shift: float
    depth: float
    q_factor: float


class ResonanceFeatures(NamedTuple):
    modes: tuple[ModeFeatures, ModeFeatures]

    def as_row(self) -> list[float]:
        return [v for m in self.modes for v in m]


def parabolic_vertex(x, y):
    """Vertex (x, y) of the parabola through three points (any spacing)."""
    x0, x1, x2 = x
    y0, y1, y2 = y
    d0 = (y1 - y0) / (x1 - x0)
    d1 = (y2 - y1) / (x2 - x1)
    a = (d1 - d0) / (x2 - x0)
    if a == 0:
        return x1, y1
    b = d0 - a * (x0 + x1)
    xv = -b / (2 * a)
    yv = y0 + (xv - x0) * (d0 + a * (xv - x1))
    return xv, yv


def _crossing(f, s, start, stop, step, level):
    """Linear-interpolated frequency where ``s`` first rises through ``level``
    walking from index ``start`` toward ``stop``."""
    i = start
    while i != stop:
        j = i + step
        if s[j] >= level:
            return f[i] + (level - s[i]) * (f[j] - f[i]) / (s[j] - s[i])
        i = j
    raise BandEdgeError(f"half-depth crossing not found before band edge near {f[start]:.6g} Hz")


def _measure_dip(f, s, k, baseline):
    lo, hi = max(k - 1, 0), min(k + 1, len(f) - 1)
    if hi - lo < 2:
        raise BandEdgeError(f"dip at {f[k]:.6g} Hz sits on the band edge")
    f_res, s_min = parabolic_vertex(f[lo:hi + 1], s[lo:hi + 1])
    depth = baseline - s_min
    # Width at half the dip depth: for the Lorentzian notch this is f_res / Q.
    level = s_min + depth / 2.0
    left = _crossing(f, s, k, 0, -1, level)
    right = _crossing(f, s, k, len(f) - 1, 1, level)
    return f_res, depth, f_res / (right - left)


def extract(frequency, s21_db, unloaded_f0s, prominence_db: float = 3.0) -> ResonanceFeatures:
    """Locate the two notches of a trace and measure each one.

    Dips are found as minima with at least ``prominence_db`` prominence,
    then assigned to modes by closeness to ``unloaded_f0s``.
    """
    f = np.asarray(frequency, dtype=float)
    s = np.asarray(s21_db, dtype=float)
    if f.shape != s.shape or f.ndim != 1 or f.size < 5:
        raise DomainError("trace needs matching 1-D frequency and S21 arrays (>= 5 points)")
    baseline = float(np.median(s))
    peaks, _ = find_peaks(-s, prominence=prominence_db)
    if len(peaks) != 2:
        raise ExtractionError(len(peaks))

    dips = [_measure_dip(f, s, k, baseline) for k in peaks]
    f0s = tuple(float(v) for v in unloaded_f0s)
    order = min(
        permutations(range(2)),
        key=lambda p: sum(abs(dips[p[m]][0] - f0s[m]) for m in range(2)),
    )
    modes = []
    for m, d in enumerate(order):
        f_res, depth, q = dips[d]
        modes.append(ModeFeatures(f_res, (f_res - f0s[m]) / f0s[m], depth, q))
    return ResonanceFeatures(tuple(modes))


def default_resonance_f_grid(n: int = 3001, start: float = DEFAULT_BAND[0], stop: float = DEFAULT_BAND[1]):
    return np.linspace(start, stop, n)


def generate_feature_dataset(
    resonator: ResonatorModel,
    materials,
    z_grid,
    f_grid,
    noise_sigma_db: float = 0.05,
    seed: int = 0,
    band=DEFAULT_BAND,
    prominence_db: float = 3.0,
) -> Dataset:
    """One row per (oil, z): height plus four descriptors per mode."""
    materials = sorted(materials, key=lambda m: m.name)
    if not materials:
        raise DomainError("at least one material is required")
    z = np.asarray(z_grid, dtype=float)
    f = np.asarray(f_grid, dtype=float)
    f0s = [m.f0 for m in resonator.modes]
    rows, labels = [], []
    for label, material in enumerate(materials):
        for iz, zz in enumerate(z):
            trace = s21_response(
                resonator, material, float(zz), f, noise_sigma_db,
                seed=derive_seed(seed, STAGE_GENERATE, label, iz), band=band,
            )
            feats = extract(trace.frequency, trace.s21_db, f0s, prominence_db)
            rows.append([float(zz)] + feats.as_row())
            labels.append(label)
    manifest = {
        "schema_version": SCHEMA_VERSION,
        "feature_mode": "resonance",
        "seed": int(seed),
        "noise_sigma_db": float(noise_sigma_db),
        "prominence_db": float(prominence_db),
        "band_hz": [float(band[0]), float(band[1])],
        "z_grid_mm": z.tolist(),
        "f_grid_hz": f.tolist(),
        "materials": [m.to_dict() for m in materials],
        "resonator": resonator.to_dict(),
    }
    return Dataset(np.asarray(rows), np.asarray(labels), RESONANCE_COLUMNS,
                   tuple(m.name for m in materials), manifest=manifest)

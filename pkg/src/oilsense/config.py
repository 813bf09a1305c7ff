"""Run configuration: YAML file + CLI overrides, validated with pydantic."""

from __future__ import annotations

import hashlib
import json
from pathlib import Path
from typing import Literal, Optional

import numpy as np
import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from . import dataset as ds_mod
from .dielectric import MaterialModel, default_material_library
from .errors import ArtifactIOError, ConfigError
from .resonator import DEFAULT_MODES, ModeModel, ResonatorGeometry, ResonatorModel


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class MaterialParams(_Strict):
    eps_static: float
    eps_inf: float
    tau: float
    sigma_dc: float = 0.0


class ModeParams(_Strict):
    f0: float
    q0: float
    depth0_db: float
    kappa0: float
    delta: float


class GeometryParams(_Strict):
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


def _default_materials():
    return {
        m.name: MaterialParams(eps_static=m.eps_static, eps_inf=m.eps_inf, tau=m.tau, sigma_dc=m.sigma_dc)
        for m in default_material_library()
    }


def _default_modes():
    return [ModeParams(**vars(m)) for m in DEFAULT_MODES]


class ResonatorParams(_Strict):
    modes: list[ModeParams] = Field(default_factory=_default_modes)
    geometry: GeometryParams = Field(default_factory=GeometryParams)


class ZGrid(_Strict):
    start_mm: float = 0.001
    stop_mm: float = 50.0
    points: int = 100
    spacing: Literal["geometric", "linear"] = "geometric"


class FGrid(_Strict):
    start_hz: float = 1.0e9
    stop_hz: float = 4.0e9
    points: int = 301
    # denser grid used only for resonance-feature extraction
    resonance_points: int = 3001


class SplitParams(_Strict):
    train_fraction: float = 0.80
    stratified: bool = True
    trace_grouped: bool = False


class LogisticParams(_Strict):
    learning_rate: float = 0.1
    l2_penalty: float = 1e-4
    epochs: int = 500


class KnnParams(_Strict):
    k: int = 5


class ForestParams(_Strict):
    n_trees: int = 100
    max_depth: Optional[int] = 20
    min_leaf: int = 1
    features_per_split: Optional[int] = None


class SvmParams(_Strict):
    c_penalty: float = 1.0
    kernel: Literal["rbf", "linear"] = "rbf"
    gamma: Optional[float] = None
    tolerance: float = 1e-3
    max_passes: int = 10
    max_rows: int = 20000


class ModelParams(_Strict):
    logistic: LogisticParams = Field(default_factory=LogisticParams)
    knn: KnnParams = Field(default_factory=KnnParams)
    forest: ForestParams = Field(default_factory=ForestParams)
    svm: SvmParams = Field(default_factory=SvmParams)


class RunConfig(_Strict):
    materials: dict[str, MaterialParams] = Field(default_factory=_default_materials)
    resonator: ResonatorParams = Field(default_factory=ResonatorParams)
    z_grid: ZGrid = Field(default_factory=ZGrid)
    f_grid: FGrid = Field(default_factory=FGrid)
    noise_sigma_db: float = 0.05
    prominence_db: float = 3.0
    feature_mode: Literal["raw", "resonance"] = "raw"
    split: SplitParams = Field(default_factory=SplitParams)
    models: ModelParams = Field(default_factory=ModelParams)
    seed: int = 42
    out_dir: str = "run"

    @field_validator("materials")
    @classmethod
    def _non_empty(cls, v):
        if not v:
            raise ValueError("at least one material is required")
        return v

    # -- domain objects ---------------------------------------------------

    def material_models(self) -> list[MaterialModel]:
        return sorted((MaterialModel(name, **p.model_dump()) for name, p in self.materials.items()),
                      key=lambda m: m.name)

    def resonator_model(self) -> ResonatorModel:
        return ResonatorModel(
            modes=tuple(ModeModel(**m.model_dump()) for m in self.resonator.modes),
            geometry=ResonatorGeometry(**self.resonator.geometry.model_dump()),
        )

    def z_values(self) -> np.ndarray:
        g = self.z_grid
        if g.spacing == "geometric":
            return ds_mod.default_z_grid(g.points, g.start_mm, g.stop_mm)
        return np.linspace(g.start_mm, g.stop_mm, g.points)

    def f_values(self) -> np.ndarray:
        g = self.f_grid
        n = g.resonance_points if self.feature_mode == "resonance" else g.points
        return np.linspace(g.start_hz, g.stop_hz, n)

    @property
    def band(self) -> tuple[float, float]:
        return (self.f_grid.start_hz, self.f_grid.stop_hz)

    # -- identity ---------------------------------------------------------

    def hashable_dict(self) -> dict:
        """Everything that affects results; the output location does not."""
        return self.model_dump(mode="json", exclude={"out_dir"})

    def config_hash(self) -> str:
        blob = json.dumps(self.hashable_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()

    def to_yaml(self) -> str:
        return yaml.safe_dump(self.model_dump(mode="json"), sort_keys=False)


def _deep_merge(base: dict, over: dict) -> dict:
    out = dict(base)
    for key, value in over.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict) and key != "materials":
            out[key] = _deep_merge(out[key], value)
        else:
            out[key] = value
    return out


def load_config(path=None, **overrides) -> RunConfig:
    """Read YAML (if given), apply non-None overrides, validate.

    Override keys: seed, oils (list of names), feature_mode, out_dir, models.
    """
    data: dict = {}
    if path is not None:
        path = Path(path)
        try:
            text = path.read_text()
        except OSError as exc:
            raise ArtifactIOError(f"cannot read config {path}: {exc}") from exc
        try:
            data = yaml.safe_load(text) or {}
        except yaml.YAMLError as exc:
            raise ConfigError(f"{path}: invalid YAML: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError(f"{path}: top level must be a mapping")
    oils = overrides.pop("oils", None)
    flat = {k: v for k, v in overrides.items() if v is not None}
    try:
        cfg = RunConfig.model_validate(_deep_merge(data, flat))
    except ValidationError as exc:
        raise ConfigError(f"invalid configuration: {exc}") from exc
    if oils:
        unknown = sorted(set(oils) - set(cfg.materials))
        if unknown:
            raise ConfigError(f"unknown oil(s) {unknown}; configured: {sorted(cfg.materials)}")
        cfg = cfg.model_copy(update={"materials": {k: v for k, v in cfg.materials.items() if k in oils}})
    try:
        cfg.material_models()
        cfg.resonator_model()
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    return cfg

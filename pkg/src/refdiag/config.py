"""Generator configuration: one serializable object covering scene sampling,
rendering, and expression generation, with a stable content hash."""

import hashlib
import json
from dataclasses import dataclass, field

from .errors import ConfigError
from .families import CATEGORIES
from .generate import GenerationSettings
from .scene import DEFAULT_CAMERA, DEFAULT_SIZE_RADII, CameraSpec, SceneConfig


@dataclass(frozen=True)
class GeneratorConfig:
    seed: int = 0
    n_scenes: int = 100
    n_per_image: int = 10
    count_min: int = 3
    count_max: int = 10
    extent: float = 3.0
    min_distance: float = 0.8
    relation_margin: float = 0.15
    placement_attempts: int = 50
    split_condition: str = "none"
    size_radii: dict = field(default_factory=lambda: dict(DEFAULT_SIZE_RADII))
    camera: CameraSpec = DEFAULT_CAMERA
    ordinal_decor_prob: float = GenerationSettings.ordinal_decor_prob
    visible_decor_prob: float = GenerationSettings.visible_decor_prob
    retry_cap: int = GenerationSettings.retry_cap
    # None -> automatic weighting (small categories doubled); otherwise a
    # {category: weight} table applied to every family in the category.
    category_weights: dict = None

    def validate(self):
        self.scene_config().validate()
        if self.n_scenes < 1 or self.n_per_image < 1:
            raise ConfigError("n_scenes and n_per_image must be >= 1")
        for name in ("ordinal_decor_prob", "visible_decor_prob"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ConfigError(f"{name} out of range: {v}")
        if self.ordinal_decor_prob + self.visible_decor_prob > 1.0:
            raise ConfigError("decoration probabilities sum above 1")
        if self.retry_cap < 1:
            raise ConfigError("retry_cap must be >= 1")
        if self.category_weights is not None:
            unknown = set(self.category_weights) - set(CATEGORIES)
            if unknown:
                raise ConfigError(f"unknown categories in weight table: {sorted(unknown)}")
            if any(w <= 0 for w in self.category_weights.values()):
                raise ConfigError("category weights must be positive")
        return self

    def scene_config(self):
        return SceneConfig(
            count_min=self.count_min,
            count_max=self.count_max,
            extent=self.extent,
            min_distance=self.min_distance,
            relation_margin=self.relation_margin,
            placement_attempts=self.placement_attempts,
            split_condition=self.split_condition,
            size_radii=dict(self.size_radii),
            camera=self.camera,
        )

    def settings(self):
        return GenerationSettings(
            ordinal_decor_prob=self.ordinal_decor_prob,
            visible_decor_prob=self.visible_decor_prob,
            retry_cap=self.retry_cap,
        )

    def catalog(self):
        from .families import Catalog, load_catalog

        catalog = load_catalog()
        if self.category_weights is None:
            return catalog
        weights = tuple(self.category_weights.get(f.category, 1.0) for f in catalog.families)
        return Catalog(families=catalog.families, weights=weights)

    def to_dict(self):
        return {
            "seed": self.seed,
            "n_scenes": self.n_scenes,
            "n_per_image": self.n_per_image,
            "count_min": self.count_min,
            "count_max": self.count_max,
            "extent": self.extent,
            "min_distance": self.min_distance,
            "relation_margin": self.relation_margin,
            "placement_attempts": self.placement_attempts,
            "split_condition": self.split_condition,
            "size_radii": dict(self.size_radii),
            "camera": self.camera.to_dict(),
            "ordinal_decor_prob": self.ordinal_decor_prob,
            "visible_decor_prob": self.visible_decor_prob,
            "retry_cap": self.retry_cap,
            "category_weights": self.category_weights,
        }

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        camera = CameraSpec.from_dict(d["camera"]) if "camera" in d else DEFAULT_CAMERA
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config fields: {sorted(unknown)}")
        d["camera"] = camera
        return cls(**d).validate()


def config_hash(config):
    """Stable content hash of a GeneratorConfig (or plain config dict)."""
    doc = config.to_dict() if hasattr(config, "to_dict") else config
    blob = json.dumps(doc, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:16]

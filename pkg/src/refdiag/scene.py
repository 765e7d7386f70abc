"""Block-world scene model: objects, camera, directions, and sampling.

Scenes are immutable after construction and safe to share across workers.
All sampling is a pure function of (seed, config).
"""

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigError, InvalidReferenceError, SamplingExhaustedError
from .vocab import COLORS, DIRECTIONS, MATERIALS, SHAPES, SIZES

# Shape-color tables for the compositional splits.  Condition "A" restricts
# cube/cylinder colors to disjoint halves of the palette; "B" swaps them.
# Spheres are unconstrained in both.
CONDITION_TABLES = {
    "A": {
        "cube": ("gray", "blue", "brown", "yellow"),
        "cylinder": ("red", "green", "purple", "cyan"),
        "sphere": COLORS,
    },
    "B": {
        "cube": ("red", "green", "purple", "cyan"),
        "cylinder": ("gray", "blue", "brown", "yellow"),
        "sphere": COLORS,
    },
}

DEFAULT_SIZE_RADII = {"large": 0.7, "small": 0.35}

# Default oblique camera; vertical_fov is tuned so the full ground-plane
# extent (plus object height) projects inside a 320x320 frame.
DEFAULT_IMAGE_SIZE = (320, 320)


@dataclass(frozen=True)
class CameraSpec:
    eye: tuple
    look_at: tuple
    up: tuple
    vertical_fov: float
    image_size: tuple

    def validate(self):
        if tuple(self.eye) == tuple(self.look_at):
            raise ConfigError("camera eye and look_at coincide")
        if not 0.0 < self.vertical_fov < 180.0:
            raise ConfigError(f"vertical_fov out of range: {self.vertical_fov}")
        w, h = self.image_size
        if w <= 0 or h <= 0:
            raise ConfigError(f"bad image size: {self.image_size}")

    def to_dict(self):
        return {
            "eye": list(self.eye),
            "look_at": list(self.look_at),
            "up": list(self.up),
            "vertical_fov": self.vertical_fov,
            "image_size": list(self.image_size),
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            eye=tuple(d["eye"]),
            look_at=tuple(d["look_at"]),
            up=tuple(d["up"]),
            vertical_fov=float(d["vertical_fov"]),
            image_size=tuple(d["image_size"]),
        )


DEFAULT_CAMERA = CameraSpec(
    eye=(7.5, -6.5, 5.3),
    look_at=(0.0, 0.0, 0.0),
    up=(0.0, 0.0, 1.0),
    vertical_fov=55.0,
    image_size=DEFAULT_IMAGE_SIZE,
)


@dataclass(frozen=True)
class ObjectSpec:
    id: int
    shape: str
    color: str
    size: str
    material: str
    position: tuple  # (x, y, z) with z == base_radius (rests on the plane)
    rotation: float  # degrees about the vertical axis
    base_radius: float

    def attribute(self, kind):
        return getattr(self, kind)

    def to_dict(self):
        return {
            "id": self.id,
            "shape": self.shape,
            "color": self.color,
            "size": self.size,
            "material": self.material,
            "3d_coords": list(self.position),
            "rotation": self.rotation,
        }

    @classmethod
    def from_dict(cls, d):
        coords = tuple(float(c) for c in d["3d_coords"])
        return cls(
            id=int(d["id"]),
            shape=d["shape"],
            color=d["color"],
            size=d["size"],
            material=d["material"],
            position=coords,
            rotation=float(d["rotation"]),
            # z coordinate doubles as the base radius (objects rest on the plane)
            base_radius=coords[2],
        )


@dataclass(frozen=True)
class SceneConfig:
    count_min: int = 3
    count_max: int = 10
    extent: float = 3.0  # ground plane is [-extent, +extent]^2
    min_distance: float = 0.8  # planar center-to-center separation
    relation_margin: float = 0.15
    placement_attempts: int = 50
    split_condition: str = "none"  # "none" | "A" | "B"
    size_radii: dict = field(default_factory=lambda: dict(DEFAULT_SIZE_RADII))
    camera: CameraSpec = DEFAULT_CAMERA

    def validate(self):
        if not 1 <= self.count_min <= self.count_max:
            raise ConfigError(f"bad object count range [{self.count_min}, {self.count_max}]")
        if self.extent <= 0 or self.min_distance < 0 or self.relation_margin < 0:
            raise ConfigError("extent/min_distance/relation_margin must be positive")
        if self.placement_attempts < 1:
            raise ConfigError("placement_attempts must be >= 1")
        if self.split_condition not in ("none", "A", "B"):
            raise ConfigError(f"unknown split condition: {self.split_condition!r}")
        for size in SIZES:
            if self.size_radii.get(size, 0) <= 0:
                raise ConfigError(f"missing or non-positive radius for size {size!r}")
        self.camera.validate()


@dataclass(frozen=True)
class SceneGraph:
    objects: tuple
    directions: dict  # name -> unit (x, y, z) with z == 0
    camera: CameraSpec
    split_condition: str
    seed: int
    relation_margin: float = SceneConfig.relation_margin

    def ids(self):
        return frozenset(o.id for o in self.objects)

    def object_by_id(self, oid):
        for o in self.objects:
            if o.id == oid:
                return o
        raise InvalidReferenceError(f"no object with id {oid} in scene")

    def to_dict(self):
        return {
            "objects": [o.to_dict() for o in self.objects],
            "directions": {k: list(v) for k, v in self.directions.items()},
            "camera": self.camera.to_dict(),
            "split_condition": self.split_condition,
            "seed": self.seed,
            "relation_margin": self.relation_margin,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            objects=tuple(ObjectSpec.from_dict(o) for o in d["objects"]),
            directions={k: tuple(v) for k, v in d["directions"].items()},
            camera=CameraSpec.from_dict(d["camera"]),
            split_condition=d["split_condition"],
            seed=int(d["seed"]),
            relation_margin=float(d.get("relation_margin", SceneConfig.relation_margin)),
        )


def directions_from_camera(camera):
    """Ground-plane direction vectors implied by the camera orientation.

    `behind` points away from the camera (projected onto the plane), `right`
    is the image-right direction projected onto the plane; `front`/`left` are
    their exact negations.
    """
    eye = np.asarray(camera.eye, dtype=float)
    look = np.asarray(camera.look_at, dtype=float)
    up = np.asarray(camera.up, dtype=float)
    forward = look - eye
    behind = np.array([forward[0], forward[1], 0.0])
    norm = math.sqrt(behind[0] ** 2 + behind[1] ** 2)
    if norm == 0.0:
        raise ConfigError("camera looks straight down; plane directions undefined")
    behind /= norm
    right = np.cross(forward, up)
    right[2] = 0.0
    rnorm = math.sqrt(right[0] ** 2 + right[1] ** 2)
    if rnorm == 0.0:
        raise ConfigError("camera up parallel to view direction")
    right /= rnorm
    return {
        "behind": tuple(behind),
        "front": tuple(-behind),
        "right": tuple(right),
        "left": tuple(-right),
    }


def scene_rng(seed, *key):
    """Deterministic split-seed stream: same (seed, key) -> same stream."""
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=tuple(key)))


def _allowed_colors(shape, split_condition):
    if split_condition == "none":
        return COLORS
    return CONDITION_TABLES[split_condition][shape]


def sample_scene(seed, config=None):
    """Sample a random scene; identical (seed, config) gives an identical scene.

    Raises SamplingExhaustedError when an object cannot be placed at the
    configured minimum pairwise distance within the attempt budget.
    """
    config = config or SceneConfig()
    config.validate()
    rng = scene_rng(seed)
    count = int(rng.integers(config.count_min, config.count_max + 1))
    extent = config.extent
    objects = []
    for idx in range(count):
        shape = SHAPES[rng.integers(len(SHAPES))]
        size = SIZES[rng.integers(len(SIZES))]
        colors = _allowed_colors(shape, config.split_condition)
        color = colors[rng.integers(len(colors))]
        material = MATERIALS[rng.integers(len(MATERIALS))]
        rotation = float(rng.uniform(0.0, 360.0))
        radius = config.size_radii[size]
        for _attempt in range(config.placement_attempts):
            x = float(rng.uniform(-extent, extent))
            y = float(rng.uniform(-extent, extent))
            ok = all(
                math.hypot(x - o.position[0], y - o.position[1]) >= config.min_distance
                for o in objects
            )
            if ok:
                objects.append(
                    ObjectSpec(
                        id=idx,
                        shape=shape,
                        color=color,
                        size=size,
                        material=material,
                        position=(x, y, radius),
                        rotation=rotation,
                        base_radius=radius,
                    )
                )
                break
        else:
            raise SamplingExhaustedError(
                f"could not place object {idx} at min distance {config.min_distance} "
                f"after {config.placement_attempts} attempts (seed={seed})"
            )
    return SceneGraph(
        objects=tuple(objects),
        directions=directions_from_camera(config.camera),
        camera=config.camera,
        split_condition=config.split_condition,
        seed=seed,
        relation_margin=config.relation_margin,
    )


def spatial_related(scene, anchor_id, direction):
    """Objects whose displacement from the anchor along `direction` exceeds
    the scene's relation margin.  The anchor itself is always excluded."""
    anchor = scene.object_by_id(anchor_id)
    dvec = scene.directions[direction]
    out = set()
    for o in scene.objects:
        if o.id == anchor_id:
            continue
        disp = (
            o.position[0] - anchor.position[0],
            o.position[1] - anchor.position[1],
            o.position[2] - anchor.position[2],
        )
        if disp[0] * dvec[0] + disp[1] * dvec[1] + disp[2] * dvec[2] > scene.relation_margin:
            out.add(o.id)
    return frozenset(out)


def order_along(scene, ids, direction):
    """Order ids starting from the `direction` side ("from left" puts the
    leftmost object first).  Ties break by ascending object id."""
    dvec = scene.directions[direction]

    def key(oid):
        p = scene.object_by_id(oid).position
        return (-(p[0] * dvec[0] + p[1] * dvec[1] + p[2] * dvec[2]), oid)

    return sorted(ids, key=key)


def validate_scene(scene, config=None):
    """Check every scene invariant; raises on the first violation."""
    config = config or SceneConfig()
    dirs = scene.directions
    for name in DIRECTIONS:
        v = np.asarray(dirs[name])
        if abs(np.linalg.norm(v) - 1.0) > 1e-9:
            raise ConfigError(f"direction {name} not unit length")
    for a, b in (("left", "right"), ("front", "behind")):
        if abs(float(np.dot(dirs[a], dirs[b])) + 1.0) > 1e-9:
            raise ConfigError(f"directions {a}/{b} are not exact opposites")
    seen = set()
    for o in scene.objects:
        if o.id in seen:
            raise ConfigError(f"duplicate object id {o.id}")
        seen.add(o.id)
        if o.base_radius <= 0:
            raise ConfigError(f"object {o.id} has non-positive radius")
        x, y, z = o.position
        if abs(x) > config.extent or abs(y) > config.extent:
            raise ConfigError(f"object {o.id} outside ground-plane extent")
        if z != o.base_radius:
            raise ConfigError(f"object {o.id} does not rest on the plane")
        if scene.split_condition in CONDITION_TABLES:
            allowed = CONDITION_TABLES[scene.split_condition][o.shape]
            if o.color not in allowed:
                raise ConfigError(
                    f"object {o.id}: {o.shape}/{o.color} violates split "
                    f"condition {scene.split_condition}"
                )
    for i, a in enumerate(scene.objects):
        for b in scene.objects[i + 1:]:
            d = math.hypot(a.position[0] - b.position[0], a.position[1] - b.position[1])
            if d < config.min_distance - 1e-12:
                raise ConfigError(f"objects {a.id} and {b.id} closer than min distance")
    scene.camera.validate()


def with_objects(scene, objects):
    """Copy of the scene with a different object tuple (test helper)."""
    return replace(scene, objects=tuple(objects))

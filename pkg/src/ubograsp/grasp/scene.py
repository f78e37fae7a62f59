"""Objects, bundled grasp scenes and the plain-text polygon format."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import geometry
from .hand import HandModel, two_finger_hand

DEFAULT_FRICTION = 0.5
DEFAULT_ROTATION_BOUND = math.radians(60.0)
PALM_GAP = 0.002
PENETRATION_RANGE = 0.01


@dataclass(frozen=True)
class ObjectShape:
    """Simple counter-clockwise polygon, vertices in meters."""

    name: str
    boundary: np.ndarray

    def __post_init__(self):
        V = np.asarray(self.boundary, dtype=float)
        if V.ndim != 2 or V.shape[1] != 2 or len(V) < 3:
            raise ValueError("a polygon needs at least 3 two-dimensional vertices")
        if geometry.signed_area(V) <= 0:
            raise ValueError(f"{self.name}: vertices must be counter-clockwise")
        if not geometry.is_simple(V):
            raise ValueError(f"{self.name}: polygon self-intersects")
        V.setflags(write=False)
        object.__setattr__(self, "boundary", V)

    @property
    def centroid(self) -> np.ndarray:
        return geometry.centroid(self.boundary)

    @property
    def max_radius(self) -> float:
        return float(np.max(np.linalg.norm(self.boundary - self.centroid, axis=1)))

    def bbox(self):
        return self.boundary.min(axis=0), self.boundary.max(axis=0)


def load_polygon(path, name=None) -> ObjectShape:
    """Read one ``x y`` pair per line; blank lines and ``#`` comments are skipped."""
    path = Path(path)
    pts = []
    for lineno, line in enumerate(path.read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ValueError(f"{path}:{lineno}: expected 'x y', got {line!r}")
        pts.append((float(parts[0]), float(parts[1])))
    return ObjectShape(name or path.stem, np.array(pts))


def save_polygon(shape: ObjectShape, path) -> None:
    lines = [f"# {shape.name}"] + [f"{x!r} {y!r}" for x, y in shape.boundary.tolist()]
    Path(path).write_text("\n".join(lines) + "\n")


def regular_polygon(radius, n, center=(0.0, 0.0), phase=None, name="disk") -> ObjectShape:
    """n-gon approximating a disk; by default flat edges face +-x."""
    if phase is None:
        phase = math.pi / n
    a = phase + 2.0 * math.pi * np.arange(n) / n
    V = np.stack([center[0] + radius * np.cos(a), center[1] + radius * np.sin(a)], axis=1)
    return ObjectShape(name, V)


def rounded_rectangle(width, height, radius, arc_points=6, name="box") -> ObjectShape:
    hw, hh = 0.5 * width, 0.5 * height
    corners = [(hw - radius, -hh + radius, -0.5), (hw - radius, hh - radius, 0.0),
               (-hw + radius, hh - radius, 0.5), (-hw + radius, -hh + radius, 1.0)]
    pts = []
    for cx, cy, start in corners:
        for t in np.linspace(0.0, 0.5, arc_points):
            a = math.pi * (start + t)
            pts.append((cx + radius * math.cos(a), cy + radius * math.sin(a)))
    return ObjectShape(name, np.array(pts))


def glass() -> ObjectShape:
    return rounded_rectangle(0.07, 0.09, 0.01, name="glass")


def bottle() -> ObjectShape:
    V = [
        (-0.032, -0.06), (0.032, -0.06), (0.0375, -0.054), (0.0375, 0.0),
        (0.02, 0.05), (0.012, 0.07), (-0.012, 0.07), (-0.02, 0.05), (-0.0375, 0.0),
        (-0.0375, -0.054),
    ]
    return ObjectShape("bottle", np.array(V))


def mug() -> ObjectShape:
    """Mug body with a hook-shaped handle on the facet facing the hand.

    The handle's right arm stops 4 mm short of the body, so the outline stays
    a simple polygon while the handle opening is reachable from outside.
    """
    V = [
        (-0.04, -0.045), (-0.02, -0.045), (-0.02, -0.08), (0.02, -0.08),
        (0.02, -0.049), (0.012, -0.049), (0.012, -0.072), (-0.012, -0.072),
        (-0.012, -0.045), (0.04, -0.045), (0.04, 0.045), (-0.04, 0.045),
    ]
    return ObjectShape("mug", np.array(V))


OBJECTS = {"glass": glass, "bottle": bottle, "mug": mug}


@dataclass(frozen=True)
class GraspScene:
    """Object, hand and the box of pose offsets explored around a canonical pose.

    Poses are ``(x, y, theta)`` of the palm center in the world frame. A
    query ``u`` in [0,1]^dim maps affinely onto ``offset_lower ..
    offset_upper``; in 2-D mode only the two translations vary.
    """

    object: ObjectShape
    hand: HandModel
    canonical_pose: tuple
    offset_lower: tuple
    offset_upper: tuple
    dim: int = 2
    friction: float = DEFAULT_FRICTION
    torque_scale: float = field(default=0.0)

    def __post_init__(self):
        if self.dim not in (2, 3):
            raise ValueError("scene dimension must be 2 or 3")
        lo = np.asarray(self.offset_lower, dtype=float)
        hi = np.asarray(self.offset_upper, dtype=float)
        if lo.shape != (3,) or hi.shape != (3,) or np.any(hi < lo):
            raise ValueError("offset bounds must be 3-vectors with lower <= upper")
        if not math.isclose(lo[2], -hi[2], abs_tol=1e-15):
            raise ValueError("rotation bounds must be symmetric about 0")
        if self.torque_scale <= 0:
            object.__setattr__(self, "torque_scale", self.object.max_radius)

    def offsets(self, u) -> np.ndarray:
        u = np.atleast_1d(np.asarray(u, dtype=float))
        if u.size != self.dim:
            raise ValueError(f"query has dimension {u.size}, scene expects {self.dim}")
        lo = np.asarray(self.offset_lower, dtype=float)
        hi = np.asarray(self.offset_upper, dtype=float)
        out = np.zeros(3)
        out[: self.dim] = lo[: self.dim] + u * (hi[: self.dim] - lo[: self.dim])
        return out

    def pose(self, u) -> np.ndarray:
        return np.asarray(self.canonical_pose, dtype=float) + self.offsets(u)

    def with_dim(self, dim: int) -> "GraspScene":
        return GraspScene(
            self.object, self.hand, self.canonical_pose, self.offset_lower,
            self.offset_upper, dim, self.friction, self.torque_scale,
        )


def hand_reach(hand: HandModel, samples: int = 1001) -> float:
    """Largest height above the palm that any finger link reaches while closing."""
    s = np.linspace(0.0, 1.0, samples)
    return float(max(f.chain(s)[..., 1].max() for f in hand.fingers))


def make_scene(
    shape: ObjectShape,
    dim: int = 2,
    hand: HandModel | None = None,
    friction: float = DEFAULT_FRICTION,
    rotation_bound: float = DEFAULT_ROTATION_BOUND,
) -> GraspScene:
    """Scene with the palm parallel to the object's lowest facet, just clear of it.

    Lateral offsets span the object's width; the approach offset runs from
    1 cm into the facet back to the distance where the fingers can no longer
    reach it.
    """
    hand = hand or two_finger_hand()
    reach = hand_reach(hand)
    (xmin, ymin), (xmax, _) = shape.bbox()
    canonical = (0.5 * (xmin + xmax), ymin - PALM_GAP, 0.0)
    half_w = 0.5 * (xmax - xmin)
    lower = (-half_w, -reach, -rotation_bound)
    upper = (half_w, PENETRATION_RANGE + PALM_GAP, rotation_bound)
    return GraspScene(shape, hand, canonical, lower, upper, dim, friction)


def bundled_scene(name: str, dim: int = 2) -> GraspScene:
    try:
        shape = OBJECTS[name]()
    except KeyError:
        raise ValueError(f"unknown object {name!r}; choose from {sorted(OBJECTS)}") from None
    return make_scene(shape, dim)

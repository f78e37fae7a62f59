"""Hand placement, synergy closing and the grasp wrench volume metric."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import ContractError
from . import geometry
from .hull import hull_volume
from .scene import GraspScene

SYNERGY_STEP = 1e-3
TOUCH_DISTANCE = 1e-6
BISECTION_STEPS = 60
CHUNK = 100


@dataclass(frozen=True)
class Contact:
    point: np.ndarray  # on the object boundary, world frame
    normal: np.ndarray  # unit, pointing into the object
    finger: int
    link: int


@dataclass(frozen=True)
class GraspOutcome:
    quality: float
    colliding_joints: int
    contacts: tuple = ()

    @property
    def collided(self) -> bool:
        return self.colliding_joints >= 1


def to_world(points, pose) -> np.ndarray:
    x, y, theta = pose
    R = geometry.rotation(theta)
    return np.asarray(points, dtype=float) @ R.T + np.array([x, y])


def hand_links_world(scene: GraspScene, pose, s=0.0):
    """Palm segment and every finger chain in world coordinates at synergy ``s``."""
    palm = to_world(scene.hand.palm(), pose)
    chains = [to_world(f.chain(s), pose) for f in scene.hand.fingers]
    return palm, chains


def colliding_joint_count(scene: GraspScene, pose) -> int:
    """Joints with an adjacent link (palm included) touching or inside the object."""
    V = scene.object.boundary
    palm, chains = hand_links_world(scene, pose, 0.0)
    palm_hit = bool(geometry.segments_hit_polygon(palm[0], palm[1], V))
    n = 0
    for chain in chains:
        hits = geometry.segments_hit_polygon(chain[:-1], chain[1:], V)
        for j in range(len(hits)):
            before = palm_hit if j == 0 else hits[j - 1]
            if before or hits[j]:
                n += 1
    return n


def place_hand(scene: GraspScene, u):
    """Pose for query ``u`` and the number of joints colliding in the open hand."""
    pose = scene.pose(u)
    return pose, colliding_joint_count(scene, pose)


def _finger_distances(finger, s_values, pose, V):
    """Per-link distance to the object at each synergy value, ``(len(s), k)``."""
    pts = to_world(finger.chain(s_values), pose)
    return geometry.segments_polygon_distance(pts[:, :-1], pts[:, 1:], V)


def _first_touch(finger, pose, V, step):
    """Synergy bracket ``(s_free, s_touch)`` of the first touch, or None."""
    n_steps = int(round(1.0 / step))
    grid = np.arange(n_steps + 1) * step
    for start in range(0, n_steps + 1, CHUNK):
        s_chunk = grid[start : start + CHUNK]
        touching = (_finger_distances(finger, s_chunk, pose, V) <= TOUCH_DISTANCE).any(axis=1)
        if touching.any():
            k = start + int(np.argmax(touching))
            if k == 0:
                return 0.0, 0.0
            lo, hi = grid[k - 1], grid[k]
            for _ in range(BISECTION_STEPS):
                mid = 0.5 * (lo + hi)
                if mid <= lo or mid >= hi:
                    break
                d = _finger_distances(finger, np.array([mid]), pose, V)[0]
                if np.any(d <= TOUCH_DISTANCE):
                    hi = mid
                else:
                    lo = mid
            return lo, hi
    return None


def _inward_normal(V, edge, t, boundary_pt, link_pt):
    n = len(V)
    a, b = V[edge], V[(edge + 1) % n]
    if 1e-9 < t < 1.0 - 1e-9:
        e = b - a
        return np.array([-e[1], e[0]]) / np.linalg.norm(e)
    v = boundary_pt - link_pt
    norm = np.linalg.norm(v)
    if norm > 1e-12:
        return v / norm
    # contact exactly at a vertex: average the two incident edge normals
    i = edge if t <= 0.5 else (edge + 1) % n
    e1 = V[i] - V[i - 1]
    e2 = V[(i + 1) % n] - V[i]
    m = np.array([-e1[1], e1[0]]) / np.linalg.norm(e1) + np.array([-e2[1], e2[0]]) / np.linalg.norm(e2)
    return m / np.linalg.norm(m)


def close_fingers(scene: GraspScene, pose, step: float = SYNERGY_STEP):
    """Close every finger along the synergy until one of its links touches.

    Each finger advances in increments of ``step``; the first increment at
    which a link comes within ``TOUCH_DISTANCE`` of the object is refined by
    bisection and the finger freezes there. One contact (closest boundary
    point, inward normal) is reported per touching link.
    """
    if colliding_joint_count(scene, pose) > 0:
        raise ContractError("hand collides with the object; grasp must not be executed")
    V = scene.object.boundary
    contacts = []
    for fi, finger in enumerate(scene.hand.fingers):
        bracket = _first_touch(finger, pose, V, step)
        if bracket is None:
            continue
        s_free, s_touch = bracket
        touch_d = _finger_distances(finger, np.array([s_touch]), pose, V)[0]
        chain = to_world(finger.chain(s_free), pose)
        for j in np.flatnonzero(touch_d <= TOUCH_DISTANCE):
            _, q, p, edge, t = geometry.closest_boundary_point(chain[j], chain[j + 1], V)
            normal = _inward_normal(V, edge, t, q, p)
            contacts.append(Contact(point=q, normal=normal, finger=fi, link=int(j)))
    return contacts


def contact_wrenches(contacts, friction_coefficient: float, torque_scale: float, origin=(0.0, 0.0)):
    """Friction-cone edge wrenches ``(f_x, f_y, tau / rho)``, two per contact.

    ``origin`` is the point torques are taken about (the object centroid).
    Forces are unit vectors along ``normal +- mu * tangent``.
    """
    if torque_scale <= 0:
        raise ValueError("torque_scale must be positive")
    origin = np.asarray(origin, dtype=float)
    out = []
    for c in contacts:
        point = np.asarray(c.point if hasattr(c, "point") else c[0], dtype=float)
        normal = np.asarray(c.normal if hasattr(c, "normal") else c[1], dtype=float)
        norm = math.hypot(normal[0], normal[1])
        if norm == 0.0:
            raise ValueError("contact normal must be non-zero")
        n = normal / norm
        t = np.array([-n[1], n[0]])
        r = point - origin
        for sign in (1.0, -1.0):
            f = n + sign * friction_coefficient * t
            f = f / math.hypot(f[0], f[1])
            tau = r[0] * f[1] - r[1] * f[0]
            out.append((f[0], f[1], tau / torque_scale))
    return np.array(out, dtype=float).reshape(-1, 3)


def grasp_wrench_volume(wrenches) -> float:
    """Volume of the convex hull of the wrenches together with the origin."""
    W = np.asarray(wrenches, dtype=float).reshape(-1, 3)
    return hull_volume(np.vstack([W, np.zeros((1, 3))]))


def evaluate_grasp(scene: GraspScene, u) -> GraspOutcome:
    """Place the hand for query ``u``; if it is clear, close it and score the grasp."""
    pose, n_j = place_hand(scene, u)
    if n_j >= 1:
        return GraspOutcome(quality=0.0, colliding_joints=n_j, contacts=())
    contacts = close_fingers(scene, pose)
    W = contact_wrenches(contacts, scene.friction, scene.torque_scale, scene.object.centroid)
    return GraspOutcome(quality=grasp_wrench_volume(W), colliding_joints=0, contacts=tuple(contacts))


class GraspObjective:
    """Callable ``u -> GraspOutcome`` over a fixed scene, for the optimizer."""

    def __init__(self, scene: GraspScene):
        self.scene = scene
        self.dim = scene.dim

    def __call__(self, u) -> GraspOutcome:
        return evaluate_grasp(self.scene, u)

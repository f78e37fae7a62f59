"""Planar grasp simulator with a grasp-wrench-volume quality metric."""

from .hand import Finger, HandModel, two_finger_hand
from .hull import convex_hull, hull_volume, orient3d
from .scene import (
    OBJECTS,
    GraspScene,
    ObjectShape,
    bundled_scene,
    load_polygon,
    make_scene,
    regular_polygon,
    save_polygon,
)
from .sim import (
    Contact,
    GraspObjective,
    GraspOutcome,
    close_fingers,
    colliding_joint_count,
    contact_wrenches,
    evaluate_grasp,
    grasp_wrench_volume,
    place_hand,
)

__all__ = [
    "Contact", "Finger", "GraspObjective", "GraspOutcome", "GraspScene", "HandModel",
    "OBJECTS", "ObjectShape", "bundled_scene", "close_fingers", "colliding_joint_count",
    "contact_wrenches", "convex_hull", "evaluate_grasp", "grasp_wrench_volume",
    "hull_volume", "load_polygon", "make_scene", "orient3d", "place_hand",
    "regular_polygon", "save_polygon", "two_finger_hand",
]

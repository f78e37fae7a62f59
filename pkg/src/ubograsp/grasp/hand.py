"""Planar articulated hand driven by a single closing synergy."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Finger:
    """Serial chain attached to the palm.

    Angles are in radians. The first joint angle is measured from the
    hand's approach axis (+y in the hand frame, counter-clockwise positive);
    the others are relative to the previous link. Each joint moves linearly
    from ``open_angles`` to ``close_angles`` as the synergy goes 0 -> 1.
    """

    base: tuple
    link_lengths: tuple
    open_angles: tuple
    close_angles: tuple

    def __post_init__(self):
        k = len(self.link_lengths)
        if k < 1 or any(length <= 0 for length in self.link_lengths):
            raise ValueError("a finger needs at least one link of positive length")
        if len(self.open_angles) != k or len(self.close_angles) != k:
            raise ValueError("one open and one close angle per joint")

    @property
    def n_links(self) -> int:
        return len(self.link_lengths)

    def joint_angles(self, s):
        s = np.asarray(s, dtype=float)[..., None]
        lo = np.asarray(self.open_angles, dtype=float)
        hi = np.asarray(self.close_angles, dtype=float)
        return lo + s * (hi - lo)

    def chain(self, s) -> np.ndarray:
        """Joint positions plus fingertip in the hand frame, ``(..., k+1, 2)``."""
        absolute = np.cumsum(self.joint_angles(s), axis=-1)
        steps = np.stack([-np.sin(absolute), np.cos(absolute)], axis=-1)
        steps = steps * np.asarray(self.link_lengths, dtype=float)[:, None]
        base = np.asarray(self.base, dtype=float)
        pts = np.concatenate([np.zeros(steps.shape[:-2] + (1, 2)), np.cumsum(steps, axis=-2)], axis=-2)
        return pts + base

    def mirrored(self) -> "Finger":
        return Finger(
            base=(-self.base[0], self.base[1]),
            link_lengths=self.link_lengths,
            open_angles=tuple(-a for a in self.open_angles),
            close_angles=tuple(-a for a in self.close_angles),
        )


@dataclass(frozen=True)
class HandModel:
    """Palm segment on the hand-frame x axis, approaching along +y."""

    palm_width: float
    fingers: tuple

    def __post_init__(self):
        if self.palm_width <= 0:
            raise ValueError("palm width must be positive")
        if not self.fingers:
            raise ValueError("a hand needs at least one finger")

    @property
    def joint_count(self) -> int:
        return sum(f.n_links for f in self.fingers)

    def palm(self) -> np.ndarray:
        h = 0.5 * self.palm_width
        return np.array([[-h, 0.0], [h, 0.0]])

    def joint_links(self):
        """For every joint, the pair of adjacent links as ``(finger, link)`` ids.

        Link id ``-1`` is the palm, so a base joint is adjacent to the palm
        and to the finger's first link.
        """
        out = []
        for fi, f in enumerate(self.fingers):
            for j in range(f.n_links):
                out.append(((fi, j - 1), (fi, j)))
        return out


def two_finger_hand(
    palm_width=0.10,
    link_lengths=(0.05, 0.04, 0.03),
    base_open=math.radians(25.0),
    base_close=math.radians(-80.0),
    distal_close=math.radians(45.0),
) -> HandModel:
    """Mirror-symmetric two-finger hand; the left finger curls toward +x."""
    k = len(link_lengths)
    left = Finger(
        base=(-0.5 * palm_width, 0.0),
        link_lengths=tuple(link_lengths),
        open_angles=(base_open,) + (0.0,) * (k - 1),
        close_angles=(base_close,) + (-distal_close,) * (k - 1),
    )
    return HandModel(palm_width=palm_width, fingers=(left, left.mirrored()))

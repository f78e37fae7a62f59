"""Planar polygon and segment predicates (vectorized with numpy)."""

from __future__ import annotations

import numpy as np


def signed_area(V) -> float:
    V = np.asarray(V, dtype=float)
    x, y = V[:, 0], V[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def centroid(V) -> np.ndarray:
    """Area centroid of a simple polygon."""
    V = np.asarray(V, dtype=float)
    x, y = V[:, 0], V[:, 1]
    xn, yn = np.roll(x, -1), np.roll(y, -1)
    cross = x * yn - xn * y
    a = 0.5 * np.sum(cross)
    cx = np.sum((x + xn) * cross) / (6.0 * a)
    cy = np.sum((y + yn) * cross) / (6.0 * a)
    return np.array([cx, cy])


def edges(V):
    V = np.asarray(V, dtype=float)
    return V, np.roll(V, -1, axis=0)


def _cross(ax, ay, bx, by):
    return ax * by - ay * bx


def segments_intersect(P0, P1, Q0, Q1) -> np.ndarray:
    """Closed-segment intersection test, broadcasting over leading axes."""
    P0, P1, Q0, Q1 = (np.asarray(a, dtype=float) for a in (P0, P1, Q0, Q1))
    rx, ry = P1[..., 0] - P0[..., 0], P1[..., 1] - P0[..., 1]
    sx, sy = Q1[..., 0] - Q0[..., 0], Q1[..., 1] - Q0[..., 1]
    d1 = _cross(rx, ry, Q0[..., 0] - P0[..., 0], Q0[..., 1] - P0[..., 1])
    d2 = _cross(rx, ry, Q1[..., 0] - P0[..., 0], Q1[..., 1] - P0[..., 1])
    d3 = _cross(sx, sy, P0[..., 0] - Q0[..., 0], P0[..., 1] - Q0[..., 1])
    d4 = _cross(sx, sy, P1[..., 0] - Q0[..., 0], P1[..., 1] - Q0[..., 1])
    proper = (d1 * d2 <= 0) & (d3 * d4 <= 0)
    collinear = (d1 == 0) & (d2 == 0)
    if np.any(collinear):
        # overlapping bounding boxes decide for collinear pairs
        ox = (np.minimum(P0[..., 0], P1[..., 0]) <= np.maximum(Q0[..., 0], Q1[..., 0])) & (
            np.minimum(Q0[..., 0], Q1[..., 0]) <= np.maximum(P0[..., 0], P1[..., 0])
        )
        oy = (np.minimum(P0[..., 1], P1[..., 1]) <= np.maximum(Q0[..., 1], Q1[..., 1])) & (
            np.minimum(Q0[..., 1], Q1[..., 1]) <= np.maximum(P0[..., 1], P1[..., 1])
        )
        proper = np.where(collinear, ox & oy, proper)
    return proper


def point_segment_distance(P, A, B):
    """Distance from points P to segments AB and the clamped segment parameter."""
    P, A, B = (np.asarray(a, dtype=float) for a in (P, A, B))
    ab = B - A
    ap = P - A
    den = np.sum(ab * ab, axis=-1)
    t = np.where(den > 0, np.sum(ap * ab, axis=-1) / np.where(den > 0, den, 1.0), 0.0)
    t = np.clip(t, 0.0, 1.0)
    closest = A + t[..., None] * ab
    return np.linalg.norm(P - closest, axis=-1), t


def segment_segment_distance(P0, P1, Q0, Q1) -> np.ndarray:
    """Euclidean distance between closed segments (0 when they intersect)."""
    d = np.minimum(
        np.minimum(point_segment_distance(P0, Q0, Q1)[0], point_segment_distance(P1, Q0, Q1)[0]),
        np.minimum(point_segment_distance(Q0, P0, P1)[0], point_segment_distance(Q1, P0, P1)[0]),
    )
    return np.where(segments_intersect(P0, P1, Q0, Q1), 0.0, d)


def points_in_polygon(P, V) -> np.ndarray:
    """Even-odd containment of points P (..., 2) in polygon V (interior only)."""
    P = np.asarray(P, dtype=float)
    A, B = edges(V)
    px = P[..., 0][..., None]
    py = P[..., 1][..., None]
    ax, ay, bx, by = A[:, 0], A[:, 1], B[:, 0], B[:, 1]
    straddle = (ay > py) != (by > py)
    with np.errstate(divide="ignore", invalid="ignore"):
        xint = ax + (py - ay) * (bx - ax) / (by - ay)
    hits = straddle & (px < xint)
    return (np.count_nonzero(hits, axis=-1) % 2) == 1


def segments_hit_polygon(S0, S1, V) -> np.ndarray:
    """True where a segment crosses/touches the boundary or lies inside the polygon."""
    S0 = np.asarray(S0, dtype=float)
    S1 = np.asarray(S1, dtype=float)
    A, B = edges(V)
    crosses = segments_intersect(S0[..., None, :], S1[..., None, :], A, B).any(axis=-1)
    return crosses | points_in_polygon(S0, V) | points_in_polygon(S1, V)


def segments_polygon_distance(S0, S1, V) -> np.ndarray:
    """Distance from each segment to the polygon region (0 if touching or inside)."""
    S0 = np.asarray(S0, dtype=float)
    S1 = np.asarray(S1, dtype=float)
    A, B = edges(V)
    d = segment_segment_distance(S0[..., None, :], S1[..., None, :], A, B).min(axis=-1)
    inside = points_in_polygon(S0, V) | points_in_polygon(S1, V)
    return np.where(inside, 0.0, d)


def closest_boundary_point(S0, S1, V):
    """Closest pair between one segment and the polygon boundary.

    Returns ``(distance, boundary_point, segment_point, edge_index, edge_t)``.
    Ties go to the lowest edge index.
    """
    S0 = np.asarray(S0, dtype=float)
    S1 = np.asarray(S1, dtype=float)
    A, B = edges(V)
    # candidates: segment endpoints against every edge, edge endpoints against the segment
    d0, t0 = point_segment_distance(S0[None, :], A, B)
    d1, t1 = point_segment_distance(S1[None, :], A, B)
    dv, tv = point_segment_distance(A, S0[None, :], S1[None, :])
    dw, tw = point_segment_distance(B, S0[None, :], S1[None, :])
    cand = np.stack([d0, d1, dv, dw])  # (4, E)
    per_edge = cand.min(axis=0)
    e = int(np.argmin(per_edge))
    which = int(np.argmin(cand[:, e]))
    a, b = A[e], B[e]
    if which == 0:
        t = t0[e]
        q, p = a + t * (b - a), S0
    elif which == 1:
        t = t1[e]
        q, p = a + t * (b - a), S1
    elif which == 2:
        t = 0.0
        q, p = a, S0 + tv[e] * (S1 - S0)
    else:
        t = 1.0
        q, p = b, S0 + tw[e] * (S1 - S0)
    return float(per_edge[e]), np.array(q, dtype=float), np.array(p, dtype=float), e, float(t)


def is_simple(V) -> bool:
    """No two non-adjacent edges of the polygon touch."""
    V = np.asarray(V, dtype=float)
    n = len(V)
    A, B = edges(V)
    hit = segments_intersect(A[:, None, :], B[:, None, :], A[None, :, :], B[None, :, :])
    idx = np.arange(n)
    gap = np.abs(idx[:, None] - idx[None, :])
    adjacent = (gap <= 1) | (gap == n - 1)
    return not np.any(hit & ~adjacent)


def rotation(theta: float) -> np.ndarray:
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, -s], [s, c]])

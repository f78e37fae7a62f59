"""Incremental 3-D convex hull with filtered exact orientation tests."""

from __future__ import annotations

from fractions import Fraction

import numpy as np

# Shewchuk's static error bound for the orient3d determinant, (7 + 56 eps) * eps
_O3D_ERRBOUND = (7.0 + 56.0 * 2.0**-53) * 2.0**-53


def _orient3d_exact(a, b, c, d) -> int:
    a, b, c, d = ([Fraction(float(v)) for v in p] for p in (a, b, c, d))
    adx, ady, adz = a[0] - d[0], a[1] - d[1], a[2] - d[2]
    bdx, bdy, bdz = b[0] - d[0], b[1] - d[1], b[2] - d[2]
    cdx, cdy, cdz = c[0] - d[0], c[1] - d[1], c[2] - d[2]
    det = (
        adx * (bdy * cdz - bdz * cdy)
        + bdx * (cdy * adz - cdz * ady)
        + cdx * (ady * bdz - adz * bdy)
    )
    return (det > 0) - (det < 0)


def orient3d(a, b, c, d) -> int:
    """Sign of det[a-d, b-d, c-d]: +1 when d lies below the plane of a, b, c.

    "Below" is the side opposite to the normal (b - a) x (c - a), so for an
    outward-oriented face a negative result means d can see the face.
    The float result is trusted only when it clears the rounding bound;
    otherwise the determinant is recomputed in exact rational arithmetic.
    """
    adx, ady, adz = a[0] - d[0], a[1] - d[1], a[2] - d[2]
    bdx, bdy, bdz = b[0] - d[0], b[1] - d[1], b[2] - d[2]
    cdx, cdy, cdz = c[0] - d[0], c[1] - d[1], c[2] - d[2]
    bdxcdy, cdxbdy = bdx * cdy, cdx * bdy
    cdxady, adxcdy = cdx * ady, adx * cdy
    adxbdy, bdxady = adx * bdy, bdx * ady
    det = adz * (bdxcdy - cdxbdy) + bdz * (cdxady - adxcdy) + cdz * (adxbdy - bdxady)
    permanent = (
        (abs(bdxcdy) + abs(cdxbdy)) * abs(adz)
        + (abs(cdxady) + abs(adxcdy)) * abs(bdz)
        + (abs(adxbdy) + abs(bdxady)) * abs(cdz)
    )
    bound = _O3D_ERRBOUND * permanent
    if det > bound:
        return 1
    if det < -bound:
        return -1
    return _orient3d_exact(a, b, c, d)


def _initial_simplex(P):
    n = len(P)
    i0 = 0
    d0 = np.sum((P - P[i0]) ** 2, axis=1)
    i1 = int(np.argmax(d0))
    if d0[i1] == 0.0:
        return None
    cr = np.linalg.norm(np.cross(P[i1] - P[i0], P - P[i0]), axis=1)
    i2 = int(np.argmax(cr))
    if cr[i2] == 0.0:
        return None
    normal = np.cross(P[i1] - P[i0], P[i2] - P[i0])
    height = np.abs((P - P[i0]) @ normal)
    for i3 in [int(np.argmax(height))] + list(range(n)):
        if i3 in (i0, i1, i2):
            continue
        s = orient3d(P[i0], P[i1], P[i2], P[i3])
        if s != 0:
            return i0, i1, i2, i3, s
    return None


def convex_hull(points):
    """Triangular faces of the convex hull, oriented with outward normals.

    Returns ``(vertices, faces)`` where ``faces`` index into ``vertices``
    (the de-duplicated input). ``faces`` is empty for point sets that do not
    span three dimensions.
    """
    P = np.unique(np.asarray(points, dtype=float).reshape(-1, 3), axis=0)
    if len(P) < 4:
        return P, []
    init = _initial_simplex(P)
    if init is None:
        return P, []
    i0, i1, i2, i3, s = init
    if s > 0:
        # i3 below (i0, i1, i2): that face already points away from i3
        faces = [(i0, i1, i2), (i0, i3, i1), (i1, i3, i2), (i2, i3, i0)]
    else:
        faces = [(i0, i2, i1), (i0, i1, i3), (i1, i2, i3), (i2, i0, i3)]
    # every remaining point, in index order
    for p in range(len(P)):
        if p in (i0, i1, i2, i3):
            continue
        visible = [f for f in faces if orient3d(P[f[0]], P[f[1]], P[f[2]], P[p]) < 0]
        if not visible:
            continue
        directed = set()
        for a, b, c in visible:
            directed.update(((a, b), (b, c), (c, a)))
        horizon = [e for e in directed if (e[1], e[0]) not in directed]
        vis = set(visible)
        faces = [f for f in faces if f not in vis]
        faces.extend((a, b, p) for a, b in sorted(horizon))
    return P, faces


def hull_volume(points) -> float:
    """Volume of the convex hull; 0 for fewer than 4 or coplanar points."""
    P, faces = convex_hull(points)
    if not faces:
        return 0.0
    ref = P[np.unique(np.array(faces))].mean(axis=0)
    F = np.array(faces)
    a = P[F[:, 0]] - ref
    b = P[F[:, 1]] - ref
    c = P[F[:, 2]] - ref
    dets = np.einsum("ij,ij->i", a, np.cross(b, c))
    return float(np.sum(np.abs(dets)) / 6.0)

"""Compiled kernels for the hot paths.

These mirror the scalar predicates in geometry.py and the synchronized
distance logic in blockage.py; equivalence is covered by tests. Everything
here works on raw float64 arrays so the simulator can score whole
candidate-by-obstacle matrices per step.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

EPS_REL = 1e-9

REGION_SEGMENT = 0
REGION_TRIANGLE = 1


@njit(cache=True)
def _point_seg_dist(px, py, pz, ax, ay, az, bx, by, bz):
    dx = bx - ax
    dy = by - ay
    dz = bz - az
    dd = dx * dx + dy * dy + dz * dz
    if dd <= 0.0:
        ex = px - ax
        ey = py - ay
        ez = pz - az
        return math.sqrt(ex * ex + ey * ey + ez * ez)
    t = ((px - ax) * dx + (py - ay) * dy + (pz - az) * dz) / dd
    if t < 0.0:
        t = 0.0
    elif t > 1.0:
        t = 1.0
    ex = px - (ax + t * dx)
    ey = py - (ay + t * dy)
    ez = pz - (az + t * dz)
    return math.sqrt(ex * ex + ey * ey + ez * ez)


@njit(cache=True)
def _seg_seg_dist(p1x, p1y, p1z, q1x, q1y, q1z, p2x, p2y, p2z, q2x, q2y, q2z):
    d1x = q1x - p1x
    d1y = q1y - p1y
    d1z = q1z - p1z
    d2x = q2x - p2x
    d2y = q2y - p2y
    d2z = q2z - p2z
    rx = p1x - p2x
    ry = p1y - p2y
    rz = p1z - p2z
    a = d1x * d1x + d1y * d1y + d1z * d1z
    e = d2x * d2x + d2y * d2y + d2z * d2z
    f = d2x * rx + d2y * ry + d2z * rz
    tiny = 1e-30
    if a <= tiny and e <= tiny:
        return math.sqrt(rx * rx + ry * ry + rz * rz)
    if a <= tiny:
        s = 0.0
        t = f / e
        if t < 0.0:
            t = 0.0
        elif t > 1.0:
            t = 1.0
    else:
        c = d1x * rx + d1y * ry + d1z * rz
        if e <= tiny:
            t = 0.0
            s = -c / a
            if s < 0.0:
                s = 0.0
            elif s > 1.0:
                s = 1.0
        else:
            b = d1x * d2x + d1y * d2y + d1z * d2z
            denom = a * e - b * b
            if denom > tiny:
                s = (b * f - c * e) / denom
                if s < 0.0:
                    s = 0.0
                elif s > 1.0:
                    s = 1.0
            else:
                s = 0.0
            t = (b * s + f) / e
            if t < 0.0:
                t = 0.0
                s = -c / a
                if s < 0.0:
                    s = 0.0
                elif s > 1.0:
                    s = 1.0
            elif t > 1.0:
                t = 1.0
                s = (b - c) / a
                if s < 0.0:
                    s = 0.0
                elif s > 1.0:
                    s = 1.0
    cx = (p1x + s * d1x) - (p2x + t * d2x)
    cy = (p1y + s * d1y) - (p2y + t * d2y)
    cz = (p1z + s * d1z) - (p2z + t * d2z)
    return math.sqrt(cx * cx + cy * cy + cz * cz)


@njit(cache=True)
def _planar_point_in_tri(qx, qy, qz, p0x, p0y, p0z, p1x, p1y, p1z, p2x, p2y, p2z,
                         nx, ny, nz, nn, eps):
    # q assumed already in the triangle plane; barycentric with a metric
    # tolerance mapped through the smallest altitude
    v0x = p1x - p0x
    v0y = p1y - p0y
    v0z = p1z - p0z
    v1x = p2x - p0x
    v1y = p2y - p0y
    v1z = p2z - p0z
    v2x = qx - p0x
    v2y = qy - p0y
    v2z = qz - p0z
    d00 = v0x * v0x + v0y * v0y + v0z * v0z
    d01 = v0x * v1x + v0y * v1y + v0z * v1z
    d11 = v1x * v1x + v1y * v1y + v1z * v1z
    d20 = v2x * v0x + v2y * v0y + v2z * v0z
    d21 = v2x * v1x + v2y * v1y + v2z * v1z
    den = d00 * d11 - d01 * d01
    u = (d11 * d20 - d01 * d21) / den
    v = (d00 * d21 - d01 * d20) / den
    w = 1.0 - u - v
    e2x = p2x - p1x
    e2y = p2y - p1y
    e2z = p2z - p1z
    max_edge = math.sqrt(max(d00, d11, e2x * e2x + e2y * e2y + e2z * e2z))
    bary_tol = eps * max_edge / nn
    return u >= -bary_tol and v >= -bary_tol and w >= -bary_tol


@njit(cache=True)
def _seg_interferes_tri(ax, ay, az, bx, by, bz,
                        p0x, p0y, p0z, p1x, p1y, p1z, p2x, p2y, p2z, eps):
    e1x = p1x - p0x
    e1y = p1y - p0y
    e1z = p1z - p0z
    e2x = p2x - p0x
    e2y = p2y - p0y
    e2z = p2z - p0z
    nx = e1y * e2z - e1z * e2y
    ny = e1z * e2x - e1x * e2z
    nz = e1x * e2y - e1y * e2x
    nn = math.sqrt(nx * nx + ny * ny + nz * nz)
    l1 = math.sqrt(e1x * e1x + e1y * e1y + e1z * e1z)
    l2 = math.sqrt(e2x * e2x + e2y * e2y + e2z * e2z)
    if nn <= EPS_REL * l1 * l2:
        # collinear vertices: use the longest pairwise span as the region
        dx = p2x - p1x
        dy = p2y - p1y
        dz = p2z - p1z
        l3 = math.sqrt(dx * dx + dy * dy + dz * dz)
        if l1 >= l2 and l1 >= l3:
            c0x, c0y, c0z, c1x, c1y, c1z = p0x, p0y, p0z, p1x, p1y, p1z
        elif l2 >= l3:
            c0x, c0y, c0z, c1x, c1y, c1z = p0x, p0y, p0z, p2x, p2y, p2z
        else:
            c0x, c0y, c0z, c1x, c1y, c1z = p1x, p1y, p1z, p2x, p2y, p2z
        return _seg_seg_dist(ax, ay, az, bx, by, bz, c0x, c0y, c0z, c1x, c1y, c1z) <= eps
    ux = nx / nn
    uy = ny / nn
    uz = nz / nn
    h_a = (ax - p0x) * ux + (ay - p0y) * uy + (az - p0z) * uz
    h_b = (bx - p0x) * ux + (by - p0y) * uy + (bz - p0z) * uz
    if abs(h_a) <= eps and abs(h_b) <= eps:
        # in-plane: project, test the three sides, then containment
        fax = ax - h_a * ux
        fay = ay - h_a * uy
        faz = az - h_a * uz
        fbx = bx - h_b * ux
        fby = by - h_b * uy
        fbz = bz - h_b * uz
        if _seg_seg_dist(fax, fay, faz, fbx, fby, fbz, p0x, p0y, p0z, p1x, p1y, p1z) <= eps:
            return True
        if _seg_seg_dist(fax, fay, faz, fbx, fby, fbz, p1x, p1y, p1z, p2x, p2y, p2z) <= eps:
            return True
        if _seg_seg_dist(fax, fay, faz, fbx, fby, fbz, p2x, p2y, p2z, p0x, p0y, p0z) <= eps:
            return True
        if _planar_point_in_tri(fax, fay, faz, p0x, p0y, p0z, p1x, p1y, p1z,
                                p2x, p2y, p2z, nx, ny, nz, nn, eps):
            return True
        return _planar_point_in_tri(fbx, fby, fbz, p0x, p0y, p0z, p1x, p1y, p1z,
                                    p2x, p2y, p2z, nx, ny, nz, nn, eps)
    dh = h_a - h_b
    if abs(dh) <= eps:
        return False
    delta = h_a / dh
    slack = eps / abs(dh)
    if delta < -slack or delta > 1.0 + slack:
        return False
    if delta < 0.0:
        delta = 0.0
    elif delta > 1.0:
        delta = 1.0
    qx = ax + delta * (bx - ax)
    qy = ay + delta * (by - ay)
    qz = az + delta * (bz - az)
    hq = (qx - p0x) * ux + (qy - p0y) * uy + (qz - p0z) * uz
    qx -= hq * ux
    qy -= hq * uy
    qz -= hq * uz
    return _planar_point_in_tri(qx, qy, qz, p0x, p0y, p0z, p1x, p1y, p1z,
                                p2x, p2y, p2z, nx, ny, nz, nn, eps)


@njit(cache=True)
def region_clear_batch(kinds, shapes, path_a, path_b, eps):
    """Clear matrix for C regions against M relative obstacle paths.

    kinds: (C,) uint8, 0 segment / 1 triangle. shapes: (C, 3, 3) vertex rows
    (segment regions use rows 0 and 1). path_a/path_b: (M, 3). Returns (C, M)
    uint8 where 1 means the path never touches the region.
    """
    n_regions = kinds.shape[0]
    n_paths = path_a.shape[0]
    out = np.empty((n_regions, n_paths), dtype=np.uint8)
    for c in range(n_regions):
        s = shapes[c]
        kind = kinds[c]
        for m in range(n_paths):
            ax = path_a[m, 0]
            ay = path_a[m, 1]
            az = path_a[m, 2]
            bx = path_b[m, 0]
            by = path_b[m, 1]
            bz = path_b[m, 2]
            if kind == REGION_SEGMENT:
                hit = _seg_seg_dist(ax, ay, az, bx, by, bz,
                                    s[0, 0], s[0, 1], s[0, 2],
                                    s[1, 0], s[1, 1], s[1, 2]) <= eps
            else:
                hit = _seg_interferes_tri(ax, ay, az, bx, by, bz,
                                          s[0, 0], s[0, 1], s[0, 2],
                                          s[1, 0], s[1, 1], s[1, 2],
                                          s[2, 0], s[2, 1], s[2, 2], eps)
            out[c, m] = 0 if hit else 1
    return out


@njit(cache=True)
def _sync_dist(tau, ipx, ipy, ipz, ivx, ivy, ivz, jpx, jpy, jpz, jvx, jvy, jvz,
               opx, opy, opz, ovx, ovy, ovz):
    ax = ipx + ivx * tau
    ay = ipy + ivy * tau
    az = ipz + ivz * tau
    bx = jpx + jvx * tau
    by = jpy + jvy * tau
    bz = jpz + jvz * tau
    px = opx + ovx * tau
    py = opy + ovy * tau
    pz = opz + ovz * tau
    return _point_seg_dist(px, py, pz, ax, ay, az, bx, by, bz)


@njit(cache=True)
def interval_min_distances(ip, iv, jp, jv, obs_p, obs_v, dt, n_coarse, refine_below, iters):
    """Per-obstacle minimum synchronized link distance over [0, dt].

    Coarse scan at n_coarse points, then golden-section refinement of every
    coarse local minimum below refine_below (callers pass a Lipschitz-safe
    threshold). Returns (M,) refined minima.
    """
    n_obs = obs_p.shape[0]
    out = np.empty(n_obs)
    inv_phi = 0.6180339887498949
    for m in range(n_obs):
        opx = obs_p[m, 0]
        opy = obs_p[m, 1]
        opz = obs_p[m, 2]
        ovx = obs_v[m, 0]
        ovy = obs_v[m, 1]
        ovz = obs_v[m, 2]
        vals = np.empty(n_coarse)
        for k in range(n_coarse):
            tau = dt * k / (n_coarse - 1)
            vals[k] = _sync_dist(tau, ip[0], ip[1], ip[2], iv[0], iv[1], iv[2],
                                 jp[0], jp[1], jp[2], jv[0], jv[1], jv[2],
                                 opx, opy, opz, ovx, ovy, ovz)
        best = vals[0]
        for k in range(1, n_coarse):
            if vals[k] < best:
                best = vals[k]
        if best <= refine_below:
            for k in range(n_coarse):
                left = vals[k - 1] if k > 0 else np.inf
                right = vals[k + 1] if k < n_coarse - 1 else np.inf
                if vals[k] <= left and vals[k] <= right and vals[k] <= refine_below:
                    lo_idx = k - 1 if k > 0 else 0
                    hi_idx = k + 1 if k < n_coarse - 1 else n_coarse - 1
                    a = dt * lo_idx / (n_coarse - 1)
                    b = dt * hi_idx / (n_coarse - 1)
                    c = b - (b - a) * inv_phi
                    e = a + (b - a) * inv_phi
                    fc = _sync_dist(c, ip[0], ip[1], ip[2], iv[0], iv[1], iv[2],
                                    jp[0], jp[1], jp[2], jv[0], jv[1], jv[2],
                                    opx, opy, opz, ovx, ovy, ovz)
                    fe = _sync_dist(e, ip[0], ip[1], ip[2], iv[0], iv[1], iv[2],
                                    jp[0], jp[1], jp[2], jv[0], jv[1], jv[2],
                                    opx, opy, opz, ovx, ovy, ovz)
                    for _ in range(iters):
                        if fc < fe:
                            b = e
                            e = c
                            fe = fc
                            c = b - (b - a) * inv_phi
                            fc = _sync_dist(c, ip[0], ip[1], ip[2], iv[0], iv[1], iv[2],
                                            jp[0], jp[1], jp[2], jv[0], jv[1], jv[2],
                                            opx, opy, opz, ovx, ovy, ovz)
                        else:
                            a = c
                            c = e
                            fc = fe
                            e = a + (b - a) * inv_phi
                            fe = _sync_dist(e, ip[0], ip[1], ip[2], iv[0], iv[1], iv[2],
                                            jp[0], jp[1], jp[2], jv[0], jv[1], jv[2],
                                            opx, opy, opz, ovx, ovy, ovz)
                    if fc < best:
                        best = fc
                    if fe < best:
                        best = fe
        out[m] = best
    return out


@njit(cache=True)
def _pt_tri_dist(px, py, pz, p0x, p0y, p0z, p1x, p1y, p1z, p2x, p2y, p2z):
    """Exact distance from a point to a filled (possibly degenerate) triangle."""
    e1x = p1x - p0x
    e1y = p1y - p0y
    e1z = p1z - p0z
    e2x = p2x - p0x
    e2y = p2y - p0y
    e2z = p2z - p0z
    nx = e1y * e2z - e1z * e2y
    ny = e1z * e2x - e1x * e2z
    nz = e1x * e2y - e1y * e2x
    nn2 = nx * nx + ny * ny + nz * nz
    best = np.inf
    if nn2 > 0.0:
        nn = math.sqrt(nn2)
        h = ((px - p0x) * nx + (py - p0y) * ny + (pz - p0z) * nz) / nn
        qx = px - h * nx / nn
        qy = py - h * ny / nn
        qz = pz - h * nz / nn
        d00 = e1x * e1x + e1y * e1y + e1z * e1z
        d01 = e1x * e2x + e1y * e2y + e1z * e2z
        d11 = e2x * e2x + e2y * e2y + e2z * e2z
        d20 = (qx - p0x) * e1x + (qy - p0y) * e1y + (qz - p0z) * e1z
        d21 = (qx - p0x) * e2x + (qy - p0y) * e2y + (qz - p0z) * e2z
        den = d00 * d11 - d01 * d01
        if den > 0.0:
            u = (d11 * d20 - d01 * d21) / den
            v = (d00 * d21 - d01 * d20) / den
            if u >= 0.0 and v >= 0.0 and u + v <= 1.0:
                best = abs(h)
    d = _point_seg_dist(px, py, pz, p0x, p0y, p0z, p1x, p1y, p1z)
    if d < best:
        best = d
    d = _point_seg_dist(px, py, pz, p1x, p1y, p1z, p2x, p2y, p2z)
    if d < best:
        best = d
    d = _point_seg_dist(px, py, pz, p2x, p2y, p2z, p0x, p0y, p0z)
    if d < best:
        best = d
    return best


@njit(cache=True)
def exact_seg_tri_distances(seg_a, seg_b, tris):
    """Exact segment-triangle distances for P pairs; 0 when they touch."""
    n = seg_a.shape[0]
    out = np.empty(n)
    for p in range(n):
        ax = seg_a[p, 0]
        ay = seg_a[p, 1]
        az = seg_a[p, 2]
        bx = seg_b[p, 0]
        by = seg_b[p, 1]
        bz = seg_b[p, 2]
        t = tris[p]
        e1x = t[1, 0] - t[0, 0]
        e1y = t[1, 1] - t[0, 1]
        e1z = t[1, 2] - t[0, 2]
        e2x = t[2, 0] - t[0, 0]
        e2y = t[2, 1] - t[0, 1]
        e2z = t[2, 2] - t[0, 2]
        nx = e1y * e2z - e1z * e2y
        ny = e1z * e2x - e1x * e2z
        nz = e1x * e2y - e1y * e2x
        nn2 = nx * nx + ny * ny + nz * nz
        best = np.inf
        if nn2 > 0.0:
            ha = (ax - t[0, 0]) * nx + (ay - t[0, 1]) * ny + (az - t[0, 2]) * nz
            hb = (bx - t[0, 0]) * nx + (by - t[0, 1]) * ny + (bz - t[0, 2]) * nz
            if (ha <= 0.0 and hb >= 0.0) or (ha >= 0.0 and hb <= 0.0):
                dh = ha - hb
                if dh != 0.0:
                    delta = ha / dh
                    qx = ax + delta * (bx - ax)
                    qy = ay + delta * (by - ay)
                    qz = az + delta * (bz - az)
                    d00 = e1x * e1x + e1y * e1y + e1z * e1z
                    d01 = e1x * e2x + e1y * e2y + e1z * e2z
                    d11 = e2x * e2x + e2y * e2y + e2z * e2z
                    d20 = (qx - t[0, 0]) * e1x + (qy - t[0, 1]) * e1y + (qz - t[0, 2]) * e1z
                    d21 = (qx - t[0, 0]) * e2x + (qy - t[0, 1]) * e2y + (qz - t[0, 2]) * e2z
                    den = d00 * d11 - d01 * d01
                    if den > 0.0:
                        u = (d11 * d20 - d01 * d21) / den
                        v = (d00 * d21 - d01 * d20) / den
                        if u >= 0.0 and v >= 0.0 and u + v <= 1.0:
                            out[p] = 0.0
                            continue
        d = _pt_tri_dist(ax, ay, az, t[0, 0], t[0, 1], t[0, 2],
                         t[1, 0], t[1, 1], t[1, 2], t[2, 0], t[2, 1], t[2, 2])
        if d < best:
            best = d
        d = _pt_tri_dist(bx, by, bz, t[0, 0], t[0, 1], t[0, 2],
                         t[1, 0], t[1, 1], t[1, 2], t[2, 0], t[2, 1], t[2, 2])
        if d < best:
            best = d
        d = _seg_seg_dist(ax, ay, az, bx, by, bz, t[0, 0], t[0, 1], t[0, 2], t[1, 0], t[1, 1], t[1, 2])
        if d < best:
            best = d
        d = _seg_seg_dist(ax, ay, az, bx, by, bz, t[1, 0], t[1, 1], t[1, 2], t[2, 0], t[2, 1], t[2, 2])
        if d < best:
            best = d
        d = _seg_seg_dist(ax, ay, az, bx, by, bz, t[2, 0], t[2, 1], t[2, 2], t[0, 0], t[0, 1], t[0, 2])
        if d < best:
            best = d
        out[p] = best
    return out


@njit(cache=True)
def refined_seg_tri_minima(seg_a, seg_b, tris, delta, coarse_step, fine_step):
    """Sampling minimum of point-to-triangle distance along each segment.

    Coarse samples every ~coarse_step meters; any interval whose endpoint
    minimum could hide a value <= delta (the distance along the segment is
    1-Lipschitz) is re-sampled every ~fine_step meters. The result therefore
    overshoots the true minimum by at most fine_step/2 whenever the true
    minimum is below delta + coarse half-step, which is what the agreement
    band needs.
    """
    n = seg_a.shape[0]
    out = np.empty(n)
    for p in range(n):
        ax = seg_a[p, 0]
        ay = seg_a[p, 1]
        az = seg_a[p, 2]
        bx = seg_b[p, 0]
        by = seg_b[p, 1]
        bz = seg_b[p, 2]
        t = tris[p]
        ux = bx - ax
        uy = by - ay
        uz = bz - az
        seg_len = math.sqrt(ux * ux + uy * uy + uz * uz)
        d0 = _pt_tri_dist(ax, ay, az, t[0, 0], t[0, 1], t[0, 2],
                          t[1, 0], t[1, 1], t[1, 2], t[2, 0], t[2, 1], t[2, 2])
        best = d0
        if seg_len <= fine_step:
            d1 = _pt_tri_dist(bx, by, bz, t[0, 0], t[0, 1], t[0, 2],
                              t[1, 0], t[1, 1], t[1, 2], t[2, 0], t[2, 1], t[2, 2])
            out[p] = d1 if d1 < best else best
            continue
        n1 = int(seg_len / coarse_step) + 2
        step_len = seg_len / (n1 - 1)
        thresh = delta + step_len
        prev = d0
        for k in range(1, n1):
            s = k / (n1 - 1)
            cur = _pt_tri_dist(ax + s * ux, ay + s * uy, az + s * uz,
                               t[0, 0], t[0, 1], t[0, 2], t[1, 0], t[1, 1],
                               t[1, 2], t[2, 0], t[2, 1], t[2, 2])
            if cur < best:
                best = cur
            lo = prev if prev < cur else cur
            if lo <= thresh:
                m2 = int(step_len / fine_step) + 2
                for i in range(1, m2 - 1):
                    s2 = (k - 1 + i / (m2 - 1)) / (n1 - 1)
                    d = _pt_tri_dist(ax + s2 * ux, ay + s2 * uy, az + s2 * uz,
                                     t[0, 0], t[0, 1], t[0, 2], t[1, 0], t[1, 1],
                                     t[1, 2], t[2, 0], t[2, 1], t[2, 2])
                    if d < best:
                        best = d
            prev = cur
        out[p] = best
    return out


@njit(cache=True)
def sampled_seg_tri_minima(seg_a, seg_b, tris, n_coarse, n_dense, delta):
    """Sampled min distance from segment points to the triangle, per pair.

    A coarse pass at n_coarse points skips the dense pass when even the
    Lipschitz-corrected coarse minimum provably exceeds delta (the distance
    function is 1-Lipschitz along the segment, and no segment point is
    farther than half a coarse step from a sample). Returns (minima, dense)
    where dense[p] == 1 when the full n_dense pass ran.
    """
    n = seg_a.shape[0]
    out = np.empty(n)
    dense = np.zeros(n, dtype=np.uint8)
    for p in range(n):
        ax = seg_a[p, 0]
        ay = seg_a[p, 1]
        az = seg_a[p, 2]
        bx = seg_b[p, 0]
        by = seg_b[p, 1]
        bz = seg_b[p, 2]
        t = tris[p]
        seg_len = math.sqrt((bx - ax) ** 2 + (by - ay) ** 2 + (bz - az) ** 2)
        cmin = np.inf
        for k in range(n_coarse):
            s = k / (n_coarse - 1)
            d = _pt_tri_dist(ax + s * (bx - ax), ay + s * (by - ay), az + s * (bz - az),
                             t[0, 0], t[0, 1], t[0, 2], t[1, 0], t[1, 1], t[1, 2],
                             t[2, 0], t[2, 1], t[2, 2])
            if d < cmin:
                cmin = d
        half_step = 0.5 * seg_len / (n_coarse - 1)
        if cmin - half_step > delta:
            out[p] = cmin
            continue
        dmin = np.inf
        for k in range(n_dense):
            s = k / (n_dense - 1)
            d = _pt_tri_dist(ax + s * (bx - ax), ay + s * (by - ay), az + s * (bz - az),
                             t[0, 0], t[0, 1], t[0, 2], t[1, 0], t[1, 1], t[1, 2],
                             t[2, 0], t[2, 1], t[2, 2])
            if d < dmin:
                dmin = d
        out[p] = dmin
        dense[p] = 1
    return out, dense

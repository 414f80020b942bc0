"""Numba kernels for the grid-heavy inner loops (n = 1 specialization).

Everything here works on raw float64 arrays; the public modules wrap these
with GridFunction plumbing.  Points are (x1, x2, t); trilinear gathers use
zero extension outside the sample box, matching GridFunction.interp with
mode='constant'.  The symplectic form on H^1 is x^T J y = 2*(x2 y1 - x1 y2).
"""
from __future__ import annotations

import numpy as np
from numba import njit, prange


@njit(cache=True, inline="always")
def _tri_gather(vals, lo0, lo1, lo2, h0, h1, h2, p0, p1, p2):
    """Trilinear interpolation of midpoint samples, zero outside."""
    m0, m1, m2 = vals.shape
    f0 = (p0 - lo0) / h0 - 0.5
    f1 = (p1 - lo1) / h1 - 0.5
    f2 = (p2 - lo2) / h2 - 0.5
    i0 = int(np.floor(f0))
    i1 = int(np.floor(f1))
    i2 = int(np.floor(f2))
    d0 = f0 - i0
    d1 = f1 - i1
    d2 = f2 - i2
    acc = 0.0
    for a in range(2):
        j0 = i0 + a
        if j0 < 0 or j0 >= m0:
            continue
        w0 = d0 if a == 1 else 1.0 - d0
        for b in range(2):
            j1 = i1 + b
            if j1 < 0 or j1 >= m1:
                continue
            w1 = d1 if b == 1 else 1.0 - d1
            for c in range(2):
                j2 = i2 + c
                if j2 < 0 or j2 >= m2:
                    continue
                w2 = d2 if c == 1 else 1.0 - d2
                acc += w0 * w1 * w2 * vals[j0, j1, j2]
    return acc


@njit(cache=True, inline="always")
def _rho2(dx1, dx2, dtp):
    """rho(u)^2 = sqrt(|ux|^4 + ut^2) for u = (dx1, dx2, dtp)."""
    x2 = dx1 * dx1 + dx2 * dx2
    return np.sqrt(x2 * x2 + dtp * dtp)


@njit(cache=True, parallel=True)
def convolve_scales(vals, lo, h, nodes, kweights, scales):
    """(f * phi_t)(z) at every grid point z for each scale t.

    nodes/kweights: canonical kernel rule with phi(v) folded into the weights.
    Evaluates f at z . (t.v)^{-1} = (zx - t vx, zt - t^2 vt - t zx^T J vx).
    """
    m0, m1, m2 = vals.shape
    ns = scales.size
    nk = nodes.shape[0]
    out = np.zeros((ns, m0, m1, m2))
    for flat in prange(m0 * m1 * m2):
        i0 = flat // (m1 * m2)
        r = flat % (m1 * m2)
        i1 = r // m2
        i2 = r % m2
        zx1 = lo[0] + (i0 + 0.5) * h[0]
        zx2 = lo[1] + (i1 + 0.5) * h[1]
        zt = lo[2] + (i2 + 0.5) * h[2]
        for s in range(ns):
            t = scales[s]
            acc = 0.0
            for k in range(nk):
                px1 = zx1 - t * nodes[k, 0]
                px2 = zx2 - t * nodes[k, 1]
                pt = zt - t * t * nodes[k, 2] - 2.0 * t * (zx2 * nodes[k, 0] - zx1 * nodes[k, 1])
                acc += kweights[k] * _tri_gather(vals, lo[0], lo[1], lo[2],
                                                 h[0], h[1], h[2], px1, px2, pt)
            out[s, i0, i1, i2] = acc
    return out


@njit(cache=True, parallel=True)
def convolve_at_points(vals, lo, h, nodes, kweights, scales, pts):
    """convolve_scales at arbitrary target points (npts, 3)."""
    npts = pts.shape[0]
    ns = scales.size
    nk = nodes.shape[0]
    out = np.zeros((ns, npts))
    for p in prange(npts):
        zx1 = pts[p, 0]
        zx2 = pts[p, 1]
        zt = pts[p, 2]
        for s in range(ns):
            t = scales[s]
            acc = 0.0
            for k in range(nk):
                px1 = zx1 - t * nodes[k, 0]
                px2 = zx2 - t * nodes[k, 1]
                pt = zt - t * t * nodes[k, 2] - 2.0 * t * (zx2 * nodes[k, 0] - zx1 * nodes[k, 1])
                acc += kweights[k] * _tri_gather(vals, lo[0], lo[1], lo[2],
                                                 h[0], h[1], h[2], px1, px2, pt)
            out[s, p] = acc
    return out


@njit(cache=True, parallel=True)
def convolve_source_sum(src_vals, src_pts, lo, h, shape, t, exps, coefs, R4, power):
    """(f * phi_t)(z) = sum_w f(w) vol * t^{-Q} phi(t^{-1}(w^{-1} z)).

    src_vals carry the per-point masses f(w) * vol (possibly block
    aggregated); phi is a polynomial-times-bump radial profile given by its
    monomial exponents/coefficients, support (rho^4 < R4) and bump power.
    Accurate when t exceeds a few source spacings (phi_t smooth over blocks).
    """
    m0, m1, m2 = shape
    nsrc = src_pts.shape[0]
    nterm = exps.shape[0]
    out = np.zeros((m0, m1, m2))
    tQ = t ** (-4.0)
    inv_t = 1.0 / t
    inv_t2 = inv_t * inv_t
    for flat in prange(m0 * m1 * m2):
        i0 = flat // (m1 * m2)
        r_ = flat % (m1 * m2)
        i1 = r_ // m2
        i2 = r_ % m2
        zx1 = lo[0] + (i0 + 0.5) * h[0]
        zx2 = lo[1] + (i1 + 0.5) * h[1]
        zt = lo[2] + (i2 + 0.5) * h[2]
        acc = 0.0
        for k in range(nsrc):
            wx1 = src_pts[k, 0]
            wx2 = src_pts[k, 1]
            # u = t^{-1} . (w^{-1} z)
            ux1 = (zx1 - wx1) * inv_t
            ux2 = (zx2 - wx2) * inv_t
            ut = (zt - src_pts[k, 2] - 2.0 * (wx2 * zx1 - wx1 * zx2)) * inv_t2
            x2 = ux1 * ux1 + ux2 * ux2
            v = (x2 * x2 + ut * ut) / R4
            if v >= 1.0:
                continue
            poly = 0.0
            for q in range(nterm):
                term = coefs[q]
                if exps[q, 0]:
                    term *= ux1 ** exps[q, 0]
                if exps[q, 1]:
                    term *= ux2 ** exps[q, 1]
                if exps[q, 2]:
                    term *= ut ** exps[q, 2]
                poly += term
            acc += src_vals[k] * poly * (1.0 - v) ** power
        out[i0, i1, i2] = acc * tQ
    return out


@njit(cache=True, parallel=True)
def ball_max_field(vals, lo, h, bnodes, bweights, radii, offsets, clip):
    """max over radii/offsets of ball averages of |f| (HL maximal).

    clip=True renormalizes by the in-box measure; clip=False divides by the
    full ball measure (exact when f is compactly supported inside the box).
    """
    m0, m1, m2 = vals.shape
    nr = radii.size
    nb = bnodes.shape[0]
    no = offsets.shape[0]
    lo0, lo1, lo2 = lo[0], lo[1], lo[2]
    hi0 = lo0 + m0 * h[0]
    hi1 = lo1 + m1 * h[1]
    hi2 = lo2 + m2 * h[2]
    wtot = 0.0
    for k in range(nb):
        wtot += bweights[k]
    out = np.zeros((m0, m1, m2))
    for flat in prange(m0 * m1 * m2):
        i0 = flat // (m1 * m2)
        r_ = flat % (m1 * m2)
        i1 = r_ // m2
        i2 = r_ % m2
        zx1 = lo0 + (i0 + 0.5) * h[0]
        zx2 = lo1 + (i1 + 0.5) * h[1]
        zt = lo2 + (i2 + 0.5) * h[2]
        best = 0.0
        for ri in range(nr):
            rad = radii[ri]
            for oi in range(no):
                ox1 = rad * offsets[oi, 0]
                ox2 = rad * offsets[oi, 1]
                ot = rad * rad * offsets[oi, 2]
                cx1 = zx1 + ox1
                cx2 = zx2 + ox2
                ct = zt + ot + 2.0 * (zx2 * ox1 - zx1 * ox2)
                num = 0.0
                den = 0.0
                for k in range(nb):
                    ux1 = rad * bnodes[k, 0]
                    ux2 = rad * bnodes[k, 1]
                    ut = rad * rad * bnodes[k, 2]
                    px1 = cx1 + ux1
                    px2 = cx2 + ux2
                    pt = ct + ut + 2.0 * (cx2 * ux1 - cx1 * ux2)
                    if px1 < lo0 or px1 > hi0 or px2 < lo1 or px2 > hi1 or pt < lo2 or pt > hi2:
                        continue
                    num += bweights[k] * abs(_tri_gather(vals, lo0, lo1, lo2,
                                                         h[0], h[1], h[2], px1, px2, pt))
                    den += bweights[k]
                if not clip:
                    den = wtot
                if den > 0.0:
                    avg = num / den
                    if avg > best:
                        best = avg
        out[i0, i1, i2] = best
    return out


@njit(cache=True)
def ball_max_at_point(vals, lo, h, bnodes, bweights, radii, offsets, z, clip):
    """Single-point version of ball_max_field."""
    m0, m1, m2 = vals.shape
    lo0, lo1, lo2 = lo[0], lo[1], lo[2]
    hi0 = lo0 + m0 * h[0]
    hi1 = lo1 + m1 * h[1]
    hi2 = lo2 + m2 * h[2]
    zx1, zx2, zt = z[0], z[1], z[2]
    wtot = 0.0
    for k in range(bnodes.shape[0]):
        wtot += bweights[k]
    best = 0.0
    for ri in range(radii.size):
        rad = radii[ri]
        for oi in range(offsets.shape[0]):
            ox1 = rad * offsets[oi, 0]
            ox2 = rad * offsets[oi, 1]
            ot = rad * rad * offsets[oi, 2]
            cx1 = zx1 + ox1
            cx2 = zx2 + ox2
            ct = zt + ot + 2.0 * (zx2 * ox1 - zx1 * ox2)
            num = 0.0
            den = 0.0
            for k in range(bnodes.shape[0]):
                ux1 = rad * bnodes[k, 0]
                ux2 = rad * bnodes[k, 1]
                ut = rad * rad * bnodes[k, 2]
                px1 = cx1 + ux1
                px2 = cx2 + ux2
                pt = ct + ut + 2.0 * (cx2 * ux1 - cx1 * ux2)
                if px1 < lo0 or px1 > hi0 or px2 < lo1 or px2 > hi1 or pt < lo2 or pt > hi2:
                    continue
                num += bweights[k] * abs(_tri_gather(vals, lo0, lo1, lo2,
                                                     h[0], h[1], h[2], px1, px2, pt))
                den += bweights[k]
            if not clip:
                den = wtot
            if den > 0.0:
                avg = num / den
                if avg > best:
                    best = avg
    return best


@njit(cache=True, parallel=True)
def peak_quotient_field(conv, lo, h, scales, L):
    """sup_j sup_w conv[j](w) / (1 + rho(z^{-1}w)^2 / t_j^2)^L at every z.

    conv holds |f * phi_{t_j}| >= 0 on the grid.  The w-scan is pruned with
    the exact bound quotient <= cmax_j / (rho^2/t^2)^L and rho >= |dx|.
    """
    ns, m0, m1, m2 = conv.shape
    out = np.zeros((m0, m1, m2))
    cmax = np.zeros(ns)
    for s in range(ns):
        cm = 0.0
        for i0 in range(m0):
            for i1 in range(m1):
                for i2 in range(m2):
                    v = conv[s, i0, i1, i2]
                    if v > cm:
                        cm = v
        cmax[s] = cm
    for flat in prange(m0 * m1 * m2):
        i0 = flat // (m1 * m2)
        r_ = flat % (m1 * m2)
        i1 = r_ // m2
        i2 = r_ % m2
        zx1 = lo[0] + (i0 + 0.5) * h[0]
        zx2 = lo[1] + (i1 + 0.5) * h[1]
        zt = lo[2] + (i2 + 0.5) * h[2]
        # seed with the w = z term (denominator exactly 1)
        best = 0.0
        for s in range(ns):
            v = conv[s, i0, i1, i2]
            if v > best:
                best = v
        for s in range(ns):
            if cmax[s] <= best:
                continue
            t2 = scales[s] * scales[s]
            # quotient can only beat `best` while rho^2 < t2 * ((cmax/best)^(1/L) - 1)
            for j0 in range(m0):
                wx1 = lo[0] + (j0 + 0.5) * h[0]
                dx1 = wx1 - zx1
                ratio = cmax[s] / best if best > 0.0 else np.inf
                rho2_lim = t2 * (ratio ** (1.0 / L) - 1.0) if np.isfinite(ratio) else np.inf
                if dx1 * dx1 >= rho2_lim:
                    continue
                for j1 in range(m1):
                    wx2 = lo[1] + (j1 + 0.5) * h[1]
                    dx2 = wx2 - zx2
                    x2 = dx1 * dx1 + dx2 * dx2
                    if x2 >= rho2_lim:
                        continue
                    shear = 2.0 * (zx2 * dx1 - zx1 * dx2)
                    for j2 in range(m2):
                        wt = lo[2] + (j2 + 0.5) * h[2]
                        dtp = wt - zt - shear
                        r2 = _rho2(dx1, dx2, dtp)
                        q = conv[s, j0, j1, j2] / (1.0 + r2 / t2) ** L
                        if q > best:
                            best = q
                            ratio = cmax[s] / best
                            rho2_lim = t2 * (ratio ** (1.0 / L) - 1.0)
        out[i0, i1, i2] = best
    return out


@njit(cache=True, parallel=True)
def potential_field(src_vals, src_pts, src_vol, tgt_pts, neg_power, sing_offsets, sing_vol, sing_dist):
    """sum_w rho(w^{-1} z)^{-neg_power} a(w) vol over source cells, per target.

    Source cells closer than sing_dist (in rho) to the target are re-integrated
    on the refined subcell offsets (midpoint subdivision), which keeps the
    integrable singularity under control.  The kernel constant is NOT applied.
    """
    nt = tgt_pts.shape[0]
    nsrc = src_pts.shape[0]
    nsub = sing_offsets.shape[0]
    out = np.zeros(nt)
    for p in prange(nt):
        zx1 = tgt_pts[p, 0]
        zx2 = tgt_pts[p, 1]
        zt = tgt_pts[p, 2]
        acc = 0.0
        for k in range(nsrc):
            a = src_vals[k]
            if a == 0.0:
                continue
            wx1 = src_pts[k, 0]
            wx2 = src_pts[k, 1]
            wt = src_pts[k, 2]
            dx1 = zx1 - wx1
            dx2 = zx2 - wx2
            # w^{-1} z = (zx - wx, zt - wt - wx^T J zx); wx^T J zx = 2(wx2 zx1 - wx1 zx2)
            dtp = zt - wt - 2.0 * (wx2 * zx1 - wx1 * zx2)
            r2 = _rho2(dx1, dx2, dtp)
            if r2 >= sing_dist * sing_dist:
                acc += a * r2 ** (-0.5 * neg_power) * src_vol
            else:
                sub = 0.0
                for m in range(nsub):
                    sx1 = wx1 + sing_offsets[m, 0]
                    sx2 = wx2 + sing_offsets[m, 1]
                    st = wt + sing_offsets[m, 2]
                    ddx1 = zx1 - sx1
                    ddx2 = zx2 - sx2
                    ddtp = zt - st - 2.0 * (sx2 * zx1 - sx1 * zx2)
                    rr2 = _rho2(ddx1, ddx2, ddtp)
                    if rr2 > 0.0:
                        sub += rr2 ** (-0.5 * neg_power)
                acc += a * sub * sing_vol
        out[p] = acc
    return out


@njit(cache=True, parallel=True)
def tstar_sup(src_vals, src_pts, src_vol, tgt_pts, kvals_flat, eps_grid):
    """Truncated singular sup: max over eps of |sum_{rho > eps} K(w^{-1}z) a(w) vol|.

    kvals_flat[p, k] holds the kernel derivative X^I rho^{-2n} evaluated at
    w_k^{-1} z_p (precomputed; the kernel is analytic off the singularity).
    """
    nt = tgt_pts.shape[0]
    nsrc = src_pts.shape[0]
    ne = eps_grid.size
    out = np.zeros(nt)
    for p in prange(nt):
        zx1 = tgt_pts[p, 0]
        zx2 = tgt_pts[p, 1]
        zt = tgt_pts[p, 2]
        best = 0.0
        for e in range(ne):
            eps2 = eps_grid[e] * eps_grid[e]
            acc = 0.0
            for k in range(nsrc):
                a = src_vals[k]
                if a == 0.0:
                    continue
                dx1 = zx1 - src_pts[k, 0]
                dx2 = zx2 - src_pts[k, 1]
                dtp = zt - src_pts[k, 2] - 2.0 * (src_pts[k, 1] * zx1 - src_pts[k, 0] * zx2)
                if _rho2(dx1, dx2, dtp) > eps2:
                    acc += kvals_flat[p, k] * a * src_vol
            if abs(acc) > best:
                best = abs(acc)
        out[p] = best
    return out


@njit(cache=True, parallel=True)
def min_group_distance(pts, refs):
    """d(p) = min_k rho(p^{-1} refs_k), pruned via rho >= |dx1| on sorted refs.

    refs must be sorted by their first coordinate.
    """
    npts = pts.shape[0]
    nref = refs.shape[0]
    out = np.empty(npts)
    for p in prange(npts):
        zx1 = pts[p, 0]
        zx2 = pts[p, 1]
        zt = pts[p, 2]
        # locate window start by binary search on x1
        lo_i = 0
        hi_i = nref
        while lo_i < hi_i:
            mid = (lo_i + hi_i) // 2
            if refs[mid, 0] < zx1:
                lo_i = mid + 1
            else:
                hi_i = mid
        best = np.inf
        # expand right
        k = lo_i
        while k < nref:
            dx1 = refs[k, 0] - zx1
            if dx1 >= best:
                break
            dx2 = refs[k, 1] - zx2
            dtp = refs[k, 2] - zt - 2.0 * (zx2 * dx1 - zx1 * dx2)
            d = np.sqrt(_rho2(dx1, dx2, dtp))
            if d < best:
                best = d
            k += 1
        # expand left
        k = lo_i - 1
        while k >= 0:
            dx1 = zx1 - refs[k, 0]
            if dx1 >= best:
                break
            dx2 = refs[k, 1] - zx2
            dtp = refs[k, 2] - zt - 2.0 * (zx2 * (-dx1) - zx1 * dx2)
            d = np.sqrt(_rho2(dx1, dx2, dtp))
            if d < best:
                best = d
            k -= 1
        out[p] = best
    return out


@njit(cache=True)
def greedy_disjoint(pts, radii, order, shrink):
    """Greedy selection of balls with pairwise disjoint shrunk dilates.

    Processes candidates in the given order; keeps a candidate iff its
    shrink*radius ball is rho-disjoint from every kept one:
    rho(z_i^{-1} z_j) >= shrink*(r_i + r_j).
    Returns a boolean keep-mask.
    """
    m = pts.shape[0]
    keep = np.zeros(m, dtype=np.bool_)
    kept_idx = np.empty(m, dtype=np.int64)
    nkept = 0
    for oi in range(m):
        i = order[oi]
        zx1 = pts[i, 0]
        zx2 = pts[i, 1]
        zt = pts[i, 2]
        ri = radii[i]
        ok = True
        for kk in range(nkept):
            j = kept_idx[kk]
            lim = shrink * (ri + radii[j])
            dx1 = pts[j, 0] - zx1
            if abs(dx1) >= lim:
                continue
            dx2 = pts[j, 1] - zx2
            if dx1 * dx1 + dx2 * dx2 >= lim * lim:
                continue
            dtp = pts[j, 2] - zt - 2.0 * (zx2 * dx1 - zx1 * dx2)
            if _rho2(dx1, dx2, dtp) < lim * lim:
                ok = False
                break
        if ok:
            keep[i] = True
            kept_idx[nkept] = i
            nkept += 1
    return keep


@njit(cache=True, parallel=True)
def covered_by_balls(pts, centers, radii):
    """For every point, whether rho(c_k^{-1} p) < r_k for some ball k."""
    npts = pts.shape[0]
    nb = centers.shape[0]
    out = np.zeros(npts, dtype=np.bool_)
    for p in prange(npts):
        zx1 = pts[p, 0]
        zx2 = pts[p, 1]
        zt = pts[p, 2]
        for k in range(nb):
            r = radii[k]
            dx1 = zx1 - centers[k, 0]
            if abs(dx1) >= r:
                continue
            dx2 = zx2 - centers[k, 1]
            if dx1 * dx1 + dx2 * dx2 >= r * r:
                continue
            dtp = zt - centers[k, 2] - 2.0 * (centers[k, 1] * dx1 - centers[k, 0] * dx2)
            if _rho2(dx1, dx2, dtp) < r * r:
                out[p] = True
                break
    return out


@njit(cache=True, parallel=True)
def count_ball_membership(pts, centers, radii):
    """Number of balls containing each point."""
    npts = pts.shape[0]
    nb = centers.shape[0]
    out = np.zeros(npts, dtype=np.int64)
    for p in prange(npts):
        zx1 = pts[p, 0]
        zx2 = pts[p, 1]
        zt = pts[p, 2]
        cnt = 0
        for k in range(nb):
            r = radii[k]
            dx1 = zx1 - centers[k, 0]
            if abs(dx1) >= r:
                continue
            dx2 = zx2 - centers[k, 1]
            if dx1 * dx1 + dx2 * dx2 >= r * r:
                continue
            dtp = zt - centers[k, 2] - 2.0 * (centers[k, 1] * dx1 - centers[k, 0] * dx2)
            if _rho2(dx1, dx2, dtp) < r * r:
                cnt += 1
        out[p] = cnt
    return out


@njit(cache=True)
def accumulate_bumps(centers, radii, lo, h, shape, power):
    """S(z) = sum_k (1 - (rho(c_k^{-1} z)/R_k)^4)^power over grid cells.

    R_k = radii[k] is the full bump support radius.  Returns the field and
    the number of cell centers inside each bump support.
    """
    m0, m1, m2 = shape
    S = np.zeros((m0, m1, m2))
    counts = np.zeros(centers.shape[0], dtype=np.int64)
    for k in range(centers.shape[0]):
        cx1 = centers[k, 0]
        cx2 = centers[k, 1]
        ct = centers[k, 2]
        R = radii[k]
        R4 = R ** 4
        i0_lo = max(0, int(np.floor((cx1 - R - lo[0]) / h[0] - 0.5)))
        i0_hi = min(m0 - 1, int(np.ceil((cx1 + R - lo[0]) / h[0] - 0.5)))
        i1_lo = max(0, int(np.floor((cx2 - R - lo[1]) / h[1] - 0.5)))
        i1_hi = min(m1 - 1, int(np.ceil((cx2 + R - lo[1]) / h[1] - 0.5)))
        for i0 in range(i0_lo, i0_hi + 1):
            px1 = lo[0] + (i0 + 0.5) * h[0]
            dx1 = px1 - cx1
            for i1 in range(i1_lo, i1_hi + 1):
                px2 = lo[1] + (i1 + 0.5) * h[1]
                dx2 = px2 - cx2
                x2 = dx1 * dx1 + dx2 * dx2
                x4 = x2 * x2
                if x4 >= R4:
                    continue
                # t-window: |dt - shear| < sqrt(R^4 - |dx|^4)
                half = np.sqrt(R4 - x4)
                shear = 2.0 * (cx2 * dx1 - cx1 * dx2)
                t_lo = ct + shear - half
                t_hi = ct + shear + half
                i2_lo = max(0, int(np.floor((t_lo - lo[2]) / h[2] - 0.5)))
                i2_hi = min(m2 - 1, int(np.ceil((t_hi - lo[2]) / h[2] - 0.5)))
                for i2 in range(i2_lo, i2_hi + 1):
                    pt = lo[2] + (i2 + 0.5) * h[2]
                    dtp = pt - ct - shear
                    v = (x4 + dtp * dtp) / R4
                    if v < 1.0:
                        S[i0, i1, i2] += (1.0 - v) ** power
                        counts[k] += 1
    return S, counts


@njit(cache=True)
def paint_balls(centers, radii, amounts, lo, h, shape):
    """sum_k amounts[k] * chi_{B(c_k, r_k)} accumulated on the grid."""
    m0, m1, m2 = shape
    out = np.zeros((m0, m1, m2))
    for k in range(centers.shape[0]):
        cx1 = centers[k, 0]
        cx2 = centers[k, 1]
        ct = centers[k, 2]
        R = radii[k]
        R4 = R ** 4
        amt = amounts[k]
        i0_lo = max(0, int(np.floor((cx1 - R - lo[0]) / h[0] - 0.5)))
        i0_hi = min(m0 - 1, int(np.ceil((cx1 + R - lo[0]) / h[0] - 0.5)))
        i1_lo = max(0, int(np.floor((cx2 - R - lo[1]) / h[1] - 0.5)))
        i1_hi = min(m1 - 1, int(np.ceil((cx2 + R - lo[1]) / h[1] - 0.5)))
        for i0 in range(i0_lo, i0_hi + 1):
            dx1 = lo[0] + (i0 + 0.5) * h[0] - cx1
            for i1 in range(i1_lo, i1_hi + 1):
                dx2 = lo[1] + (i1 + 0.5) * h[1] - cx2
                x4 = (dx1 * dx1 + dx2 * dx2) ** 2
                if x4 >= R4:
                    continue
                half = np.sqrt(R4 - x4)
                shear = 2.0 * (cx2 * dx1 - cx1 * dx2)
                i2_lo = max(0, int(np.floor((ct + shear - half - lo[2]) / h[2] - 0.5)))
                i2_hi = min(m2 - 1, int(np.ceil((ct + shear + half - lo[2]) / h[2] - 0.5)))
                for i2 in range(i2_lo, i2_hi + 1):
                    dtp = lo[2] + (i2 + 0.5) * h[2] - ct - shear
                    if x4 + dtp * dtp < R4:
                        out[i0, i1, i2] += amt
    return out


@njit(cache=True)
def greedy_disjoint_hashed(pts, radii, order, shrink, bucket_size, bx_lo, by_lo, nbx, nby):
    """Greedy disjoint-ball selection with an (x1,x2) bucket grid.

    Equivalent to greedy_disjoint but near-linear: each candidate only checks
    kept balls in nearby buckets (rho >= |dx| prunes the rest exactly).
    """
    m = pts.shape[0]
    keep = np.zeros(m, dtype=np.bool_)
    # bucket -> linked list of kept points
    head = np.full(nbx * nby, -1, dtype=np.int64)
    nxt = np.full(m, -1, dtype=np.int64)
    rmax_kept = 0.0
    for oi in range(m):
        i = order[oi]
        zx1 = pts[i, 0]
        zx2 = pts[i, 1]
        zt = pts[i, 2]
        ri = radii[i]
        reach = shrink * (ri + rmax_kept)
        b0_lo = max(0, int((zx1 - reach - bx_lo) / bucket_size))
        b0_hi = min(nbx - 1, int((zx1 + reach - bx_lo) / bucket_size))
        b1_lo = max(0, int((zx2 - reach - by_lo) / bucket_size))
        b1_hi = min(nby - 1, int((zx2 + reach - by_lo) / bucket_size))
        ok = True
        for b0 in range(b0_lo, b0_hi + 1):
            for b1 in range(b1_lo, b1_hi + 1):
                j = head[b0 * nby + b1]
                while j >= 0:
                    lim = shrink * (ri + radii[j])
                    dx1 = pts[j, 0] - zx1
                    if abs(dx1) < lim:
                        dx2 = pts[j, 1] - zx2
                        if dx1 * dx1 + dx2 * dx2 < lim * lim:
                            dtp = pts[j, 2] - zt - 2.0 * (zx2 * dx1 - zx1 * dx2)
                            if _rho2(dx1, dx2, dtp) < lim * lim:
                                ok = False
                                break
                    j = nxt[j]
                if not ok:
                    break
            if not ok:
                break
        if ok:
            keep[i] = True
            b0 = min(nbx - 1, max(0, int((zx1 - bx_lo) / bucket_size)))
            b1 = min(nby - 1, max(0, int((zx2 - by_lo) / bucket_size)))
            nxt[i] = head[b0 * nby + b1]
            head[b0 * nby + b1] = i
            if ri > rmax_kept:
                rmax_kept = ri
    return keep


@njit(cache=True)
def pairwise_disjoint(centers, radii, shrink):
    """Exact pairwise check: rho(c_i^{-1} c_j) >= shrink*(r_i+r_j) for i != j."""
    nb = centers.shape[0]
    for i in range(nb):
        for j in range(i + 1, nb):
            lim = shrink * (radii[i] + radii[j])
            dx1 = centers[j, 0] - centers[i, 0]
            if abs(dx1) >= lim:
                continue
            dx2 = centers[j, 1] - centers[i, 1]
            if dx1 * dx1 + dx2 * dx2 >= lim * lim:
                continue
            dtp = centers[j, 2] - centers[i, 2] - 2.0 * (centers[i, 1] * dx1 - centers[i, 0] * dx2)
            if _rho2(dx1, dx2, dtp) < lim * lim:
                return False
    return True

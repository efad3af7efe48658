"""Compiled amplitude kernels.

All kernels act in place on a C-ordered complex array of shape (dim, B):
``dim = 2**n_q`` basis amplitudes for each of ``B`` independent columns.
Qubit ``q`` is bit ``q`` of the row index (qubit 0 is least significant).
"""

import numpy as np
from numba import njit

KIND_H = 0
KIND_RZ = 1
KIND_PHASE = 2
KIND_XX = 3
KIND_SWAP = 4
KIND_MUL = 5


# ------------------------------------------------------------------------
# Gate coefficients are used as unrounded pairs hi + lo.  Any double
# approximation of 1/sqrt(2) or of (cos, sin) changes the norm by a fixed
# ~1e-16 per gate, which adds up linearly over long circuits.  The gate
# kernels therefore form c x + s y with exact products (Dekker) and an
# exact sum (Knuth) before adding the lo terms, so each output is the
# correctly rounded value for coefficients with |hi + lo|^2 = 1 to ~1e-32.

@njit(cache=True, inline="always")
def _two_prod(a, b):
    p = a * b
    f = 134217729.0  # 2^27 + 1
    t = f * a
    ah = t - (t - a)
    al = a - ah
    t = f * b
    bh = t - (t - b)
    bl = b - bh
    return p, ((ah * bh - p) + ah * bl + al * bh) + al * bl


@njit(cache=True, inline="always")
def _mul(c, x, cl):
    p, e = _two_prod(c, x)
    return p + (e + cl * x)


@njit(cache=True, inline="always")
def _dot(c, x, s, y, cl, sl):
    p1, e1 = _two_prod(c, x)
    p2, e2 = _two_prod(s, y)
    t = p1 + p2
    bp = t - p1
    e3 = (p1 - (t - bp)) + (p2 - bp)
    return t + ((e1 + e2 + e3) + (cl * x + sl * y))


@njit(cache=True)
def unit_defect(c, s):
    """c^2 + s^2 - 1 evaluated without cancellation error."""
    p1, e1 = _two_prod(c, c)
    p2, e2 = _two_prod(s, s)
    t = p1 + p2
    bp = t - p1
    e3 = (p1 - (t - bp)) + (p2 - bp)
    return (t - 1.0) + (e1 + e2 + e3)


@njit(cache=True)
def unit_pair(angle):
    """cos and sin of ``angle`` as (c, s, c_lo, s_lo)."""
    c = np.cos(angle)
    s = np.sin(angle)
    d = 0.5 * unit_defect(c, s)
    return c, s, -c * d, -s * d


@njit(cache=True)
def hadamard_pair():
    r = 0.7071067811865476
    return r, -r * 0.5 * unit_defect(r, r)


@njit(cache=True, inline="always")
def _rotate(a, c, s, cl, sl):
    """(c + i s) a for the pair c + cl, s + sl."""
    return complex(_dot(c, a.real, -s, a.imag, cl, -sl), _dot(c, a.imag, s, a.real, cl, sl))


@njit(cache=True)
def hadamard(psi, q):
    dim, nb = psi.shape
    s = 1 << q
    r, rl = hadamard_pair()
    for i in range(dim):
        if i & s:
            continue
        j = i | s
        for b in range(nb):
            u = psi[i, b] + psi[j, b]
            v = psi[i, b] - psi[j, b]
            psi[i, b] = complex(_mul(r, u.real, rl), _mul(r, u.imag, rl))
            psi[j, b] = complex(_mul(r, v.real, rl), _mul(r, v.imag, rl))


@njit(cache=True)
def rz(psi, q, angle):
    # exp(-i angle sigma_z / 2): bit 0 -> e^{-i angle/2}, bit 1 -> e^{+i angle/2}
    dim, nb = psi.shape
    s = 1 << q
    c, sn, cl, sl = unit_pair(0.5 * angle)
    for i in range(dim):
        sg = 1.0 if i & s else -1.0
        for b in range(nb):
            psi[i, b] = _rotate(psi[i, b], c, sg * sn, cl, sg * sl)


@njit(cache=True)
def phase_on_mask(psi, mask, angle):
    dim, nb = psi.shape
    c, s, cl, sl = unit_pair(angle)
    for i in range(dim):
        if i & mask == mask:
            for b in range(nb):
                psi[i, b] = _rotate(psi[i, b], c, s, cl, sl)


@njit(cache=True)
def xx_rotation(psi, qa, qb, angle):
    # exp(-i angle X_a X_b) = cos(angle) - i sin(angle) X_a X_b
    dim, nb = psi.shape
    c, s, cl, sl = unit_pair(angle)
    if qa == qb:
        phase_on_mask(psi, 0, -angle)
        return
    sa = 1 << qa
    flip = sa | (1 << qb)
    for i in range(dim):
        if i & sa:
            continue
        j = i ^ flip
        for b in range(nb):
            a0 = psi[i, b]
            a1 = psi[j, b]
            psi[i, b] = complex(_dot(c, a0.real, s, a1.imag, cl, sl), _dot(c, a0.imag, -s, a1.real, cl, -sl))
            psi[j, b] = complex(_dot(c, a1.real, s, a0.imag, cl, sl), _dot(c, a1.imag, -s, a0.real, cl, -sl))


@njit(cache=True)
def xx_rotation_fast(psi, qa, qb, angle):
    """exp(-i angle X_a X_b) with plain double coefficients (noise channel)."""
    dim, nb = psi.shape
    c = np.cos(angle)
    ms = -1j * np.sin(angle)
    if qa == qb:
        f = c + ms
        for i in range(dim):
            for b in range(nb):
                psi[i, b] *= f
        return
    sa = 1 << qa
    flip = sa | (1 << qb)
    for i in range(dim):
        if i & sa:
            continue
        j = i ^ flip
        for b in range(nb):
            a0 = psi[i, b]
            a1 = psi[j, b]
            psi[i, b] = c * a0 + ms * a1
            psi[j, b] = c * a1 + ms * a0


@njit(cache=True)
def swap(psi, qa, qb):
    dim, nb = psi.shape
    sa = 1 << qa
    sb = 1 << qb
    for i in range(dim):
        if (i & sa) and not (i & sb):
            j = (i ^ sa) | sb
            for b in range(nb):
                t = psi[i, b]
                psi[i, b] = psi[j, b]
                psi[j, b] = t


@njit(cache=True)
def odd_multiply(psi, scratch, mult, start, width):
    # |x> -> |mult * x mod 2^width> on bits [start, start + width)
    dim, nb = psi.shape
    field = ((1 << width) - 1) << start
    modmask = (1 << width) - 1
    for i in range(dim):
        x = (i & field) >> start
        y = (mult * x) & modmask
        j = (i & ~field) | (y << start)
        for b in range(nb):
            scratch[j, b] = psi[i, b]
    for i in range(dim):
        for b in range(nb):
            psi[i, b] = scratch[i, b]


@njit(cache=True)
def diagonal(psi, d):
    dim, nb = psi.shape
    for i in range(dim):
        f = d[i]
        for b in range(nb):
            psi[i, b] *= f


@njit(cache=True)
def noise_step(psi, zhalf, edge_a, edge_b, edge_j):
    """One Strang step exp(-iHz/2) exp(-iHxx) exp(-iHz/2) of the static channel."""
    diagonal(psi, zhalf)
    for e in range(edge_a.shape[0]):
        xx_rotation_fast(psi, edge_a[e], edge_b[e], edge_j[e])
    diagonal(psi, zhalf)


@njit(cache=True)
def apply_one(psi, scratch, kind, qa, qb, mask, angle, ival):
    if kind == KIND_H:
        hadamard(psi, qa)
    elif kind == KIND_RZ:
        rz(psi, qa, angle)
    elif kind == KIND_PHASE:
        phase_on_mask(psi, mask, angle)
    elif kind == KIND_XX:
        xx_rotation(psi, qa, qb, angle)
    elif kind == KIND_SWAP:
        swap(psi, qa, qb)
    elif kind == KIND_MUL:
        odd_multiply(psi, scratch, ival, qa, qb)


@njit(cache=True)
def run_sequence(psi, kinds, qa, qb, masks, angles, ivals, costs,
                 noisy, zhalf, edge_a, edge_b, edge_j):
    scratch = np.empty_like(psi)
    for g in range(kinds.shape[0]):
        apply_one(psi, scratch, kinds[g], qa[g], qb[g], masks[g], angles[g], ivals[g])
        if noisy:
            for _ in range(costs[g]):
                noise_step(psi, zhalf, edge_a, edge_b, edge_j)


# ------------------------------------------------------------------------
# Single-column kernels on split real/imaginary arrays.  Noisy runs spend
# almost all their time here; the block loops keep the innermost index
# contiguous so the compiler can vectorize them.

@njit(cache=True, inline="always")
def _rot_xx(ar, ai, br, bi, c, s, n):
    for k in range(n):
        r0 = ar[k]
        i0 = ai[k]
        r1 = br[k]
        i1 = bi[k]
        ar[k] = c * r0 + s * i1
        ai[k] = c * i0 - s * r1
        br[k] = c * r1 + s * i0
        bi[k] = c * i1 - s * r0


@njit(cache=True, inline="always")
def _pair_xx(re, im, a, b, c, s):
    r0 = re[a]
    i0 = im[a]
    r1 = re[b]
    i1 = im[b]
    re[a] = c * r0 + s * i1
    im[a] = c * i0 - s * r1
    re[b] = c * r1 + s * i0
    im[b] = c * i1 - s * r0


@njit(cache=True)
def p_xx(re, im, qa, qb, angle):
    """exp(-i angle X_a X_b) on a split single column."""
    c = np.cos(angle)
    s = np.sin(angle)
    dim = re.shape[0]
    if qa == qb:
        # X_a X_a = 1: global phase e^{-i angle}
        for i in range(dim):
            r = re[i]
            m = im[i]
            re[i] = c * r + s * m
            im[i] = c * m - s * r
        return
    lo = min(qa, qb)
    hi = max(qa, qb)
    sl = 1 << lo
    sh = 1 << hi
    if lo >= 3:
        for top in range(0, dim, 2 * sh):
            for mid in range(top, top + sh, 2 * sl):
                b00 = mid
                b11 = mid + sl + sh
                b10 = mid + sl
                b01 = mid + sh
                _rot_xx(re[b00:b00 + sl], im[b00:b00 + sl], re[b11:b11 + sl], im[b11:b11 + sl], c, s, sl)
                _rot_xx(re[b10:b10 + sl], im[b10:b10 + sl], re[b01:b01 + sl], im[b01:b01 + sl], c, s, sl)
    elif hi >= 3:
        for top in range(0, dim, 2 * sh):
            for g in range(top, top + sh, 8):
                h = g + sh
                for k in range(8):
                    if k & sl == 0:
                        _pair_xx(re, im, g + k, h + (k ^ sl), c, s)
                        _pair_xx(re, im, g + (k ^ sl), h + k, c, s)
    else:
        flip = sl | sh
        for i in range(dim):
            if i & sl == 0:
                _pair_xx(re, im, i, i ^ flip, c, s)


@njit(cache=True)
def p_hadamard(re, im, q):
    dim = re.shape[0]
    s = 1 << q
    r, rl = hadamard_pair()
    for base in range(0, dim, 2 * s):
        for i in range(base, base + s):
            j = i + s
            u = re[i] + re[j]
            v = re[i] - re[j]
            re[i] = _mul(r, u, rl)
            re[j] = _mul(r, v, rl)
            u = im[i] + im[j]
            v = im[i] - im[j]
            im[i] = _mul(r, u, rl)
            im[j] = _mul(r, v, rl)


@njit(cache=True)
def _p_scale_block(re, im, lo_, n, c, s, cl, sl):
    for i in range(lo_, lo_ + n):
        a = re[i]
        b = im[i]
        re[i] = _dot(c, a, -s, b, cl, -sl)
        im[i] = _dot(c, b, s, a, cl, sl)


@njit(cache=True)
def p_rz(re, im, q, angle):
    dim = re.shape[0]
    s = 1 << q
    c0, s0, cl, sl = unit_pair(0.5 * angle)
    for base in range(0, dim, 2 * s):
        _p_scale_block(re, im, base, s, c0, -s0, cl, -sl)
        _p_scale_block(re, im, base + s, s, c0, s0, cl, sl)


@njit(cache=True)
def p_phase(re, im, mask, angle):
    c, s, cl, sl = unit_pair(angle)
    for i in range(re.shape[0]):
        if i & mask == mask:
            a = re[i]
            b = im[i]
            re[i] = _dot(c, a, -s, b, cl, -sl)
            im[i] = _dot(c, b, s, a, cl, sl)


@njit(cache=True)
def p_xx_gate(re, im, qa, qb, angle):
    """exp(-i angle X_a X_b) as an elementary gate, with the hi + lo coefficients."""
    c, s, cl, sl = unit_pair(angle)
    flip = (1 << qa) | (1 << qb)
    for i in range(re.shape[0]):
        j = i ^ flip
        if j < i:
            continue
        r0 = re[i]
        i0 = im[i]
        r1 = re[j]
        i1 = im[j]
        re[i] = _dot(c, r0, s, i1, cl, sl)
        im[i] = _dot(c, i0, -s, r1, cl, -sl)
        re[j] = _dot(c, r1, s, i0, cl, sl)
        im[j] = _dot(c, i1, -s, r0, cl, -sl)


@njit(cache=True)
def p_swap(re, im, qa, qb):
    sa = 1 << qa
    sb = 1 << qb
    for i in range(re.shape[0]):
        if (i & sa) and not (i & sb):
            j = (i ^ sa) | sb
            t = re[i]
            re[i] = re[j]
            re[j] = t
            t = im[i]
            im[i] = im[j]
            im[j] = t


@njit(cache=True)
def p_multiply(re, im, sre, sim, mult, start, width):
    dim = re.shape[0]
    field = ((1 << width) - 1) << start
    modmask = (1 << width) - 1
    for i in range(dim):
        x = (i & field) >> start
        j = (i & ~field) | (((mult * x) & modmask) << start)
        sre[j] = re[i]
        sim[j] = im[i]
    for i in range(dim):
        re[i] = sre[i]
        im[i] = sim[i]


@njit(cache=True)
def p_diagonal(re, im, dr, di):
    for i in range(re.shape[0]):
        a = re[i]
        b = im[i]
        re[i] = dr[i] * a - di[i] * b
        im[i] = dr[i] * b + di[i] * a


@njit(cache=True)
def p_noise(re, im, zr, zi, edge_a, edge_b, edge_j):
    p_diagonal(re, im, zr, zi)
    for e in range(edge_a.shape[0]):
        p_xx(re, im, edge_a[e], edge_b[e], edge_j[e])
    p_diagonal(re, im, zr, zi)


@njit(cache=True)
def run_sequence_split(re, im, kinds, qa, qb, masks, angles, ivals, costs,
                       zr, zi, edge_a, edge_b, edge_j):
    """Gate list with the static channel after every elementary gate (one column)."""
    sre = np.empty_like(re)
    sim = np.empty_like(im)
    for g in range(kinds.shape[0]):
        k = kinds[g]
        if k == KIND_H:
            p_hadamard(re, im, qa[g])
        elif k == KIND_RZ:
            p_rz(re, im, qa[g], angles[g])
        elif k == KIND_PHASE:
            p_phase(re, im, masks[g], angles[g])
        elif k == KIND_XX:
            if qa[g] == qb[g]:
                p_phase(re, im, 0, -angles[g])
            else:
                p_xx_gate(re, im, qa[g], qb[g], angles[g])
        elif k == KIND_SWAP:
            p_swap(re, im, qa[g], qb[g])
        elif k == KIND_MUL:
            p_multiply(re, im, sre, sim, ivals[g], qa[g], qb[g])
        for _ in range(costs[g]):
            p_noise(re, im, zr, zi, edge_a, edge_b, edge_j)

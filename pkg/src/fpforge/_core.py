"""Scalar bit-level kernels on packed floating-point patterns.

Everything here is restricted to the subset of Python that numba compiles in
nopython mode: integers, floats, ``math`` and 1-D/2-D array indexing.  The
module is imported twice: once as plain Python (exact on arbitrarily wide
Python ints, used by the scalar API) and once as a JIT twin (see
``fpforge.kernels``) whose functions operate on int64 patterns.

Format parameters travel as three ints: ``m`` (fraction bits), ``e``
(exponent bits) and ``bias``.  Polynomial tables travel as a float64 matrix
plus the domain ``[xi, xf)``.
"""

import math

# compare() results
LT = -1
EQ = 0
GT = 1
UNORDERED = 2

# exp2 negative-argument paths
EXP2_RECIPROCAL = 0
EXP2_MIRROR = 1


def fix_frac_bits(m):
    """Fractional width of the internal fixed-point words (log2/exp2)."""
    return m + 16


def lod(x):
    """Leading-one detector: index of the most significant set bit of x > 0."""
    n = 0
    while x > 0xFFFFFFFF:
        x >>= 32
        n += 32
    if x >> 16:
        x >>= 16
        n += 16
    if x >> 8:
        x >>= 8
        n += 8
    if x >> 4:
        x >>= 4
        n += 4
    if x >> 2:
        x >>= 2
        n += 2
    if x >> 1:
        n += 1
    return n


def nan_bits(m, e):
    return (((1 << e) - 1) << m) | (1 << (m - 1))


def inf_bits(sign, m, e):
    return (sign << (m + e)) | (((1 << e) - 1) << m)


def pack(sign, exponent, frac, m, e, bias):
    emask = (1 << e) - 1
    biased = exponent + bias
    if biased >= emask:
        return inf_bits(sign, m, e)
    if biased <= 0:
        return 0
    return (sign << (m + e)) | (biased << m) | frac


def norm_pack(sign, e0, sig, m, e, bias):
    """Pack ``sig * 2^e0`` (sig > 0 integer), truncating below the MSB."""
    p = lod(sig)
    mmask = (1 << m) - 1
    if p >= m:
        frac = (sig >> (p - m)) & mmask
    else:
        frac = (sig << (m - p)) & mmask
    return pack(sign, e0 + p, frac, m, e, bias)


def real_pack(sign, v, e0, m, e, bias):
    """Pack ``v * 2^e0`` for a positive double v, truncating the fraction."""
    fr, ex = math.frexp(v)
    frac = int(math.ldexp(2.0 * fr - 1.0, m))
    return pack(sign, e0 + ex - 1, frac, m, e, bias)


def from_float(x, m, e, bias):
    if x != x:
        return nan_bits(m, e)
    sign = 0
    if math.copysign(1.0, x) < 0.0:
        sign = 1
    if x == 0.0:
        return 0
    if math.isinf(x):
        return inf_bits(sign, m, e)
    return real_pack(sign, abs(x), 0, m, e, bias)


def to_float(a, m, e, bias):
    emask = (1 << e) - 1
    sign = (a >> (m + e)) & 1
    ex = (a >> m) & emask
    fr = a & ((1 << m) - 1)
    s = 1.0
    if sign:
        s = -1.0
    if ex == 0:
        return s * 0.0
    if ex == emask:
        if fr:
            return math.nan
        return s * math.inf
    return s * math.ldexp(float((1 << m) | fr), ex - bias - m)


def poly_eval(c, xi, xf, x):
    """Horner evaluation of the segment polynomial containing x."""
    n = c.shape[0]
    eta = (xf - xi) / n
    k = int((x - xi) / eta)
    if k < 0:
        k = 0
    if k >= n:
        k = n - 1
    y = c[k, 0]
    for j in range(1, c.shape[1]):
        y = y * x + c[k, j]
    return y


# --------------------------------------------------------------------------
# basic operators


def neg_bits(a, m, e):
    return a ^ (1 << (m + e))


def add_bits(a, b, m, e, bias):
    emask = (1 << e) - 1
    mmask = (1 << m) - 1
    sa = (a >> (m + e)) & 1
    sb = (b >> (m + e)) & 1
    ea = (a >> m) & emask
    eb = (b >> m) & emask
    fa = a & mmask
    fb = b & mmask
    if (ea == emask and fa) or (eb == emask and fb):
        return nan_bits(m, e)
    if ea == emask:
        if eb == emask and sa != sb:
            return nan_bits(m, e)
        return inf_bits(sa, m, e)
    if eb == emask:
        return inf_bits(sb, m, e)
    if ea == 0:
        if eb == 0:
            return 0
        return b
    if eb == 0:
        return a
    # |a| >= |b| after the swap
    if eb > ea or (eb == ea and fb > fa):
        sa, sb = sb, sa
        ea, eb = eb, ea
        fa, fb = fb, fa
    d = ea - eb
    sx = (1 << m) | fa
    sy = (1 << m) | fb
    if d > m + 2:
        # beyond m+2 only the presence of the shifted-out bits matters
        d = m + 3
        sy = 1
    big = sx << d
    if sa == sb:
        s = big + sy
    else:
        s = big - sy
    if s == 0:
        return 0
    return norm_pack(sa, ea - bias - m - d, s, m, e, bias)


def sub_bits(a, b, m, e, bias):
    return add_bits(a, b ^ (1 << (m + e)), m, e, bias)


def mul_bits(a, b, m, e, bias):
    emask = (1 << e) - 1
    mmask = (1 << m) - 1
    sa = (a >> (m + e)) & 1
    sb = (b >> (m + e)) & 1
    ea = (a >> m) & emask
    eb = (b >> m) & emask
    fa = a & mmask
    fb = b & mmask
    sign = sa ^ sb
    if (ea == emask and fa) or (eb == emask and fb):
        return nan_bits(m, e)
    if ea == emask or eb == emask:
        if ea == 0 or eb == 0:
            return nan_bits(m, e)
        return inf_bits(sign, m, e)
    if ea == 0 or eb == 0:
        return 0
    p = ((1 << m) | fa) * ((1 << m) | fb)
    return norm_pack(sign, (ea - bias) + (eb - bias) - 2 * m, p, m, e, bias)


def rsh_bits(a, n, m, e, bias):
    emask = (1 << e) - 1
    ea = (a >> m) & emask
    if ea == 0 or ea == emask:
        return a
    if ea - n <= 0:
        return 0
    return a - (n << m)


def lsh_bits(a, n, m, e, bias):
    emask = (1 << e) - 1
    ea = (a >> m) & emask
    if ea == 0 or ea == emask:
        return a
    if ea + n >= emask:
        return inf_bits((a >> (m + e)) & 1, m, e)
    return a + (n << m)


def order_key(a, m, e):
    """Signed key ordering non-NaN patterns by real value (all zeros equal)."""
    emask = (1 << e) - 1
    ea = (a >> m) & emask
    if ea == 0:
        return 0
    mag = a & ((1 << (m + e)) - 1)
    if (a >> (m + e)) & 1:
        return -mag
    return mag


def is_nan_bits(a, m, e):
    emask = (1 << e) - 1
    return ((a >> m) & emask) == emask and (a & ((1 << m) - 1)) != 0


def compare_bits(a, b, m, e):
    if is_nan_bits(a, m, e) or is_nan_bits(b, m, e):
        return UNORDERED
    ka = order_key(a, m, e)
    kb = order_key(b, m, e)
    if ka < kb:
        return LT
    if ka > kb:
        return GT
    return EQ


def max_bits(a, b, m, e):
    if is_nan_bits(a, m, e):
        return b
    if is_nan_bits(b, m, e):
        return a
    if compare_bits(a, b, m, e) == LT:
        return b
    return a


def cas_bits(a, b, m, e):
    """Compare-and-swap: (min, max); equal or unordered inputs pass through."""
    if compare_bits(a, b, m, e) == GT:
        return b, a
    return a, b


# --------------------------------------------------------------------------
# polynomial-approximation operators


def div_bits(a, b, m, e, bias, rc, rxi, rxf):
    emask = (1 << e) - 1
    mmask = (1 << m) - 1
    sa = (a >> (m + e)) & 1
    sb = (b >> (m + e)) & 1
    ea = (a >> m) & emask
    eb = (b >> m) & emask
    fa = a & mmask
    fb = b & mmask
    sign = sa ^ sb
    if (ea == emask and fa) or (eb == emask and fb):
        return nan_bits(m, e)
    if ea == emask:
        if eb == emask:
            return nan_bits(m, e)
        return inf_bits(sign, m, e)
    if eb == emask:
        return 0
    if eb == 0:
        if ea == 0:
            return nan_bits(m, e)
        return inf_bits(sign, m, e)
    if ea == 0:
        return 0
    r = poly_eval(rc, rxi, rxf, math.ldexp(float(fb), -m))
    if not r > 0.0:
        return nan_bits(m, e)
    rp = real_pack(0, r, 0, m, e, bias)
    er = ((rp >> m) & emask) - bias
    p = ((1 << m) | fa) * ((1 << m) | (rp & mmask))
    return norm_pack(sign, (ea - eb) + er - 2 * m, p, m, e, bias)


def log2_bits(a, m, e, bias, lc, lxi, lxf):
    emask = (1 << e) - 1
    mmask = (1 << m) - 1
    sa = (a >> (m + e)) & 1
    ea = (a >> m) & emask
    fa = a & mmask
    if ea == emask and fa:
        return nan_bits(m, e)
    if ea == 0:
        return inf_bits(1, m, e)
    if sa:
        return nan_bits(m, e)
    if ea == emask:
        return inf_bits(0, m, e)
    nfix = fix_frac_bits(m)
    p = poly_eval(lc, lxi, lxf, math.ldexp(float(fa), -m))
    x = ((ea - bias) << nfix) + math.floor(math.ldexp(p, nfix))
    if x == 0:
        return 0
    if x < 0:
        return norm_pack(1, -nfix, -x, m, e, bias)
    return norm_pack(0, -nfix, x, m, e, bias)


def exp2_bits(a, m, e, bias, gc, gxi, gxf, rc, rxi, rxf, mode):
    emask = (1 << e) - 1
    mmask = (1 << m) - 1
    sa = (a >> (m + e)) & 1
    ea = (a >> m) & emask
    fa = a & mmask
    if ea == emask:
        if fa:
            return nan_bits(m, e)
        if sa:
            return 0
        return inf_bits(0, m, e)
    nfix = fix_frac_bits(m)
    if ea == 0:
        sa = 0
        x = 0
    else:
        ex = ea - bias
        if ex > e:
            # |a| >= 2^(e+1) leaves the exponent range in either direction
            if sa:
                return 0
            return inf_bits(0, m, e)
        sh = ex + nfix - m
        sig = (1 << m) | fa
        if sh >= 0:
            x = sig << sh
        else:
            x = sig >> (-sh)
    xi_part = x >> nfix
    xf_part = math.ldexp(float(x & ((1 << nfix) - 1)), -nfix)
    if sa == 0:
        g = poly_eval(gc, gxi, gxf, xf_part)
        return real_pack(0, g, xi_part, m, e, bias)
    if mode == EXP2_MIRROR:
        g = poly_eval(gc, gxi, gxf, -xf_part)
        return real_pack(0, g, -xi_part, m, e, bias)
    # 1 / 2^xf through the reciprocal unit
    gp = real_pack(0, poly_eval(gc, gxi, gxf, xf_part), 0, m, e, bias)
    eg = ((gp >> m) & emask) - bias
    r = poly_eval(rc, rxi, rxf, math.ldexp(float(gp & mmask), -m))
    return real_pack(0, r, -xi_part - eg, m, e, bias)


def sqrt_bits(a, m, e, bias, sc, sxi, sxf):
    emask = (1 << e) - 1
    mmask = (1 << m) - 1
    sa = (a >> (m + e)) & 1
    ea = (a >> m) & emask
    fa = a & mmask
    if ea == emask and fa:
        return nan_bits(m, e)
    if ea == 0:
        return 0
    if sa:
        return nan_bits(m, e)
    if ea == emask:
        return inf_bits(0, m, e)
    ex = ea - bias
    t = math.ldexp(float((1 << m) | fa), (ex & 1) - m)
    v = poly_eval(sc, sxi, sxf, t)
    return real_pack(0, v, ex >> 1, m, e, bias)


# --------------------------------------------------------------------------
# array loops (object arrays in pure Python, int64 arrays when compiled)


def from_float_arr(x, out, m, e, bias):
    for i in range(x.shape[0]):
        out[i] = from_float(x[i], m, e, bias)


def to_float_arr(a, out, m, e, bias):
    for i in range(a.shape[0]):
        out[i] = to_float(a[i], m, e, bias)


def neg_arr(a, out, m, e):
    for i in range(a.shape[0]):
        out[i] = neg_bits(a[i], m, e)


def add_arr(a, b, out, m, e, bias):
    for i in range(a.shape[0]):
        out[i] = add_bits(a[i], b[i], m, e, bias)


def sub_arr(a, b, out, m, e, bias):
    for i in range(a.shape[0]):
        out[i] = sub_bits(a[i], b[i], m, e, bias)


def mul_arr(a, b, out, m, e, bias):
    for i in range(a.shape[0]):
        out[i] = mul_bits(a[i], b[i], m, e, bias)


def rsh_arr(a, n, out, m, e, bias):
    for i in range(a.shape[0]):
        out[i] = rsh_bits(a[i], n, m, e, bias)


def lsh_arr(a, n, out, m, e, bias):
    for i in range(a.shape[0]):
        out[i] = lsh_bits(a[i], n, m, e, bias)


def max_arr(a, b, out, m, e):
    for i in range(a.shape[0]):
        out[i] = max_bits(a[i], b[i], m, e)


def cas_arr(a, b, lo, hi, m, e):
    for i in range(a.shape[0]):
        x, y = cas_bits(a[i], b[i], m, e)
        lo[i] = x
        hi[i] = y


def compare_arr(a, b, out, m, e):
    for i in range(a.shape[0]):
        out[i] = compare_bits(a[i], b[i], m, e)


def div_arr(a, b, out, m, e, bias, rc, rxi, rxf):
    for i in range(a.shape[0]):
        out[i] = div_bits(a[i], b[i], m, e, bias, rc, rxi, rxf)


def log2_arr(a, out, m, e, bias, lc, lxi, lxf):
    for i in range(a.shape[0]):
        out[i] = log2_bits(a[i], m, e, bias, lc, lxi, lxf)


def exp2_arr(a, out, m, e, bias, gc, gxi, gxf, rc, rxi, rxf, mode):
    for i in range(a.shape[0]):
        out[i] = exp2_bits(a[i], m, e, bias, gc, gxi, gxf, rc, rxi, rxf, mode)


def sqrt_arr(a, out, m, e, bias, sc, sxi, sxf):
    for i in range(a.shape[0]):
        out[i] = sqrt_bits(a[i], m, e, bias, sc, sxi, sxf)


def poly_arr(c, xi, xf, x, out):
    for i in range(x.shape[0]):
        out[i] = poly_eval(c, xi, xf, x[i])


def window_stream(pix, adv, h_img, w_img, tw, th, hh, ww, row0, col0, lines, regs, taps, center):
    """Cycle loop of the window generator (line buffers + shift registers).

    ``pix``/``adv`` hold the input pattern and advance strobe for each cycle of
    the block; ``row0``/``col0`` are the raster position of the first cycle.
    ``lines`` is the ``(hh-1, w_img)`` line-buffer RAM and ``regs`` the
    ``(hh, ww)`` window registers; both persist across blocks.  ``taps`` gets
    one row of ``hh*ww`` register values per cycle and ``center`` the raster
    index of the window centre (-1 when no window is formed).
    """
    half_h = hh // 2
    half_w = ww // 2
    r = row0
    c = col0
    for t in range(pix.shape[0]):
        center[t] = -1
        if adv[t]:
            # one column of hh pixels, oldest line first; reads see the
            # previous contents (read on the rising edge, write on the falling)
            for j in range(ww - 1):
                for i in range(hh):
                    regs[i, j] = regs[i, j + 1]
            regs[hh - 1, ww - 1] = pix[t]
            if c < w_img:
                for k in range(1, hh):
                    regs[hh - 1 - k, ww - 1] = lines[k - 1, c]
                for k in range(hh - 1, 0, -1):
                    if k == 1:
                        lines[0, c] = pix[t]
                    else:
                        lines[k - 1, c] = lines[k - 2, c]
            else:
                for k in range(1, hh):
                    regs[hh - 1 - k, ww - 1] = 0
            rc = r - half_h
            cc = c - half_w
            if rc >= 0 and cc >= 0 and rc < h_img and cc < w_img:
                center[t] = rc * w_img + cc
        for i in range(hh):
            for j in range(ww):
                taps[t, i * ww + j] = regs[i, j]
        c += 1
        if c == tw:
            c = 0
            r += 1
            if r == th:
                r = 0


KERNELS = (
    "lod", "nan_bits", "inf_bits", "pack", "norm_pack", "real_pack", "from_float", "to_float",
    "poly_eval", "neg_bits", "add_bits", "sub_bits", "mul_bits", "rsh_bits", "lsh_bits",
    "order_key", "is_nan_bits", "compare_bits", "max_bits", "cas_bits", "div_bits", "log2_bits",
    "exp2_bits", "sqrt_bits", "fix_frac_bits",
    "from_float_arr", "to_float_arr", "neg_arr", "add_arr", "sub_arr", "mul_arr", "rsh_arr",
    "lsh_arr", "max_arr", "cas_arr", "compare_arr", "div_arr", "log2_arr", "exp2_arr", "sqrt_arr",
    "poly_arr", "window_stream",
)

"""Hot inner loops: pointwise fractional-difference integrals.

Each kernel has a numba ``@njit`` build and a vectorized numpy fallback;
:mod:`qclab._accel` decides which one backs the public entry points.
"""

import numpy as np

from ._accel import NUMBA_ENABLED, njit, prange


@njit(cache=True, parallel=True)
def _tl_inner_numba(re, im, mask, radii, h, sigma, q, band, restrict_y, out):
    n = re.shape[0]
    qq = q
    expo = sigma * qq + 2.0
    for ix in prange(n):
        for iy in range(n):
            if not mask[ix, iy]:
                continue
            rad = radii[ix, iy]
            if rad <= 0.0:
                continue
            rc = rad / h
            ri = int(rc) + 1
            acc = 0.0
            for dx in range(-ri, ri + 1):
                jx = ix + dx
                if jx < 0 or jx >= n:
                    continue
                for dy in range(-ri, ri + 1):
                    jy = iy + dy
                    if jy < 0 or jy >= n:
                        continue
                    r2 = dx * dx + dy * dy
                    if r2 == 0:
                        continue
                    dist = np.sqrt(r2) * h
                    if dist > rad or dist < band:
                        continue
                    if restrict_y and not mask[jx, jy]:
                        continue
                    dr = re[ix, iy] - re[jx, jy]
                    di = im[ix, iy] - im[jx, jy]
                    acc += (dr * dr + di * di) ** (qq / 2.0) / dist**expo
            out[ix, iy] = acc * h * h
    return out


def _tl_inner_numpy(re, im, mask, radii, h, sigma, q, band, restrict_y, out):
    n = re.shape[0]
    vals = re + 1j * im
    expo = sigma * q + 2.0
    rmax = float(radii.max(initial=0.0))
    ri = int(rmax / h) + 1
    acc = np.zeros_like(re)
    for dx in range(-ri, ri + 1):
        for dy in range(-ri, ri + 1):
            r2 = dx * dx + dy * dy
            if r2 == 0:
                continue
            dist = np.sqrt(r2) * h
            if dist < band or dist > rmax:
                continue
            # slices of the x-plane where the shifted index is valid
            xs = slice(max(0, -dx), min(n, n - dx))
            ys = slice(max(0, -dy), min(n, n - dy))
            xt = slice(max(0, dx), min(n, n + dx))
            yt = slice(max(0, dy), min(n, n + dy))
            diff = np.abs(vals[xs, ys] - vals[xt, yt])
            ok = radii[xs, ys] >= dist
            if restrict_y:
                ok &= mask[xt, yt]
            acc[xs, ys] += np.where(ok, diff**q / dist**expo, 0.0)
    out[...] = np.where(mask & (radii > 0), acc * h * h, 0.0)
    return out


def tl_inner(values, mask, radii, h, sigma, q, band, restrict_y=True):
    """Inner fractional integral of the localized sharp function.

    Returns the array of ``int |f(x)-f(y)|^q / |x-y|^(sigma q + 2) dy``
    over ``{band <= |x-y| <= radii[x]}`` (optionally intersected with the
    mask), evaluated by midpoint rule at every masked grid point x.
    """
    re = np.ascontiguousarray(values.real)
    im = np.ascontiguousarray(values.imag)
    out = np.zeros_like(re)
    fn = _tl_inner_numba if NUMBA_ENABLED else _tl_inner_numpy
    return fn(re, im, np.ascontiguousarray(mask), np.ascontiguousarray(radii),
              float(h), float(sigma), float(q), float(band), bool(restrict_y), out)


@njit(cache=True, parallel=True)
def _pair_double_sum_numba(re, im, x, wts, p, expo, band, periodic, period):
    m = re.shape[0]
    total = 0.0
    for i in prange(m):
        acc = 0.0
        for j in range(m):
            if i == j:
                continue
            d = abs(x[i] - x[j])
            if periodic:
                d = min(d, period - d)
            if d < band:
                continue
            dr = re[i] - re[j]
            di = im[i] - im[j]
            acc += (dr * dr + di * di) ** (p / 2.0) / d**expo * wts[j]
        total += acc * wts[i]
    return total


def _pair_double_sum_numpy(re, im, x, wts, p, expo, band, periodic, period):
    vals = re + 1j * im
    total = 0.0
    block = 512
    m = len(x)
    for lo in range(0, m, block):
        hi = min(lo + block, m)
        d = np.abs(x[lo:hi, None] - x[None, :])
        if periodic:
            d = np.minimum(d, period - d)
        diff = np.abs(vals[lo:hi, None] - vals[None, :])
        ok = d >= band
        contrib = np.where(ok, diff**p / np.where(ok, d, 1.0) ** expo, 0.0)
        total += (contrib * wts[None, :]).sum(axis=1) @ wts[lo:hi]
    return total


def pair_double_sum(values, x, wts, p, expo, band, periodic=False, period=2 * np.pi):
    """Quadrature of ``iint |f(x)-f(y)|^p / |x-y|^expo dy dx`` off the band."""
    re = np.ascontiguousarray(values.real.astype(np.float64))
    im = np.ascontiguousarray(values.imag.astype(np.float64)
                              if np.iscomplexobj(values) else np.zeros_like(re))
    fn = _pair_double_sum_numba if NUMBA_ENABLED else _pair_double_sum_numpy
    return fn(re, im, np.ascontiguousarray(x, dtype=np.float64),
              np.ascontiguousarray(wts, dtype=np.float64),
              float(p), float(expo), float(band), bool(periodic), float(period))

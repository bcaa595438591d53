"""FFT singular transforms on the plane and contour kernel machinery.

The two convolution operators are Fourier multipliers on the padded torus:
with zeta = k1 + i k2,

    cauchy   C  <->  -2i / zeta      (inverts dbar; DC mode zeroed)
    beurling B  <->  conj(zeta)/zeta (= d C, unimodular off DC)

pinned by the operational identities dbar C = I and d C = B. ``cauchy``
splits off the grid mean against a Gaussian reference bump whose planar
transform is known in closed form, so compactly supported data with
nonzero mean keeps its correct far-field tail instead of acquiring the
torus DC defect.

The boundary kernel family (moment integrals h_m, the third-order kernel
K_m and its Taylor-remainder expansion) is evaluated by trapezoidal
contour quadrature, spectrally accurate on analytic curves.
"""

import math
from dataclasses import dataclass

import numpy as np

from .geometry import BoundaryCurve
from .grid import (
    GridField,
    RegionMask,
    crop,
    embed,
    ensure_padded,
)


def _multiplier(field: GridField, symbol_fn) -> GridField:
    zeta = field.spec.freq()
    sym = np.zeros_like(zeta)
    nz = zeta != 0
    sym[nz] = symbol_fn(zeta[nz])
    vals = np.fft.ifft2(np.fft.fft2(field.values) * sym)
    return field.with_values(vals)


def beurling(f: GridField, power: int = 1, pad: bool | None = None) -> GridField:
    """Beurling multiplier (conj(zeta)/zeta)^power; mean-zero output.

    The support policy doubles the box when the field is not negligible
    outside the inner half-box (``pad=None``); pass ``pad=False`` for data
    that is genuinely periodic rather than compactly supported, or
    ``pad=True`` to force a doubled box (sharper far fields).
    """
    if pad is False:
        g, back = f, None
    elif pad is True:
        g, back = embed(f, 2), f.spec
    else:
        g, back = ensure_padded(f)
    out = _multiplier(g, lambda z: (np.conj(z) / z) ** power)
    if back is not None:
        out = crop(out, back)
    return out.with_values(out.values, f"B^{power}[{f.label}]" if power != 1 else f"B[{f.label}]")


def _gaussian_reference(spec, sigma):
    r2 = np.abs(spec.zgrid()) ** 2
    return np.exp(-r2 / sigma**2)


def _gaussian_cauchy_exact(spec, sigma):
    z = spec.zgrid()
    r2 = np.abs(z) ** 2
    with np.errstate(invalid="ignore", divide="ignore"):
        vals = sigma**2 * (1.0 - np.exp(-r2 / sigma**2)) / np.where(z == 0, 1.0, z)
    vals[z == 0] = 0.0
    return vals


def cauchy(f: GridField, pad: bool | None = None) -> GridField:
    """Solve dbar u = f: multiplier inverse plus exact mean-part tail.

    The result is defined modulo an additive constant (DC zeroed on the
    multiplier part); d(result) = beurling(f) and dbar(result) = f minus
    its grid mean, both spectrally.
    """
    if pad is False:
        g, back = f, None
    elif pad is True:
        g, back = embed(f, 2), f.spec
    else:
        g, back = ensure_padded(f)
    spec = g.spec
    total = g.values.sum()
    scale = np.abs(g.values).max()
    if abs(total) > 1e-13 * max(scale, 1.0) * spec.n:
        sigma = spec.half_width / 6.0
        bump = _gaussian_reference(spec, sigma)
        alpha = total / bump.sum()
        core = _multiplier(g.with_values(g.values - alpha * bump), lambda z: -2j / z)
        vals = core.values + alpha * _gaussian_cauchy_exact(spec, sigma)
        out = g.with_values(vals)
    else:
        out = _multiplier(g, lambda z: -2j / z)
    if back is not None:
        out = crop(out, back)
    return out.with_values(out.values, f"C[{f.label}]")


def truncated_apply(op: str, f: GridField, inside: RegionMask,
                    outside_output: RegionMask, power: int = 1) -> GridField:
    """chi_out * op(chi_in * f) for op in {"B", "C"} (B supports powers).

    The truncation family stays on the field's own torus (no support
    padding) so the operator algebra, e.g. (B^2)_Om - (B_Om)^2 = R_1,
    holds to rounding.
    """
    if op == "B":
        res = beurling(f.masked(inside), power=power, pad=False)
    elif op == "C":
        if power != 1:
            raise ValueError("C has no iterated variant here")
        res = cauchy(f.masked(inside))
    else:
        raise ValueError(f"unknown operator {op!r}")
    return res.masked(outside_output)


def truncated_beurling_iterated(f: GridField, omega: RegionMask, m: int) -> GridField:
    """(B_Omega)^m f: alternate masking and transforming m times."""
    out = f
    for _ in range(m):
        out = beurling(out.masked(omega), pad=False).masked(omega)
    return out


def commutator(mu: GridField, f: GridField, omega: RegionMask) -> GridField:
    """[mu, B_Omega] f = mu * B_Omega f - B_Omega(mu f)."""
    bo = truncated_apply("B", f, omega, omega)
    bo_mu = truncated_apply("B", mu * f, omega, omega)
    return mu * bo - bo_mu


def reflection(f: GridField, m: int, omega: RegionMask) -> GridField:
    """Boundary reflection R_m f = chi_Om B(chi_Om^c B^m(chi_Om f))."""
    if m < 1:
        raise ValueError(f"m must be >= 1, got {m}")
    inner = beurling(f.masked(omega), power=m, pad=False).masked(~omega)
    return beurling(inner, pad=False).masked(omega)


# -- contour kernels ----------------------------------------------------------

def h_moment(curve: BoundaryCurve, z, m: int, power: int = 1):
    """Boundary moment integral oint (conj(tau - z))^m / (tau - z)^power dtau.

    Trapezoidal quadrature over the curve nodes (spectrally accurate for
    analytic curves). Returns (values, warn) where warn flags evaluation
    points within two node spacings of the boundary.
    """
    if m < 0 or power < 1:
        raise ValueError("need m >= 0 and power >= 1")
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    g, gp, M = curve.values, curve.derivs, curve.M
    out = np.empty(z.shape, dtype=complex)
    for i, zz in enumerate(z.ravel()):
        diff = g - zz
        out.ravel()[i] = np.sum(np.conj(diff) ** m / diff**power * gp) * (2 * np.pi / M)
    warn = _near_boundary(curve, z, 2.0)
    return out, warn


def _near_boundary(curve, z, factor):
    gap = np.min(np.abs(curve.values[None, :] - np.atleast_1d(z)[:, None]), axis=1)
    return gap < factor * curve.spacing()


@dataclass(frozen=True)
class KernelEvaluation:
    z: complex
    xi: complex
    m: int
    value: complex
    quadrature_nodes: int


def kernel_k(curve: BoundaryCurve, z: complex, xi: complex, m: int,
             rel_tol: float = 1e-8, max_nodes: int = 1 << 16) -> KernelEvaluation:
    """Third-order boundary kernel, counterclockwise path integral
    oint (conj(w - xi))^m / ((z - w)^3 (w - xi)^(m+1)) dw,
    accepted only once node doubling moves the value by < rel_tol.
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    sep = 5 * curve.spacing()
    if abs(z - xi) < sep or _near_boundary(curve, [z, xi], 5.0).any():
        raise ValueError("evaluation points too close to the boundary or each other")

    def value_at(c):
        g, gp = c.values, c.derivs
        integrand = np.conj(g - xi) ** m / ((z - g) ** 3 * (g - xi) ** (m + 1)) * gp
        return integrand.sum() * (2 * np.pi / c.M)

    cur = curve
    val = value_at(cur)
    while cur.M * 2 <= max_nodes:
        nxt = cur.resample(cur.M * 2)
        val2 = value_at(nxt)
        if abs(val2 - val) <= rel_tol * max(abs(val2), 1e-30):
            return KernelEvaluation(z, xi, m, val2, nxt.M)
        cur, val = nxt, val2
    raise RuntimeError(f"kernel quadrature did not settle below {rel_tol}")


def taylor_polynomial(derivs: dict, center: complex, degree: int):
    """Two-variable Taylor polynomial from a table {(a, b): D^(a,b) f(center)}.

    P(xi) = sum_{a+b <= degree} D^(a,b) f(center)/(a! b!) (xi-c)^a (conj(xi-c))^b.
    """
    needed = [(a, b) for a in range(degree + 1) for b in range(degree + 1 - a)]
    missing = [ab for ab in needed if ab not in derivs]
    if missing:
        raise KeyError(f"missing derivative entries {missing}")

    def evaluate(xi):
        xi = np.asarray(xi, dtype=complex)
        acc = np.zeros_like(xi)
        for (a, b) in needed:
            acc = acc + (derivs[(a, b)] / (math.factorial(a) * math.factorial(b))
                         * (xi - center) ** a * np.conj(xi - center) ** b)
        return acc

    return evaluate


def h_wirtinger_table(curve: BoundaryCurve, z: complex, m: int, order: int,
                      step: float | None = None) -> dict:
    """All D^(a,b) h_m(z) with a + b <= order, by stencil central differences."""
    if step is None:
        step = 1e-3 * max(abs(z), 1.0)
    K = order
    idx = np.arange(-K, K + 1)
    sx, sy = np.meshgrid(idx, idx, indexing="ij")
    stencil = z + step * (sx + 1j * sy)
    vals, _ = h_moment(curve, stencil.ravel(), m)
    vals = vals.reshape(stencil.shape)

    def dx(a):
        return (a[2:, :] - a[:-2, :]) / (2 * step)

    def dy(a):
        return (a[:, 2:] - a[:, :-2]) / (2 * step)

    table = {}
    for a in range(order + 1):
        for b in range(order + 1 - a):
            arr = vals
            for _ in range(a):
                arr = (dx(arr)[:, 1:-1] - 1j * dy(arr)[1:-1, :]) / 2
            for _ in range(b):
                arr = (dx(arr)[:, 1:-1] + 1j * dy(arr)[1:-1, :]) / 2
            c0, c1 = arr.shape[0] // 2, arr.shape[1] // 2
            table[(a, b)] = complex(arr[c0, c1])
    return table


def kernel_identity_basis(curve: BoundaryCurve, z: complex, xi: complex, m: int,
                          fd_step: float | None = None) -> np.ndarray:
    """Columns of the Taylor-remainder expansion of K_m at one (z, xi) pair.

    Column 0 carries the dd(h_1)(z) (conj(xi-z))^(m-1)/(xi-z)^(m+1) lead
    factor (dd(h_1) is a constant multiple of the derivative of the
    transformed domain indicator); column 1+j carries
    (H^j_m(xi) - P^(m-j)_z H^j_m(xi)) / (xi - z)^(m+3-j) with H^j_m the
    j-th holomorphic-side derivative of h_m, all derivatives taken by
    finite differences of the contour moments.
    """
    cols = []
    lead = h_wirtinger_table(curve, z, 1, 2, fd_step)[(2, 0)]
    cols.append(lead * np.conj(xi - z) ** (m - 1) / (xi - z) ** (m + 1))
    table = h_wirtinger_table(curve, z, m, m, fd_step)
    for j in range(m + 1):
        hj_xi = h_wirtinger_table(curve, xi, m, j, fd_step)[(j, 0)]
        shifted = {(a, b): table[(a + j, b)]
                   for a in range(m - j + 1) for b in range(m - j + 1 - a)}
        poly = taylor_polynomial(shifted, z, m - j)
        cols.append((hj_xi - poly(xi)) / (xi - z) ** (m + 3 - j))
    return np.array(cols)


# closed-form constants of the expansion, in the basis above (derived by
# partial fractions; the numeric fit must reproduce them on any curve
# where the columns do not degenerate)
def kernel_identity_constants(m: int) -> np.ndarray:
    lead = -m / 2.0
    cj = [-((-1.0) ** (m - j)) * math.factorial(m + 2 - j)
          / (2.0 * math.factorial(m - j) * math.factorial(j))
          for j in range(m + 1)]
    return np.array([lead] + cj)


@dataclass
class KernelIdentityFit:
    m: int
    coefficients: np.ndarray
    kept_columns: np.ndarray
    condition_number: float
    train_residual: float
    scale: float


def fit_kernel_identity(curve: BoundaryCurve, pairs, m: int,
                        cond_limit: float = 1e8) -> KernelIdentityFit:
    """Fit the expansion constants on (z, xi) pairs by least squares.

    Basis columns that vanish on the given domain (the disc degenerates
    every column) are dropped before conditioning is assessed; their
    constants are reported as zero.
    """
    rows, lhs = [], []
    for z, xi in pairs:
        rows.append(kernel_identity_basis(curve, z, xi, m))
        lhs.append(kernel_k(curve, z, xi, m).value)
    A = np.array(rows)
    b = np.array(lhs)
    scale = max(float(np.abs(A).max()), float(np.abs(b).max()), 1e-30)
    keep = np.abs(A).max(axis=0) > 1e-10 * scale
    coef = np.zeros(A.shape[1], dtype=complex)
    cond = 1.0
    resid = float(np.abs(b).max()) / scale
    if keep.any():
        Ak = A[:, keep]
        sol, _, _, sv = np.linalg.lstsq(Ak, b, rcond=None)
        cond = float(sv[0] / sv[-1]) if sv[-1] > 0 else np.inf
        if cond > cond_limit:
            raise RuntimeError(f"ill-conditioned kernel-identity fit: cond={cond:.3g}")
        coef[keep] = sol
        resid = float(np.abs(Ak @ sol - b).max()) / scale
    return KernelIdentityFit(m, coef, keep, cond, resid, scale)


def kernel_identity_residual(curve: BoundaryCurve, fit: KernelIdentityFit, pairs) -> float:
    """Max relative residual |K_m - expansion| on fresh pairs."""
    worst = 0.0
    for z, xi in pairs:
        basis = kernel_identity_basis(curve, z, xi, fit.m)
        lhs = kernel_k(curve, z, xi, fit.m).value
        rhs = basis @ fit.coefficients
        denom = max(abs(lhs), 1e-12 * fit.scale)
        worst = max(worst, abs(lhs - rhs) / denom)
    return worst


def pv_beurling_quadrature(f: GridField, omega: RegionMask, punch_cells: float = 3.0) -> GridField:
    """Principal-value area quadrature of the Beurling kernel (test oracle).

    Midpoint rule of -(1/pi) int f(w)/(z-w)^2 over the masked region with
    the disc |w - z| <= punch_cells * h removed; used only to regression-
    test the multiplier convention.
    """
    spec = f.spec
    h = spec.h
    n = spec.n
    src = np.where(omega.bits, f.values, 0.0)
    pad = np.zeros((2 * n, 2 * n), dtype=complex)
    pad[:n, :n] = src
    offs = (np.arange(2 * n) + n) % (2 * n) - n
    OX, OY = np.meshgrid(offs, offs, indexing="ij")
    W = (OX + 1j * OY) * h
    K = np.zeros_like(W)
    far = np.abs(W) > punch_cells * h
    # kernel of B at displacement u = z - w is -(1/pi) / u^2
    K[far] = -(1.0 / np.pi) / W[far] ** 2
    conv = np.fft.ifft2(np.fft.fft2(pad) * np.fft.fft2(K)) * h * h
    return f.with_values(conv[:n, :n], f"pvB[{f.label}]")

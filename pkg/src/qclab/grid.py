"""Uniform periodic complex-plane grids.

The box is ``[-L, L)^2`` sampled at ``n`` points per axis (n a power of
two), point ``(j, k)`` sitting at ``z = (-L + j h) + i (-L + k h)`` with
``h = 2L/n``. Fields are immutable complex samples on that lattice; all
transforms in the package run on top of them.

Compactly supported data is expected to live in the inner half-box
``[-L/2, L/2]^2`` so that the torus FFT semantics stay faithful to the
plane; :func:`ensure_padded` doubles the box (same spacing) when that
support check fails.
"""

import struct
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

MAGIC = b"QCGF"
SUPPORT_RTOL = 1e-12


@dataclass(frozen=True)
class GridSpec:
    """Geometry of the sampling lattice: n points per axis on [-L, L)^2."""

    n: int
    half_width: float

    def __post_init__(self):
        if self.n < 8 or self.n & (self.n - 1) != 0:
            raise ValueError(f"n must be a power of two >= 8, got {self.n}")
        if not self.half_width > 0:
            raise ValueError(f"half_width must be positive, got {self.half_width}")

    @property
    def h(self) -> float:
        return 2.0 * self.half_width / self.n

    def axis(self) -> np.ndarray:
        return -self.half_width + self.h * np.arange(self.n)

    def zgrid(self) -> np.ndarray:
        """Complex coordinates, shape (n, n), x varying along axis 0."""
        return _zgrid(self.n, self.half_width)

    def freq(self) -> np.ndarray:
        """Complex wavenumbers k1 + i k2 in FFT order, shape (n, n)."""
        return _freq(self.n, self.half_width)

    def refined(self, factor: int = 2) -> "GridSpec":
        return GridSpec(self.n * factor, self.half_width)


@lru_cache(maxsize=32)
def _zgrid(n, half_width):
    ax = -half_width + (2.0 * half_width / n) * np.arange(n)
    X, Y = np.meshgrid(ax, ax, indexing="ij")
    z = X + 1j * Y
    z.flags.writeable = False
    return z


@lru_cache(maxsize=32)
def _freq(n, half_width):
    k = 2.0 * np.pi * np.fft.fftfreq(n, d=2.0 * half_width / n)
    KX, KY = np.meshgrid(k, k, indexing="ij")
    zeta = KX + 1j * KY
    zeta.flags.writeable = False
    return zeta


def _freeze(arr):
    arr = np.ascontiguousarray(arr)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class GridField:
    """Immutable complex samples on a :class:`GridSpec` lattice."""

    spec: GridSpec
    values: np.ndarray
    label: str = ""

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.complex128)
        if v.shape != (self.spec.n, self.spec.n):
            raise ValueError(f"values shape {v.shape} != ({self.spec.n}, {self.spec.n})")
        if not np.isfinite(v.view(np.float64)).all():
            bad = np.argwhere(~np.isfinite(v))[0]
            raise ValueError(f"non-finite value at index {tuple(bad)}")
        object.__setattr__(self, "values", _freeze(v))

    def with_values(self, values, label=None):
        return GridField(self.spec, values, self.label if label is None else label)

    def masked(self, mask: "RegionMask") -> "GridField":
        _check_same_spec(self, mask)
        return self.with_values(np.where(mask.bits, self.values, 0.0))

    def conj(self):
        return self.with_values(np.conj(self.values))

    def __add__(self, other):
        return self.with_values(self.values + _coerce(self, other))

    def __radd__(self, other):
        return self.__add__(other)

    def __sub__(self, other):
        return self.with_values(self.values - _coerce(self, other))

    def __rsub__(self, other):
        return self.with_values(_coerce(self, other) - self.values)

    def __mul__(self, other):
        return self.with_values(self.values * _coerce(self, other))

    def __rmul__(self, other):
        return self.__mul__(other)

    def __neg__(self):
        return self.with_values(-self.values)


def _coerce(f: GridField, other):
    if isinstance(other, GridField):
        _check_same_spec(f, other)
        return other.values
    return other


@dataclass(frozen=True)
class RegionMask:
    """Boolean membership on a grid (a domain, its complement, a cube...)."""

    spec: GridSpec
    bits: np.ndarray
    name: str = ""

    def __post_init__(self):
        b = np.asarray(self.bits, dtype=bool)
        if b.shape != (self.spec.n, self.spec.n):
            raise ValueError(f"bits shape {b.shape} != ({self.spec.n}, {self.spec.n})")
        object.__setattr__(self, "bits", _freeze(b))

    def area(self) -> float:
        return float(self.bits.sum()) * self.spec.h**2

    def indicator(self) -> GridField:
        return GridField(self.spec, self.bits.astype(np.complex128), f"chi[{self.name}]")

    def __and__(self, other):
        _check_same_spec(self, other)
        return RegionMask(self.spec, self.bits & other.bits)

    def __or__(self, other):
        _check_same_spec(self, other)
        return RegionMask(self.spec, self.bits | other.bits)

    def __xor__(self, other):
        _check_same_spec(self, other)
        return RegionMask(self.spec, self.bits ^ other.bits)

    def __invert__(self):
        return RegionMask(self.spec, ~self.bits, f"not {self.name}")


def _check_same_spec(a, b):
    if a.spec != b.spec:
        raise ValueError(f"spec mismatch: {a.spec} vs {b.spec}")


def full_mask(spec: GridSpec) -> RegionMask:
    return RegionMask(spec, np.ones((spec.n, spec.n), dtype=bool), "box")


def disc_mask(spec: GridSpec, center=0.0, radius=1.0) -> RegionMask:
    return RegionMask(spec, np.abs(spec.zgrid() - center) < radius, f"disc(r={radius})")


def annulus_mask(spec: GridSpec, r_in, r_out, center=0.0) -> RegionMask:
    r = np.abs(spec.zgrid() - center)
    return RegionMask(spec, (r > r_in) & (r < r_out), f"annulus({r_in},{r_out})")


def mask_from_predicate(spec: GridSpec, predicate, name="") -> RegionMask:
    return RegionMask(spec, np.asarray(predicate(spec.zgrid()), dtype=bool), name)


def sample(fn, spec: GridSpec, label="") -> GridField:
    """Sample a pointwise function on the lattice; rejects non-finite output."""
    z = spec.zgrid()
    try:
        vals = np.asarray(fn(z), dtype=np.complex128)
        if vals.shape != z.shape:
            vals = np.broadcast_to(vals, z.shape)
    except (TypeError, ValueError):
        vals = np.array([[fn(w) for w in row] for row in z], dtype=np.complex128)
    if not np.isfinite(vals.view(np.float64)).all():
        bad = np.argwhere(~np.isfinite(vals))[0]
        raise ValueError(f"function returned non-finite value at z={z[tuple(bad)]}")
    return GridField(spec, vals, label)


def quadrature_integral(f: GridField, mask: RegionMask | None = None) -> complex:
    """Midpoint-rule integral ``sum f h^2`` over masked points."""
    if mask is None:
        return complex(f.values.sum() * f.spec.h**2)
    _check_same_spec(f, mask)
    return complex(f.values[mask.bits].sum() * f.spec.h**2)


def lp_norm(f: GridField, p: float, mask: RegionMask | None = None) -> float:
    """Discrete L^p norm ``(sum |f|^p h^2)^(1/p)``; p = inf gives the max."""
    if p < 1:
        raise ValueError(f"p must be >= 1, got {p}")
    if mask is None:
        vals = np.abs(f.values).ravel()
    else:
        _check_same_spec(f, mask)
        vals = np.abs(f.values[mask.bits])
    if vals.size == 0:
        return 0.0
    if np.isinf(p):
        return float(vals.max())
    return float((np.sum(vals**p) * f.spec.h**2) ** (1.0 / p))


# Wirtinger derivatives. The Fourier symbols are fixed by the two defining
# identities (d z = 1, dbar zbar = 1 on windowed samples, see tests): with
# modes exp(i k.x) and zeta = k1 + i k2,
#     d    <->  (i/2) conj(zeta),      dbar <->  (i/2) zeta.
def _wirtinger_symbol(spec: GridSpec, order):
    a, b = order
    zeta = spec.freq()
    sym = (0.5j * np.conj(zeta)) ** a * (0.5j * zeta) ** b
    if a + b > 0:
        sym = sym.copy()
        sym[0, 0] = 0.0  # derivatives defined modulo constants
    return sym


def wirtinger_derivative(f: GridField, order=(1, 0), mode="spectral") -> GridField:
    """Mixed Wirtinger derivative d^a dbar^b of a sampled field.

    ``spectral`` differentiates the periodic trigonometric interpolant
    (exact for band-limited data, DC mode zeroed); ``central`` uses
    second-order centered differences with step h, the fallback for
    non-periodic samples.
    """
    a, b = order
    if a < 0 or b < 0:
        raise ValueError(f"order must be non-negative, got {order}")
    if mode == "spectral":
        sym = _wirtinger_symbol(f.spec, order)
        vals = np.fft.ifft2(np.fft.fft2(f.values) * sym)
        return f.with_values(vals, f"D({a},{b})[{f.label}]")
    if mode == "central":
        vals = f.values
        h = f.spec.h
        for _ in range(a):
            dx = np.gradient(vals, h, axis=0)
            dy = np.gradient(vals, h, axis=1)
            vals = 0.5 * (dx - 1j * dy)
        for _ in range(b):
            dx = np.gradient(vals, h, axis=0)
            dy = np.gradient(vals, h, axis=1)
            vals = 0.5 * (dx + 1j * dy)
        return f.with_values(vals, f"D({a},{b})[{f.label}]")
    raise ValueError(f"unknown mode {mode!r}")


def fourier_l2_norm(f: GridField) -> float:
    """L^2 norm evaluated on the Fourier side (Parseval check)."""
    fh = np.fft.fft2(f.values)
    return float(np.sqrt(np.sum(np.abs(fh) ** 2) / f.spec.n**2 * f.spec.h**2))


def support_ok(f: GridField, rtol=SUPPORT_RTOL) -> bool:
    """True when the field is negligible outside the inner half-box."""
    L = f.spec.half_width
    z = f.spec.zgrid()
    outside = (np.abs(z.real) > L / 2) | (np.abs(z.imag) > L / 2)
    if not outside.any():
        return True
    scale = np.abs(f.values).max()
    if scale == 0.0:
        return True
    return float(np.abs(f.values[outside]).max()) <= rtol * scale


def embed(f: GridField, factor: int = 2) -> GridField:
    """Zero-pad into a ``factor`` times larger box at the same spacing."""
    spec = f.spec
    big = GridSpec(spec.n * factor, spec.half_width * factor)
    vals = np.zeros((big.n, big.n), dtype=np.complex128)
    off = (big.n - spec.n) // 2
    vals[off:off + spec.n, off:off + spec.n] = f.values
    return GridField(big, vals, f.label)


def crop(f: GridField, spec: GridSpec) -> GridField:
    """Restrict a field on a larger concentric box back to ``spec``."""
    if f.spec == spec:
        return f
    if f.spec.h != spec.h or f.spec.n < spec.n:
        raise ValueError("crop target must share spacing and be smaller")
    off = (f.spec.n - spec.n) // 2
    return GridField(spec, f.values[off:off + spec.n, off:off + spec.n], f.label)


def ensure_padded(f: GridField) -> tuple[GridField, GridSpec | None]:
    """Apply the support policy: double the box when the check fails.

    Returns the (possibly embedded) field and the original spec to crop
    back to, or None when no padding was needed.
    """
    if support_ok(f):
        return f, None
    return embed(f, 2), f.spec


def dump_field(f: GridField, path) -> None:
    """Binary dump: 16-byte header (magic, u32 n, f64 L) + row-major (re, im) f64 pairs."""
    header = MAGIC + struct.pack("<I", f.spec.n) + struct.pack("<d", f.spec.half_width)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(f.values.astype("<c16").tobytes(order="C"))


def load_field(path, label="") -> GridField:
    with open(path, "rb") as fh:
        header = fh.read(16)
        if header[:4] != MAGIC:
            raise ValueError(f"bad magic {header[:4]!r}")
        n = struct.unpack("<I", header[4:8])[0]
        L = struct.unpack("<d", header[8:16])[0]
        vals = np.frombuffer(fh.read(), dtype="<c16").reshape(n, n)
    return GridField(GridSpec(n, L), vals, label)


def field_to_csv(f: GridField, path) -> None:
    ax = f.spec.axis()
    with open(path, "w") as fh:
        fh.write("x,y,re,im\n")
        for j in range(f.spec.n):
            for k in range(f.spec.n):
                v = f.values[j, k]
                fh.write(f"{ax[j]:.17g},{ax[k]:.17g},{v.real:.17g},{v.imag:.17g}\n")


def interpolate(f: GridField, z) -> np.ndarray:
    """Bilinear interpolation of the field at arbitrary points in the box."""
    z = np.asarray(z, dtype=complex)
    L, h, n = f.spec.half_width, f.spec.h, f.spec.n
    fx = np.clip((z.real + L) / h, 0, n - 1 - 1e-12)
    fy = np.clip((z.imag + L) / h, 0, n - 1 - 1e-12)
    j0 = np.minimum(fx.astype(int), n - 2)
    k0 = np.minimum(fy.astype(int), n - 2)
    tx = fx - j0
    ty = fy - k0
    v = f.values
    return ((1 - tx) * (1 - ty) * v[j0, k0] + tx * (1 - ty) * v[j0 + 1, k0]
            + (1 - tx) * ty * v[j0, k0 + 1] + tx * ty * v[j0 + 1, k0 + 1])


def smoothstep(u):
    """C-infinity monotone ramp: 0 for u <= 0, 1 for u >= 1."""
    u = np.asarray(u, dtype=float)
    with np.errstate(over="ignore", divide="ignore"):
        a = np.where(u > 0, np.exp(-1.0 / np.maximum(u, 1e-12)), 0.0)
        b = np.where(u < 1, np.exp(-1.0 / np.maximum(1.0 - u, 1e-12)), 0.0)
    return a / (a + b)


def mollified_disc(spec: GridSpec, radius=1.0, width=None, center=0.0) -> GridField:
    """Indicator of a disc with a C-infinity ramp of the given total width.

    Default width is 4h, the smoothing the solvers use when testing
    regularity claims (exact indicators stay available via masks).
    """
    width = 4 * spec.h if width is None else width
    r = np.abs(spec.zgrid() - center)
    ramp = 1.0 - smoothstep((r - (radius - width / 2)) / width)
    return GridField(spec, ramp.astype(np.complex128), f"chi_moll(r={radius})")


def window_field(spec: GridSpec, flat=0.5, width=0.1) -> GridField:
    """C-infinity window: 1 on the central ``flat`` fraction of the box, 0 at the edge."""
    L = spec.half_width
    z = spec.zgrid()
    u = np.maximum(np.abs(z.real), np.abs(z.imag)) / L
    ramp = 1.0 - smoothstep((u - flat) / width)
    return GridField(spec, ramp.astype(np.complex128), "window")

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qclab.grid import (
    GridField,
    GridSpec,
    annulus_mask,
    crop,
    disc_mask,
    dump_field,
    embed,
    ensure_padded,
    field_to_csv,
    fourier_l2_norm,
    full_mask,
    interpolate,
    load_field,
    lp_norm,
    mollified_disc,
    quadrature_integral,
    sample,
    support_ok,
    window_field,
    wirtinger_derivative,
)


def test_spec_validation():
    with pytest.raises(ValueError):
        GridSpec(12, 1.0)
    with pytest.raises(ValueError):
        GridSpec(4, 1.0)
    with pytest.raises(ValueError):
        GridSpec(16, -1.0)
    assert GridSpec(16, 1.0).h == pytest.approx(2 / 16)


def test_grid_point_formula():
    spec = GridSpec(8, 1.0)
    f = sample(lambda z: z, spec)
    assert f.values[0, 0] == pytest.approx(-1 - 1j)
    # sample/evaluate round-trips exactly at grid points
    assert np.array_equal(f.values, spec.zgrid())


def test_sample_zero_and_nonfinite():
    spec = GridSpec(8, 1.0)
    assert np.all(sample(lambda z: 0.0 * z, spec).values == 0)
    with pytest.raises(ValueError, match="non-finite"):
        sample(lambda z: 1.0 / (z - (-1 - 1j)), spec)


def test_disc_area_quadrature():
    spec = GridSpec(256, 2.0)
    f = disc_mask(spec).indicator()
    val = quadrature_integral(f)
    # boundary-cell bound from the spec example: 2h * perimeter
    assert abs(val - np.pi) < 2 * spec.h * 2 * np.pi


def test_quadrature_box_and_symmetry():
    spec = GridSpec(512, 2.0)
    one = sample(lambda z: np.ones_like(z), spec)
    assert quadrature_integral(one, full_mask(spec)) == pytest.approx(16.0)
    assert quadrature_integral(sample(lambda z: np.ones_like(z), GridSpec(512, 1.0))) == pytest.approx(4.0)
    d = disc_mask(spec)
    assert abs(quadrature_integral(one, d) - np.pi) < 0.05
    zf = sample(lambda z: z, spec)
    assert abs(quadrature_integral(zf, d)) < 0.05


def test_quadrature_additive_over_disjoint_masks():
    spec = GridSpec(64, 2.0)
    f = sample(lambda z: np.exp(1j * z.real), spec)
    inner = disc_mask(spec, radius=0.7)
    ring = annulus_mask(spec, 0.7, 1.3) & ~inner
    both = inner | ring
    assert quadrature_integral(f, inner) + quadrature_integral(f, ring) == pytest.approx(
        quadrature_integral(f, both), abs=1e-14
    )


def test_wirtinger_defining_identities():
    spec = GridSpec(512, 2.0)
    w = window_field(spec, flat=0.45, width=0.35)
    interior = disc_mask(spec, radius=0.8)
    fz = sample(lambda z: z, spec) * w
    fzb = sample(lambda z: np.conj(z), spec) * w
    dz = wirtinger_derivative(fz, (1, 0)).values[interior.bits]
    dbz = wirtinger_derivative(fz, (0, 1)).values[interior.bits]
    assert np.abs(dz - 1).max() < 1e-8
    assert np.abs(dbz).max() < 1e-8
    dzb = wirtinger_derivative(fzb, (1, 0)).values[interior.bits]
    dbzb = wirtinger_derivative(fzb, (0, 1)).values[interior.bits]
    assert np.abs(dzb).max() < 1e-8
    assert np.abs(dbzb - 1).max() < 1e-8


def test_wirtinger_plane_wave_eigenfunction():
    spec = GridSpec(64, 1.0)
    zeta = spec.freq()
    idx = (3, 5)
    k1, k2 = zeta[idx].real, zeta[idx].imag
    f = sample(lambda z: np.exp(1j * (k1 * z.real + k2 * z.imag)), spec)
    eig = 0.5j * np.conj(zeta[idx])
    out = wirtinger_derivative(f, (1, 0))
    rel = np.abs(out.values - eig * f.values).max() / abs(eig)
    assert rel < 1e-10
    # symbol algebra cross-checked against central differences
    cen = wirtinger_derivative(f, (1, 0), mode="central")
    interior = np.abs(cen.values[2:-2, 2:-2] - out.values[2:-2, 2:-2]).max()
    assert interior < abs(eig) * (abs(k1) + abs(k2)) ** 2 * spec.h**2


def test_wirtinger_mixed_commutes_spectrally():
    spec = GridSpec(64, 1.0)
    rng = np.random.default_rng(0)
    f = GridField(spec, rng.standard_normal((64, 64)) + 1j * rng.standard_normal((64, 64)))
    a = wirtinger_derivative(wirtinger_derivative(f, (1, 0)), (0, 1))
    b = wirtinger_derivative(wirtinger_derivative(f, (0, 1)), (1, 0))
    assert np.abs(a.values - b.values).max() < 1e-10 * np.abs(a.values).max()


def test_lp_norms():
    spec = GridSpec(512, 2.0)
    d = disc_mask(spec)
    c = sample(lambda z: np.full_like(z, 2.0 - 1.0j), spec)
    area = d.area()
    for p in (1.0, 2.0, 4.0):
        assert lp_norm(c, p, d) == pytest.approx(abs(2 - 1j) * area ** (1 / p), rel=1e-12)
    assert abs(lp_norm(d.indicator(), 2.0) - np.sqrt(np.pi)) < 0.02
    zf = sample(lambda z: z, spec)
    corner = np.sqrt(2) * spec.half_width
    assert abs(lp_norm(zf, np.inf) - corner) < spec.h * np.sqrt(2) + 1e-12
    with pytest.raises(ValueError):
        lp_norm(zf, 0.5)


def test_parseval():
    spec = GridSpec(128, 1.5)
    rng = np.random.default_rng(1)
    f = GridField(spec, rng.standard_normal((128, 128)) + 1j * rng.standard_normal((128, 128)))
    a = lp_norm(f, 2.0)
    b = fourier_l2_norm(f)
    assert abs(a - b) / a < 1e-12


@settings(max_examples=25, deadline=None)
@given(
    c=st.complex_numbers(min_magnitude=0, max_magnitude=10, allow_nan=False, allow_infinity=False),
    p=st.sampled_from([1.0, 2.0, 3.0]),
)
def test_lp_norm_homogeneous(c, p):
    spec = GridSpec(16, 1.0)
    rng = np.random.default_rng(7)
    f = GridField(spec, rng.standard_normal((16, 16)) + 1j * rng.standard_normal((16, 16)))
    assert lp_norm(f * c, p) == pytest.approx(abs(c) * lp_norm(f, p), rel=1e-12, abs=1e-12)


def test_field_immutable_and_finite():
    spec = GridSpec(8, 1.0)
    f = sample(lambda z: z, spec)
    with pytest.raises(ValueError):
        GridField(spec, np.full((8, 8), np.nan, dtype=complex))
    with pytest.raises((ValueError, RuntimeError)):
        f.values[0, 0] = 1.0


def test_support_policy(tmp_path):
    spec = GridSpec(32, 2.0)
    inside = sample(lambda z: np.where(np.abs(z) < 0.8, 1.0 + 0j, 0.0), spec)
    assert support_ok(inside)
    wide = sample(lambda z: np.where(np.abs(z) < 1.7, 1.0 + 0j, 0.0), spec)
    assert not support_ok(wide)
    padded, back = ensure_padded(wide)
    assert back == spec and padded.spec.n == 64 and padded.spec.h == spec.h
    assert np.array_equal(crop(padded, spec).values, wide.values)
    e = embed(inside, 2)
    assert quadrature_integral(e) == pytest.approx(quadrature_integral(inside))


def test_dump_load_roundtrip(tmp_path):
    spec = GridSpec(16, 1.25)
    rng = np.random.default_rng(3)
    f = GridField(spec, rng.standard_normal((16, 16)) + 1j * rng.standard_normal((16, 16)), "blob")
    path = tmp_path / "f.qcgf"
    dump_field(f, path)
    g = load_field(path, "blob")
    assert g.spec == spec
    assert np.array_equal(g.values, f.values)
    raw = path.read_bytes()
    assert raw[:4] == b"QCGF" and len(raw) == 16 + 16 * 16 * 16
    field_to_csv(f, tmp_path / "f.csv")
    lines = (tmp_path / "f.csv").read_text().strip().split("\n")
    assert lines[0] == "x,y,re,im" and len(lines) == 1 + 16 * 16


def test_interpolation_matches_grid_points():
    spec = GridSpec(32, 1.0)
    f = sample(lambda z: z**2, spec)
    pts = spec.zgrid()[5:8, 9:12].ravel()
    assert np.abs(interpolate(f, pts) - pts**2).max() < 1e-12


def test_mollified_disc_profile():
    spec = GridSpec(128, 2.0)
    m = mollified_disc(spec)
    r = np.abs(spec.zgrid())
    assert np.all(m.values[r < 1 - 4 * spec.h].real > 1 - 1e-9)
    assert np.all(np.abs(m.values[r > 1 + 4 * spec.h]) < 1e-9)

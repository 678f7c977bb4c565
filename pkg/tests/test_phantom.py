import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from tatarc.grids import ImageGrid, RadonGrid
from tatarc.metrics import projection_consistency
from tatarc.phantom import (
    DEFAULT_PHANTOM_VERSION,
    Disk,
    GaussianBump,
    Phantom,
    PhantomError,
    default_phantom,
    exact_radon_data,
)

DISK = Phantom([Disk((0.0, 0.5), 0.2, 1.0)])
UP, RIGHT = np.array([0.0, 1.0]), np.array([1.0, 0.0])


def test_pointwise_examples():
    assert Phantom([]).eval(0.3, 0.4) == 0.0
    assert DISK.eval(0.0, 0.5) == 1.0
    assert DISK.eval(0.0, 0.8) == 0.0
    assert DISK.eval(np.array([[0.0, 0.5], [0.0, 0.8]])).tolist() == [1.0, 0.0]


def test_radon_examples():
    assert DISK.exact_radon(UP, 0.5) == pytest.approx(0.4, abs=1e-15)
    assert DISK.exact_radon(UP, 0.8) == 0.0
    assert DISK.exact_radon(RIGHT, 0.1) == pytest.approx(2 * np.sqrt(0.03), abs=1e-15)


def test_circular_mean_examples():
    c = np.array([0.0, 0.5])
    assert DISK.circular_mean(c, 0.1) == 1.0
    assert DISK.circular_mean(c, 0.4) == 0.0
    val = DISK.circular_mean(np.array([0.0, 0.1]), 0.4)
    f = lambda phi: DISK.eval(0.4 * np.cos(phi), 0.1 + 0.4 * np.sin(phi))
    # the circle touches the disk on an arc around phi = pi/2
    half = np.arccos((0.4**2 + 0.4**2 - 0.2**2) / (2 * 0.4 * 0.4))
    ref = integrate.quad(f, 0, 2 * np.pi, points=[np.pi / 2 - half, np.pi / 2 + half], epsabs=1e-12)[0] / (2 * np.pi)
    assert 0 < val < 1
    assert val == pytest.approx(ref, abs=1e-8)


def test_bump_circular_mean_gauss_vs_quad():
    ph = Phantom([GaussianBump((0.1, 0.5), 0.08, 2.0)])
    for x, r in (((0.0, 0.3), 0.2), ((0.3, 0.6), 0.35), ((0.1, 0.5), 0.05)):
        a = ph.circular_mean(np.array(x), r)
        b = ph.circular_mean(np.array(x), r, quad=True)
        assert a == pytest.approx(b, abs=1e-9)


def test_support_check():
    with pytest.raises(PhantomError):
        Phantom([Disk((0.0, 0.1), 0.2)])
    with pytest.raises(PhantomError):
        Phantom([GaussianBump((0.0, 0.8), 0.1)])
    with pytest.raises(PhantomError):
        Disk((0, 0.5), 0.0)


def test_default_phantom_is_versioned():
    ph = default_phantom()
    assert DEFAULT_PHANTOM_VERSION == 1
    assert len(ph) == 3
    assert all(isinstance(c, Disk) for c in ph.components)
    assert ph.mass == pytest.approx(np.pi * (0.04 + 0.6 * 0.0225 + 1.4 * 0.0144))


_component = st.one_of(
    st.builds(Disk, st.tuples(st.floats(-0.4, 0.4), st.floats(0.3, 0.55)), st.floats(0.02, 0.25), st.floats(-2, 2)),
    st.builds(GaussianBump, st.tuples(st.floats(-0.4, 0.4), st.floats(0.35, 0.55)), st.floats(0.01, 0.07), st.floats(-2, 2)),
)
_phantom = st.lists(_component, min_size=0, max_size=4).map(lambda c: Phantom(c, check_support=False))
_angle = st.floats(0, 2 * np.pi)


def _omega(a):
    return np.array([np.cos(a), np.sin(a)])


@given(_phantom, _angle, st.floats(-1.5, 1.5))
def test_radon_symmetry(ph, a, p):
    assert abs(ph.exact_radon(_omega(a), p) - ph.exact_radon(-_omega(a), -p)) <= 1e-10


@settings(max_examples=40)
@given(_phantom, _angle)
def test_mass_consistency(ph, a):
    w = _omega(a)
    pts = []
    for c in ph.components:
        s = float(np.dot(c.center, w))
        pts += [s - c.support_radius, s, s + c.support_radius]
    val = integrate.quad(lambda p: ph.exact_radon(w, p), -1, 1, points=sorted(pts) or None, limit=400, epsabs=1e-13, epsrel=1e-12)[0]
    assert abs(val - ph.mass) <= 1e-8 * max(1.0, sum(abs(c.mass) for c in ph.components))


@given(_phantom, _angle, st.floats(1.0, 3.0))
def test_support_in_p(ph, a, p):
    assert ph.exact_radon(_omega(a), p) == 0.0
    assert ph.exact_radon(_omega(a), -p) == 0.0


@settings(max_examples=30)
@given(_phantom, _angle, st.floats(-0.95, 0.95))
def test_radon_dp_is_derivative(ph, a, p):
    w = _omega(a)
    kinks = [float(np.dot(c.center, w)) + s * c.support_radius for c in ph.components for s in (-1, 1)]
    if any(abs(p - k) < 1e-3 for k in kinks):
        return
    h = 1e-6
    fd = (ph.exact_radon(w, p + h) - ph.exact_radon(w, p - h)) / (2 * h)
    scale = max(1.0, abs(ph.exact_radon_dp(w, p)))
    assert ph.exact_radon_dp(w, p) == pytest.approx(fd, abs=1e-3 * scale)


def test_consistency_centered_disk_exact():
    # every projection of a centred disk is the same row, so both defects vanish
    ph = Phantom([Disk((0.0, 0.0), 0.5)], check_support=False)
    rep = projection_consistency(exact_radon_data(ph, RadonGrid.symmetric(64, 1 / 128)))
    assert rep.mass_deviation <= 1e-10
    assert rep.symmetry_defect <= 1e-10


def test_consistency_default_phantom_converges():
    ph = default_phantom()
    devs = []
    for dp in (1 / 64, 1 / 256, 1 / 1024):
        rep = projection_consistency(exact_radon_data(ph, RadonGrid.symmetric(64, dp)))
        assert rep.symmetry_defect <= 1e-10
        assert rep.mass_mean == pytest.approx(ph.mass, rel=5e-3)
        devs.append(rep.mass_deviation / rep.mass_mean)
    # trapezoid on square-root edges: error ~ dp^1.5
    assert devs[2] < devs[1] < devs[0]
    assert devs[0] / devs[2] > 8**1.5 / 2


def test_render_supersample_mass():
    ph = default_phantom()
    img = ph.render(ImageGrid(256), supersample=4)
    assert img.values.sum() * img.grid.hx * img.grid.hy == pytest.approx(ph.mass, rel=2e-3)

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from crowdflow.mesh import SHAPES, box_mesh, generate_mesh
from crowdflow.simulation import Scenario, run
from crowdflow.transport import CFLError, DensityField, Transporter, WallMode, stable_dt, step, wall_correct
from oracles import upwind_1d


@pytest.fixture(scope="module")
def box():
    return box_mesh(0, 1, 0, 0.25, 40, 10)


@pytest.fixture(scope="module")
def tr_sealed(box):
    return Transporter(box, outlet="sealed")


def bump(mesh, x0=0.5, y0=0.125, w=0.08):
    C = mesh.centroids
    r2 = ((C[:, 0] - x0) ** 2 + (C[:, 1] - y0) ** 2) / w**2
    return np.where(r2 < 1, (1 - r2) ** 2, 0.0)


def test_wall_correct_examples():
    n = np.array([0.0, 1.0])
    for mode in ("scrape", "stop"):
        w = np.array([0.3, -0.2])
        assert np.array_equal(wall_correct(w, n, mode), w)
    assert np.array_equal(wall_correct(n, n, "scrape"), [0.0, 0.0])
    s = np.array([1.0, 1.0]) / math.sqrt(2)
    assert np.array_equal(wall_correct(s, n, "stop"), [0.0, 0.0])
    assert np.allclose(wall_correct(s, n, WallMode.SCRAPE), [s[0], 0.0])


def test_stable_dt_examples(box):
    w = np.tile([0.6, 0.8], (box.n_elements, 1))
    assert stable_dt(box, w, 0.5, h_min=0.01) == pytest.approx(0.005)
    assert stable_dt(box, w, 0.5, h_min=0.005) == pytest.approx(0.0025)
    assert stable_dt(box, np.zeros_like(w), 0.5, dt_max=0.3) == 0.3
    with pytest.raises(ValueError):
        stable_dt(box, w, 0.0)


def test_zero_velocity_is_identity(box, tr_sealed, rng):
    rho = rng.random(box.n_elements)
    new, out = tr_sealed.step(rho, np.zeros((box.n_elements, 2)), 0.01)
    assert np.array_equal(new, rho) and out == 0.0


def test_one_cell_pitch_shift():
    m = box_mesh(0, 1, 0, 0.25, 20, 6)
    pitch = 1 / 20
    tr = Transporter(m, outlet="open", reach=1.01 * pitch)
    rho = np.random.default_rng(1).random(m.n_elements)
    new, out = tr.step(rho, np.tile([1.0, 0.0], (m.n_elements, 1)), pitch)
    C = m.centroids
    order = np.lexsort((C[:, 1].round(12), C[:, 0].round(12)))
    per_col = 2 * 6
    before = rho[order].reshape(20, per_col)
    after = new[order].reshape(20, per_col)
    assert np.abs(after[1:] - before[:-1]).max() <= 1e-12
    assert np.abs(after[0]).max() <= 1e-12
    assert out == pytest.approx((before[-1] * m.areas[order].reshape(20, per_col)[-1]).sum(), rel=1e-12)


def test_cfl_violation_raises(box, tr_sealed):
    w = np.tile([1.0, 0.0], (box.n_elements, 1))
    with pytest.raises(CFLError):
        tr_sealed.step(np.ones(box.n_elements), w, 1.5 * box.h_min)


@given(st.floats(-1, 1), st.floats(-1, 1), st.integers(0, 10_000))
def test_interior_mass_conserved(wx, wy, seed):
    m, tr = _shared()
    g = np.random.default_rng(seed)
    rho = bump(m) * (1 + g.random(m.n_elements))
    w = np.column_stack([wx + 0.3 * g.standard_normal(m.n_elements), wy + 0.3 * g.standard_normal(m.n_elements)])
    dt = stable_dt(m, w, 0.9)
    new, out = tr.step(rho, w, dt)
    mass = rho @ m.areas
    assert out == 0.0
    assert abs(new @ m.areas - mass) <= 1e-12 * mass
    assert new.min() >= 0.0


@given(st.integers(0, 10_000))
def test_outflow_bookkeeping(seed):
    m, _ = _shared()
    tr = Transporter(m, outlet="open")
    g = np.random.default_rng(seed)
    rho = g.random(m.n_elements)
    w = np.column_stack([np.ones(m.n_elements), 0.2 * g.standard_normal(m.n_elements)])
    w = tr.correct(w)
    new, out = tr.step(rho, w, stable_dt(m, w, 1.0))
    assert out > 0
    assert new @ m.areas + out == pytest.approx(rho @ m.areas, rel=1e-13)
    assert new.min() >= 0.0


def test_walls_keep_mass_in(rng):
    m = box_mesh(0, 1, 0, 0.25, 40, 10)
    for mode in ("scrape", "stop"):
        tr = Transporter(m, outlet="sealed", mode=mode)
        rho = rng.random(m.n_elements)
        mass = rho @ m.areas
        for _ in range(50):
            w = tr.correct(np.column_stack([rng.uniform(-1, 1, m.n_elements), rng.uniform(-1, 1, m.n_elements)]))
            rho, out = tr.step(rho, w, stable_dt(m, w, 0.9))
        assert abs(rho @ m.areas - mass) <= 1e-12 * mass


def test_correct_removes_outward_components(box):
    tr = Transporter(box, mode="scrape")
    w = tr.correct(np.tile([0.3, -1.0], (box.n_elements, 1)))
    bottom = box.centroids[:, 1] < 0.025 / 2
    assert np.allclose(w[bottom], [0.3, 0.0])
    assert np.allclose(w[~bottom & (box.centroids[:, 1] > 0.05)], [0.3, -1.0])
    stop = Transporter(box, mode="stop").correct(np.tile([0.3, -1.0], (box.n_elements, 1)))
    assert np.array_equal(stop[bottom], np.zeros((bottom.sum(), 2)))


def test_density_field():
    m = box_mesh(0, 1, 0, 1, 2, 2)
    d = DensityField(m, np.ones(m.n_elements))
    assert d.mass == pytest.approx(1.0)
    c = d.copy()
    c.values[0] = 5
    assert d.values[0] == 1
    with pytest.raises(ValueError):
        DensityField(m, -np.ones(m.n_elements))
    with pytest.raises(ValueError):
        DensityField(m, np.ones(3))
    moved = step(d, np.tile([0.1, 0.0], (m.n_elements, 1)), 0.5 * m.h_min / 0.1)
    assert moved.mass <= d.mass


def strip_solution(n, t_end=0.2):
    """Scheme on an n x 2 strip of square cells vs 1-D upwind and the exact translate."""
    m = box_mesh(0, 1, 0, 2 / n, n, 2)
    tr = Transporter(m, outlet="open")
    x = (np.arange(n) + 0.5) / n
    col = np.minimum((m.centroids[:, 0] * n).astype(int), n - 1)

    def profile(s):
        return np.exp(-(((x - s) / 0.05) ** 2))

    rho = profile(0.3)[col]
    w = np.tile([1.0, 0.0], (m.n_elements, 1))
    steps = math.ceil(t_end / (0.9 * m.h_min))
    dt = t_end / steps
    for _ in range(steps):
        rho, _ = tr.step(rho, w, dt)
    scheme = np.bincount(col, weights=rho * m.areas, minlength=n) / (2 / n**2)
    ref = upwind_1d(profile(0.3), dt * n, steps)
    return scheme, ref, profile(0.3 + t_end)


def test_thin_strip_tracks_upwind_reference():
    gaps, errs = [], []
    for n in (100, 200, 400):
        scheme, ref, exact = strip_solution(n)
        gaps.append(np.abs(scheme - ref).mean())
        errs.append(np.abs(scheme - exact).mean())
    # both first order: the scheme converges and its distance to upwind shrinks
    assert np.all(np.diff(np.log2(errs)) <= -0.8)
    assert gaps[1] < gaps[0] and gaps[2] < gaps[1]
    assert gaps[2] <= 0.5 * gaps[0]


def test_empty_run_is_all_zero():
    scn = Scenario(N=0, F=0.0, T_end=5.0, stop_at_egress=False, h=1.0)
    res = run(scn, entrance=False)
    for series in (res.S, res.I, res.M, res.G, res.max_rho):
        assert not series.any()
    assert not res.rho.any()


_CACHE = {}


def _shared():
    if "m" not in _CACHE:
        m = box_mesh(0, 1, 0, 0.25, 40, 10)
        _CACHE["m"] = (m, Transporter(m, outlet="sealed"))
    return _CACHE["m"]

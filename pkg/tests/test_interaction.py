import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from crowdflow.geometry import sector_mask
from crowdflow.interaction import (
    InteractionOperator,
    InteractionParams,
    interaction_velocity,
    sector_neighbours,
    total_velocity,
)
from crowdflow.mesh import SHAPES, TriMesh, box_mesh, generate_mesh
from oracles import polar_sector_integral, polar_self_integral, rotate

R = 0.02
ALPHA = math.pi / 4


def jittered_box(h, size=0.1, amp=0.2, seed=3):
    n = int(round(size / h))
    m = box_mesh(0, size, -size / 2, size / 2, n, n)
    nodes = m.nodes.copy()
    inner = (nodes[:, 0] > 1e-12) & (nodes[:, 0] < size - 1e-12) & (np.abs(nodes[:, 1]) < size / 2 - 1e-12)
    nodes[inner] += np.random.default_rng(seed).uniform(-amp, amp, (inner.sum(), 2)) * h
    return TriMesh(nodes, m.triangles, m.boundary_edges, m.boundary_labels)


@pytest.fixture(scope="module")
def walkway():
    spec = SHAPES["rectangle"](chord_ref=0.04, buffer_depth=0.04)
    m = generate_mesh(spec, 0.005)
    from crowdflow.field import solve_potential

    vd = solve_potential(m, 3 * math.pi / 180, spec).vd
    return m, vd


def test_params_validation():
    for kw in (dict(c=-1.0), dict(R=0.0), dict(alpha=0.0), dict(alpha=math.pi / 2), dict(r_min=0.0)):
        with pytest.raises(ValueError):
            InteractionParams(**kw)


def test_empty_density_gives_zero(walkway):
    m, vd = walkway
    op = InteractionOperator(m, vd, InteractionParams(c=5e-4, R=R))
    assert np.array_equal(op(np.zeros(m.n_elements)), np.zeros((m.n_elements, 2)))


def test_single_element_ahead():
    m = box_mesh(0, 0.1, -0.05, 0.05, 20, 20)
    vd = np.tile([1.0, 0.0], (m.n_elements, 1))
    C = m.centroids
    k = int(np.argmin(np.hypot(C[:, 0] - 0.03, C[:, 1] - 0.0125)))
    # the element of the same type one cell pitch further along x
    j = int(np.argmin(np.hypot(C[:, 0] - (C[k, 0] + 0.01), C[:, 1] - C[k, 1])))
    rho = np.zeros(m.n_elements)
    rho[j] = 3.0
    p = InteractionParams(c=0.1, R=R)
    r = C[j, 0] - C[k, 0]
    v = interaction_velocity(k, rho, vd, m, p)
    assert v == pytest.approx([-0.1 * 3.0 * m.areas[j] / r, 0.0], abs=1e-15)


def test_clamp_regularises_close_pairs():
    m = box_mesh(0, 0.1, -0.05, 0.05, 20, 20)
    vd = np.tile([1.0, 0.0], (m.n_elements, 1))
    k = 210
    nb = sector_neighbours(m, k, vd[k], InteractionParams(R=R))
    j = nb[np.argmin(np.hypot(*(m.centroids[nb] - m.centroids[k]).T))]
    rho = np.zeros(m.n_elements)
    rho[j] = 1.0
    r = np.hypot(*(m.centroids[j] - m.centroids[k]))
    big = InteractionParams(c=1.0, R=R, r_min=10 * r)
    v = interaction_velocity(k, rho, vd, m, big)
    assert np.hypot(*v) == pytest.approx(m.areas[j] / (10 * r))


def test_operator_matches_direct_sum(walkway, rng):
    m, vd = walkway
    p = InteractionParams(c=5e-4, R=R)
    op = InteractionOperator(m, vd, p)
    rho = rng.random(m.n_elements) * 1e4
    v = op(rho)
    for k in rng.choice(m.n_elements, 40, replace=False):
        assert np.allclose(v[k], interaction_velocity(k, rho, vd, m, p), rtol=1e-12, atol=1e-15)


def test_neighbours_are_sector_members_only(walkway):
    m, vd = walkway
    p = InteractionParams(R=R)
    for k in (0, 500, 1234, m.n_elements - 1):
        nb = sector_neighbours(m, k, vd[k], p)
        C = m.centroids
        brute = np.flatnonzero(sector_mask(C[k], vd[k], R, ALPHA, C))
        assert np.array_equal(nb, brute[brute != k])
        assert np.all(np.diff(nb) > 0)


def test_uniform_density_matches_polar_quadrature():
    # midpoint rule vs the exact sector integral with the element's own footprint removed
    h = R / 20
    m = jittered_box(h)
    vd = np.tile([1.0, 0.0], (m.n_elements, 1))
    op = InteractionOperator(m, vd, InteractionParams(c=1.0, R=R))
    v = op(np.ones(m.n_elements))
    C = m.centroids
    ks = np.flatnonzero((np.abs(C[:, 0] - 0.04) < 0.01) & (np.abs(C[:, 1]) < 0.01))
    full = polar_sector_integral(R, ALPHA)
    assert full[0] == pytest.approx(2 * R * math.sin(ALPHA), rel=1e-8)
    ratio = []
    for k in ks:
        exact = full - polar_self_integral(m.coords[k], C[k], (1.0, 0.0), R, ALPHA)
        ratio.append(-v[k, 0] / exact[0])
    ratio = np.array(ratio)
    assert abs(ratio.mean() - 1) <= 0.02
    assert np.abs(v[ks, 1]).mean() <= 0.02 * full[0]


def test_symmetric_density_has_no_lateral_push():
    m = box_mesh(0, 0.1, -0.05, 0.05, 40, 40)
    vd = np.tile([1.0, 0.0], (m.n_elements, 1))
    C = m.centroids
    rho = np.exp(-((C[:, 0] - 0.06) ** 2 + C[:, 1] ** 2) / 0.02**2)
    v = InteractionOperator(m, vd, InteractionParams(c=1.0, R=R))(rho)
    assert abs(v[:, 1].sum()) <= 1e-12 * np.abs(v).sum()
    # the mirror image of every element sees the mirrored push
    mirror = np.lexsort((-C[:, 1].round(12), C[:, 0].round(12)))
    order = np.lexsort((C[:, 1].round(12), C[:, 0].round(12)))
    assert np.allclose(v[order, 0], v[mirror, 0], atol=1e-14)
    assert np.allclose(v[order, 1], -v[mirror, 1], atol=1e-14)


def test_c_zero_gives_desired_velocity(walkway, rng):
    m, vd = walkway
    op = InteractionOperator(m, vd, InteractionParams(c=0.0, R=R))
    assert np.array_equal(total_velocity(rng.random(m.n_elements), vd, op), vd)


@given(st.floats(-5, 5), st.floats(-5, 5), st.integers(0, 1000))
def test_linearity(a, b, seed):
    m, vd, op = _small()
    g = np.random.default_rng(seed)
    r1, r2 = g.random(m.n_elements), g.random(m.n_elements)
    lhs = op(a * r1 + b * r2)
    rhs = a * op(r1) + b * op(r2)
    assert np.allclose(lhs, rhs, rtol=1e-12, atol=1e-12 * (np.abs(op(r1)).max() + np.abs(op(r2)).max()) * 10)


def test_doubling_density_doubles_velocity(walkway, rng):
    m, vd = walkway
    op = InteractionOperator(m, vd, InteractionParams(c=5e-4, R=R))
    rho = rng.random(m.n_elements)
    assert np.array_equal(op(2 * rho), 2 * op(rho))


def test_push_opposes_heading(walkway, rng):
    m, vd = walkway
    op = InteractionOperator(m, vd, InteractionParams(c=5e-4, R=R))
    v = op(rng.random(m.n_elements))
    assert np.all(np.einsum("ij,ij->i", v, vd) <= 1e-15)


def test_mass_outside_sector_is_invisible(walkway, rng):
    m, vd = walkway
    p = InteractionParams(c=5e-4, R=R)
    rho = rng.random(m.n_elements)
    for k in (100, 900, 2000):
        inside = np.zeros(m.n_elements)
        nb = sector_neighbours(m, k, vd[k], p)
        inside[nb] = rho[nb]
        assert np.array_equal(interaction_velocity(k, rho, vd, m, p), interaction_velocity(k, inside, vd, m, p))


def test_rotating_everything_rotates_the_push():
    m = jittered_box(R / 6, size=0.06)
    ang = 0.7
    nodes = rotate(m.nodes, ang)
    mr = TriMesh(nodes, m.triangles, m.boundary_edges, m.boundary_labels)
    heading = np.tile([0.8, 0.6], (m.n_elements, 1))
    rho = np.random.default_rng(0).random(m.n_elements)
    p = InteractionParams(c=1.0, R=R)
    v = InteractionOperator(m, heading, p)(rho)
    vr = InteractionOperator(mr, rotate(heading, ang), p)(rho)
    assert np.allclose(vr, rotate(v, ang), atol=1e-12)


_CACHE = {}


def _small():
    if "op" not in _CACHE:
        m = box_mesh(0, 0.08, -0.02, 0.02, 16, 8)
        vd = np.tile([1.0, 0.0], (m.n_elements, 1))
        _CACHE["op"] = (m, vd, InteractionOperator(m, vd, InteractionParams(c=1.0, R=R)))
    return _CACHE["op"]

import json
import math

import numpy as np
import pytest

from kakeyalab.geometry import (
    AffineSubspace,
    Ball,
    GeometryError,
    OracleUnavailable,
    Sphere,
    QuadricGraph,
    Tube,
    TubeFamily,
    angle_to_subspace,
    cap_decompose,
    direction_separated,
    load_variety,
    neighborhood_volume,
    projective_angle,
    rescale_cap,
    tangency_check,
    tube_contains,
    unit_ball_volume,
)


def unit(theta):
    return np.array([math.cos(theta), math.sin(theta)])


# -- tubes -----------------------------------------------------------------


@pytest.mark.parametrize("x,expected", [((0.3, 0.05), True), ((0.3, 0.2), False), ((0.6, 0.0), False)])
def test_tube_contains_examples(x, expected):
    t = Tube([0.0, 0.0], [1.0, 0.0], 0.1)
    assert tube_contains(t, x) is expected


def test_tube_contains_dimension_mismatch():
    with pytest.raises(GeometryError):
        tube_contains(Tube([0, 0], [1, 0], 0.1), [0, 0, 0])


def test_non_unit_direction_rejected():
    with pytest.raises(GeometryError):
        Tube([0, 0], [1.0, 1e-5], 0.1)


@pytest.mark.parametrize("n", [2, 3])
def test_tube_volume_rejection_sampling(n):
    rng = np.random.default_rng(7)
    delta = 0.2
    v = rng.standard_normal(n)
    v /= np.linalg.norm(v)
    t = Tube(np.zeros(n), v, delta)
    box = 0.5 + delta
    N = 10 ** 5
    pts = rng.uniform(-box, box, (N, n))
    est = np.count_nonzero(tube_contains(t, pts)) / N * (2 * box) ** n
    exact = unit_ball_volume(n - 1) * delta ** (n - 1)
    assert est == pytest.approx(exact, rel=0.02)
    assert t.volume == pytest.approx(exact)


def test_unit_ball_volumes():
    assert unit_ball_volume(0) == 1
    assert unit_ball_volume(1) == pytest.approx(2)
    assert unit_ball_volume(2) == pytest.approx(math.pi)
    assert unit_ball_volume(3) == pytest.approx(4 * math.pi / 3)


def test_direction_separated_examples():
    d = 0.05
    assert direction_separated(TubeFamily([[0, 0], [0, 0]], [unit(0), unit(2 * d)], d))
    assert not direction_separated(TubeFamily([[0, 0], [0, 0]], [unit(0), unit(d / 2)], d))
    assert direction_separated(TubeFamily([[0, 0]], [unit(1)], d))
    # antipodal directions coincide
    assert not direction_separated(TubeFamily([[0, 0], [0, 0]], [unit(0), -unit(d / 2)], d))


def test_projective_angle_is_unsigned():
    assert projective_angle(unit(0.3), -unit(0.3)) == pytest.approx(0, abs=1e-7)
    assert projective_angle(unit(0), unit(math.pi / 2)) == pytest.approx(math.pi / 2)


def test_family_json_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    dirs = rng.standard_normal((5, 3))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    f = TubeFamily(rng.uniform(-1, 1, (5, 3)), dirs, 0.01)
    path = tmp_path / "f.json"
    f.save(path)
    g = TubeFamily.load(path)
    assert g == f
    assert json.loads(path.read_text())["n"] == 3


def test_family_json_rejects_non_unit():
    bad = {"n": 2, "delta": 0.1, "tubes": [{"center": [0, 0], "dir": [1.0, 0.1]}]}
    with pytest.raises(GeometryError, match="not a unit vector"):
        TubeFamily.from_dict(bad)


def test_family_requires_common_delta():
    with pytest.raises(GeometryError):
        TubeFamily.from_tubes([Tube([0, 0], [1, 0], 0.1), Tube([0, 0], [1, 0], 0.2)])


# -- angles ------------------------------------------------------------------


def test_angle_to_subspace_examples():
    assert angle_to_subspace([1, 0, 0], [[1, 0, 0], [0, 1, 0]]) == pytest.approx(0)
    assert angle_to_subspace([0, 0, 1], [[1, 0, 0], [0, 1, 0]]) == pytest.approx(math.pi / 2)
    v = np.array([1, 1, 0]) / math.sqrt(2)
    assert angle_to_subspace(v, [[1, 0, 0]]) == pytest.approx(math.pi / 4)


def test_angle_to_subspace_caps():
    v = np.array([1, 1, 0]) / math.sqrt(2)
    assert angle_to_subspace(v, [[1, 0, 0]], beta=0.2) == pytest.approx(math.pi / 4 - 0.1)
    assert angle_to_subspace(v, [[1, 0, 0]], beta=2.0) == 0
    assert angle_to_subspace(v, [[1, 0, 0]], beta=1.7) == 0


def test_angle_to_subspace_rejects_bad_bases():
    with pytest.raises(GeometryError):
        angle_to_subspace([1, 0], [[1, 0], [0, 1]])
    with pytest.raises(GeometryError):
        angle_to_subspace([1, 0, 0], [[1, 0, 0], [2, 0, 0]])


# -- caps --------------------------------------------------------------------


def maximal_separated_2d(delta):
    m = int(math.floor(math.pi / delta))
    dirs = [unit(i * math.pi / m) for i in range(m)]
    return TubeFamily(np.zeros((m, 2)), dirs, delta)


def test_cap_decompose_parallel_family():
    f = TubeFamily([[0, 0], [0, 0.3], [0.2, -0.1]], [unit(0.4)] * 3, 0.01)
    caps = cap_decompose(f, 0.25)
    assert len(caps) == 1
    assert caps.caps[0].members == (0, 1, 2)


@pytest.mark.parametrize("n", [2, 3])
def test_cap_decompose_whole_sphere(n):
    rng = np.random.default_rng(1)
    dirs = rng.standard_normal((20, n))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    caps = cap_decompose(TubeFamily(np.zeros((20, n)), dirs, 0.01), 2.0)
    assert len(caps) == 1 and caps.whole_sphere


def test_cap_sizes_for_maximal_separated_set():
    delta, beta = 1 / 64, 1 / 4
    f = maximal_separated_2d(delta)
    caps = cap_decompose(f, beta)
    bound = math.ceil(beta / delta) + 1
    assert max(len(c.members) for c in caps.caps) <= bound
    assert sum(len(c.members) for c in caps.caps) == len(f)


@pytest.mark.parametrize("n,beta", [(2, 0.1), (2, 0.5), (3, 0.3), (3, 0.6)])
def test_cap_membership_and_cover(n, beta):
    rng = np.random.default_rng(3)
    dirs = rng.standard_normal((300, n))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    f = TubeFamily(np.zeros((300, n)), dirs, 0.01)
    caps = cap_decompose(f, beta)
    centers = caps.centers[caps.assignment]
    assert np.all(projective_angle(f.dirs, centers) <= beta / 2 + 1e-12)
    # multiplicity is a measured quantity; it stays bounded
    assert caps.overlap_multiplicity(f.dirs) <= 8


def test_cap_decompose_requires_beta_at_least_delta():
    with pytest.raises(GeometryError):
        cap_decompose(TubeFamily([[0, 0]], [[1, 0]], 0.1), 0.05)


# -- rescaling -----------------------------------------------------------------


def random_cap_family(rng, beta, count, delta):
    omega = unit(0.7)
    ang = 0.7 + rng.uniform(-beta / 2, beta / 2, count)
    dirs = np.column_stack([np.cos(ang), np.sin(ang)])
    return TubeFamily(rng.uniform(-0.5, 0.5, (count, 2)), dirs, delta), omega


def test_rescale_identity_for_beta_one():
    rng = np.random.default_rng(0)
    f, omega = random_cap_family(rng, 0.5, 10, 0.01)
    out = rescale_cap(f, 1.0, omega)
    assert out.max_cover == 1
    assert np.allclose(out.family.centers, f.centers)
    assert np.allclose(np.abs(np.sum(out.family.dirs * f.dirs, axis=1)), 1)
    assert out.family.delta == f.delta


def test_rescale_tube_along_omega():
    f = TubeFamily([[0.1, 0.2]], [unit(0.3)], 0.01)
    out = rescale_cap(f, 0.125, unit(0.3))
    assert len(out.family) == 1
    assert out.family.delta == pytest.approx(0.08)


def test_rescale_rejects_tube_outside_cap():
    f = TubeFamily([[0, 0]], [unit(0.5)], 0.01)
    with pytest.raises(GeometryError):
        rescale_cap(f, 0.125, unit(0.0))


def test_rescale_cover_count_and_containment():
    rng = np.random.default_rng(11)
    beta, delta = 1 / 8, 1 / 200
    f, omega = random_cap_family(rng, beta, 100, delta)
    out = rescale_cap(f, beta, omega)
    assert out.max_cover <= 4
    L = out.matrix
    for i, t in enumerate(f):
        # uniform samples of T, mapped by L, must land in the covering tubes
        s = rng.uniform(-0.5, 0.5, 10 ** 4)
        r = rng.uniform(-delta, delta, 10 ** 4)
        w = np.array([-t.direction[1], t.direction[0]])
        pts = t.center + s[:, None] * t.direction + r[:, None] * w
        img = pts @ L.T
        inside = np.zeros(len(img), dtype=bool)
        for j in out.cover[i]:
            inside |= tube_contains(out.family[j], img) | _near(out.family[j], img)
        assert inside.all()


def _near(t, pts, slack=1e-9):
    rel = pts - t.center
    along = rel @ t.direction
    perp = np.linalg.norm(rel - along[:, None] * t.direction, axis=1)
    return (np.abs(along) <= 0.5 + slack) & (perp <= t.delta + slack)


# -- varieties -------------------------------------------------------------------


def test_hyperplane_oracle_exact():
    Z = AffineSubspace.hyperplane([0, 0, 1], 0.0)
    x = np.array([[0.3, -0.2, 0.7], [1, 1, -0.25]])
    assert np.allclose(Z.distance(x), [0.7, 0.25], atol=1e-12)


def test_sphere_oracle_exact():
    Z = Sphere([0, 0], 1.0)
    assert Z.distance(np.array([[2.0, 0.0], [0.0, 0.5]])) == pytest.approx([1.0, 0.5], abs=1e-12)


def test_quadric_graph_distance_matches_brute_force():
    Z = QuadricGraph([[1.0]], [0.0], 0.0)  # y = x^2
    u = np.linspace(-3, 3, 200001)
    curve = np.column_stack([u, u ** 2])
    for x in ([0.3, 0.5], [1.0, -0.5], [-0.2, 2.0]):
        brute = np.min(np.linalg.norm(curve - x, axis=1))
        assert Z.distance(np.array([x]))[0] == pytest.approx(brute, abs=1e-6)


def test_poly_variety_needs_point_cloud_box():
    text = json.dumps({"kind": "poly", "coeffs": [[2, 0, "1"], [0, 2, "1"], [0, 0, "-1"]]})
    with pytest.raises(OracleUnavailable):
        load_variety(text)
    Z = load_variety(text, box=([-1.5, -1.5], [1.5, 1.5]), spacing=0.005)
    assert Z.distance(np.array([[0.0, 0.5]]))[0] == pytest.approx(0.5, abs=0.01)


def test_hyperplane_json_convention():
    Z = load_variety(json.dumps({"kind": "hyperplane", "coeffs": [0, 1, -0.25]}))
    assert Z.distance(np.array([[3.0, 0.25]]))[0] == pytest.approx(0, abs=1e-12)


DELTA, R = 0.01, 0.5


def test_tangency_on_flat_tube():
    Z = AffineSubspace.hyperplane([0, 1], 0.0)
    res = tangency_check(Tube([0, 0], [1, 0], DELTA), Z, Ball([0, 0], R))
    assert res and res.meets and res.aligned and res.inclusion


def test_tangency_fails_when_tilted():
    Z = AffineSubspace.hyperplane([0, 1], 0.0)
    tilt = 10 * 0.1 * DELTA / R
    res = tangency_check(Tube([0, 0], unit(tilt), DELTA), Z, Ball([0, 0], R))
    assert not res and not res.aligned


def test_tangency_fails_when_far():
    Z = AffineSubspace.hyperplane([0, 1], 0.0)
    res = tangency_check(Tube([0, 3 * DELTA], [1, 0], DELTA), Z, Ball([0, 0], R))
    assert not res and not res.meets


def test_tangency_implies_inclusion():
    rng = np.random.default_rng(5)
    Zs = [AffineSubspace.hyperplane([0, 1], 0.0), Sphere([0, -2.0], 2.0)]
    seen = 0
    for Z in Zs:
        for _ in range(40):
            ang = rng.uniform(-0.004, 0.004)
            # axis within delta/2 of Z; grazing tubes are covered below
            off = rng.uniform(-0.5 * DELTA, 0.5 * DELTA)
            t = Tube([rng.uniform(-0.1, 0.1), off], unit(ang), DELTA)
            res = tangency_check(t, Z, Ball([0, 0], 0.3))
            if res.meets and res.aligned:
                seen += 1
                assert res.inclusion
    assert seen > 10


def test_grazing_tube_is_not_tangent():
    # meets N_delta Z only with its far edge: angle fine, inclusion fails
    Z = AffineSubspace.hyperplane([0, 1], 0.0)
    res = tangency_check(Tube([0, 1.9 * DELTA], [1, 0], DELTA), Z, Ball([0, 0], R))
    assert res.meets and res.aligned and not res.inclusion
    assert not res


def test_neighborhood_volume_examples():
    B = Ball([0, 0], 1.0)
    line = AffineSubspace([0, 0], tangent=[[1, 0]])
    assert neighborhood_volume(line, B, 0.05, 0.0125) == pytest.approx(2 * 2 * 0.05, rel=0.1)
    point = AffineSubspace([0, 0], tangent=np.zeros((0, 2)))
    assert neighborhood_volume(point, Ball([0, 0], 0.2), 0.05, 0.0125) == pytest.approx(math.pi * 0.05 ** 2, rel=0.1)
    circle = Sphere([0, 0], 1.0)
    annulus = math.pi * ((1.02) ** 2 - (0.98) ** 2)
    assert neighborhood_volume(circle, Ball([0, 0], 1.5), 0.02, 0.005) == pytest.approx(annulus, rel=0.1)


def test_neighborhood_volume_halving():
    B = Ball([0, 0], 1.0)
    line = AffineSubspace([0, 0], tangent=[[1, 0]])
    v1 = neighborhood_volume(line, B, 0.04, 0.005)
    v2 = neighborhood_volume(line, B, 0.02, 0.005)
    assert v2 / v1 == pytest.approx(0.5, rel=0.05)


def test_neighborhood_volume_rejects_coarse_grid():
    with pytest.raises(GeometryError):
        neighborhood_volume(Sphere([0, 0], 1.0), Ball([0, 0], 1.0), 0.02, 0.01)

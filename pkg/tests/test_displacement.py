import numpy as np
import pytest

from charfol.displacement import (ArcSet, NoCommonGapError, certify_displacing,
                                  displace_inward, find_common_gap, neighbourhood_samples,
                                  sullivan_function, thickened_arc_cloud)
from charfol.flow import flow_jacobian
from charfol.hypersurface import cylinder, outward_normal
from charfol.symplectic import apply_J, fd_gradient, symplecticity_defect

TWO_PI = 2 * np.pi


def single_arc(arcs=((0.0, 1.5 * np.pi),), base=(0.0, 0.0), radius=0.0):
    return ArcSet.from_config([{"base": list(base), "radius": radius, "arcs": [list(a) for a in arcs]}])


def brute_force_gap(entries, m=100000):
    """Widest run of uncovered angles on a fine grid."""
    theta = (np.arange(m) + 0.5) * TWO_PI / m
    covered = np.zeros(m, dtype=bool)
    for arcs in entries:
        for a, b in arcs:
            covered |= (np.mod(theta - a, TWO_PI) <= b - a)
    free = np.concatenate([~covered, ~covered])
    best, run = 0, 0
    for f in free:
        run = run + 1 if f else 0
        best = max(best, min(run, m))
    return best * TWO_PI / m


def test_single_arc_gap():
    g0, g1 = find_common_gap(single_arc())
    assert g0 == pytest.approx(1.5 * np.pi) and g1 == pytest.approx(TWO_PI)
    assert (g0 + g1) / 2 == pytest.approx(1.75 * np.pi)


def test_two_entries_share_gap():
    K = ArcSet.from_config([{"base": [0, 0], "radius": 0.1, "arcs": [[0, np.pi]]},
                            {"base": [1, 0], "radius": 0.1, "arcs": [[np.pi / 2, 1.5 * np.pi]]}])
    g0, g1 = find_common_gap(K)
    assert 1.5 * np.pi - 1e-12 <= g0 and g1 <= TWO_PI + 1e-12


@pytest.mark.parametrize("seed", range(5))
def test_gap_width_matches_grid_oracle(seed):
    rng = np.random.default_rng(seed)
    entries = []
    for _ in range(3):
        a = rng.uniform(0, TWO_PI, 2)
        entries.append([(x, x + w) for x, w in zip(a, rng.uniform(0.2, 1.2, 2))])
    K = ArcSet.from_config([{"base": [0, 0], "radius": 0, "arcs": [list(a) for a in e]} for e in entries])
    g0, g1 = find_common_gap(K)
    assert g1 - g0 == pytest.approx(brute_force_gap(entries), abs=2 * TWO_PI / 100000)


def test_wrapping_arc_is_split():
    g0, g1 = find_common_gap(single_arc([(1.5 * np.pi, 2.5 * np.pi)]))
    assert g0 == pytest.approx(0.5 * np.pi) and g1 == pytest.approx(1.5 * np.pi)


def test_full_circle_rejected():
    with pytest.raises(NoCommonGapError):
        find_common_gap(single_arc([(0.0, TWO_PI)]))
    K = ArcSet.from_config([{"base": [0, 0], "radius": 0, "arcs": [[0, 4]]},
                            {"base": [1, 0], "radius": 0, "arcs": [[3.5, 7]]}])
    with pytest.raises(NoCommonGapError):
        find_common_gap(K)


def test_config_roundtrip():
    K = single_arc(radius=0.2, base=(0.1, -0.3))
    assert ArcSet.from_config(K.to_config()["entries"], K.resolution) == K


def test_certified_on_arc():
    Hd = sullivan_function(single_arc())
    cert = Hd.certificate
    assert cert.ok and cert.c0 > 0
    assert cert.samples == 200 * 20
    P = neighbourhood_samples(Hd)
    JN = apply_J(outward_normal(cylinder(), P))
    dH = np.sum(Hd.gradH(P) * JN, axis=1)
    assert np.all(dH <= -cert.c0)
    # <X_H, N> equals dH(JN)
    XH = Hd.system.vector_field(P)
    N = outward_normal(cylinder(), P)
    np.testing.assert_allclose(np.sum(XH * N, axis=1), dH, atol=1e-14)
    assert cert.max_normal_velocity < 0


def test_gap_core_not_decreasing():
    Hd = sullivan_function(single_arc())
    g0, g1 = Hd.gap
    theta = (g0 + g1) / 2
    p = np.array([np.cos(theta), np.sin(theta), 0.0, 0.0])
    dH = np.dot(Hd.gradH(p), apply_J(outward_normal(cylinder(), p)))
    assert dH >= 0


def test_gradient_matches_finite_differences(rng):
    K = single_arc(radius=0.1)
    Hd = sullivan_function(K)
    theta = rng.uniform(0, TWO_PI, 40)
    rho = rng.uniform(0.6, 1.4, 40)
    P = np.stack([rho * np.cos(theta), rho * np.sin(theta),
                  rng.uniform(-0.2, 0.2, 40), rng.uniform(-0.2, 0.2, 40)], axis=1)
    g = Hd.gradH(P)
    fd = np.array([fd_gradient(Hd.H, p) for p in P])
    np.testing.assert_allclose(g, fd, atol=1e-5 * (1 + np.max(np.abs(g))))


def test_inward_velocity_at_certified_samples():
    Hd = sullivan_function(single_arc(radius=0.1))
    P = neighbourhood_samples(Hd, 50, 5)
    V = Hd.system.vector_field(P)
    assert np.all(2 * (P[:, 0] * V[:, 0] + P[:, 1] * V[:, 1]) < 0)


def test_displaced_flow_is_symplectic(rng):
    Hd = sullivan_function(single_arc())
    for theta in rng.uniform(0, 1.5 * np.pi, 3):
        p = np.array([np.cos(theta), np.sin(theta), 0.0, 0.0]) * 0.98
        assert symplecticity_defect(flow_jacobian(Hd.system, p, 0.2, 1e-3)) < 1e-6


def test_displace_thickened_arc():
    Hd = sullivan_function(single_arc())
    cloud = thickened_arc_cloud(Hd)
    result = displace_inward(cloud, Hd, 0.05, 1e-2)
    assert result.success and result.margin > 0 and result.flagged == 0
    assert np.max(result.points[:, 0] ** 2 + result.points[:, 1] ** 2) < 1 - result.margin + 1e-15
    # unit inward speed: |z1|^2 drops by 2 tau from the boundary
    assert result.margin == pytest.approx(0.1, abs=1e-9)


def test_zero_time_and_far_points(rng):
    Hd = sullivan_function(single_arc())
    cloud = thickened_arc_cloud(Hd)
    r0 = displace_inward(cloud, Hd, 0.0)
    np.testing.assert_array_equal(r0.points, cloud)
    assert abs(r0.margin) < 1e-12
    far = np.column_stack([rng.uniform(-0.2, 0.2, (10, 2)), rng.normal(size=(10, 2))])
    np.testing.assert_array_equal(displace_inward(far, Hd, 0.3).points, far)


def test_points_in_the_gap_are_flagged():
    Hd = sullivan_function(single_arc())
    theta = np.mean(Hd.gap)
    cloud = np.array([[np.cos(theta), np.sin(theta), 0.0, 0.0]])
    result = displace_inward(cloud, Hd, 0.05)
    assert result.flagged == 1 and not result.success


def test_cloud_outside_cylinder_rejected():
    Hd = sullivan_function(single_arc())
    with pytest.raises(ValueError):
        displace_inward(np.array([[1.5, 0, 0, 0]]), Hd, 0.1)


def test_certification_reports_worst_sample():
    # certify a function built for a small footprint against a wider one: samples
    # beyond the cutoff have dH(JN) = 0 and must be reported
    Hd = sullivan_function(single_arc(radius=0.05), certify=False)
    Hd.arcset = single_arc(radius=0.5)
    cert = certify_displacing(Hd)
    assert not cert.ok and cert.c0 <= 0
    assert np.hypot(*cert.worst_point[2:]) > 0.05


def test_thickening_must_avoid_gap_core():
    with pytest.raises(ValueError):
        sullivan_function(single_arc(), thicken=np.pi / 4)

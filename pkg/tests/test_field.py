import numpy as np
import pytest
from scipy.integrate import quad

from bubblescatter.dynamics import (AmplitudeSolution, closed_form_dimer, closed_form_tetramer, sine_convolution,
                                    solve_delay_system)
from bubblescatter.errors import PointInsideBubble, StrongCouplingRegime
from bubblescatter.field import (ObservationSet, dimer_collection_field, dimer_dominant_field, polymer_coefficients,
                                 read_time_series_csv, scattered_field, write_time_series_csv)
from bubblescatter.incident import eval_incident
from bubblescatter.pulse import CausalPolyExp, RaisedCosineBurst, ZeroPulse
from bubblescatter.scene import BubbleSpec, build_cluster

from conftest import dimer_centers, incident, make_cluster, tetrahedron_centers


def stacked_dimer(delta, ratio=5.0):
    return make_cluster([(3.0, 0.0, 0.0), (3.0, 0.0, ratio * delta)], delta=delta)


def decomposition_gap(delta, point, sign=-1.0):
    c = stacked_dimer(delta)
    f = incident(c)
    sol = closed_form_dimer(c, f, 30.0, 0.005)
    obs = ObservationSet([point], np.arange(0, 25, 0.01))
    us = scattered_field(c, sol, obs)[0]["u_s"]
    dom = dimer_dominant_field(c, f, obs, 30.0, 0.005)[0]
    combo = dom["U1"] + sign * dom["U2"]
    return np.abs(us - combo).max() / np.abs(us).max()


def test_zero_amplitudes_zero_field(dimer):
    t = np.linspace(0, 5, 11)
    sol = AmplitudeSolution(t, np.zeros((2, 11)), np.zeros((2, 11)), np.zeros((2, 11)))
    ts = scattered_field(dimer, sol, ObservationSet([(5.0, 5.0, 0.0)], t))
    assert np.all(ts[0]["u_s"] == 0)


def test_one_over_r_decay():
    c = make_cluster([(0.0, 0.0, 0.0)])
    f = incident(c, position=(-2.0, 0.0, 0.0))
    sol = solve_delay_system(c, f, 20.0, 0.005)
    d = np.array([0.0, 0.6, 0.8])
    R = 1.5
    t1 = np.linspace(R, 14.0, 200)
    u1 = scattered_field(c, sol, ObservationSet([R * d], t1))[0]["u_s"]
    u2 = scattered_field(c, sol, ObservationSet([2 * R * d], t1 + R))[0]["u_s"]
    mask = np.abs(u1) > 1e-3 * np.abs(u1).max()
    np.testing.assert_allclose(u1[mask] / u2[mask], 2.0, rtol=1e-6)


def test_permutation_invariance():
    centers = [(3.0, 0, 0), (3.0, 0.05, 0.0), (3.03, 0.02, 0.04)]
    bubbles = [BubbleSpec(ctr, 0.01, k_c_bar=3.0) for ctr in centers]
    c = make_cluster(centers)
    pc = build_cluster(c.medium, bubbles[::-1])
    obs = ObservationSet([(4.0, 1.0, 0.0)], np.linspace(0, 12, 121))
    a = scattered_field(c, solve_delay_system(c, incident(c), 12.0, 0.004), obs)[0]["u_s"]
    b = scattered_field(pc, solve_delay_system(pc, incident(pc), 12.0, 0.004), obs)[0]["u_s"]
    np.testing.assert_allclose(b, a, rtol=1e-11, atol=1e-13 * np.abs(a).max())


def test_retarded_time_shift():
    c = make_cluster(dimer_centers(axis=(1, 0, 0)))
    dt, k = 0.005, 60
    obs_t = np.arange(0, 14.0, dt)
    series = []
    for t0 in (0.5, 0.5 + k * dt):
        f = incident(c, pulse=RaisedCosineBurst(0.2, 2.0, t0))
        sol = solve_delay_system(c, f, 15.0, dt)
        series.append(scattered_field(c, sol, ObservationSet([(3.5, 1.0, 0.0)], obs_t))[0]["u_s"])
    scale = np.abs(series[0]).max()
    np.testing.assert_allclose(series[1][k:], series[0][:-k], atol=1e-9 * scale)


def test_two_leg_causality():
    c = make_cluster([(2.0, 0, 0), (2.0, 0.05, 0)], k_m=2.0)
    f = incident(c)
    sol = solve_delay_system(c, f, 12.0, 0.005)
    x = np.array([2.5, 1.0, -0.5])
    ts = scattered_field(c, sol, ObservationSet([x], np.linspace(0, 12, 1201)))[0]
    threshold = min(f.arrival_time(bb.center) + np.linalg.norm(x - bb.center) / c.c0 for bb in c.bubbles)
    assert np.abs(ts["u_s"][ts.t < threshold]).max() < 1e-10 * np.abs(ts["u_s"]).max()
    dom = dimer_dominant_field(c, f, ObservationSet([x], ts.t), 12.0, 0.005)[0]
    first = f.arrival_time(c.bubbles[0].center) + np.linalg.norm(x - c.bubbles[0].center) / c.c0
    assert np.all(dom["U1"][ts.t < first] == 0.0)


def test_point_inside_bubble(dimer, dimer_field):
    obs = ObservationSet([dimer.bubbles[0].center], np.linspace(0, 1, 3))
    sol = solve_delay_system(dimer, dimer_field, 1.0, 0.01)
    with pytest.raises(PointInsideBubble):
        scattered_field(dimer, sol, obs)
    with pytest.raises(PointInsideBubble):
        dimer_dominant_field(dimer, dimer_field, obs, 1.0, 0.01)


def test_corollary_variant_scaling(dimer, dimer_field):
    sol = solve_delay_system(dimer, dimer_field, 10.0, 0.01)
    obs = ObservationSet([(4.0, 0.0, 1.0)], np.linspace(0, 10, 51))
    a = scattered_field(dimer, sol, obs, "theorem")[0]["u_s"]
    b = scattered_field(dimer, sol, obs, "corollary")[0]["u_s"]
    np.testing.assert_allclose(b, a * dimer.contrast_ratio[0] * dimer.c0**2, rtol=1e-14)
    with pytest.raises(ValueError):
        scattered_field(dimer, sol, obs, "lemma")


def test_integration_by_parts_identity():
    # int_0^t sin(w(t - s)) u''(s) ds = w u(t) - w^2 int_0^t sin(w(t - s)) u(s) ds
    pulse = CausalPolyExp(10, 3.0)
    t = np.linspace(0.5, 12.0, 24)
    for w in (0.5, 1.3, 2.9):
        lhs = sine_convolution(w, lambda s: pulse(s, 2), 12.0, 0.002)(t)[0]
        conv = sine_convolution(w, pulse, 12.0, 0.002)(t)[0]
        rhs = w * pulse(t) - w**2 * conv
        assert np.abs(lhs - rhs).max() < 1e-7 * np.abs(lhs).max()
        # the opposite sign convention gives -lhs
        np.testing.assert_allclose(w**2 * conv - w * pulse(t), -lhs, atol=1e-7 * np.abs(lhs).max())


def test_sine_convolution_quadrature_oracle():
    pulse = CausalPolyExp(10, 3.0)
    w, tk = 1.3, 6.0
    ref = quad(lambda s: np.sin(w * (tk - s)) * pulse(s, 2), 0, tk, limit=200, epsabs=1e-14)[0]
    assert sine_convolution(w, lambda s: pulse(s, 2), 8.0, 0.002)(tk)[0] == pytest.approx(ref, rel=1e-8)


def test_dominant_field_formula():
    c = stacked_dimer(0.01)
    f = incident(c)
    x = np.array([3.5, 1.0, 0.0])
    t = np.linspace(0, 20, 81)
    dom = dimer_dominant_field(c, f, ObservationSet([x], t), 20.0, 0.005)[0]
    pc = polymer_coefficients(c)
    A_B = 8 * np.pi / 3
    assert pc.omega_m == pytest.approx(np.sqrt(3 * 3.0 / (4 * np.pi)))
    assert pc.j_factor == pytest.approx(1 - 0.01 / (A_B * 0.05))
    assert pc.amplitude == pytest.approx((4 * np.pi / 3) * 0.01 / (4 * np.pi * 3.0))
    S = sum(1 / np.linalg.norm(x - z) for z in c.centers)
    tr = t - np.linalg.norm(x - c.centers[0])
    u = eval_incident(f, c.centers[0], tr)
    np.testing.assert_allclose(dom["U1"], pc.omega_m**2 * pc.amplitude / pc.j_factor * S * u, rtol=1e-14)
    np.testing.assert_array_equal(dom["total"], dom["U1"] - dom["U2"])


def test_tetramer_dominant_field_uses_four_terms():
    c = make_cluster(tetrahedron_centers())
    f = incident(c)
    x = np.array([3.0, 1.0, 1.0])
    t = np.linspace(0, 10, 41)
    dom = dimer_dominant_field(c, f, ObservationSet([x], t), 10.0, 0.01)[0]
    pc = polymer_coefficients(c)
    assert pc.j_factor == pytest.approx(1 - 3 * 0.01 / (8 * np.pi / 3 * 0.05))
    S = sum(1 / np.linalg.norm(x - z) for z in c.centers)
    u = eval_incident(f, c.centers[0], t - np.linalg.norm(x - c.centers[0]))
    np.testing.assert_allclose(dom["U1"], pc.omega_m**2 * pc.amplitude / pc.j_factor * S * u, rtol=1e-13)


def test_strong_coupling_rejected():
    c = make_cluster([(3.0, 0, 0), (3.0, 0.001, 0)])
    with pytest.raises(StrongCouplingRegime):
        polymer_coefficients(c)
    with pytest.raises(ValueError):
        polymer_coefficients(make_cluster([(0, 0, 0), (1, 0, 0), (0, 1, 0)]))


def test_decomposition_converges_with_delta():
    gaps = [decomposition_gap(d, (3.0, 1.0, 0.5)) for d in (0.02, 0.01, 0.005)]
    assert gaps[0] > gaps[1] > gaps[2]
    # with the two waves added instead of subtracted there is no agreement at all
    wrong = [decomposition_gap(d, (3.0, 1.0, 0.5), sign=+1.0) for d in (0.02, 0.01)]
    assert min(wrong) > 0.5


def test_collection_of_one_is_dimer_field():
    c = stacked_dimer(0.01)
    f = incident(c)
    obs = ObservationSet([(4.0, 1.0, 0.0)], np.linspace(0, 15, 61))
    a = dimer_collection_field(c, [(0, 1)], f, obs, 15.0, 0.01)[0]
    b = dimer_dominant_field(c, f, obs, 15.0, 0.01)[0]
    for ch in ("U1", "U2", "total"):
        np.testing.assert_array_equal(a[ch], b[ch])


def test_collection_superposition():
    # two identical dimers mirrored through the x axis; source and observer on the axis
    d1 = [(3.0, 1.0, 0.0), (3.05, 1.0, 0.0)]
    d2 = [(3.0, -1.0, 0.0), (3.05, -1.0, 0.0)]
    c = make_cluster(d1 + d2)
    single = make_cluster(d1)
    f = incident(c)
    obs = ObservationSet([(6.0, 0.0, 0.0)], np.linspace(0, 20, 81))
    both = dimer_collection_field(c, [(0, 1), (2, 3)], f, obs, 20.0, 0.01)[0]
    one = dimer_dominant_field(single, incident(single), obs, 20.0, 0.01)[0]
    np.testing.assert_allclose(both["total"], 2 * one["total"], rtol=1e-12, atol=1e-14 * np.abs(one["total"]).max())
    assert both.metadata["J"] == [pytest.approx(one.metadata["J"])] * 2


def test_zero_pulse_dominant_field():
    c = stacked_dimer(0.01)
    f = incident(c, pulse=ZeroPulse())
    ts = dimer_dominant_field(c, f, ObservationSet([(4.0, 0, 0)], np.linspace(0, 5, 11)), 5.0, 0.01)[0]
    assert np.all(ts["total"] == 0)


def test_csv_round_trip_and_determinism(tmp_path, dimer, dimer_field):
    sol = solve_delay_system(dimer, dimer_field, 5.0, 0.01)
    ts = scattered_field(dimer, sol, ObservationSet([(4.0, 0.0, 1.0)], sol.t))[0]
    p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
    write_time_series_csv(ts, p1, {"run": 1})
    write_time_series_csv(ts, p2, {"run": 1})
    assert p1.read_bytes() == p2.read_bytes()
    meta, cols = read_time_series_csv(p1)
    assert meta["run"] == 1 and meta["point"] == [4.0, 0.0, 1.0]
    np.testing.assert_array_equal(cols["u_s"], ts["u_s"])
    np.testing.assert_array_equal(cols["t"], ts.t)

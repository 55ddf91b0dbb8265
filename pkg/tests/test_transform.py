import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import make_scenario, transport
from hrlcampaign import transform as tf
from hrlcampaign.netmodel import (CONS, CREW, HABITAT, MAINT, NCOM, PLANT, PROP, SAMPLE,
                                  VEHICLE, load_scenario)

SC = make_scenario(crew_count=6)


def test_mass_ratio_examples():
    assert tf.mass_ratio(0.0, 420) == 1.0
    assert tf.mass_ratio(420 * 9.80665 * math.log(2), 420) == pytest.approx(2.0, rel=1e-14)
    # independent scalar evaluation through exp2/log2 instead of exp
    assert tf.mass_ratio(3000, 420) == pytest.approx(2 ** (3000 / (420 * 9.80665) / math.log(2)),
                                                     rel=1e-13)
    with pytest.raises(tf.DomainError):
        tf.mass_ratio(100, 0)


def _z(crew=0, vehicles=1, prop=0, hab=0, plant=0, sample=0, maint=0, cons=0, dry=0.0,
       paycap=1e9, propcap=1e9):
    x = np.array([crew, vehicles, prop, hab, plant, sample, maint, cons], float)
    return tf.augment(x, dry, paycap, propcap)


def test_consumables_for_crew():
    t, _ = tf.transport_transform(transport("Earth", "Moon", tof=5), SC)
    z = _z(crew=6, cons=1000.0)
    out = t.apply(z)
    assert 1000.0 - out[CONS] == pytest.approx(259.65, abs=1e-9)


def test_zero_delta_v_no_burn():
    t, _ = tf.transport_transform(transport("Earth", "Moon", dv=0.0), SC)
    z = _z(prop=500.0, hab=100.0, dry=1000.0)
    assert t.apply(z)[PROP] == pytest.approx(500.0)


def test_rocket_bookkeeping():
    # R = 2 by construction; dry 20000, departing total 60000 -> 30000 burned
    dv = 420 * 9.80665 * math.log(2)
    t, h = tf.transport_transform(transport("Earth", "Moon", dv=dv), SC)
    z = _z(vehicles=1, prop=35000.0, hab=5000.0, dry=20000.0)
    out = t.apply(z)
    assert 35000.0 - out[PROP] == pytest.approx(30000.0, rel=1e-12)
    assert h.residual(z)[h.names.index("burn")] == pytest.approx(30000.0 - 35000.0, rel=1e-12)


def test_maintenance_and_capacity_rows():
    t, h = tf.transport_transform(transport("Earth", "Moon", dv=1000.0, tof=2), SC)
    z = _z(vehicles=2, crew=2, prop=100.0, hab=10.0, maint=0.0, cons=0.0, dry=500.0,
           paycap=50.0, propcap=40.0)
    r = dict(zip(h.names, h.residual(z)))
    assert r["propellant_capacity"] == pytest.approx(100.0 - 80.0)
    assert r["payload_capacity"] == pytest.approx(2 * 100.0 + 10.0 - 100.0)
    assert r["maintenance"] == pytest.approx(0.01 * 1000.0)
    assert r["consumables"] == pytest.approx(2 * 2 * 8.655)
    assert t.apply(z)[MAINT] == pytest.approx(-10.0)


def test_holdover_lunar_example():
    sc = load_scenario("D")
    t = tf.holdover_transform("Moon", 365.0, tf.StochasticParams(5.0, 0.10), sc)
    z = np.zeros(tf.NZ)
    z[PLANT] = 1000.0
    out = t.apply(z)
    assert out[PROP] == pytest.approx(5000.0)
    assert out[PLANT] == pytest.approx(900.0)
    assert t.concurrency.residual(z)[0] == pytest.approx(50.0)  # 50 kg maintenance short
    z[MAINT] = 50.0
    assert t.concurrency.residual(z)[0] == pytest.approx(0.0, abs=1e-12)


def test_holdover_zero_plant_and_composition_without_decay():
    sc = load_scenario("D")
    q = tf.StochasticParams(5.0, 0.0)
    z = np.zeros(tf.NZ)
    t = tf.holdover_transform("Moon", 365.0, q, sc)
    assert np.allclose(t.apply(z), 0.0)
    z[PLANT] = 1000.0
    once = t.apply(z)
    again = t.apply(np.concatenate([once, z[NCOM:]]))
    assert again[PROP] == pytest.approx(10000.0)


def test_holdover_identity_elsewhere_and_domain():
    sc = load_scenario("D")
    t = tf.holdover_transform("LLO", 100.0, tf.StochasticParams(5.0, 0.1), sc)
    assert np.array_equal(t.M[:, :NCOM], np.eye(NCOM))
    with pytest.raises(tf.DomainError):
        tf.StochasticParams(-1.0, 0.0)


_arcs = st.builds(lambda dv, tof: transport("Earth", "Moon", dv=dv, tof=tof),
                  st.floats(0, 6000), st.integers(0, 10))
_flows = st.lists(st.floats(0, 1e5), min_size=NCOM + 1, max_size=NCOM + 1)


@settings(max_examples=200, deadline=None)
@given(_arcs, _flows, st.integers(0, 6), st.integers(1, 4))
def test_mass_sanity(arc, flows, crew, vehicles):
    t, h = tf.transport_transform(arc, SC)
    x = np.array([crew, vehicles] + flows[:6], float)
    dry = flows[6] + 1.0
    z = tf.augment(x, dry, 1e9, 1e9)
    out = t.apply(z)
    mass = [PROP, HABITAT, PLANT, SAMPLE, MAINT, CONS]
    total_in = out[mass].sum()
    total_out = z[mass].sum()
    assert total_in <= total_out + 1e-9 * max(1.0, total_out)
    # homogeneity: zero flow satisfies every concurrency row
    assert np.all(h.residual(np.zeros(tf.NZ)) <= 0)
    assert out[CREW] == crew and out[VEHICLE] == vehicles


@settings(max_examples=100, deadline=None)
@given(st.floats(0, 400), st.floats(0, 400), st.floats(0, 10), st.floats(0, 1))
def test_decay_composition(d1, d2, rate, decay):
    sc = load_scenario("D")
    q = tf.StochasticParams(rate, decay)
    a = tf.holdover_transform("Moon", d1, q, sc).Q[PLANT, PLANT]
    b = tf.holdover_transform("Moon", d2, q, sc).Q[PLANT, PLANT]
    ab = tf.holdover_transform("Moon", d1 + d2, q, sc).Q[PLANT, PLANT]
    assert a * b == pytest.approx(ab, rel=1e-9, abs=1e-300)
    h = tf.holdover_transform("Moon", d1, q, sc).concurrency
    assert np.all(h.residual(np.zeros(tf.NZ)) <= 0)
    assert np.all(tf.holdover_transform("Moon", d1, q, sc).G >= 0)

import dataclasses
import math
import sys
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from hrlcampaign import transform as tf
from hrlcampaign.campaign import (CampaignEnv, DomainError, StateScales, TrainConfig,
                                  compute_baseline, constant_policy, evaluate, mean_q, reward,
                                  rollout, sample_q, semi_worst_q, state_vector, truncnorm_mean,
                                  truncnorm_ppf, year_transition)
from hrlcampaign.netmodel import PLANT, PROP, NCOM, TruncNormal, load_scenario
from hrlcampaign.scheduler import (CampaignState, ConfigurationError, DesignGrid, MissionOutcome,
                                   SizingModel, VehicleDesign)

sys.path.insert(0, str(Path(__file__).parent))
from conftest import DemandEntry, NodeSpec, make_scenario, transport  # noqa: E402


@pytest.fixture(scope="module")
def env(desk):
    return CampaignEnv(desk)


@pytest.fixture(scope="module")
def env_det(desk_det):
    return CampaignEnv(desk_det)


# -- reward ---------------------------------------------------------------
def test_reward_examples():
    jb = 1000.0
    assert reward([jb, jb], jb, 2, 3, True) == 0.0
    assert reward([jb, jb, jb], jb, 3, 3, True) == 0.0
    assert reward([], jb, 1, 3, False) == -1.0
    assert reward([0.9 * jb, 0.8 * jb, 0.7 * jb], jb, 3, 3, True) == pytest.approx(0.6, abs=1e-12)


@pytest.mark.parametrize("args", [([1.0], 0.0, 1, 1, True), ([1.0], -5.0, 1, 1, True),
                                  ([1.0], 1.0, 0, 3, True), ([1.0], 1.0, 4, 3, True)])
def test_reward_domain_errors(args):
    with pytest.raises(DomainError):
        reward(*args)


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 8), st.floats(1e3, 1e7),
       st.lists(st.floats(0.05, 3.0), min_size=8, max_size=8))
def test_reward_telescopes_to_total_cost(gamma, jb, fracs):
    costs = [f * jb for f in fracs[:gamma]]
    r = reward(costs, jb, gamma, gamma, True)
    assert math.isclose(sum(costs), jb * (gamma - r), rel_tol=1e-9)
    for tau in range(1, gamma):
        assert reward(costs[:tau], jb, tau, gamma, True) == 0.0


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 8), st.data())
def test_reward_on_infeasible_mission(gamma, data):
    tau = data.draw(st.integers(1, gamma))
    jb = data.draw(st.floats(1e3, 1e7))
    costs = [data.draw(st.floats(0.05, 3.0)) * jb for _ in range(tau - 1)]
    expected = sum(1.0 - c / jb for c in costs) - 1.0
    assert reward(costs, jb, tau, gamma, False) == pytest.approx(expected, rel=1e-12, abs=1e-12)


# -- stochastic parameters ------------------------------------------------
def test_zero_variance_sampling_is_constant(desk_det):
    rng = np.random.default_rng(3)
    assert {sample_q(desk_det, rng) for _ in range(50)} == {tf.StochasticParams(5.0, 0.1)}


def test_truncnorm_helpers_match_scipy():
    for mu, sd in ((5.0, 1.5), (10.0, 10.0), (-1.0, 2.0)):
        ref = stats.truncnorm((0 - mu) / sd, np.inf, loc=mu, scale=sd)
        assert truncnorm_mean(TruncNormal(mu, sd)) == pytest.approx(ref.mean(), rel=1e-10)
        for p in (0.05, 0.5, 0.95):
            assert truncnorm_ppf(p, TruncNormal(mu, sd)) == pytest.approx(ref.ppf(p), rel=1e-8)
    with pytest.raises(DomainError):
        truncnorm_ppf(1.0, TruncNormal(1.0, 1.0))


def test_sample_mean_matches_truncated_normal():
    sc = load_scenario("D")
    rng = np.random.default_rng(11)
    draws = np.array([(q.production, q.decay)
                      for q in (sample_q(sc, rng) for _ in range(100_000))])
    assert draws.min() >= 0.0
    assert draws[:, 1].max() <= 1.0
    mean = truncnorm_mean(sc.isru_production)
    se = draws[:, 0].std() / math.sqrt(len(draws))
    assert abs(draws[:, 0].mean() - mean) <= 3 * se


def test_semi_worst_lies_on_the_pessimistic_side(desk):
    m, w = mean_q(desk), semi_worst_q(desk)
    assert w.production < m.production and w.decay > m.decay


# -- state and transition -------------------------------------------------
def test_initial_state_vector_is_zero(desk):
    scales = StateScales.for_scenario(desk)
    assert scales.dim == desk.missions + 5
    assert not state_vector(CampaignState(), scales).any()


def test_year_transition_example(desk):
    design = VehicleDesign(4000.0, 100000.0, 20000.0)
    end = np.zeros(NCOM)
    end[PLANT] = 700.0      # stray cargo, never installed
    end[PROP] = 100.0
    out = MissionOutcome(True, 1.0, end_state={"Moon": end})
    q = tf.StochasticParams(5.0, 0.1)
    s1 = year_transition(desk, CampaignState(tau=1, deployed_kg=(1000.0,), isru_stock_kg=900.0),
                         out, 2000.0, q, design)
    assert s1.tau == 2
    assert s1.deployed_kg == (1000.0, 2000.0)
    assert s1.isru_stock_kg == pytest.approx(2900.0 * 0.9)
    moon = np.array(s1.inventories["Moon"])
    assert moon[PLANT] == 0.0
    assert moon[PROP] == pytest.approx(100.0 + 5.0 * 2900.0)
    assert s1.observed_q == q and s1.design == design


# -- baseline ---------------------------------------------------------------
def test_baseline_positive_and_memoized(env, desk):
    assert env.j_base > 0
    assert compute_baseline(desk, env.grid) is env.baseline


def test_baseline_grows_with_crew_and_habitat():
    grid = (3, 3)
    d, i = load_scenario("D"), load_scenario("I")
    jd = compute_baseline(d, DesignGrid.for_scenario(d, grid)).cost_kg
    ji = compute_baseline(i, DesignGrid.for_scenario(i, grid)).cost_kg
    assert ji > jd


def _two_node(habitat_kg):
    earth = NodeSpec("Earth", frozenset({"propellant", "habitat", "isru_plant", "maintenance",
                                         "consumables"}), dwell=False, launch=True)
    return make_scenario(nodes=(earth, NodeSpec("Moon", dwell=False)),
                         arcs=[transport("Earth", "Moon", dv=2000.0, tof=3, windows=[(0, 0)])],
                         demands=[DemandEntry("Moon", 3, "habitat", -habitat_kg)],
                         vehicle_maint_rate=0.0, crew_count=0)


def test_baseline_matches_hand_mass_budget():
    sc = _two_node(1000.0)
    design = VehicleDesign.sized(2000.0, 40000.0, SizingModel.from_scenario(sc))
    got = compute_baseline(sc, DesignGrid.of([design])).cost_kg
    # one vehicle carrying dry mass and cargo through a single burn
    ratio = math.exp(2000.0 / (9.80665 * 420.0))
    assert got == pytest.approx((design.dry_kg + 1000.0) * ratio, rel=1e-9)


def test_infeasible_baseline_is_a_configuration_error():
    sc = _two_node(50_000.0)
    design = VehicleDesign.sized(2000.0, 40000.0, SizingModel.from_scenario(sc))
    with pytest.raises(ConfigurationError):
        compute_baseline(sc, DesignGrid.of([design]))


# -- rollouts -----------------------------------------------------------------
def test_single_mission_campaign(desk):
    sc = dataclasses.replace(desk, missions=1)
    env1 = CampaignEnv(sc, DesignGrid.for_scenario(sc, (3, 3)))
    log = rollout(env1, constant_policy([2500.0]), mean_q(sc))
    assert len(log.missions) == 1
    assert log.total_cost_kg == log.missions[0].cost_kg
    assert log.final_reward == pytest.approx(1.0 - log.total_cost_kg / env1.j_base, rel=1e-12)


def test_reuse_never_costs_more_than_baseline(env, desk):
    log = rollout(env, constant_policy([0.0, 0.0, 0.0]), mean_q(desk))
    assert log.terminated_at is None
    for m in log.missions:
        assert m.cost_kg <= env.j_base * (1 + 1e-9)


def test_rollout_cost_and_reward_agree(env, desk):
    log = rollout(env, constant_policy([5000.0, 1000.0, 0.0]), mean_q(desk))
    assert log.terminated_at is None
    costs = [m.cost_kg for m in log.missions]
    assert log.total_cost_kg == pytest.approx(sum(costs), rel=1e-12)
    assert log.total_cost_kg == pytest.approx(env.j_base * (desk.missions - log.final_reward),
                                              rel=1e-9)


def test_early_termination_substitutes_baseline(desk, monkeypatch):
    sc = dataclasses.replace(desk, missions=5)
    env5 = CampaignEnv(sc, DesignGrid.for_scenario(sc, (3, 3)))
    monkeypatch.setattr(env5, "mission", lambda *a, **k: MissionOutcome(False))
    seen = []
    log = rollout(env5, constant_policy([1000.0] * 5), mean_q(sc),
                  on_transition=lambda s, a, r, s2, done: seen.append((r, done)))
    c1 = log.missions[0].cost_kg
    assert log.terminated_at == 2
    assert log.vfa_target_kg == pytest.approx(4 * env5.j_base)
    assert log.total_cost_kg == pytest.approx(c1 + 4 * env5.j_base)
    assert seen[-1] == (pytest.approx(1.0 - c1 / env5.j_base - 1.0), True)


# -- evaluation ---------------------------------------------------------------------
def test_zero_variance_cases_cost_the_same(env_det):
    rep = evaluate(env_det, None, None, n_cases=6, seed=1,
                   policy=constant_policy([5000.0, 0.0, 0.0]))
    assert np.all(rep.costs_kg == rep.costs_kg[0])
    assert not rep.infeasible.any()


def test_evaluation_repeatable_and_first_mission_shared(env):
    pol = constant_policy([3000.0, 2000.0, 0.0])
    a = evaluate(env, None, None, n_cases=5, seed=4, policy=pol)
    b = evaluate(env, None, None, n_cases=5, seed=4, policy=pol)
    assert np.array_equal(a.costs_kg, b.costs_kg)
    assert a.qs == b.qs
    assert len(set(a.qs)) == 5
    firsts = {(lg.missions[0].action_kg, lg.design) for lg in a.logs}
    assert firsts == {(a.first.action_kg, a.first.design)}


# -- configuration ---------------------------------------------------------------------
def test_train_config_defaults_and_checks():
    cfg = TrainConfig()
    assert (cfg.episodes, cfg.n1, cfg.n2) == (700, 100, 300)
    assert (cfg.agent.gamma, cfg.agent.batch_size, cfg.agent.buffer_size) == (0.95, 64, 1500)
    with pytest.raises(ConfigurationError):
        TrainConfig(episodes=50, n1=100, n2=10)
    assert TrainConfig(episodes=0, n1=0, n2=0).episodes == 0
    assert cfg.updates_per_step == 1 and TrainConfig.desk().updates_per_step == 20
    with pytest.raises(ConfigurationError):
        TrainConfig(updates_per_step=0)

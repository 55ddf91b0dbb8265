"""Campaign rollouts: sampling ISRU performance, rewards, training and evaluation.

A campaign is ``Γ`` yearly missions.  Mission 1 picks the vehicle design
jointly with its schedule; later missions reuse that design.  Between
missions the deployed plant produces propellant at the lunar site for a
year and then decays.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from statistics import NormalDist
from typing import Callable

import numpy as np

from . import transform as tf
from . import vfa as vfa_mod
from .milp import Limits
from .netmodel import NCOM, PLANT, PROP, ScenarioSpec, TruncNormal
from .rl import ReplayBuffer, Td3Agent, Td3Config
from .scheduler import (CampaignState, ConfigurationError, DesignBoundCache, DesignGrid,
                        MissionOutcome, VehicleDesign, assemble_mission, solve_first_mission,
                        solve_mission)


class DomainError(ValueError):
    pass


# ---------------------------------------------------------------------------
# stochastic parameters
# ---------------------------------------------------------------------------
def truncnorm_mean(dist: TruncNormal) -> float:
    """Mean of ``N(mean, sd²)`` conditioned on being nonnegative."""
    if dist.sd == 0:
        return max(dist.mean, 0.0)
    a = -dist.mean / dist.sd
    std = NormalDist()
    return dist.mean + dist.sd * std.pdf(a) / (1.0 - std.cdf(a))


def truncnorm_ppf(p: float, dist: TruncNormal) -> float:
    """Quantile of the zero-truncated normal."""
    if not 0 < p < 1:
        raise DomainError(f"probability must lie in (0, 1), got {p}")
    if dist.sd == 0:
        return max(dist.mean, 0.0)
    std = NormalDist(dist.mean, dist.sd)
    c0 = std.cdf(0.0)
    return std.inv_cdf(c0 + p * (1.0 - c0))


def _draw(dist: TruncNormal, rng: np.random.Generator, upper: float = math.inf) -> float:
    if dist.sd == 0:
        return min(max(dist.mean, 0.0), upper)
    while True:
        v = dist.mean + dist.sd * rng.standard_normal()
        if 0.0 <= v <= upper:
            return float(v)


def sample_q(sc: ScenarioSpec, rng: np.random.Generator) -> tf.StochasticParams:
    """Draw (production rate, decay fraction) by rejection below zero.

    Decay draws above 100 %/yr are also rejected since the fraction is
    undefined there.
    """
    prod = _draw(sc.isru_production, rng)
    decay = _draw(sc.isru_decay_pct, rng, upper=100.0)
    return tf.StochasticParams(prod, decay / 100.0)


def semi_worst_q(sc: ScenarioSpec, low: float = 0.05, high: float = 0.95) -> tf.StochasticParams:
    """Low percentile of production with high percentile of decay."""
    return tf.StochasticParams(truncnorm_ppf(low, sc.isru_production),
                               min(truncnorm_ppf(high, sc.isru_decay_pct), 100.0) / 100.0)


def mean_q(sc: ScenarioSpec) -> tf.StochasticParams:
    return tf.StochasticParams(truncnorm_mean(sc.isru_production),
                               min(truncnorm_mean(sc.isru_decay_pct), 100.0) / 100.0)


# ---------------------------------------------------------------------------
# reward and state features
# ---------------------------------------------------------------------------
def reward(costs, j_base: float, tau: int, gamma: int, feasible: bool) -> float:
    """Reward after mission ``tau``; ``costs`` holds the feasible costs of missions 1..tau-1 (and tau)."""
    if j_base <= 0:
        raise DomainError(f"baseline cost must be positive, got {j_base}")
    if not 1 <= tau <= gamma:
        raise DomainError(f"mission index {tau} outside [1, {gamma}]")
    if not feasible:
        return sum((j_base - c) / j_base for c in costs[:tau - 1]) - 1.0
    if tau == gamma:
        return sum((j_base - c) / j_base for c in costs[:gamma])
    return 0.0


@dataclass(frozen=True)
class StateScales:
    missions: int
    cap_kg: float
    q_means: tuple[float, float]
    payload_kg: float
    propellant_kg: float

    @classmethod
    def for_scenario(cls, sc: ScenarioSpec) -> "StateScales":
        m = mean_q(sc)
        return cls(sc.missions, sc.isru_deploy_cap_kg,
                   (m.production or 1.0, m.decay or 1.0),
                   sc.payload_range_kg[1], sc.propellant_range_kg[1])

    @property
    def dim(self) -> int:
        return 1 + self.missions + 2 + 2


def state_vector(state: CampaignState, scales: StateScales) -> np.ndarray:
    """``[τ/Γ, deployments/cap (one slot per mission), q/means, payload, propellant]``."""
    v = np.zeros(scales.dim)
    v[0] = state.tau / scales.missions
    dep = np.asarray(state.deployed_kg, float)[:scales.missions]
    v[1:1 + len(dep)] = dep / scales.cap_kg if scales.cap_kg > 0 else 0.0
    k = 1 + scales.missions
    if state.observed_q is not None:
        v[k] = state.observed_q.production / scales.q_means[0]
        v[k + 1] = state.observed_q.decay / scales.q_means[1]
    if state.design is not None:
        v[k + 2] = state.design.payload_kg / scales.payload_kg
        v[k + 3] = state.design.propellant_kg / scales.propellant_kg
    return v


def year_transition(sc: ScenarioSpec, state: CampaignState, outcome: MissionOutcome,
                    action_kg: float, q: tf.StochasticParams,
                    design: VehicleDesign) -> CampaignState:
    """State at the start of the next mission.

    Only the deployment action adds to the installed plant; stray plant mass
    at the site (shipped as cargo, outside the deployment cap and its
    maintenance) is not installed and is dropped.  The operating plant yields
    a year of propellant there, then decays by ``q.decay``.
    """
    inv = {k: np.array(v, float) for k, v in outcome.end_state.items()}
    site = inv.setdefault(sc.isru_node, np.zeros(NCOM))
    operating = state.isru_stock_kg + action_kg
    site[PLANT] = 0.0
    site[PROP] += q.production * sc.electrolysis_efficiency * operating
    return CampaignState(
        tau=state.tau + 1,
        deployed_kg=state.deployed_kg + (float(action_kg),),
        observed_q=q,
        design=design,
        isru_stock_kg=operating * (1.0 - q.decay),
        inventories={k: tuple(float(x) for x in v) for k, v in inv.items()},
    )


# ---------------------------------------------------------------------------
# environment
# ---------------------------------------------------------------------------
@dataclass
class BaselineResult:
    cost_kg: float
    design: VehicleDesign
    outcome: MissionOutcome


_BASELINES: dict[tuple, BaselineResult] = {}


def _grid_key(grid: DesignGrid) -> tuple:
    return tuple(d.as_tuple() for d in grid.points)


def compute_baseline(sc: ScenarioSpec, grid: DesignGrid | None = None,
                     limits: Limits | None = None) -> BaselineResult:
    """Single mission, no deployment, design chosen on ``grid`` without a value term."""
    grid = grid or DesignGrid.for_scenario(sc)
    key = (sc.digest(), _grid_key(grid))
    if key not in _BASELINES:
        res = solve_first_mission(CampaignState(), 0.0, sc, grid, None, None, limits)
        if not res.outcome.feasible:
            raise ConfigurationError(f"scenario {sc.name!r}: the no-deployment mission is infeasible")
        _BASELINES[key] = BaselineResult(res.outcome.cost_kg, res.outcome.chosen_design,
                                         res.outcome)
    return _BASELINES[key]


def _state_key(state: CampaignState) -> tuple:
    inv = tuple(sorted((k, tuple(v)) for k, v in state.inventories.items()))
    return (state.tau, state.isru_stock_kg, inv)


class CampaignEnv:
    """Scenario, design grid, solver limits and the caches shared across episodes."""

    def __init__(self, sc: ScenarioSpec, grid: DesignGrid | None = None,
                 limits: Limits | None = None):
        self.sc = sc
        self.grid = grid or DesignGrid.for_scenario(sc)
        self.limits = limits or Limits()
        self.baseline = compute_baseline(sc, self.grid, self.limits)
        self.scales = StateScales.for_scenario(sc)
        self.bound_cache = DesignBoundCache(("s0", sc.digest(), _grid_key(self.grid)))
        self._memo: dict[tuple, MissionOutcome] = {}
        self.solves = 0

    @property
    def j_base(self) -> float:
        return self.baseline.cost_kg

    def first_mission(self, action_kg: float, vfa: vfa_mod.VfaParameters | None):
        # q is unobserved before the first mission, so in-mission production is zero
        return solve_first_mission(CampaignState(), action_kg, self.sc, self.grid, vfa, None,
                                   self.limits, self.bound_cache)

    def mission(self, state: CampaignState, action_kg: float, design: VehicleDesign,
                q: tf.StochasticParams) -> MissionOutcome:
        key = (_state_key(state), float(action_kg), design.as_tuple(), q.production, q.decay)
        out = self._memo.get(key)
        if out is None:
            self.solves += 1
            out = solve_mission(assemble_mission(state, action_kg, self.sc, design, q),
                                self.limits)
            if len(self._memo) > 20000:
                self._memo.clear()
            self._memo[key] = out
        return out


# ---------------------------------------------------------------------------
# episodes
# ---------------------------------------------------------------------------
@dataclass
class MissionRecord:
    tau: int
    action_kg: float
    cost_kg: float
    reward: float
    feasible: bool
    status: str


@dataclass
class EpisodeLog:
    q: tf.StochasticParams
    missions: list[MissionRecord] = field(default_factory=list)
    design: VehicleDesign | None = None
    total_cost_kg: float = float("nan")
    terminated_at: int | None = None
    vfa_target_kg: float | None = None
    final_reward: float = 0.0

    @property
    def actions(self) -> list[float]:
        return [m.action_kg for m in self.missions]


@dataclass
class FirstMission:
    action_kg: float
    design: VehicleDesign | None
    outcome: MissionOutcome


Policy = Callable[[np.ndarray, int], float]
Transition = Callable[[np.ndarray, float, float, np.ndarray, bool], None]


def _feasible(out: MissionOutcome) -> bool:
    return bool(out.feasible)


def rollout(env: CampaignEnv, policy: Policy, q: tf.StochasticParams,
            vfa: vfa_mod.VfaParameters | None = None, first: FirstMission | None = None,
            on_transition: Transition | None = None) -> EpisodeLog:
    """One campaign under ``policy(state_vector, tau) -> action_kg``.

    ``first`` supplies a precomputed first mission (shared across evaluation
    cases); otherwise mission 1 is solved with the design search.  An
    infeasible mission ends the episode and the remaining missions are
    charged at the baseline cost.
    """
    sc, gamma, jb = env.sc, env.sc.missions, env.j_base
    log = EpisodeLog(q)
    state = CampaignState()
    s = state_vector(state, env.scales)
    costs: list[float] = []
    design = None
    for tau in range(1, gamma + 1):
        if tau == 1 and first is not None:
            a, out, design = first.action_kg, first.outcome, first.design
        else:
            a = float(np.clip(policy(s, tau), 0.0, sc.isru_deploy_cap_kg))
            if tau == 1:
                out = env.first_mission(a, vfa).outcome
                design = out.chosen_design
            else:
                out = env.mission(state, a, design, q)
        ok = _feasible(out)
        if ok:
            costs.append(out.cost_kg)
        r = reward(costs, jb, tau, gamma, ok)
        log.missions.append(MissionRecord(tau, a, out.cost_kg if ok else float("nan"), r, ok,
                                          out.status.name))
        if not ok:
            log.terminated_at = tau
            if on_transition:
                on_transition(s, a, r, s, True)
            log.final_reward = r
            break
        state = year_transition(sc, state, out, a, q, design)
        s2 = state_vector(state, env.scales)
        if on_transition:
            on_transition(s, a, r, s2, tau == gamma)
        s = s2
        log.final_reward = r
    log.design = design
    n_done = len(costs)
    log.total_cost_kg = float(sum(costs) + (gamma - n_done) * jb)
    if costs:
        log.vfa_target_kg = float(log.total_cost_kg - costs[0])
    return log


def run_episode(env: CampaignEnv, agent: Td3Agent, vfa: vfa_mod.VfaParameters | None,
                q: tf.StochasticParams, rng: np.random.Generator, train_mode: bool,
                buffer: ReplayBuffer | None = None, warmup: bool = False,
                on_step: Callable[[], None] | None = None) -> EpisodeLog:
    """Roll out the agent; in training mode push every transition and call ``on_step``."""
    cap = env.sc.isru_deploy_cap_kg

    def policy(s, tau):
        if warmup:
            return float(rng.uniform(0.0, cap))
        return agent.select_action(s, train_mode, rng)

    def push(s, a, r, s2, done):
        if buffer is not None:
            buffer.push(s, [a], r, s2, done)
        if on_step is not None:
            on_step()

    return rollout(env, policy, q, vfa, on_transition=push if train_mode else None)


# ---------------------------------------------------------------------------
# training
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class TrainConfig:
    episodes: int = 700
    n1: int = 100
    n2: int = 300
    seed: int = 0
    agent: Td3Config = field(default_factory=Td3Config)
    updates_per_step: int = 1

    def __post_init__(self):
        if self.updates_per_step < 1:
            raise ConfigurationError(f"updates_per_step must be positive, got {self.updates_per_step}")
        if self.episodes < max(self.n1, self.n2):
            raise ConfigurationError(
                f"episodes ({self.episodes}) must be at least max(n1, n2) = {max(self.n1, self.n2)}")
        if min(self.n1, self.n2) < 0:
            raise ConfigurationError("warm-up counts must be nonnegative")

    @classmethod
    def desk(cls, **kw) -> "TrainConfig":
        kw.setdefault("agent", Td3Config.desk())
        kw.setdefault("episodes", 300)
        kw.setdefault("n1", 40)
        kw.setdefault("n2", 100)
        kw.setdefault("updates_per_step", 20)
        return cls(**kw)


@dataclass
class TrainResult:
    agent: Td3Agent
    vfa: vfa_mod.VfaParameters
    logs: list[EpisodeLog]
    buffer: ReplayBuffer
    config: TrainConfig
    rng_state: dict = field(default_factory=dict)


def _streams(seed: int) -> tuple[np.random.Generator, ...]:
    return tuple(np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(3))


def train(env: CampaignEnv, config: TrainConfig,
          progress: Callable[[int, EpisodeLog], None] | None = None) -> TrainResult:
    """Run ``config.episodes`` episodes.

    The deployment agent updates after every mission once past episode
    ``n1`` (earlier episodes act uniformly at random); the value estimate
    updates after each episode once past ``n2``.
    """
    q_rng, init_rng, act_rng = _streams(config.seed)
    agent = Td3Agent.create(env.scales.dim, env.sc.isru_deploy_cap_kg, config.agent, init_rng)
    buffer = ReplayBuffer(config.agent.buffer_size, env.scales.dim)
    vfa = vfa_mod.VfaParameters.initial()
    logs = []
    for m in range(1, config.episodes + 1):
        q = sample_q(env.sc, q_rng)
        learn = m > config.n1

        def step():
            if learn and len(buffer) >= config.agent.batch_size:
                for _ in range(config.updates_per_step):
                    agent.update(buffer, act_rng)

        log = run_episode(env, agent, vfa, q, act_rng, True, buffer, warmup=not learn,
                          on_step=step)
        if m > config.n2 and log.design is not None and log.vfa_target_kg is not None:
            vfa = vfa_mod.rls_update(vfa, log.design, log.vfa_target_kg)
        logs.append(log)
        if progress:
            progress(m, log)
    rng_state = {"q": q_rng.bit_generator.state, "act": act_rng.bit_generator.state}
    return TrainResult(agent, vfa, logs, buffer, config, rng_state)


# ---------------------------------------------------------------------------
# evaluation
# ---------------------------------------------------------------------------
@dataclass
class EvalReport:
    n_cases: int
    qs: list[tf.StochasticParams]
    costs_kg: np.ndarray
    infeasible: np.ndarray
    first: FirstMission
    logs: list[EpisodeLog]

    @property
    def mean(self) -> float:
        return float(np.mean(self.costs_kg))

    @property
    def sd(self) -> float:
        return float(np.std(self.costs_kg, ddof=1)) if self.n_cases > 1 else 0.0

    @property
    def min(self) -> float:
        return float(np.min(self.costs_kg))

    @property
    def max(self) -> float:
        return float(np.max(self.costs_kg))


def evaluate(env: CampaignEnv, agent: Td3Agent, vfa: vfa_mod.VfaParameters | None,
             n_cases: int = 128, seed: int = 0, policy: Policy | None = None) -> EvalReport:
    """Frozen-policy rollouts over ``n_cases`` sampled parameter vectors.

    Mission 1 is decided once, before any parameter is observed, and shared
    by every case.
    """
    rng = np.random.default_rng(seed)
    qs = [sample_q(env.sc, rng) for _ in range(n_cases)]
    if policy is None:
        def policy(s, tau):
            return agent.select_action(s, False, rng)
    s0 = state_vector(CampaignState(), env.scales)
    a1 = float(np.clip(policy(s0, 1), 0.0, env.sc.isru_deploy_cap_kg))
    out1 = env.first_mission(a1, vfa).outcome
    first = FirstMission(a1, out1.chosen_design, out1)
    logs = [rollout(env, policy, q, vfa, first=first) for q in qs]
    costs = np.array([lg.total_cost_kg for lg in logs])
    flags = np.array([lg.terminated_at is not None for lg in logs])
    return EvalReport(n_cases, qs, costs, flags, first, logs)


def constant_policy(actions_kg) -> Policy:
    """Policy replaying a fixed deployment schedule (used by tests and baselines)."""
    acts = list(actions_kg)

    def policy(s, tau):
        return acts[tau - 1] if tau - 1 < len(acts) else 0.0
    return policy

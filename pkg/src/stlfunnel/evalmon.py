"""Offline evaluation: greedy rollouts, satisfaction checks and CSV export.

A trajectory holds horizon+1 states and horizon actions (the final row has
action -1). Satisfaction is decided by the sign of the trace robustness at
step 0, with zero counting as satisfied; the report also carries the scalar
min-over-obligation-steps robustness used for summary statistics.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .dqn import epsilon_greedy
from .envs import Environment
from .funnel import FunnelSchedule
from .reward import RewardSpec, per_psi_robustness, reward as reward_fn
from .robustness import rho_trace
from .stl.formula import Formula, FragmentError, formula_horizon, temporal_conjuncts

__all__ = [
    "Trajectory", "SatisfactionReport", "rollout", "check_satisfaction",
    "export_csv", "export_funnel_csv", "read_trajectory_csv",
]

_FMT = "%.17g"


@dataclass
class Trajectory:
    schema: tuple[str, ...]
    states: np.ndarray          # (H+1, d)
    actions: np.ndarray         # (H+1,), last entry -1
    rewards: np.ndarray         # (H+1,)
    rho_psi: np.ndarray         # (H+1, n_psi)
    gamma_lower: np.ndarray     # (H+1,), NaN where no segment is active
    margin: np.ndarray          # (H+1,), funnel margin, NaN where inactive
    satisfied_so_far: np.ndarray  # (H+1,) of 0/1
    metadata: dict = field(default_factory=dict)

    @property
    def horizon(self) -> int:
        return len(self.states) - 1

    def state_dicts(self) -> list[dict[str, float]]:
        return [dict(zip(self.schema, row)) for row in self.states]


@dataclass(frozen=True)
class SatisfactionReport:
    satisfied: bool
    robustness: float
    obligation_min: float


def _prefix_satisfaction(phi: Formula, rho_psi: np.ndarray) -> np.ndarray:
    """Per-step flag: no obligation due so far has been missed."""
    n = len(rho_psi)
    out = np.ones(n)
    try:
        conjuncts = temporal_conjuncts(phi)
    except FragmentError:
        return out
    for idx, c in enumerate(conjuncts):
        lo, hi = c.footprint.lo, c.footprint.hi
        vals = rho_psi[:, idx]
        if c.kind == "G":
            bad = np.zeros(n, dtype=bool)
            window = (np.arange(n) >= lo) & (np.arange(n) <= hi) & (vals < 0)
            bad = np.cumsum(window) > 0
            out[bad] = 0.0
        else:
            # F (and the F-G form, conservatively): once the window has fully
            # elapsed without a satisfying step, the prefix is violated.
            hit = np.zeros(n, dtype=bool)
            in_window = (np.arange(n) >= lo) & (np.arange(n) <= hi) & (vals >= 0)
            hit = np.cumsum(in_window) > 0
            missed = (np.arange(n) > hi) & ~hit
            out[missed] = 0.0
    return out


def rollout(agent, env: Environment, spec: RewardSpec, seed=0,
            greedy: bool = True, epsilon: float = 0.0,
            phi: Formula | None = None) -> Trajectory:
    """Roll the policy out for one episode, recording monitor fields."""
    horizon = env.horizon
    if spec.horizon != horizon:
        raise ValueError(
            f"environment horizon {horizon} != reward schedule horizon {spec.horizon}")
    rng = np.random.default_rng(seed)
    d = len(env.schema)
    n_psi = len(spec.psis)
    states = np.empty((horizon + 1, d))
    actions = np.full(horizon + 1, -1, dtype=np.int64)
    rewards = np.empty(horizon + 1)
    rho = np.empty((horizon + 1, n_psi))
    gamma_lower = np.full(horizon + 1, np.nan)
    margin = np.full(horizon + 1, np.nan)

    s = env.reset(rng)
    for t in range(horizon + 1):
        if not np.all(np.isfinite(s)):
            raise RuntimeError(f"non-finite state at step {t}: dynamics diverged")
        states[t] = s
        sd = env.state_dict(s)
        rewards[t] = reward_fn(spec, sd, t)
        rho[t] = per_psi_robustness(spec, sd)
        active = spec.schedule.active_segments(t)
        if active:
            seg_rewards = [rho[t][seg.psi_index] + seg.gamma(t) - seg.params.rho_max
                           for seg in active]
            j = int(np.argmin(seg_rewards))
            margin[t] = seg_rewards[j]
            gamma_lower[t] = active[j].lower_bound(t)
        if t < horizon:
            q = agent.q_values(s, t)
            a = int(np.argmax(q)) if greedy else epsilon_greedy(q, epsilon, rng)
            actions[t] = a
            s = env.step(s, a)

    traj = Trajectory(
        schema=tuple(env.schema), states=states, actions=actions, rewards=rewards,
        rho_psi=rho, gamma_lower=gamma_lower, margin=margin,
        satisfied_so_far=np.ones(horizon + 1),
        metadata={"seed": seed if isinstance(seed, int) else list(seed),
                  "greedy": greedy, "mode": spec.mode},
    )
    if phi is not None:
        fill_prefix_satisfaction(traj, phi)
    return traj


def check_satisfaction(phi: Formula, traj: Trajectory) -> SatisfactionReport:
    """Boolean and quantitative verdict of phi on a trajectory (evaluated at 0)."""
    need = formula_horizon(phi)
    if need > traj.horizon:
        raise ValueError(
            f"trajectory horizon {traj.horizon} shorter than formula horizon {need}")
    trace = traj.state_dicts()
    rho = rho_trace(phi, trace, 0)
    obligation_min = _obligation_scalar(phi, trace, rho)
    return SatisfactionReport(satisfied=rho >= 0, robustness=rho,
                              obligation_min=obligation_min)


def _obligation_scalar(phi: Formula, trace, fallback: float) -> float:
    """Min over obligation windows of each conjunct's operator value; for the
    supported fragment this equals the trace robustness, computed here
    independently from the per-conjunct windows."""
    try:
        conjuncts = temporal_conjuncts(phi)
    except FragmentError:
        return fallback
    vals = []
    for c in conjuncts:
        vals.append(rho_trace(c.node, trace, 0))
    return min(vals)


def fill_prefix_satisfaction(traj: Trajectory, phi: Formula):
    traj.satisfied_so_far = _prefix_satisfaction(phi, traj.rho_psi)


def export_csv(traj: Trajectory, path, metadata_path=None):
    """Write the trajectory as CSV with a fixed column order and 17-significant
    digit decimals; numeric content round-trips exactly."""
    n_psi = traj.rho_psi.shape[1]
    header = ["t", *traj.schema, "action", "reward",
              *[f"rho_psi_{i}" for i in range(n_psi)],
              "gamma_lower", "margin", "satisfied_so_far"]
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for t in range(traj.horizon + 1):
            row = [str(t)]
            row += [_FMT % v for v in traj.states[t]]
            row.append(str(int(traj.actions[t])))
            row.append(_FMT % traj.rewards[t])
            row += [_FMT % v for v in traj.rho_psi[t]]
            row.append(_FMT % traj.gamma_lower[t])
            row.append(_FMT % traj.margin[t])
            row.append(str(int(traj.satisfied_so_far[t])))
            fh.write(",".join(row) + "\n")
    if metadata_path is not None:
        with open(metadata_path, "w") as fh:
            json.dump(traj.metadata, fh, indent=2, sort_keys=True)


def read_trajectory_csv(path, schema: list[str]) -> Trajectory:
    """Load a trajectory CSV; only t and the state columns are required."""
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        rows = [line.strip().split(",") for line in fh if line.strip()]
    for col in ("t", *schema):
        if col not in header:
            raise ValueError(f"trajectory CSV is missing column {col!r}")
    idx = {name: header.index(name) for name in header}
    n = len(rows)
    states = np.empty((n, len(schema)))
    for i, row in enumerate(rows):
        for j, name in enumerate(schema):
            states[i, j] = float(row[idx[name]])
    n_psi = sum(1 for h in header if h.startswith("rho_psi_"))

    def col(name, default=np.nan, dtype=float):
        if name in idx:
            return np.array([dtype(r[idx[name]]) for r in rows])
        return np.full(n, default)

    rho = np.full((n, max(n_psi, 1)), np.nan)
    for i in range(n_psi):
        rho[:, i] = col(f"rho_psi_{i}")
    return Trajectory(
        schema=tuple(schema), states=states,
        actions=col("action", default=-1, dtype=lambda x: np.int64(int(x))).astype(np.int64),
        rewards=col("reward"), rho_psi=rho,
        gamma_lower=col("gamma_lower"), margin=col("margin"),
        satisfied_so_far=col("satisfied_so_far"),
        metadata={"source": str(path)},
    )


def export_funnel_csv(schedule: FunnelSchedule, path):
    """Per-step funnel data: one row per (step, active segment)."""
    header = ["t", "segment", "psi_index", "gamma", "lower_bound", "rho_max"]
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for t in range(schedule.horizon + 1):
            for seg in schedule.active_segments(t):
                seg_id = schedule.segments.index(seg)
                fh.write(",".join([
                    str(t), str(seg_id), str(seg.psi_index),
                    _FMT % seg.gamma(t), _FMT % seg.lower_bound(t),
                    _FMT % seg.params.rho_max,
                ]) + "\n")

"""Time-dependent shaped rewards built from a funnel schedule.

In funnel mode the reward at step t is rho_psi(s) + gamma(t) - rho_max for
the active segment, i.e. the margin above the funnel's moving lower bound; it
is positive exactly while the state is inside the funnel. When several
segments are active (overlapping intervals) the reward is the minimum of the
per-segment rewards. The ablation mode drops the funnel term and returns the
raw robustness of the segment owning the current step.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .funnel import FunnelSchedule, gamma_eval
from .robustness import StateVector, rho_pointwise
from .stl.formula import Formula

__all__ = ["RewardSpec", "reward", "reward_sign_check", "NoActiveSegmentError"]

MODE_FUNNEL = "funnel"
MODE_ABLATION = "ablation-no-funnel"


class NoActiveSegmentError(ValueError):
    pass


@dataclass(frozen=True)
class RewardSpec:
    schedule: FunnelSchedule
    psis: tuple[Formula, ...]
    mode: str = MODE_FUNNEL

    def __post_init__(self):
        if self.mode not in (MODE_FUNNEL, MODE_ABLATION):
            raise ValueError(f"unknown reward mode {self.mode!r}")
        for seg in self.schedule.segments:
            if not (0 <= seg.psi_index < len(self.psis)):
                raise ValueError(f"segment references missing sub-formula {seg.psi_index}")

    @property
    def horizon(self) -> int:
        return self.schedule.horizon


def _segment_reward(spec: RewardSpec, seg, s: StateVector, t: int) -> float:
    rho = float(rho_pointwise(spec.psis[seg.psi_index], s))
    return rho + gamma_eval(seg, t) - seg.params.rho_max


def reward(spec: RewardSpec, s: StateVector, t: int, action=None) -> float:
    """Shaped reward at (s, t); the action argument is accepted and ignored.

    Steps covered by no segment yield 0.
    """
    if t < 0 or t > spec.horizon:
        raise ValueError(f"step {t} beyond horizon {spec.horizon}")
    active = spec.schedule.active_segments(t)
    if not active:
        return 0.0
    if spec.mode == MODE_ABLATION:
        # Raw robustness of the first owning segment; no funnel term.
        seg = active[0]
        return float(rho_pointwise(spec.psis[seg.psi_index], s))
    return min(_segment_reward(spec, seg, s, t) for seg in active)


def reward_sign_check(spec: RewardSpec, s: StateVector, t: int) -> tuple[str, float]:
    """Diagnostic: is the state inside the funnel's lower bound at step t?

    Returns ("inside" | "below", margin) where margin is the funnel-mode
    reward; a zero margin sits on the boundary and counts as inside.
    """
    active = spec.schedule.active_segments(t)
    if not active:
        raise NoActiveSegmentError(f"no active segment at step {t}")
    margin = min(_segment_reward(spec, seg, s, t) for seg in active)
    return ("inside" if margin >= 0 else "below"), margin


def per_psi_robustness(spec: RewardSpec, s: StateVector) -> list[float]:
    """Pointwise robustness of every sub-formula at state s."""
    return [float(rho_pointwise(p, s)) for p in spec.psis]

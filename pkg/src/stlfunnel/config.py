"""Run configuration: a single JSON document driving every CLI command.

Sections: environment (simulator + horizon + reset), spec (formula text,
state box for robustness-bound estimation, optional per-conjunct overrides),
training (Q-learning hyperparameters), reward_mode, output_dir. Command-line
overrides use dot paths, e.g. training.seed=3.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from .envs import EnvConfig, Environment, make_env
from .funnel import FunnelSchedule, FunnelSynthesisError, build_schedule
from .robustness import RhoBounds, estimate_rho_bounds
from .reward import MODE_ABLATION, MODE_FUNNEL, RewardSpec
from .stl.formula import Formula, FragmentError, temporal_conjuncts
from .stl.parser import ParseError, parse_formula
from .dqn import TrainConfig

__all__ = ["ConfigError", "RunContext", "load_config", "apply_overrides", "build_run"]


class ConfigError(ValueError):
    pass


@dataclass
class RunContext:
    env: Environment
    phi: Formula
    schedule: FunnelSchedule
    reward_spec: RewardSpec
    train_cfg: TrainConfig
    output_dir: str
    raw: dict

    @property
    def spec_text(self) -> str:
        return self.raw["spec"]["formula"]


def load_config(path) -> dict:
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError("config root must be a JSON object")
    return cfg


def _parse_scalar(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def apply_overrides(cfg: dict, overrides: list[str]) -> dict:
    """Apply key.path=value overrides in place; values parse as JSON scalars."""
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not of the form key.path=value")
        path, value = item.split("=", 1)
        keys = path.split(".")
        node = cfg
        for key in keys[:-1]:
            if not isinstance(node.get(key), dict):
                node[key] = {}
            node = node[key]
        node[keys[-1]] = _parse_scalar(value)
    return cfg


def _require(cfg: dict, key: str, section: str | None = None):
    where = f"{section}.{key}" if section else key
    node = cfg.get(section, {}) if section else cfg
    if key not in node:
        raise ConfigError(f"missing required config key {where!r}")
    return node[key]


def _build_env(cfg: dict) -> Environment:
    env_cfg = cfg.get("environment")
    if not isinstance(env_cfg, dict):
        raise ConfigError("missing required config section 'environment'")
    kind = _require(cfg, "kind", "environment")
    reset = env_cfg.get("reset", {"kind": "default"})
    reset_kind = reset.get("kind", "default")
    kwargs = {}
    if reset_kind in ("default", "fixed"):
        kwargs["reset_kind"] = "fixed"
        if reset_kind == "fixed":
            if "value" not in reset:
                raise ConfigError("environment.reset.value required for fixed resets")
            kwargs["reset_fixed"] = tuple(reset["value"])
    elif reset_kind == "uniform":
        for k in ("low", "high"):
            if k not in reset:
                raise ConfigError(f"environment.reset.{k} required for uniform resets")
        kwargs.update(reset_kind="uniform", reset_low=tuple(reset["low"]),
                      reset_high=tuple(reset["high"]))
    else:
        raise ConfigError(f"environment.reset.kind {reset_kind!r} unknown")
    try:
        ec = EnvConfig(kind=kind, tau=float(env_cfg.get("tau", 0.01)),
                       horizon=int(env_cfg.get("horizon", 200)),
                       constants=env_cfg.get("constants", {}), **kwargs)
        return make_env(ec)
    except ValueError as exc:
        raise ConfigError(f"environment: {exc}") from exc


def _int_key_map(raw: dict | None, section: str) -> dict[int, float]:
    out = {}
    for k, v in (raw or {}).items():
        try:
            out[int(k)] = v
        except ValueError:
            raise ConfigError(f"{section}: key {k!r} is not a conjunct index") from None
    return out


def build_run(cfg: dict) -> RunContext:
    env = _build_env(cfg)
    spec_cfg = cfg.get("spec")
    if not isinstance(spec_cfg, dict):
        raise ConfigError("missing required config section 'spec'")
    formula_text = _require(cfg, "formula", "spec")
    try:
        phi = parse_formula(formula_text, list(env.schema))
    except ParseError as exc:
        raise ConfigError(f"spec.formula: {exc}") from exc

    try:
        conjuncts = temporal_conjuncts(phi)
    except FragmentError as exc:
        raise ConfigError(f"spec.formula: {exc}") from exc

    box = {k: tuple(v) for k, v in spec_cfg.get("box", {}).items()}
    grid_n = int(spec_cfg.get("grid_n", 101))
    bound_overrides = _int_key_map(spec_cfg.get("rho_bounds"), "spec.rho_bounds")
    bounds = []
    for idx, c in enumerate(conjuncts):
        if idx in bound_overrides:
            lo, hi = bound_overrides[idx]
            bounds.append(RhoBounds(float(lo), float(hi)))
        else:
            if not box:
                raise ConfigError(
                    f"spec.box required to estimate rho bounds for conjunct {idx} "
                    "(or supply spec.rho_bounds)")
            try:
                bounds.append(estimate_rho_bounds(c.body, box, grid_n))
            except ValueError as exc:
                raise ConfigError(f"spec.box: {exc}") from exc

    t_star = {k: int(v) for k, v in _int_key_map(spec_cfg.get("t_star"), "spec.t_star").items()}
    gamma_inf = {k: float(v) for k, v in
                 _int_key_map(spec_cfg.get("gamma_inf"), "spec.gamma_inf").items()}

    try:
        schedule = build_schedule(phi, bounds, env.horizon,
                                  gamma_inf_overrides=gamma_inf,
                                  t_star_overrides=t_star)
    except (FunnelSynthesisError, FragmentError) as exc:
        raise ConfigError(f"spec: {exc}") from exc

    mode = cfg.get("reward_mode", MODE_FUNNEL)
    if mode not in (MODE_FUNNEL, MODE_ABLATION):
        raise ConfigError(f"reward_mode {mode!r} unknown")
    reward_spec = RewardSpec(schedule=schedule,
                             psis=tuple(c.body for c in conjuncts), mode=mode)

    train_raw = dict(cfg.get("training", {}))
    if "hidden_sizes" in train_raw:
        train_raw["hidden_sizes"] = tuple(train_raw["hidden_sizes"])
    if train_raw.get("state_scale") is not None:
        train_raw["state_scale"] = tuple(train_raw["state_scale"])
    try:
        train_cfg = TrainConfig(**train_raw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"training: {exc}") from exc

    return RunContext(env=env, phi=phi, schedule=schedule, reward_spec=reward_spec,
                      train_cfg=train_cfg, output_dir=cfg.get("output_dir", "out"),
                      raw=cfg)

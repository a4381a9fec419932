"""Seeded lane/speed driving MDP with seven discrete actions.

The road is a grid of ``lanes`` x position cells with static obstacles.  The
agent picks one of seven actions per step; position advances by the new
speed and driving through an obstacle cell ends the episode.
"""

from __future__ import annotations

import configparser
import dataclasses
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .tree import DRIVING_ACTIONS

ACC_REGULAR, ACC_HARSH, DEC_REGULAR, DEC_HARSH, RIGHT, LEFT, NONE = range(7)
N_ACTIONS = len(DRIVING_ACTIONS)

# action -> (speed delta, lane delta, harsh)
_EFFECTS = {
    ACC_REGULAR: (1, 0, False),
    ACC_HARSH: (2, 0, True),
    DEC_REGULAR: (-1, 0, False),
    DEC_HARSH: (-2, 0, True),
    RIGHT: (0, 1, False),
    LEFT: (0, -1, False),
    NONE: (0, 0, False),
}


@dataclass(frozen=True)
class EnvConfig:
    lanes: int = 3
    max_speed: int = 5  # number of speed levels; speeds run 0..max_speed-1
    horizon: int = 20
    obstacle_seed: int = 0
    obstacle_density: float = 0.15
    start_lane: int = 1
    start_speed: int = 2
    speed_reward: float = 0.1
    harsh_penalty: float = 0.02
    collision_penalty: float = 1.0
    blocked_lane: int = -1  # lane closed from `blocked_from` onwards (ramp end); -1 = none
    blocked_from: int = 0
    drift: bool = False
    drift_prob: float = 0.1

    def __post_init__(self):
        if self.lanes < 1:
            raise ValueError("lanes must be >= 1")
        if self.max_speed < 2:
            raise ValueError("max_speed must be >= 2")
        if self.horizon < 1:
            raise ValueError("horizon must be >= 1")
        if not 0 <= self.start_lane < self.lanes:
            raise ValueError("start_lane outside the road")
        if not 0 <= self.start_speed < self.max_speed:
            raise ValueError("start_speed outside the speed range")
        if not 0.0 <= self.obstacle_density < 1.0:
            raise ValueError("obstacle_density must be in [0, 1)")


SCENARIOS = {
    "curve": EnvConfig(lanes=3, obstacle_density=0.15),
    "merge": EnvConfig(lanes=3, obstacle_density=0.10, start_lane=0,
                       blocked_lane=0, blocked_from=12),
}


def scenario_config(name: str, seed: int) -> EnvConfig:
    if name not in SCENARIOS:
        raise ValueError(f"unknown scenario {name!r}; choose from {sorted(SCENARIOS)}")
    return dataclasses.replace(SCENARIOS[name], obstacle_seed=seed)


def load_env_config(path, base: Optional[EnvConfig] = None) -> EnvConfig:
    """Read ``key = value`` lines into an EnvConfig (unknown keys rejected)."""
    parser = configparser.ConfigParser()
    parser.optionxform = str
    parser.read_string("[env]\n" + Path(path).read_text())
    types = {f.name: f.type for f in dataclasses.fields(EnvConfig)}
    values = {}
    for key, raw in parser["env"].items():
        if key not in types:
            raise ValueError(f"unknown config key {key!r}")
        kind = types[key]
        if kind == "bool":
            values[key] = parser["env"].getboolean(key)
        elif kind == "int":
            values[key] = int(raw)
        else:
            values[key] = float(raw)
    return dataclasses.replace(base or EnvConfig(), **values)


@dataclass(frozen=True)
class EnvState:
    lane: int
    speed: int
    position: int = 0
    step_index: int = 0
    terminal: bool = False
    collided: bool = False


@dataclass
class LaneEnv:
    config: EnvConfig = field(default_factory=EnvConfig)

    def __post_init__(self):
        cfg = self.config
        rng = random.Random(cfg.obstacle_seed)
        length = cfg.horizon * cfg.max_speed + cfg.max_speed
        cells = set()
        for pos in range(1, length + 1):
            for lane in range(cfg.lanes):
                if rng.random() < cfg.obstacle_density:
                    cells.add((lane, pos))
        if cfg.blocked_lane >= 0:
            cells.update((cfg.blocked_lane, pos) for pos in range(cfg.blocked_from, length + 1))
        self.obstacles = frozenset(cells)

    n_actions = N_ACTIONS
    action_names = DRIVING_ACTIONS

    def initial_state(self) -> EnvState:
        return EnvState(self.config.start_lane, self.config.start_speed)

    def valid_actions(self, state: EnvState) -> list[int]:
        if state.terminal:
            return []
        cfg = self.config
        out = []
        for a in range(N_ACTIONS):
            dv, dl, _ = _EFFECTS[a]
            if 0 <= state.speed + dv < cfg.max_speed and 0 <= state.lane + dl < cfg.lanes:
                out.append(a)
        return out

    def step(self, state: EnvState, action: int) -> tuple[EnvState, float, bool]:
        if action not in self.valid_actions(state):
            raise ValueError(f"action {action} not valid in {state}")
        cfg = self.config
        dv, dl, harsh = _EFFECTS[action]
        speed = state.speed + dv
        lane = state.lane + dl
        if cfg.drift and speed > 0:
            rng = random.Random(f"{cfg.obstacle_seed}:{state.step_index}:{state.lane}:{state.position}")
            if rng.random() < cfg.drift_prob:
                speed -= 1
        position = state.position + speed
        step_index = state.step_index + 1
        hit = any((lane, p) in self.obstacles for p in range(state.position + 1, position + 1))
        if hit:
            reward = -cfg.collision_penalty
        else:
            reward = cfg.speed_reward * speed - (cfg.harsh_penalty if harsh else 0.0)
        terminal = hit or step_index >= cfg.horizon
        return EnvState(lane, speed, position, step_index, terminal, hit), reward, terminal


class RolloutEvaluator:
    """Uniform-random rollout value with a uniform prior over valid actions.

    Terminal states are worth 0: their penalty is already on the incoming edge.
    """

    def __init__(self, env: LaneEnv, depth_cap: int = 10, gamma: float = 0.9, seed: int = 0):
        self.env = env
        self.depth_cap = depth_cap
        self.gamma = gamma
        self.rng = random.Random(seed)

    def valid_actions(self, state):
        return self.env.valid_actions(state)

    def evaluate(self, state) -> tuple[float, list[float]]:
        valid = self.env.valid_actions(state)
        prior = [0.0] * self.env.n_actions
        for a in valid:
            prior[a] = 1.0 / len(valid)
        value = 0.0
        discount = 1.0
        for _ in range(self.depth_cap):
            if state.terminal:
                break
            a = self.rng.choice(self.env.valid_actions(state))
            state, reward, _ = self.env.step(state, a)
            value += discount * reward
            discount *= self.gamma
        return value, prior


def rollout_evaluator(env: LaneEnv, depth_cap: int = 10, gamma: float = 0.9, seed: int = 0) -> RolloutEvaluator:
    return RolloutEvaluator(env, depth_cap, gamma, seed)

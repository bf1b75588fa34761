"""Per-LSG Q-learning: epsilon-greedy rollouts, replay buffer and Bellman
regression against a periodically copied target network.

Rewards stored in experiences already include the in-rollout discount, so the
Bellman target composes that discount with the learning gamma. Termination is
the hybrid rule: converged once more than 10n episodes ran and the best total
reward sat unchanged for 5n episodes, with a hard cap of 500 episodes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .encoding import MovingState, advance_state
from .errors import ArgumentError, ConfigError, TrainingDivergenceError
from .qnet import Adam, NetConfig, QNetwork, accumulate_grads, copy_to_target


@dataclass(frozen=True)
class LearnConfig:
    gamma: float = 0.9
    eps_start: float = 0.9
    eps_decay: float = 0.98
    eps_min: float = 0.05
    batch_size: int = 32
    buffer_capacity: int = 2000
    target_interval: int = 10
    max_episodes: int = 500
    warmup_factor: int = 10   # convergence may fire only after 10n episodes
    patience_factor: int = 5  # ... and 5n episodes without a better best
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999

    def __post_init__(self):
        if not (0.0 < self.gamma < 1.0):
            raise ConfigError("gamma must lie in (0, 1)")
        for name in ("batch_size", "buffer_capacity", "target_interval",
                     "max_episodes", "warmup_factor", "patience_factor"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive")

    def epsilon(self, episode: int) -> float:
        """Annealed exploration rate; ``episode`` counts from 1."""
        return max(self.eps_min, self.eps_start * self.eps_decay ** (episode - 1))


@dataclass(frozen=True)
class Experience:
    state: MovingState
    action: int
    reward: float
    next_state: MovingState


class ReplayBuffer:
    """Ring store with uniform without-replacement minibatch sampling."""

    def __init__(self, capacity: int):
        if capacity <= 0:
            raise ConfigError("buffer capacity must be positive")
        self.capacity = capacity
        self._items: list[Experience] = []
        self._cursor = 0

    def __len__(self):
        return len(self._items)

    def push(self, exp: Experience):
        if len(self._items) < self.capacity:
            self._items.append(exp)
        else:
            self._items[self._cursor] = exp
            self._cursor = (self._cursor + 1) % self.capacity

    def sample(self, batch_size: int, rng: np.random.Generator):
        """Slots sorted ascending so gradient accumulation order is fixed."""
        count = min(batch_size, len(self._items))
        idx = rng.choice(len(self._items), size=count, replace=False)
        return [self._items[i] for i in sorted(int(i) for i in idx)]


def legal_actions(state: MovingState, current: int) -> np.ndarray:
    """Matrix indices reachable from ``current``: nonzero channel-A entries."""
    return np.flatnonzero(state.channels[0][current] > 0.0)


def bellman_target(reward: float, next_state: MovingState, next_current: int,
                   target_net: QNetwork, gamma: float) -> float:
    """y = r + gamma * max legal target-net Q; terminal states give y = r."""
    acts = legal_actions(next_state, next_current)
    if acts.size == 0:
        return float(reward)
    q = target_net.q_values(next_state)
    return float(reward + gamma * q[acts].max())


@dataclass
class TrainStats:
    episodes: int = 0
    grad_steps: int = 0
    best_total: float = -math.inf
    best_episode: int = 0
    losses: list = field(default_factory=list)
    best_history: list = field(default_factory=list)


def rollout_episode(state0: MovingState, center_index: int, episode_ctx,
                    net: QNetwork, n: int, eps: float,
                    rng: np.random.Generator):
    """Explore up to n moves from the center with an epsilon-greedy policy.

    ``episode_ctx.step(i, cur_index, next_index)`` must return the discounted
    step reward and may mutate only episode-local state. Returns the list of
    experiences and the episode's total reward; a dead end truncates early.
    """
    experiences = []
    total = 0.0
    state = state0
    current = center_index
    for i in range(1, n + 1):
        acts = legal_actions(state, current)
        if acts.size == 0:
            break
        if rng.random() < eps:
            action = int(acts[rng.integers(acts.size)])
        else:
            q = net.q_values(state)
            masked = np.full(q.shape, -np.inf)
            masked[acts] = q[acts]
            action = int(np.argmax(masked))
        reward = float(episode_ctx.step(i, current, action))
        nxt = advance_state(state, (current, action))
        experiences.append(Experience(state, action, reward, nxt))
        total += reward
        state = nxt
        current = action
    return experiences, total


def train_until_converged(state0: MovingState, center_index: int,
                          episode_ctx_factory, net: QNetwork, n: int,
                          cfg: LearnConfig, rng: np.random.Generator):
    """Run the per-LSG learning loop; returns (net, TrainStats)."""
    if n < 1:
        raise ArgumentError("rollout depth n must be >= 1")
    buffer = ReplayBuffer(cfg.buffer_capacity)
    target = copy_to_target(net)
    opt = Adam(lr=cfg.learning_rate, beta1=cfg.beta1, beta2=cfg.beta2)
    stats = TrainStats()

    for episode in range(1, cfg.max_episodes + 1):
        stats.episodes = episode
        eps = cfg.epsilon(episode)
        experiences, total = rollout_episode(
            state0, center_index, episode_ctx_factory(), net, n, eps, rng)
        for exp in experiences:
            buffer.push(exp)
        if total > stats.best_total:
            stats.best_total = total
            stats.best_episode = episode
        stats.best_history.append(stats.best_total)

        if len(buffer):
            batch = buffer.sample(cfg.batch_size, rng)
            grads = net.zero_grads()
            loss = 0.0
            for exp in batch:
                q, cache = net.forward(exp.state.channels)
                y = bellman_target(exp.reward, exp.next_state, exp.action,
                                   target, cfg.gamma)
                err = q[exp.action] - y
                loss += err * err / len(batch)
                dq = np.zeros_like(q)
                dq[exp.action] = 2.0 * err / len(batch)
                accumulate_grads(grads, net.backward(cache, dq))
            if not math.isfinite(loss):
                raise TrainingDivergenceError("non-finite loss", episode=episode)
            opt.step(net, grads)
            stats.grad_steps += 1
            stats.losses.append(float(loss))
            if stats.grad_steps % cfg.target_interval == 0:
                target = copy_to_target(net)

        warm = cfg.warmup_factor * n
        patience = cfg.patience_factor * n
        if episode > warm and episode - stats.best_episode >= patience:
            break
    return net, stats


def select_best_neighbor(net: QNetwork, state: MovingState, center_index: int,
                         neighbor_indices) -> int | None:
    """Max-Q choice among legal one-ring neighbors; None signals a dead end.

    Ties resolve to the lowest matrix index.
    """
    row = state.channels[0][center_index]
    legal = [int(j) for j in neighbor_indices if row[j] > 0.0]
    if not legal:
        return None
    q = net.q_values(state)
    legal_arr = np.array(sorted(legal))
    return int(legal_arr[np.argmax(q[legal_arr])])

"""The discovery loop: soft-epsilon exploration with adaptive
Ornstein-Uhlenbeck noise and rejection-sampled random motifs, a bounded
reward-ordered replay memory with reward-weighted minibatch sampling,
TD-target critic updates under Huber loss, deterministic policy-gradient
actor updates, and soft target-network blending.

The environment state is constant, so experiences store only (action, reward)
and the encoded state tensor is built once per run. A run executes
`warmup_episodes` of pure random search followed by `episodes` trained
episodes of `steps` interactions each; training is gated until
episode * (steps - 1) + step exceeds the memory capacity.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from . import neural
from .environment import reward as env_reward
from .motif import Pwm, rejection_sample_motif
from .neural import ActorNetwork, AdamOptimizer, CriticNetwork, huber_loss, soft_update, softmax_rows
from .seqcore import BackgroundModel, SequenceSet, background_frequencies, state_tensor

WEIGHT_SHIFT = 1e-6  # eta: keeps minimum-reward entries samplable


class NumericalAbort(RuntimeError):
    """Training produced a non-finite loss or output."""


@dataclass(frozen=True, eq=False)
class Experience:
    """One (action, reward) interaction; the state is constant and kept outside."""

    action: Pwm
    reward: float

    def __post_init__(self):
        if not math.isfinite(self.reward):
            raise ValueError(f"non-finite reward {self.reward}")


class ReplayMemory:
    """Bounded multiset of experiences ordered by reward.

    Insertion beyond capacity evicts the minimum-reward entry, so once full
    the retained minimum never decreases.
    """

    def __init__(self, capacity: int):
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        self.capacity = capacity
        self._heap: list[tuple[float, int, Experience]] = []
        self._counter = 0

    def __len__(self) -> int:
        return len(self._heap)

    def store(self, exp: Experience) -> None:
        heapq.heappush(self._heap, (exp.reward, self._counter, exp))
        self._counter += 1
        if len(self._heap) > self.capacity:
            heapq.heappop(self._heap)

    def rewards(self) -> np.ndarray:
        return np.array([item[0] for item in self._heap])

    def min_reward(self) -> float:
        if not self._heap:
            raise ValueError("memory is empty")
        return self._heap[0][0]

    def entries(self) -> list[Experience]:
        return [item[2] for item in self._heap]

    def sample_weighted(self, batch: int, rng: np.random.Generator) -> list[Experience]:
        """Sample with replacement, probability proportional to
        (reward - min_reward + eta)."""
        if batch == 0:
            return []
        if len(self._heap) < batch:
            raise ValueError(f"memory holds {len(self._heap)} < batch {batch}")
        rewards = self.rewards()
        weights = rewards - rewards.min() + WEIGHT_SHIFT
        probs = weights / weights.sum()
        idx = rng.choice(len(self._heap), size=batch, replace=True, p=probs)
        return [self._heap[i][2] for i in idx]


def store(memory: ReplayMemory, exp: Experience) -> ReplayMemory:
    memory.store(exp)
    return memory


def sample_weighted_minibatch(
    memory: ReplayMemory, batch: int, rng: np.random.Generator
) -> list[Experience]:
    return memory.sample_weighted(batch, rng)


class OuProcess:
    """Discrete Ornstein-Uhlenbeck noise with a linear sigma decay.

    x <- x + theta * (mu - x) + sigma * xi, xi ~ N(0, 1) per logit. The scale
    decays linearly from `sigma_start` to `sigma_end` over `decay_episodes`,
    applied at episode boundaries via reset().
    """

    def __init__(
        self,
        shape: tuple[int, ...],
        theta: float = 0.15,
        mu: float = 0.0,
        sigma_start: float = 0.3,
        sigma_end: float = 0.01,
        decay_episodes: int = 1,
    ):
        self.shape = shape
        self.theta = theta
        self.mu = mu
        self.sigma_start = sigma_start
        self.sigma_end = sigma_end
        self.decay_episodes = max(1, decay_episodes)
        self.sigma = sigma_start
        self.value = np.zeros(shape)

    def schedule(self, episode: int) -> float:
        frac = min(1.0, max(0.0, episode / self.decay_episodes))
        return self.sigma_start + (self.sigma_end - self.sigma_start) * frac

    def reset(self, episode: int) -> None:
        self.sigma = self.schedule(episode)
        self.value = np.zeros(self.shape)

    def step(self, rng: np.random.Generator) -> np.ndarray:
        self.value = self.value + self.theta * (self.mu - self.value)
        if self.sigma != 0.0:
            self.value = self.value + self.sigma * rng.standard_normal(self.shape)
        return self.value.copy()


def ou_step(ou: OuProcess, rng: np.random.Generator) -> np.ndarray:
    return ou.step(rng)


@dataclass
class Hyperparams:
    """Training configuration: episodes=10000, steps=10, memory capacity 1000,
    epsilon 0.01, tau 0.1, context order 1 unless overridden."""

    motif_length: int
    episodes: int = 10000
    steps: int = 10
    memory_capacity: int = 1000
    epsilon: float = 0.01
    tau: float = 0.1
    order: int = 1
    discount: float = 0.9
    lr_actor: float = 1e-3
    lr_critic: float = 1e-3
    batch: int = 32
    warmup_episodes: int = 100
    seed: int = 0
    net_sequences: int | None = 2
    concentration: float = 0.3
    rejection_max_tries: int = 50
    ou_theta: float = 0.15
    ou_sigma_start: float = 0.3
    ou_sigma_end: float = 0.01
    align_pseudo: float = 1e-6
    bg_pseudocount: float = 1e-6
    huber_delta: float = 1.0
    hidden: int = 128
    conv_channels: tuple[int, int] = (8, 16)
    kernel: int = 7
    threads: int = 1

    def __post_init__(self):
        if self.motif_length < 1:
            raise ValueError("motif_length must be >= 1")
        if self.episodes < 0 or self.warmup_episodes < 0:
            raise ValueError("episode counts must be >= 0")
        if self.steps < 1:
            raise ValueError("steps must be >= 1")
        if not 0 <= self.epsilon <= 1:
            raise ValueError("epsilon must be in [0, 1]")


class StepRecord(NamedTuple):
    episode: int
    step: int
    reward: float
    critic_loss: float | None
    actor_objective: float | None
    epsilon: float
    sigma: float


METRICS_HEADER = "episode,step,reward,critic_loss,actor_objective,epsilon,sigma"


def metrics_to_csv(metrics: list[StepRecord]) -> str:
    """Render step records as CSV; reproducible byte-for-byte under a seed."""

    def fmt(x):
        return "" if x is None else repr(float(x))

    lines = [METRICS_HEADER]
    for r in metrics:
        lines.append(
            f"{r.episode},{r.step},{fmt(r.reward)},{fmt(r.critic_loss)},"
            f"{fmt(r.actor_objective)},{fmt(r.epsilon)},{fmt(r.sigma)}"
        )
    return "\n".join(lines) + "\n"


@dataclass
class Networks:
    actor: ActorNetwork
    critic: CriticNetwork
    target_actor: ActorNetwork
    target_critic: CriticNetwork
    opt_actor: AdamOptimizer
    opt_critic: AdamOptimizer


def init_networks(hyper: Hyperparams, actor_rows: int, rng: np.random.Generator) -> Networks:
    actor = ActorNetwork(actor_rows, rng, hyper.conv_channels, hyper.kernel, hyper.hidden)
    critic = CriticNetwork(rng, hyper.conv_channels, hyper.kernel, hyper.hidden)
    return Networks(
        actor=actor,
        critic=critic,
        target_actor=actor.clone(),
        target_critic=critic.clone(),
        opt_actor=AdamOptimizer(actor.params, lr=hyper.lr_actor),
        opt_critic=AdamOptimizer(critic.params, lr=hyper.lr_critic),
    )


class _DiscoveryAdapter:
    """Actor emits the whole motif."""

    def __init__(self, motif_length: int):
        self.actor_rows = motif_length

    def to_motif(self, rows: np.ndarray) -> Pwm:
        return Pwm(rows)

    def grad_rows(self, dmotif: np.ndarray) -> np.ndarray:
        return dmotif


class _RescueAdapter:
    """Actor emits one column, substituted into a known motif."""

    def __init__(self, known: Pwm, masked_pos: int):
        if not 0 <= masked_pos < known.width:
            raise ValueError(f"masked position {masked_pos} out of range for width {known.width}")
        self.known = known
        self.pos = masked_pos
        self.actor_rows = 1

    def to_motif(self, rows: np.ndarray) -> Pwm:
        mat = self.known.matrix.copy()
        mat[self.pos] = rows[0]
        return Pwm(mat)

    def grad_rows(self, dmotif: np.ndarray) -> np.ndarray:
        return dmotif[self.pos : self.pos + 1]


def select_action(
    episode: int,
    actor: ActorNetwork,
    state: np.ndarray,
    ou: OuProcess,
    hyper: Hyperparams,
    rng: np.random.Generator,
    adapter=None,
) -> tuple[Pwm, float]:
    """Pick the next action motif; returns (action, exploration probability used).

    Warm-up episodes always use rejection-sampled random motifs; afterwards a
    random motif is used with probability epsilon, otherwise the actor output
    with OU noise injected into the pre-softmax logits.
    """
    if adapter is None:
        adapter = _DiscoveryAdapter(actor.motif_length)
    if episode <= hyper.warmup_episodes:
        probs_used = 1.0
        rows = rejection_sample_motif(
            adapter.actor_rows, hyper.concentration, rng, hyper.rejection_max_tries
        ).matrix
        return adapter.to_motif(rows), probs_used
    if rng.random() <= hyper.epsilon:
        rows = rejection_sample_motif(
            adapter.actor_rows, hyper.concentration, rng, hyper.rejection_max_tries
        ).matrix
        return adapter.to_motif(rows), hyper.epsilon
    logits = actor.forward_logits(state, train=False)
    noisy = softmax_rows(logits + ou.step(rng))
    return adapter.to_motif(noisy), hyper.epsilon


def td_target(
    reward_value: float,
    state: np.ndarray,
    target_actor: ActorNetwork,
    target_critic: CriticNetwork,
    discount: float,
    adapter=None,
) -> float:
    """Bootstrapped target y = r + gamma * Q'(s, mu'(s)); the next state is the
    same constant state. With discount 0 this is the bandit reduction y = r."""
    if discount == 0.0:
        return reward_value
    if adapter is None:
        adapter = _DiscoveryAdapter(target_actor.motif_length)
    policy_action = adapter.to_motif(target_actor.forward(state, train=False))
    q_next = float(target_critic.forward(state, policy_action.matrix[None], train=False)[0])
    return reward_value + discount * q_next


def train_step(
    batch: list[Experience],
    nets: Networks,
    state: np.ndarray,
    hyper: Hyperparams,
    adapter=None,
) -> tuple[float, float]:
    """One critic Huber regression step and one policy-gradient actor step,
    followed by soft target updates. Returns (critic_loss, actor_objective).
    """
    if not batch:
        raise ValueError("empty minibatch")
    if adapter is None:
        adapter = _DiscoveryAdapter(nets.actor.motif_length)

    # shared TD bootstrap: the state never changes, so Q'(s, mu'(s)) is one scalar
    bootstrap = 0.0
    if hyper.discount != 0.0:
        policy_rows = nets.target_actor.forward(state, train=False)
        policy_action = adapter.to_motif(policy_rows)
        bootstrap = hyper.discount * float(
            nets.target_critic.forward(state, policy_action.matrix[None], train=False)[0]
        )

    actions = np.stack([exp.action.matrix for exp in batch])
    targets = np.array([exp.reward + bootstrap for exp in batch])

    nets.critic.zero_grad()
    values = nets.critic.forward(state, actions, train=True)
    losses = np.empty(len(batch))
    dvalues = np.empty(len(batch))
    for i, (value, target) in enumerate(zip(values, targets)):
        losses[i], dvalues[i] = huber_loss(float(value), float(target), hyper.huber_delta)
    critic_loss = float(losses.mean())
    nets.critic.backward(dvalues / len(batch))
    nets.opt_critic.step()

    nets.actor.zero_grad()
    actor_rows = nets.actor.forward(state, train=True)
    proposed = adapter.to_motif(actor_rows)
    actor_objective = float(nets.critic.forward(state, proposed.matrix[None], train=True)[0])
    dactions = nets.critic.backward(np.array([-1.0]))  # ascend Q
    nets.actor.backward_probs(adapter.grad_rows(dactions[0]))
    nets.opt_actor.step()

    soft_update(nets.target_critic, nets.critic, hyper.tau)
    soft_update(nets.target_actor, nets.actor, hyper.tau)

    if not (math.isfinite(critic_loss) and math.isfinite(actor_objective)):
        raise NumericalAbort(
            f"non-finite training signal (critic_loss={critic_loss}, actor_objective={actor_objective})"
        )
    return critic_loss, actor_objective


@dataclass
class DiscoveryResult:
    """Outcome of a run: the better of the best action seen and the final
    noise-free actor output, plus both candidates and the full step log."""

    best_pwm: Pwm
    best_reward: float
    best_seen_pwm: Pwm | None
    best_seen_reward: float
    final_pwm: Pwm
    final_reward: float
    metrics: list[StepRecord]
    actions: list[np.ndarray] = field(repr=False, default_factory=list)
    networks: Networks | None = field(repr=False, default=None)


def _run_loop(seq_set: SequenceSet, hyper: Hyperparams, adapter) -> DiscoveryResult:
    rng = np.random.default_rng(hyper.seed)
    state = state_tensor(seq_set, hyper.net_sequences)
    bg = background_frequencies(seq_set, hyper.order, hyper.bg_pseudocount)
    nets = init_networks(hyper, adapter.actor_rows, rng)
    memory = ReplayMemory(hyper.memory_capacity)
    ou = OuProcess(
        (adapter.actor_rows, 4),
        theta=hyper.ou_theta,
        sigma_start=hyper.ou_sigma_start,
        sigma_end=hyper.ou_sigma_end,
        decay_episodes=max(1, hyper.episodes),
    )

    def evaluate(action: Pwm) -> float:
        return env_reward(seq_set, action, bg, hyper.align_pseudo, hyper.threads)

    metrics: list[StepRecord] = []
    actions_log: list[np.ndarray] = []
    best_seen: Pwm | None = None
    best_seen_reward = -math.inf

    total_episodes = hyper.warmup_episodes + hyper.episodes
    for episode in range(1, total_episodes + 1):
        warm = episode <= hyper.warmup_episodes
        if not warm:
            ou.reset(episode - hyper.warmup_episodes)
        for t in range(1, hyper.steps + 1):
            action, eps_used = select_action(episode, nets.actor, state, ou, hyper, rng, adapter)
            r = evaluate(action)
            memory.store(Experience(action, r))
            if r > best_seen_reward:
                best_seen, best_seen_reward = action, r
            critic_loss = actor_objective = None
            if (
                not warm
                and episode * (hyper.steps - 1) + t > hyper.memory_capacity
                and len(memory) >= hyper.batch
            ):
                minibatch = memory.sample_weighted(hyper.batch, rng)
                critic_loss, actor_objective = train_step(minibatch, nets, state, hyper, adapter)
            metrics.append(
                StepRecord(episode, t, r, critic_loss, actor_objective, eps_used, ou.sigma)
            )
            actions_log.append(action.matrix)

    final_rows = softmax_rows(nets.actor.forward_logits(state, train=False))
    final_action = adapter.to_motif(final_rows)
    final_reward = evaluate(final_action)

    if best_seen is not None and best_seen_reward >= final_reward:
        best_pwm, best_reward = best_seen, best_seen_reward
    else:
        best_pwm, best_reward = final_action, final_reward
    result = DiscoveryResult(
        best_pwm=best_pwm,
        best_reward=best_reward,
        best_seen_pwm=best_seen,
        best_seen_reward=best_seen_reward,
        final_pwm=final_action,
        final_reward=final_reward,
        metrics=metrics,
        actions=actions_log,
        networks=nets,
    )
    return result


def run_discovery(seq_set: SequenceSet, hyper: Hyperparams) -> DiscoveryResult:
    """Full motif discovery: warm-up random search, then trained episodes.

    Returns the highest-reward action ever seen and the final noise-free actor
    output, reporting the better of the two as the discovered motif.
    """
    return _run_loop(seq_set, hyper, _DiscoveryAdapter(hyper.motif_length))


@dataclass
class RescueResult:
    """Single-column recovery outcome; `column` is the final noise-free output."""

    column: np.ndarray
    final_reward: float
    masked_pos: int
    metrics: list[StepRecord]
    actions: list[np.ndarray] = field(repr=False, default_factory=list)


def run_rescue(
    known: Pwm, masked_pos: int, seq_set: SequenceSet, hyper: Hyperparams
) -> RescueResult:
    """Recover one masked motif column.

    The actor emits a single column; the synthesized motif (known motif with
    that column substituted) drives both the environment reward and the critic
    input. Returns the final noise-free column.
    """
    adapter = _RescueAdapter(known, masked_pos)
    outcome = _run_loop(seq_set, hyper, adapter)
    return RescueResult(
        column=outcome.final_pwm.matrix[masked_pos].copy(),
        final_reward=outcome.final_reward,
        masked_pos=masked_pos,
        metrics=outcome.metrics,
        actions=outcome.actions,
    )

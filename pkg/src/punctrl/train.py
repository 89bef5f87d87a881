"""Training protocol, manual-scheduling baseline, and probe experiments.

Training is fully online: one environment step, one gradient step on that
single transition, one Polyak target update. Episodes reset the
environment (the random stream keeps running) but never the networks.
"""

import math
import os
from dataclasses import dataclass, field

import numpy as np

from .agents import (
    EG,
    VB,
    ActionChoice,
    AgentSpec,
    Transition,
    epsilon_at,
    loss_eg,
    loss_me,
    loss_vb,
    select_action,
    td_components,
)
from .metrics import EpisodeRow
from .net import (
    Adam,
    NetworkParams,
    TargetPair,
    forward,
    forward_cached,
    backward,
    head_output_dim,
    params_from_bytes,
    params_to_bytes,
    split_gaussian,
)
from .seeding import STREAM_ACTION, STREAM_ENV, STREAM_NET_INIT, check_seed, substream
from .sim import PuncturingSim, RequestKind, SimConfig
from .validation import check_count, check_positive

DEFAULT_HIDDEN_DIMS = (128, 128)
PROBE_GAIN = 2.0  # the mean of the Rayleigh-squared gain distribution
ADAPTATION_CAP = 10000


class TrainingDiverged(RuntimeError):
    """Raised when parameters or the loss stop being finite."""


@dataclass
class TrainConfig:
    agent: AgentSpec = field(default_factory=AgentSpec)
    sim: SimConfig = field(default_factory=SimConfig)
    episodes: int = 30
    steps_per_episode: int = 3000
    seed: int = 0
    hidden_dims: tuple = DEFAULT_HIDDEN_DIMS
    learning_rate: float = 1e-4
    target_tau: float = 1e-4
    checkpoint_every: int = 0
    checkpoint_dir: str | None = None

    def validate(self) -> "TrainConfig":
        self.agent.validate()
        self.sim.validate()
        check_count("episodes", self.episodes, minimum=0)
        check_count("steps_per_episode", self.steps_per_episode, minimum=1)
        check_seed(self.seed)
        check_positive("learning_rate", self.learning_rate)
        check_positive("target_tau", self.target_tau)
        check_count("checkpoint_every", self.checkpoint_every, minimum=0)
        if not self.hidden_dims:
            raise ValueError("hidden_dims must name at least one hidden layer")
        for width in self.hidden_dims:
            check_count("hidden layer width", width, minimum=1)
        return self

    @property
    def total_decay_steps(self) -> int:
        return int(self.agent.epsilon_decay_fraction * self.episodes * self.steps_per_episode)

    def run_id(self) -> str:
        return f"{self.agent.kind}-s{self.seed}"


@dataclass
class RunResult:
    run_id: str
    agent_kind: str
    seed: int
    episodes: list
    final_params: NetworkParams | None
    total_steps: int
    checkpoints: list = field(default_factory=list)


def build_network(cfg: TrainConfig, rng: np.random.Generator) -> NetworkParams:
    out_dim = head_output_dim(cfg.agent.head_mode, cfg.sim.n_actions)
    return NetworkParams.init(cfg.sim.state_dim, cfg.hidden_dims, out_dim, rng)


def _target_values(spec, target_params: NetworkParams, s_next) -> np.ndarray:
    """Per-action bootstrap values from the target network.

    Gaussian heads are read at their means; the bootstrap is a constant in
    the loss either way.
    """
    target_out = forward(target_params, s_next)
    if spec.kind == EG:
        return target_out
    return split_gaussian(target_out)[0]


def _output_gradients(spec, head_out, choice, tr, target_q):
    """Loss of one transition and its gradient w.r.t. the raw head output."""
    prediction, bootstrap_target = td_components(spec, choice.q, target_q, tr)
    if spec.kind == EG:
        loss, grad_pred = loss_eg(prediction, bootstrap_target)
        grad_out = np.zeros_like(head_out)
        grad_out[tr.a] = grad_pred
        return loss, grad_out
    mu, log_sigma = split_gaussian(head_out)
    loss_fn = loss_vb if spec.kind == VB else loss_me
    loss, grad_mu, grad_ls = loss_fn(
        prediction, bootstrap_target, tr.a, mu, log_sigma, choice.noise, spec
    )
    return loss, np.concatenate([grad_mu, grad_ls])


def _choice_from_noise(spec, head_out, action, noise) -> ActionChoice:
    """Reconstruct the per-action estimates for a known action and noise draw."""
    if spec.kind == EG:
        return ActionChoice(action, np.asarray(head_out, dtype=float), None)
    mu, log_sigma = split_gaussian(head_out)
    return ActionChoice(action, mu + np.exp(log_sigma) * noise, noise)


def _learn_step(spec, pair, adam, head_out, cache, choice, tr) -> float:
    """One gradient/Polyak update on a single transition; returns the loss."""
    target_q = _target_values(spec, pair.target, tr.s_next)
    loss, grad_out = _output_gradients(spec, head_out, choice, tr, target_q)
    grads = backward(pair.online, cache, grad_out)
    adam.step(pair.online, grads)
    pair.polyak_update()
    return loss


def _analytic_loss_grads(params, target_params, tr, spec, noise) -> NetworkParams:
    """Per-parameter loss gradients on one transition, for oracle checks."""
    head_out, cache = forward_cached(params, tr.s)
    choice = _choice_from_noise(spec, head_out, tr.a, noise)
    target_q = _target_values(spec, target_params, tr.s_next)
    _, grad_out = _output_gradients(spec, head_out, choice, tr, target_q)
    return backward(params, cache, grad_out)


def _loss_for_check(params, target_params, s, s_next, tr, spec, noise) -> float:
    """Scalar loss of one transition under fixed noise, for finite differences."""
    head_out = forward(params, tr.s)
    choice = _choice_from_noise(spec, head_out, tr.a, noise)
    target_q = _target_values(spec, target_params, tr.s_next)
    loss, _ = _output_gradients(spec, head_out, choice, tr, target_q)
    return loss


def _episode_row(cfg: TrainConfig, env: PuncturingSim, episode: int, sum_reward: float,
                 epsilon_end: float, agent_kind: str | None = None) -> EpisodeRow:
    c = env.counters
    # a request still pending at truncation is neither served nor missed;
    # ratios are over resolved requests so missed + scheduled = arrived
    arrived = c.arrived - (1 if env.request.pending else 0)
    arrived_critical = c.arrived_critical - (
        1 if env.request.kind is RequestKind.CRITICAL else 0
    )
    kind = agent_kind if agent_kind is not None else cfg.agent.kind
    return EpisodeRow(
        run_id=f"{kind}-s{cfg.seed}",
        agent=kind,
        seed=cfg.seed,
        episode=episode,
        sum_reward=sum_reward,
        tx_interrupted_ratio=c.tx_interrupted / max(c.tx_started, 1),
        urllc_missed_ratio=c.discarded / arrived if arrived > 0 else 0.0,
        critical_missed_ratio=(
            c.discarded_critical / arrived_critical if arrived_critical > 0 else 0.0
        ),
        epsilon_end=epsilon_end,
    )


def train(cfg: TrainConfig, initial_params: NetworkParams | None = None) -> RunResult:
    """Run the online training protocol and return per-episode metrics."""
    cfg.validate()
    spec = cfg.agent
    env = PuncturingSim(cfg.sim, substream(cfg.seed, STREAM_ENV))
    action_rng = substream(cfg.seed, STREAM_ACTION)
    if initial_params is None:
        online = build_network(cfg, substream(cfg.seed, STREAM_NET_INIT))
    else:
        online = initial_params.copy()
    pair = TargetPair(online, tau=cfg.target_tau)
    adam = Adam(online, cfg.learning_rate)

    total_decay = cfg.total_decay_steps
    rows = []
    checkpoints = []
    global_step = 0
    is_eg = spec.kind == EG

    for episode in range(1, cfg.episodes + 1):
        obs = env.reset()
        sum_reward = 0.0
        epsilon = 0.0
        for _ in range(cfg.steps_per_episode):
            if is_eg:
                epsilon = epsilon_at(global_step, total_decay, spec)
            head_out, cache = forward_cached(online, obs)
            choice = select_action(spec, head_out, action_rng, epsilon)
            obs_next, reward, _ = env.step(choice.action)
            tr = Transition(obs, choice.action, reward.r_total, obs_next, terminal=False)
            loss = _learn_step(spec, pair, adam, head_out, cache, choice, tr)
            if not math.isfinite(loss):
                raise TrainingDiverged(
                    f"non-finite loss at episode {episode}, step {global_step} "
                    f"({cfg.run_id()})"
                )
            sum_reward += reward.r_total
            obs = obs_next
            global_step += 1
        if not online.all_finite():
            raise TrainingDiverged(
                f"non-finite parameters after episode {episode} ({cfg.run_id()})"
            )
        rows.append(_episode_row(cfg, env, episode, sum_reward, epsilon if is_eg else 0.0))
        if (
            cfg.checkpoint_dir
            and cfg.checkpoint_every > 0
            and episode % cfg.checkpoint_every == 0
            and episode < cfg.episodes
        ):
            path = os.path.join(cfg.checkpoint_dir, f"{cfg.run_id()}_ep{episode:03d}.ckpt")
            save_checkpoint(path, online, spec.kind, global_step)
            checkpoints.append(path)

    if cfg.checkpoint_dir:
        path = os.path.join(cfg.checkpoint_dir, f"{cfg.run_id()}_final.ckpt")
        save_checkpoint(path, online, spec.kind, global_step)
        checkpoints.append(path)
    return RunResult(cfg.run_id(), spec.kind, cfg.seed, rows, online, global_step, checkpoints)


MANUAL = "manual"


def manual_action(slot_index: int, slots_per_subframe: int, remaining, kind: RequestKind) -> int:
    """Deterministic scheduling heuristic used as the non-learned baseline.

    Catch-focused: any pending request, normal or critical, is scheduled
    right away into the resource with the least remaining occupation (a free
    one if available, ties to the lowest index). Nothing is ever missed, at
    the price of somewhat more interrupted transmissions.
    """
    if kind is RequestKind.NONE:
        return 0
    return 1 + min(range(len(remaining)), key=remaining.__getitem__)


def manual_baseline(cfg: TrainConfig) -> RunResult:
    """Evaluate the manual heuristic without learning; same metrics as train."""
    cfg.validate()
    env = PuncturingSim(cfg.sim, substream(cfg.seed, STREAM_ENV))
    rows = []
    total_steps = 0
    for episode in range(1, cfg.episodes + 1):
        env.reset()
        sum_reward = 0.0
        for _ in range(cfg.steps_per_episode):
            action = manual_action(
                env.slot_index,
                cfg.sim.slots_per_subframe,
                [res.remaining_slots for res in env.resources],
                env.request.kind,
            )
            _, reward, _ = env.step(action)
            sum_reward += reward.r_total
            total_steps += 1
        rows.append(_episode_row(cfg, env, episode, sum_reward, 0.0, agent_kind=MANUAL))
    return RunResult(f"{MANUAL}-s{cfg.seed}", MANUAL, cfg.seed, rows, None, total_steps)


def make_probe_state(sim_cfg: SimConfig) -> np.ndarray:
    """Critical request in the first mini-slot, every resource fully occupied."""
    obs = np.ones(sim_cfg.state_dim)
    obs[0] = 0.0
    return obs


@dataclass
class ProbeReaction:
    """Head readout on the probe state."""

    argmax_action: int
    md: float | None
    logstd_wait: float | None = None
    mean_logstd_punct: float | None = None


def probe_reaction(params: NetworkParams, spec: AgentSpec, sim_cfg: SimConfig) -> ProbeReaction:
    """Preference magnitude of waiting vs puncturing on the probe state.

    md = estimate(wait) / mean(estimate(punctures)); undefined (None) when
    the denominator magnitude falls below 1e-12.
    """
    out = forward(params, make_probe_state(sim_cfg))
    if spec.kind == EG:
        q = out
        logstd_wait = mean_logstd_punct = None
    else:
        q, log_sigma = split_gaussian(out)
        logstd_wait = float(log_sigma[0])
        mean_logstd_punct = float(np.mean(log_sigma[1:]))
    denom = float(np.mean(q[1:]))
    md = float(q[0]) / denom if abs(denom) >= 1e-12 else None
    return ProbeReaction(int(np.argmax(q)), md, logstd_wait, mean_logstd_punct)


def probe_transition(sim_cfg: SimConfig) -> Transition:
    """The one-step experience of waiting through the probe situation.

    Reward: full capacity of the occupied resources at the distribution-mean
    gain, minus the critical-discard penalty. The successor observation is
    the next slot with no request and every occupation one slot shorter; the
    transition bootstraps through it like any training step, which is what
    keeps a committed greedy head from flipping after a handful of updates.
    """
    s = make_probe_state(sim_cfg)
    r_capacity = sim_cfg.n_resources * math.log1p(PROBE_GAIN)
    r = sim_cfg.w_capacity * r_capacity + sim_cfg.w_discard_critical * (-1.0)
    s_next = np.empty(sim_cfg.state_dim)
    s_next[0] = 1.0 / max(sim_cfg.slots_per_subframe - 1, 1)
    s_next[1] = 0.0
    s_next[2] = 0.0
    s_next[3:] = (sim_cfg.slots_per_subframe - 1) / sim_cfg.slots_per_subframe
    return Transition(s, 0, r, s_next, terminal=False)


def probe_adaptation(
    params: NetworkParams,
    spec: AgentSpec,
    cfg: TrainConfig,
    rng: np.random.Generator,
    cap: int = ADAPTATION_CAP,
) -> int:
    """Confront-train-repeat on the probe state until a puncture is chosen.

    Returns the confrontation count of the first puncturing decision, or
    ``cap`` if the agent never explores. The networks start from a copy of
    the snapshot with a fresh optimizer and target, so repetitions are
    independent.
    """
    online = params.copy()
    pair = TargetPair(online, tau=cfg.target_tau)
    adam = Adam(online, cfg.learning_rate)
    tr = probe_transition(cfg.sim)
    for count in range(1, cap + 1):
        head_out, cache = forward_cached(online, tr.s)
        choice = select_action(spec, head_out, rng, epsilon=0.0)
        if choice.action != 0:
            return count
        loss = _learn_step(spec, pair, adam, head_out, cache, choice, tr)
        if not math.isfinite(loss):
            raise TrainingDiverged(f"non-finite loss during adaptation probe at step {count}")
    return cap


CHECKPOINT_MAGIC = b"PCKP"


def save_checkpoint(path, params: NetworkParams, agent_kind: str, step_count: int) -> None:
    """Parameter snapshot prefixed with the agent kind and training step count."""
    kind_bytes = agent_kind.encode("utf-8")
    header = (
        CHECKPOINT_MAGIC
        + np.array([len(kind_bytes)], dtype="<u4").tobytes()
        + kind_bytes
        + np.array([step_count], dtype="<u8").tobytes()
    )
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "wb") as fh:
        fh.write(header + params_to_bytes(params))


def load_checkpoint(path) -> tuple[NetworkParams, str, int]:
    with open(path, "rb") as fh:
        buf = fh.read()
    if buf[:4] != CHECKPOINT_MAGIC:
        raise ValueError(f"{path} is not a checkpoint file")
    kind_len = int(np.frombuffer(buf, dtype="<u4", count=1, offset=4)[0])
    kind = buf[8 : 8 + kind_len].decode("utf-8")
    offset = 8 + kind_len
    step_count = int(np.frombuffer(buf, dtype="<u8", count=1, offset=offset)[0])
    params = params_from_bytes(buf[offset + 8 :])
    return params, kind, step_count

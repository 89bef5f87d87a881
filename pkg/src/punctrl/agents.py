"""Exploration strategies: action selection and per-transition loss assembly.

Three agent kinds share the one-step temporal-difference objective and
differ in how they explore:

* ``eg`` -- deterministic head, epsilon-greedy with a linear epsilon decay;
* ``vb`` -- Gaussian head, explores through output sampling, and adds the
  summed log probability density of the sampled estimates to the loss so
  minimization keeps the variance up;
* ``me`` -- Gaussian head, adds a softmax-based uniformity penalty so the
  per-action estimates stay close in magnitude.
"""

import math
from dataclasses import dataclass

import numpy as np

from .net import DETERMINISTIC, GAUSSIAN, reparameterize, sample_gaussian_head, split_gaussian
from .validation import check_finite, check_probability

EG = "eg"
VB = "vb"
ME = "me"
AGENT_KINDS = (EG, VB, ME)

SIGN_UNIFORM_PRIOR = "uniform_prior"
SIGN_AS_WRITTEN = "as_written"


@dataclass
class AgentSpec:
    """One exploration strategy with its loss weights and schedules."""

    kind: str = EG
    epsilon_initial: float = 0.99
    epsilon_decay_fraction: float = 0.5
    w_lp: float = 1e-2
    w_me: float = math.e
    softmax_clip_low: float = 1e-3
    gamma: float = 0.99
    me_sign: str = SIGN_UNIFORM_PRIOR

    def validate(self) -> "AgentSpec":
        if self.kind not in AGENT_KINDS:
            raise ValueError(f"agent kind must be one of {AGENT_KINDS}, got {self.kind!r}")
        check_probability("epsilon_initial", self.epsilon_initial)
        check_probability("epsilon_decay_fraction", self.epsilon_decay_fraction)
        check_probability("gamma", self.gamma)
        check_finite("w_lp", self.w_lp)
        check_finite("w_me", self.w_me)
        if not 0.0 < self.softmax_clip_low < 1.0:
            raise ValueError(f"softmax_clip_low must lie in (0, 1), got {self.softmax_clip_low}")
        if self.me_sign not in (SIGN_UNIFORM_PRIOR, SIGN_AS_WRITTEN):
            raise ValueError(f"unknown me_sign {self.me_sign!r}")
        return self

    @property
    def head_mode(self) -> str:
        return DETERMINISTIC if self.kind == EG else GAUSSIAN


@dataclass
class Transition:
    s: np.ndarray
    a: int
    r: float
    s_next: np.ndarray
    terminal: bool = False


@dataclass
class ActionChoice:
    """Selected action plus the per-action estimates that justified it.

    ``q`` is the deterministic output for ``eg`` and the sampled estimates
    for the stochastic heads; ``noise`` holds the standard-normal draw of
    the reparameterization (None for ``eg``).
    """

    action: int
    q: np.ndarray
    noise: np.ndarray | None = None


def epsilon_at(step: int, total_decay_steps: int, spec: AgentSpec) -> float:
    """Linear decay from epsilon_initial to exactly 0 at total_decay_steps."""
    if total_decay_steps <= 0:
        return 0.0
    return max(0.0, spec.epsilon_initial * (1.0 - step / total_decay_steps))


def select_action(
    spec: AgentSpec,
    head_out: np.ndarray,
    rng: np.random.Generator,
    epsilon: float = 0.0,
) -> ActionChoice:
    """Pick an action from the raw head output.

    eg: epsilon-uniform, otherwise greedy on the deterministic estimates.
    vb/me: sample every action's estimate through the Gaussian head and act
    greedily on the sample; the sampling itself is the exploration.
    """
    if spec.kind == EG:
        q = np.asarray(head_out, dtype=float)
        if rng.random() < epsilon:
            action = int(rng.integers(0, q.shape[0]))
        else:
            action = int(np.argmax(q))
        return ActionChoice(action, q, None)
    mu, log_sigma = split_gaussian(np.asarray(head_out, dtype=float))
    q, noise = sample_gaussian_head(mu, log_sigma, rng)
    return ActionChoice(int(np.argmax(q)), q, noise)


def td_components(
    spec: AgentSpec,
    online_q: np.ndarray,
    target_q_next: np.ndarray,
    tr: Transition,
) -> tuple[float, float]:
    """One-step TD pieces: the prediction and its bootstrapped target.

    ``online_q`` are the estimates the action was chosen from (sampled ones
    for stochastic heads); the target-side maximum is treated as a constant.
    """
    prediction = float(online_q[tr.a])
    gamma = 0.0 if tr.terminal else spec.gamma
    bootstrap_target = tr.r + gamma * float(np.max(target_q_next))
    return prediction, bootstrap_target


def loss_eg(prediction: float, bootstrap_target: float) -> tuple[float, float]:
    """Squared TD error and its gradient w.r.t. the prediction."""
    diff = prediction - bootstrap_target
    return diff * diff, 2.0 * diff


def loss_vb(
    prediction: float,
    bootstrap_target: float,
    action: int,
    mu: np.ndarray,
    log_sigma: np.ndarray,
    noise: np.ndarray,
    spec: AgentSpec,
):
    """TD loss plus the weighted sum of sampled log probability densities.

    Returns (loss, grad_mu, grad_log_sigma). The density term's gradient is
    assembled through the full chain rule: its direct (mu, log_sigma)
    arguments plus the reparameterization path of the sampled q. At
    q = mu + sigma * noise those contributions cancel to exactly 0 for mu
    and -1 for log_sigma, which is what keeps the variance from collapsing.
    """
    sigma = np.exp(log_sigma)
    q = reparameterize(mu, log_sigma, noise)
    diff = prediction - bootstrap_target
    loss_td = diff * diff

    dev = q - mu
    inv_var = np.exp(-2.0 * log_sigma)
    log_dens = -log_sigma - 0.5 * math.log(2.0 * math.pi) - dev * dev * inv_var / 2.0
    loss_lp = float(np.sum(log_dens))

    # direct partials of the density and the reparameterization path
    dlp_dq = -dev * inv_var
    dlp_dmu = dev * inv_var
    dlp_dls = -1.0 + dev * dev * inv_var
    dq_dls = sigma * noise
    grad_mu_lp = dlp_dmu + dlp_dq  # dq/dmu = 1
    grad_ls_lp = dlp_dls + dlp_dq * dq_dls

    grad_mu = spec.w_lp * grad_mu_lp
    grad_ls = spec.w_lp * grad_ls_lp
    grad_mu[action] += 2.0 * diff
    grad_ls[action] += 2.0 * diff * sigma[action] * noise[action]
    return loss_td + spec.w_lp * loss_lp, grad_mu, grad_ls


def softmax_clipped(q: np.ndarray, clip_low: float) -> np.ndarray:
    """Shift-invariant softmax, then elementwise clamp to [clip_low, 1].

    No renormalization after the clamp; values that enter a log downstream
    are therefore bounded away from zero.
    """
    q = np.asarray(q, dtype=float)
    shifted = q - np.max(q)
    e = np.exp(shifted)
    sm = e / np.sum(e)
    return np.clip(sm, clip_low, 1.0)


def loss_me(
    prediction: float,
    bootstrap_target: float,
    action: int,
    mu: np.ndarray,
    log_sigma: np.ndarray,
    noise: np.ndarray,
    spec: AgentSpec,
    sign_mode: str | None = None,
):
    """TD loss plus the weighted sum of log softmax values of the sampled q.

    In the default ``uniform_prior`` mode the sum is subtracted, making the
    penalty smallest at a uniform softmax; ``as_written`` adds it instead.
    Components clamped by the softmax clip contribute no gradient.
    """
    sign_mode = spec.me_sign if sign_mode is None else sign_mode
    sign = -1.0 if sign_mode == SIGN_UNIFORM_PRIOR else 1.0
    sigma = np.exp(log_sigma)
    q = reparameterize(mu, log_sigma, noise)
    diff = prediction - bootstrap_target
    loss_td = diff * diff

    shifted = q - np.max(q)
    e = np.exp(shifted)
    sm_raw = e / np.sum(e)
    sm = np.clip(sm_raw, spec.softmax_clip_low, 1.0)
    loss_me_term = float(np.sum(np.log(sm)))

    unclamped = sm_raw >= spec.softmax_clip_low
    k = float(np.sum(unclamped))
    # d/dq_j sum_{i unclamped} log sm_i = [j unclamped] - k * sm_j
    grad_q = unclamped.astype(float) - k * sm_raw

    grad_mu = sign * spec.w_me * grad_q
    grad_ls = sign * spec.w_me * grad_q * sigma * noise
    grad_mu[action] += 2.0 * diff
    grad_ls[action] += 2.0 * diff * sigma[action] * noise[action]
    return loss_td + sign * spec.w_me * loss_me_term, grad_mu, grad_ls

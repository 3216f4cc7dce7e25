"""The opponent-modelling soft actor-critic agent.

Each agent owns four networks: a conditional policy (acts on its own
observation plus its prediction of the other agents' actions), an
opponent model (a joint diagonal squashed Gaussian over the concatenated
opponent action vector given the observation), a centralized critic over
the joint observation and all actions, and an EMA-tracked target critic.

Training updates, per agent per step and all on one fresh minibatch:
  critic   -> mean squared soft Bellman residual against frozen targets
  policy   -> reparameterized soft objective through the (frozen) critic
  opponent -> ascend the sum of the *other* agents' frozen critics, each
              evaluated with only that opponent's action replaced by the
              model's prediction (all remaining actions come from replay),
              plus an entropy bonus

Execution is decentralized: action selection is a function of the
policy/opponent-model pair only, packaged as an Executor that holds no
critic.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .envs.core import EnvSpec
from .nncore import (
    AdamState,
    HEAD_GAUSSIAN,
    HEAD_LINEAR,
    Mlp,
    Tape,
    adam_step,
    check_finite_loss,
    ema_update,
    mean_action,
    sample_squashed,
    squashed_sample_graph,
)
from .nncore import tape as T


@dataclass
class Hyper:
    """Training hyperparameters (defaults follow the soft actor-critic
    recipe: lr 3e-4, batch 256, tau 0.01, alpha 1, gamma 0.95)."""

    gamma: float = 0.95
    alpha: float = 1.0
    tau: float = 0.01
    lr: float = 3e-4
    batch_size: int = 256

    def __post_init__(self):
        if not 0.0 <= self.gamma < 1.0:
            raise ValueError(f"gamma must lie in [0, 1), got {self.gamma}")
        if self.alpha < 0.0:
            raise ValueError(f"alpha must be non-negative, got {self.alpha}")
        if not 0.0 < self.tau <= 1.0:
            raise ValueError(f"tau must lie in (0, 1], got {self.tau}")
        if self.lr <= 0.0:
            raise ValueError(f"lr must be positive, got {self.lr}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be positive, got {self.batch_size}")

    def to_dict(self) -> dict:
        return {
            "gamma": self.gamma,
            "alpha": self.alpha,
            "tau": self.tau,
            "lr": self.lr,
            "batch_size": self.batch_size,
        }


def opponent_layout(spec: EnvSpec, index: int) -> list[tuple[int, int, int]]:
    """(agent j, start, stop) slices of the concatenated opponent action
    vector for agent `index`, ascending in j."""
    layout = []
    offset = 0
    for j in range(spec.n_agents):
        if j == index:
            continue
        layout.append((j, offset, offset + spec.action_dims[j]))
        offset += spec.action_dims[j]
    return layout


@dataclass
class ActResult:
    action: np.ndarray
    predicted_opponent_actions: np.ndarray
    log_prob_opponent: float
    log_prob_policy: float


class Executor:
    """Decentralized action selector: policy + opponent model, no critic."""

    def __init__(self, index: int, spec: EnvSpec, policy: Mlp, opponent_model: Mlp):
        self.index = index
        self.spec = spec
        self.policy = policy
        self.opponent_model = opponent_model
        self.opponent_dim = sum(spec.action_dims) - spec.action_dims[index]


def act(
    executor: "Executor | AgentNets",
    obs: np.ndarray,
    rng: np.random.Generator | None = None,
    deterministic: bool = False,
) -> ActResult:
    """Sample opponent predictions, then an own action conditioned on them.

    Deterministic mode takes both distributions at their mode (no RNG
    consumed); log-densities are still reported, evaluated at the mode.
    """
    if isinstance(executor, AgentNets):
        executor = executor.executor()
    spec = executor.spec
    low, high = spec.action_low, spec.action_high
    obs = np.asarray(obs, dtype=np.float64)
    if obs.shape != (spec.obs_dims[executor.index],):
        raise ValueError(
            f"observation shape {obs.shape} does not match spec {spec.obs_dims[executor.index]}"
        )
    row = obs[None, :]

    mu_o, sig_o = executor.opponent_model.forward_values(row)
    if deterministic:
        eps_o = np.zeros_like(mu_o)
    else:
        eps_o = rng.standard_normal(mu_o.shape)
    opp = sample_squashed(mu_o, sig_o, eps_o, low, high)

    pol_in = np.concatenate([row, opp.action], axis=1)
    mu_p, sig_p = executor.policy.forward_values(pol_in)
    if deterministic:
        eps_p = np.zeros_like(mu_p)
    else:
        eps_p = rng.standard_normal(mu_p.shape)
    own = sample_squashed(mu_p, sig_p, eps_p, low, high)

    return ActResult(
        action=own.action[0],
        predicted_opponent_actions=opp.action[0],
        log_prob_opponent=float(opp.log_prob[0]),
        log_prob_policy=float(own.log_prob[0]),
    )


class AgentNets:
    """One agent's networks and optimizer states."""

    def __init__(self, index: int, spec: EnvSpec, hyper: Hyper, rng: np.random.Generator,
                 hidden=(256, 256)):
        if spec.n_agents < 2:
            raise ValueError("opponent modelling needs at least two agents")
        self.index = index
        self.spec = spec
        self.hyper = hyper
        obs_dim = spec.obs_dims[index]
        act_dim = spec.action_dims[index]
        self.opponent_dim = sum(spec.action_dims) - act_dim
        state_dim = sum(spec.obs_dims)
        joint_action_dim = sum(spec.action_dims)

        self.policy = Mlp(obs_dim + self.opponent_dim, act_dim, head=HEAD_GAUSSIAN, hidden=hidden)
        self.opponent_model = Mlp(obs_dim, self.opponent_dim, head=HEAD_GAUSSIAN, hidden=hidden)
        self.critic = Mlp(state_dim + joint_action_dim, 1, head=HEAD_LINEAR, hidden=hidden)
        self.policy.init_params(rng)
        self.opponent_model.init_params(rng)
        self.critic.init_params(rng)
        self.target_critic = self.critic.copy()

        self.critic_opt = AdamState.zeros(self.critic.n_params, hyper.lr)
        self.policy_opt = AdamState.zeros(self.policy.n_params, hyper.lr)
        self.opponent_opt = AdamState.zeros(self.opponent_model.n_params, hyper.lr)

        self._critic_grad = self.critic.zeros_grad()
        self._policy_grad = self.policy.zeros_grad()
        self._opponent_grad = self.opponent_model.zeros_grad()
        self._layout = opponent_layout(spec, index)

    def executor(self, snapshot: bool = False) -> Executor:
        policy, model = self.policy, self.opponent_model
        if snapshot:
            policy, model = policy.copy(), model.copy()
        return Executor(self.index, self.spec, policy, model)


@dataclass
class UpdateReport:
    critic_loss: float
    policy_loss: float
    opponent_loss: float
    grad_norm_critic: float
    grad_norm_policy: float
    grad_norm_opponent: float

    def to_dict(self) -> dict:
        return {
            "critic_loss": self.critic_loss,
            "policy_loss": self.policy_loss,
            "opponent_loss": self.opponent_loss,
            "grad_norm_critic": self.grad_norm_critic,
            "grad_norm_policy": self.grad_norm_policy,
            "grad_norm_opponent": self.grad_norm_opponent,
        }


def _joint_columns(arrays: list[np.ndarray]) -> np.ndarray:
    return np.concatenate(arrays, axis=1)


def bellman_targets(agent: AgentNets, batch, rng: np.random.Generator) -> np.ndarray:
    """Soft bootstrap targets; a constant w.r.t. every trainable parameter.

    Next-state own and opponent actions are sampled fresh from the
    agent's current policy/opponent model; their log-densities enter as
    entropy corrections. Rows flagged done take the raw reward. Fully
    terminal batches skip the next-state passes outright (the factor
    would zero them anyway).
    """
    spec, hyper, i = agent.spec, agent.hyper, agent.index
    rewards = batch.rewards[:, i]
    not_done = 1.0 - batch.done
    if not np.any(not_done):
        return rewards.copy()

    low, high = spec.action_low, spec.action_high
    s_next_own = batch.next_obs[i]
    mu_o, sig_o = agent.opponent_model.forward_values(s_next_own)
    opp = sample_squashed(mu_o, sig_o, rng.standard_normal(mu_o.shape), low, high)
    pol_in = np.concatenate([s_next_own, opp.action], axis=1)
    mu_p, sig_p = agent.policy.forward_values(pol_in)
    own = sample_squashed(mu_p, sig_p, rng.standard_normal(mu_p.shape), low, high)

    parts = [None] * spec.n_agents
    parts[i] = own.action
    for j, a, b in agent._layout:
        parts[j] = opp.action[:, a:b]
    q_in = np.concatenate([_joint_columns(batch.next_obs), _joint_columns(parts)], axis=1)
    q_next = agent.target_critic.forward_values(q_in)[:, 0]

    soft_value = q_next - hyper.alpha * own.log_prob - hyper.alpha * opp.log_prob
    return rewards + hyper.gamma * not_done * soft_value


def critic_loss_graph(agent: AgentNets, batch, rng: np.random.Generator, grad_out=None):
    """Mean squared residual of the critic against its soft targets."""
    targets = bellman_targets(agent, batch, rng)
    q_in = np.concatenate([_joint_columns(batch.obs), _joint_columns(batch.actions)], axis=1)
    q = agent.critic.forward(q_in, trainable=True, grad_out=grad_out)
    resid = T.sub(T.row_sum(q), targets)
    return T.mean_all(T.square(resid))


def opponent_loss_graph(agent: AgentNets, batch, agents, rng: np.random.Generator, grad_out=None):
    """Negated empirical-data opponent objective.

    For each opponent j, agent j's (frozen) critic is evaluated with only
    j's action replaced by the model's reparameterized prediction; every
    other action, including this agent's own, is the stored replay action.
    The model's log-density at its own sample enters once as the entropy
    term. Returns (loss, opponent-model mu/sigma values) so callers can
    reuse the forward pass.
    """
    spec, hyper, i = agent.spec, agent.hyper, agent.index
    low, high = spec.action_low, spec.action_high
    state = _joint_columns(batch.obs)

    mu_o, sig_o = agent.opponent_model.forward(batch.obs[i], trainable=True, grad_out=grad_out)
    eps = rng.standard_normal(mu_o.value.shape)
    pred, log_rho = squashed_sample_graph(mu_o, sig_o, eps, low, high)

    q_sum = None
    for j, a, b in agent._layout:
        parts: list = [batch.actions[k] for k in range(spec.n_agents)]
        parts[j] = T.slice_cols(pred, a, b)
        q_in = T.concat_cols([state] + parts)
        q_j = T.row_sum(agents[j].critic.forward(q_in, trainable=False))
        q_sum = q_j if q_sum is None else T.add(q_sum, q_j)

    loss = T.mean_all(T.sub(T.scale(log_rho, hyper.alpha), q_sum))
    return loss, mu_o.value, sig_o.value


def policy_loss_graph(agent: AgentNets, batch, rng: np.random.Generator,
                      opponent_stats=None, grad_out=None):
    """Negated reparameterized soft policy objective.

    Opponent predictions are sampled from the model and treated as
    constants; the gradient reaches the policy both through its action
    (via the frozen critic) and through its log-density.
    """
    spec, hyper, i = agent.spec, agent.hyper, agent.index
    low, high = spec.action_low, spec.action_high
    if opponent_stats is None:
        mu_o, sig_o = agent.opponent_model.forward_values(batch.obs[i])
    else:
        mu_o, sig_o = opponent_stats
    opp = sample_squashed(mu_o, sig_o, rng.standard_normal(mu_o.shape), low, high)

    pol_in = np.concatenate([batch.obs[i], opp.action], axis=1)
    mu_p, sig_p = agent.policy.forward(pol_in, trainable=True, grad_out=grad_out)
    action, log_pi = squashed_sample_graph(mu_p, sig_p, rng.standard_normal(mu_p.value.shape), low, high)

    parts: list = [None] * spec.n_agents
    parts[i] = action
    for j, a, b in agent._layout:
        parts[j] = opp.action[:, a:b]
    q_in = T.concat_cols([_joint_columns(batch.obs)] + parts)
    q = T.row_sum(agent.critic.forward(q_in, trainable=False))

    return T.mean_all(T.sub(T.scale(log_pi, hyper.alpha), q))


def critic_loss(agent, batch, agents, rng) -> float:
    """Scalar critic loss (agents is accepted for interface symmetry)."""
    with Tape():
        return float(critic_loss_graph(agent, batch, rng).value)


def policy_loss(agent, batch, rng) -> float:
    with Tape():
        return float(policy_loss_graph(agent, batch, rng).value)


def opponent_loss(agent, batch, agents, rng) -> float:
    with Tape():
        loss, _, _ = opponent_loss_graph(agent, batch, agents, rng)
        return float(loss.value)


def update_agent(agent: AgentNets, batch, agents, rng: np.random.Generator) -> UpdateReport:
    """One Adam step on critic, policy and opponent model (in that order),
    then one EMA step on the target critic.

    The opponent objective reads neither this agent's critic nor its
    policy, so its graph is built right after the critic step to share
    the opponent-model forward pass with the policy loss; its Adam step
    is still applied after the policy's. A non-finite loss aborts before
    any parameter is touched by that step.
    """
    hyper = agent.hyper

    agent._critic_grad.fill(0.0)
    with Tape() as tape:
        c_loss = critic_loss_graph(agent, batch, rng, grad_out=agent._critic_grad)
        check_finite_loss(tape, c_loss)
        tape.backward(c_loss)
    adam_step(agent.critic.params, agent._critic_grad, agent.critic_opt, "descend")

    agent._opponent_grad.fill(0.0)
    with Tape() as tape:
        o_loss, mu_o, sig_o = opponent_loss_graph(agent, batch, agents, rng, grad_out=agent._opponent_grad)
        check_finite_loss(tape, o_loss)
        tape.backward(o_loss)

    agent._policy_grad.fill(0.0)
    with Tape() as tape:
        p_loss = policy_loss_graph(agent, batch, rng, opponent_stats=(mu_o, sig_o),
                                   grad_out=agent._policy_grad)
        check_finite_loss(tape, p_loss)
        tape.backward(p_loss)
    adam_step(agent.policy.params, agent._policy_grad, agent.policy_opt, "descend")
    adam_step(agent.opponent_model.params, agent._opponent_grad, agent.opponent_opt, "descend")

    ema_update(agent.target_critic.params, agent.critic.params, hyper.tau)

    return UpdateReport(
        critic_loss=float(c_loss.value),
        policy_loss=float(p_loss.value),
        opponent_loss=float(o_loss.value),
        grad_norm_critic=float(np.linalg.norm(agent._critic_grad)),
        grad_norm_policy=float(np.linalg.norm(agent._policy_grad)),
        grad_norm_opponent=float(np.linalg.norm(agent._opponent_grad)),
    )


def opponent_prediction_error(
    agent: "AgentNets | Executor",
    obs_rows: np.ndarray,
    executed_opponent_actions: np.ndarray,
) -> float:
    """Mean squared Euclidean error of the model's mode prediction against
    the opponents' executed actions, averaged over steps and opponents.

    `executed_opponent_actions` rows are the opponents' actions in this
    agent's opponent layout (ascending index, self skipped).
    """
    if isinstance(agent, AgentNets):
        executor = agent.executor()
        layout = agent._layout
    else:
        executor = agent
        layout = opponent_layout(agent.spec, agent.index)
    obs_rows = np.asarray(obs_rows, dtype=np.float64)
    executed = np.asarray(executed_opponent_actions, dtype=np.float64)
    if obs_rows.ndim != 2 or obs_rows.shape[0] == 0:
        raise ValueError("need at least one evaluation step")
    if executed.shape != (obs_rows.shape[0], executor.opponent_dim):
        raise ValueError("executed opponent actions do not match the opponent layout")

    mu, _ = executor.opponent_model.forward_values(obs_rows)
    pred = mean_action(mu, executor.spec.action_low, executor.spec.action_high)
    total = 0.0
    for _, a, b in layout:
        diff = pred[:, a:b] - executed[:, a:b]
        total += float((diff * diff).sum())
    return total / (obs_rows.shape[0] * len(layout))

"""Actor-critic agent over the discretized action space.

One row-stochastic actor and two categorical value critics, each with a
slowly tracking target copy. Learning targets come from the target
critics merged conservatively (pointwise CDF maximum) and pushed through
the distributional backup; critic updates are cross-entropy against those
targets weighted by the likelihood of the replayed action under the
current policy; the actor ascends the cumulative-distribution objective
through the first critic, plus an entropy term that only activates when
the critic's own distribution says the state deserves more exploration.

The training loop is single threaded and fully deterministic for a fixed
seed. Rollout workers may hold read-only parameter snapshots; the
optimizer is the sole mutator.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .action_space import (
    ActionDistribution,
    ActionSample,
    ActionSpaceSpec,
    argmax_action,
    entropy_rows,
    max_entropy,
    sample,
)
from .approximator import Adam, Mlp, MlpSpec, polyak_update
from .errors import InvalidInputError, PoisonError
from .value_dist import ValueSupport, cdf_max_merge_batch, project_batch

NETWORK_NAMES = (
    "actor",
    "critic1",
    "critic2",
    "actor_target",
    "critic1_target",
    "critic2_target",
)


@dataclass(frozen=True)
class Transition:
    """One replay record. Rewards are stored post-normalization, so their
    magnitude never exceeds 1."""

    x: np.ndarray
    action: ActionSample
    r: float
    x_next: np.ndarray
    done: bool


class ReplayBuffer:
    """Fixed-capacity ring of transitions with uniform sampling."""

    def __init__(self, capacity: int, state_dim: int, action_dims: int, m_atoms: int):
        if capacity < 1:
            raise InvalidInputError("capacity must be positive")
        self.capacity = capacity
        self.states = np.zeros((capacity, state_dim), dtype=np.float64)
        self.indices = np.zeros((capacity, action_dims), dtype=np.int64)
        self.rewards = np.zeros(capacity, dtype=np.float64)
        self.next_states = np.zeros((capacity, state_dim), dtype=np.float64)
        self.dones = np.zeros(capacity, dtype=bool)
        self.action_dists = np.zeros((capacity, action_dims, m_atoms), dtype=np.float64)
        self.insert_count = 0

    def __len__(self) -> int:
        return min(self.insert_count, self.capacity)

    def add(
        self,
        x: np.ndarray,
        action_indices,
        r: float,
        x_next: np.ndarray,
        done: bool,
        action_dist: np.ndarray | None = None,
    ):
        if abs(r) > 1.0 + 1e-12:
            raise InvalidInputError(f"reward {r} not normalized into [-1, 1]")
        slot = self.insert_count % self.capacity
        self.states[slot] = x
        self.indices[slot] = action_indices
        self.rewards[slot] = r
        self.next_states[slot] = x_next
        self.dones[slot] = done
        if action_dist is not None:
            self.action_dists[slot] = action_dist
        self.insert_count += 1

    def sample(self, batch_size: int, rng: np.random.Generator) -> dict:
        size = len(self)
        if size == 0:
            raise InvalidInputError("cannot sample from an empty buffer")
        rows = rng.integers(0, size, size=batch_size)
        return {
            "x": self.states[rows],
            "indices": self.indices[rows],
            "r": self.rewards[rows],
            "x_next": self.next_states[rows],
            "done": self.dones[rows],
            "action_dists": self.action_dists[rows],
        }


@dataclass(frozen=True)
class AgentConfig:
    support: ValueSupport
    actions: ActionSpaceSpec
    state_dim: int
    gamma: float = 0.99
    batch_size: int = 128
    lr_actor: float = 1e-3
    lr_critic: float = 1e-3
    entropy_coef: float = 0.5  # weight of the gated entropy ascent term
    entropy_scale: float = 0.5  # atom-indexed threshold scale in (0, 1]
    smoothing: float = 1e-4  # floor inside log(1 - rho) terms
    tau: float = 0.005
    train_frequency: int = 1
    warmup_steps: int = 300
    buffer_capacity: int = 100_000
    hidden: tuple[int, ...] = (64, 64)
    seed: int = 0
    eval_mode: str = "argmax"  # or "sample"
    # Ablation / variant switches.
    single_critic: bool = False
    raw_weight: bool = False
    merged_policy_loss: bool = False
    stored_action_dist: bool = False
    normal_exploration: bool = False
    explore_noise: float = 0.1  # uniform-resample rate in normal_exploration mode
    normal_actor: bool = False
    actor_noise: float = 0.2  # collection noise scale in normal_actor mode
    bootstrap_terminal: bool = False  # keep gamma on done transitions

    def __post_init__(self):
        if not (0.0 < self.gamma < 1.0):
            raise InvalidInputError(f"gamma {self.gamma} outside (0, 1)")
        if not (0.0 < self.entropy_scale <= 1.0):
            raise InvalidInputError("entropy scale must lie in (0, 1]")
        if self.entropy_coef < 0.0:
            raise InvalidInputError("entropy coefficient must be >= 0")
        if self.batch_size < 1:
            raise InvalidInputError("batch size must be >= 1")
        if not (0.0 <= self.smoothing < 1.0):
            raise InvalidInputError("smoothing must lie in [0, 1)")
        if self.eval_mode not in ("argmax", "sample"):
            raise InvalidInputError(f"unknown eval mode {self.eval_mode!r}")


@dataclass
class TrainStepMetrics:
    skipped: bool
    critic_loss_1: float = 0.0
    critic_loss_2: float = 0.0
    actor_objective: float = 0.0
    mean_entropy: float = 0.0
    gate_rate: float = 0.0
    mean_target_expectation: float = 0.0


def _row_softmax(flat_logits: np.ndarray, n: int, m: int) -> np.ndarray:
    """(B, n*m) actor head to (B, n, m) row-stochastic matrices."""
    z = flat_logits.reshape(-1, n, m)
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def _softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def _row_softmax_backward(probs: np.ndarray, grad_probs: np.ndarray) -> np.ndarray:
    """Jacobian-vector product of a per-row softmax: probs and grad_probs
    are (B, n, m); returns gradient in the row logits."""
    inner = (grad_probs * probs).sum(axis=-1, keepdims=True)
    return probs * (grad_probs - inner)


def _entropy_backward(probs: np.ndarray) -> np.ndarray:
    """Gradient of summed row entropies in the row logits, (B, n, m)."""
    with np.errstate(divide="ignore", invalid="ignore"):
        logp = np.where(probs > 0.0, np.log(probs), 0.0)
    row_h = -(probs * logp).sum(axis=-1, keepdims=True)
    return -probs * (logp + row_h)


class TwinCriticAgent:
    """Discrete actor with two categorical critics and target tracking."""

    def __init__(self, config: AgentConfig):
        self.config = config
        n, m = config.actions.n_dims, config.actions.m_atoms
        self.n, self.m = n, m
        self.n_value_atoms = config.support.n_atoms
        self.max_entropy = max_entropy(config.actions)

        ss = np.random.SeedSequence(config.seed)
        actor_seed, c1_seed, c2_seed = (int(s.generate_state(1)[0]) for s in ss.spawn(3))
        actor_out = n if config.normal_actor else n * m
        # A zero-scaled output head makes the initial policy uniform (or
        # centered, for the continuous variant), so early data is diverse.
        self.actor_spec = MlpSpec(
            config.state_dim, config.hidden, actor_out, "relu", actor_seed, out_scale=0.0
        )
        critic_in = config.state_dim + n * m
        self.critic_specs = (
            MlpSpec(critic_in, config.hidden, self.n_value_atoms, "relu", c1_seed),
            MlpSpec(critic_in, config.hidden, self.n_value_atoms, "relu", c2_seed),
        )
        self.actor_net = Mlp(self.actor_spec)
        self.critic_nets = (Mlp(self.critic_specs[0]), Mlp(self.critic_specs[1]))

        self.params: dict[str, np.ndarray] = {}
        self.params["actor"] = self.actor_net.init_params()
        self.params["critic1"] = self.critic_nets[0].init_params()
        self.params["critic2"] = self.critic_nets[1].init_params()
        for name in ("actor", "critic1", "critic2"):
            self.params[name + "_target"] = self.params[name].copy()

        self.actor_opt = Adam(self.actor_net.n_params, lr=config.lr_actor)
        self.critic_opts = (
            Adam(self.critic_nets[0].n_params, lr=config.lr_critic),
            Adam(self.critic_nets[1].n_params, lr=config.lr_critic),
        )
        self.buffer = ReplayBuffer(
            config.buffer_capacity, config.state_dim, n, m
        )

    # ------------------------------------------------------------------
    # Policy evaluation helpers

    def _policy_probs(self, actor_params: np.ndarray, states: np.ndarray) -> np.ndarray:
        """(B, state_dim) -> (B, n, m) action distribution matrices."""
        out = self.actor_net.forward(actor_params, states)
        if self.config.normal_actor:
            return self._encode_continuous(self._squash(out))
        return _row_softmax(out, self.n, self.m)

    def _squash(self, raw: np.ndarray) -> np.ndarray:
        """Map raw actor outputs to actuator values inside the bounds."""
        lo = np.asarray(self.config.actions.low)
        hi = np.asarray(self.config.actions.high)
        return (lo + hi) / 2.0 + (hi - lo) / 2.0 * np.tanh(raw)

    def _encode_continuous(self, actions: np.ndarray) -> np.ndarray:
        """Continuous actions (B, n) to soft two-atom rows (B, n, m)."""
        lo = np.asarray(self.config.actions.low)
        hi = np.asarray(self.config.actions.high)
        pos = (actions - lo) / (hi - lo) * (self.m - 1)
        pos = np.clip(pos, 0.0, self.m - 1.0)
        lower = np.floor(pos).astype(np.int64)
        upper = np.minimum(lower + 1, self.m - 1)
        frac = pos - lower
        rows = np.zeros((*actions.shape, self.m), dtype=np.float64)
        b = np.arange(actions.shape[0])[:, None]
        d = np.arange(self.n)[None, :]
        rows[b, d, lower] += 1.0 - frac
        rows[b, d, upper] += frac
        return rows

    def _critic_logits(
        self, net: Mlp, params: np.ndarray, states: np.ndarray, adist: np.ndarray
    ) -> np.ndarray:
        inputs = np.concatenate([states, adist.reshape(states.shape[0], -1)], axis=1)
        return net.forward(params, inputs)

    # ------------------------------------------------------------------
    # Acting

    def act(
        self, x: np.ndarray, mode: str, rng: np.random.Generator
    ) -> tuple[ActionSample, ActionDistribution]:
        """Produce an action for one state. Training mode samples each
        dimension from its row (optionally with fixed exploration noise);
        evaluation mode takes the per-row argmax."""
        if mode not in ("train", "eval"):
            raise InvalidInputError(f"unknown act mode {mode!r}")
        cfg = self.config
        if cfg.normal_actor:
            raw = self.actor_net.forward(self.params["actor"], np.atleast_2d(x))
            action = self._squash(raw)[0]
            if mode == "train":
                lo = np.asarray(cfg.actions.low)
                hi = np.asarray(cfg.actions.high)
                action = action + cfg.actor_noise * (hi - lo) / 2.0 * rng.standard_normal(
                    self.n
                )
                action = np.clip(action, lo, hi)
            adist = ActionDistribution(
                cfg.actions, self._encode_continuous(action[None, :])[0]
            )
            return self._nearest_atoms(action), adist
        probs = self._policy_probs(self.params["actor"], np.atleast_2d(x))[0]
        adist = ActionDistribution(cfg.actions, probs)
        if mode == "eval" and cfg.eval_mode == "argmax":
            return argmax_action(adist), adist
        asample, _ = sample(adist, rng)
        if (
            mode == "train"
            and cfg.normal_exploration
            and rng.random() < cfg.explore_noise
        ):
            noisy = rng.integers(0, self.m, size=self.n)
            asample = ActionSample(cfg.actions, tuple(int(i) for i in noisy))
        return asample, adist

    def _nearest_atoms(self, action: np.ndarray) -> ActionSample:
        lo = np.asarray(self.config.actions.low)
        hi = np.asarray(self.config.actions.high)
        pos = (action - lo) / (hi - lo) * (self.m - 1)
        idx = np.clip(np.rint(pos), 0, self.m - 1).astype(np.int64)
        return ActionSample(self.config.actions, tuple(int(i) for i in idx))

    def observe(
        self,
        x: np.ndarray,
        action: ActionSample,
        r: float,
        x_next: np.ndarray,
        done: bool,
        action_dist: ActionDistribution | None = None,
    ):
        self.buffer.add(
            x,
            action.indices,
            r,
            x_next,
            done,
            None if action_dist is None else action_dist.probs,
        )

    # ------------------------------------------------------------------
    # Target construction

    def build_target(self, batch: dict) -> np.ndarray:
        """Per-sample target distributions (B, N). Pure forward math on
        the target networks; no parameter or optimizer state is touched."""
        cfg = self.config
        x_next = batch["x_next"]
        adist_next = self._policy_probs(self.params["actor_target"], x_next)
        z1 = _softmax(
            self._critic_logits(
                self.critic_nets[0], self.params["critic1_target"], x_next, adist_next
            )
        )
        if cfg.single_critic:
            merged = z1
        else:
            z2 = _softmax(
                self._critic_logits(
                    self.critic_nets[1], self.params["critic2_target"], x_next, adist_next
                )
            )
            merged = cdf_max_merge_batch(z1, z2)
        if cfg.bootstrap_terminal:
            gammas = np.full(len(batch["r"]), cfg.gamma)
        else:
            gammas = np.where(batch["done"], 0.0, cfg.gamma)
        return project_batch(merged, batch["r"], gammas, cfg.support)

    # ------------------------------------------------------------------
    # Critic learning

    def _action_weights(self, adist: np.ndarray, indices: np.ndarray) -> np.ndarray:
        """Likelihood of each replayed action under the current policy,
        accumulated in the log domain. By default each batch is scaled by
        its own maximum so the weights stay usable when n*m is large; the
        raw variant keeps the unnormalized products."""
        b = np.arange(adist.shape[0])[:, None]
        d = np.arange(self.n)[None, :]
        picked = adist[b, d, indices]
        log_w = np.log(np.maximum(picked, 1e-300)).sum(axis=1)
        if self.config.raw_weight:
            return np.exp(log_w)
        return np.exp(log_w - log_w.max())

    def critic_update(self, batch: dict, targets: np.ndarray) -> tuple[float, float]:
        """Step both critics toward the targets with weighted cross-entropy.
        Returns the two weighted mean losses."""
        cfg = self.config
        states = batch["x"]
        bsz = states.shape[0]
        if cfg.normal_actor:
            adist = self._policy_probs(self.params["actor"], states)
            weights = np.ones(bsz)
        elif cfg.stored_action_dist:
            adist = batch["action_dists"]
            weights = self._action_weights(adist, batch["indices"])
        else:
            adist = self._policy_probs(self.params["actor"], states)
            weights = self._action_weights(adist, batch["indices"])

        inputs = np.concatenate([states, adist.reshape(bsz, -1)], axis=1)
        losses = []
        active = 1 if cfg.single_critic else 2
        for ci in range(active):
            net = self.critic_nets[ci]
            name = f"critic{ci + 1}"
            logits = net.forward(self.params[name], inputs)
            shifted = logits - logits.max(axis=1, keepdims=True)
            log_probs = shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))
            ce = -(targets * log_probs).sum(axis=1)
            loss = float(np.mean(weights * ce))
            if not np.isfinite(loss):
                raise PoisonError(f"non-finite critic loss {loss}")
            dlogits = weights[:, None] * (np.exp(log_probs) - targets) / bsz
            gparams, _ = net.backward(self.params[name], inputs, dlogits)
            self.params[name] = self.critic_opts[ci].step(self.params[name], gparams)
            losses.append(loss)
        if cfg.single_critic:
            losses.append(0.0)
        return losses[0], losses[1]

    # ------------------------------------------------------------------
    # Policy learning

    def _cumulative_objective(
        self, critic_probs_shifted_num: np.ndarray
    ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Shared math for the actor objective.

        Input is exp(logits - max) per sample (unnormalized probabilities
        e_i). Returns (per-sample objective J, dJ/dlogits, rho) where
        J = sum over the first N-1 atoms of log(1 - (1 - eps) * rho_k),
        with the smoothing floor folded in. Head and tail sums are both
        accumulated directly so no catastrophic cancellation occurs where
        rho approaches 1.
        """
        eps = self.config.smoothing
        e = critic_probs_shifted_num
        total = e.sum(axis=1, keepdims=True)
        head = np.cumsum(e, axis=1)
        tail = np.cumsum(e[:, ::-1], axis=1)[:, ::-1]
        # tail[k] includes atom k itself; the complement of the head up to
        # and including k is the tail starting at k+1.
        tail_after = np.concatenate(
            [tail[:, 1:], np.zeros((e.shape[0], 1))], axis=1
        )
        damped = eps * head + tail_after  # (B, N), index k = atoms 1..k damped
        ratios = damped[:, :-1] / total  # drop k = N (constant log eps term)
        objective = np.log(ratios).sum(axis=1)

        inv = 1.0 / damped[:, :-1]  # 1 / D'_k for k = 1..N-1
        suffix = np.cumsum(inv[:, ::-1], axis=1)[:, ::-1]
        suffix = np.concatenate([suffix, np.zeros((e.shape[0], 1))], axis=1)
        prefix = np.concatenate(
            [np.zeros((e.shape[0], 1)), np.cumsum(inv, axis=1)], axis=1
        )
        w = e / total
        n_terms = e.shape[1] - 1
        dlogits = e * (eps * suffix + prefix) - n_terms * w
        rho = head / total
        return objective, dlogits, rho

    def policy_update(self, batch: dict) -> tuple[float, float, float]:
        """Ascend the cumulative-distribution objective through the first
        critic (critics frozen), adding the gated entropy term. Returns
        (mean objective, mean action entropy, gate rate)."""
        cfg = self.config
        states = batch["x"]
        bsz = states.shape[0]

        actor_out = self.actor_net.forward(self.params["actor"], states)
        if cfg.normal_actor:
            actions = self._squash(actor_out)
            adist = self._encode_continuous(actions)
        else:
            adist = _row_softmax(actor_out, self.n, self.m)
        inputs = np.concatenate([states, adist.reshape(bsz, -1)], axis=1)

        logits1 = self.critic_nets[0].forward(self.params["critic1"], inputs)
        e1 = np.exp(logits1 - logits1.max(axis=1, keepdims=True))
        if cfg.merged_policy_loss and not cfg.single_critic:
            objective, dlogits1, dlogits2, rho = self._merged_objective(
                states, adist, logits1
            )
            _, dinputs1 = self.critic_nets[0].backward(
                self.params["critic1"], inputs, dlogits1
            )
            _, dinputs2 = self.critic_nets[1].backward(
                self.params["critic2"], inputs, dlogits2
            )
            dinputs = dinputs1 + dinputs2
        else:
            objective, dlogits, rho = self._cumulative_objective(e1)
            _, dinputs = self.critic_nets[0].backward(
                self.params["critic1"], inputs, dlogits
            )

        grad_adist = dinputs[:, self.config.state_dim :].reshape(bsz, self.n, self.m)

        entropies = entropy_rows(adist)
        h_ratio = entropies / self.max_entropy
        use_entropy = (
            cfg.entropy_coef > 0.0
            and not cfg.normal_exploration
            and not cfg.normal_actor
        )
        gates = (
            self._entropy_gates(rho, h_ratio) if use_entropy else np.zeros(bsz)
        )

        if cfg.normal_actor:
            # Route the objective gradient through the two-cell
            # interpolation back to the continuous action head.
            lo = np.asarray(self.config.actions.low)
            hi = np.asarray(self.config.actions.high)
            pos = (actions - lo) / (hi - lo) * (self.m - 1)
            pos = np.clip(pos, 0.0, self.m - 1.0)
            lower = np.floor(pos).astype(np.int64)
            upper = np.minimum(lower + 1, self.m - 1)
            b = np.arange(bsz)[:, None]
            d = np.arange(self.n)[None, :]
            datoms = (hi - lo) / (self.m - 1)
            dact = (grad_adist[b, d, upper] - grad_adist[b, d, lower]) / datoms
            draw = dact * (hi - lo) / 2.0 * (1.0 - np.tanh(actor_out) ** 2)
            total_grad_out = -draw / bsz
        else:
            grad_logits = _row_softmax_backward(adist, grad_adist)
            if use_entropy:
                ent_grad = _entropy_backward(adist) / self.max_entropy
                grad_logits = grad_logits + (
                    cfg.entropy_coef * gates[:, None, None]
                ) * ent_grad
            total_grad_out = -grad_logits.reshape(bsz, -1) / bsz

        gparams, _ = self.actor_net.backward(
            self.params["actor"], states, total_grad_out
        )
        mean_objective = float(np.mean(objective))
        if not np.isfinite(mean_objective):
            raise PoisonError("non-finite actor objective")
        self.params["actor"] = self.actor_opt.step(self.params["actor"], gparams)
        return mean_objective, float(np.mean(entropies)), float(np.mean(gates))

    def _merged_objective(self, states, adist, logits1):
        """Variant objective using the conservatively merged distribution
        of both critics; gradients route into each critic's logits by
        whichever CDF attains the pointwise maximum."""
        eps = self.config.smoothing
        bsz = states.shape[0]
        inputs = np.concatenate([states, adist.reshape(bsz, -1)], axis=1)
        logits2 = self.critic_nets[1].forward(self.params["critic2"], inputs)
        p1 = _softmax(logits1)
        p2 = _softmax(logits2)
        c1 = np.cumsum(p1, axis=1)
        c2 = np.cumsum(p2, axis=1)
        rho = np.maximum(c1, c2)
        damp = 1.0 - (1.0 - eps) * rho
        damp = np.maximum(damp, max(eps / 2.0, 1e-300))
        objective = np.log(damp[:, :-1]).sum(axis=1)
        dcdf = np.zeros_like(rho)
        dcdf[:, :-1] = -(1.0 - eps) / damp[:, :-1]
        win1 = c1 >= c2
        d_c1 = np.where(win1, dcdf, 0.0)
        d_c2 = np.where(~win1, dcdf, 0.0)
        # d objective / d p_i = sum over k >= i of d objective / d cdf_k.
        dp1 = np.cumsum(d_c1[:, ::-1], axis=1)[:, ::-1]
        dp2 = np.cumsum(d_c2[:, ::-1], axis=1)[:, ::-1]
        dlogits1 = p1 * (dp1 - (dp1 * p1).sum(axis=1, keepdims=True))
        dlogits2 = p2 * (dp2 - (dp2 * p2).sum(axis=1, keepdims=True))
        return objective, dlogits1, dlogits2, rho

    def _entropy_gates(self, rho: np.ndarray, h_ratio: np.ndarray) -> np.ndarray:
        """Per-sample gate bit: 1 when the atom-indexed confidence
        threshold max_k ((N-k)/(N-1)) * h * rho_k reaches the normalized
        action entropy."""
        n_atoms = rho.shape[1]
        factors = (n_atoms - 1 - np.arange(n_atoms)) / (n_atoms - 1)
        thresholds = (self.config.entropy_scale * factors[None, :] * rho).max(axis=1)
        return (thresholds >= h_ratio).astype(np.float64)

    # ------------------------------------------------------------------
    # Full step

    def train_step(self, rng: np.random.Generator) -> TrainStepMetrics:
        """Sample a batch, refresh both critics, step the actor, and let
        the target networks drift. A no-op until the buffer has warmed up."""
        cfg = self.config
        if len(self.buffer) < cfg.warmup_steps:
            return TrainStepMetrics(skipped=True)
        batch = self.buffer.sample(cfg.batch_size, rng)
        targets = self.build_target(batch)
        loss1, loss2 = self.critic_update(batch, targets)
        objective, mean_entropy, gate_rate = self.policy_update(batch)
        for name in ("actor", "critic1", "critic2"):
            self.params[name + "_target"] = polyak_update(
                self.params[name + "_target"], self.params[name], cfg.tau
            )
        mean_target_expectation = float(
            np.mean(targets @ cfg.support.atoms)
        )
        return TrainStepMetrics(
            skipped=False,
            critic_loss_1=loss1,
            critic_loss_2=loss2,
            actor_objective=objective,
            mean_entropy=mean_entropy,
            gate_rate=gate_rate,
            mean_target_expectation=mean_target_expectation,
        )

    # ------------------------------------------------------------------
    # Checkpointing

    def checkpoint_meta(self) -> dict:
        cfg = self.config
        return {
            "kind": "normal_actor" if cfg.normal_actor else "discrete_twin",
            "state_dim": cfg.state_dim,
            "support": [cfg.support.v_min, cfg.support.v_max, cfg.support.n_atoms],
            "actions": {
                "n_dims": cfg.actions.n_dims,
                "m_atoms": cfg.actions.m_atoms,
                "low": list(cfg.actions.low),
                "high": list(cfg.actions.high),
            },
            "hidden": list(cfg.hidden),
            "network_names": list(NETWORK_NAMES),
        }

    def checkpoint_arrays(self) -> dict[str, np.ndarray]:
        arrays = {name: self.params[name] for name in NETWORK_NAMES}
        for label, opt in (
            ("actor", self.actor_opt),
            ("critic1", self.critic_opts[0]),
            ("critic2", self.critic_opts[1]),
        ):
            for key, arr in opt.state_arrays().items():
                arrays[f"opt_{label}_{key}"] = arr
        return arrays

    def load_checkpoint_arrays(self, arrays: dict[str, np.ndarray]):
        for name in NETWORK_NAMES:
            if arrays[name].shape != self.params[name].shape:
                raise InvalidInputError(f"checkpoint array {name} has wrong shape")
            self.params[name] = np.asarray(arrays[name], dtype=np.float64).copy()
        for label, opt in (
            ("actor", self.actor_opt),
            ("critic1", self.critic_opts[0]),
            ("critic2", self.critic_opts[1]),
        ):
            opt.load_state_arrays(
                {key: arrays[f"opt_{label}_{key}"] for key in ("m", "v", "t")}
            )

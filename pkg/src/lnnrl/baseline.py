"""Plain MLP action scorer trained with the identical DQN loop.

Scores all ten verb-noun commands from the raw 26 truth values through one
rectified hidden layer. Exists as the convergence-comparison baseline: same
replay, targets, optimizer, and schedules as the logic-network agent, just a
black-box scorer in the middle.
"""

from __future__ import annotations

import random

import numpy as np

from .agent import Candidate, ReplayBuffer, TrainerConfig, Transition
from .factextract import PROPOSITION_NAMES, PropositionSet
from .lexicon import LexiconTable
from .optim import AdamOptimizer
from .rng import substream
from .worldsim import ALL_ACTIONS, Action

N_INPUTS = len(PROPOSITION_NAMES)   # 26
N_ACTIONS = len(ALL_ACTIONS)        # 10
N_HIDDEN = 64


class MlpScorer:
    """26 -> 64 (ReLU) -> 10, with hand-rolled backprop."""

    def __init__(self, seed: int = 0, n_hidden: int = N_HIDDEN):
        rng = np.random.default_rng(seed)
        self.w1 = rng.normal(0.0, np.sqrt(2.0 / N_INPUTS), size=(N_INPUTS, n_hidden))
        self.b1 = np.zeros(n_hidden)
        self.w2 = rng.normal(0.0, np.sqrt(1.0 / n_hidden), size=(n_hidden, N_ACTIONS))
        self.b2 = np.zeros(N_ACTIONS)

    def parameters(self) -> dict[str, np.ndarray]:
        return {"w1": self.w1, "b1": self.b1, "w2": self.w2, "b2": self.b2}

    def forward(self, x: np.ndarray) -> np.ndarray:
        hidden = np.maximum(self.w1.T @ x + self.b1, 0.0)
        return self.w2.T @ hidden + self.b2

    def gradients(self, x: np.ndarray, action_index: int, upstream: float) -> dict[str, np.ndarray]:
        """d(upstream * q[action_index])/d(params)."""
        pre = self.w1.T @ x + self.b1
        hidden = np.maximum(pre, 0.0)
        g_hidden = upstream * self.w2[:, action_index]
        g_pre = g_hidden * (pre > 0.0)
        grads = {
            "b1": g_pre,
            "w1": np.outer(x, g_pre),
            "b2": np.zeros(N_ACTIONS),
            "w2": np.zeros_like(self.w2),
        }
        grads["b2"][action_index] = upstream
        grads["w2"][:, action_index] = upstream * hidden
        return grads

    def clone(self) -> "MlpScorer":
        twin = MlpScorer.__new__(MlpScorer)
        twin.w1 = self.w1.copy()
        twin.b1 = self.b1.copy()
        twin.w2 = self.w2.copy()
        twin.b2 = self.b2.copy()
        return twin

    def load_parameters_from(self, other: "MlpScorer") -> None:
        self.w1[...] = other.w1
        self.b1[...] = other.b1
        self.w2[...] = other.w2
        self.b2[...] = other.b2

    # ------------------------------------------------------------ checkpoints

    def save(self, path) -> None:
        lines = ["mlp-checkpoint v1", f"shape {N_INPUTS} {self.w1.shape[1]} {N_ACTIONS}"]
        for name in ("w1", "b1", "w2", "b2"):
            arr = getattr(self, name)
            lines.append(f"{name} " + " ".join(format(v, ".17g") for v in arr.ravel()))
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("\n".join(lines) + "\n")

    @classmethod
    def load(cls, path) -> "MlpScorer":
        with open(path, encoding="utf-8") as fh:
            lines = fh.read().splitlines()
        if not lines or lines[0] != "mlp-checkpoint v1":
            raise ValueError(f"{path}: not an MLP checkpoint")
        _, n_in, n_hidden, n_out = lines[1].split()
        scorer = cls(seed=0, n_hidden=int(n_hidden))
        shapes = {
            "w1": (int(n_in), int(n_hidden)),
            "b1": (int(n_hidden),),
            "w2": (int(n_hidden), int(n_out)),
            "b2": (int(n_out),),
        }
        for line in lines[2:]:
            name, _, rest = line.partition(" ")
            values = np.array([float(t) for t in rest.split()])
            setattr(scorer, name, values.reshape(shapes[name]))
        return scorer


class MlpAgent:
    """Same trainer contract as the logic-network agent, over all 10 actions."""

    def __init__(self, config: TrainerConfig, lexicon: LexiconTable, run_seed: int = 0):
        self.config = config
        self.lexicon = lexicon
        self.scorer = MlpScorer(seed=run_seed)
        self.target = self.scorer.clone()
        self.optimizer = AdamOptimizer(learning_rate=config.learning_rate)
        self.buffer = ReplayBuffer(config.replay_capacity, config.priority_fraction)
        self.replay_rng = substream("replay-sampling", "mlp", run_seed)
        self.env_steps = 0
        self.optimizer_steps = 0

    def choose(self, props: PropositionSet, candidates: list[Candidate],
               epsilon: float, rng: random.Random) -> tuple[Action, list[float]]:
        q = self.scorer.forward(props.as_vector())
        if epsilon > 0.0 and rng.random() < epsilon:
            return ALL_ACTIONS[rng.randrange(N_ACTIONS)], list(q)
        return ALL_ACTIONS[int(np.argmax(q))], list(q)

    def observe(self, transition: Transition) -> None:
        self.buffer.push(transition)
        self.env_steps += 1
        if self.env_steps % self.config.update_period == 0:
            self.train_step()

    def train_step(self, rng: random.Random | None = None) -> float:
        if len(self.buffer) == 0:
            raise ValueError("train_step requires a non-empty replay buffer")
        rng = rng or self.replay_rng
        batch = self.buffer.sample(self.config.batch_size, rng)

        acc: dict[str, np.ndarray] = {}
        total_loss = 0.0
        for transition in batch:
            if transition.terminal:
                target = float(np.clip(transition.reward, 0.0, 1.0))
            else:
                best = float(np.max(self.target.forward(transition.next_props_vec)))
                target = float(np.clip(transition.reward + self.config.gamma * best, 0.0, 1.0))
            q = float(self.scorer.forward(transition.props_vec)[transition.action_index])
            error = q - target
            total_loss += error * error
            grads = self.scorer.gradients(
                transition.props_vec, transition.action_index, 2.0 * error / len(batch)
            )
            for name, g in grads.items():
                acc[name] = acc[name] + g if name in acc else g

        self.optimizer.step(self.scorer.parameters(), acc)
        self.optimizer_steps += 1
        if self.optimizer_steps % self.config.target_update_period == 0:
            self.target.load_parameters_from(self.scorer)
        return total_loss / len(batch)

    def parameter_checksum(self) -> float:
        return float(sum(np.sum(np.abs(a)) for a in self.scorer.parameters().values()))

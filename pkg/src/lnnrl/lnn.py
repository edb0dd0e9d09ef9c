"""Differentiable weighted real-valued logic networks.

A network is two layers over a fixed fact vector: a bank of weighted AND
gates and a single weighted OR root. Node semantics are the clamped weighted
forms

    AND:  clamp01( b - sum_i w_i * (1 - x_i) )
    OR:   clamp01( 1 - b + sum_i w_i * x_i )

with all weights and biases nonnegative. Negation is materialized in the
input layer (each fact arrives with its complement), so there are no
trainable NOT nodes. With unit weights and biases these reduce exactly to
classical conjunction/disjunction on boolean inputs.

Gradients use a pass-through derivative of 1 strictly inside (0, 1) and 0 at
or beyond the clamp, chained through OR -> AND.

New AND gates can be spliced in during training, seeded from a fact vector
(weight 1 on every literal that is true at threshold alpha). Conjunctive
rules are read back out by keeping gates and literals whose weights clear a
threshold.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

DEFAULT_ALPHA = 0.75
DEFAULT_GATE_CAP = 16
DEFAULT_RULE_WEIGHT_THRESHOLD = 0.55

#: OR-root bias for freshly built networks. Kept above 1 so a single fully
#: matching AND gate with a unit OR weight activates strictly below the upper
#: clamp and stays trainable / comparable instead of saturating at 1.0.
DEFAULT_OR_BIAS = 1.25

AND = "and"
OR = "or"


class TruthValue(enum.Enum):
    TRUE = "true"
    FALSE = "false"
    UNKNOWN = "unknown"


@dataclass(frozen=True)
class TruthConfig:
    """Threshold semantics: values >= alpha are True, <= 1 - alpha are False."""

    alpha: float = DEFAULT_ALPHA

    def __post_init__(self) -> None:
        if not 0.5 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must lie in [0.5, 1.0], got {self.alpha}")


def classify_truth(value: float, config: TruthConfig) -> TruthValue:
    if not 0.0 <= value <= 1.0:
        raise ValueError(f"truth values live in [0, 1], got {value}")
    if value >= config.alpha:
        return TruthValue.TRUE
    if value <= 1.0 - config.alpha:
        return TruthValue.FALSE
    return TruthValue.UNKNOWN


def _clamp01(z: np.ndarray | float):
    return np.clip(z, 0.0, 1.0)


@dataclass
class LogicNode:
    """One weighted connective. Bias is a 0-d array so optimizers can update in place."""

    kind: str
    weights: np.ndarray
    bias: np.ndarray

    @classmethod
    def create(cls, kind: str, weights, bias: float) -> "LogicNode":
        if kind not in (AND, OR):
            raise ValueError(f"node kind must be '{AND}' or '{OR}', got {kind!r}")
        w = np.asarray(weights, dtype=np.float64).copy()
        if np.any(w < 0) or bias < 0:
            raise ValueError("weights and bias must be nonnegative")
        return cls(kind=kind, weights=w, bias=np.array(bias, dtype=np.float64))

    def pre_activation(self, x: np.ndarray) -> float:
        if self.kind == AND:
            return float(self.bias - self.weights @ (1.0 - x))
        return float(1.0 - self.bias + self.weights @ x)

    def value(self, x: np.ndarray) -> float:
        return float(_clamp01(self.pre_activation(x)))


@dataclass(frozen=True)
class ForwardTrace:
    """Pre- and post-clamp activations from one forward pass."""

    facts: np.ndarray
    and_pre: np.ndarray
    and_out: np.ndarray
    or_pre: float
    or_out: float


class GateCapReached(Exception):
    """Signal that the AND bank is full; the caller skips the addition."""


class LnnNetwork:
    """Fact inputs -> AND bank -> OR root, for one word category."""

    def __init__(
        self,
        category: str,
        literals: tuple[str, ...],
        verb: str,
        config: TruthConfig | None = None,
        gate_cap: int = DEFAULT_GATE_CAP,
        or_bias: float = DEFAULT_OR_BIAS,
    ):
        self.category = category
        self.literals = tuple(literals)
        self.verb = verb
        self.config = config or TruthConfig()
        self.gate_cap = gate_cap
        self.and_gates: list[LogicNode] = [
            LogicNode.create(AND, np.full(self.input_arity, 0.5), 1.0)
        ]
        self.or_root = LogicNode.create(OR, np.array([1.0]), or_bias)

    @property
    def input_arity(self) -> int:
        return len(self.literals)

    # ------------------------------------------------------------------ forward

    def forward(self, facts) -> tuple[float, ForwardTrace]:
        x = np.asarray(facts, dtype=np.float64)
        if x.shape != (self.input_arity,):
            raise ValueError(
                f"{self.category} network expects {self.input_arity} facts, got shape {x.shape}"
            )
        and_pre = np.array([g.pre_activation(x) for g in self.and_gates])
        and_out = _clamp01(and_pre)
        or_pre = float(1.0 - self.or_root.bias + self.or_root.weights @ and_out)
        or_out = float(_clamp01(or_pre))
        return or_out, ForwardTrace(x, and_pre, and_out, or_pre, or_out)

    # ---------------------------------------------------------------- gradients

    def parameters(self) -> dict[str, np.ndarray]:
        params: dict[str, np.ndarray] = {}
        for j, gate in enumerate(self.and_gates):
            params[f"and{j}.w"] = gate.weights
            params[f"and{j}.b"] = gate.bias
        params["or.w"] = self.or_root.weights
        params["or.b"] = self.or_root.bias
        return params

    def gradients(self, facts, upstream: float) -> dict[str, np.ndarray]:
        """d(upstream * q)/d(param) for every parameter, exact for the clamped forms."""
        _, trace = self.forward(facts)
        x = trace.facts
        grads: dict[str, np.ndarray] = {}

        or_open = 0.0 < trace.or_pre < 1.0
        g_or = upstream if or_open else 0.0
        grads["or.w"] = g_or * trace.and_out
        grads["or.b"] = np.array(-g_or, dtype=np.float64)

        for j, gate in enumerate(self.and_gates):
            g_out = g_or * float(self.or_root.weights[j])
            if g_out != 0.0 and 0.0 < trace.and_pre[j] < 1.0:
                grads[f"and{j}.w"] = -g_out * (1.0 - x)
                grads[f"and{j}.b"] = np.array(g_out, dtype=np.float64)
            else:
                grads[f"and{j}.w"] = np.zeros_like(gate.weights)
                grads[f"and{j}.b"] = np.array(0.0, dtype=np.float64)
        return grads

    # ---------------------------------------------------------------- structure

    def add_and_gate(self, facts) -> int:
        """Splice in a gate seeded from `facts`: unit weight on every true literal.

        The OR root gains one unit-weight input. Raises GateCapReached when
        the bank is full.
        """
        if len(self.and_gates) >= self.gate_cap:
            raise GateCapReached(
                f"{self.category} network already holds {self.gate_cap} AND gates"
            )
        x = np.asarray(facts, dtype=np.float64)
        if x.shape != (self.input_arity,):
            raise ValueError(f"seed facts must have arity {self.input_arity}")
        weights = np.where(x >= self.config.alpha, 1.0, 0.0)
        self.and_gates.append(LogicNode.create(AND, weights, 1.0))
        self.or_root.weights = np.append(self.or_root.weights, 1.0)
        return len(self.and_gates) - 1

    def clone(self) -> "LnnNetwork":
        """Deep parameter copy (used for target-network snapshots)."""
        twin = LnnNetwork.__new__(LnnNetwork)
        twin.category = self.category
        twin.literals = self.literals
        twin.verb = self.verb
        twin.config = self.config
        twin.gate_cap = self.gate_cap
        twin.and_gates = [
            LogicNode(AND, g.weights.copy(), g.bias.copy()) for g in self.and_gates
        ]
        twin.or_root = LogicNode(OR, self.or_root.weights.copy(), self.or_root.bias.copy())
        return twin

    def load_parameters_from(self, other: "LnnNetwork") -> None:
        self.and_gates = [
            LogicNode(AND, g.weights.copy(), g.bias.copy()) for g in other.and_gates
        ]
        self.or_root = LogicNode(OR, other.or_root.weights.copy(), other.or_root.bias.copy())


# ---------------------------------------------------------------------------
# rule extraction
# ---------------------------------------------------------------------------

_LITERAL_DISPLAY = {
    "find_x": "⟨find x⟩",
    "not_find_x": "¬⟨find x⟩",
    "visited_x": "⟨visited x⟩",
    "not_visited_x": "¬⟨visited x⟩",
    "initial_x": "⟨initial x⟩",
    "not_initial_x": "¬⟨initial x⟩",
    "all_visited": "⟨all are visited⟩",
    "not_all_visited": "¬⟨all are visited⟩",
}


def _display_literal(literal: str) -> str:
    return _LITERAL_DISPLAY.get(literal, f"⟨{literal}⟩")


@dataclass(frozen=True)
class Rule:
    category: str
    verb: str
    literals: tuple[str, ...]
    or_weight: float
    gate_index: int

    def render(self) -> str:
        body = " ∧ ".join(_display_literal(l) for l in self.literals)
        return f"{body} → ⟪{self.verb} x⟫"


def extract_rules(
    net: LnnNetwork, weight_threshold: float = DEFAULT_RULE_WEIGHT_THRESHOLD
) -> list[Rule]:
    """Read conjunctive rules off the high-weight connections.

    A gate contributes a rule when its OR-root weight clears the threshold
    and at least one of its literal weights does; rules come back ordered by
    OR weight descending.
    """
    rules: list[Rule] = []
    for j, gate in enumerate(net.and_gates):
        or_w = float(net.or_root.weights[j])
        if or_w < weight_threshold:
            continue
        literals = tuple(
            name for name, w in zip(net.literals, gate.weights) if w >= weight_threshold
        )
        if not literals:
            continue
        rules.append(Rule(net.category, net.verb, literals, or_w, j))
    rules.sort(key=lambda r: (-r.or_weight, r.gate_index))
    return rules


def render_ruleset(nets: dict[str, LnnNetwork], weight_threshold: float = DEFAULT_RULE_WEIGHT_THRESHOLD) -> str:
    """Human-readable dump of every category's rules, stable ordering."""
    blocks: list[str] = []
    for category in sorted(nets):
        net = nets[category]
        lines = [f"∃x ∈ W_{category}"]
        rules = extract_rules(net, weight_threshold)
        if not rules:
            lines.append("  (no rule above threshold)")
        for rule in rules:
            lines.append(f"  {rule.render()}    [or-weight {rule.or_weight:.3f}]")
        blocks.append("\n".join(lines))
    return "\n\n".join(blocks) + "\n"


# ---------------------------------------------------------------------------
# checkpoints
# ---------------------------------------------------------------------------

_CHECKPOINT_HEADER = "lnn-checkpoint v1"


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def save_network(net: LnnNetwork, path) -> None:
    lines = [
        _CHECKPOINT_HEADER,
        f"category {net.category}",
        f"verb {net.verb}",
        f"alpha {_fmt(net.config.alpha)}",
        f"gate_cap {net.gate_cap}",
        f"arity {net.input_arity}",
        "literals " + " ".join(net.literals),
        f"gates {len(net.and_gates)}",
    ]
    for j, gate in enumerate(net.and_gates):
        lines.append(f"and {j} bias {_fmt(gate.bias)} weights " + " ".join(_fmt(w) for w in gate.weights))
    lines.append(f"or bias {_fmt(net.or_root.bias)} weights " + " ".join(_fmt(w) for w in net.or_root.weights))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def load_network(path) -> LnnNetwork:
    with open(path, encoding="utf-8") as fh:
        lines = [line.rstrip("\n") for line in fh]
    if not lines or lines[0] != _CHECKPOINT_HEADER:
        raise ValueError(f"{path}: not a network checkpoint")

    fields: dict[str, str] = {}
    for line in lines[1:8]:
        key, _, value = line.partition(" ")
        fields[key] = value

    net = LnnNetwork(
        category=fields["category"],
        literals=tuple(fields["literals"].split()),
        verb=fields["verb"],
        config=TruthConfig(alpha=float(fields["alpha"])),
        gate_cap=int(fields["gate_cap"]),
    )
    if net.input_arity != int(fields["arity"]):
        raise ValueError(f"{path}: arity does not match literal list")

    n_gates = int(fields["gates"])
    net.and_gates = []
    for line in lines[8:8 + n_gates]:
        tokens = line.split()
        if tokens[0] != "and" or tokens[2] != "bias" or tokens[4] != "weights":
            raise ValueError(f"{path}: malformed gate row {line!r}")
        bias = float(tokens[3])
        weights = np.array([float(t) for t in tokens[5:]], dtype=np.float64)
        net.and_gates.append(LogicNode(AND, weights, np.array(bias, dtype=np.float64)))

    tokens = lines[8 + n_gates].split()
    if tokens[0] != "or" or tokens[1] != "bias" or tokens[3] != "weights":
        raise ValueError(f"{path}: malformed or row")
    net.or_root = LogicNode(
        OR,
        np.array([float(t) for t in tokens[4:]], dtype=np.float64),
        np.array(float(tokens[2]), dtype=np.float64),
    )
    if len(net.or_root.weights) != len(net.and_gates):
        raise ValueError(f"{path}: OR arity does not match gate count")
    return net

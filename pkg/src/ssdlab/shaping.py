"""Socio-relational reward shaping.

Each agent holds preferential weights (alpha, beta, omega) over the
three sub-graphical neighbor families of its vertex: nearest neighbors,
clique (triangle) neighbors, and critical-connection neighbors. The
shaping step adds to an agent's extrinsic reward the weighted sum of
its preferred neighbors' extrinsic rewards:

    r_tot = r_env + r_socio,
    r_socio^i = alpha * sum_{j in nearest(i)} r_env^j
              + beta  * sum_{k in clique(i)}  r_env^k
              + omega * sum_{m in hbn(i)}     r_env^m

A vertex appearing in several families accumulates the sum of the
applicable weights. Learners train on r_tot; every logged metric keeps
r_env separate.
"""

from __future__ import annotations

from dataclasses import dataclass

from .topology import Topology, analyze, portfolios

PRESETS = {
    "NN": (1.0, 0.0, 0.0),
    "CN": (0.0, 1.0, 0.0),
    "HBN": (0.0, 0.0, 1.0),
    "baseline": (0.0, 0.0, 0.0),
}


class ShapingError(ValueError):
    """Invalid preference weights or identity mapping."""


@dataclass(frozen=True)
class PreferenceProfile:
    """Per-agent (alpha, beta, omega) weights, all non-negative."""

    weights: tuple  # of (alpha, beta, omega) triples

    def __post_init__(self):
        for triple in self.weights:
            if len(triple) != 3:
                raise ShapingError(f"expected 3 weights per agent, got {triple}")
            if any(w < 0 for w in triple):
                raise ShapingError(f"negative preference weight in {triple}")

    @property
    def n_agents(self) -> int:
        return len(self.weights)

    @property
    def is_baseline(self) -> bool:
        """True for the network-free and preference-free protocol."""
        return all(w == 0.0 for triple in self.weights for w in triple)

    @property
    def is_one_hot(self) -> bool:
        shared = set(self.weights)
        if len(shared) != 1:
            return False
        triple = next(iter(shared))
        return sum(1 for w in triple if w > 0) == 1

    @classmethod
    def homogeneous(cls, n: int, alpha: float, beta: float, omega: float):
        return cls(weights=tuple((float(alpha), float(beta), float(omega)) for _ in range(n)))

    @classmethod
    def baseline(cls, n: int):
        return cls.homogeneous(n, 0.0, 0.0, 0.0)

    @classmethod
    def preset(cls, name: str, n: int):
        if name not in PRESETS:
            raise ShapingError(f"unknown preset {name!r}; known: {sorted(PRESETS)}")
        return cls.homogeneous(n, *PRESETS[name])


@dataclass(frozen=True)
class IdMapping:
    """Total bijection between agent ids and topology vertex ids."""

    agent_to_vertex: tuple

    def __post_init__(self):
        n = len(self.agent_to_vertex)
        if sorted(self.agent_to_vertex) != list(range(n)):
            raise ShapingError(
                f"mapping {self.agent_to_vertex} is not a bijection over 0..{n - 1}"
            )

    @classmethod
    def identity(cls, n: int):
        return cls(agent_to_vertex=tuple(range(n)))

    def vertex_of(self, agent: int) -> int:
        return self.agent_to_vertex[agent]

    def agent_of(self, vertex: int) -> int:
        return self.agent_to_vertex.index(vertex)


@dataclass(frozen=True)
class ShapedStep:
    """One step's extrinsic, socio, and total rewards per agent."""

    r_env: tuple
    r_socio: tuple
    r_tot: tuple


def resolve_portfolio(
    t: Topology, profile: PreferenceProfile, mapping: IdMapping | None = None
) -> tuple:
    """Per-agent weighted neighbor lists under the preference profile.

    Returns a tuple of dicts mapping cared-for agent id to accumulated
    weight, keys in ascending order so downstream sums are
    reproducible.
    """
    if profile.n_agents != t.n:
        raise ShapingError(
            f"profile covers {profile.n_agents} agents but topology has {t.n}"
        )
    if mapping is None:
        mapping = IdMapping.identity(t.n)
    if len(mapping.agent_to_vertex) != t.n:
        raise ShapingError("mapping size does not match topology")
    sets = portfolios(t, analyze(t))
    out = []
    for agent in range(t.n):
        alpha, beta, omega = profile.weights[agent]
        vertex = mapping.vertex_of(agent)
        acc: dict = {}
        for weight, family in (
            (alpha, sets.nearest[vertex]),
            (beta, sets.clique[vertex]),
            (omega, sets.hbn[vertex]),
        ):
            if weight == 0.0:
                continue
            for other_vertex in family:
                other = mapping.agent_of(other_vertex)
                acc[other] = acc.get(other, 0.0) + weight
        out.append(dict(sorted(acc.items())))
    return tuple(out)


def shape(step, resolved: tuple) -> ShapedStep:
    """Convert extrinsic step rewards into total rewards.

    ``step`` is either a per-agent reward sequence or any object with a
    ``rewards`` attribute (e.g. an environment step outcome).
    """
    rewards = getattr(step, "rewards", step)
    r_env = tuple(float(r) for r in rewards)
    if len(r_env) != len(resolved):
        raise ShapingError(
            f"got {len(r_env)} rewards for {len(resolved)} resolved portfolios"
        )
    r_socio = tuple(
        sum(w * r_env[other] for other, w in pf.items()) for pf in resolved
    )
    r_tot = tuple(e + s for e, s in zip(r_env, r_socio))
    return ShapedStep(r_env=r_env, r_socio=r_socio, r_tot=r_tot)


def set_weights(
    profile: PreferenceProfile, agent: int, alpha: float, beta: float, omega: float
) -> PreferenceProfile:
    """Functional single-agent weight update.

    Negative weights are rejected. The caller applies the returned
    profile at the next episode boundary so per-episode logs stay
    internally consistent.
    """
    if min(alpha, beta, omega) < 0:
        raise ShapingError(f"negative weight in ({alpha}, {beta}, {omega})")
    if not (0 <= agent < profile.n_agents):
        raise ShapingError(f"agent {agent} out of range")
    rows = list(profile.weights)
    rows[agent] = (float(alpha), float(beta), float(omega))
    return PreferenceProfile(weights=tuple(rows))

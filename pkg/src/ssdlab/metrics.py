"""Episode- and run-level behavioral metrics.

Covers the quantities reported per run: the bridging-capacity index
(BCI) with its topology-constrained range, the social contribution
index (SCI), the utilitarian collective return, and the three-stage
segmentation of a training run with per-stage aggregation.

All computations are pure folds over immutable episode logs; every
metric consumes extrinsic quantities only (socio rewards are logged but
never enter a metric).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .topology import StructuralProfile, tctr

#: fraction of the transient phase that belongs to stage 1
STAGE1_FRACTION = 1.0 / 6.0
#: fraction of total steps forming the convergence stage (stage 3)
CONVERGENCE_FRACTION = 0.4
#: default exploration cutoff as a fraction of total steps
EXPLORATION_FRACTION = 0.01


class MetricsError(ValueError):
    """Invalid metric input (length mismatch, empty window, bad epsilon)."""


@dataclass(frozen=True)
class EpisodeLog:
    """Per-agent counters for one completed episode.

    ``steps`` is the episode length; episode ``e`` of a seed covers
    timesteps ``[e*steps, (e+1)*steps)`` for stage assignment.
    """

    seed: int
    episode: int
    steps: int
    apples: tuple
    env_reward: tuple
    socio_reward: tuple
    fire_count: tuple
    clean_count: tuple

    @property
    def n_agents(self) -> int:
        return len(self.apples)


@dataclass(frozen=True)
class StageWindows:
    """Half-open timestep intervals for the three training stages."""

    stage1: tuple
    stage2: tuple
    stage3: tuple

    def named(self):
        return (("stage1", self.stage1), ("stage2", self.stage2), ("stage3", self.stage3))


@dataclass(frozen=True)
class BciSample:
    """One BCI evaluation: value (None when total reward is zero),
    the topology-constrained range it falls in for non-negative
    rewards, and which reward basis produced it."""

    value: float | None
    tctr: tuple
    reward_basis: str


def bci(rewards, profile: StructuralProfile, basis: str = "apples") -> BciSample:
    """Reward-weighted average of per-vertex bridging capacities.

        BCI = sum_i (1 - C_i) R_i / sum_i R_i

    A zero reward total yields a missing value. With non-negative
    rewards the result is a convex combination of the bridging values
    and therefore lies inside the topology-constrained range; the
    ``raw_env`` basis may be negative and is exempt from that bound.
    """
    r = np.asarray(rewards, dtype=np.float64)
    if r.shape != profile.bridging.shape:
        raise MetricsError(
            f"reward vector length {r.shape} does not match vertex count "
            f"{profile.bridging.shape}"
        )
    bounds = tctr(profile)
    total = r.sum()
    if total == 0.0:
        return BciSample(value=None, tctr=bounds, reward_basis=basis)
    value = float((profile.bridging * r).sum() / total)
    return BciSample(value=value, tctr=bounds, reward_basis=basis)


def sci(effort: float, apples: float, eps: float = 1e-6) -> float:
    """Social contribution index: (E+eps) / (E+A+2*eps), in (0, 1).

    1 means a pure cleaner, 0 a pure harvester; (0, 0) degenerates to
    0.5. ``eps`` keeps the ratio defined for zero-activity episodes.
    """
    if eps <= 0:
        raise MetricsError(f"epsilon must be positive, got {eps}")
    if effort < 0 or apples < 0:
        raise MetricsError("effort and apples must be non-negative")
    return (effort + eps) / (effort + apples + 2.0 * eps)


def utilitarian(log: EpisodeLog) -> float:
    """Collective return: the sum of extrinsic rewards over agents."""
    return float(sum(log.env_reward))


def segment_stages(
    total_steps: int,
    exploration_end: int | None = None,
    transient_end: int | None = None,
    stage1_fraction: float = STAGE1_FRACTION,
    convergence_fraction: float = CONVERGENCE_FRACTION,
) -> StageWindows:
    """Partition a run into post-exploration, transient, and convergence
    windows.

    Defaults scale proportionally with ``total_steps``: exploration
    ends at 1%, the transient phase at 60%, and the convergence stage
    covers the final 40%. Stage 1 spans from the exploration cutoff to
    ``stage1_fraction`` of the transient end.
    """
    if exploration_end is None:
        exploration_end = int(round(total_steps * EXPLORATION_FRACTION))
    if transient_end is None:
        transient_end = int(round(total_steps * (1.0 - convergence_fraction)))
    stage1_end = int(round(transient_end * stage1_fraction))
    stage3_start = total_steps - int(round(total_steps * convergence_fraction))
    boundaries = (exploration_end, stage1_end, transient_end, stage3_start, total_steps)
    if not (0 <= exploration_end < stage1_end <= transient_end <= stage3_start < total_steps):
        raise MetricsError(f"non-monotone stage boundaries {boundaries}")
    return StageWindows(
        stage1=(exploration_end, stage1_end),
        stage2=(stage1_end, transient_end),
        stage3=(stage3_start, total_steps),
    )


_FIELDS = ("apples", "env_reward", "socio_reward", "fire_count", "clean_count")


def _episodes_in(logs, window) -> list:
    lo, hi = window
    return [lg for lg in logs if lg.episode * lg.steps >= lo and (lg.episode + 1) * lg.steps <= hi]


def stage_aggregate(logs, windows: StageWindows, stat: str, field: str = "fire_count") -> dict:
    """Per-agent per-stage aggregation over episode logs.

    ``mean-summed`` sums the field over each seed's episodes inside the
    window and averages the sums across seeds. ``median`` and ``iqr``
    pool per-episode values across seeds; quartiles use linear
    interpolation. An empty window is an error.
    """
    if field not in _FIELDS:
        raise MetricsError(f"unknown field {field!r}; expected one of {_FIELDS}")
    if stat not in ("mean-summed", "median", "iqr"):
        raise MetricsError(f"unknown stat {stat!r}")
    logs = sorted(logs, key=lambda lg: (lg.seed, lg.episode))
    if not logs:
        raise MetricsError("no episode logs given")
    n_agents = logs[0].n_agents
    out = {}
    for name, window in windows.named():
        selected = _episodes_in(logs, window)
        if not selected:
            raise MetricsError(f"no episodes fall inside {name} window {window}")
        values = np.array([getattr(lg, field) for lg in selected], dtype=np.float64)
        if stat == "mean-summed":
            seeds = sorted({lg.seed for lg in selected})
            sums = np.zeros((len(seeds), n_agents))
            for row, lg in zip(values, selected):
                sums[seeds.index(lg.seed)] += row
            agg = sums.mean(axis=0)
            out[name] = {a: float(agg[a]) for a in range(n_agents)}
        elif stat == "median":
            med = np.percentile(values, 50, axis=0)
            out[name] = {a: float(med[a]) for a in range(n_agents)}
        else:  # iqr
            q1 = np.percentile(values, 25, axis=0)
            q3 = np.percentile(values, 75, axis=0)
            out[name] = {a: (float(q1[a]), float(q3[a])) for a in range(n_agents)}
    return out


def bci_series(logs, profile: StructuralProfile, basis: str = "apples") -> list:
    """Per-episode BCI samples in (seed, episode) order.

    ``apples`` uses per-agent apple counts (non-negative, bound holds);
    ``raw_env`` uses summed extrinsic reward, which FIRE penalties can
    push negative, so it is bound-exempt.
    """
    if basis not in ("apples", "raw_env"):
        raise MetricsError(f"unknown reward basis {basis!r}")
    logs = sorted(logs, key=lambda lg: (lg.seed, lg.episode))
    attr = "apples" if basis == "apples" else "env_reward"
    return [bci(getattr(lg, attr), profile, basis=basis) for lg in logs]


def bci_summary(samples) -> dict:
    """Median/Q1/Q3 of the non-missing samples plus the dropped count."""
    values = [s.value for s in samples if s.value is not None]
    dropped = len(samples) - len(values)
    if not values:
        return {"n": 0, "dropped": dropped, "median": None, "q1": None, "q3": None}
    arr = np.asarray(values)
    return {
        "n": len(values),
        "dropped": dropped,
        "median": float(np.percentile(arr, 50)),
        "q1": float(np.percentile(arr, 25)),
        "q3": float(np.percentile(arr, 75)),
    }

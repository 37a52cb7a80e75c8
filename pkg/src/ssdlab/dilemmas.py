"""Harvest and Cleanup gridworld environments.

Both games share one engine: agents move and rotate on a walled grid,
collect apples for +1, and can punish each other with a FIRE beam that
costs the shooter one reward unit and fines anyone hit fifty, freezing
them for a configurable number of ticks. They differ in resource
dynamics:

* Harvest (commons): collected apples regrow with a probability that
  rises with the count of live apples within an L2 radius, so local
  depletion is permanent.
* Cleanup (public goods): apple spawning is throttled linearly by the
  waste density of an aquifer strip and stops entirely beyond a
  saturation threshold; a reward-free CLEAN beam removes waste.

Dynamics are driven by a per-state RNG stream, so a (seed, action log)
pair replays bit-identically. One EnvState must only ever be stepped by
a single worker; independent states with disjoint streams can run
concurrently.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from scipy.signal import convolve2d

# actions
FORWARD, BACKWARD, STEP_LEFT, STEP_RIGHT = 0, 1, 2, 3
ROTATE_LEFT, ROTATE_RIGHT, FIRE, NOOP, CLEAN = 4, 5, 6, 7, 8
ACTION_NAMES = (
    "forward", "backward", "step-left", "step-right",
    "rotate-left", "rotate-right", "fire", "noop", "clean",
)
_MOVE_ACTIONS = (FORWARD, BACKWARD, STEP_LEFT, STEP_RIGHT)

# orientations and their (row, col) deltas
NORTH, EAST, SOUTH, WEST = 0, 1, 2, 3
_DELTAS = ((-1, 0), (0, 1), (1, 0), (0, -1))

#: observation channels, in layout order
CHANNELS = ("wall", "apple", "waste", "other-agent", "self")


class MapError(ValueError):
    """Malformed map document."""


class EnvError(ValueError):
    """Invalid environment configuration or action input."""


@dataclass(frozen=True)
class GridMap:
    """Parsed static map layout.

    Legend: ``#`` wall, ``.`` empty, ``A`` apple spawn point, ``W``
    aquifer cell (Cleanup only), ``S`` agent start.
    """

    height: int
    width: int
    wall: np.ndarray
    spawn: np.ndarray
    aquifer: np.ndarray
    starts: tuple

    @property
    def n_spawn_points(self) -> int:
        return int(self.spawn.sum())

    @property
    def n_aquifer_cells(self) -> int:
        return int(self.aquifer.sum())


def parse_map(text: str) -> GridMap:
    rows = [line for line in text.splitlines() if line.strip()]
    if not rows:
        raise MapError("empty map document")
    width = len(rows[0])
    if any(len(r) != width for r in rows):
        raise MapError("map rows have unequal lengths")
    height = len(rows)
    wall = np.zeros((height, width), dtype=bool)
    spawn = np.zeros((height, width), dtype=bool)
    aquifer = np.zeros((height, width), dtype=bool)
    starts = []
    for r, row in enumerate(rows):
        for c, ch in enumerate(row):
            if ch == "#":
                wall[r, c] = True
            elif ch == "A":
                spawn[r, c] = True
            elif ch == "W":
                aquifer[r, c] = True
            elif ch == "S":
                starts.append((r, c))
            elif ch != ".":
                raise MapError(f"unknown map character {ch!r} at row {r}, col {c}")
    if not starts:
        raise MapError("map has no agent start positions")
    for arr in (wall, spawn, aquifer):
        arr.setflags(write=False)
    return GridMap(
        height=height, width=width, wall=wall, spawn=spawn,
        aquifer=aquifer, starts=tuple(starts),
    )


def scale_map(text: str, factor: int) -> str:
    """Tile the map interior horizontally, preserving cell densities.

    Used to grow a map for larger populations while keeping spawn
    points per agent constant. Requires walled left/right borders so
    copies share a single wall column.
    """
    if factor < 1:
        raise MapError(f"scale factor must be >= 1, got {factor}")
    rows = [line for line in text.splitlines() if line.strip()]
    if not rows or any(len(r) != len(rows[0]) for r in rows):
        raise MapError("map rows have unequal lengths")
    if not all(r[0] == "#" and r[-1] == "#" for r in rows):
        raise MapError("scaling requires walled left/right borders")
    scaled = [r[0] + r[1:-1] * factor + r[-1] for r in rows]
    return "\n".join(scaled)


HARVEST_SMALL = """\
##################
#S.....A.A.....S.#
#..A..AAA..A.....#
#.A.A..A..A.A..S.#
#..A..AAA..A.....#
#S.....A.A.....S.#
#................#
#................#
##################
"""

CLEANUP_SMALL = """\
##################
#WWW.S.......A.A.#
#WWW..........AA.#
#WWW.S....A.AA.A.#
#WWW..........AA.#
#WWW.S.......A.A.#
#WWW.S...........#
#WWW.S...........#
##################
"""

HARVEST_MICRO = """\
##########
#S.A..A.S#
#..AAAA..#
#S.A..A.S#
#...S....#
##########
"""

CLEANUP_MICRO = """\
##########
#WW.S.AA.#
#WW.S.AA.#
#WW.S.AA.#
#WW.S.AA.#
#WW.S.AA.#
##########
"""

MAPS = {
    "harvest-small": HARVEST_SMALL,
    "cleanup-small": CLEANUP_SMALL,
    "harvest-micro": HARVEST_MICRO,
    "cleanup-micro": CLEANUP_MICRO,
}


@dataclass(frozen=True)
class EnvConfig:
    """Full set of environment knobs; every run echoes these."""

    kind: str  # harvest | cleanup
    map_name: str | None = None
    map_text: str | None = None
    n_agents: int = 5
    episode_len: int = 1000
    view_size: int = 7
    apple_reward: float = 1.0
    fire_cost: float = 1.0
    hit_penalty: float = 50.0
    hit_freeze: int = 25
    fire_beam_length: int = 5
    fire_beam_width: int = 1
    clean_beam_length: int = 3
    clean_beam_width: int = 3
    regrowth_probs: tuple = (0.0, 0.005, 0.02, 0.05)
    regrowth_radius: float = 2.0
    cleanup_apple_base_rate: float = 0.05
    waste_saturation: float = 0.4
    waste_spawn_prob: float = 0.05
    waste_density_cap: float = 1.0
    initial_waste_fraction: float = 0.0

    def n_actions(self) -> int:
        return 9 if self.kind == "cleanup" else 8

    def obs_dim(self) -> int:
        return self.view_size * self.view_size * len(CHANNELS)

    def resolve_map_text(self) -> str:
        if self.map_text is not None:
            return self.map_text
        name = self.map_name or f"{self.kind}-small"
        if name not in MAPS:
            raise EnvError(f"unknown map {name!r}; known: {sorted(MAPS)}")
        return MAPS[name]


@dataclass
class AgentBody:
    id: int
    position: tuple
    orientation: int
    frozen_until: int = 0


@dataclass
class EnvState:
    """Mutable world state; single-writer, replayable from (seed, actions)."""

    config: EnvConfig
    grid: GridMap
    agents: list
    apple_alive: np.ndarray
    waste: np.ndarray
    t: int
    rng: np.random.Generator
    _regrow_kernel: np.ndarray = field(repr=False, default=None)

    @property
    def done(self) -> bool:
        return self.t >= self.config.episode_len

    def waste_density(self) -> float:
        cells = self.grid.n_aquifer_cells
        return float(self.waste.sum()) / cells if cells else 0.0

    def occupied(self) -> dict:
        return {a.position: a.id for a in self.agents}


@dataclass(frozen=True)
class StepOutcome:
    """Per-agent results of one simultaneous step."""

    rewards: tuple
    apples: tuple
    fired: tuple
    was_hit: tuple
    cleaned: tuple
    waste_removed: tuple
    observations: tuple
    done: bool


def _validate_config(cfg: EnvConfig) -> None:
    if cfg.kind not in ("harvest", "cleanup"):
        raise EnvError(f"unknown environment kind {cfg.kind!r}")
    if cfg.view_size % 2 != 1 or cfg.view_size < 1:
        raise EnvError(f"view_size must be odd and positive, got {cfg.view_size}")
    if len(cfg.regrowth_probs) != 4:
        raise EnvError("regrowth_probs needs 4 entries (k=0, 1-2, 3-4, >=5)")
    if cfg.episode_len < 1:
        raise EnvError("episode_len must be >= 1")
    if cfg.fire_beam_width % 2 != 1 or cfg.clean_beam_width % 2 != 1:
        raise EnvError("beam widths must be odd")


def _regrow_kernel(radius: float) -> np.ndarray:
    r = int(np.floor(radius))
    span = np.arange(-r, r + 1)
    dx, dy = np.meshgrid(span, span, indexing="ij")
    kernel = (dx**2 + dy**2 <= radius**2).astype(np.float64)
    return kernel


def reset(cfg: EnvConfig, seed: int) -> tuple:
    """Build the initial state and observations for one episode."""
    _validate_config(cfg)
    grid = parse_map(cfg.resolve_map_text())
    if cfg.kind == "cleanup" and grid.n_aquifer_cells == 0:
        raise EnvError("cleanup requires a map with at least one aquifer cell")
    if cfg.kind == "harvest" and grid.n_aquifer_cells > 0:
        raise EnvError("harvest maps must not contain aquifer cells")
    if cfg.n_agents > len(grid.starts):
        raise EnvError(
            f"{cfg.n_agents} agents but only {len(grid.starts)} start positions"
        )
    if cfg.n_agents < 1:
        raise EnvError("need at least one agent")
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    agents = [
        AgentBody(id=i, position=grid.starts[i], orientation=NORTH)
        for i in range(cfg.n_agents)
    ]
    apple_alive = grid.spawn.copy() if cfg.kind == "harvest" else np.zeros_like(grid.spawn)
    waste = np.zeros_like(grid.aquifer)
    if cfg.kind == "cleanup" and cfg.initial_waste_fraction > 0:
        cells = [tuple(c) for c in np.argwhere(grid.aquifer)]
        count = int(round(cfg.initial_waste_fraction * len(cells)))
        chosen = rng.permutation(len(cells))[:count]
        for idx in chosen:
            waste[cells[int(idx)]] = True
    state = EnvState(
        config=cfg, grid=grid, agents=agents,
        apple_alive=apple_alive, waste=waste, t=0, rng=rng,
        _regrow_kernel=_regrow_kernel(cfg.regrowth_radius),
    )
    observations = tuple(observe(state, i) for i in range(cfg.n_agents))
    return state, observations


def observe(state: EnvState, agent: int) -> np.ndarray:
    """Egocentric window rotated so the agent faces up; flattened.

    Channels are wall, apple, waste, other-agent, self; cells beyond
    the map edge read as wall.
    """
    if not (0 <= agent < len(state.agents)):
        raise EnvError(f"unknown agent id {agent}")
    cfg = state.config
    v = cfg.view_size
    half = v // 2
    grid = state.grid
    body = state.agents[agent]
    window = np.zeros((v, v, len(CHANNELS)), dtype=np.float64)
    window[:, :, 0] = 1.0  # out-of-bounds default: wall
    r0, c0 = body.position[0] - half, body.position[1] - half
    occ = state.occupied()
    for wr in range(v):
        for wc in range(v):
            r, cl = r0 + wr, c0 + wc
            if not (0 <= r < grid.height and 0 <= cl < grid.width):
                continue
            window[wr, wc, 0] = 1.0 if grid.wall[r, cl] else 0.0
            window[wr, wc, 1] = 1.0 if state.apple_alive[r, cl] else 0.0
            window[wr, wc, 2] = 1.0 if state.waste[r, cl] else 0.0
            other = occ.get((r, cl))
            if other is not None and other != agent:
                window[wr, wc, 3] = 1.0
    window[half, half, 4] = 1.0
    window = np.rot90(window, k=body.orientation, axes=(0, 1))
    return np.ascontiguousarray(window).reshape(-1)


def _move_delta(action: int, orientation: int) -> tuple:
    if action == FORWARD:
        turn = 0
    elif action == BACKWARD:
        turn = 2
    elif action == STEP_RIGHT:
        turn = 1
    else:  # STEP_LEFT
        turn = 3
    return _DELTAS[(orientation + turn) % 4]


def _resolve_moves(state: EnvState, proposals: list) -> list:
    """Simultaneous movement with seeded conflict resolution.

    Cells contested by several movers go to one uniform-random winner
    (losers stay); a move is then executed only if its target cell is
    empty or being vacated by another executed move, which also rules
    out swaps and rotation cycles.
    """
    n = len(proposals)
    current = [a.position for a in state.agents]
    target = list(proposals)
    movers = [i for i in range(n) if target[i] != current[i]]
    contested: dict = {}
    for i in movers:
        contested.setdefault(target[i], []).append(i)
    for cell in sorted(contested):
        group = contested[cell]
        if len(group) > 1:
            winner = group[int(state.rng.integers(0, len(group)))]
            for i in group:
                if i != winner:
                    target[i] = current[i]
    confirmed = set()
    occupied_now = set(current)
    changed = True
    while changed:
        changed = False
        vacated = {current[i] for i in confirmed}
        for i in range(n):
            if i in confirmed or target[i] == current[i]:
                continue
            cell = target[i]
            if cell not in occupied_now or cell in vacated:
                confirmed.add(i)
                changed = True
    for i in range(n):
        if target[i] != current[i] and i not in confirmed:
            target[i] = current[i]
    return target


def _beam_cells(state: EnvState, origin: tuple, orientation: int,
                length: int, width: int) -> list:
    forward = _DELTAS[orientation]
    lateral = _DELTAS[(orientation + 1) % 4]
    grid = state.grid
    cells = []
    for offset in range(-(width // 2), width // 2 + 1):
        start = (origin[0] + lateral[0] * offset, origin[1] + lateral[1] * offset)
        for dist in range(1, length + 1):
            r = start[0] + forward[0] * dist
            c = start[1] + forward[1] * dist
            if not (0 <= r < grid.height and 0 <= c < grid.width):
                break
            if grid.wall[r, c]:
                break
            cells.append((r, c))
    return cells


def step(state: EnvState, actions) -> tuple:
    """Advance the world one tick under the joint action.

    Phases: freeze coercion, rotation, simultaneous movement, apple
    pickup on entry, FIRE beams, CLEAN beams, resource regrowth, clock.
    Rewards decompose exactly as apple_reward*apples - fire_cost*fires
    - hit_penalty*hits; cleaning is reward-free.
    """
    cfg = state.config
    n = len(state.agents)
    if state.done:
        raise EnvError("episode already finished; reset the environment")
    actions = list(actions)
    if len(actions) != n:
        raise EnvError(f"expected {n} actions, got {len(actions)}")
    n_act = cfg.n_actions()
    for a in actions:
        if not (0 <= int(a) < n_act):
            raise EnvError(f"unknown action id {a} for {cfg.kind}")
    effective = [
        NOOP if body.frozen_until > state.t else int(a)
        for body, a in zip(state.agents, actions)
    ]

    for body, act in zip(state.agents, effective):
        if act == ROTATE_LEFT:
            body.orientation = (body.orientation - 1) % 4
        elif act == ROTATE_RIGHT:
            body.orientation = (body.orientation + 1) % 4

    proposals = []
    for body, act in zip(state.agents, effective):
        if act in _MOVE_ACTIONS:
            dr, dc = _move_delta(act, body.orientation)
            r, c = body.position[0] + dr, body.position[1] + dc
            inside = 0 <= r < state.grid.height and 0 <= c < state.grid.width
            if inside and not state.grid.wall[r, c]:
                proposals.append((r, c))
            else:
                proposals.append(body.position)
        else:
            proposals.append(body.position)
    final = _resolve_moves(state, proposals)
    moved = [final[i] != state.agents[i].position for i in range(n)]
    for body, pos in zip(state.agents, final):
        body.position = pos

    rewards = np.zeros(n, dtype=np.float64)
    apples = [0] * n
    fired = [0] * n
    was_hit = [0] * n
    cleaned = [0] * n
    waste_removed = [0] * n

    for i, body in enumerate(state.agents):
        if moved[i] and state.apple_alive[body.position]:
            state.apple_alive[body.position] = False
            rewards[i] += cfg.apple_reward
            apples[i] = 1

    beams = []
    for i, act in enumerate(effective):
        if act == FIRE:
            fired[i] = 1
            rewards[i] -= cfg.fire_cost
            body = state.agents[i]
            beams.append((i, set(_beam_cells(
                state, body.position, body.orientation,
                cfg.fire_beam_length, cfg.fire_beam_width,
            ))))
    for shooter, cells in beams:
        for j, body in enumerate(state.agents):
            if j != shooter and body.position in cells:
                was_hit[j] += 1
    for j, hits in enumerate(was_hit):
        if hits:
            rewards[j] -= cfg.hit_penalty * hits
            state.agents[j].frozen_until = state.t + 1 + cfg.hit_freeze

    if cfg.kind == "cleanup":
        for i, act in enumerate(effective):
            if act == CLEAN:
                cleaned[i] = 1
                body = state.agents[i]
                for cell in _beam_cells(
                    state, body.position, body.orientation,
                    cfg.clean_beam_length, cfg.clean_beam_width,
                ):
                    if state.waste[cell]:
                        state.waste[cell] = False
                        waste_removed[i] += 1

    _regrow(state)
    state.t += 1
    observations = tuple(observe(state, i) for i in range(n))
    return state, StepOutcome(
        rewards=tuple(float(r) for r in rewards),
        apples=tuple(apples),
        fired=tuple(fired),
        was_hit=tuple(was_hit),
        cleaned=tuple(cleaned),
        waste_removed=tuple(waste_removed),
        observations=observations,
        done=state.done,
    )


def _regrow(state: EnvState) -> None:
    cfg = state.config
    grid = state.grid
    occupied_cells = {a.position for a in state.agents}
    occ_mask = np.zeros_like(grid.spawn)
    for cell in occupied_cells:
        occ_mask[cell] = True
    dead = grid.spawn & ~state.apple_alive & ~occ_mask
    dead_cells = np.argwhere(dead)
    if cfg.kind == "harvest":
        if len(dead_cells):
            counts = convolve2d(
                state.apple_alive.astype(np.float64),
                state._regrow_kernel, mode="same",
            )
            p0, p1, p2, p3 = cfg.regrowth_probs
            draws = state.rng.random(len(dead_cells))
            for (r, c), u in zip(dead_cells, draws):
                k = int(round(counts[r, c]))
                p = p0 if k == 0 else p1 if k <= 2 else p2 if k <= 4 else p3
                if u < p:
                    state.apple_alive[r, c] = True
        return
    # cleanup: apple spawn throttled by waste density, then waste accretion
    density = state.waste_density()
    rate = cfg.cleanup_apple_base_rate * max(0.0, 1.0 - density / cfg.waste_saturation)
    if len(dead_cells):
        draws = state.rng.random(len(dead_cells))
        if rate > 0.0:
            for (r, c), u in zip(dead_cells, draws):
                if u < rate:
                    state.apple_alive[r, c] = True
    if density < cfg.waste_density_cap:
        empty = np.argwhere(grid.aquifer & ~state.waste)
        if len(empty):
            draws = state.rng.random(len(empty))
            for (r, c), u in zip(empty, draws):
                if u < cfg.waste_spawn_prob:
                    state.waste[r, c] = True


def run_episode(cfg: EnvConfig, seed: int, choose_actions) -> list:
    """Drive one full episode; ``choose_actions(state, obs) -> actions``.

    Returns the list of StepOutcomes. Mainly a convenience for tests
    and scripted rollouts.
    """
    state, obs = reset(cfg, seed)
    outcomes = []
    while not state.done:
        actions = choose_actions(state, obs)
        state, outcome = step(state, actions)
        obs = outcome.observations
        outcomes.append(outcome)
    return outcomes

"""Simulation of the N-stars network evolution.

At every step, with probability ``p`` a new vertex is born (Option I) and
otherwise ``N`` old vertices interact (Option II):

* I/1 (``p r``): an (N-1)-star is picked proportionally to its weight and the
  new vertex joins it as an extra peripheral vertex;
* I/2 (``p (1-r)``): the new vertex becomes the center of ``N-1`` distinct
  old vertices chosen uniformly;
* II/1 (``(1-p) q``): an N-star is picked proportionally to its weight and
  activated again;
* II/2 (``(1-p)(1-q)``): ``N`` distinct old vertices are chosen uniformly,
  one of them uniformly as center.

Each interaction adds one to the weight of the N-star (creating it with
weight 1) and to each of its ``N-1`` (N-1)-sub-stars, the center's central
weight ``w1`` and every peripheral's peripheral weight ``w2``.  The initial
star counts as one interaction, so after ``n`` steps::

    sum(w1) = n + 1          sum(N-star weights)     = n + 1
    sum(w2) = (N-1)(n + 1)   sum((N-1)-star weights) = (N-1)(n + 1)
"""

from __future__ import annotations

import enum
import hashlib
import time
from collections import defaultdict
from dataclasses import dataclass
from typing import Dict, Optional

import numpy as np

from . import _kernel as K
from .errors import InvalidParams, InvariantViolation
from .params import ModelParams


class StepKind(enum.IntEnum):
    I1 = K.KIND_I1
    I2 = K.KIND_I2
    II1 = K.KIND_II1
    II2 = K.KIND_II2

    @property
    def label(self) -> str:
        return {0: "I/1", 1: "I/2", 2: "II/1", 3: "II/2"}[int(self)]


@dataclass(frozen=True)
class SimConfig:
    params: ModelParams
    steps: int
    seed: int = 0
    record_edges: bool = False
    check_every_step: bool = False

    def __post_init__(self):
        if self.steps < 0:
            raise InvalidParams(f"steps must be >= 0, got {self.steps}")
        if not 0 <= self.seed < 2 ** 64:
            raise InvalidParams("seed must fit in an unsigned 64-bit integer")


@dataclass
class RunSummary:
    steps: int
    vertices: int
    nstars: int
    n1stars: int
    branch_counts: Dict[str, int]
    wall_time: float
    digest: str


def _pow2_at_least(n: int) -> int:
    return 1 << max(4, int(n - 1).bit_length())


class _Registry:
    """Arrays of one star registry (see :mod:`nstars._kernel`)."""

    def __init__(self, width: int, capacity: int):
        self.width = width
        self.keys = np.zeros((capacity, width), dtype=np.int32)
        self.weights = np.zeros(capacity, dtype=np.int64)
        self.tree = np.zeros(capacity + 1, dtype=np.int64)
        self.table = np.full(_pow2_at_least(2 * capacity), -1, dtype=np.int32)

    def grow(self, n: int, need: int) -> None:
        cap = self.keys.shape[0]
        if n + need > cap:
            new_cap = max(2 * cap, n + need)
            keys = np.zeros((new_cap, self.width), dtype=np.int32)
            keys[:n] = self.keys[:n]
            weights = np.zeros(new_cap, dtype=np.int64)
            weights[:n] = self.weights[:n]
            tree = np.zeros(new_cap + 1, dtype=np.int64)
            tree[: n + 1] = self.tree[: n + 1]
            self.keys, self.weights, self.tree = keys, weights, tree
        if 2 * (n + need) > self.table.shape[0]:
            self.table = np.full(_pow2_at_least(4 * (n + need)), -1, dtype=np.int32)
            K.rehash(self.keys, n, self.table, self.width)


class GraphState:
    """Evolving multigraph: per-vertex weights and the two star registries.

    Mutated only through :func:`step` and :func:`run`; one state must not be
    shared between threads.
    """

    def __init__(self, params: ModelParams, seed: int = 0, record_edges: bool = False,
                 capacity: int = 1024):
        params.validate_simulation()
        self.params = params
        self.N = int(params.N)
        self.seed = int(seed)
        self.record_edges = bool(record_edges)
        N = self.N
        cap = max(capacity, 4 * N)
        self.vw = np.zeros((cap, 2), dtype=np.int64)
        self.stars = _Registry(N, cap)
        self.substars = _Registry(N - 1, cap * (N - 1))
        self.edges = np.zeros((cap * (N - 1) if record_edges else 0, 2), dtype=np.int32)
        self.rng = np.zeros(4, dtype=np.uint64)
        K.seed_rng(self.rng, np.uint64(self.seed))
        self.meta = np.zeros(K.M_SIZE, dtype=np.int64)
        self.meta[K.M_LAST] = -1
        s, t = self.stars, self.substars
        K.seed_initial(N, self.vw, s.keys, s.weights, s.tree, s.table,
                       t.keys, t.weights, t.tree, t.table,
                       self.edges, self.record_edges, self.meta)
        self.meta[K.M_S_TOTAL] = 1
        self.meta[K.M_T_TOTAL] = N - 1

    # -- counters -----------------------------------------------------------

    @property
    def steps(self) -> int:
        return int(self.meta[K.M_STEPS])

    @property
    def vertex_count(self) -> int:
        return int(self.meta[K.M_NV])

    @property
    def nstar_count(self) -> int:
        return int(self.meta[K.M_NS])

    @property
    def n1star_count(self) -> int:
        return int(self.meta[K.M_NT])

    @property
    def nstar_total(self) -> int:
        return int(self.meta[K.M_S_TOTAL])

    @property
    def n1star_total(self) -> int:
        return int(self.meta[K.M_T_TOTAL])

    @property
    def branch_counts(self) -> Dict[str, int]:
        return {kind.label: int(self.meta[K.M_COUNT0 + kind]) for kind in StepKind}

    # -- views ----------------------------------------------------------------

    @property
    def w1(self) -> np.ndarray:
        return self.vw[: self.vertex_count, 0]

    @property
    def w2(self) -> np.ndarray:
        return self.vw[: self.vertex_count, 1]

    def nstar_keys(self) -> np.ndarray:
        return self.stars.keys[: self.nstar_count]

    def nstar_weights(self) -> np.ndarray:
        return self.stars.weights[: self.nstar_count]

    def n1star_keys(self) -> np.ndarray:
        return self.substars.keys[: self.n1star_count]

    def n1star_weights(self) -> np.ndarray:
        return self.substars.weights[: self.n1star_count]

    def nstar_weight(self, center: int, peripherals) -> int:
        """Weight of the N-star with this center and peripheral set (0 if absent)."""
        return self._weight_of(self.stars, center, peripherals)

    def n1star_weight(self, center: int, peripherals) -> int:
        return self._weight_of(self.substars, center, peripherals)

    def _weight_of(self, reg: _Registry, center, peripherals) -> int:
        key = np.array([center, *sorted(peripherals)], dtype=np.int32)
        if key.shape[0] != reg.width:
            raise ValueError(f"expected {reg.width - 1} peripherals")
        idx = K.lookup(reg.keys, reg.table, key, reg.width)
        return int(reg.weights[idx]) if idx >= 0 else 0

    def edges_array(self) -> np.ndarray:
        """Logged directed edges (peripheral, center); requires ``record_edges``."""
        if not self.record_edges:
            raise ValueError("edge logging was not enabled for this state")
        return self.edges[: int(self.meta[K.M_NE])]

    def digest(self) -> str:
        """16-hex-digit fingerprint of the complete state."""
        h = hashlib.blake2b(digest_size=8)
        h.update(np.array([self.N, self.steps], dtype=np.int64).tobytes())
        h.update(np.ascontiguousarray(self.vw[: self.vertex_count]).tobytes())
        for reg, n in ((self.stars, self.nstar_count), (self.substars, self.n1star_count)):
            h.update(np.ascontiguousarray(reg.keys[:n]).tobytes())
            h.update(reg.weights[:n].tobytes())
        h.update(self.rng.tobytes())
        return h.hexdigest()

    # -- internals ------------------------------------------------------------

    def _grow(self) -> None:
        N, m = self.N, self.meta
        nv = int(m[K.M_NV])
        if nv + 1 > self.vw.shape[0]:
            vw = np.zeros((2 * self.vw.shape[0], 2), dtype=np.int64)
            vw[:nv] = self.vw[:nv]
            self.vw = vw
        self.stars.grow(int(m[K.M_NS]), 1)
        self.substars.grow(int(m[K.M_NT]), N - 1)
        ne = int(m[K.M_NE])
        if self.record_edges and ne + N - 1 > self.edges.shape[0]:
            edges = np.zeros((max(2 * self.edges.shape[0], ne + N - 1), 2), dtype=np.int32)
            edges[:ne] = self.edges[:ne]
            self.edges = edges

    def _advance(self, nsteps: int, check_every_step: bool = False) -> None:
        p = self.params
        remaining = int(nsteps)
        while remaining > 0:
            s, t = self.stars, self.substars
            status, done = K.advance(
                self.N, float(p.p), float(p.q), float(p.r), self.vw,
                s.keys, s.weights, s.tree, s.table,
                t.keys, t.weights, t.tree, t.table,
                self.edges, self.record_edges, self.rng, self.meta,
                remaining, check_every_step,
            )
            remaining -= done
            if status == K.NEED_GROW:
                self._grow()
            elif status == K.INVARIANT_BROKEN:
                raise InvariantViolation(f"conservation identity failed at step {self.steps}")


def init(params: ModelParams, seed: int = 0, record_edges: bool = False) -> GraphState:
    """Initial graph: one N-star (center 0, peripherals 1..N-1) of weight 1."""
    return GraphState(params, seed=seed, record_edges=record_edges)


def step(state: GraphState) -> StepKind:
    """Execute one evolution step and report which branch fired."""
    state._advance(1)
    return StepKind(int(state.meta[K.M_LAST]))


def run(config: SimConfig, state: Optional[GraphState] = None):
    """Run ``config.steps`` steps from a fresh state; returns ``(state, summary)``.

    With ``config.check_every_step`` the four conservation identities are
    recomputed from scratch after every step (slow; for audits).
    """
    if state is None:
        state = init(config.params, config.seed, config.record_edges)
    t0 = time.perf_counter()
    state._advance(config.steps, config.check_every_step)
    wall = time.perf_counter() - t0
    summary = RunSummary(
        steps=state.steps,
        vertices=state.vertex_count,
        nstars=state.nstar_count,
        n1stars=state.n1star_count,
        branch_counts=state.branch_counts,
        wall_time=wall,
        digest=state.digest(),
    )
    return state, summary


def check_invariants(state: GraphState, exhaustive: bool = False) -> None:
    """Raise :class:`InvariantViolation` if a conservation law is broken.

    ``exhaustive`` additionally verifies that every (N-1)-star's weight equals
    the summed weight of the N-stars containing it (O(total stars) in Python).
    """
    N, n_act = state.N, state.steps + 1
    checks = {
        "sum w1": (int(state.w1.sum()), n_act),
        "sum w2": (int(state.w2.sum()), (N - 1) * n_act),
        "N-star weight": (int(state.nstar_weights().sum()), n_act),
        "(N-1)-star weight": (int(state.n1star_weights().sum()), (N - 1) * n_act),
        "N-star sampler total": (state.nstar_total, n_act),
        "(N-1)-star sampler total": (state.n1star_total, (N - 1) * n_act),
        "vertices": (state.vertex_count, N + state.branch_counts["I/1"] + state.branch_counts["I/2"]),
    }
    for name, (got, want) in checks.items():
        if got != want:
            raise InvariantViolation(f"{name}: {got} != {want}")
    if not exhaustive:
        return
    expected = defaultdict(int)
    for key, w in zip(state.nstar_keys(), state.nstar_weights()):
        center, periph = int(key[0]), [int(v) for v in key[1:]]
        if center in periph or periph != sorted(set(periph)):
            raise InvariantViolation(f"malformed N-star key {key.tolist()}")
        for drop in range(len(periph)):
            expected[(center,) + tuple(periph[:drop] + periph[drop + 1:])] += int(w)
    found = {tuple(int(v) for v in k): int(w)
             for k, w in zip(state.n1star_keys(), state.n1star_weights())}
    if found != dict(expected):
        raise InvariantViolation("(N-1)-star weights differ from the sums over containing N-stars")

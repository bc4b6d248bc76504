"""Independent references for the closed-form kernels.

:func:`build_graph` discretizes ``F_i`` as a quantum graph: every cell is cut
into segments of length ``h``, junction points are single shared nodes, each
segment has conductance ``1 / (h N_i)`` and masses are lumped (``h / N_i`` at
interior nodes, half a segment per incident cell end at junctions).  The
density of ``exp(-t M^-1 K)`` against the node masses then approximates
``p_t^{F_i}`` to second order in ``h``.

:func:`random_walk_density` simulates the continuous-time walk generated by
the same matrix, by uniformization: every node has total jump rate ``2/h^2``
and jumps go to a uniformly chosen neighbour.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import CapacityError, DomainError
from .geometry import PointArray, junction_groups
from .params import ParameterSequences

MAX_NODES = 10_000


@dataclass
class DiscreteGraph:
    seq: ParameterSequences
    level: int
    h: float
    segments: int
    mass: np.ndarray
    stiffness: np.ndarray
    neighbors: np.ndarray
    degree: np.ndarray
    points: PointArray
    # Cell of each interior node, -1 at junctions.
    node_cell: np.ndarray
    # For junction nodes: incident cell per cell end (a cell may appear twice).
    junction_cells: list
    _eig: tuple | None = field(default=None, repr=False)

    @property
    def size(self) -> int:
        return len(self.mass)

    @property
    def n_interior(self) -> int:
        return int(np.count_nonzero(self.node_cell >= 0))

    def interior_node(self, cell: int, r: int) -> int:
        """Index of the ``r``-th interior node (``1 <= r < segments``) of ``cell``."""
        if not 1 <= r < self.segments:
            raise DomainError(f"interior node index must be in [1, {self.segments - 1}], got {r}")
        return cell * (self.segments - 1) + r - 1

    def generator(self) -> np.ndarray:
        """``-M^-1 K``; rows sum to zero."""
        return -self.stiffness / self.mass[:, None]

    def eigensystem(self):
        """Eigenpairs of ``M^-1/2 K M^-1/2`` (cached)."""
        if self._eig is None:
            s = 1.0 / np.sqrt(self.mass)
            lam, vec = np.linalg.eigh(self.stiffness * s[:, None] * s[None, :])
            self._eig = (np.maximum(lam, 0.0), vec)
        return self._eig


def build_graph(seq: ParameterSequences, i: int, h: float | None = None, segments: int | None = None) -> DiscreteGraph:
    """Quantum-graph discretization of ``F_i`` with ``L_i / h`` segments per cell."""
    seq._check(i)
    L = seq.L(i)
    if segments is None:
        if h is None or not h > 0:
            raise DomainError("give a positive h or a segment count")
        segments = round(L / h)
        if abs(segments * h - L) > 1e-9 * L:
            raise DomainError(f"h={h} does not divide the cell length {L}")
    if segments < 8:
        raise DomainError(f"h too coarse: need h <= L_i/8, got {segments} segments per cell")
    M = segments
    h = L / M
    n_cells, N = seq.n_cells(i), seq.N(i)
    groups = junction_groups(seq, i)
    n_int = n_cells * (M - 1)
    size = n_int + len(groups)
    if size > MAX_NODES:
        raise CapacityError(f"{size} nodes exceed the dense-solver cap of {MAX_NODES}")

    # Endpoint node of every cell end.
    start_node = np.empty(n_cells, dtype=np.int64)
    end_node = np.empty(n_cells, dtype=np.int64)
    mass = np.full(size, h / N)
    junction_cells = []
    arcs, thetas, labels = [], [], []
    for g_idx, g in enumerate(groups):
        node = n_int + g_idx
        start_node[g.starts] = node
        end_node[g.ends] = node
        mass[node] = g.degree * h / (2 * N)
        junction_cells.append(np.concatenate([g.starts, g.ends]))
        arcs.append(g.boundary)
        thetas.append(0.0)
        labels.append(g.prefix + (1,) * (i - len(g.prefix)))

    # Segment list: each cell is a path start -> interior nodes -> end.
    cells = np.arange(n_cells, dtype=np.int64)
    path = np.empty((n_cells, M + 1), dtype=np.int64)
    path[:, 0] = start_node
    path[:, M] = end_node
    path[:, 1:M] = cells[:, None] * (M - 1) + np.arange(M - 1)[None, :]
    a = path[:, :-1].reshape(-1)
    b = path[:, 1:].reshape(-1)
    c = 1.0 / (h * N)
    K = np.zeros((size, size))
    np.add.at(K, (a, b), -c)
    np.add.at(K, (b, a), -c)
    # Diagonal from the off-diagonal row sums keeps the generator conservative.
    K[np.diag_indices(size)] = 0.0
    K[np.diag_indices(size)] = -K.sum(axis=1)

    # Padded neighbour table (one entry per incident segment).
    both = np.concatenate([a, b])
    other = np.concatenate([b, a])
    order = np.argsort(both, kind="stable")
    degree = np.bincount(both, minlength=size)
    width = int(degree.max())
    neighbors = np.full((size, width), -1, dtype=np.int64)
    slot = np.arange(len(both)) - np.repeat(np.cumsum(degree) - degree, degree)
    neighbors[both[order], slot] = other[order]

    # Node positions, for comparison with closed forms.
    cell_labels = _cell_labels(seq, i)
    arc_all = np.concatenate([np.repeat(cells // N, M - 1), np.array(arcs, dtype=np.int64)])
    theta_all = np.concatenate([np.tile(np.arange(1, M) * h, n_cells), np.array(thetas)])
    lab_all = np.concatenate(
        [np.repeat(cell_labels, M - 1, axis=0), np.array(labels, dtype=np.int64).reshape(len(groups), i)]
    )
    points = PointArray(seq, i, arc_all, theta_all, lab_all)
    node_cell = np.concatenate([np.repeat(cells, M - 1), np.full(len(groups), -1, dtype=np.int64)])
    return DiscreteGraph(seq, i, h, M, mass, K, neighbors, degree, points, node_cell, junction_cells)


def _cell_labels(seq, i):
    n_cells, N = seq.n_cells(i), seq.N(i)
    out = np.empty((n_cells, i), dtype=np.int64)
    rest = np.arange(n_cells, dtype=np.int64) % N
    for lvl in range(i, 0, -1):
        rest, digit = np.divmod(rest, seq.n_at(lvl))
        out[:, lvl - 1] = digit + 1
    return out


def propagator(g: DiscreteGraph, t) -> np.ndarray:
    """``exp(-t M^-1 K)``; ``t`` may be complex with ``Re t >= 0``."""
    lam, vec = g.eigensystem()
    s = np.sqrt(g.mass)
    return (vec * np.exp(-t * lam)) @ vec.T / s[:, None] * s[None, :]


def matrix_exponential_density(g: DiscreteGraph, t, x=None, y=None):
    """``exp(-t M^-1 K)[x, y] / mass[y]``, a density against ``mu_i``.

    With ``x`` and ``y`` omitted the full node-by-node matrix is returned;
    either may be an index or an index array.
    """
    if isinstance(t, complex):
        if t.real < 0:
            raise DomainError(f"Re t must be non-negative, got {t}")
    elif not t > 0:
        raise DomainError(f"t must be positive, got {t}")
    lam, vec = g.eigensystem()
    d = 1.0 / np.sqrt(g.mass)
    rows = vec if x is None else vec[np.atleast_1d(x)]
    cols = vec if y is None else vec[np.atleast_1d(y)]
    out = (rows * np.exp(-t * lam)) @ cols.T
    out *= (d if x is None else d[np.atleast_1d(x)])[:, None]
    out *= (d if y is None else d[np.atleast_1d(y)])[None, :]
    if np.ndim(x) == 0 and x is not None and np.ndim(y) == 0 and y is not None:
        return out[0, 0].item()
    return out


def heat_trace(g: DiscreteGraph, t: float) -> float:
    lam, _ = g.eigensystem()
    return float(np.sum(np.exp(-t * lam)))


@dataclass
class WalkResult:
    counts: np.ndarray
    density: np.ndarray
    cell_occupancy: np.ndarray
    walkers: int
    jumps: int


def random_walk_density(
    g: DiscreteGraph, t: float, x: int, steps: int | None = None, walkers: int = 100_000, seed=0
) -> WalkResult:
    """Empirical transition density from node ``x`` after time ``t``.

    ``steps=None`` simulates the continuous-time chain exactly (Poisson number
    of jumps with mean ``2t/h^2``).  An integer runs that many discrete steps,
    each worth ``h^2/2`` of time.

    ``cell_occupancy`` splits walkers on a junction equally over its incident
    cell ends, matching the half-segment mass each end contributes.
    """
    if not t > 0:
        raise DomainError(f"t must be positive, got {t}")
    if walkers < 1:
        raise DomainError("need at least one walker")
    if not 0 <= x < g.size:
        raise DomainError(f"node {x} out of range")
    rng = np.random.default_rng(seed)
    if steps is None:
        jumps = rng.poisson(2.0 * t / g.h**2, size=walkers)
    else:
        jumps = np.full(walkers, int(steps))
    pos = np.full(walkers, x, dtype=np.int64)
    total = int(jumps.max()) if walkers else 0
    order = np.argsort(jumps)[::-1]
    pos = pos[order]
    remaining = jumps[order]
    active = walkers
    for s in range(total):
        while active and remaining[active - 1] <= s:
            active -= 1
        cur = pos[:active]
        pick = (rng.random(active) * g.degree[cur]).astype(np.int64)
        pos[:active] = g.neighbors[cur, pick]
    counts = np.bincount(pos, minlength=g.size)
    density = counts / (walkers * g.mass)
    occ = np.bincount(g.node_cell[g.node_cell >= 0], weights=counts[g.node_cell >= 0], minlength=g.seq.n_cells(g.level)).astype(float)
    n_int = g.n_interior
    for k, cells in enumerate(g.junction_cells):
        np.add.at(occ, cells, counts[n_int + k] / len(cells))
    return WalkResult(counts, density, occ, walkers, int(jumps.sum()))


def binomial_check(counts: np.ndarray, probs: np.ndarray, walkers: int, sigmas: float = 4.0):
    """``|count - W p| <= sigmas * sqrt(W p (1-p))`` per entry; returns (ok, z-scores)."""
    p = np.asarray(probs, dtype=float)
    sd = np.sqrt(walkers * p * (1 - p))
    z = (np.asarray(counts) - walkers * p) / np.where(sd > 0, sd, 1.0)
    return bool(np.all(np.abs(z) <= sigmas)), z


def relative_error(approx: np.ndarray, exact: np.ndarray) -> float:
    """``max |approx - exact| / max |exact|``."""
    return float(np.max(np.abs(approx - exact)) / np.max(np.abs(exact)))

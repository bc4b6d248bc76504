"""Functions on ``F_i``: midpoint quadrature, bundle projections, the heat
semigroup and its structural checks.

A :class:`GridField` stores ``m`` midpoint samples per level-``i`` cell,
cells in canonical order.  Node ``r`` of a cell sits at ``(r + 1/2) L_i / m``
and carries weight ``L_i / (N_i m)``, so the weights add up to ``2 pi``.

Fields given as grids are exact discrete objects; a :class:`SmoothField`
wraps a function that can be sampled on any grid, which is what refinement
studies need.
"""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import ConfigError, DomainError
from .fractal_kernel import kernel_matrix, kernel_pairs
from .geometry import Address, CellWord, PointArray, enumerate_cells, junction_groups, sample_point
from .params import ParameterSequences


def grid_points(seq: ParameterSequences, i: int, m: int) -> PointArray:
    """Midpoint nodes of every level-``i`` cell, cell-major."""
    if m < 1:
        raise DomainError(f"need at least one node per cell, got m={m}")
    n_cells, N = seq.n_cells(i), seq.N(i)
    cell = np.arange(n_cells, dtype=np.int64)
    arc = cell // N
    labels = np.empty((n_cells, i), dtype=np.int64)
    rest = cell % N
    for lvl in range(i, 0, -1):
        rest, digit = np.divmod(rest, seq.n_at(lvl))
        labels[:, lvl - 1] = digit + 1
    theta = (np.arange(m) + 0.5) * (seq.L(i) / m)
    return PointArray(
        seq,
        i,
        np.repeat(arc, m),
        np.tile(theta, n_cells),
        np.repeat(labels, m, axis=0),
    )


@dataclass(frozen=True)
class GridField:
    seq: ParameterSequences
    level: int
    values: np.ndarray
    continuous: bool = False

    def __post_init__(self):
        vals = np.asarray(self.values)
        if vals.ndim != 2 or vals.shape[0] != self.seq.n_cells(self.level):
            raise DomainError(
                f"values must have shape ({self.seq.n_cells(self.level)}, m), got {vals.shape}"
            )
        object.__setattr__(self, "values", vals)

    @property
    def m(self) -> int:
        return self.values.shape[1]

    @property
    def weight(self) -> float:
        return self.seq.L(self.level) / (self.seq.N(self.level) * self.m)

    @property
    def nodes(self) -> np.ndarray:
        return (np.arange(self.m) + 0.5) * (self.seq.L(self.level) / self.m)

    def points(self) -> PointArray:
        return grid_points(self.seq, self.level, self.m)

    def flat(self) -> np.ndarray:
        return self.values.reshape(-1)

    def like(self, values, continuous: bool | None = None) -> "GridField":
        cont = self.continuous if continuous is None else continuous
        return GridField(self.seq, self.level, np.asarray(values).reshape(self.values.shape), cont)

    @classmethod
    def from_function(cls, seq, i: int, m: int, func: Callable, continuous: bool = False) -> "GridField":
        """Sample ``func(points: PointArray) -> array`` at the grid nodes."""
        pts = grid_points(seq, i, m)
        return cls(seq, i, np.asarray(func(pts)).reshape(seq.n_cells(i), m), continuous)

    @classmethod
    def constant(cls, seq, i: int, m: int, c: float = 1.0) -> "GridField":
        return cls(seq, i, np.full((seq.n_cells(i), m), float(c)), True)

    def end_values(self):
        """One-sided quadratic extrapolation to ``theta = 0`` and ``theta = L_i``."""
        v = self.values
        if self.m < 3:
            return v[:, 0].copy(), v[:, -1].copy()
        # Nodes at 1/2, 3/2, 5/2 spacings from the end.
        left = (15 * v[:, 0] - 10 * v[:, 1] + 3 * v[:, 2]) / 8
        right = (15 * v[:, -1] - 10 * v[:, -2] + 3 * v[:, -3]) / 8
        return left, right

    def matching_defect(self) -> float:
        """Largest spread of extrapolated end values over one junction."""
        left, right = self.end_values()
        worst = 0.0
        for g in junction_groups(self.seq, self.level):
            vals = np.concatenate([left[g.starts], right[g.ends]])
            worst = max(worst, float(np.ptp(vals)))
        return worst

    def to_csv(self, path=None) -> str:
        """CSV with a ``# {json}`` metadata line and columns cell,node,theta,value."""
        seq, i = self.seq, self.level
        buf = io.StringIO()
        meta = {"level": i, "m": self.m, "params": seq.to_config(), "continuous": self.continuous}
        buf.write("# " + json.dumps(meta, sort_keys=True) + "\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["cell", "node", "theta", "value"])
        nodes = self.nodes
        for c, cell in enumerate(enumerate_cells(seq, i)):
            label = cell.label(seq)
            for r in range(self.m):
                w.writerow([label, r, repr(float(nodes[r])), repr(float(self.values[c, r]))])
        text = buf.getvalue()
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text)
        return text

    @classmethod
    def from_csv(cls, source) -> "GridField":
        text = source if "\n" in str(source) else open(source).read()
        lines = text.splitlines()
        if not lines or not lines[0].startswith("#"):
            raise ConfigError("grid CSV must start with a '# {json}' metadata line")
        meta = json.loads(lines[0][1:])
        seq = ParameterSequences.from_config(meta["params"])
        i, m = int(meta["level"]), int(meta["m"])
        rows = list(csv.DictReader(lines[1:]))
        if len(rows) != seq.n_cells(i) * m:
            raise ConfigError(f"expected {seq.n_cells(i) * m} rows, found {len(rows)}")
        values = np.array([float(r["value"]) for r in rows]).reshape(seq.n_cells(i), m)
        return cls(seq, i, values, bool(meta.get("continuous", False)))


@dataclass(frozen=True)
class SmoothField:
    """A function on level-``i`` points, sampled on demand."""

    seq: ParameterSequences
    level: int
    func: Callable = field(repr=False)

    def __call__(self, points: PointArray) -> np.ndarray:
        return np.asarray(self.func(points))

    def grid(self, m: int) -> GridField:
        return GridField.from_function(self.seq, self.level, m, self.func)


def random_smooth_field(seq: ParameterSequences, i: int, seed=0, modes: int = 2) -> SmoothField:
    """Independent low-frequency trigonometric polynomial on every cell."""
    rng = np.random.default_rng(seed)
    n_cells = seq.n_cells(i)
    a = rng.normal(size=(n_cells, modes + 1))
    b = rng.normal(size=(n_cells, modes + 1))
    L = seq.L(i)

    def f(points):
        cell = points.cell_id(i)
        theta = points.coords(i)[1]
        k = np.arange(modes + 1)
        phase = np.pi * np.outer(theta, k) / L
        return np.sum(a[cell] * np.cos(phase) + b[cell] * np.sin(phase), axis=1)

    return SmoothField(seq, i, f)


@dataclass(frozen=True)
class ProjectionSplit:
    sym: GridField
    anti: GridField


def integrate(f: GridField) -> float:
    return float(np.sum(f.values) * f.weight)


def cell_integrals(f: GridField) -> np.ndarray:
    """Integral of ``f`` over each cell."""
    return f.values.sum(axis=1) * f.weight


def inner(f: GridField, g: GridField) -> float:
    _same_grid(f, g)
    return float(np.sum(f.values * g.values) * f.weight)


def _same_grid(f: GridField, g: GridField) -> None:
    if f.level != g.level or f.m != g.m or f.seq != g.seq:
        raise DomainError("fields live on different grids")


def project_sym(f: GridField) -> ProjectionSplit:
    """Bundle average (``sym``) and its complement (``anti``)."""
    i = f.level
    if i == 0:
        return ProjectionSplit(f, f.like(np.zeros_like(f.values)))
    n = f.seq.n_at(i)
    grouped = f.values.reshape(-1, n, f.m)
    sym = np.broadcast_to(grouped.mean(axis=1, keepdims=True), grouped.shape).reshape(f.values.shape)
    return ProjectionSplit(f.like(sym.copy()), f.like(f.values - sym, continuous=False))


def _workers(workers):
    return max(1, int(workers)) if workers else 1


def apply_at(f: GridField, t, targets: PointArray, tol: float = 1e-12, workers=None, level: int | None = None):
    """``(T_t f)(x)`` at arbitrary points via quadrature over ``f``'s nodes."""
    if not (t > 0 if not isinstance(t, complex) else t.real > 0):
        raise DomainError(f"t must be positive, got {t}")
    lvl = f.level if level is None else level
    Y = f.points()
    fw = f.flat() * f.weight
    n = len(targets)
    rows = max(1, (1 << 21) // max(len(Y), 1))
    blocks = [slice(s, min(s + rows, n)) for s in range(0, n, rows)]

    def run(sl):
        sub = PointArray(f.seq, targets.level, targets.arc[sl], targets.theta[sl], targets.labels[sl])
        return kernel_matrix(f.seq, lvl, sub, Y, t, tol) @ fw

    k = _workers(workers)
    if k == 1 or len(blocks) == 1:
        parts = [run(sl) for sl in blocks]
    else:
        with ThreadPoolExecutor(k) as pool:
            parts = list(pool.map(run, blocks))
    return np.concatenate(parts) if parts else np.empty(0)


def apply_semigroup(f: GridField, t: float, tol: float = 1e-12, workers=None) -> GridField:
    """``T_t f`` on ``f``'s own nodes."""
    return f.like(apply_at(f, t, f.points(), tol, workers), continuous=True)


def pullback(f: GridField, i: int) -> GridField:
    """``f o phi_{ik}`` on the aligned level-``i`` grid.

    Each level-``k`` arc splits into ``n_arcs(i) / n_arcs(k)`` consecutive
    level-``i`` arcs, so ``f.m`` must be divisible by that ratio.
    """
    seq, k = f.seq, f.level
    if i < k:
        raise DomainError(f"cannot pull back from level {k} to the coarser level {i}")
    ratio = seq.n_arcs(i) // seq.n_arcs(k)
    if f.m % ratio:
        raise DomainError(f"m={f.m} is not divisible by the {ratio} level-{i} arcs per level-{k} arc; nodes would not align")
    m_i = f.m // ratio
    pts = grid_points(seq, i, m_i)
    cell_k = pts.cell_id(k)
    arc_k, theta_k = pts.coords(k)
    node = np.rint(theta_k / (seq.L(k) / f.m) - 0.5).astype(np.int64)
    vals = f.values[cell_k, node].reshape(seq.n_cells(i), m_i)
    return GridField(seq, i, vals, f.continuous)


def _lower(points: PointArray, k: int) -> PointArray:
    arc, theta = points.coords(k)
    return PointArray(points.seq, k, arc, theta, points.labels[:, :k])


def _lift(points: PointArray, i: int, w: int) -> PointArray:
    """Level-``i`` copies (label ``w`` at level ``i``) of level-``(i-1)`` points."""
    seq = points.seq
    j = seq.n_arcs(i) // seq.n_arcs(i - 1)
    L = seq.L(i)
    sub = np.minimum(np.floor(points.theta / L).astype(np.int64), j - 1)
    labels = np.concatenate([points.labels, np.full((len(points), 1), w, dtype=np.int64)], axis=1)
    return PointArray(seq, i, points.arc * j + sub, points.theta - sub * L, labels)


def _dirichlet_part(anti: GridField, t, tol: float):
    """Per-cell Dirichlet evolution of the antisymmetric part (Lebesgue weights)."""
    from .fractal_kernel import _dirichlet

    seq, i, m = anti.seq, anti.level, anti.m
    L = seq.L(i)
    th = anti.nodes
    D = np.asarray(_dirichlet(t, L, th[:, None], th[None, :], tol))
    return anti.values @ D.T * (L / m)


@dataclass
class DecompositionReport:
    residual: float
    lhs: np.ndarray
    symmetric_term: np.ndarray
    dirichlet_term: np.ndarray


def check_decomposition(f, t: float, m: int | None = None, tol: float = 1e-12) -> DecompositionReport:
    """Compare ``T_t f`` with the sum of the level-``(i-1)`` evolution of the
    bundle average and the per-cell Dirichlet evolution of the remainder.

    For a :class:`GridField` the lower-level term uses the aligned grid and
    the identity holds to rounding.  For a :class:`SmoothField` it uses an
    independent ``m``-node grid on the level-``(i-1)`` cells, so the residual
    measures quadrature error and shrinks like ``m^-2``.
    """
    if not t > 0:
        raise DomainError(f"t must be positive, got {t}")
    seq = f.seq
    i = f.level
    if i < 1:
        raise DomainError("the decomposition needs level >= 1")
    if isinstance(f, SmoothField):
        if m is None:
            raise DomainError("a SmoothField needs the node count m")
        g = f.grid(m)
    else:
        g = f
    X = g.points()
    lhs = apply_at(g, t, X, tol)
    split = project_sym(g)
    if isinstance(f, SmoothField):
        n = seq.n_at(i)
        coarse = grid_points(seq, i - 1, g.m)
        avg = sum(f(_lift(coarse, i, w)) for w in range(1, n + 1)) / n
        lower = GridField(seq, i - 1, np.asarray(avg).reshape(seq.n_cells(i - 1), g.m))
    else:
        lower = _restrict_sym(split.sym)
    sym_term = apply_at(lower, t, _lower(X, i - 1), tol)
    dir_term = _dirichlet_part(split.anti, t, tol).reshape(-1)
    resid = float(np.max(np.abs(lhs - sym_term - dir_term)))
    return DecompositionReport(resid, lhs, sym_term, dir_term)


def _restrict_sym(sym: GridField) -> GridField:
    """The level-``(i-1)`` field whose pullback is the bundle-symmetric ``sym``."""
    seq, i, m = sym.seq, sym.level, sym.m
    j, n = seq.n_arcs(i) // seq.n_arcs(i - 1), seq.n_at(i)
    # Canonical order: arc-major, w_i least significant.  A level-(i-1) cell
    # (arc a, labels u) covers level-i arcs a*j .. a*j+j-1 with labels u+(w,).
    N_prev = seq.N(i - 1)
    v = sym.values.reshape(seq.n_arcs(i - 1), j, N_prev, n, m)[:, :, :, 0, :]
    v = v.transpose(0, 2, 1, 3).reshape(seq.n_cells(i - 1), j * m)
    return GridField(seq, i - 1, v, sym.continuous)


def check_intertwining(f_k, i: int, t: float, m: int | None = None, tol: float = 1e-12, exact=None) -> dict:
    """Residual of ``T_t^{F_i} (f_k o phi) = (T_t^{F_k} f_k) o phi`` on the level-``i`` grid.

    ``f_k`` is a :class:`GridField` (aligned grids, exact up to rounding) or a
    :class:`SmoothField` sampled with ``m`` nodes per cell at both levels.
    ``exact(points)``, when given, is the known evolution used as a third
    reference.
    """
    if not t > 0:
        raise DomainError(f"t must be positive, got {t}")
    seq, k = f_k.seq, f_k.level
    if not k < i:
        raise DomainError(f"need k < i, got k={k}, i={i}")
    if isinstance(f_k, SmoothField):
        if m is None:
            raise DomainError("a SmoothField needs the node count m")
        fine = GridField.from_function(seq, i, m, lambda p: f_k(_lower(p, k)))
        coarse = f_k.grid(m)
    else:
        coarse = f_k
        fine = pullback(f_k, i)
    X = fine.points()
    up = apply_at(fine, t, X, tol)
    down = apply_at(coarse, t, _lower(X, k), tol)
    out = {"residual": float(np.max(np.abs(up - down)))}
    if exact is not None:
        ref = np.asarray(exact(X))
        out["residual_exact_fine"] = float(np.max(np.abs(up - ref)))
        out["residual_exact_coarse"] = float(np.max(np.abs(down - ref)))
    return out


def sample_pairs(seq: ParameterSequences, i: int, count: int, seed=0, diagonal: int = 4):
    """Random level-``i`` point pairs, the first ``diagonal`` with ``x = y``."""
    rng = np.random.default_rng(seed)
    xs, ys = [], []
    for c in range(count):
        x = sample_point(seq, rng, i)
        if c < diagonal:
            y = x
        elif c % 2:
            # Same bundle at level i: share every label but the last.
            y = sample_point(seq, rng, i)
            lo = math.floor(x.eta * seq.J(i) / math.pi) * seq.L(i) if i else 0.0
            eta = lo + rng.uniform(0, seq.L(i)) if i else y.eta
            y = Address.radians(eta, x.branches[:-1] + y.branches[-1:] if i else ())
        else:
            y = sample_point(seq, rng, i)
        xs.append(x)
        ys.append(y)
    return PointArray.from_addresses(seq, xs, i), PointArray.from_addresses(seq, ys, i)


def check_mass(seq: ParameterSequences, i: int, t: float, m: int, samples: int = 16, seed=0, tol=1e-12) -> float:
    """``max_x |integral p_t(x, .) dmu_i - 1|`` by quadrature."""
    X, _ = sample_pairs(seq, i, samples, seed, diagonal=0)
    one = GridField.constant(seq, i, m)
    return float(np.max(np.abs(apply_at(one, t, X, tol) - 1.0)))


def check_chapman_kolmogorov(seq: ParameterSequences, i: int, t: float, s: float, m: int, samples: int = 16, seed=0, tol=1e-12) -> float:
    """``max |integral p_t(x,z) p_s(z,y) dmu_i(z) - p_{t+s}(x,y)|`` over sampled pairs."""
    if not (t > 0 and s > 0):
        raise DomainError("t and s must be positive")
    X, Y = sample_pairs(seq, i, samples, seed)
    Z = grid_points(seq, i, m)
    w = seq.L(i) / (seq.N(i) * m)
    A = kernel_matrix(seq, i, X, Z, t, tol)
    B = kernel_matrix(seq, i, Y, Z, s, tol)
    lhs = np.sum(A * B, axis=1) * w
    rhs = kernel_pairs(seq, i, X, Y, t + s, tol)
    return float(np.max(np.abs(lhs - rhs)))


def dirichlet_energy(f: GridField, g: GridField) -> float:
    """``sum_cells (1/N_i) integral f' g'`` with second-order differences inside cells."""
    _same_grid(f, g)
    if f.m < 3:
        raise DomainError("energy needs at least 3 nodes per cell")
    h = f.seq.L(f.level) / f.m
    df = np.gradient(f.values, h, axis=1, edge_order=2)
    dg = np.gradient(g.values, h, axis=1, edge_order=2)
    return float(np.sum(df * dg) * h / f.seq.N(f.level))


def heat_solve(u0: GridField, t: float, points, tol: float = 1e-12, workers=None) -> np.ndarray:
    """``u(t, x) = integral p_t(x, y) u0(y) dmu_i(y)`` at the given addresses."""
    if not t > 0:
        raise DomainError(f"t must be positive, got {t}")
    if isinstance(points, PointArray):
        X = points if points.level == u0.level else _lower(points, u0.level)
    else:
        X = PointArray.from_addresses(u0.seq, list(points), u0.level)
    return apply_at(u0, t, X, tol, workers)


def cos_pullback(seq: ParameterSequences, i: int, m: int, t: float = 0.0) -> GridField:
    """``e^{-t} cos(eta)`` pulled back to level ``i``; evolves by the circle semigroup."""
    return GridField.from_function(seq, i, m, lambda p: math.exp(-t) * np.cos(p.eta()), continuous=True)

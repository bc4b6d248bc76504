"""Words, cells and bundles of the diamond inverse-limit system.

A point of ``F_i`` is a word ``eta w_1 ... w_l``: an angle on the base circle
followed by branch labels.  Angles are kept as exact multiples of pi
(:class:`fractions.Fraction`) whenever possible, so junction membership is
decided in exact arithmetic; a bare float angle is treated as a generic,
non-junction point.

Level-``i`` base arcs are numbered ``a = 0 .. 2*J_i - 1`` and cover
``[a*L_i, (a+1)*L_i)``.  A cell is an arc plus ``i`` labels.  Cells are
ordered arc-major with ``w_1`` the most significant label, which is also the
lexicographic order used to pick the cell of a junction point.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple

import numpy as np

from .errors import CapacityError, ConfigError, DomainError
from .params import ParameterSequences

# Arc and cell indices in vectorized code are int64.
_INDEX_LIMIT = 2**62


@dataclass(frozen=True)
class Address:
    """A point ``eta w_1 ... w_l``.

    Exactly one of ``eta_pi`` (angle divided by pi, in ``[0, 2)``) or
    ``eta_rad`` (radians, in ``[0, 2*pi)``) is authoritative: ``eta_pi`` when
    it is not None.
    """

    eta_pi: Fraction | None
    eta_rad: float
    branches: tuple[int, ...] = ()

    def __post_init__(self):
        if self.eta_pi is not None:
            frac = Fraction(self.eta_pi) % 2
            object.__setattr__(self, "eta_pi", frac)
            object.__setattr__(self, "eta_rad", math.pi * float(frac))
        else:
            rad = math.fmod(float(self.eta_rad), 2 * math.pi)
            if rad < 0:
                rad += 2 * math.pi
            if rad >= 2 * math.pi:
                rad = 0.0
            object.__setattr__(self, "eta_rad", rad)
        branches = tuple(int(w) for w in self.branches)
        if any(w < 1 for w in branches):
            raise DomainError(f"branch labels start at 1, got {branches}")
        object.__setattr__(self, "branches", branches)

    @classmethod
    def exact(cls, num: int, den: int = 1, branches=()) -> "Address":
        """Point at angle ``pi * num / den``."""
        return cls(Fraction(num, den), 0.0, tuple(branches))

    @classmethod
    def radians(cls, eta: float, branches=()) -> "Address":
        return cls(None, eta, tuple(branches))

    @property
    def eta(self) -> float:
        return self.eta_rad

    @property
    def level(self) -> int:
        return len(self.branches)

    def to_json(self) -> dict:
        out = {"eta_real": self.eta_rad, "w": list(self.branches)}
        if self.eta_pi is not None:
            out = {"eta_num": self.eta_pi.numerator, "eta_den": self.eta_pi.denominator, **out}
        return out

    @classmethod
    def from_json(cls, obj: dict) -> "Address":
        branches = obj.get("w", [])
        if "eta_num" in obj:
            return cls.exact(int(obj["eta_num"]), int(obj.get("eta_den", 1)), branches)
        if "eta_real" in obj:
            return cls.radians(float(obj["eta_real"]), branches)
        raise ConfigError("address needs eta_num/eta_den or eta_real")

    @classmethod
    def parse(cls, text: str) -> "Address":
        """Parse ``"p/q:w1,w2,..."`` (angle pi*p/q) or ``"r:w1,..."`` (radians)
        or a JSON object."""
        import json

        text = text.strip()
        if text.startswith("{"):
            try:
                return cls.from_json(json.loads(text))
            except json.JSONDecodeError as exc:
                raise ConfigError(f"invalid address JSON: {exc}") from None
        angle, _, labels = text.partition(":")
        try:
            branches = tuple(int(w) for w in labels.split(",") if w.strip())
            if "/" in angle:
                num, den = angle.split("/")
                return cls.exact(int(num), int(den), branches)
            return cls.radians(float(angle), branches)
        except ValueError:
            raise ConfigError(
                f"cannot parse address {text!r}; use 'p/q:w1,w2' (angle pi*p/q) or 'radians:w1,w2'"
            ) from None


@dataclass(frozen=True)
class CellWord:
    """The cell ``(base arc, w_1 .. w_i)`` of ``F_i``; ``arc = 0`` at level 0 is the circle."""

    arc: int
    branches: tuple[int, ...]
    level: int

    def base_pi(self, seq: ParameterSequences) -> Fraction:
        return Fraction(0) if self.level == 0 else Fraction(self.arc, seq.J(self.level))

    def base(self, seq: ParameterSequences) -> float:
        return math.pi * float(self.base_pi(seq))

    def label(self, seq: ParameterSequences) -> str:
        if self.level == 0:
            return "0:"
        b = self.base_pi(seq)
        return f"{b.numerator}/{b.denominator}:" + ".".join(str(w) for w in self.branches)


class CellCoord(NamedTuple):
    theta: float
    cell: CellWord


class PairConfig(enum.Enum):
    DIFFERENT_BUNDLE = "DifferentBundle"
    SAME_BUNDLE_DIFFERENT_STRAND = "SameBundleDifferentStrand"
    SAME_STRAND = "SameStrand"


class BundleDepth(NamedTuple):
    level: int
    saturated: bool


def junction_angles(seq: ParameterSequences, i: int, cumulative: bool = False) -> list[Fraction]:
    """Junction angles, as multiples of pi, that first appear at level ``i``.

    With ``cumulative=True`` returns the union over levels ``0..i``, i.e.
    every ``k / J_i`` with ``0 <= k < 2 J_i``.
    """
    J = seq.J(i)
    if i == 0:
        return [Fraction(0), Fraction(1)]
    if cumulative:
        return [Fraction(k, J) for k in range(2 * J)]
    j = seq.j_at(i)
    return [Fraction(k, J) for k in range(1, 2 * J) if k % j]


def junction_level(seq: ParameterSequences, x: Address) -> int | None:
    """Smallest level whose junction set contains ``x``'s angle, or None."""
    if x.eta_pi is None:
        return None
    for lvl in range(seq.depth + 1):
        if (x.eta_pi * seq.J(lvl)).denominator == 1:
            return lvl
    return None


def resolution(seq: ParameterSequences, x: Address) -> int:
    """Deepest level at which ``x`` is fully determined."""
    jl = junction_level(seq, x)
    if jl is not None and len(x.branches) >= max(jl - 1, 0):
        return seq.depth
    return min(len(x.branches), seq.depth)


def _check_valid(seq: ParameterSequences, x: Address, i: int) -> None:
    if resolution(seq, x) < i:
        raise DomainError(
            f"address with {len(x.branches)} labels is not a point of level {i}; "
            "supply more labels or project first"
        )


def _arc_and_theta(seq: ParameterSequences, x: Address, i: int) -> tuple[int, float]:
    if i == 0:
        return 0, x.eta_rad
    J = seq.J(i)
    if x.eta_pi is not None:
        scaled = x.eta_pi * J
        arc = math.floor(scaled)
        return arc, math.pi * float(scaled - arc) / J
    arc = math.floor(x.eta_rad * J / math.pi)
    arc = min(max(arc, 0), 2 * J - 1)
    theta = x.eta_rad - arc * math.pi / J
    return arc, min(max(theta, 0.0), math.pi / J)


def _labels(seq: ParameterSequences, x: Address, i: int) -> tuple[int, ...]:
    # Junction points carry short words; pad with label 1 (lexicographic minimum).
    jl = junction_level(seq, x)
    if jl is not None and jl <= i:
        word = x.branches[: max(jl - 1, 0)]
        return word + (1,) * (i - len(word))
    return x.branches[:i]


def project(x: Address, k: int) -> Address:
    """Shorten the word of ``x`` to at most ``k`` labels."""
    if k < 0:
        raise DomainError(f"projection level must be >= 0, got {k}")
    if len(x.branches) <= k:
        return x
    return Address(x.eta_pi, x.eta_rad, x.branches[:k])


def canonical(seq: ParameterSequences, x: Address) -> Address:
    """Drop labels that a junction point does not carry."""
    jl = junction_level(seq, x)
    if jl is not None and len(x.branches) > max(jl - 1, 0):
        return project(x, max(jl - 1, 0))
    return x


def locate(seq: ParameterSequences, x: Address, i: int) -> CellCoord:
    """Local coordinate and cell of ``x`` at level ``i``."""
    _check_valid(seq, x, i)
    arc, theta = _arc_and_theta(seq, x, i)
    return CellCoord(theta, CellWord(arc, _labels(seq, x, i), i))


def bundle(seq: ParameterSequences, x: Address, i: int) -> list[CellWord]:
    """The ``n_i`` cells sharing the start point of ``x``'s cell."""
    cell = locate(seq, x, i).cell
    if i == 0:
        return [cell]
    prefix = cell.branches[:-1]
    return [CellWord(cell.arc, prefix + (w,), i) for w in range(1, seq.n_at(i) + 1)]


def enumerate_cells(seq: ParameterSequences, i: int) -> list[CellWord]:
    """All cells of level ``i`` in canonical order."""
    import itertools

    labels = list(itertools.product(*(range(1, seq.n_at(k) + 1) for k in range(1, i + 1))))
    return [CellWord(a, w, i) for a in range(seq.n_arcs(i)) for w in labels]


def classify_pair(seq: ParameterSequences, x: Address, y: Address, i: int) -> PairConfig:
    if i == 0:
        return PairConfig.SAME_STRAND
    cx, cy = locate(seq, x, i).cell, locate(seq, y, i).cell
    if cx == cy:
        return PairConfig.SAME_STRAND
    if cx.arc == cy.arc and cx.branches[:-1] == cy.branches[:-1]:
        return PairConfig.SAME_BUNDLE_DIFFERENT_STRAND
    return PairConfig.DIFFERENT_BUNDLE


def deepest_common_bundle(seq: ParameterSequences, x: Address, y: Address, cap: int | None = None) -> BundleDepth:
    """Deepest level at which ``x`` and ``y`` lie in cells of one bundle.

    ``cap`` is further limited by how deep the two addresses are resolved.
    If the points still share a strand at the cap, the maximum is not
    attained and the result is flagged ``saturated``.
    """
    cap = seq.depth if cap is None else cap
    seq._check(cap)
    cap = min(cap, resolution(seq, x), resolution(seq, y))
    for i in range(1, cap + 1):
        tag = classify_pair(seq, x, y, i)
        if tag is PairConfig.DIFFERENT_BUNDLE:
            return BundleDepth(i - 1, False)
        if tag is PairConfig.SAME_BUNDLE_DIFFERENT_STRAND:
            return BundleDepth(i, False)
    return BundleDepth(cap, True)


def sample_point(seq: ParameterSequences, seed, depth: int | None = None) -> Address:
    """Draw a point distributed as the normalized measure on depth-``depth`` cylinders."""
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    depth = seq.depth if depth is None else depth
    seq._check(depth)
    eta = rng.uniform(0.0, 2 * math.pi)
    branches = tuple(int(rng.integers(1, seq.n_at(k) + 1)) for k in range(1, depth + 1))
    return Address.radians(eta, branches)


class PointArray:
    """Vectorized points of ``F_r`` stored as (arc, theta, labels) at level ``r``.

    Coordinates at any coarser level ``k <= r`` are derived with integer
    arithmetic, so grid nodes never suffer float re-binning.
    """

    def __init__(self, seq: ParameterSequences, level: int, arc, theta, labels):
        if seq.n_cells(level) >= _INDEX_LIMIT:
            raise CapacityError(f"level {level} has too many cells for vectorized evaluation")
        self.seq = seq
        self.level = level
        self.arc = np.asarray(arc, dtype=np.int64)
        self.theta = np.asarray(theta, dtype=float)
        self.labels = np.asarray(labels, dtype=np.int64).reshape(len(self.arc), level)

    def __len__(self):
        return len(self.arc)

    @classmethod
    def from_addresses(cls, seq: ParameterSequences, points, level: int) -> "PointArray":
        arcs, thetas, labels = [], [], []
        for x in points:
            coord = locate(seq, x, level)
            arcs.append(coord.cell.arc)
            thetas.append(coord.theta)
            labels.append(coord.cell.branches)
        return cls(seq, level, arcs, thetas, np.array(labels, dtype=np.int64).reshape(len(arcs), level))

    def coords(self, k: int):
        """``(arc_k, theta_k)`` at level ``k <= level``."""
        seq = self.seq
        if k == self.level:
            return self.arc, self.theta
        if k == 0:
            return np.zeros_like(self.arc), self.arc * seq.L(self.level) + self.theta
        ratio = seq.J(self.level) // seq.J(k)
        arc_k, sub = np.divmod(self.arc, ratio)
        return arc_k, sub * seq.L(self.level) + self.theta

    def _radix(self, k: int):
        out = np.zeros(len(self), dtype=np.int64)
        for lvl in range(1, k + 1):
            out = out * self.seq.n_at(lvl) + (self.labels[:, lvl - 1] - 1)
        return out

    def cell_id(self, k: int):
        """Index of the level-``k`` cell in canonical order."""
        arc_k, _ = self.coords(k)
        return arc_k * self.seq.N(k) + self._radix(k)

    def bundle_id(self, k: int):
        """Identifies the level-``k`` bundle (shared start point); ``k >= 1``."""
        arc_k, _ = self.coords(k)
        return arc_k * self.seq.N(k - 1) + self._radix(k - 1)

    def eta(self):
        return self.coords(0)[1]


@dataclass(frozen=True)
class JunctionGroup:
    """Cell ends glued at one junction point of ``F_i``.

    ``starts`` lists cells whose ``theta = 0`` end lies here, ``ends`` cells
    whose ``theta = L_i`` end lies here (canonical cell indices).
    """

    boundary: int
    junction_level: int
    prefix: tuple[int, ...]
    starts: np.ndarray
    ends: np.ndarray

    @property
    def degree(self) -> int:
        return len(self.starts) + len(self.ends)


def _boundary_level(seq: ParameterSequences, i: int, k: int) -> int:
    J = seq.J(i)
    for lvl in range(i + 1):
        if (k * seq.J(lvl)) % J == 0:
            return lvl
    return i


def junction_groups(seq: ParameterSequences, i: int) -> list[JunctionGroup]:
    """All junction points of ``F_i`` with their incident cell ends.

    A junction of level ``l`` carries the labels ``w_1 .. w_{l-1}`` only, so it
    glues every cell sharing that prefix: ``2 n_i`` ends when ``l = i`` and
    more for older junctions.
    """
    import itertools

    n_arcs, N = seq.n_arcs(i), seq.N(i)
    groups = []
    for k in range(n_arcs):
        lvl = _boundary_level(seq, i, k)
        p = max(lvl - 1, 0)
        block = N // seq.N(p)
        prev = (k - 1) % n_arcs
        for q, prefix in enumerate(itertools.product(*(range(1, seq.n_at(r) + 1) for r in range(1, p + 1)))):
            offs = q * block + np.arange(block, dtype=np.int64)
            groups.append(JunctionGroup(k, lvl, tuple(prefix), k * N + offs, prev * N + offs))
    return groups

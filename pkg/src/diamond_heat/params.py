"""Branching parameters of a generalized diamond lattice.

A diamond system is fixed by two integer sequences ``j`` (bonds per branch)
and ``n`` (parallel branches), both indexed from level 1.  Level 0 carries
``j_0 = n_0 = 1`` implicitly.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

from .errors import CapacityError, ConfigError, DomainError, LevelRangeError

# J_i, N_i and the cell count 2 J_i N_i must fit a signed 128-bit integer.
INT_WIDTH_BITS = 127


@dataclass(frozen=True)
class ParameterSequences:
    """Validated sequences ``j`` and ``n`` with cumulative products.

    ``depth`` is the deepest level the instance supports; it equals
    ``len(j)``.  Cumulative products are computed once at construction and
    rejected with :class:`CapacityError` if they leave the 128-bit range.
    """

    j: tuple[int, ...]
    n: tuple[int, ...]
    _J: tuple[int, ...] = field(init=False, repr=False, compare=False)
    _N: tuple[int, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        j = tuple(int(v) for v in self.j)
        n = tuple(int(v) for v in self.n)
        if len(j) != len(n):
            raise ConfigError(f"j and n must have equal length, got {len(j)} and {len(n)}")
        for lvl, (jj, nn) in enumerate(zip(j, n), start=1):
            if jj < 2 or nn < 2:
                raise DomainError(f"level {lvl}: need j >= 2 and n >= 2, got j={jj}, n={nn}")
        J, N = [1], [1]
        for lvl, (jj, nn) in enumerate(zip(j, n), start=1):
            J.append(J[-1] * jj)
            N.append(N[-1] * nn)
            if (2 * J[-1] * N[-1]).bit_length() > INT_WIDTH_BITS:
                raise CapacityError(
                    f"cell count 2*J_{lvl}*N_{lvl} exceeds {INT_WIDTH_BITS}-bit integers; "
                    f"reduce depth to at most {lvl - 1}"
                )
        object.__setattr__(self, "j", j)
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "_J", tuple(J))
        object.__setattr__(self, "_N", tuple(N))

    @classmethod
    def constant(cls, j: int, n: int, depth: int) -> "ParameterSequences":
        if depth < 0:
            raise DomainError(f"depth must be non-negative, got {depth}")
        return cls((j,) * depth, (n,) * depth)

    @classmethod
    def from_config(cls, config) -> "ParameterSequences":
        """Build from ``{"j": [...], "n": [...]}`` or
        ``{"j_const": k, "n_const": m, "depth": d}``."""
        if not isinstance(config, dict):
            raise ConfigError("parameter config must be a JSON object")
        if "j" in config or "n" in config:
            try:
                return cls(tuple(config["j"]), tuple(config["n"]))
            except KeyError as exc:
                raise ConfigError(f"missing key {exc.args[0]!r} in list-form parameters") from None
        try:
            return cls.constant(int(config["j_const"]), int(config["n_const"]), int(config["depth"]))
        except KeyError as exc:
            raise ConfigError(
                f"missing key {exc.args[0]!r}; expected {{'j':[...],'n':[...]}} "
                "or {'j_const':k,'n_const':m,'depth':d}"
            ) from None

    @classmethod
    def load(cls, source: str) -> "ParameterSequences":
        """Parse an inline JSON string or read a JSON file path."""
        text = source.strip()
        if not text.startswith("{"):
            path = Path(source)
            if not path.is_file():
                raise ConfigError(f"parameter source {source!r} is neither JSON nor a readable file")
            text = path.read_text()
        try:
            config = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid parameter JSON: {exc}") from None
        return cls.from_config(config)

    def to_config(self) -> dict:
        return {"j": list(self.j), "n": list(self.n)}

    @property
    def depth(self) -> int:
        return len(self.j)

    def _check(self, i: int) -> None:
        if not 0 <= i <= self.depth:
            raise LevelRangeError(f"level {i} outside 0..{self.depth}")

    def j_at(self, i: int) -> int:
        self._check(i)
        return 1 if i == 0 else self.j[i - 1]

    def n_at(self, i: int) -> int:
        self._check(i)
        return 1 if i == 0 else self.n[i - 1]

    def J(self, i: int) -> int:
        self._check(i)
        return self._J[i]

    def N(self, i: int) -> int:
        self._check(i)
        return self._N[i]

    def L(self, i: int) -> float:
        """Cell length; the whole circle ``2*pi`` at level 0."""
        self._check(i)
        return 2 * math.pi if i == 0 else math.pi / self._J[i]

    def n_arcs(self, i: int) -> int:
        """Number of distinct base arcs of length ``L(i)`` around the circle."""
        self._check(i)
        return 1 if i == 0 else 2 * self._J[i]

    def n_cells(self, i: int) -> int:
        return self.n_arcs(i) * self.N(i)

    def extended(self, extra: int) -> "ParameterSequences":
        """Continue the sequences ``extra`` levels by repeating the last pair.

        Used only to estimate truncation tails beyond the configured depth.
        """
        if self.depth == 0:
            raise DomainError("cannot extend an empty parameter sequence")
        # Stop early rather than overflow: deeper tail terms are zero in double precision.
        j, n = list(self.j), list(self.n)
        J, N = self._J[-1], self._N[-1]
        for _ in range(extra):
            J *= j[-1]
            N *= n[-1]
            if (2 * J * N).bit_length() > INT_WIDTH_BITS:
                break
            j.append(j[-1])
            n.append(n[-1])
        return ParameterSequences(tuple(j), tuple(n))


def cumulative(seq: ParameterSequences, i: int) -> tuple[int, int, float]:
    """Return ``(J_i, N_i, L_i)``; ``L_0 = 2*pi`` by convention."""
    return seq.J(i), seq.N(i), seq.L(i)


@dataclass(frozen=True)
class AssumptionReport:
    """Finite-horizon diagnostics for the growth condition on ``N_i exp(-J_i^2 t)``.

    ``ok`` is the verdict for the time-dependent tail, ``proxy_ok`` the same
    verdict for the time-independent sufficient sequence ``N_i exp(-J_i)``.
    """

    t: float
    tail: list[float]
    ok: bool
    proxy: list[float]
    proxy_ok: bool


def _eventually_decreasing(values: list[float]) -> bool:
    if len(values) <= 1:
        return True
    peak = max(range(len(values)), key=values.__getitem__)
    if peak == len(values) - 1:
        return False
    return all(b <= a for a, b in zip(values[peak:], values[peak + 1:]))


def _scaled_exp(N: int, exponent: float) -> float:
    # N * exp(-exponent) without overflowing float(N) for very wide N.
    try:
        return float(N) * math.exp(-exponent)
    except OverflowError:
        return math.exp(math.log(N) - exponent)


def check_assumption(seq: ParameterSequences, t: float, horizon: int | None = None) -> AssumptionReport:
    """Inspect ``N_i exp(-J_i^2 t)`` for ``i <= horizon``.

    The sequence is judged eventually decreasing when it is non-increasing
    after its maximum and the maximum is not the final inspected entry.
    This is only a finite proxy for boundedness of the limit.
    """
    if not t > 0:
        raise DomainError(f"t must be positive, got {t}")
    horizon = seq.depth if horizon is None else horizon
    seq._check(horizon)
    tail = [_scaled_exp(seq.N(i), seq.J(i) ** 2 * t) for i in range(horizon + 1)]
    proxy = [_scaled_exp(seq.N(i), seq.J(i)) for i in range(horizon + 1)]
    return AssumptionReport(t, tail, _eventually_decreasing(tail), proxy, _eventually_decreasing(proxy))


def hausdorff_dimension(j: int, n: int) -> float:
    """Hausdorff dimension ``1 + log n / log j`` of the constant-parameter fractal."""
    if j < 2:
        raise DomainError(f"j must be >= 2, got {j}")
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")
    if n == 1:
        return 1.0
    # Exact when n is an integral power of j, e.g. (2, 4) -> 3.0.
    power, k = 1, 0
    while power < n:
        power *= j
        k += 1
    if power == n:
        return float(1 + k)
    return 1.0 + math.log(n) / math.log(j)

"""Heat kernels on the level spaces ``F_i`` and on the limit fractal.

The level-``i`` kernel is the circle kernel of the base angles plus one
Dirichlet-interval correction per level ``k <= i`` at which the two points
share a bundle:

    p_i(x, y) = p_circle(eta_x, eta_y) + sum_k c_k N_{k-1} D_{L_k}(theta_x^k, theta_y^k)

with ``c_k = n_k - 1`` on a common strand, ``-1`` on sibling strands and 0
otherwise.  Three evaluation routes exist: the scalar unrolled sum
(:func:`heat_kernel_level`), the recursion through projected addresses with
circle-kernel differences (:func:`heat_kernel_level_recursive`), and the
vectorized grid evaluator (:func:`kernel_matrix`, :func:`kernel_pairs`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernel1d
from .errors import DomainError, InsufficientDepthError
from .geometry import (
    Address,
    PairConfig,
    PointArray,
    classify_pair,
    deepest_common_bundle,
    junction_level,
    locate,
    project,
    resolution,
)
from .kernel1d import EvalOptions, Method
from .params import ParameterSequences

# Levels examined past the configured depth when bounding the limit tail.
GUARD_LEVELS = 32


@dataclass
class KernelResult:
    value: float | complex
    levels_used: int
    tail_bound: float = 0.0
    correction_trace: list = field(default_factory=list)
    i_star: int | None = None
    saturated: bool = False
    eps: float | None = None

    def to_json(self) -> dict:
        out = {
            "levels_used": self.levels_used,
            "tail_bound": self.tail_bound,
            "i_star": self.i_star,
            "saturated": self.saturated,
        }
        if isinstance(self.value, complex):
            out.update(re=self.value.real, im=self.value.imag, abs2=abs(self.value) ** 2, eps=self.eps)
        else:
            out["value"] = self.value
        return out


def _coefficient(tag: PairConfig, n_k: int) -> int:
    if tag is PairConfig.SAME_STRAND:
        return n_k - 1
    if tag is PairConfig.SAME_BUNDLE_DIFFERENT_STRAND:
        return -1
    return 0


def _check_time(t) -> None:
    if isinstance(t, complex):
        if not t.real > 0:
            raise DomainError(f"complex time needs a positive real part, got {t}")
    elif not t > 0:
        raise DomainError(f"t must be positive, got {t}")


def _circle(t, a, b, tol, method=Method.AUTO):
    if isinstance(t, complex):
        return kernel1d.circle_kernel_complex(t, a, b, EvalOptions(tol, method))
    return kernel1d._circle(t, a, b, EvalOptions(tol, method))


def _dirichlet(t, L, a, b, tol, method=Method.AUTO):
    if isinstance(t, complex):
        return kernel1d.dirichlet_kernel_complex(t, L, a, b, EvalOptions(tol, method))
    return kernel1d._dirichlet(t, L, a, b, EvalOptions(tol, method))


def uniform_bound(seq: ParameterSequences, i: int, t: float) -> float:
    """Bound ``N_i J_i (1 + 1/(J_i^2 t)) exp(-J_i^2 t)`` on one level's correction."""
    if not t > 0:
        raise DomainError(f"t must be positive, got {t}")
    if i < 1:
        raise DomainError(f"level must be >= 1, got {i}")
    J, N = seq.J(i), seq.N(i)
    a = J * J * t
    log_b = math.log(N) + math.log(J) + math.log1p(1 / a) - a
    return math.exp(log_b) if log_b > -745 else 0.0


def limit_tail(seq: ParameterSequences, level: int, t: float) -> float:
    """Sum of :func:`uniform_bound` over all levels deeper than ``level``.

    Levels past ``seq.depth`` repeat the last parameter pair for at most
    :data:`GUARD_LEVELS` steps.
    """
    ext = seq.extended(GUARD_LEVELS) if seq.depth else seq
    total = 0.0
    for k in range(level + 1, ext.depth + 1):
        term = uniform_bound(ext, k, t)
        total += term
    return total


def _validate(seq, i, *points):
    seq._check(i)
    for x in points:
        if resolution(seq, x) < i:
            raise DomainError(f"address {x} is not resolved at level {i}")


def heat_kernel_level(seq: ParameterSequences, i: int, x: Address, y: Address, t, tol: float = 1e-12) -> KernelResult:
    """Kernel on ``F_i`` via the unrolled correction sum.

    ``t`` may be complex (``Re t > 0``).  Level ``k`` gets ``tol / 2^(k+1)``
    of the tolerance, divided by its largest multiplicity, so
    ``|value - exact| <= tol`` and the terms do not depend on ``i``.
    """
    _check_time(t)
    _validate(seq, i, x, y)
    value = _circle(t, x.eta_rad, y.eta_rad, _share(tol, 0))
    trace = []
    for k in range(1, i + 1):
        tag = classify_pair(seq, x, y, k)
        if tag is PairConfig.DIFFERENT_BUNDLE:
            # Bundles nest: every deeper level is a different bundle too.
            trace.extend([0.0] * (i - k + 1))
            break
        mult = _coefficient(tag, seq.n_at(k)) * seq.N(k - 1)
        tx, ty = locate(seq, x, k).theta, locate(seq, y, k).theta
        term = mult * _dirichlet(t, seq.L(k), tx, ty, _level_tol(seq, k, tol))
        trace.append(term)
        value += term
    return KernelResult(value, i, 0.0, trace)


def heat_kernel_level_recursive(seq: ParameterSequences, i: int, x: Address, y: Address, t, tol: float = 1e-12):
    """Kernel on ``F_i`` by recursion over projections, using
    ``D_{L_i}(a, b) = J_i (p_circle(J_i^2 t, J_i a, J_i b) - p_circle(J_i^2 t, J_i a, -J_i b))``."""
    _check_time(t)
    _validate(seq, i, x, y)
    return _recurse(seq, i, x, y, t, tol)


def _recurse(seq, i, x, y, t, tol):
    if i == 0:
        return _circle(t, x.eta_rad, y.eta_rad, _share(tol, 0))
    lower = _recurse(seq, i - 1, project(x, i - 1), project(y, i - 1), t, tol)
    tag = classify_pair(seq, x, y, i)
    if tag is PairConfig.DIFFERENT_BUNDLE:
        return lower
    mult = _coefficient(tag, seq.n_at(i)) * seq.N(i - 1)
    J = seq.J(i)
    tx, ty = locate(seq, x, i).theta, locate(seq, y, i).theta
    if tx == 0.0 or ty == 0.0:
        return lower
    sub = _level_tol(seq, i, tol) / (2 * J)
    diff = _circle(J * J * t, J * tx, J * ty, sub) - _circle(J * J * t, J * tx, -J * ty, sub)
    return lower + mult * J * diff


def _junction_cut(seq: ParameterSequences, x: Address, y: Address) -> int | None:
    # Beyond a junction's own level its local coordinate is 0 and every
    # correction vanishes.
    levels = [lvl for lvl in (junction_level(seq, x), junction_level(seq, y)) if lvl is not None]
    return min(levels) if levels else None


def _limit(seq, x, y, t, tail_time, tol, eps=None):
    if seq.depth == 0:
        raise DomainError("the limit kernel needs at least one level of parameters")
    i_star, saturated = deepest_common_bundle(seq, x, y)
    if not saturated:
        res = heat_kernel_level(seq, i_star, x, y, t, tol)
        res.i_star, res.eps = i_star, eps
        return res
    cut = _junction_cut(seq, x, y)
    if cut is not None and cut <= i_star:
        res = heat_kernel_level(seq, cut, x, y, t, tol)
        res.i_star, res.saturated, res.eps = i_star, True, eps
        return res
    level = i_star
    for k in range(0, i_star + 1):
        if limit_tail(seq, k, tail_time) <= tol:
            level = k
            break
    bound = limit_tail(seq, level, tail_time)
    if bound > tol:
        raise InsufficientDepthError(
            f"truncation bound {bound:.3e} at level {level} exceeds tol={tol:g}; "
            "increase depth or address length",
            bound,
        )
    res = heat_kernel_level(seq, level, project(x, level), project(y, level), t, tol)
    res.tail_bound, res.i_star, res.saturated, res.eps = bound, i_star, True, eps
    return res


def heat_kernel_limit(seq: ParameterSequences, x: Address, y: Address, t: float, tol: float = 1e-12) -> KernelResult:
    """Kernel on the limit fractal.

    If the deepest common bundle level ``i_*`` is attained, the value is
    exactly the level-``i_*`` kernel (``tail_bound = 0``).  Otherwise the sum
    is truncated at the shallowest level whose remaining correction bound is
    at most ``tol``.
    """
    _check_time(t)
    return _limit(seq, x, y, t, t, tol)


def schrodinger_kernel(seq: ParameterSequences, x: Address, y: Address, t: float, eps: float | None = None, tol: float = 1e-12) -> KernelResult:
    """Free Schrodinger kernel regularized as the heat kernel at ``eps + i t``.

    ``eps`` defaults to ``1e-3 * |t|`` and is echoed in the result.
    """
    if eps is None:
        eps = 1e-3 * abs(t)
    if not eps > 0:
        raise DomainError(f"eps must be positive, got {eps}")
    return _limit(seq, x, y, complex(eps, t), eps, tol, eps)


# Vectorized evaluation over point arrays.


def _pair(a, b, outer):
    return (a[:, None], b[None, :]) if outer else (a, b)


def _share(tol, k):
    # Geometric split: the shares of all levels sum to less than tol.
    return tol * 0.5 ** (k + 1)


def _level_tol(seq, k, tol):
    """Tolerance for one ``D_{L_k}`` evaluation: the level share over the largest multiplicity."""
    return _share(tol, k) / (max(seq.n_at(k) - 1, 1) * seq.N(k - 1))


def _correction(seq, k, X, Y, t, tol, outer):
    """Level-``k`` correction ``c_k N_{k-1} D_{L_k}`` as (index, values); None if no pair shares a bundle."""
    bx, by = _pair(X.bundle_id(k), Y.bundle_id(k), outer)
    hit = np.nonzero(bx == by)
    if hit[0].size == 0:
        return None
    xi, yi = (hit[0], hit[1]) if outer else (hit[0], hit[0])
    N_prev, n_k = seq.N(k - 1), seq.n_at(k)
    same_cell = X.cell_id(k)[xi] == Y.cell_id(k)[yi]
    mult = np.where(same_cell, n_k - 1, -1) * N_prev
    tx = X.coords(k)[1][xi]
    ty = Y.coords(k)[1][yi]
    d = np.asarray(_dirichlet(t, seq.L(k), tx, ty, tol))
    return hit, mult * d


def _levelwise(seq, i, X: PointArray, Y: PointArray, t, tol, outer: bool):
    if X.level < i or Y.level < i:
        raise DomainError(f"point arrays resolved at levels {X.level}, {Y.level} < {i}")
    ex, ey = _pair(X.eta(), Y.eta(), outer)
    value = np.asarray(_circle(t, ex, ey, _share(tol, 0)))
    value = np.array(np.broadcast_to(value, np.broadcast(ex, ey).shape))
    for k in range(1, i + 1):
        corr = _correction(seq, k, X, Y, t, _level_tol(seq, k, tol), outer)
        if corr is None:
            # Bundles nest, so no deeper level contributes either.
            break
        hit, vals = corr
        value[hit] += vals
    return value


def level_correction(seq: ParameterSequences, i: int, X: PointArray, Y: PointArray, t, tol: float = 1e-12):
    """``p_i(X[a], Y[a]) - p_{i-1}(X[a], Y[a])`` evaluated directly as the level-``i`` correction."""
    _check_time(t)
    if i < 1:
        raise DomainError(f"level must be >= 1, got {i}")
    if X.level < i or Y.level < i:
        raise DomainError(f"point arrays resolved at levels {X.level}, {Y.level} < {i}")
    dtype = complex if isinstance(t, complex) else float
    out = np.zeros(len(X), dtype=dtype)
    corr = _correction(seq, i, X, Y, t, tol / (max(seq.n_at(i) - 1, 1) * seq.N(i - 1)), outer=False)
    if corr is not None:
        out[corr[0]] = corr[1]
    return out


def kernel_matrix(seq: ParameterSequences, i: int, X: PointArray, Y: PointArray, t, tol: float = 1e-12, chunk: int = 1 << 22):
    """``p_i(X[a], Y[b])`` for all ``a, b``; rows are processed in blocks."""
    _check_time(t)
    rows = max(1, chunk // max(len(Y), 1))
    dtype = complex if isinstance(t, complex) else float
    out = np.empty((len(X), len(Y)), dtype=dtype)
    for start in range(0, len(X), rows):
        sl = slice(start, start + rows)
        sub = PointArray(seq, X.level, X.arc[sl], X.theta[sl], X.labels[sl])
        out[sl] = _levelwise(seq, i, sub, Y, t, tol, outer=True)
    return out


def kernel_pairs(seq: ParameterSequences, i: int, X: PointArray, Y: PointArray, t, tol: float = 1e-12):
    """``p_i(X[a], Y[a])`` elementwise."""
    _check_time(t)
    if len(X) != len(Y):
        raise DomainError("kernel_pairs needs equally long point arrays")
    return _levelwise(seq, i, X, Y, t, tol, outer=False)

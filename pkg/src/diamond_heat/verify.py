"""Verification suites shared by the ``verify`` command and the test suite.

Each suite returns a :class:`SuiteReport` with one row per measured case and
an overall verdict.  Work items fan out over a thread pool; rows keep the
submission order, so reports are identical for any worker count.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import fractal_kernel as fk
from . import oracle, semigroup
from .errors import ConfigError
from .geometry import PointArray
from .params import ParameterSequences

# Residuals below this are rounding noise; refinement ratios are not read there.
ROUNDOFF_FLOOR = 1e-12


@dataclass
class SuiteReport:
    name: str
    passed: bool
    rows: list = field(default_factory=list)
    settings: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {"suite": self.name, "passed": self.passed, "settings": self.settings, "rows": self.rows}

    def table(self) -> str:
        if not self.rows:
            return f"{self.name}: {'PASS' if self.passed else 'FAIL'}"
        keys = list(self.rows[0])
        lines = ["  ".join(keys)]
        for r in self.rows:
            lines.append("  ".join(_fmt(r.get(k)) for k in keys))
        lines.append(f"{self.name}: {'PASS' if self.passed else 'FAIL'}")
        return "\n".join(lines)


def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.3e}"
    return str(v)


def default_workers() -> int:
    env = os.environ.get("DIAMOND_HEAT_WORKERS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ConfigError(f"DIAMOND_HEAT_WORKERS must be an integer, got {env!r}") from None
    return os.cpu_count() or 1


def fan_out(func, items, workers=None):
    """``[func(x) for x in items]`` on a thread pool, results in input order."""
    items = list(items)
    k = workers or 1
    if k <= 1 or len(items) <= 1:
        return [func(x) for x in items]
    with ThreadPoolExecutor(min(k, len(items))) as pool:
        return list(pool.map(func, items))


def decays(residuals, factor: float = 3.0) -> bool:
    """Each refinement shrinks the residual by ``factor`` unless it is already at rounding level."""
    return all(b <= a / factor or b <= ROUNDOFF_FLOOR for a, b in zip(residuals, residuals[1:]))


def default_sequence() -> ParameterSequences:
    return ParameterSequences((2, 3, 2, 2), (3, 2, 2, 2))


# Individual suites.


def symmetry(seq=None, levels=range(5), times=(0.05, 0.5, 2.0), pairs=1000, seed=0, tol=1e-12, workers=None):
    seq = seq or default_sequence()
    levels = [i for i in levels if i <= seq.depth]

    def case(args):
        i, t = args
        X, Y = semigroup.sample_pairs(seq, i, pairs, seed + i)
        pxy = fk.kernel_pairs(seq, i, X, Y, t, tol)
        pyx = fk.kernel_pairs(seq, i, Y, X, t, tol)
        return {"level": i, "t": t, "max_asym": float(np.max(np.abs(pxy - pyx))), "min_value": float(np.min(pxy))}

    rows = fan_out(case, [(i, t) for i in levels for t in times], workers)
    ok = all(r["max_asym"] < 1e-10 and r["min_value"] > -1e-10 for r in rows)
    return SuiteReport("symmetry", ok, rows, {"pairs": pairs, "params": seq.to_config()})


def mass(seq=None, cases=((0, 512), (1, 512), (2, 512), (3, 128)), t=0.5, samples=16, seed=0, tol=1e-12, workers=None):
    seq = seq or ParameterSequences.constant(2, 2, 3)
    cases = [(i, m) for i, m in cases if i <= seq.depth]

    def case(args):
        i, m = args
        err = semigroup.check_mass(seq, i, t, m, samples, seed, tol)
        target = 1e-6 if i <= 2 else 1e-4
        return {"level": i, "m": m, "t": t, "mass_error": err, "target": target}

    rows = fan_out(case, cases, workers)
    return SuiteReport("mass", all(r["mass_error"] < r["target"] for r in rows), rows, {"params": seq.to_config()})


def chapman(seq=None, levels=(0, 1, 2), t=0.25, s=0.25, ms=(64, 128, 256), samples=16, seed=0, tol=1e-12, workers=None):
    seq = seq or ParameterSequences.constant(2, 2, 2)
    levels = [i for i in levels if i <= seq.depth]

    def case(args):
        i, m = args
        return {"level": i, "m": m, "residual": semigroup.check_chapman_kolmogorov(seq, i, t, s, m, samples, seed, tol)}

    rows = fan_out(case, [(i, m) for i in levels for m in ms], workers)
    ok = True
    for i in levels:
        res = [r["residual"] for r in rows if r["level"] == i]
        ok &= res[-1] < 1e-4 and decays(res)
    return SuiteReport("chapman", ok, rows, {"t": t, "s": s, "params": seq.to_config()})


def decomposition(seq=None, level=1, t=0.25, ms=(32, 64, 128), seed=0, tol=1e-12, workers=None):
    seq = seq or ParameterSequences.constant(2, 2, 2)
    f = semigroup.random_smooth_field(seq, level, seed)

    def case(m):
        return {"level": level, "m": m, "residual": semigroup.check_decomposition(f, t, m, tol).residual}

    rows = fan_out(case, ms, workers)
    exact = semigroup.check_decomposition(f.grid(ms[-1]), t, tol=tol).residual
    rows.append({"level": level, "m": f"{ms[-1]} (aligned grid)", "residual": exact})
    res = [r["residual"] for r in rows[:-1]]
    ok = res[-1] < 1e-3 and decays(res) and exact < 1e-10
    return SuiteReport("decomposition", ok, rows, {"t": t, "seed": seed, "params": seq.to_config()})


def intertwining(seq=None, level=1, t=0.3, ms=(64, 128), tol=1e-12, workers=None):
    seq = seq or ParameterSequences.constant(2, 2, 2)
    f0 = semigroup.SmoothField(seq, 0, lambda p: np.cos(p.eta()))
    exact = lambda p: math.exp(-t) * np.cos(p.eta())  # noqa: E731

    def case(m):
        out = semigroup.check_intertwining(f0, level, t, m, tol, exact)
        return {"level": level, "m": m, **out}

    rows = fan_out(case, ms, workers)
    ok = all(r["residual"] < 1e-3 and r["residual_exact_fine"] < 1e-3 for r in rows)
    return SuiteReport("intertwining", ok, rows, {"t": t, "params": seq.to_config()})


def bound(seq=None, levels=range(1, 5), times=(0.05, 0.5, 2.0), pairs=1000, seed=0, tol=1e-12, workers=None):
    seq = seq or default_sequence()
    levels = [i for i in levels if 1 <= i <= seq.depth]

    def case(args):
        i, t = args
        X, Y = semigroup.sample_pairs(seq, i, pairs, seed + i)
        corr = np.abs(fk.level_correction(seq, i, X, Y, t, tol))
        # Each subtracted value is certified to tol, plus rounding of order eps * |p|.
        fine = fk.kernel_pairs(seq, i, X, Y, t, tol)
        coarse = fk.kernel_pairs(seq, i - 1, semigroup._lower(X, i - 1), semigroup._lower(Y, i - 1), t, tol)
        slack = 2 * tol + 8 * np.finfo(float).eps * np.maximum(np.abs(fine), np.abs(coarse))
        b = fk.uniform_bound(seq, i, t)
        return {
            "level": i,
            "t": t,
            "max_correction": float(corr.max()),
            "bound": b,
            "violations": int(np.sum(corr > b)),
            "subtracted_violations": int(np.sum(np.abs(fine - coarse) > b + slack)),
        }

    rows = fan_out(case, [(i, t) for i in levels for t in times], workers)
    return SuiteReport("bound", all(r["violations"] == 0 and r["subtracted_violations"] == 0 for r in rows), rows, {"pairs": pairs, "params": seq.to_config()})


def _node_points(g, nodes) -> PointArray:
    p = g.points
    return PointArray(g.seq, g.level, p.arc[nodes], p.theta[nodes], p.labels[nodes])


def oracle_study(params=((2, 2), (3, 3)), t=0.1, segments=(64, 128), tol=1e-12, workers=None):
    def case(args):
        (j, n), M = args
        seq = ParameterSequences.constant(j, n, 1)
        g = oracle.build_graph(seq, 1, segments=M)
        approx = oracle.matrix_exponential_density(g, t)
        exact = fk.kernel_matrix(seq, 1, g.points, g.points, t, tol)
        return {"j": j, "n": n, "segments": M, "nodes": g.size, "rel_error": oracle.relative_error(approx, exact)}

    rows = fan_out(case, [(p, M) for p in params for M in segments], workers)
    ok = True
    for p in params:
        errs = [r["rel_error"] for r in rows if (r["j"], r["n"]) == p]
        ratio = errs[0] / errs[1]
        ok &= errs[0] < 0.01 and 3 <= ratio <= 5
        rows.append({"j": p[0], "n": p[1], "segments": "ratio", "nodes": "", "rel_error": ratio})
    return SuiteReport("oracle", ok, rows, {"t": t, "level": 1})


def schrodinger(j=2, n=2, eps=1e-2, t=0.3, segments=256, tol=1e-12, workers=None):
    seq = ParameterSequences.constant(j, n, 1)
    g = oracle.build_graph(seq, 1, segments=segments)
    tau = complex(eps, t)
    approx = oracle.matrix_exponential_density(g, tau)
    exact = fk.kernel_matrix(seq, 1, g.points, g.points, tau, tol)
    w = np.outer(g.mass, g.mass)
    rel = float(np.sqrt(np.sum(np.abs(approx - exact) ** 2 * w) / np.sum(np.abs(exact) ** 2 * w)))
    back = fk.kernel_matrix(seq, 1, g.points, g.points, tau.conjugate(), tol)
    conj_err = float(np.max(np.abs(back - np.conj(exact))))
    swap_err = float(np.max(np.abs(exact - exact.T)))
    rows = [
        {"quantity": "relative_l2_error", "value": rel, "target": 0.02},
        {"quantity": "conjugate_symmetry", "value": conj_err, "target": 1e-12},
        {"quantity": "swap_symmetry", "value": swap_err, "target": 1e-12},
    ]
    ok = rel < 0.02 and conj_err <= 1e-12 and swap_err <= 1e-12
    return SuiteReport("schrodinger", ok, rows, {"eps": eps, "t": t, "segments": segments, "j": j, "n": n})


def walk(j=2, n=2, t=0.5, walkers=100_000, segments=32, seed=0, m=256, tol=1e-12, workers=None):
    seq = ParameterSequences.constant(j, n, 1)
    g = oracle.build_graph(seq, 1, segments=segments)
    x = g.interior_node(1, segments // 3)
    row = fk.kernel_matrix(seq, 1, _node_points(g, [x]), semigroup.grid_points(seq, 1, m), t, tol)[0]
    probs = semigroup.cell_integrals(semigroup.GridField(seq, 1, row.reshape(seq.n_cells(1), m)))
    first, second = fan_out(lambda _: oracle.random_walk_density(g, t, x, walkers=walkers, seed=seed), [0, 1], workers)
    ok_ci, z = oracle.binomial_check(first.cell_occupancy, probs, walkers)
    same = first.counts.tobytes() == second.counts.tobytes()
    rows = [
        {"cell": c, "expected": float(walkers * probs[c]), "observed": float(first.cell_occupancy[c]), "z": float(z[c])}
        for c in range(len(probs))
    ]
    return SuiteReport("walk", ok_ci and same, rows, {"t": t, "walkers": walkers, "seed": seed, "reproducible": same})


SUITES = {
    "symmetry": symmetry,
    "mass": mass,
    "chapman": chapman,
    "decomposition": decomposition,
    "intertwining": intertwining,
    "bound": bound,
    "oracle": oracle_study,
    "schrodinger": schrodinger,
    "walk": walk,
}

# Suites whose sampled cases come from a parameter sequence.
TAKES_SEQUENCE = {"symmetry", "mass", "chapman", "decomposition", "intertwining", "bound"}


def run(name: str, seq: ParameterSequences | None = None, workers=None, seed: int | None = None, tol: float = 1e-12) -> SuiteReport:
    if name not in SUITES:
        raise ConfigError(f"unknown suite {name!r}; choose from {', '.join(SUITES)}")
    kwargs = {"tol": tol, "workers": workers}
    if name in TAKES_SEQUENCE and seq is not None:
        kwargs["seq"] = seq
    if seed is not None and name in {"symmetry", "mass", "chapman", "decomposition", "bound", "walk"}:
        kwargs["seed"] = seed
    return SUITES[name](**kwargs)

import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from diamond_heat import _backend
from diamond_heat.errors import DomainError, PrecisionWarning
from diamond_heat.kernel1d import (
    ComplexTime,
    EvalOptions,
    Method,
    circle_kernel,
    circle_kernel_complex,
    dirichlet_kernel,
    dirichlet_kernel_complex,
    image_tail,
    image_terms,
    spectral_tail,
    spectral_terms,
)

SPECTRAL = EvalOptions(1e-12, Method.SPECTRAL)
IMAGES = EvalOptions(1e-12, Method.IMAGES)
L4 = math.pi / 4

# Jacobi theta values at 30 digits (mpmath):
#   circle:    theta_3((b - a)/2, e^{-t}) / (2 pi)
#   Dirichlet: (theta_3(pi(a-b)/2L, q) - theta_3(pi(a+b)/2L, q)) / 2L,  q = e^{-t pi^2 / L^2}
CIRCLE = [
    ((1e-4, 0.1, 0.1), 28.209479177387813671),
    ((1e-2, 0.3, 0.5), 1.0377687435514866539),
    ((1.0, 0.0, 0.0), 0.28212397345676223943),
    ((1.0, 0.2, 3.0), 0.053322219787274234626),
    ((10.0, 1.0, 2.0), 0.15916275113368868894),
    ((0.05, 6.2, 0.05), 1.1544942658867412605),
]
DIRICHLET = [
    ((1e-3, 0.1, 0.12), 8.0716616992685674984),
    ((1e-2, 0.3, 0.5), 1.0377674266863528448),
    ((0.1, 0.2, 0.7), 0.12087826982020648231),
    ((1.0, 0.4, 0.4), 2.8632413750736798199e-7),
]
CIRCLE_COMPLEX = ((complex(0.01, 0.3), 0.0, 0.4), complex(0.25669943278263460301, -0.39761327376869781433))


@pytest.mark.parametrize("backend", sorted(_backend.BACKENDS))
@pytest.mark.parametrize("args,expected", CIRCLE)
def test_circle_reference(args, expected, backend):
    kern = _backend.BACKENDS[backend]
    for opts in (SPECTRAL, IMAGES, EvalOptions()):
        assert circle_kernel(*args, opts, kern) == pytest.approx(expected, abs=2e-12)


@pytest.mark.parametrize("backend", sorted(_backend.BACKENDS))
@pytest.mark.parametrize("args,expected", DIRICHLET)
def test_dirichlet_reference(args, expected, backend):
    kern = _backend.BACKENDS[backend]
    t, a, b = args
    for opts in (SPECTRAL, IMAGES, EvalOptions()):
        assert dirichlet_kernel(t, L4, a, b, opts, kern) == pytest.approx(expected, abs=2e-12)


def test_complex_reference():
    (tau, a, b), expected = CIRCLE_COMPLEX
    for method in Method:
        got = circle_kernel_complex(tau, a, b, EvalOptions(1e-12, method))
        assert abs(got - expected) < 1e-11


def test_backends_agree_on_arrays():
    if len(_backend.BACKENDS) < 2:
        pytest.skip("compiled backend not built")
    rng = np.random.default_rng(0)
    a, b = rng.uniform(0, L4, (2, 2000))
    py, cy = _backend.BACKENDS["python"], _backend.BACKENDS["cython"]
    for t in (1e-4, 1e-2, 1.0):
        for opts in (SPECTRAL, IMAGES):
            assert np.max(np.abs(dirichlet_kernel(t, L4, a, b, opts, py) - dirichlet_kernel(t, L4, a, b, opts, cy))) < 2e-12
            assert np.max(np.abs(circle_kernel(t, a, b, opts, py) - circle_kernel(t, a, b, opts, cy))) < 2e-12


def test_scalar_and_array_shapes():
    assert isinstance(circle_kernel(1.0, 0.1, 0.2), float)
    out = circle_kernel(1.0, np.zeros((3, 1)), np.zeros((1, 4)))
    assert out.shape == (3, 4)
    assert dirichlet_kernel(1.0, L4, np.array([0.1, 0.2]), 0.3).shape == (2,)


def test_dirichlet_vanishes_on_boundary():
    assert dirichlet_kernel(0.5, L4, 0.0, 0.3) == 0.0
    assert dirichlet_kernel(0.5, L4, 0.3, L4) == 0.0


def test_domain_errors():
    with pytest.raises(DomainError):
        circle_kernel(0.0, 0, 0)
    with pytest.raises(DomainError):
        dirichlet_kernel(1.0, L4, 1.0, 0.1)
    with pytest.raises(DomainError):
        dirichlet_kernel(1.0, -1.0, 0.1, 0.1)
    with pytest.raises(DomainError):
        circle_kernel_complex(complex(0, 1), 0, 0)
    with pytest.raises(DomainError):
        EvalOptions(tol=0)


def test_precision_warning():
    with pytest.warns(PrecisionWarning):
        circle_kernel(1e-4, 0, 0, EvalOptions(1e-18))
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        circle_kernel(1.0, 0, 0)


def test_tail_bounds_are_certified():
    # The chosen truncation is the smallest whose bound is below tol.
    K = spectral_terms(0.01, 1 / math.pi, 1e-12)
    assert spectral_tail(0.01, 1 / math.pi, K) <= 1e-12 < spectral_tail(0.01, 1 / math.pi, K - 1)
    M = image_terms(2.0, 2 * math.pi, 1e-12)
    assert image_tail(2.0, 2 * math.pi, M) <= 1e-12 < image_tail(2.0, 2 * math.pi, M - 1)
    # And the bound dominates the actual remainder.
    full = sum(math.exp(-k * k * 0.01) for k in range(1, 400))
    head = sum(math.exp(-k * k * 0.01) for k in range(1, K + 1))
    assert (full - head) / math.pi <= spectral_tail(0.01, 1 / math.pi, K)


def test_complex_time_object_and_conjugation():
    tau = ComplexTime(0.02, 0.5)
    a = circle_kernel_complex(tau, 0.3, 1.1)
    b = circle_kernel_complex(complex(0.02, -0.5), 0.3, 1.1)
    assert abs(a - b.conjugate()) < 1e-14
    d = dirichlet_kernel_complex(tau, L4, 0.2, 0.5)
    e = dirichlet_kernel_complex(tau.value.conjugate(), L4, 0.2, 0.5)
    assert abs(d - e.conjugate()) < 1e-14


def test_complex_reduces_to_real():
    for t in (1e-3, 0.1, 2.0):
        assert abs(circle_kernel_complex(complex(t, 0), 0.2, 0.9) - circle_kernel(t, 0.2, 0.9)) < 1e-12
        assert abs(dirichlet_kernel_complex(complex(t, 0), L4, 0.2, 0.5) - dirichlet_kernel(t, L4, 0.2, 0.5)) < 1e-12


angles = st.floats(0, 2 * math.pi, allow_nan=False)
interval = st.floats(0, L4, allow_nan=False)
times = st.floats(1e-3, 20, allow_nan=False)


@settings(max_examples=200, deadline=None)
@given(times, angles, angles)
def test_circle_symmetric_positive_periodic(t, a, b):
    v = circle_kernel(t, a, b)
    # Exactly 0 only where the Gaussian underflows.
    assert v >= 0
    assert v == pytest.approx(circle_kernel(t, b, a), abs=1e-12)
    assert v == pytest.approx(circle_kernel(t, a + 2 * math.pi, b), abs=1e-12)


@settings(max_examples=200, deadline=None)
@given(times, interval, interval)
def test_dirichlet_symmetric_and_dominated(t, a, b):
    v = dirichlet_kernel(t, L4, a, b)
    assert v >= -1e-12
    assert v == pytest.approx(dirichlet_kernel(t, L4, b, a), abs=1e-12)
    # Killing at the ends only removes mass: D <= free Gaussian on the line.
    assert v <= math.exp(-((a - b) ** 2) / (4 * t)) / math.sqrt(4 * math.pi * t) + 1e-12


@settings(max_examples=100, deadline=None)
@given(st.floats(1e-3, 5), st.integers(2, 6), angles, angles)
def test_scaled_circle_identity(t, J, a, b):
    # Dirichlet kernel on [0, pi/J] from two scaled circle kernels.
    L = math.pi / J
    a, b = a % L, b % L
    lhs = dirichlet_kernel(t, L, a, b)
    rhs = J * (circle_kernel(J * J * t, J * a, J * b) - circle_kernel(J * J * t, J * a, -J * b))
    assert abs(lhs - rhs) < 1e-11 * max(1.0, J)


def test_circle_mass_is_one():
    th = (np.arange(256) + 0.5) * 2 * math.pi / 256
    for t in (0.01, 1.0):
        assert np.sum(circle_kernel(t, 0.3, th)) * 2 * math.pi / 256 == pytest.approx(1.0, abs=1e-12)


def test_backend_selected_at_import():
    import os
    import subprocess
    import sys

    code = (
        "import diamond_heat as d; from diamond_heat.fractal_kernel import heat_kernel_level as h;"
        "from diamond_heat.geometry import Address as A; from diamond_heat.params import ParameterSequences as P;"
        "x = A.radians(0.3, (1, 2)); print(d.backend, repr(h(P.constant(2, 3, 2), 2, x, x, 0.2).value))"
    )
    out = {}
    for name in ("python", "auto"):
        env = {**os.environ, "DIAMOND_HEAT_BACKEND": name}
        res = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
        backend, value = res.stdout.split()
        out[name] = (backend, float(value))
    assert out["python"][0] == "python"
    assert abs(out["python"][1] - out["auto"][1]) < 1e-12
    env = {**os.environ, "DIAMOND_HEAT_BACKEND": "nonsense"}
    res = subprocess.run([sys.executable, "-c", "import diamond_heat"], env=env, capture_output=True, text=True)
    assert res.returncode != 0

"""The numba and pure-numpy kernels must agree; the env flag must select between them."""

import os
import subprocess
import sys

import numpy as np
import pytest

from smpfpt import _jit, _np, _rng
from smpfpt._backend import DISABLE_ENV
from smpfpt.sim import _tables

import helpers

BACKENDS = [_jit, _np]


@pytest.mark.parametrize("seed", range(20))
def test_lu_agrees(seed):
    rng = np.random.default_rng(seed)
    m = int(rng.integers(1, 12))
    a = rng.normal(size=(m, m))
    b = rng.normal(size=m)
    out = []
    for k in BACKENDS:
        lu, piv, bad, _ = k.lu_factor(a.copy(), 1e-12)
        assert bad == -1
        out.append(k.lu_solve(lu, piv, b))
    np.testing.assert_allclose(out[0], out[1], rtol=1e-12, atol=1e-12)
    np.testing.assert_allclose(a @ out[0], b, atol=1e-10)


def test_lu_singular_agrees():
    a = np.array([[1.0, 2.0], [2.0, 4.0]])
    res = [k.lu_factor(a.copy(), 1e-12)[2] for k in BACKENDS]
    assert res == [1, 1]


@pytest.mark.parametrize("seed", range(20))
def test_power_iteration_agrees(seed):
    rng = np.random.default_rng(seed)
    a = helpers.random_stochastic(rng, int(rng.integers(2, 9)), 0.6)
    a[:, 0] = 0.0
    got = [k.power_radius(np.ascontiguousarray(a), 1e-3, 100_000, 1e-12) for k in BACKENDS]
    assert got[0][1] > 0 and got[1][1] > 0
    assert abs(got[0][0] - got[1][0]) <= 1e-10


def test_uniform_streams_match():
    keys = _rng.stream_keys(_rng.as_seed(123), np.arange(50))
    ctr = np.arange(50) % 7
    want = _rng.uniforms(keys, ctr)
    got = np.array([_jit._draw(keys[i], ctr[i])[0] for i in range(50)])
    np.testing.assert_array_equal(got, want)
    assert (want > 0).all() and (want < 1).all()


@pytest.mark.parametrize("seed", range(6))
def test_passage_times_agree(seed):
    rng = np.random.default_rng(seed)
    p = helpers.random_stochastic(rng, 5, 0.7)
    model = helpers.random_dist_model(rng, p)
    cum, code, pa, pb = _tables(model)
    args = (cum, code, pa, pb, 0, 1, _rng.as_seed(seed), 3, 2000, 10_000)
    (t1, s1, c1), (t2, s2, c2) = (k.passage_times(*args) for k in BACKENDS)
    np.testing.assert_array_equal(s1, s2)
    np.testing.assert_array_equal(c1, c2)
    np.testing.assert_allclose(t1, t2, rtol=1e-12)


@pytest.mark.parametrize("stop", [True, False])
def test_traces_agree(stop):
    model = helpers.patient_dist_model()
    cum, code, pa, pb = _tables(model)
    starts = np.array([0, 1, 2, 0, 1] * 40, dtype=np.int64)
    absorbing = np.array([False, False, True])
    reps = np.arange(starts.size, dtype=np.int64)
    args = (cum, code, pa, pb, starts, absorbing, stop, _rng.as_seed(9), reps, 0, 60, 5000)
    a, b = (k.trace_records(*args) for k in BACKENDS)
    for x, y in zip(a[:3], b[:3]):
        np.testing.assert_array_equal(x, y)
    np.testing.assert_allclose(a[3], b[3], rtol=1e-12)
    assert a[0].size <= 5000 and (stop or a[0].size == 5000)


def test_env_flag_selects_numpy():
    code = "from smpfpt import BACKEND, first_moment; print(BACKEND)"
    env = dict(os.environ, **{DISABLE_ENV: "1"})
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True,
                         check=True).stdout.strip()
    assert out == "numpy"
    env[DISABLE_ENV] = ""
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True,
                         check=True).stdout.strip()
    assert out == "numba"


def test_numpy_backend_end_to_end():
    code = (
        "import numpy as np\n"
        "from smpfpt.model import read_model\n"
        "from smpfpt.passage import first_moment\n"
        "from smpfpt.sim import SimConfig, empirical_passage\n"
        "m = read_model('data/patient_exp.json')\n"
        "print(repr(first_moment(m, 2).tolist()))\n"
        "print(repr(empirical_passage(m, 2, SimConfig(seed=3, replications=500)).mean.tolist()))\n"
    )
    root = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
    runs = []
    for flag in ("1", "0"):
        env = dict(os.environ, **{DISABLE_ENV: flag})
        runs.append(subprocess.run([sys.executable, "-c", code], env=env, cwd=root,
                                   capture_output=True, text=True, check=True).stdout.splitlines())
    (mu_np, mc_np), (mu_jit, mc_jit) = ([eval(x) for x in r] for r in runs)
    np.testing.assert_allclose(mu_np, mu_jit, rtol=1e-13)
    np.testing.assert_allclose(mc_np, mc_jit, rtol=1e-12)

"""Cross-backend agreement between the compiled and pure-Python kernels."""

import numpy as np
import pytest

import irbp
from irbp._kernels import get_backend

BACKENDS = ["pure-python"]
try:
    get_backend("compiled")
    BACKENDS.append("compiled")
except ImportError:
    pass

needs_both = pytest.mark.skipif(len(BACKENDS) < 2,
                                reason="compiled kernels not built")


def _scenario(n, with_pi, with_shock):
    rng = np.random.default_rng(1000 + n)
    m = rng.uniform(0.05, 1.0, size=(n, n))
    mat = irbp.validate(m / (m.sum(axis=0) * 1.3))
    pi = None
    if with_pi:
        w = rng.uniform(0.5, 1.5, size=n)
        pi = w / w.sum()
    shocks = ()
    if with_shock:
        shocks = (irbp.ShockSpec(t_shock=37, process=1,
                                 theta_new=50.0, c_new=60.0),)
    params = irbp.ModelParams(theta=rng.uniform(0.2, 0.9, size=n),
                              c=rng.uniform(1.0, 2.0, size=n),
                              pi=pi, shocks=shocks)
    return params, mat


@needs_both
@pytest.mark.parametrize("n,with_pi,with_shock", [
    (1, False, False),
    (2, True, False),
    (2, False, True),
    (3, True, True),
    (8, True, False),
])
def test_trajectories_bit_identical(n, with_pi, with_shock):
    params, mat = _scenario(n, with_pi, with_shock)
    kc = get_backend("compiled")
    kp = get_backend("pure-python")
    a = irbp.run_replica(params, mat, 500, seed=99, replica_id=2, kernel=kc)
    b = irbp.run_replica(params, mat, 500, seed=99, replica_id=2, kernel=kp)
    assert np.array_equal(a.ts, b.ts)
    assert np.array_equal(a.S, b.S)
    assert np.array_equal(a.P, b.P)  # bitwise: same ops, same order
    if with_pi:
        assert np.array_equal(a.S_split, b.S_split)
    else:
        assert a.S_split is None and b.S_split is None


@needs_both
def test_expected_counts_bit_identical():
    params, mat = _scenario(3, False, True)
    a = irbp.exact_expected_counts(params, mat, 2000,
                                   kernel=get_backend("compiled"))[1]
    b = irbp.exact_expected_counts(params, mat, 2000,
                                   kernel=get_backend("pure-python"))[1]
    assert np.array_equal(a, b)


@needs_both
def test_loglik_agreement():
    rng = np.random.default_rng(5)
    x = (rng.random((400, 4)) < 0.3).astype(np.uint8)
    theta = np.full(4, 0.5)
    c = np.ones(4)
    for iota in (0.05, 0.5, 0.97, 1.0):
        a = get_backend("compiled").mean_field_loglik(x, theta, c, 0.7, iota)
        b = get_backend("pure-python").mean_field_loglik(x, theta, c, 0.7, iota)
        assert a == pytest.approx(b, rel=1e-12)


@needs_both
def test_mle_agreement_across_backends():
    params, mat = _scenario(4, False, False)
    traj = irbp.run_replica(params, mat, 2000, seed=7,
                            checkpoint_schedule=np.arange(1, 2001))
    x = np.diff(traj.S, axis=0, prepend=0).astype(np.uint8)
    ra = irbp.mle_iota(x, 0.7, kernel=get_backend("compiled"))
    rb = irbp.mle_iota(x, 0.7, kernel=get_backend("pure-python"))
    assert ra.iota_hat == pytest.approx(rb.iota_hat, abs=1e-4)

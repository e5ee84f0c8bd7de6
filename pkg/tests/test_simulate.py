"""Simulator contracts: probabilities, determinism, oracles, moments."""

import numpy as np
import pytest

import irbp
from irbp.errors import (
    IncompatibleSchedules,
    InstanceTooLarge,
    ParameterOutOfRange,
    ScheduleOutOfRange,
)
from irbp.simulate import (
    increment_moments,
    read_trajectory_csv,
    write_ensemble_csv,
    write_trajectory_csv,
)

MF = irbp.mean_field_matrix(0.7, 0.9, 2)
MF_LITERAL = irbp.validate([[0.385, 0.315], [0.315, 0.385]])
P2 = irbp.ModelParams(theta=[0.5, 0.5], c=[1.0, 1.0])


def small_random_setup(rng):
    n = int(rng.integers(1, 5))
    m = rng.uniform(0.0, 1.0, size=(n, n)) * (rng.random((n, n)) < 0.7)
    m = m / max(1.0, (m.sum(axis=0) * rng.uniform(1.0, 1.5)).max())
    mat = irbp.validate(m)
    theta = rng.uniform(0.1, 1.0, size=n)
    pi = None
    if n > 1:
        w = rng.uniform(0.5, 1.5, size=n)
        pi = w / w.sum()
    params = irbp.ModelParams(theta=theta, c=theta + rng.uniform(0, 2, size=n),
                              pi=pi)
    return params, mat


class TestModelParams:
    def test_rejects_bad_theta_and_c(self):
        with pytest.raises(ParameterOutOfRange):
            irbp.ModelParams(theta=[0.0, 0.5], c=[1.0, 1.0])
        with pytest.raises(ParameterOutOfRange):
            irbp.ModelParams(theta=[0.5, 0.5], c=[0.4, 1.0])

    def test_rejects_bad_pi(self):
        with pytest.raises(ParameterOutOfRange):
            irbp.ModelParams(theta=[0.5, 0.5], c=[1, 1], pi=[0.7, 0.2])
        with pytest.raises(ParameterOutOfRange):
            irbp.ModelParams(theta=[0.5, 0.5], c=[1, 1], pi=[1.0, 0.0])

    def test_rejects_bad_shocks(self):
        shock = irbp.ShockSpec(t_shock=5, process=3, theta_new=1.0, c_new=1.0)
        with pytest.raises(ParameterOutOfRange):
            irbp.ModelParams(theta=[0.5, 0.5], c=[1, 1], shocks=(shock,))
        dup = irbp.ShockSpec(t_shock=5, process=1, theta_new=1.0, c_new=1.0)
        with pytest.raises(ParameterOutOfRange):
            irbp.ModelParams(theta=[0.5, 0.5], c=[1, 1], shocks=(dup, dup))


class TestSuccessProbabilities:
    def test_initial_state(self):
        p = irbp.success_probabilities([0, 0], 0, P2, MF)
        np.testing.assert_allclose(p, [0.5, 0.5], atol=1e-15)

    def test_hand_computed_step(self):
        p = irbp.success_probabilities([1, 0], 1, P2, MF_LITERAL)
        np.testing.assert_allclose(p, [0.4425, 0.4075], atol=1e-15)

    def test_saturation_reaches_one(self):
        # column sums 1 and c = theta: all-success history gives exactly 1
        mat = irbp.validate([[0.5, 0.5], [0.5, 0.5]])
        params = irbp.ModelParams(theta=[0.5, 0.5], c=[0.5, 0.5])
        t = 17
        p = irbp.success_probabilities([t, t], t, params, mat)
        np.testing.assert_array_equal(p, [1.0, 1.0])


class TestRunReplica:
    def test_deterministic(self):
        a = irbp.run_replica(P2, MF, 300, seed=5, replica_id=1)
        b = irbp.run_replica(P2, MF, 300, seed=5, replica_id=1)
        assert np.array_equal(a.S, b.S) and np.array_equal(a.P, b.P)

    def test_replicas_differ(self):
        a = irbp.run_replica(P2, MF, 300, seed=5, replica_id=0)
        b = irbp.run_replica(P2, MF, 300, seed=5, replica_id=1)
        assert not np.array_equal(a.S, b.S)

    def test_schedule_validation(self):
        with pytest.raises(ScheduleOutOfRange):
            irbp.run_replica(P2, MF, 10, seed=1, checkpoint_schedule=[0, 5])
        with pytest.raises(ScheduleOutOfRange):
            irbp.run_replica(P2, MF, 10, seed=1, checkpoint_schedule=[11])

    def test_invariants_randomized(self):
        rng = np.random.default_rng(31)
        for _ in range(20):
            params, mat = small_random_setup(rng)
            t_max = int(rng.integers(5, 400))
            traj = irbp.run_replica(params, mat, t_max,
                                    seed=int(rng.integers(2 ** 40)))
            ts = traj.ts
            assert ts[-1] == t_max
            assert np.all(traj.S >= 0)
            assert np.all(np.diff(traj.S, axis=0) >= 0)      # monotone
            assert np.all(traj.S.max(axis=1) <= ts)          # S <= t
            assert np.all(traj.P > 0) and np.all(traj.P <= 1)
            if traj.S_split is not None:
                assert np.array_equal(traj.S_split.sum(axis=1), traj.S)

    def test_checkpoint_probabilities_match_formula(self):
        traj = irbp.run_replica(P2, MF, 200, seed=8)
        for t, s, p, _ in traj.checkpoints():
            np.testing.assert_allclose(
                p, irbp.success_probabilities(s, t, P2, MF), rtol=1e-12)

    def test_shock_switches_parameters_at_its_step(self):
        shock = irbp.ShockSpec(t_shock=50, process=1,
                               theta_new=1000.5, c_new=1001.0)
        params = irbp.ModelParams(theta=[0.5, 0.5], c=[1.0, 1.0],
                                  shocks=(shock,))
        traj = irbp.run_replica(params, MF, 100, seed=3,
                                checkpoint_schedule=[49, 50, 51, 100])
        shocked = irbp.ModelParams(theta=[1000.5, 0.5], c=[1001.0, 1.0])
        for t, s, p, _ in traj.checkpoints():
            ref = irbp.success_probabilities(
                s, t, P2 if t < 50 else shocked, MF)
            np.testing.assert_allclose(p, ref, rtol=1e-12)
        # the shock lifts the probability of the shocked process
        i49 = list(traj.ts).index(49)
        i50 = list(traj.ts).index(50)
        assert traj.P[i50, 0] > traj.P[i49, 0] + 0.4


class TestRunEnsemble:
    def test_matches_sequential_replicas(self):
        ens = irbp.run_ensemble(P2, MF, 100, n_replicas=3, master_seed=17)
        for rid, traj in enumerate(ens):
            solo = irbp.run_replica(P2, MF, 100, seed=17, replica_id=rid)
            assert np.array_equal(traj.S, solo.S)
            assert np.array_equal(traj.P, solo.P)

    def test_thread_count_does_not_change_results(self):
        a = irbp.run_ensemble(P2, MF, 200, 8, master_seed=23, threads=1)
        b = irbp.run_ensemble(P2, MF, 200, 8, master_seed=23, threads=4)
        for x, y in zip(a, b):
            assert x.replica_id == y.replica_id
            assert np.array_equal(x.S, y.S) and np.array_equal(x.P, y.P)

    def test_replica_start_offsets_ids(self):
        ens = irbp.run_ensemble(P2, MF, 50, 2, master_seed=9, replica_start=5)
        assert [t.replica_id for t in ens] == [5, 6]
        solo = irbp.run_replica(P2, MF, 50, seed=9, replica_id=6)
        assert np.array_equal(ens[1].S, solo.S)


class TestExactExpectedCounts:
    def test_first_steps(self):
        ts, es = irbp.exact_expected_counts(P2, MF, 2)
        np.testing.assert_allclose(es[1], [0.5, 0.5], atol=1e-15)
        np.testing.assert_allclose(es[2], [0.925, 0.925], atol=1e-15)

    def test_matches_enumeration(self):
        law = irbp.enumerate_exact(P2, MF_LITERAL, 6)
        ts, es = irbp.exact_expected_counts(P2, MF_LITERAL, 6)
        np.testing.assert_allclose(es[1:], law.mean_S, rtol=1e-12)

    def test_eigenvector_direction_at_large_t(self):
        # component ratio of E[S_t] approaches the centrality ratio
        mat = irbp.validate([[0.50, 0.20], [0.45, 0.20]])
        spec = irbp.perron(mat)
        _, es = irbp.exact_expected_counts(P2, mat, 10 ** 6,
                                           checkpoints=[10 ** 6])
        assert es[0, 0] / es[0, 1] == pytest.approx(
            spec.u[0] / spec.u[1], rel=2e-3)

    def test_ensemble_mean_matches_recursion_n2(self):
        probes = [1, 2, 3, 10, 50]
        ens = irbp.run_ensemble(P2, MF, 50, 4000, master_seed=41,
                                checkpoint_schedule=probes)
        _, es = irbp.exact_expected_counts(P2, MF, 50, checkpoints=probes)
        smat = np.stack([t.S for t in ens])       # (R, T, N)
        mean = smat.mean(axis=0)
        se = smat.std(axis=0, ddof=1) / np.sqrt(len(ens))
        assert np.all(np.abs(mean - es) <= 4 * np.maximum(se, 1e-12))

    def test_ensemble_mean_matches_recursion_n8(self):
        mat8 = irbp.mean_field_matrix(0.689, 0.75, 8)
        p8 = irbp.ModelParams(theta=np.full(8, 0.5), c=np.ones(8))
        probes = [1, 5, 25]
        ens = irbp.run_ensemble(p8, mat8, 25, 3000, master_seed=43,
                                checkpoint_schedule=probes)
        _, es = irbp.exact_expected_counts(p8, mat8, 25, checkpoints=probes)
        smat = np.stack([t.S for t in ens])
        mean = smat.mean(axis=0)
        se = smat.std(axis=0, ddof=1) / np.sqrt(len(ens))
        assert np.all(np.abs(mean - es) <= 4 * np.maximum(se, 1e-12))

    def test_shocked_recursion_matches_ensemble(self):
        shock = irbp.ShockSpec(t_shock=10, process=2, theta_new=8.0, c_new=9.0)
        params = irbp.ModelParams(theta=[0.5, 0.5], c=[1.0, 1.0],
                                  shocks=(shock,))
        probes = [9, 10, 11, 40]
        ens = irbp.run_ensemble(params, MF, 40, 4000, master_seed=47,
                                checkpoint_schedule=probes)
        _, es = irbp.exact_expected_counts(params, MF, 40, checkpoints=probes)
        smat = np.stack([t.S for t in ens])
        mean = smat.mean(axis=0)
        se = smat.std(axis=0, ddof=1) / np.sqrt(len(ens))
        assert np.all(np.abs(mean - es) <= 4 * np.maximum(se, 1e-12))


class TestEnumerateExact:
    def test_one_step_moments(self):
        params = irbp.ModelParams(theta=[0.3, 0.6], c=[1.0, 1.2])
        law = irbp.enumerate_exact(params, MF, 1)
        p0 = np.array([0.3, 0.5])
        np.testing.assert_allclose(law.var_x[0], p0 * (1 - p0), atol=1e-15)
        assert law.cov_x[0, 0, 1] == 0.0  # deterministic P_0

    def test_positive_covariance_fixture(self):
        law = irbp.enumerate_exact(P2, MF_LITERAL, 6)
        assert law.cov_x[5, 0, 1] > 0
        # frozen regression value from this enumeration
        assert law.cov_x[5, 0, 1] == pytest.approx(0.018518532791364187,
                                                   abs=1e-12)

    def test_instance_cap(self):
        with pytest.raises(InstanceTooLarge):
            irbp.enumerate_exact(P2, MF, 11)
        p3 = irbp.ModelParams(theta=[0.5] * 3, c=[1.0] * 3)
        with pytest.raises(InstanceTooLarge):
            irbp.enumerate_exact(p3, irbp.mean_field_matrix(0.7, 0.9, 3), 4)

    def test_matches_ensemble_moments(self):
        law = irbp.enumerate_exact(P2, MF_LITERAL, 6)
        ens = irbp.run_ensemble(P2, MF_LITERAL, 6, 6000, master_seed=53,
                                checkpoint_schedule=[5, 6])
        est = irbp.empirical_moments(ens, [6])[0]
        assert abs(est.var[0] - law.var_x[5, 0]) <= 4 * est.var_se[0]
        assert abs(est.var[1] - law.var_x[5, 1]) <= 4 * est.var_se[1]
        assert abs(est.cov[0, 1] - law.cov_x[5, 0, 1]) <= 4 * est.cov_se[0, 1]


class TestEmpiricalMoments:
    def test_constant_trajectories_have_zero_variance(self):
        base = irbp.run_replica(P2, MF, 10, seed=1,
                                checkpoint_schedule=[9, 10])
        ens = [base, base, base, base]
        est = irbp.empirical_moments(ens, [10])[0]
        np.testing.assert_allclose(est.var, 0.0, atol=1e-15)

    def test_missing_checkpoint_raises(self):
        ens = irbp.run_ensemble(P2, MF, 20, 3, master_seed=3,
                                checkpoint_schedule=[10, 20])
        with pytest.raises(IncompatibleSchedules):
            irbp.empirical_moments(ens, [15])
        with pytest.raises(IncompatibleSchedules):
            irbp.empirical_moments(ens, [20])  # needs t-1 = 19

    def test_mismatched_schedules_raise(self):
        a = irbp.run_replica(P2, MF, 20, seed=1, checkpoint_schedule=[19, 20])
        b = irbp.run_replica(P2, MF, 20, seed=2, checkpoint_schedule=[18, 20])
        with pytest.raises(IncompatibleSchedules):
            irbp.empirical_moments([a, b], [20])

    def test_increment_moments_on_known_sample(self):
        x = np.array([[1, 1], [1, 0], [0, 0], [0, 1]], dtype=float)
        est = increment_moments(3, x)
        np.testing.assert_allclose(est.mean, [0.5, 0.5])
        np.testing.assert_allclose(est.var, [1 / 3, 1 / 3])


class TestCheckpoints:
    def test_default_grid_shape(self):
        ts = irbp.default_checkpoints(10 ** 5)
        assert ts[0] == 1 and ts[-1] == 10 ** 5
        assert np.all(np.diff(ts) > 0)
        # about 200 points per decade once spacing exceeds integer steps
        dec = ts[(ts >= 10 ** 4) & (ts <= 10 ** 5)]
        assert 195 <= dec.size <= 205

    def test_small_t_max(self):
        np.testing.assert_array_equal(irbp.default_checkpoints(1), [1])
        np.testing.assert_array_equal(irbp.default_checkpoints(3), [1, 2, 3])


class TestTrajectoryCSV:
    def test_wide_roundtrip_with_split(self, tmp_path):
        params = irbp.ModelParams(theta=[0.5, 0.5], c=[1, 1], pi=[0.6, 0.4])
        traj = irbp.run_replica(params, MF, 50, seed=2)
        path = tmp_path / "traj.csv"
        write_trajectory_csv(traj, path)
        header = path.read_text().splitlines()[0]
        assert header == ("t,S_1,S_2,P_1,P_2,"
                          "S_1_1,S_1_2,S_2_1,S_2_2")
        ts, S, split = read_trajectory_csv(path)
        assert np.array_equal(ts, traj.ts)
        assert np.array_equal(S, traj.S)
        assert np.array_equal(split, traj.S_split)

    def test_long_roundtrip(self, tmp_path):
        ens = irbp.run_ensemble(P2, MF, 30, 3, master_seed=5)
        path = tmp_path / "ens.csv"
        write_ensemble_csv(ens, path)
        ts, S, split = read_trajectory_csv(path, replica=2)
        assert np.array_equal(S, ens[2].S)
        assert split is None

import math

import numpy as np
import pytest

from switchgain import Mode, Signal, SystemSpec, gramians, simulate, transition, trajectory_to_csv
from switchgain.core import concat_signals

from oracles import rk_flow, simpson_gramians


def make_system(mats, m=1, p=1, B=None, C=None):
    n = mats[0].shape[0]
    modes = []
    for k, A in enumerate(mats):
        Bk = B[k] if B is not None else np.ones((n, m))
        Ck = C[k] if C is not None else np.ones((p, n))
        modes.append(Mode(np.asarray(A, float), np.asarray(Bk, float), np.asarray(Ck, float)))
    return SystemSpec(n, m, p, tuple(modes))


def random_switched(rng, n=3, k=2, scale=1.0):
    mats = [scale * rng.standard_normal((n, n)) - 0.5 * np.eye(n) for _ in range(k)]
    return make_system(mats, B=[rng.standard_normal((n, 1)) for _ in range(k)],
                       C=[rng.standard_normal((1, n)) for _ in range(k)])


class TestTransition:
    def test_zero_generator(self):
        sysm = make_system([np.zeros((1, 1))])
        sig = Signal(((0, 2.0),))
        assert transition(sysm, sig, 0.0, 1.3) == pytest.approx(1.0)

    def test_nilpotent_closed_form(self):
        sysm = make_system([np.array([[0.0, 1.0], [0.0, 0.0]])], m=1, p=1,
                           B=[np.zeros((2, 1))], C=[np.zeros((1, 2))])
        sig = Signal(((0, 5.0),))
        t = 1.7
        phi = transition(sysm, sig, 0.0, t)
        np.testing.assert_allclose(phi, [[1.0, t], [0.0, 1.0]], atol=1e-14)

    def test_identity_at_equal_times(self):
        rng = np.random.default_rng(0)
        sysm = random_switched(rng)
        sig = Signal(((0, 1.0), (1, 1.0)))
        np.testing.assert_allclose(transition(sysm, sig, 0.7, 0.7), np.eye(3), atol=1e-15)

    def test_against_rk_oracle(self):
        rng = np.random.default_rng(1)
        sysm = random_switched(rng)
        sig = Signal(((0, 0.8), (1, 1.4)))
        phi = transition(sysm, sig, 0.0, sig.horizon)
        for _ in range(50):
            x0 = rng.standard_normal(3)
            ref = rk_flow(sysm, sig, 0.0, sig.horizon, x0)
            err = np.linalg.norm(phi @ x0 - ref) / np.linalg.norm(ref)
            assert err < 1e-8

    def test_cocycle(self):
        rng = np.random.default_rng(2)
        sysm = random_switched(rng)
        sig = Signal(((0, 1.0), (1, 0.5), (0, 1.5)))
        r, s, t = 0.3, 1.2, 2.6
        lhs = transition(sysm, sig, s, t) @ transition(sysm, sig, r, s)
        rhs = transition(sysm, sig, r, t)
        assert np.linalg.norm(lhs - rhs) / np.linalg.norm(rhs) < 1e-9

    def test_concatenation(self):
        rng = np.random.default_rng(3)
        sysm = random_switched(rng)
        s1 = Signal(((0, 0.7), (1, 0.6)))
        s2 = Signal(((1, 0.4), (0, 0.9)))
        glued = concat_signals(s1, s2)
        lhs = transition(sysm, glued, 0.0, glued.horizon)
        rhs = transition(sysm, s2, 0.0, s2.horizon) @ transition(sysm, s1, 0.0, s1.horizon)
        np.testing.assert_allclose(lhs, rhs, rtol=1e-10, atol=1e-12)

    def test_outside_horizon_rejected(self):
        sysm = make_system([np.zeros((1, 1))])
        sig = Signal(((0, 1.0),))
        with pytest.raises(ValueError, match="horizon"):
            transition(sysm, sig, 0.0, 2.0)


class TestGramians:
    def test_scalar_closed_form(self):
        # anchored at the interval start: wc(t) = (e^{2t} - 1) / 2 for A = -1
        sysm = make_system([np.array([[-1.0]])])
        t = 1.3
        pair = gramians(sysm, Signal(((0, t),)), 0.0, t)
        assert pair.wc[0, 0] == pytest.approx((math.exp(2 * t) - 1) / 2, rel=1e-12)
        # end-anchored variant via the flow congruence
        phi = transition(sysm, Signal(((0, t),)), 0.0, t)
        end_anchored = phi @ pair.wc @ phi.T
        assert end_anchored[0, 0] == pytest.approx((1 - math.exp(-2 * t)) / 2, rel=1e-12)

    def test_zero_input_matrix(self):
        sysm = make_system([np.array([[-1.0, 0.3], [0.0, -2.0]])],
                           B=[np.zeros((2, 1))], C=[np.ones((1, 2))])
        pair = gramians(sysm, Signal(((0, 2.0),)), 0.0, 2.0)
        np.testing.assert_allclose(pair.wc, 0.0, atol=1e-15)

    def test_against_simpson_oracle(self):
        rng = np.random.default_rng(5)
        sysm = random_switched(rng)
        sig = Signal(((0, 0.9), (1, 1.1)))
        pair = gramians(sysm, sig, 0.0, sig.horizon)
        wc_ref, wo_ref = simpson_gramians(sysm, sig, 0.0, sig.horizon, n_panels=600)
        assert np.linalg.norm(pair.wc - wc_ref) / np.linalg.norm(wc_ref) < 1e-7
        assert np.linalg.norm(pair.wo - wo_ref) / np.linalg.norm(wo_ref) < 1e-7

    def test_windowed_interval(self):
        rng = np.random.default_rng(6)
        sysm = random_switched(rng)
        sig = Signal(((0, 1.0), (1, 1.0)))
        pair = gramians(sysm, sig, 0.4, 1.6)
        wc_ref, wo_ref = simpson_gramians(sysm, sig, 0.4, 1.6, n_panels=600)
        assert np.linalg.norm(pair.wc - wc_ref) / np.linalg.norm(wc_ref) < 1e-7
        assert np.linalg.norm(pair.wo - wo_ref) / np.linalg.norm(wo_ref) < 1e-7

    def test_symmetry_and_psd(self):
        rng = np.random.default_rng(7)
        for seed in range(5):
            sysm = random_switched(np.random.default_rng(seed))
            sig = Signal(((0, 0.5), (1, 0.7), (0, 0.3)))
            pair = gramians(sysm, sig, 0.0, sig.horizon)
            for W in (pair.wc, pair.wo):
                assert np.linalg.norm(W - W.T) <= 1e-10 * max(np.linalg.norm(W), 1.0)
                assert np.linalg.eigvalsh(W)[0] >= -1e-10 * max(np.linalg.norm(W), 1.0)

    def test_wc_monotone_in_t1(self):
        rng = np.random.default_rng(8)
        sysm = random_switched(rng)
        sig = Signal(((0, 1.0), (1, 1.0)))
        w1 = gramians(sysm, sig, 0.0, 1.2).wc
        w2 = gramians(sysm, sig, 0.0, 1.9).wc
        assert np.linalg.eigvalsh(w2 - w1)[0] >= -1e-10 * np.linalg.norm(w2)

    def test_duality_constant_signal(self):
        rng = np.random.default_rng(9)
        A = rng.standard_normal((3, 3))
        C = rng.standard_normal((2, 3))
        t = 1.1
        sys1 = make_system([A], m=1, p=2, B=[np.zeros((3, 1))], C=[C])
        sys2 = make_system([A.T], m=2, p=1, B=[C.T], C=[np.zeros((1, 3))])
        wo = gramians(sys1, Signal(((0, t),)), 0.0, t).wo
        wc = gramians(sys2, Signal(((0, t),)), 0.0, t).wc
        # left-anchored wc relates to wo through the flow congruence
        from scipy.linalg import expm
        phi = expm(A.T * t)
        np.testing.assert_allclose(phi @ wc @ phi.T, wo, rtol=1e-9, atol=1e-11)


class TestSimulate:
    def test_zero_everything(self):
        sysm = make_system([np.array([[-1.0]])])
        sig = Signal(((0, 1.0),))
        traj = simulate(sysm, sig, np.zeros((100, 1)), np.zeros(1), 0.01)
        np.testing.assert_array_equal(traj.states, 0.0)
        np.testing.assert_array_equal(traj.outputs, 0.0)

    def test_homogeneous_consistency(self):
        rng = np.random.default_rng(11)
        sysm = random_switched(rng)
        sig = Signal(((0, 0.5), (1, 0.5)))
        x0 = rng.standard_normal(3)
        traj = simulate(sysm, sig, np.zeros((100, 1)), x0, 0.01)
        for k in (10, 50, 100):
            ref = transition(sysm, sig, 0.0, traj.times[k]) @ x0
            assert np.linalg.norm(traj.states[k] - ref) < 1e-10 * max(np.linalg.norm(ref), 1.0)

    def test_scalar_step_response(self):
        sysm = make_system([np.array([[-1.0]])])
        T, dt = 2.0, 1e-3
        steps = int(T / dt)
        sig = Signal(((0, T),))
        traj = simulate(sysm, sig, np.ones((steps, 1)), np.zeros(1), dt)
        ref = 1.0 - np.exp(-traj.times)
        assert np.max(np.abs(traj.states[:, 0] - ref)) < 1e-6

    def test_grid_mismatch_rejected(self):
        sysm = make_system([np.array([[-1.0]])])
        sig = Signal(((0, 1.0),))
        with pytest.raises(ValueError, match="horizon"):
            simulate(sysm, sig, np.zeros((55, 1)), np.zeros(1), 0.01)

    def test_csv_export(self):
        sysm = make_system([np.array([[-1.0]])])
        sig = Signal(((0, 0.1),))
        traj = simulate(sysm, sig, np.ones((10, 1)), np.zeros(1), 0.01)
        text = trajectory_to_csv(traj)
        lines = text.strip().split("\n")
        assert lines[0] == "t,x1,y1"
        assert len(lines) == 12

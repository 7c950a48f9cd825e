"""Integral-action augmentation: integrator, anti-windup, penalty shaping."""

import numpy as np
import pytest

from secrl import ConfigurationError
from secrl.sec import (
    SecRewardConfig,
    SecState,
    actor_output_width,
    combine_reward,
    sec_apply,
    sec_penalty,
)
from secrl.seeding import derive_rng

T_I = 0.31
T_AW = 0.66
GAMMA = 0.946
KAPPA_P = 1.48
KAPPA_I = 1.13


class TestIntegrator:
    def test_all_zero_is_identity(self):
        state = SecState.fresh(2, T_I, T_AW)
        u, new = sec_apply(np.zeros(4), state)
        assert np.array_equal(u, np.zeros(2))
        assert np.array_equal(new.zeta, np.zeros(2))

    def test_unclipped_worked_example(self):
        # u_P=0.2, u_I=0.1, zeta=0: zeta' = 0.031, applied = 0.231.
        state = SecState.fresh(1, T_I, T_AW)
        u, new = sec_apply(np.array([0.2, 0.1]), state)
        assert new.zeta[0] == pytest.approx(0.031, abs=1e-12)
        assert u[0] == pytest.approx(0.231, abs=1e-12)

    def test_anti_windup_worked_example(self):
        # u_P=0.9, u_I=0.5, zeta=0.4: zeta'=0.555, unclipped 1.455,
        # applied 1.0, zeta'' = 0.555 + 0.66*(1.0 - 1.455) = 0.2547.
        state = SecState(zeta=np.array([0.4]), t_i=T_I, t_aw=T_AW)
        u, new = sec_apply(np.array([0.9, 0.5]), state)
        assert u[0] == pytest.approx(1.0, abs=0.0)
        assert new.zeta[0] == pytest.approx(0.2547, abs=1e-12)

    def test_summation_equivalence_without_clipping(self):
        # With no clipping events, the state equals the weighted running
        # sum; the oracle accumulates the identical expression per channel.
        rng = derive_rng(13, 0)
        state = SecState.fresh(3, T_I, T_AW)
        oracle = [0.0, 0.0, 0.0]
        for _ in range(200):
            u_i = rng.uniform(-0.01, 0.01, size=3)
            u_p = rng.uniform(-0.05, 0.05, size=3)
            u, state = sec_apply(np.concatenate([u_p, u_i]), state)
            for c in range(3):
                oracle[c] = oracle[c] + T_I * u_i[c]
            assert np.all(np.abs(u) < 1.0), "test setup must avoid clipping"
            for c in range(3):
                assert state.zeta[c] == oracle[c]

    def test_applied_action_always_within_unit_box(self):
        rng = derive_rng(14, 0)
        state = SecState.fresh(2, 1.5, T_AW)
        for _ in range(500):
            raw = rng.uniform(-1, 1, size=4)
            u, state = sec_apply(raw, state)
            assert np.all(u <= 1.0) and np.all(u >= -1.0)

    def test_anti_windup_shrinks_integrator_on_clip(self):
        # When sign(zeta') matches the unclipped overshoot and the
        # correction is not too large, |zeta''| < |zeta'|.
        rng = derive_rng(15, 0)
        checked = 0
        state = SecState.fresh(1, 1.0, 0.5)
        for _ in range(2000):
            raw = rng.uniform(-1, 1, size=2)
            zeta_before = state.zeta[0]
            zeta_prime = zeta_before + state.t_i * raw[1]
            unclipped = raw[0] + zeta_prime
            u, state = sec_apply(raw, state)
            clipped = abs(unclipped) > 1.0
            if not clipped:
                continue
            correction = state.t_aw * abs(u[0] - unclipped)
            if np.sign(zeta_prime) == np.sign(unclipped) and correction < 2 * abs(zeta_prime):
                assert abs(state.zeta[0]) < abs(zeta_prime)
                checked += 1
        assert checked > 50

    def test_wrong_width_rejected(self):
        state = SecState.fresh(2, T_I, T_AW)
        with pytest.raises(ConfigurationError):
            sec_apply(np.zeros(3), state)

    def test_degenerate_mode_reproduces_plain_action_semantics(self):
        # zeta0 = 0 and u_I = 0: applied action is exactly clip(u_P).
        rng = derive_rng(16, 0)
        state = SecState.fresh(3, T_I, T_AW)
        for _ in range(100):
            u_p = rng.uniform(-1, 1, size=3)
            u, state = sec_apply(np.concatenate([u_p, np.zeros(3)]), state)
            assert np.array_equal(u, np.clip(u_p, -1, 1))
            assert np.array_equal(state.zeta, np.zeros(3))


class TestPenaltySchedule:
    def cfg(self, total=1_000_000, kp0=250_000, ki0=500_000):
        return SecRewardConfig(KAPPA_P, KAPPA_I, kp0, ki0, total, GAMMA)

    def test_initial_and_final_values(self):
        cfg = self.cfg()
        assert cfg.kappa_at(0, "p") == KAPPA_P
        assert cfg.kappa_at(0, "i") == KAPPA_I
        assert cfg.kappa_at(1_000_000, "p") == 0.0
        assert cfg.kappa_at(2_000_000, "i") == 0.0

    def test_midpoint_of_ramp_is_half(self):
        cfg = self.cfg(total=1_000_000, kp0=200_000)
        mid = (200_000 + 1_000_000) // 2
        assert cfg.kappa_at(mid, "p") == pytest.approx(KAPPA_P / 2.0, rel=1e-12)

    def test_schedule_continuous_and_non_increasing(self):
        cfg = self.cfg(total=10_000, kp0=3_000, ki0=7_000)
        prev_p, prev_i = np.inf, np.inf
        for k in range(0, 10_001, 10):
            vp, vi = cfg.kappa_at(k, "p"), cfg.kappa_at(k, "i")
            assert vp <= prev_p + 1e-15 and vi <= prev_i + 1e-15
            prev_p, prev_i = vp, vi

    def test_invalid_channel_rejected(self):
        with pytest.raises(ConfigurationError):
            self.cfg().kappa_at(0, "x")


class TestPenaltyAndCombination:
    def test_zero_action_no_penalty(self):
        assert sec_penalty(np.zeros(3), 1.0, GAMMA, 3) == 0.0

    def test_single_channel_worked_example(self):
        # kappa=1, gamma=0.946, u=[1]: -(1-0.946)*sqrt(1) = -0.054.
        r = sec_penalty(np.array([1.0]), 1.0, GAMMA, 1)
        assert r == pytest.approx(-0.054, abs=1e-12)

    def test_channel_mean_leaves_value_unchanged(self):
        r = sec_penalty(np.array([1.0, 1.0, 1.0]), 1.0, GAMMA, 3)
        assert r == pytest.approx(-0.054, abs=1e-12)

    def test_penalty_monotone_in_action_magnitude(self):
        grid = np.linspace(0, 1, 17)
        vals = [sec_penalty(np.array([u]), 1.0, GAMMA, 1) for u in grid]
        assert all(b <= a for a, b in zip(vals, vals[1:]))

    def test_penalty_never_positive(self):
        rng = derive_rng(17, 0)
        for _ in range(200):
            u = rng.uniform(-1, 1, size=4)
            assert sec_penalty(u, rng.uniform(0, 2), GAMMA, 4) <= 0.0

    def test_combination_identity_when_disabled(self):
        assert combine_reward(-0.2, 0.0, 0.0, 0.0, 0.0) == -0.2

    def test_combination_worked_example(self):
        r = combine_reward(-0.054, 0.0, 0.0, KAPPA_P, KAPPA_I)
        assert r == pytest.approx(-0.054 / 3.61, abs=1e-12)

    def test_combined_reward_bounded_below(self):
        # Worst case: every term at its most negative normalized value.
        worst = -(1.0 - GAMMA)
        rng = derive_rng(18, 0)
        for _ in range(500):
            kp = rng.uniform(0, 2)
            ki = rng.uniform(0, 2)
            r_task = rng.uniform(worst, 0)
            r_p = kp * worst * rng.uniform(0, 1)
            r_i = ki * worst * rng.uniform(0, 1)
            r = combine_reward(r_task, r_p, r_i, kp, ki)
            assert worst - 1e-12 <= r <= 0.0
        # Discounted sum of such rewards stays within [-1, 0].
        returns = sum(worst * GAMMA ** i for i in range(10_000))
        assert returns >= -1.0 - 1e-9


class TestActorWidth:
    @pytest.mark.parametrize("m,width", [(1, 2), (2, 4), (3, 6)])
    def test_doubles_output_neurons(self, m, width):
        assert actor_output_width(m) == width

    def test_plain_agent_width_unchanged(self):
        assert actor_output_width(3, use_sec=False) == 3

    def test_rejects_non_positive(self):
        with pytest.raises(ConfigurationError):
            actor_output_width(0)

import math
from dataclasses import replace

import numpy as np
import pytest

from iontc.objective import FullUnitary, penalized_value, qec_spec, value
from iontc.optimizer import (
    MAX_DRAW_VARIANCE,
    OptimizerConfig,
    coordinate_update,
    optimize,
    polish,
    random_sequence,
    sweep,
    temperature,
    try_insert,
)
from iontc.qops import DomainError, Generator, pulse_unitary
from iontc.seqmodel import Pulse, PulseSequence, canonicalize
from iontc.targets import cnot, double_cnot, golden, identity, qec_circuit_sequence

THETA0 = 0.4
SINGLE = FullUnitary(pulse_unitary(Generator("X"), THETA0, 1))
FLAT = OptimizerConfig(alpha=0.0, t_init=0.0)


def _single(theta):
    return PulseSequence.from_pairs([("X", theta)], 1)


class TestConfig:
    def test_defaults(self):
        cfg = OptimizerConfig()
        assert (cfg.gamma, cfg.alpha, cfg.cool_factor, cfg.fixed_step) == (0.6, 5e-3, 0.95, 0.1)
        assert (cfg.prune_eps, cfg.insert_period, cfg.target_fidelity) == (1e-3, 25, 1 - 1e-9)

    @pytest.mark.parametrize(
        "field,bad",
        [("gamma", 1.0), ("gamma", 0.0), ("alpha", -1e-3), ("t_init", -1.0), ("cool_factor", 1.0),
         ("fixed_step", 0.0), ("prune_eps", -1.0), ("insert_period", 0), ("max_sweeps", 0),
         ("target_fidelity", 1.5), ("seed", -1), ("seed", 2**64), ("polish_sweeps", 0)],
    )
    def test_invalid(self, field, bad):
        with pytest.raises(DomainError):
            OptimizerConfig(**{field: bad})

    def test_field_names_round_trip(self):
        cfg = OptimizerConfig(seed=5)
        assert OptimizerConfig(**cfg.as_dict()) == cfg
        assert "insert_period" in OptimizerConfig.field_names()


class TestCoordinateUpdate:
    def test_stationary(self, rng):
        seq = golden("cnot_3q").sequence
        spec = FullUnitary(cnot(1, 2, 3))
        for m in range(len(seq)):
            new = coordinate_update(spec, seq, m, FLAT, rng)
            assert new == pytest.approx(seq.pulses[m].angle, abs=1e-9)

    def test_parabola_vertex(self, rng):
        new = coordinate_update(SINGLE, _single(THETA0 + 0.3), 0, FLAT, rng)
        # cos^2(x/2) profile: vertex at x - tan(x)
        assert new == pytest.approx(THETA0 + 0.3 - math.tan(0.3), abs=1e-12)
        assert abs(new - THETA0) < 1e-2

    def test_fixed_step_uphill(self, rng):
        # x = -2.5: curvature -cos(x)/2 > 0 and slope -sin(x)/2 > 0
        theta = THETA0 - 2.5
        assert coordinate_update(SINGLE, _single(theta), 0, FLAT, rng) == pytest.approx(theta + 0.1, abs=1e-15)

    def test_fixed_step_downhill_side(self, rng):
        theta = THETA0 + 2.5
        assert coordinate_update(SINGLE, _single(theta), 0, FLAT, rng) == pytest.approx(theta - 0.1, abs=1e-15)

    def test_noise_only_at_negative_curvature(self):
        cfg = replace(FLAT, t_init=1.0)
        draws = [coordinate_update(SINGLE, _single(THETA0 + 0.3), 0, cfg, np.random.default_rng(s)) for s in range(400)]
        center = THETA0 + 0.3 - math.tan(0.3)
        var = min(1.0 / (2 * math.cos(0.3) / 2), MAX_DRAW_VARIANCE)
        assert np.mean(draws) == pytest.approx(center, abs=4 * math.sqrt(var / 400))
        assert np.var(draws) == pytest.approx(var, rel=0.25)
        theta = THETA0 - 2.5
        assert coordinate_update(SINGLE, _single(theta), 0, cfg, np.random.default_rng(0)) == theta + 0.1

    def test_small_pulse_snaps_to_zero(self, rng):
        # identity target: the penalty pulls a tiny angle onto the kink
        spec = FullUnitary(np.eye(2))
        assert coordinate_update(spec, _single(1e-4), 0, OptimizerConfig(), rng) == 0.0

    def test_index_out_of_range(self, rng):
        with pytest.raises(DomainError):
            coordinate_update(SINGLE, _single(0.1), 1, FLAT, rng)


class TestSweep:
    def test_empty(self, rng):
        res = sweep(SINGLE, PulseSequence.empty(1), OptimizerConfig(), rng)
        assert len(res.sequence) == 0
        assert res.value == value(SINGLE, PulseSequence.empty(1))

    def test_at_solution(self, rng):
        spec = FullUnitary(cnot(1, 2, 3))
        seq = golden("cnot_3q").sequence
        res = sweep(spec, seq, FLAT, rng)
        assert res.penalized_value == pytest.approx(value(spec, seq), abs=1e-12)

    def test_result_values_are_consistent(self, rng):
        spec = FullUnitary(cnot(1, 2, 3))
        cfg = OptimizerConfig(t_init=0.01)
        res = sweep(spec, random_sequence(3, 20, cfg, rng), cfg, rng)
        assert res.value == pytest.approx(value(spec, res.sequence), abs=1e-12)
        assert res.penalized_value == pytest.approx(penalized_value(spec, res.sequence, cfg.gamma, cfg.alpha), abs=1e-12)
        assert res.t_next == 0.01 * 0.95

    def test_mostly_non_decreasing(self):
        spec = FullUnitary(cnot(1, 2, 3))
        cfg = OptimizerConfig()
        ups = 0
        for seed in range(100):
            rng = np.random.default_rng(seed)
            seq = random_sequence(3, 40, cfg, rng)
            before = penalized_value(spec, seq, cfg.gamma, cfg.alpha)
            ups += sweep(spec, seq, cfg, rng, t_eff=0.0).penalized_value >= before - 1e-15
        assert ups >= 95


class TestInsertion:
    def test_zero_pulse_changes_nothing(self, rng):
        spec = FullUnitary(cnot(1, 2, 3))
        seq = random_sequence(3, 8, OptimizerConfig(), rng)
        padded = seq.inserted(3, Pulse(Generator("XX"), 0.0))
        assert value(spec, padded) == pytest.approx(value(spec, seq), abs=1e-15)

    def test_rejected_at_exact_solution(self):
        rng = np.random.default_rng(0)
        cfg = OptimizerConfig()
        for name, target in (("cnot_3q", cnot(1, 2, 3)), ("double_cnot_algebraic", double_cnot(3))):
            seq = golden(name).sequence
            spec = FullUnitary(target)
            assert all(try_insert(spec, seq, cfg, rng) is seq for _ in range(50))

    def test_accepted_from_plateau(self):
        spec = FullUnitary(double_cnot(3))
        cfg = OptimizerConfig()
        rng = np.random.default_rng(0)
        seq = random_sequence(3, 6, cfg, rng)
        for _ in range(300):
            seq = sweep(spec, seq, cfg, rng, t_eff=0.0, alpha=0.0).sequence
        assert len(seq) == 6
        plateau = value(spec, seq)
        assert sweep(spec, seq, cfg, rng, t_eff=0.0, alpha=0.0).value == pytest.approx(plateau, abs=1e-12)
        for attempt in range(200):
            new = try_insert(spec, seq, cfg, rng)
            if new is not seq:
                break
        assert new is not seq
        assert len(new) == 7


class TestOptimize:
    def test_cooling_exact(self):
        cfg = OptimizerConfig(t_init=0.3, cool_factor=0.9)
        for k in range(20):
            assert temperature(cfg, k) == 0.3 * 0.9**k
        report = optimize(FullUnitary(cnot(1, 2, 3)), 10, replace(cfg, max_sweeps=7))
        assert report.final_temperature == 0.3 * 0.9**7
        assert report.sweeps_used == 7
        assert report.terminated_by == "max-sweeps"

    def test_deterministic(self):
        spec = FullUnitary(cnot(1, 2, 3))
        cfg = OptimizerConfig(t_init=0.01, max_sweeps=120, seed=11)
        a, b = optimize(spec, 20, cfg), optimize(spec, 20, cfg)
        np.testing.assert_array_equal(a.best_sequence.angles, b.best_sequence.angles)
        assert a.best_sequence.generators == b.best_sequence.generators
        assert a.fidelity_trace == b.fidelity_trace
        c = optimize(spec, 20, replace(cfg, seed=12))
        assert c.fidelity_trace != a.fidelity_trace

    def test_report_invariants_and_pruning_safety(self):
        spec = FullUnitary(cnot(1, 2, 3))
        report = optimize(spec, 40, OptimizerConfig(max_sweeps=300, seed=3))
        best = report.best_sequence
        assert report.best_value == pytest.approx(value(spec, best), abs=1e-12)
        assert report.pulse_count == len(best)
        assert report.initial_pulse_count == 40
        assert value(spec, canonicalize(best, report.config.prune_eps)) >= report.best_value - 1e-9
        assert [k for k, _, _ in report.fidelity_trace] == list(range(1, report.sweeps_used + 1))

    def test_cnot_reaches_target(self):
        report = optimize(FullUnitary(cnot(1, 2, 3)), 40, OptimizerConfig(seed=0))
        assert report.reached
        assert report.best_value >= 0.9999
        assert report.sweeps_used <= 5000

    def test_identity_prunes_everything(self):
        report = optimize(FullUnitary(identity(3)), 20, OptimizerConfig(seed=0))
        assert report.reached
        assert report.pulse_count == 0
        assert report.best_value == 1.0

    def test_progress_callback(self):
        seen = []
        optimize(FullUnitary(identity(2)), 5, OptimizerConfig(max_sweeps=3, insert_period=100),
                 progress=lambda k, v, n: seen.append(k))
        assert seen == [1, 2, 3]

    def test_init_register_mismatch(self):
        with pytest.raises(DomainError):
            optimize(FullUnitary(identity(2)), PulseSequence.empty(3), OptimizerConfig())

    def test_random_init_length(self, rng):
        with pytest.raises(DomainError):
            random_sequence(2, 0, OptimizerConfig(), rng)
        seq = random_sequence(2, 50, OptimizerConfig(), rng)
        assert all(-math.pi / 2 <= a <= math.pi / 2 for a in seq.angles)
        assert not any(g.kind in ("Y", "YY") for g in seq.generators)

    def test_qec_warm_start_shrinks(self):
        init = qec_circuit_sequence()
        cfg = OptimizerConfig(t_init=0.05, max_sweeps=60, seed=1, allow_y=True)
        report = optimize(qec_spec(), init, cfg)
        assert report.initial_pulse_count == len(init)
        assert report.pulse_count < len(init)


def test_polish_converges_perturbed_solution(rng):
    spec = FullUnitary(cnot(1, 2, 3))
    seq = golden("cnot_3q").sequence
    noisy = seq.with_angles(np.asarray(seq.angles) + rng.normal(0, 1e-3, len(seq)))
    assert value(spec, noisy) < 1 - 1e-7
    out = polish(spec, noisy, OptimizerConfig(), rng)
    assert value(spec, out) >= 1 - 1e-9
    assert len(out) == len(seq)

"""
Test suite for the simulator agents
Population sampling, controller law, closed-form bounds and sweeps
"""

import sys
from pathlib import Path

import numpy as np
import pytest
from scipy import optimize, stats

# Add parent directory to path
sys.path.append(str(Path(__file__).parent.parent))

from agents.analysis_agent import (AnalysisAgent, GainBoundInputs, PropositionError, _duty_slope_exact,
                                   bootstrap_error, cycle_duration_oracle, default_device,
                                   door_energy_oracle, door_resistance_bound, kc_lower_bound,
                                   kc_upper_bound, limit_shift_moment_path, limit_shift_moments,
                                   limit_shift_oracle, mean_temperature_recursion, startup_bound_tlim,
                                   startup_crossing, startup_oracle)
from agents.controller_agent import (ControllerAgent, StepOutput, benchmark_probability,
                                     corrective_limit_update, desired_duty, resolution_probability,
                                     switch_fraction, switching_probability)
from agents.population_agent import PopulationAgent, PopulationError
from agents.sweep_agent import SweepAgent, ensemble_seeds
from config.scenario import (BaselineConfig, ControllerConfig, DoorModel, FrequencySource, PopulationSpec,
                             Scenario)
from orchestrator import SimulationOrchestrator

REFERENCE_GAIN_INPUTS = dict(delta=0.0192, event_duration=54_000, recovery_duration=32_400,
                         max_deviation=1.0, recovery_deviation=0.2, reserve_duty=0.15,
                         mean_beta=4.4e-5, mean_power=80.0)


@pytest.fixture(scope="module")
def population():
    """Small sampled population shared by the controller tests"""
    return PopulationAgent().sample_population(PopulationSpec(size=2000), seed=11)


def step_output(**overrides) -> StepOutput:
    values = dict(step=0, desired_duty=0.3, switch_fraction=0.0, probability=0.0, direction=0,
                  reset_factor=0.0, limit_shift=0.0, shift_probability=1.0, band_reference=0.0,
                  lock_on=0.02, lock_off=0.06, actual_duty=0.3, mean_temp=5.0)
    values.update(overrides)
    return StepOutput(**values)


# ============================================================================
# TEST POPULATION AGENT
# ============================================================================

class TestPopulationAgent:
    """Test Population Agent - heterogeneous fleet sampling"""

    def test_initialization(self):
        """Test agent can be initialized"""
        agent = PopulationAgent()
        status = agent.get_agent_status()
        assert agent.name == "PopulationAgent"
        assert status['ready'] == True
        print("✓ Population Agent initialized")

    def test_sampling_is_reproducible(self, population):
        """Test same seed gives the same devices"""
        again = PopulationAgent().sample_population(PopulationSpec(size=2000), seed=11)
        assert np.array_equal(population.params.beta, again.params.beta)
        assert np.array_equal(population.state.temperature, again.state.temperature)
        print("✓ Sampling is reproducible")

    def test_sampled_parameters_are_physical(self, population):
        """Test truncations and invariants hold for every device"""
        p = population.params
        assert population.size == 2000
        assert np.all(p.lock_off <= population.t_off + 1e-9)
        assert np.all(p.cooling_reach >= 1.1 * (p.ambient - p.initial_t_min) - 1e-9)
        assert np.all((p.ambient >= 20.0) & (p.ambient <= 24.0))
        assert 0.15 < population.nominal_duty < 0.4
        print("✓ Parameters are physical")

    def test_initial_state_inside_deadband(self, population):
        """Test phase-consistent initial temperatures"""
        s = population.state
        assert np.all(s.temperature >= s.t_min - 1e-9)
        assert np.all(s.temperature <= s.t_max + 1e-9)
        assert 0.1 < np.mean(s.on_state) < 0.45
        print("✓ Initial state works")

    def test_ambient_distribution(self, population):
        """Test ambient temperatures follow the configured uniform range"""
        result = stats.kstest(population.params.ambient, stats.uniform(loc=20.0, scale=4.0).cdf)
        assert result.pvalue > 1e-3
        print("✓ Ambient distribution works")

    def test_invalid_size(self):
        """Test empty population is rejected"""
        with pytest.raises(PopulationError):
            PopulationAgent().sample_population(PopulationSpec(size=0), seed=1)
        print("✓ Size validation works")

    def test_lock_cdf(self, population):
        """Test lock-duration CDF shape"""
        cdf = population.lock_cdf("off")
        assert cdf[0] == 0.0
        assert cdf[-1] == 1.0
        assert np.all(np.diff(cdf) >= 0)
        print("✓ Lock CDF works")

    def test_baselines(self, population):
        """Test closed-form baseline includes the startup uplift"""
        agent = PopulationAgent()
        closed = agent.closed_form_baseline(population)
        assert closed > float(np.sum(population.params.nominal_power * population.duty))
        flat = agent.baseline_power(population, 100)
        assert np.all(flat == closed)
        smoothed = agent.smooth_baseline(np.full(50, 3.0), window=9)
        assert np.allclose(smoothed, 3.0)
        print("✓ Baselines work")


# ============================================================================
# TEST CONTROLLER LAW
# ============================================================================

class TestControlLaw:
    """Test the pure controller formulas"""

    def test_desired_duty(self):
        """Test droop duty and saturation"""
        assert desired_duty(0.1, 0.25, 0.15, 0.2) == pytest.approx(0.325)
        assert desired_duty(0.5, 0.25, 0.15, 0.2) == pytest.approx(0.4)
        assert desired_duty(-0.5, 0.25, 0.15, 0.2) == pytest.approx(0.1)
        print("✓ Desired duty works")

    def test_benchmark_probability(self):
        """Test the simple controllers' probability"""
        assert benchmark_probability(0.01, 0.3) == pytest.approx(0.01429, abs=1e-5)
        assert benchmark_probability(-0.01, 0.3) == pytest.approx(0.0333, abs=1e-4)
        assert benchmark_probability(0.0, 0.3) == 0.0
        assert benchmark_probability(0.1, 1.0) == 1.0
        print("✓ Benchmark probability works")

    def test_switch_fraction(self):
        """Test startup-compensated switch fraction"""
        assert switch_fraction(0.35, 0.25, 0.0, 0.25) == pytest.approx(0.08)
        assert switch_fraction(0.20, 0.25, 0.0, 0.25) == pytest.approx(-0.05)
        print("✓ Switch fraction works")

    def test_switching_probability(self):
        """Test lock-aware probability and saturation"""
        rho, saturated = switching_probability(0.01, 0.30, 0.02, 0.06)
        assert rho == pytest.approx(0.015625)
        assert not saturated
        rho, _ = switching_probability(-0.02, 0.30, 0.02, 0.06)
        assert rho == pytest.approx(0.0714, abs=1e-4)
        assert switching_probability(0.9, 0.30, 0.02, 0.06) == (1.0, True)
        assert switching_probability(0.0, 0.30, 0.02, 0.06) == (0.0, False)
        print("✓ Switching probability works")

    def test_limit_update(self):
        """Test corrective term and resolution share"""
        assert corrective_limit_update(-1e-4, 0.5e-4, 6.0, 5.0) == pytest.approx(-1.5e-4)
        assert resolution_probability(0.02, 0.1) == pytest.approx(0.2)
        assert resolution_probability(0.3, 0.1) == 1.0
        assert resolution_probability(0.02, 0.0) == 1.0
        print("✓ Limit update works")


class TestControllerAgent:
    """Test Controller Agent - the replicated estimator"""

    def test_initialization(self, population):
        """Test agent can be initialized"""
        agent = ControllerAgent.from_population(ControllerConfig(), population)
        status = agent.get_agent_status()
        assert agent.name == "ControllerAgent"
        assert status['mode'] == "proposed"
        assert agent.state.actual_duty == pytest.approx(population.nominal_duty)
        print("✓ Controller Agent initialized")

    def test_reserve_too_large(self, population):
        """Test D^r above min(Dn, 1-Dn) is rejected"""
        with pytest.raises(ValueError):
            ControllerAgent.from_population(ControllerConfig(reserve_duty=0.9), population)
        print("✓ Reserve validation works")

    def test_steady_lock_fractions(self, population):
        """Test steady lock fractions follow the expected cycle"""
        agent = ControllerAgent.from_population(ControllerConfig(), population)
        t_on, t_off = agent.state.cycle
        lock_on, lock_off, steady_on, steady_off = agent.lock_fractions()
        assert steady_off == pytest.approx(population.mean_lock_off / (t_on + t_off))
        assert steady_on == pytest.approx(population.mean_lock_on / (t_on + t_off))
        assert lock_on == steady_on and lock_off == steady_off
        print("✓ Lock fractions work")

    def test_no_deviation_no_action(self, population):
        """Test zero frequency deviation keeps the estimator at rest"""
        agent = ControllerAgent.from_population(ControllerConfig(), population)
        for _ in range(50):
            out = agent.step(0.0)
        assert out.switch_fraction == 0.0
        assert out.probability == 0.0
        assert out.limit_shift == pytest.approx(0.0, abs=1e-15)
        print("✓ Rest state works")

    def test_steady_resetting_factor(self, population):
        """Test K_r settles at -D^r * beta*P_n under full activation"""
        agent = ControllerAgent.from_population(ControllerConfig(corrective_gain=0.0), population)
        for _ in range(1500):
            out = agent.step(0.2)
        s = agent.state
        activated = s.activated_duty - population.nominal_duty
        assert out.reset_factor == pytest.approx(-activated * agent.constants.mean_params.cooling_rate, rel=1e-2)
        # activation plus the baseline shift still pending adds up to D^r
        assert activated + s.realized_duty - s.cycle_duty == pytest.approx(0.15, abs=1e-4)
        assert s.realized_duty < s.cycle_duty
        print("✓ Steady resetting factor works")

    def test_replicas_agree(self, population):
        """Test two devices' estimators stay identical"""
        signal = np.sin(np.arange(300) / 20.0) * 0.1
        first = ControllerAgent.from_population(ControllerConfig(), population)
        second = ControllerAgent.from_population(ControllerConfig(), population)
        for df in signal:
            first.step(float(df))
            second.step(float(df))
        assert first.state.snapshot() == second.state.snapshot()
        print("✓ Estimator replicas agree")

    def test_benchmark_modes(self, population):
        """Test simple1 shifts limits and simple2 does not"""
        simple1 = ControllerAgent.from_population(ControllerConfig(mode="simple1"), population)
        simple2 = ControllerAgent.from_population(ControllerConfig(mode="simple2"), population)
        out1 = simple1.step(0.1)
        out2 = simple2.step(0.1)
        assert out1.limit_shift < 0
        assert out2.limit_shift == 0.0
        assert out1.probability == pytest.approx(out2.probability)
        print("✓ Benchmark modes work")

    def test_device_decision(self, population):
        """Test only unlocked devices in the right state switch"""
        agent = ControllerAgent.from_population(ControllerConfig(), population)
        out = step_output(direction=1, probability=0.5)
        on = np.array([False, False, True, False])
        unlocked = np.array([True, True, True, False])
        draws = np.array([0.1, 0.9, 0.1, 0.1])
        assert agent.device_decision(out, on, unlocked, draws).tolist() == [1, 0, 0, 0]
        print("✓ Device decision works")

    def test_lock_residue_paid_back(self, population):
        """Test reset taken during lock transients returns once the pulse is over"""
        agent = ControllerAgent.from_population(ControllerConfig(corrective_gain=0.0), population)
        for _ in range(30):
            agent.step(0.1)
        peak = agent.state.lock_residue
        assert peak > 0
        for _ in range(20 * agent.constants.window):
            agent.step(0.0)
        assert abs(agent.state.lock_residue) < 0.25 * peak
        print("✓ Lock residue payback works")

    def test_pending_baseline_counts_as_activation(self, population):
        """Test an unrealized baseline shift changes the switch fraction"""
        agent = ControllerAgent.from_population(ControllerConfig(), population)
        agent.state.cycle_duty += 0.01
        out = agent.step(0.0)
        assert out.switch_fraction > 0
        print("✓ Pending baseline shift works")

    @pytest.mark.slow
    def test_switch_counts_follow_binomial(self, population):
        """Test one activation over 44,800 eligible devices stays within 4 sigma"""
        agent = ControllerAgent.from_population(ControllerConfig(), population)
        eligible, total, rho = 44_800, 70_000, 0.0156
        on = np.arange(total) >= eligible
        unlocked = np.ones(total, dtype=bool)
        out = step_output(direction=1, probability=rho)
        mean = eligible * rho
        sigma = np.sqrt(eligible * rho * (1.0 - rho))

        rng = np.random.default_rng(2024)
        counts = np.array([np.count_nonzero(agent.device_decision(out, on, unlocked, rng.random(total)) == 1)
                           for _ in range(1000)])
        inside = np.mean(np.abs(counts - mean) <= 4.0 * sigma)
        assert inside >= 0.99
        assert np.mean(counts) == pytest.approx(mean, abs=4.0 * sigma / np.sqrt(1000))
        print(f"✓ Switch counts follow the binomial ({inside:.1%} within 4 sigma)")

    @pytest.mark.slow
    def test_estimate_tracks_true_mean(self):
        """Test the mean-temperature recursion follows the population over a zero-mean day"""
        rec = SimulationOrchestrator().run(Scenario(
            name="tracking", seed=17, duration=86400, population=PopulationSpec(size=20000),
            frequency=FrequencySource(kind="class", signal_class="zero_mean"),
            baseline=BaselineConfig(mode="simulated")))
        gap = (rec.mean_temp_est - rec.nominal_temp) - (rec.mean_temp_true - rec.nominal_temp_true)
        assert np.max(np.abs(gap)) <= 0.1
        print(f"✓ Estimate tracks the true mean (max gap {np.max(np.abs(gap)):.3f} degC)")

    def test_resolution_limits(self, population):
        """Test randomized full-resolution steps and the deviation band"""
        agent = ControllerAgent.from_population(
            ControllerConfig(resolution=0.1, deviation_bound=1.0), population)
        out = step_output(limit_shift=0.02, shift_probability=0.2)
        unlocked = np.array([True, True, True])
        cumulative = np.array([0.0, 0.0, 0.95])
        draws = np.array([0.1, 0.5, 0.1])
        shifts = agent.resolution_randomized_limits(out, unlocked, cumulative, draws)
        assert shifts.tolist() == [0.1, 0.0, 0.0]
        print("✓ Resolution limits work")


# ============================================================================
# TEST ANALYSIS AGENT
# ============================================================================

class TestStartupBound:
    """Test the startup transient bound"""

    def test_t_lim(self):
        """Test closed-form horizon"""
        assert startup_bound_tlim(20, 40) == pytest.approx(24.0)
        assert startup_bound_tlim(30, 30) == pytest.approx(30.0)
        with pytest.raises(PropositionError):
            startup_bound_tlim(40, 20)
        print("✓ t_lim works")

    def test_oracle_crossing(self):
        """Test the estimate over-predicts until t_lim and flips near it"""
        frame = startup_oracle(20, 40, n_devices=200_000, seed=3)
        assert np.all(frame.loc[frame['t'] <= 24, 'difference'] >= -1e-6)
        crossing = startup_crossing(frame)
        assert crossing is not None and abs(crossing - 24) <= 2
        print("✓ Startup oracle works")

    def test_exact_crossover(self):
        """Test the exact crossover sits between t_lim and the first negative second"""
        def gap(t):
            actual = (40.0 - t - t * np.log(40.0 / t)) / 20.0
            return (1.0 - t / 30.0) - actual

        crossover = optimize.brentq(gap, 21.0, 30.0)
        assert 25.0 < crossover < 26.0
        assert startup_crossing(startup_oracle(20, 40, n_devices=200_000, seed=3)) == 26
        print(f"✓ Exact crossover at {crossover:.2f} s")


class TestGainBounds:
    """Test the corrective gain bounds"""

    def test_upper_bound_reference(self):
        """Test upper bound for the reference means"""
        upper = kc_upper_bound(alpha=5e-5, cooling_rate=4.4e-5 * 80, ambient=22.0, deadband=2.0, nominal_temp=5.0)
        assert upper == pytest.approx(0.5004e-4, abs=1e-7)
        print("✓ Upper bound works")

    def test_upper_bound_linear_in_cooling(self):
        """Test the bound scales with beta*P_n at fixed cooling reach"""
        args = dict(alpha=5e-5, ambient=22.0, deadband=2.0, nominal_temp=5.0, cooling_reach=70.4)
        single = kc_upper_bound(cooling_rate=3.52e-3, **args)
        double = kc_upper_bound(cooling_rate=7.04e-3, **args)
        assert double == pytest.approx(2 * single)
        assert kc_upper_bound(cooling_rate=3.52e-3, duty=lambda temp: 0.3, **args) == 0.0
        print("✓ Upper bound scaling works")

    def test_finite_difference_matches_exact_slope(self):
        """Test the numerical slope against the analytic derivative"""
        exact = abs(1.0 * 3.52e-3 * _duty_slope_exact(70.4, 22.0, 2.0, 5.0))
        numeric = kc_upper_bound(alpha=5e-5, cooling_rate=3.52e-3, ambient=22.0, deadband=2.0,
                                 nominal_temp=5.0, cooling_reach=70.4)
        assert numeric == pytest.approx(exact, rel=1e-6)
        print("✓ Slope matches")

    def test_lower_bound_reference(self):
        """Test lower bound for the bias-day tolerances"""
        inputs = GainBoundInputs.from_means(**REFERENCE_GAIN_INPUTS)
        result = kc_lower_bound(inputs)
        assert result.feasible
        assert result.gain == pytest.approx(0.4863e-4, abs=1e-7)
        upper = kc_upper_bound(alpha=5e-5, cooling_rate=4.4e-5 * 80, ambient=22.0, deadband=2.0, nominal_temp=5.0)
        assert result.gain <= upper
        print("✓ Lower bound works")

    def test_lower_bound_edge_cases(self):
        """Test zero bias and infeasible tolerances"""
        zero = kc_lower_bound(GainBoundInputs.from_means(**dict(REFERENCE_GAIN_INPUTS, delta=0.0)))
        assert zero.feasible and zero.gain == 0.0
        tight = kc_lower_bound(GainBoundInputs.from_means(
            **dict(REFERENCE_GAIN_INPUTS, max_deviation=1e-5, recovery_deviation=5e-6)))
        assert not tight.feasible and tight.gain is None
        with pytest.raises(PropositionError):
            GainBoundInputs.from_means(**dict(REFERENCE_GAIN_INPUTS, recovery_deviation=2.0))
        print("✓ Lower bound edge cases work")

    def test_recursion_meets_tolerances(self):
        """Test the mean-temperature recursion at the lower bound"""
        inputs = GainBoundInputs.from_means(**REFERENCE_GAIN_INPUTS)
        gain = kc_lower_bound(inputs).gain
        signal = np.concatenate([np.full(54_000, 0.0192), np.zeros(32_400)])
        path = np.abs(mean_temperature_recursion(gain, inputs.gamma, signal))
        assert 0.95 <= path.max() <= 1.0 + 1e-9
        assert 0.95 * 0.2 <= path[-1] <= 0.2 + 1e-9
        print("✓ Recursion works")


class TestLimitShiftMoments:
    """Test randomized limit-shift statistics"""

    def test_moments(self):
        """Test closed-form mean and variance"""
        mean, variance = limit_shift_moments([0.05, -0.02], 0.1)
        assert mean == pytest.approx(0.03)
        assert variance == pytest.approx(0.0041)
        with pytest.raises(PropositionError):
            limit_shift_moments([0.2], 0.1)
        print("✓ Moments work")

    def test_oracle_matches_moments(self):
        """Test Monte-Carlo moments within bootstrap bands"""
        history = np.random.default_rng(5).uniform(-0.1, 0.1, 1000)
        mean, variance = limit_shift_moments(history, 0.1)
        _, variance_path = limit_shift_moment_path(history, 0.1)
        shifts, spread = limit_shift_oracle(history, 0.1, n_devices=20_000, seed=5)

        assert abs(np.mean(shifts) - mean) <= 3 * bootstrap_error(shifts, np.mean, seed=5)
        assert abs(np.var(shifts) - variance) <= 3 * bootstrap_error(shifts, np.var, seed=5)
        assert np.all(np.diff(variance_path) >= 0)
        print("✓ Limit-shift oracle works")

    def test_band_caps_spread(self):
        """Test the deviation band lowers the terminal spread"""
        history = np.random.default_rng(6).uniform(-0.1, 0.1, 1000)
        _, free = limit_shift_oracle(history, 0.1, n_devices=20_000, seed=6)
        _, banded = limit_shift_oracle(history, 0.1, n_devices=20_000, seed=6, deviation_bound=1.0)
        assert banded[-1] < free[-1]
        print("✓ Deviation band works")


class TestDoorAndCycleOracles:
    """Test door and cycle-duration results"""

    def test_door_resistance_bound(self):
        """Test R_op bound divisor"""
        assert 1.0 / door_resistance_bound(1.0, 0.22, 40, 20) == pytest.approx(24.76, abs=0.01)
        with pytest.raises(PropositionError):
            door_resistance_bound(1.0, 0.22, 0, 20)
        print("✓ Door bound works")

    def test_door_energy_oracle(self):
        """Test daily energy uplift for R_op = R/25"""
        ratio = door_energy_oracle(default_device(), DoorModel())
        assert 1.18 <= ratio <= 1.26
        print("✓ Door energy oracle works")

    def test_cycle_duration_oracle(self):
        """Test simulated cycles against the closed form"""
        sample = PopulationAgent().sample_population(PopulationSpec(size=1000), seed=4)
        t_on, sim_on, t_off, sim_off = cycle_duration_oracle(sample.params)
        assert np.all(sim_on > 0) and np.all(sim_off > 0)
        assert np.max(np.abs(sim_on - t_on)) < 1.0
        assert np.max(np.abs(sim_off - t_off)) < 1.0
        print("✓ Cycle oracle works")


class TestAnalysisAgent:
    """Test Analysis Agent - verification table"""

    def test_agent_status(self):
        """Test agent status"""
        status = AnalysisAgent().get_agent_status()
        assert status['name'] == "AnalysisAgent"
        assert 'verify_propositions' in status['capabilities']
        print("✓ Analysis Agent status works")

    @pytest.mark.slow
    def test_verify_propositions(self):
        """Test every check passes"""
        result = AnalysisAgent(seed=1, quick=True).verify_propositions()
        assert result['success']
        assert result['all_passed'], result['table'].to_string()
        table = result['table']
        note = table.loc[table['check'] == "startup crossing second", 'note'].iloc[0]
        assert "25.4" in note and "26" in note
        print("✓ All propositions verified")


# ============================================================================
# TEST SWEEP AGENT
# ============================================================================

def small_scenario(**overrides) -> Scenario:
    values = dict(name="small", seed=3, duration=300,
                  population=PopulationSpec(size=300),
                  frequency=FrequencySource(kind="class", signal_class="zero_mean"),
                  baseline=BaselineConfig(mode="closed_form"))
    values.update(overrides)
    return Scenario(**values)


class TestSweepAgent:
    """Test Sweep Agent - sweeps and gain tuning"""

    def test_ensemble_seeds(self):
        """Test derived ensemble seeds"""
        assert ensemble_seeds(42, 1) == [42]
        seeds = ensemble_seeds(42, 3)
        assert len(set(seeds)) == 3
        assert seeds == ensemble_seeds(42, 3)
        print("✓ Ensemble seeds work")

    def test_points(self):
        """Test one point per value, mode and repeat"""
        agent = SweepAgent(workers=1)
        points = agent._points(small_scenario(), "D_r", [0.05, 0.1], repeats=3, modes=["proposed", "simple1"])
        assert len(points) == 12
        assert points[0][1]['controller']['reserve_duty'] == 0.05
        assert points[-1][1]['controller']['mode'] == "simple1"
        print("✓ Sweep points work")

    def test_sweep_table(self):
        """Test a small sweep produces one row per value"""
        result = SweepAgent(workers=1).sweep(small_scenario(), "D_r", [0.05, 0.1])
        assert result['success'], result['message']
        table = result['table']
        assert len(table) == 2
        assert 'e_r_mape_mean' in table.columns
        assert table['e_r_mape_mean'].notna().all()
        print("✓ Sweep works")

    def test_tune_gain(self):
        """Test gain tuning reports bounds and a bound check per gain"""
        result = SweepAgent(workers=1).tune_gain(small_scenario(), gains=[0.2e-4, 0.5e-4])
        assert result['success'], result['message']
        assert result['bounds']['upper'] > 0
        assert result['bounds']['feasible']
        assert 'within_bounds' in result['table'].columns
        assert len(result['table']) == 2
        print("✓ Gain tuning works")

    @pytest.mark.slow
    def test_controller_ordering(self):
        """Test proposed beats simple1 and simple1 beats simple2 on e_r,mape"""
        def errors(signal_class):
            template = Scenario(name=f"ordering_{signal_class}", seed=21, duration=86400,
                                population=PopulationSpec(size=20000),
                                frequency=FrequencySource(kind="class", signal_class=signal_class))
            result = SweepAgent().sweep(template, "N_r", [20000], repeats=5,
                                        modes=["proposed", "simple1", "simple2"])
            assert result['success'], result['message']
            table = result['table']
            return dict(zip(table['mode'], table['e_r_mape_mean']))

        zero_mean = errors("zero_mean")
        assert zero_mean['proposed'] < zero_mean['simple1'] + 0.1
        assert zero_mean['simple1'] < zero_mean['simple2']

        large_bias = errors("large_bias")
        assert large_bias['proposed'] < large_bias['simple1'] < large_bias['simple2']
        assert large_bias['proposed'] <= 0.4 * large_bias['simple1']
        print(f"✓ Controller ordering holds ({zero_mean}, {large_bias})")

    @pytest.mark.slow
    def test_error_shrinks_with_population(self):
        """Test e_r,mape falls with N_r and flattens towards 70,000 devices"""
        template = Scenario(name="scaling", seed=8, duration=21600,
                            frequency=FrequencySource(kind="class", signal_class="zero_mean"))
        result = SweepAgent().sweep(template, "N_r", [1000, 10000, 70000], repeats=3)
        assert result['success'], result['message']
        small, medium, large = result['table']['e_r_mape_mean'].tolist()
        assert small > medium > large
        assert small - medium > medium - large
        print(f"✓ Error scaling works ({small:.3f}, {medium:.3f}, {large:.3f})")


if __name__ == "__main__":
    pytest.main([__file__, "-v", "-s"])

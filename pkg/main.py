"""Main CLI interface for the refrigerator frequency-control simulator"""

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import List, Optional

import numpy as np

from agents.analysis_agent import AnalysisAgent
from agents.sweep_agent import SweepAgent
from config import settings
from config.scenario import SWEEP_AXES, ScenarioError, load_scenario
from orchestrator import SimulationOrchestrator
from tools.signals import (FrequencySeries, SignalError, synth_bias_day, synth_day, synth_noise,
                           synth_step, to_csv)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2


def print_banner():
    """Print application banner"""
    banner = """
    ╔═══════════════════════════════════════════════════════════╗
    ║        REFRIGERATOR PRIMARY FREQUENCY CONTROL             ║
    ║        Decentralized Reserve Simulator                    ║
    ╚═══════════════════════════════════════════════════════════╝
    """
    print(banner)


def report_error(error: BaseException) -> None:
    """One machine-readable line on stderr"""
    payload = {'type': type(error).__name__, 'message': str(error), 'line': getattr(error, 'line', None)}
    print(f"ERROR {json.dumps(payload)}", file=sys.stderr)


def _exit_code(error: BaseException) -> int:
    return EXIT_USAGE if isinstance(error, ScenarioError) else EXIT_FAILURE


def _fail(result: dict) -> int:
    error = result.get('error') or RuntimeError(result.get('message', 'unknown error'))
    print(f"\n✗ Failed: {result.get('message')}")
    report_error(error)
    return _exit_code(error)


def _load(args):
    scenario = load_scenario(args.scenario)
    update = {}
    if getattr(args, 'seed', None) is not None:
        update['seed'] = args.seed
    if getattr(args, 'threads', None) is not None:
        update['threads'] = args.threads
    if getattr(args, 'output_dir', None):
        update['outputs'] = scenario.outputs.model_copy(update={'directory': args.output_dir})
    return scenario.model_copy(update=update) if update else scenario


def _parse_values(text: str) -> list:
    values = []
    for item in text.split(','):
        item = item.strip()
        try:
            values.append(float(item))
        except ValueError:
            values.append(item)
    return values


def _write_table(table, path: Optional[str]) -> None:
    print(table.to_string(index=False))
    if path:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        table.to_csv(path, index=False, lineterminator="\n")
        print(f"\n✓ Table written to {path}")


def cmd_simulate(args) -> int:
    scenario = _load(args)
    if scenario.outputs.directory is None:
        scenario = scenario.model_copy(update={
            'outputs': scenario.outputs.model_copy(update={'directory': settings.OUTPUT_DIR})})
    result = SimulationOrchestrator().simulate(scenario)
    if not result['success']:
        return _fail(result)
    print(f"\n✓ {result['message']}")
    for key in ('P_res_W', 'e_r_mape', 'e_t_mape', 'e_b_mape', 'temperature_rmse_C'):
        print(f"   {key}: {result['metrics'].get(key)}")
    for kind, path in result['outputs'].items():
        print(f"   {kind}: {path}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    scenario = _load(args)
    modes = args.modes.split(',') if args.modes else None
    result = SweepAgent(workers=args.workers).sweep(scenario, args.axis, _parse_values(args.values),
                                                   repeats=args.repeats, modes=modes)
    if not result['success']:
        return _fail(result)
    print(f"\n✓ {result['message']}\n")
    _write_table(result['table'], args.output)
    return EXIT_OK


def cmd_tune_gain(args) -> int:
    scenario = _load(args)
    gains = [float(g) for g in args.gains.split(',')] if args.gains else None
    result = SweepAgent(workers=args.workers).tune_gain(scenario, gains, repeats=args.repeats)
    if not result['success']:
        return _fail(result)
    bounds = result['bounds']
    print(f"\n✓ K_c lower bound: {bounds['lower']} ({bounds['message']})")
    print(f"✓ K_c upper bound: {bounds['upper']:.4e}\n")
    _write_table(result['table'], args.output)
    return EXIT_OK


def cmd_verify(args) -> int:
    result = AnalysisAgent(seed=args.seed, quick=args.quick).verify_propositions()
    if not result['success']:
        return _fail(result)
    _write_table(result['table'], args.output)
    print(f"\n{'✓' if result['all_passed'] else '✗'} {result['message']}")
    return EXIT_OK if result['all_passed'] else EXIT_FAILURE


def cmd_gen_signal(args) -> int:
    if args.kind == 'step':
        event = args.event_duration if args.event_duration is not None else args.duration
        series = synth_step(args.delta, event, args.duration)
    elif args.kind == 'noise':
        series = synth_noise(args.bias, args.sigma, args.half_period, args.duration, args.seed)
    elif args.kind == 'bias_day':
        event = args.event_duration if args.event_duration is not None else args.duration
        series = synth_bias_day(args.delta, event, args.seed, args.duration, args.sigma, args.half_period)
    elif args.kind == 'constant':
        series = FrequencySeries(samples=np.full(args.duration, args.delta), source="constant")
    else:
        series = synth_day(args.signal_class, args.seed, args.duration)
    path = to_csv(series, args.output)
    print(f"✓ Wrote {len(series)} samples to {path}")
    print(f"   {series.summary()}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pfc", description="Refrigerator primary frequency control simulator")
    parser.add_argument('-v', '--verbose', action='store_true', help="debug logging")
    sub = parser.add_subparsers(dest='command', required=True)

    def scenario_args(p):
        p.add_argument('scenario', help="scenario JSON file")
        p.add_argument('--seed', type=int, default=None)
        p.add_argument('--threads', type=int, default=None)

    p = sub.add_parser('simulate', help="run one scenario and write its outputs")
    scenario_args(p)
    p.add_argument('--output-dir', default=None)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser('sweep', help="sweep one parameter axis")
    scenario_args(p)
    p.add_argument('--axis', required=True, choices=SWEEP_AXES)
    p.add_argument('--values', required=True, help="comma-separated axis values")
    p.add_argument('--repeats', type=int, default=1)
    p.add_argument('--modes', default=None, help="comma-separated controller modes")
    p.add_argument('--workers', type=int, default=settings.SWEEP_WORKERS)
    p.add_argument('--output', default=None, help="CSV path for the metric table")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser('tune-gain', help="corrective gain bounds and K_c sweep")
    scenario_args(p)
    p.add_argument('--gains', default=None, help="comma-separated gains (default 0.1e-4..1.0e-4)")
    p.add_argument('--repeats', type=int, default=1)
    p.add_argument('--workers', type=int, default=settings.SWEEP_WORKERS)
    p.add_argument('--output', default=None)
    p.set_defaults(func=cmd_tune_gain)

    p = sub.add_parser('verify-propositions', help="check closed-form bounds against oracles")
    p.add_argument('--seed', type=int, default=settings.DEFAULT_SEED)
    p.add_argument('--quick', action='store_true', help="smaller Monte-Carlo samples")
    p.add_argument('--output', default=None)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser('gen-signal', help="write a synthetic frequency deviation CSV")
    p.add_argument('--kind', choices=['class', 'step', 'noise', 'constant', 'bias_day'], default='class')
    p.add_argument('--signal-class', choices=sorted(settings.SIGNAL_BIAS), default='zero_mean')
    p.add_argument('--delta', type=float, default=0.0)
    p.add_argument('--event-duration', type=int, default=None)
    p.add_argument('--bias', type=float, default=0.0)
    p.add_argument('--sigma', type=float, default=settings.SIGNAL_SIGMA)
    p.add_argument('--half-period', type=float, default=settings.SIGNAL_HALF_PERIOD)
    p.add_argument('--duration', type=int, default=settings.DAY_SECONDS)
    p.add_argument('--seed', type=int, default=settings.DEFAULT_SEED)
    p.add_argument('--output', required=True)
    p.set_defaults(func=cmd_gen_signal)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """Main application entry point"""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code else EXIT_OK

    logging.basicConfig(
        level=logging.DEBUG if args.verbose else getattr(logging, settings.LOG_LEVEL.upper(), logging.INFO),
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
    )
    print_banner()
    try:
        return args.func(args)
    except (ScenarioError, SignalError, OSError, ValueError) as e:
        logger.error(f"✗ {type(e).__name__}: {e}")
        report_error(e)
        return _exit_code(e)
    except KeyboardInterrupt:
        print("\n\n👋 Interrupted")
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())

import argparse
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from os.path import join

from intake_ctrl.config import CONTROLLERS, SimConfig, load_config
from intake_ctrl.evaluation import comparison_table, save_run
from intake_ctrl.exceptions import IntakeCtrlError
from intake_ctrl.penalty import PenaltyProblem, solve_offline, write_trace
from intake_ctrl.scenario import PRESETS
from intake_ctrl.simulation import run_simulation
from intake_ctrl.validation import CHECKS, run_checks

logger = logging.getLogger(__name__)


def build_parser():

    parser = argparse.ArgumentParser(
        prog='intake-ctrl',
        description='Two-chamber intake pressure simulator with ADRC and PID '
                    'controllers.')
    parser.add_argument('--log-level', default='WARNING',
                        choices=['DEBUG', 'INFO', 'WARNING', 'ERROR'])

    sub = parser.add_subparsers(dest='command', required=True)

    run = sub.add_parser('run', help='Simulate one controller on a scenario.')
    run.add_argument('--config', required=True)
    run.add_argument('--controller', choices=CONTROLLERS)
    run.add_argument('--scenario', choices=sorted(PRESETS))
    run.add_argument('--seed', type=int)
    run.add_argument('--out')
    run.add_argument('--progress', action='store_true')

    compare = sub.add_parser('compare',
                             help='Run both controllers and tabulate metrics.')
    compare.add_argument('--config', required=True)
    compare.add_argument('--scenario', choices=sorted(PRESETS))
    compare.add_argument('--seed', type=int)
    compare.add_argument('--out')
    compare.add_argument('--jobs', type=int, default=1,
                         help='Run the controllers in parallel processes.')

    solve = sub.add_parser('solve-penalty',
                           help='Solve the offline penalty problem and dump '
                                'its iterates.')
    solve.add_argument('--config', required=True)
    solve.add_argument('--out')

    validate = sub.add_parser('validate', help='Run the acceptance checks.')
    validate.add_argument('--config')
    validate.add_argument('--check', action='append', choices=list(CHECKS),
                          help='Run only this check; may be repeated.')

    return parser


def _load(parser, path):

    if path is None:
        return SimConfig()

    if not os.path.isfile(path):
        parser.error(f'configuration file {path} not found')

    return load_config(path)


def _run_one(cfg):

    return cfg.run.controller, run_simulation(cfg)


def cmd_run(args, cfg):

    cfg = cfg.with_overrides(controller=args.controller, seed=args.seed,
                             output_dir=args.out, scenario=args.scenario)

    result = run_simulation(cfg, progress=args.progress)
    save_run(result, cfg.run.output_dir)

    print(result.metrics.to_series().to_string())

    return 0 if result.fault is None else 1


def cmd_compare(args, cfg):

    cfg = cfg.with_overrides(seed=args.seed, output_dir=args.out,
                             scenario=args.scenario)
    configs = [cfg.with_overrides(controller=c) for c in CONTROLLERS]

    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = dict(pool.map(_run_one, configs))
    else:
        results = dict(map(_run_one, configs))

    for name, result in results.items():
        save_run(result, join(cfg.run.output_dir, name))

    table = comparison_table({name: r.metrics for name, r in results.items()})
    table.to_csv(join(cfg.run.output_dir, 'comparison.csv'))

    print(table.to_string())

    return 0 if all(r.fault is None for r in results.values()) else 1


def offline_problem(cfg):
    """Offline penalty problem around the scenario's initial setpoints."""

    pc = cfg.penalty
    scenario = cfg.build_scenario()
    sp1, sp2 = scenario.setpoints(0.0)

    prob = PenaltyProblem(
        p1_set=sp1 if pc.p1_set_kpa is None else pc.p1_set_kpa,
        p2_set=sp2 if pc.p2_set_kpa is None else pc.p2_set_kpa,
        c1=pc.c1_kpa, c2=pc.c2_kpa, eps1=scenario.eps1, eps2=scenario.eps2,
        gamma=pc.gamma, mu=pc.mu, sigma=pc.sigma, lr=pc.lr, omega=pc.omega,
        xi=pc.xi, gamma_max=pc.gamma_max_offline, max_iters=pc.max_iters,
        tol=pc.tol, adaptive_lr=pc.adaptive_lr)

    start = (prob.p1_set - 5.0 if pc.start_p1_kpa is None
             else pc.start_p1_kpa,
             prob.p2_set + 10.0 if pc.start_p2_kpa is None
             else pc.start_p2_kpa)

    return prob, start


def cmd_solve_penalty(args, cfg):

    cfg = cfg.with_overrides(output_dir=args.out)
    prob, start = offline_problem(cfg)

    trace = solve_offline(prob, start)

    os.makedirs(cfg.run.output_dir, exist_ok=True)
    write_trace(trace, join(cfg.run.output_dir, 'penalty_trace.csv'))

    P1, P2 = trace.solution
    print(f'{trace.status} after {len(trace.iterates) - 1} iterations: '
          f'P1 = {P1:.6f} kPa, P2 = {P2:.6f} kPa')

    return 0


def cmd_validate(args, cfg):

    results = run_checks(cfg, args.check)

    for r in results:
        print(f'{"PASS" if r.passed else "FAIL"}  {r.name}: {r.detail}')

    return 0 if all(r.passed for r in results) else 1


COMMANDS = {
    'run': cmd_run,
    'compare': cmd_compare,
    'solve-penalty': cmd_solve_penalty,
    'validate': cmd_validate,
}


def main(argv=None):

    parser = build_parser()
    args = parser.parse_args(argv)

    logging.basicConfig(level=getattr(logging, args.log_level),
                        format='%(asctime)s %(name)s %(levelname)s '
                               '%(message)s')

    try:
        cfg = _load(parser, args.config)
        return COMMANDS[args.command](args, cfg)
    except (IntakeCtrlError, OSError) as e:
        print(f'intake-ctrl: error: {e}', file=sys.stderr)
        return 1


if __name__ == '__main__':
    sys.exit(main())

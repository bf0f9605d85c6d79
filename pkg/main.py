#-------------------------------------------------------------------------------------#
# File: main.py
# Description: Command-line entry point for the driver-adaptive channel access simulator
# Version: 0.1.0
#-------------------------------------------------------------------------------------#
# SETUP GUIDE:
#
# Initial Setup:
# 1. Create virtual environment  -> python -m venv venv
# 2. Activate virtual environment:
#    - Windows                   -> .\venv\Scripts\activate
#    - Unix/MacOS               -> source venv/bin/activate
# 3. Install requirements       -> pip install -r requirements.txt
# 4. Optional environment file  -> cp .env.example .env
#
# Running:
# 1. Closed-form report        -> python main.py analyze --config run.json
# 2. Equal-p sweep             -> python main.py sweep equal --trials 10000
# 3. Safe/unsafe surface       -> python main.py sweep differentiated
# 4. Adaptation loop           -> python main.py adapt --seed 7
# 5. Self-checks               -> python main.py validate
# 6. Rerun a previous run      -> python main.py sweep equal --config results/sweep-equal-manifest.json
#
# Development Commands:
# 1. Run the fast tests        -> pytest -m "not slow"
# 2. Run everything            -> pytest
# 3. Debug logging             -> LOG_LEVEL=DEBUG python main.py analyze
#
# Exit codes: 0 success, 1 unexpected error, 2 configuration error, 3 validation failure
#-------------------------------------------------------------------------------------#

#----------# IMPORTS #----------#
import os
import sys
import argparse
import logging
from pathlib import Path
from typing import List, Optional

from colorama import init, Fore, Style

from app import __version__
from app.cli.commands import (
    EXIT_CONFIG,
    EXIT_OK,
    EXIT_UNEXPECTED,
    CommandResult,
    cmd_adapt,
    cmd_analyze,
    cmd_sweep,
    cmd_validate,
)
from app.cli.validation import BATTERIES
from app.config.config_validator import ConfigError, RunConfig, load_config
from app.config.env_manager import EnvironmentManager
from app.utils.emoji_logger import EmojiLogger

# Initialize colorama for Windows support
init()

#----------# CONFIGURATION #----------#

def build_parser() -> argparse.ArgumentParser:
    """Subcommands analyze, sweep, adapt and validate sharing the run flags."""
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--config', help='JSON run configuration or an emitted manifest')
    common.add_argument('--seed', type=int, help='master seed (unsigned 64-bit)')
    common.add_argument('--trials', type=int, help='Monte Carlo trials per estimate')
    common.add_argument('--workers', type=int, help='worker processes (VANET_ADAPT_WORKERS wins)')
    common.add_argument('--out', help='output directory')
    common.add_argument('--mode', choices=['ssp', 'sap'], help='p-persistent MAC flavour')
    common.add_argument('--sap-approx', action='store_true', help='use 2p for SAP interferers')
    common.add_argument('--format', choices=['csv'], default='csv', help='table format')
    common.add_argument('--quiet', action='store_true', help='no progress bars')

    parser = argparse.ArgumentParser(
        prog='vanet-adapt', description='Driver-adaptive channel access for vehicular safety messaging')
    parser.add_argument('--version', action='version', version=f'%(prog)s {__version__}')
    sub = parser.add_subparsers(dest='command', required=True)
    sub.add_parser('analyze', parents=[common], help='closed-form report for a fixed chain')
    sweep = sub.add_parser('sweep', parents=[common], help='equal-p curve or safe/unsafe surface')
    sweep.add_argument('kind', nargs='?', choices=['equal', 'differentiated'], default='equal')
    sub.add_parser('adapt', parents=[common], help='iterative safe/unsafe access adaptation')
    validate = sub.add_parser('validate', parents=[common], help='run the self-check batteries')
    validate.add_argument('--battery', action='append', choices=sorted(BATTERIES),
                          help='run only this battery (repeatable)')
    return parser


def resolve_config(args: argparse.Namespace) -> RunConfig:
    """Config file, then command-line overrides."""
    config = load_config(args.config)
    return config.with_overrides(**{
        'montecarlo.seed': args.seed,
        'montecarlo.trials': args.trials,
        'channel.mode': args.mode,
        'channel.sap_approx': True if args.sap_approx else None,
    })


def resolve_workers(args: argparse.Namespace, config: RunConfig, env: EnvironmentManager) -> int:
    for candidate in (env.workers, args.workers, config.montecarlo.workers):
        if candidate is not None:
            if candidate < 1:
                raise ConfigError('command line', [('workers', f'must be >= 1, got {candidate}')])
            return candidate
    return os.cpu_count() or 1


#----------# OUTPUT #----------#

def print_summary(command: str, result: CommandResult) -> None:
    colour = Fore.GREEN if result.exit_code == EXIT_OK else Fore.RED
    print(f"\n{colour}{Style.BRIGHT}{command}: exit {result.exit_code}{Style.RESET_ALL}")
    summary = result.summary
    if command == 'sweep':
        print(f"  p0* = {summary['p0']:g}  collision = {summary['equal_minimum']:.4f} "
              f"(±{summary['equal_stderr']:.4f})  interior = {summary['interior_minimum']}")
        if 'p_unsafe' in summary:
            reduction = summary['reduction']
            shown = f"{100.0 * reduction:.1f}%" if reduction is not None else "n/a"
            print(f"  argmin p_safe = {summary['p_safe']:g}, p_unsafe = {summary['p_unsafe']:g}  "
                  f"collision = {summary['minimum']:.4f}  reduction vs equal-p = {shown}")
    elif command == 'adapt':
        state = f"{Fore.GREEN}converged" if summary['converged'] else f"{Fore.YELLOW}NOT converged"
        if summary.get('cycle_length'):
            state += f" (cycle of {summary['cycle_length']})"
        print(f"  {state}{Style.RESET_ALL} after {summary['iterations']} iteration(s); "
              f"unsafe vehicles: {summary['unsafe']}")
    elif command == 'analyze':
        print(f"  beta = {summary['beta_db']:g} dB  D = {summary['opportunities']} opportunities")
    elif command == 'validate':
        failed = summary['failed']
        print(f"  {summary['batteries']} batteries, failed: {', '.join(failed) if failed else 'none'}")
    for path in result.outputs:
        print(f"  {Fore.CYAN}{path}{Style.RESET_ALL}")


#----------# MAIN APPLICATION #----------#

def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        env = EnvironmentManager()
        EmojiLogger.setup_logging({'log_dir': env.get('VANET_ADAPT_LOG_DIR'),
                                   'log_level': env.get('LOG_LEVEL')})
        config = resolve_config(args)
        workers = resolve_workers(args, config, env)
    except (ConfigError, EnvironmentError) as e:
        print(f"{Fore.RED}❌ {e}{Style.RESET_ALL}", file=sys.stderr)
        return EXIT_CONFIG

    out_dir = Path(args.out or env.get('VANET_ADAPT_OUT_DIR'))
    EmojiLogger.startup(f"{args.command} (seed {config.montecarlo.seed}, "
                        f"{config.montecarlo.trials} trials, {workers} worker(s)) -> {out_dir}")
    try:
        if args.command == 'analyze':
            result = cmd_analyze(config, out_dir, workers)
        elif args.command == 'sweep':
            result = cmd_sweep(config, out_dir, args.kind, workers, progress=not args.quiet)
        elif args.command == 'adapt':
            result = cmd_adapt(config, out_dir, workers)
        else:
            result = cmd_validate(config, out_dir, workers, args.battery)
    except ConfigError as e:
        print(f"{Fore.RED}❌ {e}{Style.RESET_ALL}", file=sys.stderr)
        return EXIT_CONFIG
    except KeyboardInterrupt:
        print("\n\n👋 Interrupted")
        return EXIT_UNEXPECTED
    except Exception as e:
        logging.exception("Unexpected failure")
        EmojiLogger.error(f"{args.command} failed: {e}")
        return EXIT_UNEXPECTED

    print_summary(args.command, result)
    EmojiLogger.shutdown(f"{args.command} finished with exit code {result.exit_code}")
    return result.exit_code


def cli() -> None:
    sys.exit(main())


if __name__ == "__main__":
    cli()

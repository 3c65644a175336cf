"""
Latent shrinkage position model toolkit
Command line entry point: lspm {simulate,fit,diagnose,ppc,study,describe,prior}
"""
import argparse
import json
import sys

from config import VERSION, load_config_file, resolve_settings
from data_handlers.storage import save_frame, save_json
from data_handlers.processors import describe_network
from models.prior import Hyperparams, expected_distance_table
from services import DiagnoseRunner, FitRunner, PpcRunner, SimulateRunner, StudyRunner
from services.fit_runner import load_input_network
from utils.logger import logger, setup_logger
from utils.validators import ValidationError

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_FAILURE = 2


class UsageError(Exception):
    pass


class LspmArgumentParser(argparse.ArgumentParser):
    """ArgumentParser that reports usage problems instead of exiting with status 2."""

    def error(self, message):
        raise UsageError(f"{self.format_usage()}{self.prog}: error: {message}")


def _float_list(text):
    try:
        return [float(v) for v in text.split(',') if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _int_list(text):
    try:
        return [int(v) for v in text.split(',') if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _add_input_args(parser):
    parser.add_argument("--input", help="Network CSV (edge list or dense adjacency)")
    parser.add_argument("--edges", choices=['binary', 'count'], help="Edge type of the input file")
    parser.add_argument("--directed", action='store_const', const=True, default=None,
                        help="Treat the network as directed")
    parser.add_argument("--format", choices=['auto', 'edgelist', 'dense'], help="Input layout")
    parser.add_argument("--index-base", type=int, choices=[0, 1], help="Node numbering of edge lists")
    parser.add_argument("--n-nodes", type=int, help="Node count for edge lists with isolated nodes")


def _add_sampler_args(parser):
    parser.add_argument("--model", choices=['logit', 'poisson'], help="Logistic (binary) or Poisson (count)")
    parser.add_argument("--dims", type=int, help="Truncation level p")
    parser.add_argument("--iters", type=int, help="Total iterations S")
    parser.add_argument("--burnin", type=int, help="Burn-in iterations")
    parser.add_argument("--thin", type=int, help="Keep every thin-th iteration after burn-in")
    parser.add_argument("--chains", type=int, help="Number of chains")
    parser.add_argument("--seed", type=int, help="Base seed (chain k uses seed + k)")
    parser.add_argument("--step-z", type=float, help="Z random-walk step factor k")
    parser.add_argument("--step-alpha", type=float, help="alpha proposal variance multiplier")
    parser.add_argument("--z-update", choices=['whole', 'pernode'], help="Z update granularity")
    parser.add_argument("--alpha-inflation", type=float, help="Multiplier on the initial alpha")
    parser.add_argument("--init-jitter-sd", type=float, help="sd of Gaussian jitter on initial positions")
    parser.add_argument("--threads", type=int, help="Worker processes")
    parser.add_argument("--no-progress", action='store_const', const=False, default=None, dest='progress',
                        help="Disable progress bars")


def build_parser():
    parser = LspmArgumentParser(prog='lspm', description="Latent shrinkage position models for networks")
    parser.add_argument("--version", action='version', version=f"lspm {VERSION}")
    sub = parser.add_subparsers(dest='command', required=True, parser_class=LspmArgumentParser)

    p = sub.add_parser('simulate', help="Simulate networks from a study preset or one setting")
    p.add_argument("--study", type=int, choices=[1, 2, 3, 4])
    p.add_argument("--variant")
    p.add_argument("--model", choices=['logit', 'poisson'])
    p.add_argument("--n", type=int)
    p.add_argument("--alpha", type=float)
    p.add_argument("--delta", type=_float_list, help="Comma-separated shrinkage strengths")
    p.add_argument("--directed", action='store_const', const=True, default=None)
    p.add_argument("--n-networks", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--config")
    p.add_argument("--out-dir", required=True)

    p = sub.add_parser('fit', help="Fit the model to a network")
    _add_input_args(p)
    _add_sampler_args(p)
    p.add_argument("--config", help="TOML/JSON config or a previous run manifest")
    p.add_argument("--out-dir", required=True)

    p = sub.add_parser('diagnose', help="Summaries, effective dimension and R-hat for a fit")
    p.add_argument("--fit-dir", required=True)
    p.add_argument("--jump-factor", type=float)
    p.add_argument("--width-factor", type=float)
    p.add_argument("--max-lag", type=int)
    p.add_argument("--config")
    p.add_argument("--out-dir", help="Defaults to the fit directory")

    p = sub.add_parser('ppc', help="Posterior predictive checks for a fit")
    p.add_argument("--fit-dir", required=True)
    _add_input_args(p)
    p.add_argument("--truth", help="Truth sidecar JSON with Z_true")
    p.add_argument("--replicates", type=int)
    p.add_argument("--max-count", type=int)
    p.add_argument("--mode", choices=['pooled', 'per_chain'])
    p.add_argument("--seed", type=int)
    p.add_argument("--config")
    p.add_argument("--out-dir", help="Defaults to the fit directory")

    p = sub.add_parser('study', help="Run a simulation study end to end")
    p.add_argument("--study", type=int, choices=[1, 2, 3, 4], required=True)
    p.add_argument("--scale", choices=['desk', 'full'])
    p.add_argument("--variant")
    p.add_argument("--model", choices=['logit', 'poisson'])
    p.add_argument("--dims", type=_int_list, help="Comma-separated fitted truncation levels")
    p.add_argument("--iters", type=int)
    p.add_argument("--burnin", type=int)
    p.add_argument("--thin", type=int)
    p.add_argument("--replicates", type=int)
    p.add_argument("--n-networks", type=int)
    p.add_argument("--chains", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--threads", type=int)
    p.add_argument("--config")
    p.add_argument("--out-dir", required=True)

    p = sub.add_parser('describe', help="Network statistics")
    _add_input_args(p)
    p.add_argument("--config")

    p = sub.add_parser('prior', help="Prior expected squared distances per dimension")
    p.add_argument("--a1", type=float)
    p.add_argument("--b1", type=float)
    p.add_argument("--a2-values", type=_float_list, help="Comma-separated a2 values")
    p.add_argument("--p-max", type=int)
    p.add_argument("--config")
    p.add_argument("--out-dir")
    return parser


def _input_overrides(args):
    return {
        'path': args.input,
        'edges': args.edges,
        'directed': args.directed,
        'format': args.format,
        'index_base': args.index_base,
        'n_nodes': args.n_nodes,
    }


def collect_overrides(args):
    """Map parsed flags onto config sections; unset flags stay None and are ignored."""
    cmd = args.command
    if cmd == 'fit':
        return {
            'input': _input_overrides(args),
            'prior': {'p': args.dims},
            'sampler': {
                'model': args.model,
                'iterations': args.iters,
                'burn_in': args.burnin,
                'thin': args.thin,
                'chains': args.chains,
                'seed': args.seed,
                'step_z': args.step_z,
                'step_alpha': args.step_alpha,
                'z_update': args.z_update,
                'alpha_inflation': args.alpha_inflation,
                'init_jitter_sd': args.init_jitter_sd,
                'threads': args.threads,
                'progress': args.progress,
            },
        }
    if cmd == 'simulate':
        return {'simulate': {
            'study': args.study, 'variant': args.variant, 'model': args.model, 'n': args.n,
            'alpha': args.alpha, 'delta': args.delta, 'directed': args.directed,
            'n_networks': args.n_networks, 'seed': args.seed,
        }}
    if cmd == 'diagnose':
        return {'postprocess': {'jump_factor': args.jump_factor, 'width_factor': args.width_factor,
                                'max_lag': args.max_lag}}
    if cmd == 'ppc':
        return {
            'input': _input_overrides(args),
            'ppc': {'n_replicates': args.replicates, 'max_count': args.max_count, 'mode': args.mode,
                    'seed': args.seed},
        }
    if cmd == 'study':
        return {
            'study': {
                'study': args.study, 'scale': args.scale, 'variant': args.variant, 'model': args.model,
                'fit_dims': args.dims, 'iterations': args.iters, 'burn_in': args.burnin,
                'thin': args.thin, 'n_replicates': args.replicates, 'n_networks': args.n_networks,
                'chains': args.chains,
            },
            'sampler': {'seed': args.seed, 'threads': args.threads, 'progress': False},
        }
    if cmd == 'describe':
        return {'input': _input_overrides(args)}
    if cmd == 'prior':
        return {'prior': {'a1': args.a1, 'b1': args.b1}}
    return {}


def run_command(args, settings):
    cmd = args.command
    if cmd == 'simulate':
        SimulateRunner(args.out_dir, settings).run()
    elif cmd == 'fit':
        FitRunner(args.out_dir, settings).run()
    elif cmd == 'diagnose':
        DiagnoseRunner(args.out_dir or args.fit_dir, settings).run(args.fit_dir)
    elif cmd == 'ppc':
        PpcRunner(args.out_dir or args.fit_dir, settings).run(args.fit_dir, truth_path=args.truth)
    elif cmd == 'study':
        StudyRunner(args.out_dir, settings).run(int(settings['study']['study']))
    elif cmd == 'describe':
        input_settings = settings['input']
        model = 'poisson' if input_settings.get('edges') == 'count' else 'logit'
        summary = describe_network(load_input_network(input_settings, model))
        print(json.dumps(summary, indent=2))
    elif cmd == 'prior':
        hp = Hyperparams.from_mapping(settings['prior'])
        table = expected_distance_table(hp, args.a2_values, args.p_max)
        if args.out_dir:
            save_frame(table, f"{args.out_dir}/expected_distances.csv")
            save_json({'command': 'prior', 'version': VERSION, 'config': settings},
                      f"{args.out_dir}/prior_manifest.json")
        print(table.to_csv(index=False), end='')


def main(argv=None):
    """
    Run one lspm command.

    Returns:
        0 on success, 1 on usage or validation errors, 2 on runtime failures
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as e:
        print(str(e), file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as e:
        return EXIT_OK if e.code in (None, 0) else EXIT_USAGE

    setup_logger()
    try:
        file_cfg = load_config_file(args.config) if getattr(args, 'config', None) else None
        settings = resolve_settings(file_cfg, collect_overrides(args))
        run_command(args, settings)
    except ValidationError as e:
        logger.error(f"{args.command}: {e}")
        print(f"lspm {args.command}: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as e:
        logger.error(f"{args.command} failed: {e}")
        print(f"lspm {args.command}: failed: {e}", file=sys.stderr)
        return EXIT_FAILURE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

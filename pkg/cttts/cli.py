# **************************************************************************
# *
# * Authors:     cttts developers
# *
# * This program is free software; you can redistribute it and/or modify
# * it under the terms of the GNU General Public License as published by
# * the Free Software Foundation; either version 3 of the License, or
# * (at your option) any later version.
# *
# * This program is distributed in the hope that it will be useful,
# * but WITHOUT ANY WARRANTY; without even the implied warranty of
# * MERCHANTABILITY or FITNESS FOR A PARTICULAR PURPOSE.  See the
# * GNU General Public License for more details.
# *
# * You should have received a copy of the GNU General Public License
# * along with this program; if not, write to the Free Software
# * Foundation, Inc., 59 Temple Place, Suite 330, Boston, MA
# * 02111-1307  USA
# *
# **************************************************************************

"""
Command line entry point.

  cttts run --config exp.json --out curve.csv
  cttts solve-allocation --instance inst.json
  cttts rates --family gaussian-known-var --psi 0.5 0.5 --theta-d 1 1 --theta-dp 0 1
  cttts policy-prob --pi '[[0.6, 0.4]]' --gamma 0.5
"""

import argparse, json, logging, os, sys, time

import numpy as np

from cttts import Plugin
from cttts.constants import *
from cttts.allocation import fixedGammaAllocation, kktResidualBest, optimizeGamma, solveTopmAllocation
from cttts.harness import ExperimentConfig, runExperiment
from cttts.instances import buildInstance, instanceFromDict
from cttts.objects import ConfigError, CtttsError, ReplicationError
from cttts.posteriors import klGaussian, klWeibullCensored
from cttts.protocols import analyticPolicyProb, buildPolicy
from cttts.rates import ProfileRate, contextRatesFromDict, contextRatesFromInstance, rateGaussianKnownVar, \
  rateSpec
from cttts.viewers import exportCsv, exportPlotData, exportRatios, outputPaths, writeMetadata

logger = logging.getLogger(__name__)

DEFAULT_OUT = 'cttts_curve.csv'


class ArgumentParser(argparse.ArgumentParser):
    '''argparse exits with 2 on bad arguments; here argument errors are configuration errors'''

    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write('{}: error: {}\n'.format(self.prog, message))
        raise SystemExit(EXIT_CONFIG)


def buildParser():
    parser = ArgumentParser(prog='cttts', description='Contextual top-m ranking and selection by top-two '
                                                      'Thompson sampling')
    parser.add_argument('--log-level', default=None, help='Logging level (default from {})'.format(LOG_LEVEL_VAR))
    sub = parser.add_subparsers(dest='command', required=True, parser_class=ArgumentParser)

    run = sub.add_parser('run', help='Run a macro-replication experiment and write its curves')
    run.add_argument('--config', required=True, help='JSON experiment configuration')
    run.add_argument('--out', default=None, help='Output CSV (default: config output.csv or {})'.format(DEFAULT_OUT))
    run.add_argument('--seed', type=int, default=None, help='Override base_seed')
    run.add_argument('--reps', type=int, default=None, help='Override macro_reps')
    run.add_argument('--budget', type=int, default=None, help='Override budget')
    run.add_argument('--parallelism', type=int, default=None,
                     help='Override parallelism ({} wins over both)'.format(THREADS_VAR))

    solve = sub.add_parser('solve-allocation', help='Solve the static allocation problem of an instance')
    solve.add_argument('--instance', required=True, help='Instance JSON or rate document JSON')
    solve.add_argument('--gamma-mode', choices=['optimize', 'fixed'], default='optimize')
    solve.add_argument('--gamma', type=float, default=DEFAULT_GAMMA, help='Gamma used by --gamma-mode fixed')
    solve.add_argument('--m', type=int, default=None, help='Override the top-m size of every context')
    solve.add_argument('--solver', choices=['auto', 'best', 'topm'], default='auto')

    rates = sub.add_parser('rates', help='Evaluate a rate function or a KL divergence')
    rates.add_argument('--family', choices=RATE_FAMILIES, default=None)
    rates.add_argument('--psi', type=float, nargs=2, metavar=('X', 'Y'))
    rates.add_argument('--theta-d', type=float, nargs=2, metavar=('MU', 'ETA'))
    rates.add_argument('--theta-dp', type=float, nargs=2, metavar=('MU', 'ETA'))
    rates.add_argument('--scale', type=float, default=1.0, help='Scale of the harmonic and min families')
    rates.add_argument('--kl', choices=[GAUSSIAN, 'weibull'], default=None)
    rates.add_argument('--theta1', type=float, nargs=2, metavar=('MU', 'ETA'))
    rates.add_argument('--theta2', type=float, nargs=2, metavar=('MU', 'ETA'))
    rates.add_argument('--tau', type=float, default=None, help='Censoring time of the Weibull family')

    prob = sub.add_parser('policy-prob', help='Exact TTTS-C sampling probabilities for given best-design '
                                              'probabilities')
    prob.add_argument('--pi', required=True, help='JSON list of per-context probability vectors, or a file')
    prob.add_argument('--gamma', type=float, default=DEFAULT_GAMMA)
    return parser


def main(argv=None):
    parser = buildParser()
    args = parser.parse_args(argv)
    Plugin.configureLogging(args.log_level.upper() if args.log_level else None)
    commands = {'run': cmdRun, 'solve-allocation': cmdSolve, 'rates': cmdRates, 'policy-prob': cmdPolicyProb}
    try:
        return commands[args.command](args)
    except ConfigError as e:
        sys.stderr.write('Configuration error: {}\n'.format(e))
        return EXIT_CONFIG
    except ReplicationError as e:
        sys.stderr.write('Replication {} failed: {}\n'.format(e.rep, e.message))
        return EXIT_RUNTIME
    except (CtttsError, ArithmeticError) as e:
        sys.stderr.write('Runtime error: {}\n'.format(e))
        return EXIT_RUNTIME
    except OSError as e:
        sys.stderr.write('I/O error: {}\n'.format(e))
        return EXIT_RUNTIME


def cmdRun(args):
    config = ExperimentConfig.fromDict(readJson(args.config))
    overrides = {'baseSeed': args.seed, 'macroReps': args.reps, 'budget': args.budget,
                 'parallelism': args.parallelism}
    for attr, value in overrides.items():
        if value is not None:
            setattr(config, attr, value)

    try:
        instance = buildInstance(config.instance)
    except (OSError, TypeError, ValueError) as e:
        raise ConfigError('cannot build the instance: {}'.format(e))
    citations = []
    for policyConfig in config.policies:
        citations += buildPolicy(policyConfig, instance)._citations()

    start = time.perf_counter()
    curve = runExperiment(config, instance=instance)
    wallTime = time.perf_counter() - start

    csvPath = args.out or config.output.get('csv', DEFAULT_OUT)
    csvPath, metaPath, plotPath, ratiosPath = outputPaths(csvPath, config.output if not args.out else None)
    exportCsv(curve, csvPath)
    exportPlotData(curve, plotPath)
    exportRatios(curve, instance, ratiosPath)
    writeMetadata(metaPath, config, curve, wallTime, citations)
    logger.info('Experiment finished in %.1f s', wallTime)
    return EXIT_OK


def cmdSolve(args):
    dic = readJson(args.instance)
    try:
        if dic.get('kind') == 'rates':
            contextRates = contextRatesFromDict(dic)
            if args.m is not None and any(ctx.m != args.m for ctx in contextRates):
                raise ConfigError('--m {} does not match the preferred sets of the rate document'.format(args.m))
        else:
            if args.m is not None:
                dic = dict(dic, m=args.m)
            contextRates = contextRatesFromInstance(instanceFromDict(dic))
    except (KeyError, TypeError, ValueError) as e:
        raise ConfigError('invalid allocation input {}: {}'.format(args.instance, e))

    solver = args.solver
    if solver == 'auto':
        solver = 'best' if all(ctx.m == 1 for ctx in contextRates) else 'topm'
    if solver == 'best' and any(ctx.m != 1 for ctx in contextRates):
        raise ConfigError('the best solver needs m = 1 in every context')
    if args.gamma_mode == 'fixed' and solver != 'best':
        raise ConfigError('a fixed gamma needs the best solver')
    if not 0 < args.gamma < 1:
        raise ConfigError('gamma must lie in (0, 1)')

    if solver == 'topm':
        allocation = solveTopmAllocation(contextRates)
        residuals = {'balance': allocation.residual}
    else:
        if args.gamma_mode == 'fixed':
            allocation = fixedGammaAllocation(contextRates, args.gamma)
        else:
            _, allocation = optimizeGamma(contextRates)
        residuals = kktSummary(allocation, contextRates)

    result = allocation.toDict([ctx.designIds for ctx in contextRates])
    result.update({'solver': solver, 'gamma_mode': args.gamma_mode, 'residuals': residuals})
    writeJson(result)
    return EXIT_OK


def cmdRates(args):
    if args.kl:
        if args.theta1 is None or args.theta2 is None:
            raise ConfigError('--kl needs --theta1 and --theta2')
        try:
            if args.kl == GAUSSIAN:
                value = klGaussian(args.theta1, args.theta2)
            else:
                value = klWeibullCensored(args.theta1, args.theta2, args.tau or Plugin.getWeibullTau())
        except ValueError as e:
            raise ConfigError(str(e))
        writeJson({'kl': args.kl, 'value': value})
        return EXIT_OK

    if args.family is None or args.psi is None:
        raise ConfigError('rates needs --family and --psi, or --kl')
    x, y = args.psi
    if x < 0 or y < 0:
        raise ConfigError('sampling ratios must be non negative')
    result = {'family': args.family, 'psi': [x, y]}
    try:
        if args.family in (RATE_HARMONIC, RATE_MIN):
            result['value'] = rateSpec(args.family, scale=args.scale).value(x, y)
        else:
            if args.theta_d is None or args.theta_dp is None:
                raise ConfigError('{} needs --theta-d and --theta-dp'.format(args.family))
            spec = rateSpec(args.family, args.theta_d, args.theta_dp, tau=args.tau)
            value, crossing = spec.profileValue(x, y) if isinstance(spec, ProfileRate) else (spec.value(x, y), None)
            if args.family == RATE_KNOWN_VAR:
                value = rateGaussianKnownVar(x, y, args.theta_d[0], args.theta_dp[0], args.theta_d[1],
                                             args.theta_dp[1])
            result.update({'value': value, 'crossing_mu': crossing})
    except ValueError as e:
        raise ConfigError(str(e))
    writeJson(result)
    return EXIT_OK


def cmdPolicyProb(args):
    pi = readJson(args.pi) if os.path.exists(args.pi) else parseJson(args.pi, '--pi')
    try:
        psi, alpha, beta = analyticPolicyProb(pi, args.gamma)
    except (TypeError, ValueError) as e:
        raise ConfigError(str(e))
    writeJson({'gamma': args.gamma, 'psi': psi, 'alpha': alpha, 'beta': beta})
    return EXIT_OK


# ---------------------------------- Utils functions  -----------------------
def kktSummary(allocation, contextRates):
    try:
        kkt = kktResidualBest(allocation, contextRates)
    except ValueError as e:
        logger.warning('Optimality residuals not available: %s', e)
        return {'first_order': None, 'balance_spread': None, 'kinks': []}
    return {'first_order': kkt.firstOrder, 'balance_spread': kkt.balanceSpread, 'kinks': [list(k) for k in kkt.kinks]}


def readJson(path):
    try:
        with open(path) as f:
            text = f.read()
    except OSError as e:
        raise ConfigError('cannot read {}: {}'.format(path, e))
    return parseJson(text, path)


def parseJson(text, where):
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError('{}: malformed JSON at line {} column {}: {}'.format(where, e.lineno, e.colno, e.msg))


def writeJson(obj, stream=None):
    stream = stream or sys.stdout
    json.dump(obj, stream, indent=2, sort_keys=True, default=_jsonDefault)
    stream.write('\n')


def _jsonDefault(obj):
    if isinstance(obj, np.ndarray):
        return [None if isinstance(v, float) and np.isnan(v) else v for v in obj.tolist()]
    if isinstance(obj, np.generic):
        return obj.item()
    raise TypeError('{} is not JSON serializable'.format(type(obj).__name__))


if __name__ == '__main__':
    sys.exit(main())

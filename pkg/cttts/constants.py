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

# Families
GAUSSIAN = 'gaussian'
WEIBULL = 'weibull-censored'
FAMILIES = [GAUSSIAN, WEIBULL]

# Rate function families
RATE_KNOWN_VAR = 'gaussian-known-var'
RATE_UNKNOWN_VAR = 'gaussian-unknown-var'
RATE_WEIBULL = 'weibull-censored'
RATE_HARMONIC = 'harmonic'
RATE_MIN = 'min'
RATE_FAMILIES = [RATE_KNOWN_VAR, RATE_UNKNOWN_VAR, RATE_WEIBULL, RATE_HARMONIC, RATE_MIN]

# Policies
TTTSC_COIN = 'tttsc-coin'
TTTSC_TUNE = 'tttsc-tune'
EA = 'ea'
BOLDMC = 'boldmc'
AOAMC = 'aoamc'
POLICY_NAMES = [TTTSC_COIN, TTTSC_TUNE, EA, BOLDMC, AOAMC]

# Posterior families a policy can run
POSTERIOR_NG = 'gaussian'
POSTERIOR_GRID = 'weibull'
POSTERIOR_NAMES = [POSTERIOR_NG, POSTERIOR_GRID]

# Selection modes
SELECT_PLUGIN = 'plugin'
SELECT_BAYES = 'bayes'
SELECTION_MODES = [SELECT_PLUGIN, SELECT_BAYES]
DEFAULT_BAYES_DRAWS = 1000

# Instance generation
GAUSSIAN_MEAN_VAR = 10.0
GAUSSIAN_SIGMA_RANGE = (4.0, 6.0)
GAUSSIAN_THETA_BOX = (-1000.0, 1000.0, 1e-6, 1e4)

WEIBULL_SIZES = (5, 5, 7, 6, 7)
WEIBULL_M = (1, 1, 1, 2, 2)
WEIBULL_MU_RANGE = (90.0, 110.0)
WEIBULL_K_RANGE = (2.0, 4.0)
WEIBULL_THETA_BOX = (0.0, 200.0, 0.0, 20.0)
WEIBULL_TAU = 150.0

DESIGN_ID = 'c{}_d{}'
CONTEXT_ID = 'c{}'

# Posterior defaults
NG_PRIOR = (0.0, 1e-3, 1e-3, 1e-3)
REJECTION_BUDGET = 1000
GRID_RHO = (0.1, 200.0, 200)
GRID_K = (0.1, 20.0, 100)
KL_ABS_TOL = 1e-8

# Policies defaults
DEFAULT_GAMMA = 0.5
RESAMPLE_CAP = 1000
TUNE_SCHEDULE = (10, 100, 1000, 10000)
GAMMA_BOUNDS = (1e-3, 1 - 1e-3)
VARIANCE_FLOOR = 1e-12

# Solver tolerances
BALANCE_TOL = 1e-10
BISECTION_MAXITER = 200
LINE_SEARCH_TOL = 1e-6
BRENT_XTOL = 1e-14
LINE_SEARCH_GRID = 64
NUISANCE_GRID = 128
PROFILE_NODES = 41
GAMMA_GRID = 50
EG_ITERATIONS = 5000
EG_STEP = 0.5
EG_RECORD_EVERY = 250
TOPM_RESIDUAL_TOL = 1e-3
FD_STEP = 1e-6
KINK_TOL = 1e-4
CLASS_TOL = 1e-6
POLICY_PROB_MAX_FUNCTIONS = 10 ** 6
POLICY_PROB_MAX_CONTEXTS = 12

# Harness defaults
DEFAULT_INIT_PER_DESIGN = 10
DEFAULT_N_CHECKPOINTS = 20
DEFAULT_REPS = 100
DEFAULT_SEED = 0
DEFAULT_PARALLELISM = 1

# Outputs
CSV_HEADER = ['policy', 'checkpoint', 'pcs', 'pcs_se', 'pcsw', 'pcsw_se', 'pcse', 'pcse_se', 'reps']
PLOT_HEADER = ['policy', 'checkpoint', 'log_pics', 'log_picsw', 'log_picse']
RATIO_HEADER = ['policy', 'checkpoint', 'context', 'design', 'alpha', 'beta']
CSV_FLOAT = '{:.10g}'
META_SUFFIX = '.meta.json'
PLOT_SUFFIX = '_logpics.csv'
RATIO_SUFFIX = '_ratios.csv'

# Environment variables
THREADS_VAR = 'CTTTS_THREADS'
TAU_VAR = 'CTTTS_WEIBULL_TAU'
LOG_LEVEL_VAR = 'CTTTS_LOG_LEVEL'
SLOW_TESTS_VAR = 'CTTTS_SLOW_TESTS'
LOG_FORMAT = '%(asctime)s %(levelname)s %(name)s: %(message)s'

# Configuration keys
CONFIG_KEYS = ['instance', 'policies', 'budget', 'init_per_design', 'checkpoints', 'macro_reps', 'base_seed',
               'weights', 'parallelism', 'selection_mode', 'bayes_draws', 'output']
INSTANCE_KEYS = ['generator', 'path', 'seed', 'n_contexts', 'n_designs', 'm', 'tau']
GENERATORS = [GAUSSIAN, 'weibull']
POLICY_KEYS = ['name', 'label', 'gamma', 'posterior', 'resample_cap', 'allow_fallback', 'tune_schedule',
               'tune_rate_family']
OUTPUT_KEYS = ['csv', 'metadata', 'plot', 'ratios']

# Exit codes
EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_RUNTIME = 2

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
Top-two Thompson sampling for contextual top-m ranking and selection,
with baseline policies, posterior models, static allocation solvers and a
seeded macro-replication harness.
"""
import os, json, logging

from .constants import *

CTTTS_DIC = {'name': 'cttts', 'version': '1.0', 'envPrefix': 'CTTTS_'}

__version__ = CTTTS_DIC['version']


class Plugin:
  _vars = {}

  @classmethod
  def _defineVariables(cls):
    """ Register the configuration variables and their defaults.
    """
    cls._defineVar(THREADS_VAR, DEFAULT_PARALLELISM)
    cls._defineVar(TAU_VAR, WEIBULL_TAU)
    cls._defineVar(LOG_LEVEL_VAR, 'WARNING')
    cls._defineVar(SLOW_TESTS_VAR, '0')

  @classmethod
  def _defineVar(cls, varName, defaultValue):
    cls._vars[varName] = defaultValue

  @classmethod
  def getVar(cls, varName, default=None):
    """ Value of a variable: environment first, registered default second. """
    if not cls._vars:
      cls._defineVariables()
    if varName in os.environ and os.environ[varName] != '':
      return os.environ[varName]
    return cls._vars.get(varName, default)

  @classmethod
  def getThreads(cls, default=None):
    '''Parallelism for the harness; CTTTS_THREADS wins over the given default'''
    if THREADS_VAR in os.environ and os.environ[THREADS_VAR] != '':
      return max(1, int(os.environ[THREADS_VAR]))
    return max(1, int(default if default is not None else cls.getVar(THREADS_VAR)))

  @classmethod
  def getWeibullTau(cls):
    return float(cls.getVar(TAU_VAR))

  @classmethod
  def getLogLevel(cls):
    return str(cls.getVar(LOG_LEVEL_VAR)).upper()

  @classmethod
  def runSlowTests(cls):
    return str(cls.getVar(SLOW_TESTS_VAR)).lower() in ('1', 'true', 'yes')

  @classmethod
  def configureLogging(cls, level=None):
    """ Attach a single stderr handler to the package logger. """
    logger = logging.getLogger(CTTTS_DIC['name'])
    level = level or cls.getLogLevel()
    logger.setLevel(level)
    if not logger.handlers:
      handler = logging.StreamHandler()
      handler.setFormatter(logging.Formatter(LOG_FORMAT))
      logger.addHandler(handler)
    return logger

  # ---------------------------------- Utils functions  -----------------------
  @classmethod
  def getTestDataset(cls, name):
    '''Named dataset of testData.json'''
    with open(os.path.join(os.path.dirname(__file__), 'testData.json')) as f:
      return json.load(f)['datasets'][name]

  @classmethod
  def getVersions(cls):
    import numpy, scipy
    return {CTTTS_DIC['name']: CTTTS_DIC['version'], 'numpy': numpy.__version__, 'scipy': scipy.__version__}

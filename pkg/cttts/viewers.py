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

import csv, json, logging, os

import numpy as np

from cttts import Plugin
from cttts.bibtex import getCitations
from cttts.constants import *

logger = logging.getLogger(__name__)


def exportCsv(curve, path):
    '''Writes one row per (policy, checkpoint); floats with 10 significant digits'''
    with open(path, 'w', newline='') as f:
        writer = csv.writer(f, lineterminator='\n')
        writer.writerow(CSV_HEADER)
        for row in curve.rows():
            policy, checkpoint, values, reps = row[0], row[1], row[2:-1], row[-1]
            writer.writerow([policy, checkpoint] + [formatFloat(v) for v in values] + [reps])
    logger.info('Curve written to %s', path)
    return path


def exportPlotData(curve, path):
    """Log probability of incorrect selection, log(1 - metric), per (policy, checkpoint).

    A metric equal to 1 gives -inf.
    """
    with open(path, 'w', newline='') as f:
        writer = csv.writer(f, lineterminator='\n')
        writer.writerow(PLOT_HEADER)
        with np.errstate(divide='ignore'):
            logs = [np.log1p(-np.asarray(metric)) for metric in (curve.pcs, curve.pcsw, curve.pcse)]
        for p, policy in enumerate(curve.policies):
            for k, checkpoint in enumerate(curve.checkpoints):
                writer.writerow([policy, int(checkpoint)] + [formatFloat(log[p, k]) for log in logs])
    return path


def exportRatios(curve, instance, path):
    '''Mean sampling ratios per (policy, checkpoint, design): alpha of the context and beta inside it'''
    with open(path, 'w', newline='') as f:
        writer = csv.writer(f, lineterminator='\n')
        writer.writerow(RATIO_HEADER)
        for p, policy in enumerate(curve.policies):
            for k, checkpoint in enumerate(curve.checkpoints):
                for d, design in enumerate(instance.designIds):
                    c = instance.contextOf[d]
                    writer.writerow([policy, int(checkpoint), instance.contexts[c], design,
                                     formatFloat(curve.contextRatios[p, k, c]),
                                     formatFloat(curve.designRatios[p, k, d])])
    return path


def writeMetadata(path, config, curve, wallTime, citations=()):
    """JSON run metadata: configuration echo, wall time, package versions and citations."""
    meta = {'config': config.toDict() if hasattr(config, 'toDict') else config,
            'wall_time_s': float(wallTime),
            'versions': Plugin.getVersions(),
            'reps': int(curve.reps),
            'flags': list(curve.flags),
            'citations': getCitations(sorted(set(citations)))}
    with open(path, 'w') as f:
        json.dump(meta, f, indent=2, default=_jsonDefault)
    return path


def outputPaths(csvPath, output=None):
    '''(csv, metadata, plot, ratios) paths; explicit `output` entries win over the names derived from csvPath'''
    output = output or {}
    stem, _ = os.path.splitext(csvPath)
    return (csvPath, output.get('metadata', stem + META_SUFFIX), output.get('plot', stem + PLOT_SUFFIX),
            output.get('ratios', stem + RATIO_SUFFIX))


# ---------------------------------- Utils functions  -----------------------
def formatFloat(value):
    return CSV_FLOAT.format(float(value))


def _jsonDefault(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.generic):
        return obj.item()
    raise TypeError('{} is not JSON serializable'.format(type(obj).__name__))

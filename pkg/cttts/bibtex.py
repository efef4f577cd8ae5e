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
@article{russo2020simple,
author = "Russo, Daniel",
title = "Simple Bayesian algorithms for best-arm identification",
journal = "Operations Research",
year = "2020",
volume = "68",
number = "6",
pages = "1625-1647"
}

@article{chen2000simulation,
author = "Chen, Chun-Hung and Lin, Jianwu and Y{\"u}cesan, Enver and Chick, Stephen E.",
title = "Simulation budget allocation for further enhancing the efficiency of ordinal optimization",
journal = "Discrete Event Dynamic Systems",
year = "2000",
volume = "10",
number = "3",
pages = "251-270"
}

"""
import re


def getCitations(keys):
    '''Bibtex entries of this module docstring for the given keys'''
    entries = re.findall(r'(@\w+\{(\w+),.*?\n\})', __doc__, flags=re.S)
    found = {key: entry for entry, key in entries}
    return [found[key] for key in keys if key in found]

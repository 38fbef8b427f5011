#
# nvdg - A discontinuous Galerkin solver for nonvariational elliptic problems
# Copyright (C) 2026  nvdg contributors
#
# This program is free software: you can redistribute it and/or modify
# it under the terms of the GNU General Public License as published by
# the Free Software Foundation, either version 3 of the License, or
# (at your option) any later version.
#
# This program is distributed in the hope that it will be useful,
# but WITHOUT ANY WARRANTY; without even the implied warranty of
# MERCHANTABILITY or FITNESS FOR A PARTICULAR PURPOSE.  See the
# GNU General Public License for more details.
#
# You should have received a copy of the GNU General Public License
# along with this program.  If not, see <https://www.gnu.org/licenses/>.
#


import logging
import os

import numba

logging.basicConfig()
logger = logging.getLogger('nvdg.utils')

THREADS_ENV = "NVDG_THREADS"


def human_time_interval(secs):
    """Format the number of seconds in summarized, human-friendly, string.
    """
    if secs < 60:
        return "%.2fs" % secs

    nsecs = secs
    ndays = int(secs / (24 * 60 * 60))
    nsecs -= ndays * 24 * 60 * 60
    nhours = int(nsecs / (60 * 60))
    nsecs -= nhours * 60 * 60
    nmins = int(nsecs / 60)
    nsecs -= nmins * 60

    if ndays > 0:
        return "%dd %02dh%02dm" % (ndays, nhours, nmins)

    return "%02dh%02dm%02ds" % (nhours, nmins, nsecs)


def threads_from_env(environ=None):
    """Thread cap from NVDG_THREADS, None when unset or empty."""
    environ = os.environ if environ is None else environ
    value = environ.get(THREADS_ENV, "").strip()
    if not value:
        return None
    try:
        return int(value)
    except ValueError:
        raise ValueError(f"{THREADS_ENV} must be an integer, got {value!r}") from None


def set_threads(n):
    """Cap the numba thread pool; returns the count actually in use."""
    logger.debug(f"({n=})")
    if n is None:
        return numba.get_num_threads()
    n = max(1, min(int(n), numba.config.NUMBA_NUM_THREADS))
    numba.set_num_threads(n)
    return n

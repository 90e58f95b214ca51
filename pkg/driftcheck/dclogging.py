# MIT License
#
# Copyright (c) 2026 driftcheck contributors
#
# Permission is hereby granted, free of charge, to any person obtaining a copy
# of this software and associated documentation files (the "Software"), to deal
# in the Software without restriction, including without limitation the rights
# to use, copy, modify, merge, publish, distribute, sublicense, and/or sell
# copies of the Software, and to permit persons to whom the Software is
# furnished to do so, subject to the following conditions:
#
# The above copyright notice and this permission notice shall be included in all
# copies or substantial portions of the Software.
#
# THE SOFTWARE IS PROVIDED "AS IS", WITHOUT WARRANTY OF ANY KIND, EXPRESS OR
# IMPLIED, INCLUDING BUT NOT LIMITED TO THE WARRANTIES OF MERCHANTABILITY,
# FITNESS FOR A PARTICULAR PURPOSE AND NONINFRINGEMENT. IN NO EVENT SHALL THE
# AUTHORS OR COPYRIGHT HOLDERS BE LIABLE FOR ANY CLAIM, DAMAGES OR OTHER
# LIABILITY, WHETHER IN AN ACTION OF CONTRACT, TORT OR OTHERWISE, ARISING FROM,
# OUT OF OR IN CONNECTION WITH THE SOFTWARE OR THE USE OR OTHER DEALINGS IN THE
# SOFTWARE.


import logging as __logging
import os

log_format = '%(levelname)-6s %(name)-40s %(message)s [%(threadName)s]' \
    if os.environ.get('UNDER_SYSTEMD') == "1" \
    else '%(asctime)s.%(msecs)03d %(levelname)-6s %(name)-40s %(message)s [%(threadName)s]'

DEFAULT_LEVEL = __logging.WARNING

_LEVELS = [__logging.DEBUG, __logging.INFO, __logging.WARNING, __logging.ERROR, __logging.CRITICAL]


def level_for(verbosity: int, quietness: int) -> int:
    """Each -v moves one level down from WARNING, each -q one level up."""
    idx = _LEVELS.index(DEFAULT_LEVEL) - verbosity + quietness
    return _LEVELS[max(0, min(len(_LEVELS) - 1, idx))]


def configure(verbosity: int = 0, quietness: int = 0) -> int:
    level = level_for(verbosity, quietness)
    __logging.basicConfig(
        level=level,
        format=log_format,
        datefmt='%Y-%m-%d %H:%M:%S',
        handlers=[__logging.StreamHandler()],
        force=True)
    # numerics libraries are chatty at DEBUG
    __logging.getLogger("numpy").setLevel(max(level, __logging.INFO))
    return level

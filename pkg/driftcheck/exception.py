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


from __future__ import annotations

from contextlib import AbstractContextManager
import logging as __logging

module_logger = __logging.getLogger(__name__)


class capture(AbstractContextManager):
    """Context manager that records the specified exceptions instead of raising them

    Anything else propagates. The caught exception is available as
    ``.error`` after the block:

         with capture(ExprException, GeometryException) as c:
             report = check()
         if c.error:
             ...
    """

    def __init__(self, *exceptions):
        self._exceptions = exceptions
        self.error: BaseException | None = None

    def __enter__(self):
        return self

    def __exit__(self, exctype, excinst, exctb):
        if exctype is not None and issubclass(exctype, self._exceptions):
            self.error = excinst
            module_logger.getChild("capture").debug(f"captured {exctype.__name__}: {excinst}")
            return True
        return False

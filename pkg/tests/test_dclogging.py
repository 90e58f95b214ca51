import logging

import pytest

import driftcheck.dclogging as dclogging


@pytest.mark.parametrize("verbose, quiet, level", [
    (0, 0, logging.WARNING),
    (1, 0, logging.INFO),
    (2, 0, logging.DEBUG),
    (5, 0, logging.DEBUG),
    (0, 1, logging.ERROR),
    (0, 4, logging.CRITICAL),
    (1, 1, logging.WARNING),
])
def test_level_for(verbose, quiet, level):
    assert dclogging.level_for(verbose, quiet) == level


def test_configure_sets_root_level():
    root = logging.getLogger()
    handlers, level = root.handlers[:], root.level
    try:
        assert dclogging.configure(2, 0) == logging.DEBUG
        assert root.level == logging.DEBUG
        assert logging.getLogger("numpy").level == logging.INFO
    finally:
        for h in root.handlers[:]:
            root.removeHandler(h)
        for h in handlers:
            root.addHandler(h)
        root.setLevel(level)

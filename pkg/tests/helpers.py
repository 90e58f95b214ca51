import logging
import os
import pathlib
import random
import tempfile
from typing import Callable

import numpy as np
import pytest
import scipy.linalg as la

import tests

module_logger = logging.getLogger(__name__)

module_abs_filename = os.path.abspath(tests.__file__)
module_dir = os.path.dirname(module_abs_filename)


class tempdir(object):
    """Sets the cwd within the context

    Args:
        cd (bool): change into the directory while inside the context
    """
    def __init__(self, cd: bool = False):
        self.cd = cd
        self.tempdir = tempfile.TemporaryDirectory()
        self.path = self.tempdir.name
        self.origin = pathlib.Path().absolute()

    def write(self, name: str, text: str) -> str:
        path = os.path.join(self.path, name)
        with open(path, "w") as f:
            f.write(text)
        return path

    def __enter__(self):
        if self.cd:
            os.chdir(self.path)
        return self

    def __exit__(self, exc, value, tb):
        if self.cd:
            os.chdir(self.origin)
        self.tempdir.__exit__(exc, value, tb)


def test_tempdir_cleanup():
    with tests.helpers.tempdir() as td:
        path = td.write("scenario.toml", "id = 'x'\n")
        assert os.path.isfile(path)
    assert not os.path.exists(path)


def sturm_liouville(flux: Callable[[np.ndarray], np.ndarray], mass: Callable[[np.ndarray], np.ndarray],
                    lower: float, upper: float, lower_dirichlet: bool, upper_dirichlet: bool,
                    cells: int = 20000, k: int = 1) -> np.ndarray:
    """Lowest eigenvalues of -(flux u')' = lambda mass u by cell-centred finite volumes.

    Ends without a Dirichlet condition are natural (zero flux). When neither end
    is Dirichlet the constant mode is dropped.
    """
    dx = (upper - lower) / cells
    centers = lower + (np.arange(cells) + 0.5) * dx
    faces = lower + np.arange(1, cells) * dx
    w = flux(faces) / dx ** 2
    diag = np.zeros(cells)
    diag[:-1] += w
    diag[1:] += w
    if lower_dirichlet:
        diag[0] += 2.0 * flux(np.array([lower]))[0] / dx ** 2
    if upper_dirichlet:
        diag[-1] += 2.0 * flux(np.array([upper]))[0] / dx ** 2
    m = mass(centers)
    scale = 1.0 / np.sqrt(m)
    d = diag * scale * scale
    e = -w * scale[:-1] * scale[1:]
    skip = 0 if (lower_dirichlet or upper_dirichlet) else 1
    values = la.eigh_tridiagonal(d, e, eigvals_only=True, select="i", select_range=(0, k - 1 + skip))
    return values[skip:]


def gaussian_interval_oracle(lower: float, upper: float, dirichlet: bool) -> float:
    def weight(x):
        return np.exp(-x ** 2 / 2)
    return float(sturm_liouville(weight, weight, lower, upper, dirichlet, dirichlet)[0])


def gaussian_disk_oracle(radius: float = 1.0) -> float:
    """First Dirichlet eigenvalue of the drift Laplacian of h = r^2/2 on a disk; ground state is radial."""
    def weight(r):
        return r * np.exp(-r ** 2 / 2)
    return float(sturm_liouville(weight, weight, 0.0, radius, False, True)[0])


def test_oracle_flat_interval():
    values = sturm_liouville(np.ones_like, np.ones_like, 0.0, 1.0, True, True, k=2)
    assert values[0] == pytest.approx(np.pi ** 2, rel=1e-6)
    assert values[1] == pytest.approx(4 * np.pi ** 2, rel=1e-6)


def test_oracle_hermite():
    # z^2 - 1 vanishes at +-1 and has eigenvalue 2 for -u'' + z u'
    assert gaussian_interval_oracle(-1.0, 1.0, True) == pytest.approx(2.0, rel=1e-6)


_UNARY = ("sin", "cos", "exp")
_BINARY = ("+", "-", "*")


def random_expression(rng: random.Random, dim: int, depth: int = 3) -> str:
    """Random expression text over x1..x<dim>, smooth on all of R^dim."""
    if depth == 0 or rng.random() < 0.25:
        if rng.random() < 0.7:
            return f"x{rng.randint(1, dim)}"
        return f"{rng.uniform(-2.0, 2.0):.3f}"
    r = rng.random()
    if r < 0.3:
        inner = random_expression(rng, dim, depth - 1)
        func = rng.choice(_UNARY)
        if func == "exp":
            return f"exp(0.3*({inner}))"
        return f"{func}({inner})"
    if r < 0.45:
        return f"({random_expression(rng, dim, depth - 1)})^2"
    op = rng.choice(_BINARY)
    return f"({random_expression(rng, dim, depth - 1)} {op} {random_expression(rng, dim, depth - 1)})"


def random_polynomial(rng: random.Random, dim: int, degree: int = 3) -> str:
    terms = []
    for total in range(degree + 1):
        for a in range(total + 1):
            b = total - a
            if dim == 1 and b:
                continue
            coeff = rng.uniform(-1.0, 1.0)
            factors = [f"{coeff:.4f}"]
            if a:
                factors.append(f"x1^{a}")
            if b:
                factors.append(f"x2^{b}")
            terms.append("*".join(factors))
    return " + ".join(terms)


def central_difference(func: Callable[[np.ndarray], float], point: np.ndarray, alpha: tuple, step: float) -> float:
    """Mixed partial derivative d^alpha func at point by nested 4th-order central differences."""
    stencil = ((-2, 1.0 / 12.0), (-1, -8.0 / 12.0), (1, 8.0 / 12.0), (2, -1.0 / 12.0))
    axes = [i for i, n in enumerate(alpha) for _ in range(n)]

    def nested(p, remaining):
        if not remaining:
            return func(p)
        axis, rest = remaining[0], remaining[1:]
        total = 0.0
        for offset, c in stencil:
            q = p.copy()
            q[axis] += offset * step
            total += c * nested(q, rest)
        return total / step

    return nested(np.asarray(point, dtype=np.float64), axes)

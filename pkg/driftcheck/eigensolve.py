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

import enum
import logging as __logging
from dataclasses import dataclass

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp
import scipy.sparse.linalg as spla

module_logger = __logging.getLogger(__name__)

DENSE_LIMIT = 2500


def _get_logger(name: str):
    global module_logger
    return module_logger.getChild(name)


class EGType(enum.IntEnum):
    EG_NOT_POSITIVE_DEFINITE = 0
    EG_CONVERGENCE_FAILURE = 1
    EG_ZERO_VECTOR = 2
    EG_INVALID_REQUEST = 3


class EigenException(Exception):
    def __init__(self, egtype: EGType, msg: str, residual: float | None = None, *args):
        super().__init__(msg, args)
        self.type = egtype
        self.msg = msg
        self.residual = residual

    def __str__(self):
        return self.msg if self.residual is None else f"{self.msg} (residual {self.residual:.3e})"


@dataclass(frozen=True)
class EigenResult:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    residuals: np.ndarray
    method: str

    @property
    def first(self) -> float:
        return float(self.eigenvalues[0])


def residual_norms(K, B, values: np.ndarray, vectors: np.ndarray) -> np.ndarray:
    kv = K @ vectors
    bv = B @ vectors
    return np.linalg.norm(kv - bv * values[None, :], axis=0) / np.linalg.norm(bv, axis=0)


def check_positive_definite(B) -> None:
    """Raise unless the symmetric matrix B is positive definite."""
    if sp.issparse(B) and B.shape[0] > DENSE_LIMIT:
        # without pivoting, LU of a symmetric matrix has a positive U diagonal iff it is PD
        try:
            lu = spla.splu(sp.csc_matrix(B), permc_spec="NATURAL", diag_pivot_thresh=0.0,
                           options={"SymmetricMode": True})
        except RuntimeError as e:
            raise EigenException(EGType.EG_NOT_POSITIVE_DEFINITE, f"mass matrix factorization failed: {e}") from e
        if np.any(lu.U.diagonal() <= 0.0):
            raise EigenException(EGType.EG_NOT_POSITIVE_DEFINITE, "mass matrix is not positive definite")
        return
    try:
        la.cholesky(_dense(B), lower=True)
    except la.LinAlgError as e:
        raise EigenException(EGType.EG_NOT_POSITIVE_DEFINITE, "mass matrix is not positive definite") from e


def _dense(m) -> np.ndarray:
    return m.toarray() if sp.issparse(m) else np.asarray(m, dtype=np.float64)


def _fix_signs(vectors: np.ndarray) -> np.ndarray:
    idx = np.argmax(np.abs(vectors), axis=0)
    signs = np.sign(vectors[idx, np.arange(vectors.shape[1])])
    signs[signs == 0] = 1.0
    return vectors * signs[None, :]


def _dense_pairs(K, B, k: int, deflate_constant: bool) -> tuple[np.ndarray, np.ndarray]:
    kd, bd = _dense(K), _dense(B)
    if deflate_constant:
        # orthonormal basis of the B-orthogonal complement of the constants
        z = la.null_space((bd @ np.ones(bd.shape[0]))[None, :])
        kd, bd = z.T @ kd @ z, z.T @ bd @ z
        kd, bd = 0.5 * (kd + kd.T), 0.5 * (bd + bd.T)
        values, y = la.eigh(kd, bd, subset_by_index=[0, k - 1])
        return values, z @ y
    return la.eigh(kd, bd, subset_by_index=[0, k - 1])


def _shift_invert_pairs(K, B, k: int, tol: float, deflate_constant: bool,
                        shift: float | None) -> tuple[np.ndarray, np.ndarray]:
    n = K.shape[0]
    if shift is None:
        shift = -1e-3 * float(K.diagonal().sum() / B.diagonal().sum())
    factor = spla.splu(sp.csc_matrix(K - shift * B))
    ones = np.ones(n)
    b_ones = B @ ones
    b_norm = float(ones @ b_ones)

    def project(x):
        if not deflate_constant:
            return x
        return x - ones * (b_ones @ x) / b_norm

    opinv = spla.LinearOperator((n, n), matvec=lambda x: project(factor.solve(np.asarray(x).reshape(-1))),
                                dtype=np.float64)
    v0 = project(np.cos(np.arange(n, dtype=np.float64)))
    try:
        values, vectors = spla.eigsh(K, k=k, M=B, sigma=shift, which="LM", OPinv=opinv, v0=v0,
                                     tol=min(tol, 1e-10) * 1e-2)
    except spla.ArpackNoConvergence as e:
        res = residual_norms(K, B, e.eigenvalues, e.eigenvectors) if len(e.eigenvalues) else np.array([np.inf])
        raise EigenException(EGType.EG_CONVERGENCE_FAILURE, "shift-invert iteration did not converge",
                             residual=float(np.max(res))) from e
    order = np.argsort(values)
    values, vectors = values[order], vectors[:, order]
    norms = np.sqrt(np.einsum("ik,ik->k", vectors, B @ vectors))
    return values, vectors / norms[None, :]


def smallest_eigenpairs(K, B, k: int = 1, tol: float = 1e-6, deflate_constant: bool = False,
                        method: str = "auto", shift: float | None = None) -> EigenResult:
    """The k smallest pairs of K v = lambda B v, skipping the constant mode when asked."""
    log = _get_logger("smallest_eigenpairs")
    n = K.shape[0]
    available = n - 1 if deflate_constant else n
    if k < 1 or k > available:
        raise EigenException(EGType.EG_INVALID_REQUEST, f"cannot compute {k} eigenpairs of a size-{n} problem")
    if method == "auto":
        method = "dense" if n <= DENSE_LIMIT else "shift-invert"
    if method not in ("dense", "shift-invert"):
        raise EigenException(EGType.EG_INVALID_REQUEST, f"unknown method {method!r}")
    if method == "shift-invert" and k >= available:
        raise EigenException(EGType.EG_INVALID_REQUEST, "shift-invert needs k below the problem size")
    check_positive_definite(B)

    if method == "dense":
        values, vectors = _dense_pairs(K, B, k, deflate_constant)
    else:
        values, vectors = _shift_invert_pairs(sp.csr_matrix(K), sp.csr_matrix(B), k, tol, deflate_constant, shift)
    vectors = _fix_signs(vectors)
    residuals = residual_norms(K, B, values, vectors)
    worst = float(np.max(residuals))
    log.debug(f"{method}: n={n} k={k} lambda_1={values[0]:.12g} residual={worst:.3e}")
    if not worst <= tol:
        raise EigenException(EGType.EG_CONVERGENCE_FAILURE, f"{method} eigenpairs exceed residual tolerance {tol:g}",
                             residual=worst)
    return EigenResult(eigenvalues=np.asarray(values, dtype=np.float64), eigenvectors=vectors,
                       residuals=residuals, method=method)


def rayleigh_quotient(K, B, v) -> float:
    v = np.asarray(v, dtype=np.float64)
    denom = float(v @ (B @ v))
    if not np.any(v) or denom == 0.0:
        raise EigenException(EGType.EG_ZERO_VECTOR, "Rayleigh quotient of a zero vector")
    return float(v @ (K @ v)) / denom

"""ν-parameterized one-class SVM with an RBF kernel.

Training solves the Schölkopf dual — minimize ½ Σᵢⱼ αᵢαⱼ k(xᵢ,xⱼ) subject to
0 ≤ αᵢ ≤ 1/(νn) and Σα = 1 — by two-coordinate descent on the most-violating
pair (see kernels.smo_solve). The decision function is
f(x) = Σᵢ αᵢ k(xᵢ, x) − ρ with f ≥ 0 meaning target-like.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import kernels, numcore
from .errors import DataError, NumericError, UsageError

SUM_TOL = 1e-9
BOX_TOL = 1e-12


@dataclass
class OcSvmConfig:
    nu: float = 0.01
    gamma: object = "scale"  # positive float, or "scale" for 1/(d*Var)
    tol: float = 1e-6
    max_iter: int = 100_000

    def validate(self):
        if not (isinstance(self.nu, (int, float)) and 0.0 < self.nu <= 1.0):
            raise UsageError(f"nu must be in (0, 1], got {self.nu!r}")
        if isinstance(self.gamma, str):
            if self.gamma != "scale":
                raise UsageError(f"gamma must be positive or 'scale', got {self.gamma!r}")
        elif not (
            isinstance(self.gamma, (int, float))
            and math.isfinite(self.gamma)
            and self.gamma > 0
        ):
            raise UsageError(f"gamma must be positive or 'scale', got {self.gamma!r}")
        if not (math.isfinite(self.tol) and self.tol > 0):
            raise UsageError(f"tol must be positive, got {self.tol!r}")
        if not (isinstance(self.max_iter, int) and self.max_iter >= 1):
            raise UsageError(f"max_iter must be an integer >= 1, got {self.max_iter!r}")


@dataclass
class OcSvmModel:
    alphas: np.ndarray  # all n training coefficients
    rho: float
    gamma: float
    support_vectors: np.ndarray  # training rows where alpha > 0
    dim: int
    nu: float
    converged: bool
    tol: float = 1e-6  # KKT gap the solver terminated at
    normalized: bool = False

    @property
    def sv_alphas(self):
        return self.alphas[self.alphas > 0.0]

    def check_invariants(self):
        n = self.alphas.shape[0]
        upper = 1.0 / (self.nu * n)
        if abs(float(self.alphas.sum()) - 1.0) > SUM_TOL:
            raise NumericError("dual coefficients do not sum to 1")
        if np.any(self.alphas < 0.0) or np.any(self.alphas > upper + BOX_TOL):
            raise NumericError("dual coefficients violate the box constraint")
        if not math.isfinite(self.rho):
            raise NumericError("rho is not finite")


def _resolve_rho(alphas, grad, upper, tol):
    """Offset ρ: mean gradient over free vectors, else bound-interval midpoint."""
    free = (alphas > 0.0) & (alphas < upper - tol)
    if np.any(free):
        return float(np.mean(grad[free]))
    at_upper = alphas >= upper - tol
    at_zero = ~at_upper
    lo = float(np.max(grad[at_upper])) if np.any(at_upper) else None
    hi = float(np.min(grad[at_zero])) if np.any(at_zero) else None
    if lo is not None and hi is not None:
        return 0.5 * (lo + hi)
    return lo if lo is not None else hi


def ocsvm_train(data, config=None):
    """Fit the one-class SVM; returns a model auditing its own invariants.

    Non-convergence within max_iter is not an error: the best iterate is
    returned with converged=False.
    """
    config = config or OcSvmConfig()
    config.validate()
    x = np.ascontiguousarray(data, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] < 2:
        raise DataError(f"training needs an (n>=2, d) matrix, got {x.shape}")
    if not np.all(np.isfinite(x)):
        raise DataError("training data contains non-finite values")
    n = x.shape[0]
    gamma = (
        numcore.gamma_scale(x) if isinstance(config.gamma, str) else float(config.gamma)
    )
    K = numcore.rbf_gram(x, x, gamma)
    upper = 1.0 / (config.nu * n)
    alphas = np.full(n, 1.0 / n, dtype=np.float64)
    grad = K @ alphas
    _, converged = kernels.smo_solve(K, alphas, grad, upper, config.tol, config.max_iter)
    rho = _resolve_rho(alphas, grad, upper, config.tol)
    model = OcSvmModel(
        alphas=alphas,
        rho=rho,
        gamma=gamma,
        support_vectors=x[alphas > 0.0].copy(),
        dim=x.shape[1],
        nu=float(config.nu),
        converged=bool(converged),
        tol=float(config.tol),
    )
    model.check_invariants()
    return model


def ocsvm_decision(model, x):
    """f(x) = Σ αᵢ k(xᵢ, x) − ρ for one vector (float) or an (m, d) batch.

    Values within 2·tol of zero are reported as exactly 0.0: the solver
    terminates once every KKT gap is ≤ tol, so any point still holding
    α below its cap satisfies f ≥ −tol, and the sign of |f| ≤ 2·tol is
    noise below the optimizer's resolution, not a verdict. Genuinely
    negative decisions therefore come only from capped-α outliers, of
    which there are at most ν·n — the ν-property survives in float.
    """
    arr = np.asarray(x, dtype=np.float64)
    single = arr.ndim == 1
    if single:
        arr = arr[None, :]
    if arr.ndim != 2 or arr.shape[1] != model.dim:
        raise DataError(f"query dimension {arr.shape} does not match {model.dim}")
    K = numcore.rbf_gram(np.ascontiguousarray(arr), model.support_vectors, model.gamma)
    scores = K @ model.sv_alphas - model.rho
    scores[np.abs(scores) <= 2.0 * model.tol] = 0.0
    return float(scores[0]) if single else scores


def dual_objective(alphas, K):
    """½ αᵀKα — the quantity the solver decreases monotonically."""
    return 0.5 * float(alphas @ K @ alphas)

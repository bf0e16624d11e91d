"""Binary soft-margin RBF SVM trained with sequential minimal optimization.

The solver works on the dual

    max  sum(a) - 1/2 sum_ij a_i a_j y_i y_j K_ij
    s.t. 0 <= a_i <= C,  sum_i a_i y_i = 0

and picks, at every step, the maximal violating pair: the index in the "up"
set with the smallest error and the index in the "low" set with the largest
error. Optimization stops once that gap drops to ``kkt_tolerance``; the bias
is then placed at the midpoint, which leaves every sample within half the
tolerance of its KKT condition.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import (
    DimensionMismatch,
    IterationLimitExceeded,
    NonFiniteFeature,
    SingleClassInput,
)

DENSE_KERNEL_LIMIT = 4096
ALPHA_EPS = 1e-12
TAU = 1e-12
BOUND_EPS = 1e-12


@dataclass(frozen=True)
class SvmParams:
    C: float = 10.0
    gamma: Optional[float] = None  # None -> 1 / dim at training time
    kkt_tolerance: float = 1e-3
    max_passes: int = 10
    max_iterations: int = 100_000

    def __post_init__(self):
        if self.C <= 0 or self.kkt_tolerance <= 0:
            raise ValueError("C and kkt_tolerance must be positive")
        if self.gamma is not None and self.gamma <= 0:
            raise ValueError("gamma must be positive")
        if self.max_passes < 1 or self.max_iterations < 1:
            raise ValueError("iteration limits must be positive")

    def resolved_gamma(self, dim: int) -> float:
        return float(self.gamma) if self.gamma is not None else 1.0 / dim

    def canonical(self) -> str:
        return (f"C={self.C!r};gamma={self.gamma!r};tol={self.kkt_tolerance!r};"
                f"passes={self.max_passes!r};iters={self.max_iterations!r}")


@dataclass(frozen=True)
class BinarySvmModel:
    support_vectors: np.ndarray  # (n_sv, dim)
    coefficients: np.ndarray  # alpha_i * y_i
    bias: float
    gamma: float
    C: float

    def __post_init__(self):
        sv = np.array(self.support_vectors, dtype=np.float64, ndmin=2)
        coef = np.array(self.coefficients, dtype=np.float64).ravel()
        if sv.shape[0] != coef.size or coef.size < 1:
            raise ValueError("need one coefficient per support vector, at least one")
        sv.setflags(write=False)
        coef.setflags(write=False)
        object.__setattr__(self, "support_vectors", sv)
        object.__setattr__(self, "coefficients", coef)
        object.__setattr__(self, "bias", float(self.bias))
        object.__setattr__(self, "gamma", float(self.gamma))
        object.__setattr__(self, "C", float(self.C))

    @property
    def dim(self) -> int:
        return self.support_vectors.shape[1]

    def negated(self) -> "BinarySvmModel":
        return BinarySvmModel(self.support_vectors, -self.coefficients, -self.bias,
                              self.gamma, self.C)


@dataclass
class TrainingInfo:
    iterations: int
    gap: float
    alphas: np.ndarray
    objective: float


def rbf_kernel(x, y, gamma: float) -> float:
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape:
        raise DimensionMismatch(f"kernel arguments of shapes {x.shape} and {y.shape}")
    d = x - y
    return float(np.exp(-gamma * np.dot(d, d)))


def _kernel_row(X: np.ndarray, x: np.ndarray, gamma: float) -> np.ndarray:
    d = X - x
    return np.exp(-gamma * np.einsum("ij,ij->i", d, d))


class _Kernel:
    """Kernel rows, from a dense cache for small problems or on demand."""

    def __init__(self, X, gamma):
        self.X = X
        self.gamma = gamma
        n = X.shape[0]
        self.dense = None
        if n <= DENSE_KERNEL_LIMIT:
            self.dense = np.vstack([_kernel_row(X, X[i], gamma) for i in range(n)])

    def row(self, i):
        if self.dense is not None:
            return self.dense[i]
        return _kernel_row(self.X, self.X[i], self.gamma)



def dual_objective(alphas, labels, K) -> float:
    v = np.asarray(alphas) * np.asarray(labels)
    return float(np.sum(alphas) - 0.5 * v @ K @ v)


def _validate(samples, labels):
    X = np.array(samples, dtype=np.float64)
    if X.ndim != 2:
        raise DimensionMismatch("samples must all have the same dimension")
    y = np.array(labels, dtype=np.float64).ravel()
    if y.size != X.shape[0]:
        raise DimensionMismatch(f"{X.shape[0]} samples but {y.size} labels")
    if not np.all(np.isin(y, (-1.0, 1.0))):
        raise ValueError("labels must be +1 or -1")
    if not (np.any(y > 0) and np.any(y < 0)):
        raise SingleClassInput("training data holds only one class")
    if not np.all(np.isfinite(X)):
        raise NonFiniteFeature("non-finite feature value in training data")
    return X, y


def _snap(a: float, C: float) -> float:
    if a <= BOUND_EPS * C:
        return 0.0
    if a >= C * (1.0 - BOUND_EPS):
        return C
    return a


def smo_solve(samples, labels, params: SvmParams = SvmParams()):
    """Run SMO and return ``(model, TrainingInfo)``."""
    X, y = _validate(samples, labels)
    n = X.shape[0]
    C = float(params.C)
    gamma = params.resolved_gamma(X.shape[1])
    kernel = _Kernel(X, gamma)

    alpha = np.zeros(n)
    # err[i] = sum_j alpha_j y_j K_ij - y_i, i.e. f(x_i) - y_i without the bias
    err = -y.copy()
    pos, neg = y > 0, y < 0
    iterations = 0
    stalled = 0

    while True:
        up = (pos & (alpha < C)) | (neg & (alpha > 0))
        low = (pos & (alpha > 0)) | (neg & (alpha < C))
        e_up = np.where(up, err, np.inf)
        e_low = np.where(low, err, -np.inf)
        i = int(np.argmin(e_up))
        j = int(np.argmax(e_low))
        b_up, b_low = e_up[i], e_low[j]
        gap = b_low - b_up
        if gap <= params.kkt_tolerance:
            break
        if iterations >= params.max_iterations or stalled >= params.max_passes:
            raise IterationLimitExceeded(
                f"SMO stopped after {iterations} iterations with KKT gap {gap:.3g}",
                {"iterations": iterations, "gap": float(gap), "alphas": alpha.copy()},
            )
        iterations += 1

        # Update in index order, not (up, low) order: flipping every label
        # swaps the roles of the pair, and ordering by index then makes the
        # whole run an exact sign mirror of the original.
        p, q = (i, j) if i < j else (j, i)
        Kp, Kq = kernel.row(p), kernel.row(q)
        yp, yq = y[p], y[q]
        ap, aq = alpha[p], alpha[q]
        if yp != yq:
            lo, hi = max(0.0, aq - ap), min(C, C + aq - ap)
        else:
            lo, hi = max(0.0, ap + aq - C), min(C, ap + aq)
        eta = max(Kp[p] + Kq[q] - 2.0 * Kp[q], TAU)
        aq_new = min(max(aq + yq * (err[p] - err[q]) / eta, lo), hi)
        ap_new = ap + yp * yq * (aq - aq_new)
        # snap to the box so set membership is exact; a value a rounding
        # error away from a bound would otherwise admit only sub-ulp steps
        ap_new, aq_new = _snap(ap_new, C), _snap(aq_new, C)
        dp, dq = ap_new - ap, aq_new - aq
        if abs(dp) < ALPHA_EPS and abs(dq) < ALPHA_EPS:
            stalled += 1
        else:
            stalled = 0
        alpha[p], alpha[q] = ap_new, aq_new
        err += dp * yp * Kp + dq * yq * Kq

    bias = -0.5 * (b_up + b_low)
    keep = alpha > ALPHA_EPS
    if not np.any(keep):
        # every multiplier at zero: the decision function is the bias alone
        keep = np.zeros(n, dtype=bool)
        keep[0] = True
    model = BinarySvmModel(X[keep], (alpha * y)[keep], bias, gamma, C)
    K = kernel.dense if kernel.dense is not None else None
    obj = dual_objective(alpha, y, K) if K is not None else float("nan")
    return model, TrainingInfo(iterations, float(gap), alpha, obj)


def smo_train(samples, labels, params: SvmParams = SvmParams()) -> BinarySvmModel:
    return smo_solve(samples, labels, params)[0]


def decision_values(model: BinarySvmModel, X) -> np.ndarray:
    X = np.array(X, dtype=np.float64, ndmin=2)
    if X.shape[1] != model.dim:
        raise DimensionMismatch(f"input dimension {X.shape[1]} != model dimension {model.dim}")
    out = np.empty(X.shape[0])
    for r, x in enumerate(X):
        out[r] = np.dot(model.coefficients, _kernel_row(model.support_vectors, x, model.gamma))
    return out + model.bias


def decision_value(model: BinarySvmModel, x) -> float:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise DimensionMismatch("decision_value takes a single vector")
    return float(decision_values(model, x[None, :])[0])


def predict_label(model: BinarySvmModel, x) -> int:
    return 1 if decision_value(model, x) >= 0.0 else -1


def training_accuracy(model: BinarySvmModel, samples: Sequence, labels: Sequence) -> float:
    f = decision_values(model, samples)
    pred = np.where(f >= 0.0, 1.0, -1.0)
    return float(np.mean(pred == np.asarray(labels, dtype=np.float64)))

"""Linear probes: closed-form ridge and balanced logistic regression."""

from dataclasses import dataclass

import numpy as np

from ancl.errors import LengthMismatchError, SingleClassError, SingularSystemError, ValidationError
from ancl.utils.logger import setup_logger

logger = setup_logger(__name__)

GRADIENT_TOLERANCE = 1e-6


def _check_design(X: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    if X.ndim != 2:
        raise ValidationError(f"design matrix must be 2-D, got shape {X.shape}")
    if X.shape[0] != y.shape[0]:
        raise LengthMismatchError(f"{X.shape[0]} rows for {y.shape[0]} targets")
    if X.shape[0] == 0:
        raise ValidationError("cannot fit a probe on zero samples")
    return X, y


@dataclass(frozen=True, eq=False)
class RidgeModel:
    weights: np.ndarray
    intercept: float

    def predict(self, X: np.ndarray) -> np.ndarray:
        return np.asarray(X, dtype=np.float64) @ self.weights + self.intercept


@dataclass(frozen=True, eq=False)
class LogisticModel:
    weights: np.ndarray
    intercept: float
    iterations: int
    converged: bool

    def decision_function(self, X: np.ndarray) -> np.ndarray:
        return np.asarray(X, dtype=np.float64) @ self.weights + self.intercept

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        return _sigmoid(self.decision_function(X))

    def predict(self, X: np.ndarray) -> np.ndarray:
        return (self.decision_function(X) >= 0).astype(np.float64)


def ridge_fit(X: np.ndarray, y: np.ndarray, penalty: float) -> RidgeModel:
    """Solves (Xa^T Xa + P) w = Xa^T y with Xa = [X, 1].

    P is ``penalty`` on the feature diagonal and 0 for the intercept.

    Raises:
        SingularSystemError: penalty is 0 and the normal equations are singular
    """
    X, y = _check_design(X, y)
    if penalty < 0:
        raise ValidationError(f"ridge penalty must be >= 0, got {penalty}")
    augmented = np.column_stack([X, np.ones(X.shape[0])])
    if penalty == 0 and np.linalg.matrix_rank(augmented) < augmented.shape[1]:
        raise SingularSystemError("X^T X is singular; use a positive ridge penalty")
    regularizer = penalty * np.eye(augmented.shape[1])
    regularizer[-1, -1] = 0.0
    try:
        solution = np.linalg.solve(augmented.T @ augmented + regularizer, augmented.T @ y)
    except np.linalg.LinAlgError as e:
        raise SingularSystemError(f"normal equations could not be solved: {e}") from None
    return RidgeModel(weights=solution[:-1], intercept=float(solution[-1]))


def _sigmoid(values: np.ndarray) -> np.ndarray:
    return 0.5 * (1.0 + np.tanh(0.5 * values))


def logistic_probe_fit(
    X: np.ndarray,
    y: np.ndarray,
    iterations: int = 2000,
    lr: float = 0.1,
) -> LogisticModel:
    """Full-batch gradient descent on the class-balanced logistic loss.

    Each sample is weighted by 1 / (2 * size of its class), so both classes
    contribute equally. Starts from zero weights; stops when the gradient
    norm drops below 1e-6 or after ``iterations`` steps.

    Args:
        X: (samples, features), standardized
        y: Binary targets in {0, 1}
        iterations: Iteration cap
        lr: Step size

    Returns:
        Fitted LogisticModel
    """
    X, y = _check_design(X, y)
    if not np.all(np.isin(y, (0.0, 1.0))):
        raise ValidationError("logistic probe targets must be 0 or 1")
    positives = int(y.sum())
    if positives == 0 or positives == y.shape[0]:
        raise SingleClassError("logistic probe needs both classes in the training data")

    sample_weight = np.where(y == 1, 0.5 / positives, 0.5 / (y.shape[0] - positives))
    weights = np.zeros(X.shape[1])
    intercept = 0.0
    converged = False
    step = 0
    for step in range(1, iterations + 1):
        residual = sample_weight * (_sigmoid(X @ weights + intercept) - y)
        grad_w = X.T @ residual
        grad_b = residual.sum()
        if np.sqrt(grad_w @ grad_w + grad_b * grad_b) < GRADIENT_TOLERANCE:
            converged = True
            step -= 1
            break
        weights = weights - lr * grad_w
        intercept = intercept - lr * grad_b

    logger.debug(f"Logistic probe: {step} iterations, converged={converged}")
    return LogisticModel(weights=weights, intercept=float(intercept), iterations=step, converged=converged)

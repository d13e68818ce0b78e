"""Recognition metrics and significance testing.

UAR (unweighted average recall) is the mean of per-class recalls; classes
with zero support in the evaluated set are excluded from the average.  The
paired t-test uses the sample standard deviation (n-1) of the differences
and a two-tailed p-value from the Student t distribution, evaluated through
the regularized incomplete beta function (Lentz continued fraction, 1e-12
convergence), so no statistics dependency is needed at runtime.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

MARK_UP = "↑"     # significantly better
MARK_FLAT = "•"   # no significant change
MARK_DOWN = "↓"   # significantly worse


@dataclass
class ConfusionMatrix:
    counts: np.ndarray  # (K, K), rows = true label, cols = predicted

    def __post_init__(self):
        self.counts = np.asarray(self.counts, dtype=np.int64)
        if self.counts.ndim != 2 or self.counts.shape[0] != self.counts.shape[1]:
            raise ValueError(f"confusion matrix must be square, got {self.counts.shape}")
        if (self.counts < 0).any():
            raise ValueError("confusion counts must be nonnegative")

    @classmethod
    def from_predictions(cls, y_true, y_pred, num_classes: int) -> "ConfusionMatrix":
        y_true = np.asarray(y_true, dtype=np.int64)
        y_pred = np.asarray(y_pred, dtype=np.int64)
        if y_true.shape != y_pred.shape:
            raise ValueError("prediction/label lengths differ")
        counts = np.zeros((num_classes, num_classes), dtype=np.int64)
        np.add.at(counts, (y_true, y_pred), 1)
        return cls(counts)

    def support(self) -> np.ndarray:
        return self.counts.sum(axis=1)


def uar(cm: ConfusionMatrix) -> float:
    """Mean of per-class recalls over classes with nonzero support."""
    support = cm.support()
    present = support > 0
    if not present.any():
        raise ValueError("confusion matrix has no populated rows")
    recalls = np.diag(cm.counts)[present] / support[present]
    return float(recalls.mean())


def gain(baseline: float, value: float) -> float:
    """Relative improvement (value - baseline) / baseline."""
    if baseline <= 0:
        raise ValueError(f"baseline must be positive, got {baseline}")
    return (value - baseline) / baseline


def _betacf(a: float, b: float, x: float) -> float:
    """Lentz continued fraction for the incomplete beta function."""
    eps = 1e-12
    fpmin = 1e-300
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < fpmin:
        d = fpmin
    d = 1.0 / d
    h = d
    for m in range(1, 300):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < fpmin:
            d = fpmin
        c = 1.0 + aa / c
        if abs(c) < fpmin:
            c = fpmin
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < fpmin:
            d = fpmin
        c = 1.0 + aa / c
        if abs(c) < fpmin:
            c = fpmin
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < eps:
            return h
    raise ArithmeticError("incomplete beta continued fraction did not converge")


def betainc_reg(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta I_x(a, b)."""
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"x must lie in [0, 1], got {x}")
    if x == 0.0 or x == 1.0:
        return x
    ln_front = (math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
                + a * math.log(x) + b * math.log1p(-x))
    front = math.exp(ln_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def student_t_p_two_tailed(t: float, df: int) -> float:
    """P(|T_df| >= |t|) for the Student t distribution."""
    if df < 1:
        raise ValueError(f"degrees of freedom must be >= 1, got {df}")
    if math.isinf(t):
        return 0.0
    return betainc_reg(df / 2.0, 0.5, df / (df + t * t))


@dataclass(frozen=True)
class TTestResult:
    t: float
    df: int
    p: float
    mean_diff: float
    degenerate: bool = False


def paired_t_test(a, b) -> TTestResult:
    """Two-tailed paired t-test of a against b (positive t means a > b)."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError("paired samples must be equal-length vectors")
    n = a.size
    if n < 2:
        raise ValueError(f"need at least 2 pairs, got {n}")
    d = a - b
    mean = float(d.mean())
    sd = float(d.std(ddof=1))
    df = n - 1
    if sd == 0.0:
        if mean == 0.0:
            return TTestResult(t=0.0, df=df, p=1.0, mean_diff=0.0, degenerate=True)
        return TTestResult(t=math.copysign(math.inf, mean), df=df, p=0.0,
                           mean_diff=mean, degenerate=True)
    t = mean / (sd / math.sqrt(n))
    return TTestResult(t=t, df=df, p=student_t_p_two_tailed(t, df), mean_diff=mean)


def classify_significance(p: float, mean_diff: float, alpha: float = 0.05) -> str:
    """Arrow mark: up/down when significant at alpha, bullet otherwise."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must lie in [0, 1], got {p}")
    if p <= alpha and mean_diff > 0:
        return MARK_UP
    if p <= alpha and mean_diff < 0:
        return MARK_DOWN
    return MARK_FLAT

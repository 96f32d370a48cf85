"""Power-law fits used by the decay and scaling experiments."""

from dataclasses import dataclass

import numpy as np
from scipy import stats

MODELS = ("pure-power", "log-corrected")
MIN_POINTS = 6


class FitError(ValueError):
    pass


@dataclass
class PowerFit:
    exponent: float
    width: float  # half-width of the 95% confidence interval
    prefactor: float
    model: str
    n_used: int
    n_dropped: int


def log_corrected_abscissa(t):
    """log(ln(2+t)/(2+t)), the regressor of the log-corrected model."""
    t = np.asarray(t, dtype=float)
    return np.log(np.log(2.0 + t) / (2.0 + t))


def fit_power_law(x, y, model="pure-power", min_points=MIN_POINTS):
    """Least-squares fit in log-log coordinates.

    pure-power:     y ~ C x^p                       (reports p)
    log-corrected:  y ~ C (ln(2+x)/(2+x))^p         (reports p)

    Non-positive y values are dropped and counted.
    """
    if model not in MODELS:
        raise FitError(f"unknown model {model!r}")
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    keep = np.isfinite(y) & (y > 0) & np.isfinite(x)
    if model == "pure-power":
        keep &= x > 0
    dropped = int(np.size(y) - np.count_nonzero(keep))
    if np.count_nonzero(keep) < min_points:
        raise FitError(f"need at least {min_points} positive points, got {np.count_nonzero(keep)}")
    xs = np.log(x[keep]) if model == "pure-power" else log_corrected_abscissa(x[keep])
    ys = np.log(y[keep])
    res = stats.linregress(xs, ys)
    dof = len(xs) - 2
    tcrit = stats.t.ppf(0.975, dof) if dof > 0 else np.inf
    return PowerFit(float(res.slope), float(tcrit * res.stderr), float(np.exp(res.intercept)),
                    model, int(len(xs)), dropped)

"""Fitting ``L(N, D') = A0 + A1 N^-a1 + A2 D'^-a2`` and the compute-optimal frontier."""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import asdict, dataclass

import numpy as np

from .pauli import search_space_size

log = logging.getLogger(__name__)

METRIC_FLOORS = {"abserr": 1e-5, "vscore": 1e-8}
HUBER_DELTA = 1e-3
ALPHA_GRID = (0.5, 1.0, 2.0, 4.0, 8.0)
LOG10_A_GRID = (-5.0, -3.0, -1.0, 0.0, 1.0)


class DegenerateData(ValueError):
    pass


@dataclass(frozen=True)
class DataPoint:
    N: float  # parameters, in thousands
    D_prime: float
    value: float


@dataclass
class ScalingCurve:
    A0: float
    A1: float
    A2: float
    alpha1: float
    alpha2: float
    metric: str = "vscore"
    ansatz: str = ""
    r2_log: float = float("nan")
    objective: float = float("nan")

    def predict(self, N, D_prime):
        N = np.asarray(N, dtype=float)
        D = np.asarray(D_prime, dtype=float)
        return self.A0 + self.A1 * N ** (-self.alpha1) + self.A2 * D ** (-self.alpha2)

    def to_dict(self) -> dict:
        return asdict(self)


def compute_scaled_iterations(T: int, B_mean: float, n_qubits: int, n_electrons=None, multiplicity: int = 1, two_sz=None):
    """``(SF, D')`` from the step count, mean unique batch and search-space size."""
    S = search_space_size(n_qubits, n_electrons, multiplicity, two_sz)
    sf = B_mean / S
    return sf, T * sf


def huber(r, delta: float = HUBER_DELTA):
    a = np.abs(r)
    return np.where(a <= delta, 0.5 * r**2, delta * (a - 0.5 * delta))


def huber_log_residual(curve: ScalingCurve, point: DataPoint, delta: float = HUBER_DELTA) -> float:
    if not point.value > 0:
        raise ValueError(f"metric value must be positive, got {point.value}")
    r = math.log(float(curve.predict(point.N, point.D_prime))) - math.log(point.value)
    return float(huber(r, delta))


def clamp_values(values, metric: str) -> np.ndarray:
    floor = METRIC_FLOORS.get(metric)
    if floor is None:
        raise ValueError(f"unknown metric {metric!r}")
    return np.maximum(np.asarray(values, dtype=float), floor)


def _softplus(u):
    return np.logaddexp(0.0, u)


def _unpack(theta):
    u0, e1, e2, a1, a2 = (theta[..., i] for i in range(5))
    return _softplus(u0), np.exp(np.clip(e1, -700, 700)), np.exp(np.clip(e2, -700, 700)), a1, a2


def _objective_and_grad(theta, logN, logD, logy, delta):
    """Mean Huber loss for each parameter row of ``theta`` (S, 5) and its gradient."""
    A0, A1, A2, a1, a2 = (x[:, None] for x in _unpack(theta))
    with np.errstate(over="ignore", invalid="ignore"):
        t1 = A1 * np.exp(np.clip(-a1 * logN, -700, 700))
        t2 = A2 * np.exp(np.clip(-a2 * logD, -700, 700))
        pred = A0 + t1 + t2
        r = np.log(pred) - logy
    loss = huber(r, delta).mean(axis=1)
    dr = np.clip(r, -delta, delta) / pred / r.shape[1]
    sig = 1.0 / (1.0 + np.exp(-theta[:, 0]))
    grad = np.stack(
        [
            (dr * sig[:, None]).sum(1),
            (dr * t1).sum(1),
            (dr * t2).sum(1),
            -(dr * t1 * logN).sum(1),
            -(dr * t2 * logD).sum(1),
        ],
        axis=1,
    )
    bad = ~np.isfinite(loss)
    loss[bad] = np.inf
    grad[bad | ~np.all(np.isfinite(grad), axis=1)] = 0.0
    return loss, grad


def initial_grid(min_value: float) -> np.ndarray:
    """Every grid start as raw parameter rows ``(u0, log A1, log A2, a1, a2)``."""
    A0 = 0.5 * min_value
    u0 = math.log(math.expm1(A0)) if A0 > 1e-300 else -700.0
    rows = []
    for a1, a2, l1, l2 in itertools.product(ALPHA_GRID, ALPHA_GRID, LOG10_A_GRID, LOG10_A_GRID):
        rows.append((u0, l1 * math.log(10), l2 * math.log(10), a1, a2))
    return np.array(rows)


def _adam(theta, f, steps, lr, lr_final):
    m = np.zeros_like(theta)
    v = np.zeros_like(theta)
    for t in range(1, steps + 1):
        _, g = f(theta)
        m = 0.9 * m + 0.1 * g
        v = 0.999 * v + 0.001 * g * g
        frac = (t - 1) / max(steps - 1, 1)
        rate = lr_final + 0.5 * (lr - lr_final) * (1 + math.cos(math.pi * frac))
        theta = theta - rate * (m / (1 - 0.9**t)) / (np.sqrt(v / (1 - 0.999**t)) + 1e-12)
    return theta


def fit_curve(
    points,
    metric: str = "vscore",
    seed: int = 0,
    ansatz: str = "",
    steps: int = 50_000,
    n_starts: int = 16,
    n_random: int = 8,
    delta: float = HUBER_DELTA,
    lr: float = 0.05,
    polish: bool = True,
) -> ScalingCurve:
    """Robust fit of the three-term power law on log residuals.

    All grid starts, plus ``n_random`` starts drawn inside the grid's box
    with ``seed``, are scored once; the best ``n_starts`` are optimised
    together with Adam under a cosine schedule, optionally polished by
    L-BFGS, and the lowest final objective wins (ties go to the earlier
    grid entry).
    """
    pts = list(points)
    if len(pts) < 5:
        raise DegenerateData("at least five points are needed to fit five parameters")
    N = np.array([p.N for p in pts], dtype=float)
    D = np.array([p.D_prime for p in pts], dtype=float)
    y = clamp_values([p.value for p in pts], metric)
    if np.any(N <= 0) or np.any(D <= 0):
        raise DegenerateData("N and D' must be positive")
    if np.ptp(np.log(N)) == 0 or np.ptp(np.log(D)) == 0:
        raise DegenerateData("N and D' must each take more than one value")
    if len(pts) < 10 or np.ptp(np.log10(N)) < 1 or np.ptp(np.log10(D)) < 1:
        log.warning("fewer than 10 points or less than a decade in N or D'; fit may be poorly conditioned")
    logN, logD, logy = np.log(N), np.log(D), np.log(y)

    def f(theta):
        return _objective_and_grad(np.atleast_2d(theta), logN, logD, logy, delta)

    grid = initial_grid(float(y.min()))
    if n_random:
        rng = np.random.default_rng(seed)
        extra = np.empty((n_random, 5))
        extra[:, 0] = grid[0, 0]
        extra[:, 1:3] = rng.uniform(-5, 1, (n_random, 2)) * math.log(10)
        extra[:, 3:] = rng.uniform(0.5, 8, (n_random, 2))
        grid = np.vstack([grid, extra])
    scores = f(grid)[0]
    order = np.lexsort((np.arange(len(grid)), scores))[:n_starts]
    theta = _adam(grid[order], f, steps, lr, lr * 1e-4)
    if polish:
        theta = np.array([_polish(row, f) for row in theta])
    final = f(theta)[0]
    best = int(np.lexsort((np.arange(len(final)), final))[0])
    A0, A1, A2, a1, a2 = (float(x) for x in _unpack(theta[best]))
    curve = ScalingCurve(A0, A1, A2, a1, a2, metric, ansatz, objective=float(final[best]))
    curve.r2_log = r2_log(curve, N, D, y)
    return curve


def _polish(row, f):
    from scipy.optimize import minimize

    def fun(x):
        loss, g = f(x)
        return float(loss[0]), g[0]

    start = fun(row)[0]
    if not np.isfinite(start):
        return row
    res = minimize(fun, row, jac=True, method="L-BFGS-B", options={"maxiter": 2000, "ftol": 1e-20, "gtol": 1e-14})
    return res.x if res.fun <= start else row


def r2_log(curve: ScalingCurve, N, D, y) -> float:
    """Coefficient of determination of ``log10`` predictions."""
    obs = np.log10(np.asarray(y, dtype=float))
    pred = np.log10(curve.predict(N, D))
    ss_tot = np.sum((obs - obs.mean()) ** 2)
    ss_res = np.sum((obs - pred) ** 2)
    return float(1.0 - ss_res / ss_tot) if ss_tot > 0 else float("nan")


# --- compute-optimal allocation -------------------------------------------------------


@dataclass(frozen=True)
class FrontierResult:
    a: float
    b: float

    def D_prime(self, N):
        return self.a * np.asarray(N, dtype=float) ** self.b


def _balance_ratio(c: ScalingCurve, exact: bool) -> float:
    if c.alpha1 == 0 or c.alpha2 == 0 or c.A1 == 0 or c.A2 == 0:
        raise ValueError("frontier undefined for zero alpha or A")
    ratio = c.alpha1 * c.A1 / (c.alpha2 * c.A2)
    if ratio <= 0:
        raise ValueError("frontier undefined for non-positive alpha1*A1 / (alpha2*A2)")
    return 1.0 / ratio if exact else ratio


def efficient_frontier(curve: ScalingCurve, exact: bool = False) -> FrontierResult:
    """Frontier ``D' = a N^b`` with ``b = alpha1/alpha2``.

    By default ``a = (alpha1 A1 / (alpha2 A2))^(1/alpha2)``, the customary
    form for reporting frontiers. It comes from stationarity conditions
    written without the minus signs of the power-law derivatives, so it does
    not minimise the fitted loss along a budget line; ``exact=True`` gives
    the true minimiser, whose ratio is inverted.
    """
    c = curve
    return FrontierResult(_balance_ratio(c, exact) ** (1.0 / c.alpha2), c.alpha1 / c.alpha2)


def optimal_allocation(curve: ScalingCurve, C: float, k: float, exact: bool = False) -> tuple[float, float]:
    """``(N*, D'*)`` on the budget line ``k N D' = C`` and on :func:`efficient_frontier`."""
    if C <= 0 or k <= 0:
        raise ValueError("C and k must be positive")
    c = curve
    s = c.alpha1 + c.alpha2
    ratio = _balance_ratio(c, exact)
    base = C / k
    N = ratio ** (-1.0 / s) * base ** (c.alpha2 / s)
    D = ratio ** (1.0 / s) * base ** (c.alpha1 / s)
    return float(N), float(D)


# --- curve documents -------------------------------------------------------------------

CURVE_KEYS = ("ansatz", "metric", "A0", "A1", "A2", "alpha1", "alpha2", "r2_log")


def format_curve(curve: ScalingCurve) -> str:
    d = curve.to_dict()
    return "".join(f"{k} = {d[k] if isinstance(d[k], str) else repr(float(d[k]))}\n" for k in CURVE_KEYS)


def write_curve(path, curve: ScalingCurve) -> None:
    with open(path, "w") as fh:
        fh.write(format_curve(curve))


def parse_curve(text: str) -> ScalingCurve:
    d = {}
    for line in text.splitlines():
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ValueError(f"malformed curve line {line!r}")
        d[key.strip()] = value.strip()
    missing = [k for k in CURVE_KEYS if k not in d]
    if missing:
        raise ValueError(f"curve document missing {missing}")
    nums = {k: float(d[k]) for k in CURVE_KEYS[2:]}
    return ScalingCurve(metric=d["metric"], ansatz=d["ansatz"], **nums)


def read_curve(path) -> ScalingCurve:
    with open(path) as fh:
        return parse_curve(fh.read())

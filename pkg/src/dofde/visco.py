"""Viscoelastic constitutive models: toy-data generation and weight fitting.

Three classical stress-strain laws relate the stress sigma(t) to fractional
derivatives of the strain epsilon(t) (unit moduli and time constants
throughout):

* single-order:        sigma = D^alpha eps
* two-order:           (1 + a/b) sigma = a D^alpha eps + c (1 + a/b) D^beta eps
* distributed-order:   sigma = int_0^1 D^alpha eps dalpha

Data generation forward-solves each law for epsilon under a cosine drive.
Identification goes the other way: Grunwald-Letnikov derivative features of
the observed strain are regressed against the drive, either with a single
order chosen from a grid or with free weights over a grid of orders (linear
least squares with a small ridge, since features at nearby orders are
nearly collinear).  Prediction forward-solves the fitted law from the last
training state and scores the next ``horizon`` strain values.

Grid points of a fit are independent of each other, so they may be evaluated
concurrently and merged by minimum selection; everything here is otherwise
pure computation on immutable inputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InputError
from .measure import MultiTermSpec, OrderMeasure, dirac, discretize
from .solvers import FDEProblem, Trajectory, solve
from .special import gl_weights

__all__ = [
    "ViscoModel",
    "maxwell",
    "zener",
    "kelvin_voigt",
    "ViscoDataset",
    "generate",
    "FitReport",
    "fit_single_order",
    "fit_distributed",
    "gl_derivative_features",
]

# Shared toy-data protocol: cosine drive, eps(0) = 0.5.
EPSILON0 = 0.5
DEFAULT_T = 4.0
DEFAULT_H = 1.0 / 64.0
DEFAULT_TRAIN_FRAC = 0.8
DEFAULT_HORIZON = 10


@dataclass(frozen=True)
class ViscoModel:
    """A constitutive law reduced to sum_j w_j D^{alpha_j} eps = drive_scale * sigma."""

    kind: str
    spec: MultiTermSpec
    drive_scale: float
    params: dict

    def rhs(self):
        scale = self.drive_scale

        def drive(t: float, y):
            return scale * math.cos(t)

        return drive


def maxwell(alpha: float = 0.3) -> ViscoModel:
    if not 0.0 < alpha < 1.0:
        raise InputError(f"maxwell order alpha={alpha!r} outside (0, 1)")
    return ViscoModel(
        kind="maxwell", spec=dirac(alpha), drive_scale=1.0, params={"alpha": alpha}
    )


def zener(
    alpha: float = 0.2,
    beta: float = 0.6,
    a_o: float = 0.1,
    b_o: float = 0.1,
    c_o: float = 0.25,
) -> ViscoModel:
    if not 0.0 < alpha < beta < 1.0:
        raise InputError(f"zener orders need 0 < alpha < beta < 1, got {alpha!r}, {beta!r}")
    if min(a_o, b_o, c_o) <= 0.0:
        raise InputError("zener coefficients a_o, b_o, c_o must be positive")
    ratio = 1.0 + a_o / b_o
    spec = MultiTermSpec(((alpha, a_o), (beta, c_o * ratio)))
    return ViscoModel(
        kind="zener",
        spec=spec,
        drive_scale=ratio,
        params={"alpha": alpha, "beta": beta, "a_o": a_o, "b_o": b_o, "c_o": c_o},
    )


def kelvin_voigt(n_nodes: int = 10) -> ViscoModel:
    if n_nodes < 2:
        raise InputError("kelvin_voigt needs n_nodes >= 2")
    spec = discretize(OrderMeasure.uniform(0.0, 1.0), n_nodes)
    return ViscoModel(
        kind="kelvin_voigt", spec=spec, drive_scale=1.0, params={"n_nodes": n_nodes}
    )


_MODELS = {"maxwell": maxwell, "zener": zener, "kelvin_voigt": kelvin_voigt}


def model_by_kind(kind: str, **params) -> ViscoModel:
    try:
        factory = _MODELS[kind]
    except KeyError:
        raise InputError(f"unknown model kind {kind!r}; expected one of {sorted(_MODELS)}")
    return factory(**params)


@dataclass(frozen=True)
class ViscoDataset:
    """Strain/stress samples on a uniform grid: columns t, epsilon, sigma."""

    times: np.ndarray
    epsilon: np.ndarray
    sigma: np.ndarray

    @property
    def h(self) -> float:
        return float(self.times[1] - self.times[0])

    def to_csv_text(self) -> str:
        from ._serialize import format_float

        lines = ["t,epsilon,sigma"]
        for t, e, s in zip(self.times, self.epsilon, self.sigma):
            lines.append(",".join(format_float(v) for v in (t, e, s)))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_csv_text(cls, text: str) -> "ViscoDataset":
        lines = [ln for ln in text.strip().splitlines() if ln]
        if not lines or lines[0].strip() != "t,epsilon,sigma":
            raise InputError("dataset CSV must have header 't,epsilon,sigma'")
        data = np.array([[float(x) for x in ln.split(",")] for ln in lines[1:]])
        if data.ndim != 2 or data.shape[1] != 3:
            raise InputError("dataset CSV must have exactly three columns")
        return cls(times=data[:, 0], epsilon=data[:, 1], sigma=data[:, 2])


def generate(
    model: ViscoModel,
    T: float = DEFAULT_T,
    h: float = DEFAULT_H,
    backend: str = "gl",
) -> Trajectory:
    """Forward-solve the constitutive law for epsilon under the cosine drive."""
    problem = FDEProblem(spec=model.spec, rhs=model.rhs(), x0=np.float64(EPSILON0), T=T, h=h)
    return solve(problem, backend=backend)


def make_dataset(
    model: ViscoModel,
    T: float = DEFAULT_T,
    h: float = DEFAULT_H,
    backend: str = "gl",
) -> ViscoDataset:
    traj = generate(model, T=T, h=h, backend=backend)
    return ViscoDataset(
        times=traj.times,
        epsilon=np.asarray(traj.states, dtype=float).reshape(-1),
        sigma=np.cos(traj.times),
    )


def gl_derivative_features(epsilon: np.ndarray, h: float, alphas) -> np.ndarray:
    """Discrete D^alpha features of a strain series, one column per order.

    Row i-1 holds h^-alpha * sum_{k=0..i} (-1)^k C(alpha, k) (eps_{i-k} - eps_0)
    for i = 1..E; by the constitutive law (and the lagged drift of the
    generator) that row pairs with the drive sample at t_{i-1}.
    """
    eps = np.asarray(epsilon, dtype=float)
    if eps.ndim != 1 or eps.size < 2:
        raise InputError("epsilon must be a 1-d series with >= 2 samples")
    steps = eps.size - 1
    z = eps - eps[0]
    cols = []
    for a in alphas:
        w = gl_weights(float(a), steps)
        conv = np.convolve(z, w)[1 : steps + 1]
        cols.append(h ** (-float(a)) * conv)
    return np.column_stack(cols)


@dataclass(frozen=True)
class FitReport:
    """Identified constitutive weights plus train/prediction errors."""

    model_class: str  # "single_order" | "distributed"
    fitted: MultiTermSpec
    train_mse: float
    predict_mse: float
    h: float
    backend: str
    train_points: int
    horizon: int

    def to_json(self) -> dict:
        return {
            "model_class": self.model_class,
            "fitted": self.fitted.to_json(),
            "train_mse": self.train_mse,
            "predict_mse": self.predict_mse,
            "h": self.h,
            "backend": self.backend,
            "train_points": self.train_points,
            "horizon": self.horizon,
        }


def _split_lengths(n_points: int, train_frac: float, horizon: int) -> int:
    if n_points < 20:
        raise InputError("need at least 20 samples to fit")
    train_len = int(train_frac * n_points)
    if train_len < 10:
        raise InputError("training prefix too short")
    if train_len + horizon > n_points:
        raise InputError("not enough samples after the training prefix for the horizon")
    return train_len


def _gl_continue(
    spec: MultiTermSpec,
    history: np.ndarray,
    drive: np.ndarray,
    h: float,
    n_steps: int,
) -> np.ndarray:
    """Continue a GL solve past observed history for ``n_steps`` steps.

    ``history`` holds the observed strain at grid indices 0..m (teacher
    forcing); ``drive`` holds the stress drive at indices 0..m+n_steps-1 at
    least.  Identical arithmetic to the solver's update.
    """
    m = history.size - 1
    total = m + n_steps
    if drive.size < total:
        raise InputError("drive series too short for the requested continuation")
    scales = [w * h ** (-a) for a, w in spec.terms]
    denom = math.fsum(scales)
    if not denom > 0.0:
        raise InputError(
            f"fitted spec has non-positive step denominator {denom!r} at h={h!r}"
        )
    g = np.zeros(total + 1)
    for (a, _), s in zip(spec.terms, scales):
        g += s * gl_weights(a, total)
    z = np.zeros(total + 1)
    z[: m + 1] = history - history[0]
    y = history[m]
    out = np.empty(n_steps)
    for i in range(m + 1, total + 1):
        f = drive[i - 1]
        hist_sum = float(np.dot(g[1 : i + 1], z[:i][::-1]))
        y = y + (f - (hist_sum + denom * z[i - 1])) / denom
        z[i] = y - history[0]
        out[i - m - 1] = y
    return out


def fit_single_order(
    epsilon: np.ndarray,
    sigma: np.ndarray,
    h: float,
    alpha_grid,
    train_frac: float = DEFAULT_TRAIN_FRAC,
    horizon: int = DEFAULT_HORIZON,
) -> FitReport:
    """Grid search for the best single-order law w * D^alpha eps = sigma.

    For each alpha on the grid the scalar weight has a closed-form least
    squares solution; the grid winner is scored by forward prediction of the
    ``horizon`` strain values after the training prefix.
    """
    eps = np.asarray(epsilon, dtype=float)
    sig = np.asarray(sigma, dtype=float)
    if eps.shape != sig.shape:
        raise InputError("epsilon and sigma must have matching shapes")
    train_len = _split_lengths(eps.size, train_frac, horizon)
    rows = train_len - 1
    target = sig[:rows]  # drive at t_{i-1} pairs with the derivative at row i

    best = None
    for alpha in alpha_grid:
        phi = gl_derivative_features(eps[:train_len], h, [alpha])[:, 0]
        denom = float(phi @ phi)
        if denom == 0.0:
            raise InputError("degenerate data: derivative features vanish (constant strain?)")
        w = float(phi @ target) / denom
        mse = float(np.mean((w * phi - target) ** 2))
        if best is None or mse < best[2]:
            best = (float(alpha), w, mse)
    alpha_star, w_star, train_mse = best
    fitted = MultiTermSpec(((alpha_star, w_star),))
    preds = _gl_continue(fitted, eps[:train_len], sig, h, horizon)
    predict_mse = float(np.mean((preds - eps[train_len : train_len + horizon]) ** 2))
    return FitReport(
        model_class="single_order",
        fitted=fitted,
        train_mse=train_mse,
        predict_mse=predict_mse,
        h=h,
        backend="gl",
        train_points=train_len,
        horizon=horizon,
    )


def fit_distributed(
    epsilon: np.ndarray,
    sigma: np.ndarray,
    h: float,
    alpha_nodes,
    ridge: float = 1e-8,
    train_frac: float = DEFAULT_TRAIN_FRAC,
    horizon: int = DEFAULT_HORIZON,
) -> FitReport:
    """Least-squares weights over a grid of orders, ridge-stabilized.

    ``ridge`` is relative to the trace of the normal matrix (features at
    nearby orders are strongly collinear).  Scored like the single-order
    fit, with the full fitted multi-term law driving the prediction.
    """
    eps = np.asarray(epsilon, dtype=float)
    sig = np.asarray(sigma, dtype=float)
    if eps.shape != sig.shape:
        raise InputError("epsilon and sigma must have matching shapes")
    nodes = [float(a) for a in alpha_nodes]
    if len(nodes) > eps.size / 2:
        raise InputError("too many order nodes for the data length")
    train_len = _split_lengths(eps.size, train_frac, horizon)
    rows = train_len - 1
    target = sig[:rows]

    X = gl_derivative_features(eps[:train_len], h, nodes)
    gram = X.T @ X
    lam = ridge * float(np.trace(gram))
    try:
        weights = np.linalg.solve(gram + lam * np.eye(len(nodes)), X.T @ target)
    except np.linalg.LinAlgError:
        raise InputError("singular normal equations; use ridge > 0")
    train_mse = float(np.mean((X @ weights - target) ** 2))
    fitted = MultiTermSpec(tuple(zip(nodes, (float(w) for w in weights))))
    preds = _gl_continue(fitted, eps[:train_len], sig, h, horizon)
    predict_mse = float(np.mean((preds - eps[train_len : train_len + horizon]) ** 2))
    return FitReport(
        model_class="distributed",
        fitted=fitted,
        train_mse=train_mse,
        predict_mse=predict_mse,
        h=h,
        backend="gl",
        train_points=train_len,
        horizon=horizon,
    )

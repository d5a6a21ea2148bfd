"""Monte-Carlo simulator of the non-Markovian graph random walk.

A walker repeatedly (1) waits a random number n of time quanta, with n drawn
from the power-law distribution psi_alpha(n) = d_alpha * n^-(1+alpha), then
(2) either hops from its node i to a neighbor j with probability
K * W_ij / d_i, or stays put with probability 1 - K, where
K = (delta_tau)^alpha * d_alpha * |Gamma(-alpha)|.  In the small-quantum
limit the node-occupancy law solves the single-order fractional diffusion
equation on the graph, which is what the cross-checks against the solvers
exercise.

Simulation is event-driven (the clock advances n * delta_tau per event) and
walkers are mutually independent: walker w uses its own generator seeded
with ``seed ^ w``, so results are bit-identical however walkers are
partitioned, and merging is plain histogram addition.

The waiting-time sampler inverts a precomputed CDF table.  Residual mass
beyond the truncation cap ``n_max`` is lumped onto ``n_max``; config
validation keeps that lumped mass below 1e-4.  For caps too large to
tabulate, draws past the table fall back to an exact rejection sampler for
the conditional tail, which preserves the same lumped law without the
memory cost.
"""

from __future__ import annotations

import hashlib
import math
import random
from bisect import bisect_right
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.optimize

from ._serialize import dumps_json
from .errors import DomainError, InputError
from .graph import GraphSpec
from .special import abs_gamma_negative, waiting_normalizer, waiting_tail_mass

__all__ = [
    "WalkConfig",
    "WalkResult",
    "WaitingSampler",
    "sample_waiting",
    "simulate",
    "total_variation",
    "fit_waiting_span",
    "DEFAULT_FIT_ALPHAS",
]

# Tail mass allowed beyond the truncation cap.
TAIL_TOLERANCE = 1e-4
# Largest explicit CDF table; larger caps switch to the tail sampler.
_TABLE_CAP = 1 << 16


def default_n_max(alpha: float) -> int:
    """Smallest cap whose lumped tail mass provably stays below 1e-4."""
    d = waiting_normalizer(alpha)
    # Upper bound: sum_{k>N} d k^-(1+a) <= d N^-a / a.
    log_n = (math.log(d) - math.log(alpha) - math.log(TAIL_TOLERANCE)) / alpha
    if log_n > 600.0:
        raise InputError(
            f"alpha={alpha!r} needs an astronomically large waiting-time cap; "
            "supply n_max explicitly or use a larger alpha"
        )
    return int(math.ceil(math.exp(log_n))) + 1


@dataclass(frozen=True)
class WalkConfig:
    """Walker ensemble parameters; immutable and hashable into a config tag.

    ``start`` is either a node index (all walkers start there) or a
    probability vector over nodes.  ``n_max`` defaults to the smallest cap
    meeting the 1e-4 tail-mass invariant.
    """

    graph: GraphSpec
    alpha: float
    delta_tau: float
    T: float
    n_walkers: int
    seed: int
    start: int | Sequence[float] = 0
    n_max: int | None = None

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise DomainError(f"walker order alpha={self.alpha!r} outside (0, 1)")
        if self.delta_tau <= 0.0:
            raise InputError("delta_tau must be positive")
        if self.T < 0.0:
            raise InputError("horizon T must be non-negative")
        if self.n_walkers < 1:
            raise InputError("need at least one walker")
        k = self.jump_probability()
        if not 0.0 < k <= 1.0:
            raise InputError(
                f"jump coefficient K={k:.6g} is not a probability; use a smaller delta_tau"
            )
        if self.n_max is None:
            object.__setattr__(self, "n_max", default_n_max(self.alpha))
        elif waiting_tail_mass(self.alpha, self.n_max) >= TAIL_TOLERANCE:
            raise InputError(
                f"n_max={self.n_max} leaves more than {TAIL_TOLERANCE:g} waiting-time "
                "tail mass; raise it (or omit it for an automatic cap)"
            )
        if isinstance(self.start, (int, np.integer)):
            if not 0 <= self.start < self.graph.n_nodes:
                raise InputError(f"start node {self.start} outside the graph")
            object.__setattr__(self, "start", int(self.start))
        else:
            p = np.asarray(self.start, dtype=float)
            if p.shape != (self.graph.n_nodes,) or np.any(p < 0.0):
                raise InputError("start distribution must be a non-negative N-vector")
            if abs(float(p.sum()) - 1.0) > 1e-9:
                raise InputError("start distribution must sum to 1")
            object.__setattr__(self, "start", tuple(float(x) for x in p))

    def jump_probability(self) -> float:
        """K = (delta_tau)^alpha * d_alpha * |Gamma(-alpha)|."""
        return (
            self.delta_tau**self.alpha
            * waiting_normalizer(self.alpha)
            * abs_gamma_negative(self.alpha)
        )

    def canonical(self) -> dict:
        from .graph import write_edge_list

        return {
            "graph": write_edge_list(self.graph),
            "alpha": self.alpha,
            "delta_tau": self.delta_tau,
            "T": self.T,
            "n_walkers": self.n_walkers,
            "seed": self.seed,
            "start": self.start,
            "n_max": self.n_max,
        }

    def config_hash(self) -> str:
        return hashlib.sha256(dumps_json(self.canonical()).encode()).hexdigest()


class WaitingSampler:
    """Inverse-CDF sampler for the truncated waiting-time law psi_alpha.

    Cumulative sums are tabulated up to min(n_max, 2^16); when the cap fits
    inside the table the residual tail is lumped onto the last entry, and
    otherwise draws landing beyond the table are resolved by exact rejection
    sampling of the conditional tail followed by clamping at n_max.
    """

    def __init__(self, alpha: float, n_max: int):
        if not 0.0 < alpha < 1.0:
            raise DomainError(f"alpha={alpha!r} outside (0, 1)")
        if n_max < 1:
            raise InputError("n_max must be >= 1")
        self.alpha = float(alpha)
        self.n_max = int(n_max)
        self.d_alpha = waiting_normalizer(alpha)
        table_len = min(self.n_max, _TABLE_CAP)
        n = np.arange(1, table_len + 1, dtype=float)
        cdf = np.cumsum(self.d_alpha * n ** (-(1.0 + alpha)))
        self._lumped = table_len == self.n_max
        if self._lumped:
            cdf[-1] = 1.0
        self._table_len = table_len
        self._cdf = cdf.tolist()
        self._cdf_top = self._cdf[-1]
        # Rejection-sampler constant: sup of target/proposal sits at the edge.
        self._reject_bound = (1.0 + 0.5 / (table_len + 1)) ** (1.0 + alpha)

    def sample(self, rng: random.Random) -> int:
        u = rng.random()
        if self._lumped or u < self._cdf_top:
            return bisect_right(self._cdf, u) + 1
        return self._sample_tail(rng)

    def sample_batch(self, count: int, seed: int) -> np.ndarray:
        """Vectorized draws with the same law as :meth:`sample`.

        Uses its own numpy generator (not the walker streams); intended for
        statistical checks and bulk sampling.  Draws that land past the CDF
        table fall back to the scalar tail sampler.
        """
        gen = np.random.default_rng(seed)
        u = gen.random(count)
        out = np.searchsorted(self._cdf, u, side="right") + 1
        if not self._lumped:
            beyond = np.flatnonzero(u >= self._cdf_top)
            if beyond.size:
                tail_rng = random.Random(seed ^ 0x5BD1E995)
                out = out.astype(object) if self.n_max > 2**62 else out
                for idx in beyond:
                    out[idx] = self._sample_tail(tail_rng)
        return out

    def _sample_tail(self, rng: random.Random) -> int:
        # Conditional law of n given n > table_len: propose from the continuous
        # power law on (table_len + 0.5, inf), round to the nearest integer,
        # and correct by rejection; clamp at n_max (the lumped tail).
        a = self.alpha
        edge = self._table_len + 0.5
        while True:
            y = edge * (1.0 - rng.random()) ** (-1.0 / a)
            if y >= self.n_max:
                return self.n_max
            k = int(y + 0.5)
            bin_mass = (k + 0.5) ** (-a) * -math.expm1(-a * math.log1p(-1.0 / (k + 0.5)))
            accept = a * k ** (-(1.0 + a)) / (self._reject_bound * bin_mass)
            if rng.random() < accept:
                return k


def sample_waiting(alpha: float, rng: random.Random, n_max: int | None = None) -> int:
    """One waiting-time draw; see :class:`WaitingSampler` for the law."""
    sampler = WaitingSampler(alpha, default_n_max(alpha) if n_max is None else n_max)
    return sampler.sample(rng)


@dataclass(frozen=True)
class WalkResult:
    """Empirical occupancy at the horizon plus jump/wait statistics."""

    occupancy: np.ndarray
    n_jumps: int
    mean_wait: float

    def to_json(self, config_hash: str) -> dict:
        return {
            "occupancy": [float(x) for x in self.occupancy],
            "n_jumps": int(self.n_jumps),
            "mean_wait": float(self.mean_wait),
            "config_hash": config_hash,
        }


def _neighbor_tables(g: GraphSpec):
    adj: list[list[tuple[int, float]]] = [[] for _ in range(g.n_nodes)]
    for i, j, w in g.edges:
        adj[i].append((j, w))
        adj[j].append((i, w))
    tables = []
    for nbrs in adj:
        total = sum(w for _, w in nbrs)
        cum, acc = [], 0.0
        for _, w in nbrs:
            acc += w / total
            cum.append(acc)
        cum[-1] = 1.0
        tables.append((cum, [j for j, _ in nbrs]))
    return tables


def simulate(config: WalkConfig) -> WalkResult:
    """Run the walker ensemble to the horizon and histogram final positions.

    Deterministic given the config (including the walker count): walker w is
    driven by ``random.Random(seed ^ w)``.  Walkers whose next event would
    land past T freeze at their current node.
    """
    g = config.graph
    sampler = WaitingSampler(config.alpha, config.n_max)
    tables = _neighbor_tables(g)
    K = config.jump_probability()
    dtau = config.delta_tau
    T = config.T
    start = config.start
    start_cdf = None
    if not isinstance(start, int):
        start_cdf = list(np.cumsum(start))
        start_cdf[-1] = 1.0

    counts = np.zeros(g.n_nodes, dtype=np.int64)
    n_jumps = 0
    wait_ticks = 0
    wait_events = 0
    for w in range(config.n_walkers):
        rng = random.Random(config.seed ^ w)
        node = start if start_cdf is None else bisect_right(start_cdf, rng.random())
        clock = 0.0
        while True:
            n = sampler.sample(rng)
            t_next = clock + n * dtau
            if t_next > T:
                break
            clock = t_next
            wait_ticks += n
            wait_events += 1
            if rng.random() < K:
                cum, nbrs = tables[node]
                node = nbrs[bisect_right(cum, rng.random())]
                n_jumps += 1
        counts[node] += 1

    occupancy = counts / config.n_walkers
    mean_wait = wait_ticks * dtau / wait_events if wait_events else 0.0
    return WalkResult(occupancy=occupancy, n_jumps=n_jumps, mean_wait=mean_wait)


def total_variation(p: np.ndarray, q: np.ndarray) -> float:
    """Total-variation distance between two distributions on the same nodes."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if p.shape != q.shape:
        raise InputError("distributions must have the same shape")
    return 0.5 * float(np.sum(np.abs(p - q)))


# Default order grid for waiting-time span fits: the decimal grid on (0, 1)
# with the endpoint left out (its inclusion is configurable by the caller).
DEFAULT_FIT_ALPHAS = tuple(round(0.1 * k, 1) for k in range(1, 10))


def fit_waiting_span(
    target: Sequence[float],
    alphas: Sequence[float] = DEFAULT_FIT_ALPHAS,
    norm: str = "l2",
) -> tuple[np.ndarray, float]:
    """Fit sum_m w_m psi_{alpha_m}(n) to a vanishing target sequence.

    ``target`` holds f(1), ..., f(N).  The l2 mode solves ridge-stabilized
    normal equations (ridge 1e-10); the sup mode solves the minimax problem
    as a linear program.  Returns the weights and the achieved sup-norm
    error over n = 1..N (reported for both modes).
    """
    f = np.asarray(target, dtype=float)
    if f.ndim != 1 or f.size < 2:
        raise InputError("target must be a 1-d sequence with >= 2 entries")
    alphas = [float(a) for a in alphas]
    if len(set(alphas)) != len(alphas):
        raise InputError("duplicate alphas make the design rank-deficient")
    if sorted(alphas) != alphas:
        raise InputError("alphas must be strictly increasing")
    for a in alphas:
        if not 0.0 < a < 1.0:
            raise DomainError(f"fit order {a!r} outside (0, 1)")
    if f.size < 2 * len(alphas):
        raise InputError("need target length >= 2x the number of orders")
    peak = float(np.max(np.abs(f)))
    if peak > 0.0 and abs(f[-1]) > 0.5 * peak:
        raise InputError("target does not vanish over the fitted range")

    n = np.arange(1, f.size + 1, dtype=float)
    basis = np.column_stack(
        [waiting_normalizer(a) * n ** (-(1.0 + a)) for a in alphas]
    )
    if norm == "l2":
        gram = basis.T @ basis + 1e-10 * np.eye(len(alphas))
        weights = np.linalg.solve(gram, basis.T @ f)
    elif norm == "sup":
        m = len(alphas)
        # minimize t  s.t.  -t <= (basis @ w - f) <= t
        c = np.zeros(m + 1)
        c[-1] = 1.0
        ones = np.ones((f.size, 1))
        a_ub = np.block([[basis, -ones], [-basis, -ones]])
        b_ub = np.concatenate([f, -f])
        res = scipy.optimize.linprog(
            c, A_ub=a_ub, b_ub=b_ub, bounds=[(None, None)] * m + [(0, None)], method="highs"
        )
        if not res.success:
            raise InputError(f"minimax fit failed: {res.message}")
        weights = res.x[:m]
    else:
        raise InputError(f"unknown norm {norm!r}; expected 'sup' or 'l2'")
    sup_error = float(np.max(np.abs(basis @ weights - f)))
    return weights, sup_error

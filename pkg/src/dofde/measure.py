"""Order measures over derivative orders and their multi-term discretization.

An :class:`OrderMeasure` is either a finite set of atoms on (0, 1] or a
density on a support [a, b] inside (0, 1].  Densities are reduced to a
:class:`MultiTermSpec` (distinct orders with weights) by the composite
trapezoid rule; atoms already are one.  Both types are immutable value
objects.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import DomainError, InputError

__all__ = ["OrderMeasure", "MultiTermSpec", "discretize", "dirac", "normalize_mass"]

# Orders at 0 degenerate (D^0 is the identity and the discrete fractional
# operators lose meaning), so density nodes that land on 0 are clamped here.
ALPHA_MIN = 0.05

DEFAULT_NODES = 10


def _check_order(alpha: float, *, strict_upper: bool = False) -> float:
    alpha = float(alpha)
    hi_ok = alpha < 1.0 if strict_upper else alpha <= 1.0
    if not (0.0 < alpha and hi_ok):
        rng = "(0, 1)" if strict_upper else "(0, 1]"
        raise DomainError(f"derivative order {alpha!r} outside {rng}")
    return alpha


@dataclass(frozen=True)
class MultiTermSpec:
    """Weighted sum of fractional orders: terms (alpha_j, w_j), alphas ascending.

    Weights may be negative (they are fitted quantities downstream), so every
    solver re-validates that the step denominator sum_j w_j * h^-alpha_j is
    positive before running; see :meth:`denominator`.
    """

    terms: tuple[tuple[float, float], ...]

    def __post_init__(self):
        if not self.terms:
            raise InputError("MultiTermSpec needs at least one term")
        cleaned = tuple((_check_order(a), float(w)) for a, w in self.terms)
        alphas = [a for a, _ in cleaned]
        if sorted(alphas) != alphas:
            raise InputError("orders must be sorted ascending")
        if len(set(alphas)) != len(alphas):
            raise InputError("orders must be distinct")
        object.__setattr__(self, "terms", cleaned)

    @property
    def alphas(self) -> tuple[float, ...]:
        return tuple(a for a, _ in self.terms)

    @property
    def weights(self) -> tuple[float, ...]:
        return tuple(w for _, w in self.terms)

    def denominator(self, h: float) -> float:
        """sum_j w_j * h^-alpha_j, the per-step divisor of the GL update."""
        return float(sum(w * h ** (-a) for a, w in self.terms))

    def validate_denominator(self, h: float) -> None:
        d = self.denominator(h)
        if not d > 0.0:
            raise InputError(
                f"step denominator sum_j w_j h^-alpha_j = {d!r} is not positive at h={h!r}"
            )

    def to_json(self) -> dict:
        return {"atoms": [[a, w] for a, w in self.terms]}

    @classmethod
    def from_json(cls, obj: dict) -> "MultiTermSpec":
        try:
            atoms = obj["atoms"]
        except (KeyError, TypeError):
            raise InputError("expected {'atoms': [[alpha, w], ...]}")
        return cls(tuple((float(a), float(w)) for a, w in atoms))


@dataclass(frozen=True)
class OrderMeasure:
    """Measure over derivative orders: atoms, or a density on [a, b] in (0, 1].

    ``density`` is any callable evaluable at the quadrature nodes; the
    ``uniform`` / ``table`` constructors cover the serializable cases.
    """

    kind: str  # "atoms" | "density"
    atoms: tuple[tuple[float, float], ...] | None = None
    density: Callable[[np.ndarray], np.ndarray] | None = None
    support: tuple[float, float] | None = None
    nodes: int = DEFAULT_NODES
    _tag: str | None = None  # serialization tag for densities
    _table: tuple[tuple[float, ...], tuple[float, ...]] | None = None

    def __post_init__(self):
        if self.kind == "atoms":
            if not self.atoms:
                raise InputError("atom measure needs at least one atom")
            cleaned = tuple((_check_order(a), float(m)) for a, m in self.atoms)
            alphas = [a for a, _ in cleaned]
            if sorted(alphas) != alphas or len(set(alphas)) != len(alphas):
                raise InputError("atom orders must be distinct and sorted ascending")
            object.__setattr__(self, "atoms", cleaned)
        elif self.kind == "density":
            if self.density is None or self.support is None:
                raise InputError("density measure needs a density callable and a support")
            a, b = (float(x) for x in self.support)
            if not (0.0 <= a <= b <= 1.0) or b <= 0.0:
                raise InputError(f"support [{a}, {b}] must satisfy 0 <= a <= b <= 1, b > 0")
            object.__setattr__(self, "support", (a, b))
        else:
            raise InputError(f"unknown measure kind {self.kind!r}")

    @classmethod
    def from_atoms(cls, atoms: Sequence[tuple[float, float]]) -> "OrderMeasure":
        return cls(kind="atoms", atoms=tuple(atoms))

    @classmethod
    def uniform(cls, a: float, b: float, nodes: int = DEFAULT_NODES) -> "OrderMeasure":
        return cls(
            kind="density",
            density=lambda x: np.ones_like(np.asarray(x, dtype=float)),
            support=(a, b),
            nodes=nodes,
            _tag="uniform",
        )

    @classmethod
    def table(
        cls,
        alphas: Sequence[float],
        values: Sequence[float],
        nodes: int = DEFAULT_NODES,
    ) -> "OrderMeasure":
        xs = tuple(float(x) for x in alphas)
        ys = tuple(float(y) for y in values)
        if len(xs) != len(ys) or len(xs) < 2:
            raise InputError("table density needs matching alphas/values with >= 2 entries")
        if any(y < 0.0 for y in ys):
            raise InputError("density values must be non-negative")
        if list(xs) != sorted(set(xs)):
            raise InputError("table alphas must be distinct and ascending")
        return cls(
            kind="density",
            density=lambda x: np.interp(np.asarray(x, dtype=float), xs, ys),
            support=(xs[0], xs[-1]),
            nodes=nodes,
            _tag="table",
            _table=(xs, ys),
        )

    def to_json(self) -> dict:
        if self.kind == "atoms":
            return {"atoms": [[a, m] for a, m in self.atoms]}
        if self._tag == "uniform":
            return {"density": "uniform", "support": list(self.support), "n": self.nodes}
        if self._tag == "table":
            xs, ys = self._table
            return {
                "density": "table",
                "support": list(self.support),
                "n": self.nodes,
                "alphas": list(xs),
                "values": list(ys),
            }
        raise InputError("only uniform/table densities are serializable")

    @classmethod
    def from_json(cls, obj: dict) -> "OrderMeasure":
        if not isinstance(obj, dict):
            raise InputError("measure JSON must be an object")
        if "atoms" in obj:
            return cls.from_atoms(tuple((float(a), float(m)) for a, m in obj["atoms"]))
        if "density" in obj:
            kind = obj["density"]
            nodes = int(obj.get("n", DEFAULT_NODES))
            if kind == "uniform":
                a, b = obj["support"]
                return cls.uniform(float(a), float(b), nodes=nodes)
            if kind == "table":
                return cls.table(obj["alphas"], obj["values"], nodes=nodes)
            raise InputError(f"unknown density kind {kind!r}")
        raise InputError("measure JSON needs an 'atoms' or 'density' field")


def dirac(alpha_o: float) -> MultiTermSpec:
    """Point mass at a single order: the single-term (classic fractional) case."""
    return MultiTermSpec(((_check_order(alpha_o), 1.0),))


def discretize(m: OrderMeasure, n: int | None = None) -> MultiTermSpec:
    """Composite-trapezoid discretization of a density measure into n+1 terms.

    Nodes are alpha_j = a + j * (b - a) / n with the endpoint weights halved;
    the quadrature error is O((delta alpha)^2).  A node landing on 0 is
    clamped to ``ALPHA_MIN`` (colliding weights are merged).  Atom measures
    pass through as their own spec.
    """
    if m.kind == "atoms":
        return MultiTermSpec(m.atoms)
    n = m.nodes if n is None else int(n)
    a, b = m.support
    if a == b:
        # Degenerate support: the measure is a point mass.
        if n != 0:
            raise InputError("degenerate support [a, a] admits only n=0")
        return dirac(a)
    if n < 1:
        raise InputError("n must be >= 1 when the support has positive length")
    dalpha = (b - a) / n
    nodes = a + dalpha * np.arange(n + 1)
    vals = np.asarray(m.density(nodes), dtype=float)
    if np.any(vals < 0.0):
        raise InputError("density evaluated negative at a quadrature node")
    weights = dalpha * vals
    weights[0] *= 0.5
    weights[-1] *= 0.5
    merged: dict[float, float] = {}
    for node, w in zip(nodes, weights):
        node = max(float(node), ALPHA_MIN)
        merged[node] = merged.get(node, 0.0) + float(w)
    return MultiTermSpec(tuple(sorted(merged.items())))


def normalize_mass(spec: MultiTermSpec) -> MultiTermSpec:
    """Rescale weights to total mass 1 (for probability-interpretation runs)."""
    total = sum(spec.weights)
    if total == 0.0:
        raise InputError("cannot normalize a spec with zero total mass")
    return MultiTermSpec(tuple((a, w / total) for a, w in spec.terms))

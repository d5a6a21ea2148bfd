"""Graph data model, random-walk Laplacian, and linear graph diffusion.

Graphs are undirected, positively weighted, and have no self-loops.  The
diffusion operator is built column-stochastic: A_{ij} = W_{ij} / d_j, so mass
flowing out of node j is split in proportion to its edge weights and A maps
probability vectors to probability vectors.  L = A - I then has vanishing
column sums, which makes total mass 1^T X a conserved quantity of
dX/dt = L X and of its fractional generalizations.

Matrices are dense up to ``DENSE_LIMIT`` nodes and sparse (CSR) beyond: the
per-multiply cost of the sparse path is proportional to |E| * d, which is
what makes large graphs tractable.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.sparse as sp

from .errors import InputError
from .measure import MultiTermSpec
from .solvers import FDEProblem, Trajectory, solve

__all__ = [
    "GraphSpec",
    "DiffusionOperator",
    "build_operator",
    "d_grand_rhs",
    "solve_diffusion",
    "read_edge_list",
    "write_edge_list",
]

DENSE_LIMIT = 2000


@dataclass(frozen=True)
class GraphSpec:
    """Undirected weighted graph: node count plus one (i, j, w) entry per edge.

    Each edge is stored once; symmetry is implied.  Invariants: no self
    loops, strictly positive weights, and every node incident to at least
    one edge.
    """

    n_nodes: int
    edges: tuple[tuple[int, int, float], ...]

    def __post_init__(self):
        if self.n_nodes < 1:
            raise InputError("graph needs at least one node")
        canon = []
        seen = set()
        touched = np.zeros(self.n_nodes, dtype=bool)
        for i, j, w in self.edges:
            i, j, w = int(i), int(j), float(w)
            if i == j:
                raise InputError(f"self-loop at node {i} is not allowed")
            if not (0 <= i < self.n_nodes and 0 <= j < self.n_nodes):
                raise InputError(f"edge ({i}, {j}) references a node outside 0..{self.n_nodes - 1}")
            if w <= 0.0:
                raise InputError(f"edge ({i}, {j}) has non-positive weight {w}")
            key = (min(i, j), max(i, j))
            if key in seen:
                raise InputError(f"duplicate edge ({i}, {j})")
            seen.add(key)
            canon.append((key[0], key[1], w))
            touched[i] = touched[j] = True
        if not touched.all():
            isolated = int(np.flatnonzero(~touched)[0])
            raise InputError(f"node {isolated} is isolated (zero degree)")
        object.__setattr__(self, "edges", tuple(sorted(canon)))

    def degrees(self) -> np.ndarray:
        d = np.zeros(self.n_nodes)
        for i, j, w in self.edges:
            d[i] += w
            d[j] += w
        return d

    @classmethod
    def path(cls, n: int, weight: float = 1.0) -> "GraphSpec":
        """Path graph 0-1-...-(n-1) with uniform edge weight."""
        return cls(n, tuple((i, i + 1, weight) for i in range(n - 1)))


@dataclass(frozen=True)
class DiffusionOperator:
    """A = W D^-1 (column-stochastic) and the random-walk Laplacian L = A - I."""

    A: np.ndarray | sp.spmatrix
    L: np.ndarray | sp.spmatrix
    n_nodes: int

    def apply_laplacian(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.shape[0] != self.n_nodes:
            raise InputError(
                f"state has {X.shape[0]} rows but the graph has {self.n_nodes} nodes"
            )
        out = self.L @ X
        return np.asarray(out)


def build_operator(g: GraphSpec) -> DiffusionOperator:
    """Assemble A = W D^-1 and L = A - I from the edge list."""
    d = g.degrees()
    rows, cols, vals = [], [], []
    for i, j, w in g.edges:
        rows += [i, j]
        cols += [j, i]
        vals += [w, w]
    if g.n_nodes <= DENSE_LIMIT:
        W = np.zeros((g.n_nodes, g.n_nodes))
        W[rows, cols] = vals
        A = W / d[np.newaxis, :]
        L = A - np.eye(g.n_nodes)
    else:
        W = sp.csr_matrix((vals, (rows, cols)), shape=(g.n_nodes, g.n_nodes))
        A = W @ sp.diags(1.0 / d)
        L = (A - sp.identity(g.n_nodes)).tocsr()
        A = A.tocsr()
    return DiffusionOperator(A=A, L=L, n_nodes=g.n_nodes)


def d_grand_rhs(op: DiffusionOperator):
    """Autonomous linear diffusion drift F(t, X) = (A - I) X = L X."""

    def rhs(t: float, X: np.ndarray) -> np.ndarray:
        return op.apply_laplacian(X)

    return rhs


def solve_diffusion(
    g: GraphSpec,
    spec: MultiTermSpec,
    x0: np.ndarray,
    T: float,
    h: float,
    backend: str = "gl",
) -> Trajectory:
    """Solve the distributed-order diffusion int D^alpha X dmu = L X on graph g.

    ``x0`` is an N-vector or an N x d matrix; channels evolve independently
    under the shared Laplacian.  When ``x0`` is a probability vector the
    trajectory conserves total mass to roundoff.
    """
    op = build_operator(g)
    x0 = np.asarray(x0, dtype=float)
    if x0.shape[0] != g.n_nodes:
        raise InputError(f"x0 has {x0.shape[0]} rows but the graph has {g.n_nodes} nodes")
    problem = FDEProblem(spec=spec, rhs=d_grand_rhs(op), x0=x0, T=T, h=h)
    return solve(problem, backend=backend)


def read_edge_list(text: str) -> GraphSpec:
    """Parse a whitespace-separated edge list: one ``i j w`` triple per line.

    Lines starting with ``#`` are comments; a ``# nodes N`` header pins the
    node count (otherwise max index + 1 is used).
    """
    n_nodes = None
    edges = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            parts = line[1:].split()
            if len(parts) == 2 and parts[0] == "nodes":
                n_nodes = int(parts[1])
            continue
        parts = line.split()
        if len(parts) != 3:
            raise InputError(f"line {lineno}: expected 'i j w', got {raw!r}")
        i, j, w = int(parts[0]), int(parts[1]), float(parts[2])
        edges.append((i, j, w))
    if not edges:
        raise InputError("edge list contains no edges")
    if n_nodes is None:
        n_nodes = max(max(i, j) for i, j, _ in edges) + 1
    return GraphSpec(n_nodes, tuple(edges))


def write_edge_list(g: GraphSpec) -> str:
    from ._serialize import format_float

    lines = [f"# nodes {g.n_nodes}"]
    for i, j, w in g.edges:
        lines.append(f"{i} {j} {format_float(w)}")
    return "\n".join(lines) + "\n"

"""Explicit graph providers for the event-driven engine.

Configuration-model d-regular multigraphs come from a uniform perfect
matching on d*N labeled half-edges (Fisher-Yates shuffle, consecutive
pairing), optionally rejection-sampled to a simple graph.  Tori are
(Z/nZ)^dim lattices with wraparound, 2*dim-regular.

Spreading adjacency excludes self-loops (a loop cannot color a new vertex)
but keeps parallel edges as repeated entries, since parallel edges multiply
capture rates.  Degree accounting still includes loops (a loop contributes
two endpoints to its vertex).
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

__all__ = [
    "Multigraph",
    "TorusGraph",
    "sample_configuration_multigraph",
    "make_torus",
    "neighbors",
    "spreading_csr",
    "save_edge_list",
    "load_edge_list",
]


@dataclass
class Multigraph:
    N: int
    d: int
    edges: np.ndarray  # shape (dN/2, 2), self-loops and parallel edges allowed
    _indptr: np.ndarray = field(init=False, repr=False)
    _indices: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        self.edges = np.asarray(self.edges, dtype=np.int64)
        if self.edges.ndim != 2 or self.edges.shape[1] != 2:
            raise ValueError("edges must be an (m, 2) array")
        if self.edges.shape[0] * 2 != self.N * self.d:
            raise ValueError(
                f"edge count {self.edges.shape[0]} != dN/2 = {self.N * self.d // 2}"
            )
        if self.edges.size and (self.edges.min() < 0 or self.edges.max() >= self.N):
            raise ValueError("edge endpoint out of range")
        endpoint_counts = np.bincount(self.edges.ravel(), minlength=self.N)
        if not np.all(endpoint_counts == self.d):
            bad = int(np.argmax(endpoint_counts != self.d))
            raise ValueError(
                f"vertex {bad} has {endpoint_counts[bad]} endpoints, expected d = {self.d}"
            )
        u, v = self.edges[:, 0], self.edges[:, 1]
        keep = u != v
        src = np.concatenate([u[keep], v[keep]])
        dst = np.concatenate([v[keep], u[keep]])
        order = np.argsort(src, kind="stable")
        deg = np.bincount(src, minlength=self.N)
        self._indptr = np.zeros(self.N + 1, dtype=np.int64)
        np.cumsum(deg, out=self._indptr[1:])
        self._indices = dst[order]

    @property
    def n_self_loops(self) -> int:
        return int(np.sum(self.edges[:, 0] == self.edges[:, 1]))

    def is_simple(self) -> bool:
        u = np.minimum(self.edges[:, 0], self.edges[:, 1])
        v = np.maximum(self.edges[:, 0], self.edges[:, 1])
        if np.any(u == v):
            return False
        keys = u * self.N + v
        return len(np.unique(keys)) == len(keys)

    def neighbors(self, v: int) -> list:
        if not (0 <= v < self.N):
            raise ValueError(f"vertex {v} out of range")
        nbrs = self._indices[self._indptr[v] : self._indptr[v + 1]]
        values, counts = np.unique(nbrs, return_counts=True)
        return [(int(w), int(c)) for w, c in zip(values, counts)]

    def spreading_csr(self) -> tuple[np.ndarray, np.ndarray]:
        """(indptr, indices) over non-loop edge endpoints; parallel edges repeat."""
        return self._indptr, self._indices


@dataclass
class TorusGraph:
    n: int
    dim: int
    _csr: Optional[tuple] = field(default=None, init=False, repr=False)

    def __post_init__(self):
        if self.n < 3:
            raise ValueError("side length n must be >= 3")
        if self.dim < 1:
            raise ValueError("dim must be >= 1")

    @property
    def N(self) -> int:
        return self.n**self.dim

    @property
    def degree(self) -> int:
        return 2 * self.dim

    def coords(self, v: int) -> tuple:
        if not (0 <= v < self.N):
            raise ValueError(f"vertex {v} out of range")
        out = []
        for _ in range(self.dim):
            out.append(v % self.n)
            v //= self.n
        return tuple(out)

    def vertex(self, coords) -> int:
        if len(coords) != self.dim:
            raise ValueError("coordinate arity mismatch")
        v = 0
        for c in reversed(coords):
            v = v * self.n + (c % self.n)
        return v

    def neighbors(self, v: int) -> list:
        cs = list(self.coords(v))
        out = []
        for axis in range(self.dim):
            for delta in (-1, 1):
                w = cs.copy()
                w[axis] = (w[axis] + delta) % self.n
                out.append((self.vertex(w), 1))
        return out

    def spreading_csr(self) -> tuple[np.ndarray, np.ndarray]:
        if self._csr is None:
            N, n, dim = self.N, self.n, self.dim
            vs = np.arange(N, dtype=np.int64)
            nbr_cols = []
            place = 1
            for axis in range(dim):
                coord = (vs // place) % n
                up = vs + ((coord + 1) % n - coord) * place
                down = vs + ((coord - 1) % n - coord) * place
                nbr_cols.append(up)
                nbr_cols.append(down)
                place *= n
            indices = np.stack(nbr_cols, axis=1).ravel()
            indptr = np.arange(N + 1, dtype=np.int64) * (2 * dim)
            self._csr = (indptr, indices)
        return self._csr


def sample_configuration_multigraph(
    N: int,
    d: int,
    rng: np.random.Generator,
    mode: str = "multigraph",
    attempt_cap: int = 10**4,
) -> Multigraph:
    """Uniform perfect matching on dN half-edges, contracted to vertices.

    mode "reject_to_simple" resamples until the result has no self-loops or
    parallel edges, which makes the output uniform over simple d-regular
    graphs.  The acceptance probability tends to exp((1-d^2)/4), so the
    attempt cap mostly matters for tiny N where no simple graph exists.
    """
    if d < 3:
        raise ValueError("d must be >= 3")
    if (N * d) % 2 != 0:
        raise ValueError(f"d*N = {N * d} is odd; no pairing exists")
    if mode not in ("multigraph", "reject_to_simple"):
        raise ValueError(f"unknown mode {mode!r}")
    attempts = 0
    while True:
        attempts += 1
        perm = rng.permutation(N * d)
        edges = np.column_stack([perm[0::2] // d, perm[1::2] // d])
        graph = Multigraph(N=N, d=d, edges=edges)
        if mode == "multigraph" or graph.is_simple():
            return graph
        if attempts >= attempt_cap:
            rate = float(np.exp((1 - d * d) / 4.0))
            raise RuntimeError(
                f"no simple graph in {attempts} attempts (N={N}, d={d}); "
                f"asymptotic acceptance rate is exp((1-d^2)/4) = {rate:.4g}, "
                "so either increase attempt_cap or check that a simple "
                "d-regular graph on N vertices exists"
            )


def make_torus(n: int, dim: int) -> TorusGraph:
    return TorusGraph(n=n, dim=dim)


def neighbors(graph, v: int) -> list:
    """(neighbor, multiplicity) pairs; self-loops carry no spreading target."""
    return graph.neighbors(v)


def spreading_csr(graph) -> tuple[np.ndarray, np.ndarray]:
    return graph.spreading_csr()


def save_edge_list(graph: Multigraph, path) -> None:
    with open(path, "w") as fh:
        fh.write(f"{graph.N} {graph.d}\n")
        for u, v in graph.edges:
            fh.write(f"{u} {v}\n")


def load_edge_list(path) -> Multigraph:
    with open(path) as fh:
        header = fh.readline().split()
        if len(header) != 2:
            raise ValueError("expected header line 'N d'")
        N, d = int(header[0]), int(header[1])
        edges = []
        for line in fh:
            line = line.strip()
            if not line:
                continue
            u, v = line.split()
            edges.append((int(u), int(v)))
    return Multigraph(N=N, d=d, edges=np.array(edges, dtype=np.int64).reshape(-1, 2))

"""Normalized epsilon-neighborhood counts for hinges, chains, and edge maps.

All counts share one convention: the event asks every selected pair to
satisfy |phi(x^i, x^j) - t| <= eps (closed intervals), and the product-
measure mass of the event is scaled by eps^(-n) where n is the number of
constrained pairs.  The first vertex always carries the pin measure lambda,
remaining vertices carry mu, except in `config_count` where measures are
assigned per vertex.
"""

from dataclasses import dataclass

import math

import numpy as np

from .errors import BudgetError, DomainError
from .fractals import FrostmanMeasure
from .pinned import _phi_matrix, _trapz_weights
from .rng import batches, rng_for

#: Exhaustive enumeration is auto-selected when the tuple count is below this.
EXHAUSTIVE_BUDGET = 10_000_000


@dataclass(frozen=True)
class EdgeMap:
    """Configuration graph on vertices 1..vertex_count with upper-triangle edges."""

    vertex_count: int
    edges: frozenset          # of (i, j) pairs, 1 <= i < j <= vertex_count

    def __post_init__(self):
        object.__setattr__(self, "edges", frozenset(
            (int(i), int(j)) for i, j in self.edges))
        for i, j in self.edges:
            if not (1 <= i < j <= self.vertex_count):
                raise DomainError(f"edge ({i},{j}) outside the upper triangle")
        if len(self.edges) < 1:
            raise DomainError("edge map needs at least one edge")

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def sorted_edges(self):
        return sorted(self.edges)


def chain_edge_map(k: int) -> EdgeMap:
    """The k-link chain: edges (i, i+1) for i = 1..k."""
    return EdgeMap(k + 1, frozenset((i, i + 1) for i in range(1, k + 1)))


def star_edge_map(k: int, center: int) -> EdgeMap:
    """k+1 vertices, every non-center vertex joined to the center."""
    edges = frozenset(tuple(sorted((i, center))) for i in range(1, k + 2) if i != center)
    return EdgeMap(k + 1, edges)


def pinned_lift(em: EdgeMap) -> EdgeMap:
    """Double the configuration across the pinned vertex k+1.

    Vertices k+2..2k+1 mirror 1..k; edges into the pin are copied to the
    mirror side through the pin, all other edges are copied verbatim.
    """
    k = em.vertex_count - 1
    pin = k + 1
    lifted = set()
    for i, j in em.edges:
        lifted.add((i, j))
        if j == pin:
            lifted.add((pin, pin + i))
        else:
            lifted.add((pin + i, pin + j))
    return EdgeMap(2 * k + 1, frozenset(lifted))


def lift_t_assignment(em: EdgeMap, t_assignment: dict) -> dict:
    """Extend an edge->gap map through `pinned_lift`: every mirrored edge
    inherits the gap of the edge it copies (the doubled-configuration event
    constrains both copies by the same gap vector)."""
    k = em.vertex_count - 1
    pin = k + 1
    t_map = {tuple(sorted((int(i), int(j)))): float(v)
             for (i, j), v in t_assignment.items()}
    out = {}
    for (i, j), v in t_map.items():
        out[(i, j)] = v
        if j == pin:
            out[(pin, pin + i)] = v
        else:
            out[(pin + i, pin + j)] = v
    return out


@dataclass(frozen=True)
class ConfigCount:
    epsilon: float
    t_assignment: dict
    count_normalized: float
    stderr: float
    tuple_budget: int
    samples: int             # 0 for exhaustive mode

    def __post_init__(self):
        if self.count_normalized < 0 or self.stderr < 0:
            raise DomainError("counts and errors must be nonnegative")


def hinge_count(lam: FrostmanMeasure, mu: FrostmanMeasure, phi, t: float,
                eps: float, samples: int = 0, seed: int = 0) -> ConfigCount:
    """eps^-2 times the lambda x mu x mu mass of the hinge event at gap t.

    The (y, z) legs are conditionally independent given the pin, so the exact
    triple sum factors as sum_x lam_x (sum_y mu_y 1[|phi(x,y)-t|<=eps])^2.
    """
    if eps <= 0:
        raise DomainError("eps must be positive")
    if samples == 0:
        inner = _window_mass(lam, mu, phi, np.array([t]), eps)[:, 0]
        val = float(lam.weights @ inner ** 2) / eps ** 2
        return ConfigCount(eps, {"t": t}, val, 0.0, EXHAUSTIVE_BUDGET, 0)
    hits = 0
    hits_sq = 0
    for b, _, size in batches(samples):
        rng = rng_for(seed, 5, b)
        x = lam.points[rng.choice(len(lam), size=size, p=lam.weights)]
        y = mu.points[rng.choice(len(mu), size=size, p=mu.weights)]
        z = mu.points[rng.choice(len(mu), size=size, p=mu.weights)]
        ind = ((np.abs(np.asarray(phi.value(x, y)) - t) <= eps)
               & (np.abs(np.asarray(phi.value(x, z)) - t) <= eps)).astype(float)
        hits += ind.sum()
        hits_sq += (ind ** 2).sum()
    mean = hits / samples
    var = max(hits_sq / samples - mean ** 2, 0.0) / samples
    return ConfigCount(eps, {"t": t}, mean / eps ** 2,
                       float(np.sqrt(var)) / eps ** 2, EXHAUSTIVE_BUDGET, samples)


def _window_mass(lam, mu, phi, t_nodes, eps):
    """(n_pins, n_t) matrix of sum_y mu_y 1[|phi(x,y) - t| <= eps]."""
    out = np.empty((len(lam), len(t_nodes)))
    gaps = _phi_matrix(phi, lam.points, mu.points)
    chunk = max(1, 4_000_000 // max(len(mu), 1))
    for i0 in range(0, len(t_nodes), chunk):
        sl = slice(i0, min(i0 + chunk, len(t_nodes)))
        ind = np.abs(gaps[:, None, :] - t_nodes[None, sl, None]) <= eps
        out[:, sl] = ind @ mu.weights
    return out


def hinge_count_integrated(lam: FrostmanMeasure, mu: FrostmanMeasure, phi, beta,
                           eps: float, t_nodes, samples: int = 0,
                           seed: int = 0) -> float:
    """Trapezoid t-integral of beta(t) * hinge_count(t) over the node grid."""
    t_nodes = np.asarray(t_nodes, float)
    tw = _trapz_weights(len(t_nodes), float(t_nodes[1] - t_nodes[0]))
    bvals = np.asarray(beta(t_nodes), float) if beta is not None else np.ones(len(t_nodes))
    if samples == 0:
        inner = _window_mass(lam, mu, phi, t_nodes, eps)
        per_t = lam.weights @ inner ** 2
        return float((per_t * bvals) @ tw) / eps ** 2
    total = 0.0
    for ti, t in enumerate(t_nodes):
        c = hinge_count(lam, mu, phi, float(t), eps, samples, seed + 1000 * ti)
        total += c.count_normalized * bvals[ti] * tw[ti]
    return total


def chain_tuple_count(lam: FrostmanMeasure, mu: FrostmanMeasure, phi, t,
                      eps: float, samples: int = 0, seed: int = 0) -> ConfigCount:
    """eps^-2k normalized mass of the doubled k-chain sharing its pin.

    The two chains hanging off the pin are conditionally independent, so the
    exact mass is sum_x lam_x m_x(t)^2 with m_x the single-chain indicator
    mass started at x, computed by one backward recursion over atoms.
    """
    t = np.atleast_1d(np.asarray(t, float))
    k = len(t)
    if eps <= 0 or k < 1:
        raise DomainError("need eps > 0 and k >= 1")
    if samples == 0:
        m_x = _chain_indicator_mass(lam, mu, phi, t, eps)
        val = float(lam.weights @ m_x ** 2) / eps ** (2 * k)
        return ConfigCount(eps, {"t": tuple(t)}, val, 0.0, EXHAUSTIVE_BUDGET, 0)
    hits = 0.0
    hits_sq = 0.0
    for b, _, size in batches(samples):
        rng = rng_for(seed, 6, b)
        x = lam.points[rng.choice(len(lam), size=size, p=lam.weights)]
        ok = np.ones(size, dtype=bool)
        for side in range(2):
            prev = x
            for i in range(k):
                nxt = mu.points[rng.choice(len(mu), size=size, p=mu.weights)]
                ok &= np.abs(np.asarray(phi.value(prev, nxt)) - t[i]) <= eps
                prev = nxt
        hits += ok.sum()
        hits_sq += ok.sum()
    mean = hits / samples
    var = max(hits_sq / samples - mean ** 2, 0.0) / samples
    return ConfigCount(eps, {"t": tuple(t)}, mean / eps ** (2 * k),
                       float(np.sqrt(var)) / eps ** (2 * k), EXHAUSTIVE_BUDGET, samples)


def _chain_indicator_mass(lam, mu, phi, t, eps):
    """m_x(t) = mass of chains (x, x^2..x^{k+1}) with all gaps within eps."""
    k = len(t)
    g = np.ones(len(mu))
    if k > 1:
        gaps_aa = _phi_matrix(phi, mu.points, mu.points)
    for link in range(k, 1, -1):
        kern = (np.abs(gaps_aa - t[link - 1]) <= eps).astype(float)
        g = kern @ (mu.weights * g)
    gaps_pin = _phi_matrix(phi, lam.points, mu.points)
    kern0 = (np.abs(gaps_pin - t[0]) <= eps).astype(float)
    return kern0 @ (mu.weights * g)


def config_count(em: EdgeMap, measures, phi, t_assignment: dict, eps: float,
                 samples: int = 0, seed: int = 0,
                 budget: int = EXHAUSTIVE_BUDGET) -> ConfigCount:
    """eps^-n(E) normalized product-measure mass of a general edge-map event.

    `measures` is one FrostmanMeasure per vertex (a single measure is
    broadcast).  `t_assignment` maps each edge (i, j) to its gap value and
    must cover exactly the edge set.  Exhaustive mode enumerates all tuples
    when their count is within budget, otherwise Monte Carlo with `samples`
    draws is required.
    """
    if isinstance(measures, FrostmanMeasure):
        measures = [measures] * em.vertex_count
    if len(measures) != em.vertex_count:
        raise DomainError("need one measure per vertex")
    t_map = {tuple(sorted((int(i), int(j)))): float(v) for (i, j), v in t_assignment.items()}
    if set(t_map) != set(em.edges):
        raise DomainError("t_assignment must cover exactly the edge set")
    n = em.n_edges
    sizes = [len(m) for m in measures]
    total = math.prod(sizes)
    if samples == 0:
        if total > budget:
            raise BudgetError(f"{total} tuples exceed exhaustive budget {budget}; pass samples")
        mass = _config_exhaustive(em, measures, phi, t_map, eps)
        return ConfigCount(eps, t_map, mass / eps ** n, 0.0, budget, 0)
    hits = 0.0
    for b, _, size in batches(samples):
        rng = rng_for(seed, 7, b)
        draws = [m.points[rng.choice(len(m), size=size, p=m.weights)] for m in measures]
        ok = np.ones(size, dtype=bool)
        for (i, j), tv in t_map.items():
            ok &= np.abs(np.asarray(phi.value(draws[i - 1], draws[j - 1])) - tv) <= eps
        hits += ok.sum()
    mean = hits / samples
    var = max(mean - mean ** 2, 0.0) / samples
    return ConfigCount(eps, t_map, mean / eps ** n,
                       float(np.sqrt(var)) / eps ** n, budget, samples)


def _config_exhaustive(em, measures, phi, t_map, eps):
    """Sum over all vertex-atom tuples of the product of edge indicators.

    Edge indicators are cached per pair, then the tuple grid is swept in
    flat chunks; fast enough at the enforced budget.
    """
    sizes = [len(m) for m in measures]
    total = math.prod(sizes)
    chunk = 1_000_000
    mass = 0.0
    pair_ind = {}
    for (i, j), tv in t_map.items():
        gaps = _phi_matrix(phi, measures[i - 1].points, measures[j - 1].points)
        pair_ind[(i, j)] = np.abs(gaps - tv) <= eps
    wts = [m.weights for m in measures]
    for start in range(0, total, chunk):
        idx_flat = np.arange(start, min(start + chunk, total))
        idx = np.unravel_index(idx_flat, sizes)
        ok = np.ones(len(idx_flat), dtype=bool)
        for (i, j) in t_map:
            ok &= pair_ind[(i, j)][idx[i - 1], idx[j - 1]]
        w = np.ones(len(idx_flat))
        for v in range(len(sizes)):
            w *= wts[v][idx[v]]
        mass += float(w[ok].sum())
    return mass


# -- serialization ----------------------------------------------------------

def save_edge_map(em: EdgeMap, path) -> None:
    """Header `vertices n`, then one sorted `i j` pair per line."""
    with open(path, "w") as fh:
        fh.write(f"{em.vertex_count} {em.n_edges}\n")
        for i, j in em.sorted_edges():
            fh.write(f"{i} {j}\n")


def load_edge_map(path) -> EdgeMap:
    with open(path) as fh:
        head = fh.readline().split()
        v = int(head[0])
        edges = []
        for line in fh:
            line = line.strip()
            if line:
                i, j = line.split()
                edges.append((int(i), int(j)))
    return EdgeMap(v, frozenset(edges))

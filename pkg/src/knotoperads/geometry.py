"""Floating-point configuration geometry on spheres.

Gauss maps of point configurations, the three-dependence/four-consistency
membership checks for compactified configurations, operad composition on
sphere coordinates with its coface/codegeneracy maps, the little-disks
comparison homotopy, the endpoint-stretching maps lambda/pi_k taking
long-knot data to sphere configurations, and evaluation of sampled knots.

Conventions fixed here once and used throughout:

- vectors are tuples of floats; ``unit`` normalizes axis-aligned vectors
  exactly (sign flip only), which is what makes the bookkeeping identities
  (cosimplicial, naturality) hold to the bit;
- membership-side Gauss map is u_ij = u(x_i - x_j) for i < j, anti-symmetry
  extends the accessor;
- boundary data (knot samples, pi_k outputs) uses forward directions
  u(x_j - x_i) so that a coincident pair's direction is the curve tangent;
- the cube picture has marked endpoints *_+ = (0,..,0,1), *_- = (0,..,0,-1),
  and the sphere basepoint is *_S = (0,..,0,-1).
"""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .trees import RpTree, TreeMorphism, join_vertex
from .operad_core import CheckReport, CosimplicialObject, OperadInstance, \
    check_cosimplicial_identities

Vector = tuple[float, ...]

DEFAULT_TOL = 1e-9
DEFAULT_EPS = 0.125          # endpoint shell width, must stay <= 1/6
EPS_MAX = 1.0 / 6.0
LIMIT_TIME = 1e-6            # disks homotopy time for the t -> 0 comparison
LIMIT_TOL = 1e-4
UNIT_NORM_TOL = 1e-6         # slack for unit vectors arriving from JSON


# -- vector helpers -----------------------------------------------------------


def south(m: int) -> Vector:
    """The sphere basepoint *_S (also the lower cube endpoint *_-)."""
    return (0.0,) * (m - 1) + (-1.0,)


def north(m: int) -> Vector:
    return (0.0,) * (m - 1) + (1.0,)


def dot(a: Vector, b: Vector) -> float:
    return sum(x * y for x, y in zip(a, b))


def norm(a: Vector) -> float:
    return math.sqrt(sum(x * x for x in a))


def unit(v: Sequence[float]) -> Vector:
    """v/|v|, with axis-aligned vectors normalized exactly.

    A vector with a single nonzero coordinate maps to the corresponding
    signed basis vector with no rounding; the exact identities of the
    insertion maps rely on this (u of a scaled basepoint must be the
    basepoint itself, not a 1-ulp neighbour).
    """
    nz = [k for k, x in enumerate(v) if x != 0.0]
    if not nz:
        raise ValueError("cannot normalize the zero vector")
    if len(nz) == 1:
        k = nz[0]
        out = [0.0] * len(v)
        out[k] = math.copysign(1.0, v[k])
        return tuple(out)
    r = norm(tuple(v))
    return tuple(x / r for x in v)


def _as_vector(x: Sequence[float], m: int, what: str) -> Vector:
    t = tuple(float(c) for c in x)
    if len(t) != m:
        raise ValueError(f"{what} has dimension {len(t)}, expected {m}")
    return t


# -- configuration types ------------------------------------------------------


class SphereConfiguration:
    """A point of (S^{m-1})^{n choose 2}: unit vectors u_ij for i < j.

    The accessor extends anti-symmetrically, u_ji = -u_ij, so callers never
    store both orientations.
    """

    __slots__ = ("m", "n", "_u")

    def __init__(self, m: int, n: int, u: Mapping[tuple[int, int], Sequence[float]],
                 tol: float = UNIT_NORM_TOL):
        if m < 1 or n < 0:
            raise ValueError(f"bad dimensions m={m}, n={n}")
        want = {(i, j) for i in range(1, n + 1) for j in range(i + 1, n + 1)}
        got = set(u)
        if got != want:
            missing = sorted(want - got)[:3]
            extra = sorted(got - want)[:3]
            raise ValueError(f"pair index mismatch: missing {missing}, extra {extra}")
        store = {}
        for key in sorted(want):
            vec = _as_vector(u[key], m, f"u{key}")
            if abs(norm(vec) - 1.0) > tol:
                raise ValueError(f"u{key} is not a unit vector: |v| = {norm(vec)}")
            store[key] = vec
        self.m = m
        self.n = n
        self._u = store

    def u(self, i: int, j: int) -> Vector:
        if i == j or not (1 <= i <= self.n and 1 <= j <= self.n):
            raise ValueError(f"pair ({i}, {j}) out of range for n={self.n}")
        if i < j:
            return self._u[(i, j)]
        return tuple(-x for x in self._u[(j, i)])

    def pairs(self) -> list[tuple[int, int]]:
        return sorted(self._u)

    def __eq__(self, other) -> bool:
        return (isinstance(other, SphereConfiguration)
                and self.m == other.m and self.n == other.n
                and self._u == other._u)

    def __repr__(self) -> str:
        return f"SphereConfiguration(m={self.m}, n={self.n}, u={self._u!r})"

    def to_json_obj(self) -> dict:
        return {"m": self.m, "n": self.n,
                "u": {f"{i},{j}": list(v) for (i, j), v in self._u.items()}}

    @staticmethod
    def from_json_obj(obj: dict) -> "SphereConfiguration":
        u = {}
        for key, val in obj["u"].items():
            i, j = (int(part) for part in key.split(","))
            u[(i, j)] = val
        return SphereConfiguration(int(obj["m"]), int(obj["n"]), u)


class PointConfiguration:
    """n labeled points in R^m, optionally with unit tangents per point and
    stored directions for coincident pairs (the diagonal data of boundary
    configurations)."""

    __slots__ = ("m", "points", "tangents", "pair_directions")

    def __init__(self, m: int, points: Sequence[Sequence[float]],
                 tangents: Sequence[Sequence[float]] | None = None,
                 pair_directions: Mapping[tuple[int, int], Sequence[float]] | None = None):
        if m < 1:
            raise ValueError(f"bad ambient dimension m={m}")
        self.m = m
        self.points = tuple(_as_vector(p, m, f"point {k + 1}")
                            for k, p in enumerate(points))
        n = len(self.points)
        if tangents is None:
            self.tangents = None
        else:
            if len(tangents) != n:
                raise ValueError("one tangent per point required")
            vecs = tuple(_as_vector(t, m, f"tangent {k + 1}")
                         for k, t in enumerate(tangents))
            for k, t in enumerate(vecs):
                if abs(norm(t) - 1.0) > UNIT_NORM_TOL:
                    raise ValueError(f"tangent {k + 1} is not a unit vector")
            self.tangents = vecs
        dirs = {}
        for (i, j), g in sorted((pair_directions or {}).items()):
            if not (1 <= i < j <= n):
                raise ValueError(f"pair direction index ({i}, {j}) out of range")
            if self.points[i - 1] != self.points[j - 1]:
                raise ValueError(f"pair ({i}, {j}) has a direction but distinct points")
            vec = _as_vector(g, m, f"direction ({i}, {j})")
            if abs(norm(vec) - 1.0) > UNIT_NORM_TOL:
                raise ValueError(f"direction ({i}, {j}) is not a unit vector")
            dirs[(i, j)] = vec
        self.pair_directions = dirs

    @property
    def n(self) -> int:
        return len(self.points)

    def __eq__(self, other) -> bool:
        return (isinstance(other, PointConfiguration)
                and self.m == other.m and self.points == other.points
                and self.tangents == other.tangents
                and self.pair_directions == other.pair_directions)

    def __repr__(self) -> str:
        return (f"PointConfiguration(m={self.m}, points={self.points!r}, "
                f"tangents={self.tangents!r}, "
                f"pair_directions={self.pair_directions!r})")

    def to_json_obj(self) -> dict:
        out: dict = {"m": self.m, "n": self.n,
                     "points": [list(p) for p in self.points]}
        if self.tangents is not None:
            out["tangents"] = [list(t) for t in self.tangents]
        if self.pair_directions:
            out["pair_directions"] = {f"{i},{j}": list(v)
                                      for (i, j), v in self.pair_directions.items()}
        return out

    @staticmethod
    def from_json_obj(obj: dict) -> "PointConfiguration":
        dirs = None
        if "pair_directions" in obj:
            dirs = {}
            for key, val in obj["pair_directions"].items():
                i, j = (int(part) for part in key.split(","))
                dirs[(i, j)] = val
        return PointConfiguration(int(obj["m"]), obj["points"],
                                  obj.get("tangents"), dirs)


class DiskConfiguration:
    """Disjoint round balls B(x_i, r_i) inside the unit ball of R^m."""

    __slots__ = ("m", "centers", "radii")

    def __init__(self, m: int, centers: Sequence[Sequence[float]],
                 radii: Sequence[float], tol: float = DEFAULT_TOL):
        if len(centers) != len(radii):
            raise ValueError("one radius per center required")
        self.m = m
        self.centers = tuple(_as_vector(c, m, f"center {k + 1}")
                             for k, c in enumerate(centers))
        self.radii = tuple(float(r) for r in radii)
        for k, r in enumerate(self.radii):
            if not 0.0 < r <= 1.0:
                raise ValueError(f"radius {k + 1} = {r} outside (0, 1]")
            if norm(self.centers[k]) + r > 1.0 + tol:
                raise ValueError(f"ball {k + 1} leaves the unit ball")
        for a, b in itertools.combinations(range(len(self.radii)), 2):
            gap = norm(tuple(p - q for p, q in zip(self.centers[a], self.centers[b])))
            if gap < self.radii[a] + self.radii[b] - tol:
                raise ValueError(f"balls {a + 1} and {b + 1} overlap")

    @property
    def n(self) -> int:
        return len(self.radii)

    def __eq__(self, other) -> bool:
        return (isinstance(other, DiskConfiguration)
                and self.m == other.m and self.centers == other.centers
                and self.radii == other.radii)

    def __repr__(self) -> str:
        return (f"DiskConfiguration(m={self.m}, centers={self.centers!r}, "
                f"radii={self.radii!r})")


def identity_disks(m: int) -> DiskConfiguration:
    return DiskConfiguration(m, [(0.0,) * m], [1.0])


# -- Gauss map ---------------------------------------------------------------


def gauss_map(c: PointConfiguration) -> SphereConfiguration:
    """u_ij = unit(x_i - x_j) for i < j.  Coincident points are an error here;
    diagonal data is the business of project_pi_k."""
    u = {}
    for i, j in itertools.combinations(range(1, c.n + 1), 2):
        diff = tuple(p - q for p, q in zip(c.points[i - 1], c.points[j - 1]))
        if not any(diff):
            raise ValueError(f"points {i} and {j} coincide")
        u[(i, j)] = unit(diff)
    return SphereConfiguration(c.m, c.n, u)


# -- membership: three-dependence --------------------------------------------


def _support_candidates(a: Vector, b: Vector, c: Vector, tol: float):
    """Residuals of candidate non-negative vanishing combinations of three
    unit vectors, by support: antipodal pairs (2-support) and the three
    3-support solves with one coefficient normalized to 1."""
    vecs = (a, b, c)
    for p, q in itertools.combinations(range(3), 2):
        yield norm(tuple(x + y for x, y in zip(vecs[p], vecs[q])))
        # 2-support solve: min over alpha of |alpha v_p + v_q|
        alpha = -dot(vecs[p], vecs[q])
        if alpha >= -tol:
            yield norm(tuple(alpha * x + y for x, y in zip(vecs[p], vecs[q])))
    for pivot in range(3):
        p, q = [k for k in range(3) if k != pivot]
        vp, vq, vc = vecs[p], vecs[q], vecs[pivot]
        gpp, gpq, gqq = dot(vp, vp), dot(vp, vq), dot(vq, vq)
        det = gpp * gqq - gpq * gpq
        if abs(det) < 1e-14:
            continue  # parallel pair; the antipodal branch covers it
        rp, rq = -dot(vp, vc), -dot(vq, vc)
        alpha = (rp * gqq - rq * gpq) / det
        beta = (gpp * rq - gpq * rp) / det
        if alpha >= -tol and beta >= -tol:
            yield norm(tuple(alpha * x + beta * y + z
                             for x, y, z in zip(vp, vq, vc)))


def check_three_dependent(s: SphereConfiguration, tol: float = DEFAULT_TOL) -> dict:
    """For every 3-loop {ij, jk, ki}: is 0 a nontrivial non-negative
    combination of u_ij, u_jk, u_ki?  Decided by support enumeration."""
    if s.n < 3:
        raise ValueError(f"need at least 3 points, have {s.n}")
    loops = []
    worst = 0.0
    for i, j, k in itertools.combinations(range(1, s.n + 1), 3):
        residual = min(_support_candidates(s.u(i, j), s.u(j, k), s.u(k, i), tol))
        dependent = residual <= tol
        worst = max(worst, residual)
        loops.append({"loop": [i, j, k], "dependent": dependent,
                      "residual": residual})
    return {"check": "three-dependent", "n": s.n, "m": s.m, "tol": tol,
            "passed": all(entry["dependent"] for entry in loops),
            "max_residual": worst, "loops": loops}


# -- membership: four-consistency --------------------------------------------

# The identity is a sum over the 12 straight 3-chains on a 4-subset (the
# Hamiltonian paths modulo reversal).  All edges enter through their
# canonical orientation u_ij with i < j; the chain's sign is the parity of
# its vertex sequence as a permutation of the sorted subset.  Positions are
# 0-based here; the six unordered position pairs are indexed once.

_PAIR_SLOTS = ((0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3))
_SLOT_INDEX = {p: k for k, p in enumerate(_PAIR_SLOTS)}


def _perm_parity(seq: Sequence[int]) -> int:
    inv = sum(1 for a, b in itertools.combinations(seq, 2) if a > b)
    return -1 if inv % 2 else 1


def chain_permutation(edges: Sequence[tuple[int, int]]) -> tuple[int, ...]:
    """Vertex sequence of an ordered edge chain: (ab, bc, cd) -> (a, b, c, d).

    Edge orientations are reconciled from the shared endpoints, so
    (23, 31, 14) gives (2, 3, 1, 4)."""
    if len(edges) != 3:
        raise ValueError("a 3-chain has exactly three edges")
    (a0, b0), (a1, b1), (a2, b2) = edges
    if b0 not in (a1, b1):
        a0, b0 = b0, a0
    if b0 == b1:
        a1, b1 = b1, a1
    if a1 != b0:
        raise ValueError(f"edges {edges!r} do not form a chain")
    if b1 == b2:
        a2, b2 = b2, a2
    if a2 != b1:
        raise ValueError(f"edges {edges!r} do not form a chain")
    seq = (a0, b0, b1, b2)
    if len(set(seq)) != 4:
        raise ValueError(f"edges {edges!r} revisit a vertex")
    return seq


def complement_chain(seq: Sequence[int]) -> tuple[int, ...]:
    """The complementary Hamiltonian path: the three edges of K4 not used by
    the path (i, j, k, l) again form a path, traversed as (k, i, l, j)."""
    if len(seq) != 4 or len(set(seq)) != 4:
        raise ValueError("need a sequence of four distinct vertices")
    i, j, k, l = seq
    return (k, i, l, j)


def _chain_terms() -> tuple:
    terms = []
    for seq in itertools.permutations(range(4)):
        if seq[0] > seq[3]:
            continue  # modulo reversal
        comp = complement_chain(seq)
        path_idx = tuple(_SLOT_INDEX[tuple(sorted((seq[t], seq[t + 1])))]
                         for t in range(3))
        comp_idx = tuple(_SLOT_INDEX[tuple(sorted((comp[t], comp[t + 1])))]
                         for t in range(3))
        terms.append((_perm_parity(seq), path_idx, comp_idx))
    return tuple(terms)


_CHAIN_TERMS = _chain_terms()


def _probe_pairs(m: int, probes: int, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """All m^2 coordinate-basis pairs plus `probes` random unit pairs."""
    eye = np.eye(m)
    v_rows = [eye[a] for a in range(m) for _ in range(m)]
    w_rows = [eye[b] for _ in range(m) for b in range(m)]
    rng = np.random.default_rng(seed)
    raw = rng.standard_normal((2 * probes, m))
    raw /= np.linalg.norm(raw, axis=1, keepdims=True)
    v = np.vstack([v_rows, raw[:probes]]) if probes else np.array(v_rows)
    w = np.vstack([w_rows, raw[probes:]]) if probes else np.array(w_rows)
    return v, w


def _four_residuals(u_rows: np.ndarray, pair_index: dict,
                    subsets: Sequence[tuple[int, ...]],
                    v: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Max |chain sum| per 4-subset over all probe pairs.

    u_rows holds the canonical vectors u_ij (i < j) as rows; pair_index maps
    (i, j) to its row.  Returns an array of shape (len(subsets),)."""
    gather = [[pair_index[(sub[a], sub[b])] for (a, b) in _PAIR_SLOTS]
              for sub in subsets]
    edges = u_rows[np.array(gather)]          # (S, 6, m)
    a = edges @ v.T                           # (S, 6, P)
    b = edges @ w.T
    total = np.zeros((len(subsets), v.shape[0]))
    for sign, (p0, p1, p2), (q0, q1, q2) in _CHAIN_TERMS:
        term = a[:, p0] * a[:, p1] * a[:, p2] * b[:, q0] * b[:, q1] * b[:, q2]
        if sign > 0:
            total += term
        else:
            total -= term
    return np.abs(total).max(axis=1)


def check_four_consistent(s: SphereConfiguration, tol: float = DEFAULT_TOL,
                          probes: int = 20, seed: int = 0) -> dict:
    """Evaluate the signed chain/complement identity on every 4-subset.

    The identity is polynomial of bidegree (3, 3) in the probe pair (v, w);
    it is sampled on all coordinate-basis pairs plus `probes` seeded random
    unit pairs rather than expanded."""
    if s.n < 4:
        raise ValueError(f"need at least 4 points, have {s.n}")
    pair_index = {pair: k for k, pair in enumerate(s.pairs())}
    u_rows = np.array([s.u(i, j) for (i, j) in s.pairs()])
    subsets = list(itertools.combinations(range(1, s.n + 1), 4))
    v, w = _probe_pairs(s.m, probes, seed)
    residuals = _four_residuals(u_rows, pair_index, subsets, v, w)
    worst = float(residuals.max())
    return {"check": "four-consistent", "n": s.n, "m": s.m, "tol": tol,
            "probes": int(v.shape[0]), "seed": seed,
            "passed": worst <= tol, "max_residual": worst,
            "subsets": [{"subset": list(sub), "residual": float(r)}
                        for sub, r in zip(subsets, residuals)]}


def membership_report(s: SphereConfiguration, tol: float = DEFAULT_TOL,
                      probes: int = 20, seed: int = 0) -> dict:
    """Both membership checks, skipping the ones below their arity."""
    three = check_three_dependent(s, tol) if s.n >= 3 else None
    four = check_four_consistent(s, tol, probes, seed) if s.n >= 4 else None
    passed = all(rep["passed"] for rep in (three, four) if rep is not None)
    worst = max((rep["max_residual"] for rep in (three, four)
                 if rep is not None), default=0.0)
    return {"check": "membership", "n": s.n, "m": s.m, "tol": tol,
            "passed": passed, "max_residual": worst,
            "three_dependent": three, "four_consistent": four}


# -- operad composition on sphere coordinates ---------------------------------


def kontsevich_compose(t: RpTree | TreeMorphism,
                       inputs: Mapping[tuple, SphereConfiguration]) -> SphereConfiguration:
    """w_ij = u^v_{a,b} where v is the join vertex of leaves i and j and
    (a, b) are the child slots of v the two leaves lie over."""
    tree = t.source if isinstance(t, TreeMorphism) else t
    internal = [p for p in tree.vertices() if not tree.is_leaf(p)]
    if set(inputs) != set(internal):
        raise ValueError(f"inputs must be keyed by the internal vertices {internal}")
    ms = {cfg.m for cfg in inputs.values()}
    if len(ms) != 1:
        raise ValueError(f"mixed ambient dimensions {sorted(ms)}")
    for p in internal:
        arity = len(tree.node_at(p))
        if inputs[p].n != arity:
            raise ValueError(f"vertex {p!r} has arity {arity}, "
                             f"input has {inputs[p].n} points")
    m = ms.pop()
    leaves = tree.leaf_count
    w = {}
    for i, j in itertools.combinations(range(1, leaves + 1), 2):
        v, a, b = join_vertex(tree, i, j)
        w[(i, j)] = inputs[v].u(a, b)
    return SphereConfiguration(m, leaves, w)


class KontsevichOperad(OperadInstance):
    """Sphere configurations as an operad: circ composes along a two-vertex
    tree.  Entries are infinite, so only the structure maps are usable; the
    point of the wrapper is that operad_core's structure-map evaluators give
    the stepwise/functoriality comparisons for free."""

    def __init__(self, m: int):
        self.name = f"kontsevich[{m}]"
        self.m = m

    def entry(self, n: int) -> list:
        raise NotImplementedError("entries of the sphere operad are infinite")

    def arity_of(self, x: SphereConfiguration) -> int:
        return x.n

    def circ(self, x: SphereConfiguration, i: int,
             y: SphereConfiguration) -> SphereConfiguration:
        if not 1 <= i <= x.n:
            raise ValueError(f"slot {i} out of range for arity {x.n}")
        from .trees import graft
        mor = graft(x.n, i, y.n)
        return kontsevich_compose(mor, {(): x, (i - 1,): y})

    def unit(self) -> SphereConfiguration:
        return SphereConfiguration(self.m, 1, {})

    def codegeneracy(self, i: int, x: SphereConfiguration) -> SphereConfiguration:
        return kontsevich_codegeneracy(x, i)


def kontsevich_coface(s: SphereConfiguration, i: int) -> SphereConfiguration:
    """d^i: level n -> n+1.  Middle indices double point i with the new
    mutual direction *_S; i = 0 / n+1 insert a new first/last point whose
    coordinates with everything are *_S (the basepoint rule)."""
    n, m = s.n, s.m
    if not 0 <= i <= n + 1:
        raise ValueError(f"coface index {i} out of range at level {n}")
    base = south(m)
    w = {}
    if i == 0:
        for a, b in itertools.combinations(range(1, n + 2), 2):
            w[(a, b)] = base if a == 1 else s.u(a - 1, b - 1)
    elif i == n + 1:
        for a, b in itertools.combinations(range(1, n + 2), 2):
            w[(a, b)] = base if b == n + 1 else s.u(a, b)
    else:
        def back(a: int) -> int:
            return a if a <= i else a - 1
        for a, b in itertools.combinations(range(1, n + 2), 2):
            w[(a, b)] = base if (a, b) == (i, i + 1) else s.u(back(a), back(b))
    return SphereConfiguration(m, n + 1, w)


def kontsevich_codegeneracy(s: SphereConfiguration, i: int) -> SphereConfiguration:
    """s^i: level n -> n-1, deleting point i and relabeling."""
    n, m = s.n, s.m
    if not 1 <= i <= n:
        raise ValueError(f"codegeneracy index {i} out of range at level {n}")

    def skip(a: int) -> int:
        return a if a < i else a + 1

    w = {}
    for a, b in itertools.combinations(range(1, n), 2):
        w[(a, b)] = s.u(skip(a), skip(b))
    return SphereConfiguration(m, n - 1, w)


def sphere_cosimplicial(samples: Callable[[int], list]) -> CosimplicialObject:
    """The coface/codegeneracy maps packaged for the generic identity
    checker, over caller-supplied sample configurations per level."""
    return CosimplicialObject(
        level_elements=samples,
        coface=lambda n, i: lambda s: kontsevich_coface(s, i),
        codegeneracy=lambda n, i: lambda s: kontsevich_codegeneracy(s, i),
    )


def check_sphere_cosimplicial(m: int, max_level: int = 6, per_level: int = 15,
                              seed: int = 0) -> CheckReport:
    """All cosimplicial identities, exactly, on random sphere configurations.

    The maps only relabel and insert constants, so equality is on the nose;
    the samples need not satisfy any membership condition."""
    rng = np.random.default_rng(seed)
    cache = {n: [random_sphere_configuration(rng, n, m) for _ in range(per_level)]
             for n in range(max_level + 1)}
    return check_cosimplicial_identities(sphere_cosimplicial(cache.__getitem__),
                                         max_level)


# -- random samplers ----------------------------------------------------------


def random_sphere_configuration(rng: np.random.Generator, n: int, m: int) -> SphereConfiguration:
    """Independent uniform unit vectors per pair (no membership conditions)."""
    u = {}
    for pair in itertools.combinations(range(1, n + 1), 2):
        raw = rng.standard_normal(m)
        u[pair] = unit(tuple(raw))
    return SphereConfiguration(m, n, u)


def random_point_configuration(rng: np.random.Generator, n: int, m: int,
                               min_sep: float = 1e-3) -> PointConfiguration:
    """n points uniform in the cube, resampled until pairwise separated."""
    while True:
        pts = rng.uniform(-1.0, 1.0, size=(n, m))
        ok = all(np.linalg.norm(pts[a] - pts[b]) >= min_sep
                 for a, b in itertools.combinations(range(n), 2))
        if ok:
            return PointConfiguration(m, [tuple(row) for row in pts])


def random_disk_configuration(rng: np.random.Generator, n: int, m: int) -> DiskConfiguration:
    """A valid disk configuration: random centers, radii shrunk to fit."""
    while True:
        pts = rng.uniform(-0.7, 0.7, size=(n, m))
        if np.linalg.norm(pts, axis=1).max() > 0.7:
            continue  # keep every center in the 0.7-ball so room stays positive
        sep = min((np.linalg.norm(pts[a] - pts[b])
                   for a, b in itertools.combinations(range(n), 2)),
                  default=math.inf)
        if sep < 1e-2:
            continue
        radii = []
        for k in range(n):
            room = 1.0 - float(np.linalg.norm(pts[k]))
            if n > 1:
                room = min(room, sep / 2.0)
            radii.append(room * float(rng.uniform(0.3, 0.95)))
        return DiskConfiguration(m, [tuple(row) for row in pts], radii)


# -- Monte Carlo trial batches -------------------------------------------------


def _trial_rng(seed: int, index: int) -> np.random.Generator:
    """Splittable per-trial stream: identical results in any execution order."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(index,)))


def _run_trials(trials: int, threads: int, one: Callable[[int], dict]) -> list[dict]:
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(one, range(trials)))
    return [one(k) for k in range(trials)]


def _aggregate_trials(name: str, outcomes: list[dict], extra: dict) -> dict:
    worst = max((o["max_residual"] for o in outcomes), default=0.0)
    failures = [o for o in outcomes if not o["passed"]]
    report = {"check": name, "trials": len(outcomes), "passed": not failures,
              "max_residual": worst, "failed_trials": len(failures)}
    report.update(extra)
    if failures:
        report["first_failure"] = failures[0]
    return report


def membership_trials(n: int, m: int, trials: int, seed: int = 0,
                      tol: float = DEFAULT_TOL, probes: int = 20,
                      threads: int = 1) -> dict:
    """Gauss-map images of random configurations pass both checks."""
    if n < 3:
        raise ValueError("membership trials need n >= 3")
    v, w = _probe_pairs(m, probes, seed)
    subsets = list(itertools.combinations(range(1, n + 1), 4))

    def one(k: int) -> dict:
        cfg = random_point_configuration(_trial_rng(seed, k), n, m)
        s = gauss_map(cfg)
        worst = check_three_dependent(s, tol)["max_residual"]
        if subsets:
            pair_index = {pair: idx for idx, pair in enumerate(s.pairs())}
            u_rows = np.array([s.u(i, j) for (i, j) in s.pairs()])
            worst = max(worst, float(
                _four_residuals(u_rows, pair_index, subsets, v, w).max()))
        return {"trial": k, "passed": worst <= tol, "max_residual": worst}

    return _aggregate_trials("membership-trials", _run_trials(trials, threads, one),
                             {"n": n, "m": m, "tol": tol, "seed": seed,
                              "probes": int(v.shape[0])})


def closure_trials(tree: RpTree, m: int, trials: int, seed: int = 0,
                   tol: float = DEFAULT_TOL, probes: int = 20,
                   threads: int = 1) -> dict:
    """Compositions of Gauss images along a tree still pass both checks."""
    internal = [p for p in tree.vertices() if not tree.is_leaf(p)]
    leaves = tree.leaf_count
    v, w = _probe_pairs(m, probes, seed)
    subsets = list(itertools.combinations(range(1, leaves + 1), 4))

    def one(k: int) -> dict:
        rng = _trial_rng(seed, k)
        inputs = {p: gauss_map(random_point_configuration(rng, len(tree.node_at(p)), m))
                  for p in internal}
        s = kontsevich_compose(tree, inputs)
        worst = 0.0
        if s.n >= 3:
            worst = check_three_dependent(s, tol)["max_residual"]
        if subsets:
            pair_index = {pair: idx for idx, pair in enumerate(s.pairs())}
            u_rows = np.array([s.u(i, j) for (i, j) in s.pairs()])
            worst = max(worst, float(
                _four_residuals(u_rows, pair_index, subsets, v, w).max()))
        return {"trial": k, "passed": worst <= tol, "max_residual": worst}

    return _aggregate_trials("closure-trials", _run_trials(trials, threads, one),
                             {"tree": tree.to_text(), "n": leaves, "m": m,
                              "tol": tol, "seed": seed, "probes": int(v.shape[0])})


# -- little disks --------------------------------------------------------------


def _two_level_slots(tree: RpTree) -> list[tuple[int, tuple | None, int]]:
    """Leaf descriptors (root slot e, child vertex path or None, slot o) in
    planar order, for a root-plus-one-level tree."""
    slots = []
    for c, child in enumerate(tree.root):
        if child == ():
            slots.append((c + 1, None, 0))
            continue
        for o, grand in enumerate(child):
            if grand != ():
                raise ValueError("tree is deeper than root-plus-one-level")
            slots.append((c + 1, (c,), o + 1))
    if not slots:
        raise ValueError("the empty tree has no disks to compose")
    return slots


def _disk_inputs(tree: RpTree, inputs: Mapping[tuple, DiskConfiguration]) -> int:
    internal = [p for p in tree.vertices() if not tree.is_leaf(p)]
    if set(inputs) != set(internal):
        raise ValueError(f"inputs must be keyed by the internal vertices {internal}")
    ms = {d.m for d in inputs.values()}
    if len(ms) != 1:
        raise ValueError(f"mixed ambient dimensions {sorted(ms)}")
    for p in internal:
        arity = len(tree.node_at(p))
        if inputs[p].n != arity:
            raise ValueError(f"vertex {p!r} has arity {arity}, "
                             f"input has {inputs[p].n} disks")
    return ms.pop()


def _homotopy_centers(tree: RpTree, inputs: Mapping[tuple, DiskConfiguration],
                      time: float) -> list[Vector]:
    root = inputs[()]
    centers = []
    for e, vpath, o in _two_level_slots(tree):
        x, r = root.centers[e - 1], root.radii[e - 1]
        if vpath is None:
            centers.append(x)
        else:
            child = inputs[vpath]
            y = child.centers[o - 1]
            centers.append(tuple(xc + time * r * yc for xc, yc in zip(x, y)))
    return centers


def disks_compose(t: RpTree, inputs: Mapping[tuple, DiskConfiguration],
                  tol: float = DEFAULT_TOL) -> DiskConfiguration:
    """y_j = x_{e(j)} + r_{e(j)} x'_{o(j)}, rho_j = r_{e(j)} r'_{o(j)};
    leaves directly under the root pass their root disk through."""
    m = _disk_inputs(t, inputs)
    root = inputs[()]
    centers = _homotopy_centers(t, inputs, 1.0)
    radii = []
    for e, vpath, o in _two_level_slots(t):
        r = root.radii[e - 1]
        radii.append(r if vpath is None else r * inputs[vpath].radii[o - 1])
    return DiskConfiguration(m, centers, radii, tol)


def disks_homotopy(t: RpTree, inputs: Mapping[tuple, DiskConfiguration],
                   time: float) -> SphereConfiguration:
    """Gauss map of the slid centers y_j(time) = x_{e(j)} + time r x'_{o(j)}.

    At time 1 this is gauss_map of the composed disks; as time -> 0 it
    converges to kontsevich_compose of the centerwise projections."""
    if not 0.0 < time <= 1.0:
        raise ValueError(f"time {time} outside (0, 1]")
    m = _disk_inputs(t, inputs)
    return gauss_map(PointConfiguration(m, _homotopy_centers(t, inputs, time)))


def disk_projection(d: DiskConfiguration) -> SphereConfiguration:
    """Forget radii, take the Gauss map of the centers."""
    return gauss_map(PointConfiguration(d.m, d.centers))


def sphere_distance(a: SphereConfiguration, b: SphereConfiguration) -> float:
    """Max over pairs of the euclidean distance between coordinates."""
    if (a.m, a.n) != (b.m, b.n):
        raise ValueError("configurations have different shapes")
    worst = 0.0
    for pair in a.pairs():
        worst = max(worst, norm(tuple(x - y for x, y in zip(a.u(*pair), b.u(*pair)))))
    return worst


def two_level_trees(max_leaves: int) -> list[RpTree]:
    """All root-plus-one-level shapes with at most max_leaves leaves."""
    out = []
    for k in range(1, max_leaves + 1):
        for pattern in itertools.product(range(max_leaves + 1), repeat=k):
            leaves = sum(1 if a == 0 else a for a in pattern)
            if leaves > max_leaves:
                continue
            out.append(RpTree(tuple(() if a == 0 else ((),) * a for a in pattern)))
    return out


def disks_comparison_trials(tree: RpTree, m: int, trials: int, seed: int = 0,
                            end_tol: float = 1e-12, limit_tol: float = LIMIT_TOL,
                            limit_time: float = LIMIT_TIME,
                            threads: int = 1) -> dict:
    """Both endpoint comparisons of the homotopy on random disk inputs:
    time 1 against gauss_map of the composition, time ~ 0 against the
    sphere-coordinate composition of the projected inputs."""
    internal = [p for p in tree.vertices() if not tree.is_leaf(p)]

    def one(k: int) -> dict:
        rng = _trial_rng(seed, k)
        inputs = {p: random_disk_configuration(rng, len(tree.node_at(p)), m)
                  for p in internal}
        end_gap = sphere_distance(disks_homotopy(tree, inputs, 1.0),
                                  disk_projection(disks_compose(tree, inputs)))
        limit_gap = sphere_distance(
            disks_homotopy(tree, inputs, limit_time),
            kontsevich_compose(tree, {p: disk_projection(d)
                                      for p, d in inputs.items()}))
        passed = end_gap <= end_tol and limit_gap <= limit_tol
        # the aggregate residual is the worse tolerance ratio (dimensionless)
        return {"trial": k, "passed": passed,
                "max_residual": max(end_gap / end_tol, limit_gap / limit_tol),
                "end_gap": end_gap, "limit_gap": limit_gap}

    outcomes = _run_trials(trials, threads, one)
    report = _aggregate_trials("disks-comparison", outcomes,
                               {"tree": tree.to_text(), "m": m, "seed": seed,
                                "end_tol": end_tol, "limit_tol": limit_tol,
                                "limit_time": limit_time})
    report["max_end_gap"] = max((o["end_gap"] for o in outcomes), default=0.0)
    report["max_limit_gap"] = max((o["limit_gap"] for o in outcomes), default=0.0)
    return report


# -- endpoint maps -------------------------------------------------------------


def _pole_distance(x: Vector, sign: float) -> float:
    pole = (0.0,) * (len(x) - 1) + (sign,)
    return norm(tuple(a - b for a, b in zip(x, pole)))


def _check_eps(eps: float) -> None:
    if not 0.0 < eps <= EPS_MAX:
        raise ValueError(f"eps must lie in (0, 1/6], got {eps}")


def lambda_map(x: Sequence[float], eps: float = DEFAULT_EPS) -> Vector:
    """Stretch the last coordinate near each endpoint: within distance eps of
    *_+ or *_-, the last coordinate a_m becomes eps a_m / d(a); elsewhere the
    map is the identity.  The two shells are disjoint because eps <= 1/6."""
    _check_eps(eps)
    v = tuple(float(c) for c in x)
    for sign in (-1.0, 1.0):  # lambda = lambda_+ after lambda_-
        d = _pole_distance(v, sign)
        if d == 0.0:
            raise ValueError("lambda_map is undefined at the marked endpoints")
        if d < eps:
            v = v[:-1] + (eps * v[-1] / d,)
    return v


def lambda_jacobian_factor(x: Sequence[float], eps: float = DEFAULT_EPS,
                           tol: float = DEFAULT_TOL) -> float:
    """The last-coordinate stretch rate of lambda at an on-axis point.

    Inside an endpoint shell the differential is diagonal only on the axis
    (all other coordinates zero), where it equals diag(1, .., 1, eps/d^2)
    with d the distance to that endpoint; off-axis shell points violate the
    boundary-collinearity precondition and are rejected."""
    _check_eps(eps)
    v = tuple(float(c) for c in x)
    for sign in (-1.0, 1.0):
        d = _pole_distance(v, sign)
        if d == 0.0:
            raise ValueError("no differential at the marked endpoints")
        if d < eps:
            if any(abs(c) > tol for c in v[:-1]):
                raise ValueError("point inside an endpoint shell is off-axis")
            return eps / (d * d)
    return 1.0


def project_pi_k(c: PointConfiguration, eps: float = DEFAULT_EPS) -> SphereConfiguration:
    """Forward directions of the lambda-stretched configuration.

    For i < j: u(lambda(x_j) - lambda(x_i)) when the points differ and no
    endpoint rule applies; *_S when x_i = *_+ or x_j = *_- (the knot leaves
    the top endpoint southward and arrives at the bottom one); for
    coincident pairs, the stored direction pushed through the differential
    of lambda (a positive rescale of the last coordinate, renormalized) —
    at an endpoint the rescale diverges and the limit keeps only the last
    coordinate's sign."""
    _check_eps(eps)
    m = c.m
    top, bottom = north(m), south(m)
    w = {}
    for i, j in itertools.combinations(range(1, c.n + 1), 2):
        xi, xj = c.points[i - 1], c.points[j - 1]
        if xi == xj:
            g = c.pair_directions.get((i, j))
            if g is None:
                raise ValueError(f"coincident pair ({i}, {j}) carries no direction")
            if xi == top or xi == bottom:
                if g[-1] == 0.0:
                    raise ValueError(f"degenerate direction for pair ({i}, {j}) "
                                     "at an endpoint")
                w[(i, j)] = (0.0,) * (m - 1) + (math.copysign(1.0, g[-1]),)
            else:
                factor = lambda_jacobian_factor(xi, eps)
                w[(i, j)] = unit(g[:-1] + (factor * g[-1],))
        elif xi == top or xj == bottom:
            w[(i, j)] = south(m)
        elif xj == top or xi == bottom:
            raise ValueError(f"pair ({i}, {j}) has an endpoint out of order: "
                             "*_+ may only lead and *_- only trail")
        else:
            yi, yj = lambda_map(xi, eps), lambda_map(xj, eps)
            w[(i, j)] = unit(tuple(a - b for a, b in zip(yj, yi)))
    return SphereConfiguration(m, c.n, w)


# -- insertion maps on boundary data ------------------------------------------


def insertion_e(c: PointConfiguration, i: int) -> PointConfiguration:
    """e^i doubles point i with new mutual direction *_S (1 <= i <= n); e^0
    and e^{n+1} plant a copy of the corresponding marked endpoint at the
    matching end of the configuration.  Indices relabel by sigma_i."""
    n, m = c.n, c.m
    if not 0 <= i <= n + 1:
        raise ValueError(f"insertion index {i} out of range for n={n}")
    base = south(m)
    if i == 0 or i == n + 1:
        endpoint = north(m) if i == 0 else south(m)
        at = 0 if i == 0 else n
        points = c.points[:at] + (endpoint,) + c.points[at:]
        tangents = None if c.tangents is None else \
            c.tangents[:at] + (base,) + c.tangents[at:]
        shift = (lambda a: a + 1) if i == 0 else (lambda a: a)
        dirs = {(shift(a), shift(b)): g for (a, b), g in c.pair_directions.items()}
        new_idx = 1 if i == 0 else n + 1
        for k, p in enumerate(points, start=1):
            if k != new_idx and p == endpoint:
                dirs[(min(k, new_idx), max(k, new_idx))] = base
        return PointConfiguration(m, points, tangents, dirs)
    points = c.points[:i] + (c.points[i - 1],) + c.points[i:]
    tangents = None if c.tangents is None else \
        c.tangents[:i] + (c.tangents[i - 1],) + c.tangents[i:]

    def h(a: int) -> int:
        return a if a <= i else a + 1

    dirs = {}
    for (a, b), g in c.pair_directions.items():
        dirs[(h(a), h(b))] = g
        if a == i:                       # the duplicate shares i's coincidences
            dirs[(i + 1, h(b))] = g
        if b == i:
            dirs[(a, i + 1)] = g
    dirs[(i, i + 1)] = base
    return PointConfiguration(m, points, tangents, dirs)


def delete_point(c: PointConfiguration, i: int) -> PointConfiguration:
    """Forget point i (1-based), relabeling the rest downward."""
    n = c.n
    if not 1 <= i <= n:
        raise ValueError(f"point index {i} out of range for n={n}")
    points = c.points[:i - 1] + c.points[i:]
    tangents = None if c.tangents is None else c.tangents[:i - 1] + c.tangents[i:]

    def g(a: int) -> int:
        return a if a < i else a - 1

    dirs = {(g(a), g(b)): v for (a, b), v in c.pair_directions.items()
            if a != i and b != i}
    return PointConfiguration(c.m, points, tangents, dirs)


def random_boundary_configuration(rng: np.random.Generator, n: int, m: int,
                                  eps: float = DEFAULT_EPS) -> PointConfiguration:
    """A valid pi_k input hitting all the map's cases: optional leading *_+
    and trailing *_- copies, interior points clear of the endpoint shells,
    an occasional coincident interior pair with a stored direction, and an
    occasional on-axis shell point exercising the Jacobian rescale."""
    top, bottom = north(m), south(m)
    lead = int(rng.integers(0, 2)) if n >= 2 else 0
    trail = int(rng.integers(0, 2)) if n - lead >= 2 else 0
    k = n - lead - trail
    pts: list[Vector] = []
    while len(pts) < k:
        cand = tuple(rng.uniform(-1.0, 1.0, size=m))
        if (_pole_distance(cand, 1.0) < eps * 1.5
                or _pole_distance(cand, -1.0) < eps * 1.5):
            continue
        if any(norm(tuple(a - b for a, b in zip(cand, p))) < 1e-3 for p in pts):
            continue
        pts.append(cand)
    dirs = {}
    if k >= 2 and rng.random() < 0.5:
        # duplicate one interior point; the pair needs a direction
        which = int(rng.integers(0, k - 1))
        pts[which + 1] = pts[which]
        dirs[(lead + which + 1, lead + which + 2)] = unit(tuple(rng.standard_normal(m)))
    elif k >= 1 and rng.random() < 0.3:
        # an on-axis near-endpoint coincident pair takes the rescale path
        sign = 1.0 if rng.random() < 0.5 else -1.0
        axis = (0.0,) * (m - 1) + (sign * (1.0 - eps / 2.0),)
        pts[0] = axis
        if k >= 2:
            pts[1] = axis
            dirs[(lead + 1, lead + 2)] = unit(tuple(rng.standard_normal(m)))
    points = (top,) * lead + tuple(pts) + (bottom,) * trail
    for a in range(1, lead + 1):
        for b in range(a + 1, lead + 1):
            dirs[(a, b)] = south(m)
    for a in range(n - trail + 1, n + 1):
        for b in range(a + 1, n + 1):
            dirs[(a, b)] = south(m)
    tangents = tuple(unit(tuple(rng.standard_normal(m))) for _ in range(n))
    return PointConfiguration(m, points, tangents, dirs)


def check_insertion_naturality(n: int, m: int, trials: int, seed: int = 0,
                               eps: float = DEFAULT_EPS) -> CheckReport:
    """pi_k(e^i(c)) == d^i(pi_k(c)), exactly, for 0 <= i <= n+1."""
    rep = CheckReport(f"insertion-naturality[n={n},m={m}]")
    for k in range(trials):
        c = random_boundary_configuration(_trial_rng(seed, k), n, m, eps)
        base = project_pi_k(c, eps)
        for i in range(n + 2):
            lhs = project_pi_k(insertion_e(c, i), eps)
            rhs = kontsevich_coface(base, i)
            rep.record(lhs == rhs, None if lhs == rhs else
                       {"trial": k, "index": i, "config": c.to_json_obj()})
    return rep


# -- long knots ----------------------------------------------------------------


class LongUnknot:
    """The straight descending arc from *_+ to *_- with southward tangents."""

    def __init__(self, m: int = 3):
        if m < 2:
            raise ValueError("long knots need m >= 2")
        self.m = m

    def value(self, t: float) -> Vector:
        return (0.0,) * (self.m - 1) + (-float(t),)

    def derivative(self, t: float) -> Vector:
        return south(self.m)


class LongTrefoil:
    """A smooth long trefoil in the 3-cube: the closed (2,3) torus-knot curve
    scaled into the cube and faded by the window (1-t^2)^3 into the straight
    descending arc, so the endpoints and endpoint tangents match *_+-."""

    m = 3

    @staticmethod
    def _window(t: float) -> tuple[float, float]:
        s = 1.0 - t * t
        return s ** 3, -6.0 * t * s * s

    @staticmethod
    def _loop(t: float) -> tuple[Vector, Vector]:
        th = math.pi * t
        g = ((math.sin(th) + 2.0 * math.sin(2.0 * th)) / 4.0,
             (math.cos(th) - 2.0 * math.cos(2.0 * th)) / 4.0,
             -math.sin(3.0 * th) / 4.0)
        dg = (math.pi * (math.cos(th) + 4.0 * math.cos(2.0 * th)) / 4.0,
              math.pi * (-math.sin(th) + 4.0 * math.sin(2.0 * th)) / 4.0,
              -3.0 * math.pi * math.cos(3.0 * th) / 4.0)
        return g, dg

    def value(self, t: float) -> Vector:
        w, _ = self._window(t)
        g, _ = self._loop(t)
        return (w * g[0], w * g[1], -t + w * g[2])

    def derivative(self, t: float) -> Vector:
        w, dw = self._window(t)
        g, dg = self._loop(t)
        return (dw * g[0] + w * dg[0],
                dw * g[1] + w * dg[1],
                -1.0 + dw * g[2] + w * dg[2])


BUILTIN_CURVES = {"unknot": LongUnknot, "trefoil": LongTrefoil}


def knot_eval(curve, times: Sequence[float]) -> PointConfiguration:
    """Evaluate a sampled long knot: points f(t_i) with tangents u(f'(t_i));
    repeated times give coincident points whose pair direction is the
    tangent there (the diagonal extension)."""
    ts = [float(t) for t in times]
    if any(not -1.0 <= t <= 1.0 for t in ts):
        raise ValueError("times must lie in [-1, 1]")
    if any(a > b for a, b in zip(ts, ts[1:])):
        raise ValueError("times must be weakly increasing")
    points, tangents = [], []
    for t in ts:
        d = tuple(float(c) for c in curve.derivative(t))
        if not any(d):
            raise ValueError(f"zero derivative at t={t}")
        points.append(tuple(float(c) for c in curve.value(t)))
        tangents.append(unit(d))
    m = len(points[0]) if points else getattr(curve, "m", 3)
    dirs = {}
    for a, b in itertools.combinations(range(len(ts)), 2):
        if ts[a] == ts[b]:
            dirs[(a + 1, b + 1)] = tangents[a]
    return PointConfiguration(m, points, tangents, dirs)

"""Exact cochain complexes over the bracket-operad levels.

C^{p,q} is the degree-q slice of the arity-p entries, and the differential
is the alternating coface sum d = sum_{i=0}^{p+1} (-1)^i d^i -- the index
range under which the complex squares to zero.  All linear algebra is
exact: fraction-free elimination for ranks, Smith normal form with
transformation certificates for torsion.
"""

from __future__ import annotations

import csv
import io
import time
from dataclasses import dataclass, field

from . import poisson
from .errors import BoundExceededError
from .operad_core import CheckReport

#: levels above this need an explicit opt-in (basis sizes grow like p!)
MAX_LEVEL_BOUND = 7


# -- sparse integer matrices ------------------------------------------------------


class IntMatrix:
    """Column-sparse exact integer matrix; column c is a {row: value} dict."""

    def __init__(self, rows: int, cols: int):
        self.rows = rows
        self.cols = cols
        self.col: list[dict[int, int]] = [{} for _ in range(cols)]

    def set(self, r: int, c: int, v: int) -> None:
        if not (0 <= r < self.rows and 0 <= c < self.cols):
            raise IndexError((r, c))
        if v:
            self.col[c][r] = v
        else:
            self.col[c].pop(r, None)

    def compose(self, other: "IntMatrix") -> "IntMatrix":
        """Matrix product self @ other (other applied first)."""
        if self.cols != other.rows:
            raise ValueError(f"shape mismatch: {self.cols} != {other.rows}")
        out = IntMatrix(self.rows, other.cols)
        for c, vec in enumerate(other.col):
            acc: dict[int, int] = {}
            for mid, v in vec.items():
                for r, w in self.col[mid].items():
                    acc[r] = acc.get(r, 0) + v * w
            out.col[c] = {r: v for r, v in acc.items() if v}
        return out

    def is_zero(self) -> bool:
        return all(not c for c in self.col)

    def to_dense(self) -> list[list[int]]:
        dense = [[0] * self.cols for _ in range(self.rows)]
        for c, vec in enumerate(self.col):
            for r, v in vec.items():
                dense[r][c] = v
        return dense

    def column(self, c: int) -> list[int]:
        vec = [0] * self.rows
        for r, v in self.col[c].items():
            vec[r] = v
        return vec


def matmul_int(a: list[list[int]], b: list[list[int]]) -> list[list[int]]:
    bw = len(b[0]) if b else 0
    out = [[0] * bw for _ in a]
    for i, arow in enumerate(a):
        orow = out[i]
        for k, v in enumerate(arow):
            if v:
                brow = b[k]
                for j in range(bw):
                    orow[j] += v * brow[j]
    return out


def _identity(k: int) -> list[list[int]]:
    return [[int(i == j) for j in range(k)] for i in range(k)]


def rank_int(dense: list[list[int]]) -> int:
    """Rank over the rationals by fraction-free (Bareiss) elimination."""
    m = [row[:] for row in dense]
    nr = len(m)
    nc = len(m[0]) if m else 0
    rank, prev = 0, 1
    for c in range(nc):
        piv = next((r for r in range(rank, nr) if m[r][c]), None)
        if piv is None:
            continue
        m[rank], m[piv] = m[piv], m[rank]
        p = m[rank][c]
        top = m[rank]
        for r in range(rank + 1, nr):
            row, head = m[r], m[r][c]
            for j in range(c + 1, nc):
                row[j] = (row[j] * p - head * top[j]) // prev
            row[c] = 0
        prev = p
        rank += 1
        if rank == nr:
            break
    return rank


# -- Smith normal form -------------------------------------------------------------


@dataclass(frozen=True)
class SmithForm:
    """Invariant factors with full transformation certificates.

    U @ A @ V is diagonal with ``factors`` on the diagonal (then zeros);
    Uinv and Vinv witness unimodularity by exact multiplication.
    """

    factors: tuple[int, ...]
    U: tuple[tuple[int, ...], ...]
    V: tuple[tuple[int, ...], ...]
    Uinv: tuple[tuple[int, ...], ...]
    Vinv: tuple[tuple[int, ...], ...]


def smith_normal_form(dense: list[list[int]]) -> SmithForm:
    """Diagonalize an integer matrix by unimodular row/column operations.

    Pivots are chosen smallest-in-magnitude; a pivot is only finalized once
    it divides every entry of the remaining submatrix, so the diagonal comes
    out in divisibility order d1 | d2 | ...
    """
    a = [list(map(int, row)) for row in dense]
    nr = len(a)
    nc = len(a[0]) if a else 0
    if any(len(row) != nc for row in a):
        raise ValueError("ragged matrix")
    U, Uinv = _identity(nr), _identity(nr)
    V, Vinv = _identity(nc), _identity(nc)
    t = 0
    while True:
        piv = None
        best = None
        for i in range(t, nr):
            for j in range(t, nc):
                v = abs(a[i][j])
                if v and (best is None or v < best):
                    piv, best = (i, j), v
        if piv is None:
            break
        i, j = piv
        if i != t:
            a[t], a[i] = a[i], a[t]
            U[t], U[i] = U[i], U[t]
            for row in Uinv:
                row[t], row[i] = row[i], row[t]
        if j != t:
            for row in a:
                row[t], row[j] = row[j], row[t]
            for row in V:
                row[t], row[j] = row[j], row[t]
            Vinv[t], Vinv[j] = Vinv[j], Vinv[t]
        if a[t][t] < 0:
            a[t] = [-x for x in a[t]]
            U[t] = [-x for x in U[t]]
            for row in Uinv:
                row[t] = -row[t]
        p = a[t][t]
        dirty = False
        for r in range(t + 1, nr):
            if a[r][t]:
                q = a[r][t] // p
                if q:
                    a[r] = [x - q * y for x, y in zip(a[r], a[t])]
                    U[r] = [x - q * y for x, y in zip(U[r], U[t])]
                    for row in Uinv:
                        row[t] += q * row[r]
                if a[r][t]:
                    dirty = True
        for c in range(t + 1, nc):
            if a[t][c]:
                q = a[t][c] // p
                if q:
                    for row in a:
                        row[c] -= q * row[t]
                    for row in V:
                        row[c] -= q * row[t]
                    Vinv[t] = [x + q * y for x, y in zip(Vinv[t], Vinv[c])]
                if a[t][c]:
                    dirty = True
        if dirty:
            continue  # a remainder became the new smallest entry
        off = next((i2 for i2 in range(t + 1, nr)
                    for j2 in range(t + 1, nc) if a[i2][j2] % p), None)
        if off is not None:
            # pull a non-divisible entry into the pivot row and repeat
            a[t] = [x + y for x, y in zip(a[t], a[off])]
            U[t] = [x + y for x, y in zip(U[t], U[off])]
            for row in Uinv:
                row[off] -= row[t]
            continue
        t += 1
    factors = tuple(a[k][k] for k in range(min(nr, nc)) if a[k][k])

    def frz(m):
        return tuple(tuple(row) for row in m)

    return SmithForm(factors, frz(U), frz(V), frz(Uinv), frz(Vinv))


def snf_is_valid(dense: list[list[int]], s: SmithForm) -> bool:
    """Exact certificate check: U A V diagonal, inverses multiply to I,
    factors positive in a divisibility chain."""
    nr = len(dense)
    nc = len(dense[0]) if dense else 0
    U, V = [list(r) for r in s.U], [list(r) for r in s.V]
    Uinv, Vinv = [list(r) for r in s.Uinv], [list(r) for r in s.Vinv]
    if matmul_int(U, Uinv) != _identity(nr):
        return False
    if matmul_int(V, Vinv) != _identity(nc):
        return False
    d = matmul_int(matmul_int(U, [list(r) for r in dense]), V) if nr and nc \
        else [[0] * nc for _ in range(nr)]
    want = [[0] * nc for _ in range(nr)]
    for k, f in enumerate(s.factors):
        want[k][k] = f
    if d != want:
        return False
    if any(f <= 0 for f in s.factors):
        return False
    return all(b % a == 0 for a, b in zip(s.factors, s.factors[1:]))


# -- the cochain complex -----------------------------------------------------------


@dataclass
class CochainComplex:
    """Bigraded integer cochain complex.

    ``basis[(p, q)]`` is the ordered monomial basis of C^{p,q} and
    ``diff[(p, q)]`` the matrix of d: C^{p,q} -> C^{p+1,q} over it.  The
    differential dict covers every populated slice with p < max_p.
    """

    n: int
    max_p: int
    normalized: bool
    basis: dict = field(repr=False)
    diff: dict = field(repr=False)

    def dim(self, p: int, q: int) -> int:
        return len(self.basis.get((p, q), ()))

    def q_values(self, p: int) -> list[int]:
        return sorted(q for (pp, q) in self.basis if pp == p)

    def bidegrees(self) -> list[tuple[int, int]]:
        return sorted(self.basis)


def _level_monomials(n: int, p: int, normalized: bool):
    if not normalized:
        return list(poisson.basis(n, p))
    _assert_codegeneracy_kernel_structure(n, p)
    return [m for m in poisson.basis(n, p)
            if not any(len(w) == 1 for w in m)]


def _assert_codegeneracy_kernel_structure(n: int, p: int) -> None:
    """Justify reading the exact kernel of all codegeneracies off monomials.

    Each s^i must send every basis monomial to zero or to a single monomial
    with coefficient one, injectively on the nonzero part.  Under that
    structure a combination lies in every kernel iff it is supported on
    monomials killed by every s^i, so the intersection is computed exactly.
    """
    for i in range(1, p + 1):
        seen = set()
        for m in poisson.basis(n, p):
            img = poisson.codegeneracy(i, poisson.monomial_element(n, p, m))
            if img.is_zero():
                continue
            (tm, cv), = img.terms.items()
            if cv != 1 or tm in seen:
                raise AssertionError(f"codegeneracy {i} at p={p} is not a "
                                     "partial bijection on monomials")
            seen.add(tm)


def build_complex(n: int, max_p: int, normalized: bool = True,
                  level_bound: int = MAX_LEVEL_BOUND) -> CochainComplex:
    """Assemble bases and differentials for levels p <= max_p.

    Normalized slices keep only monomials in the kernel of every
    codegeneracy (no single-variable block); the restricted differential is
    checked to land back in that span.
    """
    if max_p < 0:
        raise ValueError("max_p must be non-negative")
    if max_p > level_bound:
        raise BoundExceededError(
            f"max_p={max_p} exceeds the level bound {level_bound}")
    basis: dict = {}
    for p in range(max_p + 1):
        for m in _level_monomials(n, p, normalized):
            q = poisson.monomial_degree(m, n)
            basis.setdefault((p, q), []).append(m)
    diff: dict = {}
    for p in range(max_p):
        idx = {q: {m: i for i, m in enumerate(mons)}
               for (pp, q), mons in basis.items() if pp == p + 1}
        for (pp, q), mons in basis.items():
            if pp != p:
                continue
            mat = IntMatrix(len(basis.get((p + 1, q), ())), len(mons))
            tmap = idx.get(q, {})
            for j, m in enumerate(mons):
                e = poisson.monomial_element(n, p, m)
                total = poisson.zero(n, p + 1)
                for i in range(p + 2):
                    img = poisson.coface(i, e)
                    total = total.add(img if i % 2 == 0 else img.scale(-1))
                for tm, cv in total.terms.items():
                    if poisson.monomial_degree(tm, n) != q:
                        raise AssertionError("coface changed the degree")
                    if cv.denominator != 1:
                        raise AssertionError("non-integer differential entry")
                    if tm not in tmap:
                        if normalized:
                            raise ValueError(
                                "differential leaves the normalized span at "
                                f"p={p}, q={q}")
                        raise AssertionError("target monomial missing")
                    mat.set(tmap[tm], j, int(cv))
            diff[(p, q)] = mat
    return CochainComplex(n, max_p, normalized, basis, diff)


def check_d_squared(c: CochainComplex) -> CheckReport:
    """Exact verification that consecutive differentials compose to zero."""
    tag = "normalized" if c.normalized else "full"
    rep = CheckReport(f"d-squared[{tag},n={c.n}]<={c.max_p}")
    for (p, q), mat in sorted(c.diff.items()):
        nxt = c.diff.get((p + 1, q))
        if nxt is None:
            continue  # empty or out-of-range target level
        comp = nxt.compose(mat)
        ok = comp.is_zero()
        witness = None
        if not ok:
            cc = next(i for i, col in enumerate(comp.col) if col)
            r, v = next(iter(comp.col[cc].items()))
            witness = {"p": p, "q": q, "row": r, "col": cc, "value": v}
        rep.record(ok, witness)
    return rep


# -- cohomology -------------------------------------------------------------------


def _outgoing(c: CochainComplex, p: int, q: int) -> IntMatrix:
    mat = c.diff.get((p, q))
    if mat is None:
        mat = IntMatrix(c.dim(p + 1, q), c.dim(p, q))
    return mat


def cohomology(c: CochainComplex, p: int, q: int,
               coefficients: str = "rational"):
    """Rank of HH^{p,q}; with integral coefficients also the torsion factors.

    Returns an int for rational coefficients and (rank, torsion-tuple) for
    integral ones.  Needs both adjacent differentials, so p < max_p.
    """
    if not 0 <= p < c.max_p:
        raise ValueError(f"bidegree p={p} outside built range "
                         f"0..{c.max_p - 1}")
    if coefficients == "rational":
        dim = c.dim(p, q)
        if dim == 0:
            return 0
        rank_out = rank_int(_outgoing(c, p, q).to_dense())
        d_in = c.diff.get((p - 1, q)) if p else None
        rank_in = rank_int(d_in.to_dense()) if d_in is not None else 0
        return dim - rank_out - rank_in
    if coefficients == "integral":
        return _integral_cohomology(c, p, q)
    raise ValueError(f"unknown coefficients {coefficients!r}")


def _integral_cohomology(c: CochainComplex, p: int, q: int):
    """Kernel-lattice method: kernel basis from the outgoing Smith form,
    incoming images rewritten in that basis, torsion from a second Smith
    form.  The kernel of an integer matrix is saturated, so the invariant
    factors > 1 are exactly the torsion of ker/im."""
    k = c.dim(p, q)
    if k == 0:
        return 0, ()
    d_out = _outgoing(c, p, q)
    if d_out.rows == 0:
        kdim = k
        kernel_coords = None  # kernel is the whole lattice, coords are raw
    else:
        s = smith_normal_form(d_out.to_dense())
        if not snf_is_valid(d_out.to_dense(), s):
            raise AssertionError("invalid Smith certificates for d_out")
        r = len(s.factors)
        kdim = k - r
        kernel_coords = (s.Vinv, r)
    d_in = c.diff.get((p - 1, q)) if p else None
    gens = [d_in.column(j) for j in range(d_in.cols)] if d_in is not None \
        else []
    if not gens or kdim == 0:
        return kdim, ()
    if kernel_coords is None:
        rows = [[w[i] for w in gens] for i in range(k)]
    else:
        vinv, r = kernel_coords
        cols = []
        for w in gens:
            x = [sum(vinv[i][j] * w[j] for j in range(k)) for i in range(k)]
            if any(x[:r]):
                raise AssertionError("incoming image is not a cocycle")
            cols.append(x[r:])
        rows = [[col[i] for col in cols] for i in range(kdim)]
    s2 = smith_normal_form(rows)
    if not snf_is_valid(rows, s2):
        raise AssertionError("invalid Smith certificates for the image")
    rank = kdim - len(s2.factors)
    torsion = tuple(f for f in s2.factors if f != 1)
    return rank, torsion


# -- tables -----------------------------------------------------------------------


@dataclass(frozen=True)
class HHEntry:
    p: int
    q: int
    dim: int
    rank: int
    torsion: tuple | None
    seconds: float

    def __post_init__(self):
        if self.rank < 0:
            raise ValueError("negative rank")
        if self.torsion is not None:
            chain = all(b % a == 0
                        for a, b in zip(self.torsion, self.torsion[1:]))
            if not chain or any(f < 2 for f in self.torsion):
                raise ValueError(f"bad torsion chain {self.torsion}")


@dataclass
class CohomologyTable:
    n: int
    max_p: int
    normalized: bool
    coefficients: str
    entries: list

    def entry(self, p: int, q: int):
        return next((e for e in self.entries if (e.p, e.q) == (p, q)), None)

    def to_json_obj(self, timings: bool = False) -> dict:
        out = []
        for e in sorted(self.entries, key=lambda e: (e.p, e.q)):
            rec = {"p": e.p, "q": e.q, "dim": e.dim, "rank": e.rank}
            if e.torsion is not None:
                rec["torsion"] = list(e.torsion)
            if timings:
                rec["seconds"] = round(e.seconds, 6)
            out.append(rec)
        return {"n": self.n, "max_p": self.max_p,
                "normalized": self.normalized,
                "coefficients": self.coefficients, "entries": out}

    def to_csv(self) -> str:
        """Rows are q, columns p; cells are rank or rank;f1,f2,..."""
        buf = io.StringIO()
        writer = csv.writer(buf)
        ps = list(range(self.max_p))
        writer.writerow(["q\\p"] + ps)
        cells = {(e.p, e.q): e for e in self.entries}
        for q in sorted({e.q for e in self.entries}):
            row = [q]
            for p in ps:
                e = cells.get((p, q))
                if e is None:
                    row.append("")
                elif e.torsion:
                    row.append(f"{e.rank};{','.join(map(str, e.torsion))}")
                else:
                    row.append(str(e.rank))
            writer.writerow(row)
        return buf.getvalue()


def hh_table(n: int, max_p: int, coefficients: str = "rational",
             normalized: bool = True,
             level_bound: int = MAX_LEVEL_BOUND) -> CohomologyTable:
    """Cohomology over every computable interior bidegree p < max_p."""
    if max_p < 2:
        raise ValueError("max_p must be at least 2")
    c = build_complex(n, max_p, normalized, level_bound)
    entries = []
    for p in range(max_p):
        for q in c.q_values(p):
            t0 = time.perf_counter()
            if coefficients == "integral":
                rank, tors = cohomology(c, p, q, "integral")
            else:
                rank, tors = cohomology(c, p, q, coefficients), None
            entries.append(HHEntry(p, q, c.dim(p, q), rank, tors,
                                   time.perf_counter() - t0))
    return CohomologyTable(n, max_p, normalized, coefficients, entries)

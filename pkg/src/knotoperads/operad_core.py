"""Non-symmetric operads over rooted planar trees.

An operad instance assigns a finite element list to each arity, a partial
composition ``circ(x, i, y)`` plugging y into the i-th slot of x (slots are
1-based), a unit in arity 1, and optionally a multiplication in arity 2.
Structure maps for arbitrary contraction morphisms are assembled from circ.

An operad with multiplication yields a cosimplicial object: level n is the
arity-n entry, cofaces insert the multiplication, codegeneracies contract a
leaf.  Some operads live in the opposite category of finite pointed sets;
their structure maps are stored as honest functions in the target-to-source
direction and flagged with ``direction = "backward"``.  The one place the
resulting composition reversal is applied is :func:`_composite_table`.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable

from .trees import RpTree, TreeMorphism, contract_with_map, corolla

Arrow = Callable


@dataclass
class CheckReport:
    """Outcome of an exhaustive property check."""

    name: str
    checks: int = 0
    failures: list = field(default_factory=list)
    max_failures: int = 20

    @property
    def passed(self) -> bool:
        return not self.failures

    def record(self, ok: bool, witness=None) -> None:
        self.checks += 1
        if not ok and len(self.failures) < self.max_failures:
            self.failures.append(witness)

    def merge(self, other: "CheckReport") -> None:
        self.checks += other.checks
        self.failures.extend(other.failures[: self.max_failures - len(self.failures)])

    def to_json_obj(self) -> dict:
        return {
            "name": self.name,
            "passed": self.passed,
            "checks": self.checks,
            "failures": [repr(w) if not isinstance(w, (dict, str)) else w
                         for w in self.failures],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_obj(), sort_keys=True)

    def summary(self) -> str:
        state = "PASS" if self.passed else "FAIL"
        return f"{state} {self.name} ({self.checks} checks, {len(self.failures)} failures)"


class OperadInstance:
    """Duck-typed operad interface.

    Subclasses provide ``entry``, ``arity_of``, ``circ``, ``unit`` and, when
    a multiplication exists, ``multiplication``.  ``codegeneracy(i, x)``
    contracts the i-th leaf (1-based) and is only needed for the
    cosimplicial object.  Backward (opposite-category) operads skip ``circ``
    and instead provide ``coface_fn``/``codegeneracy_fn`` lookup tables.
    """

    name = "operad"
    direction = "forward"

    def entry(self, n: int) -> list:
        raise NotImplementedError

    def arity_of(self, x) -> int:
        raise NotImplementedError

    def circ(self, x, i: int, y):
        raise NotImplementedError

    def unit(self):
        raise NotImplementedError

    def multiplication(self):
        return None

    def degree(self, x) -> int:
        """Homogeneous degree of an element; 0 when there is no grading.

        Graded operads must override this: the interchange of compositions
        at disjoint slots transposes the two inserted elements, which costs
        a sign when both are odd."""
        return 0

    def codegeneracy(self, i: int, x):
        raise NotImplementedError


class AssociativeOperad(OperadInstance):
    """The associative operad: one element per arity, encoded by the arity."""

    name = "associative"

    def entry(self, n: int) -> list:
        return [n]

    def arity_of(self, x: int) -> int:
        return x

    def circ(self, x: int, i: int, y: int) -> int:
        if not 1 <= i <= x:
            raise ValueError(f"slot {i} out of range for arity {x}")
        return x + y - 1

    def unit(self) -> int:
        return 1

    def multiplication(self) -> int:
        return 2

    def codegeneracy(self, i: int, x: int) -> int:
        if not 1 <= i <= x:
            raise ValueError(f"leaf {i} out of range for arity {x}")
        return x - 1


# -- structure maps ----------------------------------------------------------


def structure_map(op: OperadInstance, m, elements: dict):
    """Evaluate the structure map of a full contraction onto a corolla.

    ``m`` is the contraction morphism (or just its source tree; the target
    must be the corolla either way).  ``elements`` assigns an operad element
    to every non-leaf vertex path.  Children are plugged in rightmost-first
    so remaining slot indices never shift.
    """
    if isinstance(m, TreeMorphism):
        tree = m.source
        if m.target != corolla(tree.leaf_count):
            raise ValueError("structure_map needs a morphism onto a corolla")
    else:
        tree = m

    def value(vpath):
        node = tree.node_at(vpath)
        x = elements[vpath]
        if op.arity_of(x) != len(node):
            raise ValueError(
                f"element at {vpath!r} has arity {op.arity_of(x)}, vertex has {len(node)}")
        for idx in reversed(range(len(node))):
            if node[idx] != ():
                x = op.circ(x, idx + 1, value(vpath + (idx,)))
        return x

    return value(())


def structure_map_stepwise(op: OperadInstance, tree: RpTree, elements: dict,
                           edge_order: list):
    """Evaluate the same structure map by contracting one internal edge at a
    time in the given order.  Must agree with :func:`structure_map` for every
    order (operad axioms 4)."""
    if sorted(edge_order) != sorted(tree.internal_edges()):
        raise ValueError("edge_order must list every internal edge exactly once")
    t = tree
    elems = dict(elements)
    pending = list(edge_order)
    while pending:
        e = pending.pop(0)
        parent, slot = e[:-1], e[-1] + 1
        merged = op.circ(elems[parent], slot, elems[e])
        t2, m = contract_with_map(t, [e])
        new_elems = {}
        for v in t.vertices():
            if v == e:
                continue
            new_elems[m[v]] = merged if v == parent else elems[v]
        t, elems = t2, new_elems
        pending = [m[x] for x in pending]
    return elems[()]


# -- cosimplicial objects ------------------------------------------------------


@dataclass
class CosimplicialObject:
    """Levels plus coface and codegeneracy maps.

    coface(n, i): level n -> n+1, for 0 <= i <= n+1.
    codegeneracy(n, i): level n -> n-1, for 1 <= i <= n (contracts leaf i).

    With ``direction == "backward"`` the callables are the arrows' underlying
    functions written target-to-source (the object lives in the opposite
    category of finite pointed sets).
    """

    level_elements: Callable[[int], list]
    coface: Callable[[int, int], Arrow]
    codegeneracy: Callable[[int, int], Arrow]
    direction: str = "forward"


def cosimplicial_from_operad(op: OperadInstance) -> CosimplicialObject:
    """The cosimplicial object of an operad with multiplication.

    d0(x) = mu o_2 x, di(x) = x o_i mu for 0 < i < n+1, d(n+1)(x) = mu o_1 x.
    Codegeneracies are the operad's own leaf contractions.
    """
    if hasattr(op, "coface_fn"):
        return CosimplicialObject(
            level_elements=op.entry,
            coface=lambda n, i: op.coface_fn(n, i).__getitem__,
            codegeneracy=lambda n, i: op.codegeneracy_fn(n, i).__getitem__,
            direction="backward",
        )
    mu = op.multiplication()
    if mu is None:
        raise ValueError(f"operad {op.name!r} has no multiplication")

    def coface(n: int, i: int) -> Arrow:
        if i == 0:
            return lambda x: op.circ(mu, 2, x)
        if i == n + 1:
            return lambda x: op.circ(mu, 1, x)
        if 0 < i < n + 1:
            return lambda x: op.circ(x, i, mu)
        raise ValueError(f"coface index {i} out of range at level {n}")

    def codegeneracy(n: int, i: int) -> Arrow:
        if not 1 <= i <= n:
            raise ValueError(f"codegeneracy index {i} out of range at level {n}")
        return lambda x: op.codegeneracy(i, x)

    return CosimplicialObject(op.entry, coface, codegeneracy)


# ordinal maps underlying the arrows, as image tuples on {0..n}

def _delta(n: int, i: int) -> tuple:
    """The injection [n] -> [n+1] missing i."""
    return tuple(m if m < i else m + 1 for m in range(n + 1))


def _sigma(n: int, i: int) -> tuple:
    """The surjection [n] -> [n-1] repeating i-1 (1-based leaf index i)."""
    return tuple(m if m <= i - 1 else m - 1 for m in range(n + 1))


def _arrows_from(c: CosimplicialObject, n: int, max_level: int):
    """All single cofaces/codegeneracies out of level n, staying in bounds."""
    if n + 1 <= max_level:
        for i in range(n + 2):
            yield (f"d^{i}", n + 1, _delta(n, i), c.coface(n, i))
    if n >= 1:
        for i in range(1, n + 1):
            yield (f"s^{i}", n - 1, _sigma(n, i), c.codegeneracy(n, i))


def _composite_table(c: CosimplicialObject, start: int, end: int,
                     f1: Arrow, f2: Arrow) -> list:
    """Tabulate the two-step composite arrow start -> mid -> end.

    Outputs are aligned with the keying level's element order, so elements
    need not be hashable.  This is the single point handling
    opposite-category composition: for a backward object the stored
    functions compose in reversed order, and the table runs over end-level
    elements.
    """
    if c.direction == "backward":
        return [f1(f2(y)) for y in c.level_elements(end)]
    return [f2(f1(x)) for x in c.level_elements(start)]


def check_cosimplicial_identities(c: CosimplicialObject,
                                  max_level: int) -> CheckReport:
    """Verify all cosimplicial identities on levels <= max_level.

    Two-step composites are grouped by their underlying ordinal map; all
    composites over the same ordinal map must tabulate identically, and
    identity ordinal maps must tabulate as the identity.  This covers the
    coface/coface, codegeneracy/codegeneracy, and mixed identities at once.
    """
    rep = CheckReport(f"cosimplicial-identities<={max_level}")
    groups: dict[tuple, list] = {}
    for n in range(max_level + 1):
        for lab1, mid, ord1, f1 in _arrows_from(c, n, max_level):
            for lab2, end, ord2, f2 in _arrows_from(c, mid, max_level):
                ordc = tuple(ord2[v] for v in ord1)
                table = _composite_table(c, n, end, f1, f2)
                groups.setdefault((n, end, ordc), []).append(
                    (f"{lab2} {lab1}", table))
    for (n, end, ordc), items in groups.items():
        key_level = end if c.direction == "backward" else n
        inputs = list(c.level_elements(key_level))
        label0, table0 = items[0]
        for label, table in items[1:]:
            same = table == table0
            rep.record(same, None if same else {
                "level": n, "maps": [label0, label],
                "witness": _first_diff(inputs, table0, table)})
        if n == end and ordc == tuple(range(n + 1)):
            for label, table in items:
                ok = table == inputs
                rep.record(ok, None if ok else {
                    "level": n, "maps": [label, "identity"],
                    "witness": _first_diff(inputs, inputs, table)})
    return rep


def _first_diff(inputs: list, t0: list, t1: list):
    for x, a, b in zip(inputs, t0, t1):
        if a != b:
            return {"input": repr(x), "got": repr(b), "want": repr(a)}
    return None


# -- operad axiom checking -------------------------------------------------------


def check_operad_axioms(op: OperadInstance, max_arity: int) -> CheckReport:
    """Exhaustive unit/associativity/interchange check over entry bases.

    Unit laws run for every arity <= max_arity.  The two composition
    relations run over basis triples of positive arities whose composite
    arity p+q+r-2 stays within max_arity.  Operads defining their own
    ``axiom_report`` (the opposite-category ones) are dispatched there.
    """
    if hasattr(op, "axiom_report"):
        return op.axiom_report(max_arity)
    rep = CheckReport(f"operad-axioms[{op.name}]<={max_arity}")
    e = op.unit()
    for n in range(max_arity + 1):
        for x in op.entry(n):
            rep.record(op.circ(e, 1, x) == x,
                       {"law": "left-unit", "x": repr(x)})
            for i in range(1, n + 1):
                rep.record(op.circ(x, i, e) == x,
                           {"law": "right-unit", "x": repr(x), "slot": i})
    for p in range(1, max_arity + 1):
        for q in range(1, max_arity + 2 - p):
            for r in range(1, max_arity + 3 - p - q):
                _check_triple(op, rep, p, q, r)
    return rep


def _check_triple(op: OperadInstance, rep: CheckReport,
                  p: int, q: int, r: int) -> None:
    for x in op.entry(p):
        for y in op.entry(q):
            for z in op.entry(r):
                for i in range(1, p + 1):
                    xy = op.circ(x, i, y)
                    for j in range(1, q + 1):
                        # sequential: plug z inside the grafted y
                        lhs = op.circ(xy, i + j - 1, z)
                        rhs = op.circ(x, i, op.circ(y, j, z))
                        rep.record(lhs == rhs, {
                            "law": "sequential", "x": repr(x), "y": repr(y),
                            "z": repr(z), "i": i, "j": j})
                    for k in range(i + 1, p + 1):
                        # parallel: graft y and z at disjoint slots; the
                        # two insertion orders transpose y past z, which
                        # costs a sign when both are odd
                        lhs = op.circ(xy, k + q - 1, z)
                        rhs = op.circ(op.circ(x, k, z), i, y)
                        if (op.degree(y) * op.degree(z)) % 2:
                            rhs = rhs.scale(-1)
                        rep.record(lhs == rhs, {
                            "law": "parallel", "x": repr(x), "y": repr(y),
                            "z": repr(z), "i": i, "k": k})

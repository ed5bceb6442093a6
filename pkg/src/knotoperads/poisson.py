"""Degree-n Poisson operad over exact rationals.

Arity k is spanned by monomials in which each variable x1..xk appears
exactly once: products of Lie bracket words, the bracket carrying degree n.
Normal form: every bracket word is left-normed with its minimal variable
first, and the blocks of a product are sorted by minimal variable.

Conventions (the bracket rules are forced up to global convention; validated
downstream by d^2 = 0, operad axioms, and the k! dimension count):
    Leibniz       [a, bc] = [a,b] c + (-1)^((|a|+n+1)|b|) b [a,c]
    antisymmetry  [a, b]  = -(-1)^((|a|+n)(|b|+n)) [b, a]
    Jacobi        [a,[b,c]] = [[a,b],c] + (-1)^((|a|+n)(|b|+n)) [b,[a,c]]
    Koszul        swapping adjacent product blocks costs (-1)^(|a||b|)

Value encodings: a Lie word is a tuple of variable indices read left-normed,
(a, b, c) meaning [[x_a, x_b], x_c]; a monomial is a tuple of words; an
expression is an int (variable index), ("p", [subexpressions]) for a
product, or ("b", left, right) for a bracket.
"""

from __future__ import annotations

import itertools
import json
import re
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

from .operad_core import OperadInstance

Word = tuple[int, ...]
Monomial = tuple[Word, ...]


def word_degree(w: Word, n: int) -> int:
    return (len(w) - 1) * n


def monomial_degree(m: Monomial, n: int) -> int:
    return sum(word_degree(w, n) for w in m)


def monomial_arity(m: Monomial) -> int:
    return sum(len(w) for w in m)


@dataclass
class PoissonElement:
    """A rational combination of normal-form monomials of one arity."""

    n: int
    arity: int
    terms: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        self.terms = {m: Fraction(c) for m, c in self.terms.items() if c != 0}

    def is_zero(self) -> bool:
        return not self.terms

    @property
    def degrees(self) -> set[int]:
        return {monomial_degree(m, self.n) for m in self.terms}

    def homogeneous_part(self, q: int) -> "PoissonElement":
        return PoissonElement(self.n, self.arity, {
            m: c for m, c in self.terms.items()
            if monomial_degree(m, self.n) == q})

    def add(self, other: "PoissonElement") -> "PoissonElement":
        if (self.n, self.arity) != (other.n, other.arity):
            raise ValueError("mismatched degree or arity")
        out = dict(self.terms)
        for m, c in other.terms.items():
            out[m] = out.get(m, 0) + c
        return PoissonElement(self.n, self.arity, out)

    def scale(self, c) -> "PoissonElement":
        return PoissonElement(self.n, self.arity,
                              {m: v * Fraction(c) for m, v in self.terms.items()})

    def __add__(self, other):
        return self.add(other)

    def __sub__(self, other):
        return self.add(other.scale(-1))

    def to_text(self) -> str:
        return element_to_text(self)

    def __str__(self) -> str:
        return self.to_text()


def zero(n: int, arity: int) -> PoissonElement:
    return PoissonElement(n, arity, {})


def monomial_element(n: int, arity: int, m: Monomial, coeff=1) -> PoissonElement:
    if monomial_arity(m) != arity:
        raise ValueError(f"monomial {m!r} does not have arity {arity}")
    return PoissonElement(n, arity, {m: Fraction(coeff)})


# -- normal-form rewriting -----------------------------------------------------


@lru_cache(maxsize=None)
def _nf_pair(p: Word, q: Word, parity: int) -> tuple:
    """Normal form of [p, q] for normal words with min(p) < min(q).

    Peeling the last letter of q terminates: the right length drops by one
    each step, and single letters append directly."""
    if len(q) == 1:
        return ((p + q, 1),)
    e, q2 = q[-1], q[:-1]
    acc: dict[Word, int] = {}
    for w, c in _nf_pair(p, q2, parity):
        acc[w + (e,)] = acc.get(w + (e,), 0) + c
    s = 1 if (len(q2) * parity) % 2 else -1
    for w, c in _nf_pair(p + (e,), q2, parity):
        acc[w] = acc.get(w, 0) + s * c
    return tuple((w, c) for w, c in acc.items() if c)


def _bracket_words(p: Word, q: Word, n: int) -> dict[Word, int]:
    if p[0] < q[0]:
        return dict(_nf_pair(p, q, n % 2))
    s = 1 if (len(p) * len(q) * n) % 2 else -1
    return {w: s * c for w, c in _nf_pair(q, p, n % 2)}


def _merge(m1: Monomial, m2: Monomial, n: int) -> tuple[Monomial, int]:
    """Stable merge of two sorted monomials with Koszul crossing signs."""
    sign, out = 1, []
    i = j = 0
    while i < len(m1) and j < len(m2):
        if m1[i][0] < m2[j][0]:
            out.append(m1[i])
            i += 1
        else:
            w = m2[j]
            crossed = sum(word_degree(u, n) for u in m1[i:])
            if (word_degree(w, n) * crossed) % 2:
                sign = -sign
            out.append(w)
            j += 1
    out.extend(m1[i:])
    out.extend(m2[j:])
    return tuple(out), sign


def _bracket_monomials(ma: Monomial, mb: Monomial, n: int) -> dict[Monomial, int]:
    """Normal form of [ma, mb], eliminating products by the Leibniz rule."""
    if not ma or not mb:
        return {}
    if len(ma) == 1 and len(mb) == 1:
        return {(w,): c for w, c in _bracket_words(ma[0], mb[0], n).items()}
    if len(mb) == 1:
        # flip so the product sits on the right
        exp = (monomial_degree(ma, n) + n) * (monomial_degree(mb, n) + n)
        s = 1 if exp % 2 else -1
        return {m: s * c for m, c in _bracket_monomials(mb, ma, n).items()}
    b, rest = mb[:1], mb[1:]
    out: dict[Monomial, int] = {}
    for m, c in _bracket_monomials(ma, b, n).items():
        mm, s = _merge(m, rest, n)
        out[mm] = out.get(mm, 0) + c * s
    # ad_ma is a derivation of degree |ma| + n for the product
    s2 = -1 if ((monomial_degree(ma, n) + n) * word_degree(b[0], n)) % 2 else 1
    for m, c in _bracket_monomials(ma, rest, n).items():
        mm, s = _merge(b, m, n)
        out[mm] = out.get(mm, 0) + s2 * c * s
    return {m: c for m, c in out.items() if c}


def _expr_vars(expr, seen: set) -> None:
    if isinstance(expr, int):
        if expr in seen:
            raise ValueError(f"variable x{expr} appears more than once")
        if expr < 1:
            raise ValueError(f"variable index {expr} must be positive")
        seen.add(expr)
    elif expr[0] == "p":
        for sub in expr[1]:
            _expr_vars(sub, seen)
    elif expr[0] == "b":
        _expr_vars(expr[1], seen)
        _expr_vars(expr[2], seen)
    else:
        raise ValueError(f"malformed expression node: {expr!r}")


def _expand(expr, n: int) -> dict[Monomial, Fraction]:
    if isinstance(expr, int):
        return {((expr,),): Fraction(1)}
    if expr[0] == "p":
        acc: dict[Monomial, Fraction] = {(): Fraction(1)}
        for sub in expr[1]:
            nxt: dict[Monomial, Fraction] = {}
            for m1, c1 in acc.items():
                for m2, c2 in _expand(sub, n).items():
                    mm, s = _merge(m1, m2, n)
                    nxt[mm] = nxt.get(mm, 0) + c1 * c2 * s
            acc = nxt
        return {m: c for m, c in acc.items() if c}
    ta, tb = _expand(expr[1], n), _expand(expr[2], n)
    out: dict[Monomial, Fraction] = {}
    for ma, ca in ta.items():
        for mb, cb in tb.items():
            for m, s in _bracket_monomials(ma, mb, n).items():
                out[m] = out.get(m, 0) + ca * cb * s
    return {m: c for m, c in out.items() if c}


def normalize(expr, n: int) -> PoissonElement:
    """Reduce any bracket/product expression to normal-form monomials.

    Variables must be distinct and form a range 1..k.
    """
    seen: set[int] = set()
    _expr_vars(expr, seen)
    k = len(seen)
    if seen != set(range(1, k + 1)):
        raise ValueError(f"variables must be exactly x1..x{k}, got {sorted(seen)}")
    return PoissonElement(n, k, _expand(expr, n))


# -- operad structure ------------------------------------------------------------


def _word_ast(w: Word):
    ast = w[0]
    for v in w[1:]:
        ast = ("b", ast, v)
    return ast


def _relabel_word(w: Word, f) -> Word:
    return tuple(f(v) for v in w)


def _slot_left_degree(m: Monomial, i: int, n: int) -> int:
    """Total degree standing left of variable i in monomial m.

    A length-k word contributes its letters interleaved with k-1 bracket
    symbols of degree n, so the letter at index t sits behind degree t*n;
    earlier blocks contribute their full word degrees.
    """
    acc = 0
    for w in m:
        if i in w:
            return acc + w.index(i) * n
        acc += word_degree(w, n)
    raise ValueError(f"variable {i} missing from monomial {m}")


def circ(a: PoissonElement, i: int, b: PoissonElement) -> PoissonElement:
    """Partial composition: substitute b (relabeled upward by i-1) for x_i
    in a (variables above i relabeled past b), then renormalize.

    Moving a substituted term of odd degree past the material left of slot
    i costs a sign, else composition would not commute with the rewrite
    rules for odd n."""
    if not 1 <= i <= a.arity:
        raise ValueError(f"slot {i} out of range for arity {a.arity}")
    if a.n != b.n:
        raise ValueError("mismatched bracket degree")
    n, kb = a.n, b.arity
    out = zero(n, a.arity + kb - 1)
    for mb, cb in b.terms.items():
        db = monomial_degree(mb, n)
        mb_shift = tuple(_relabel_word(w, lambda v: v + i - 1) for w in mb)
        sub_ast = ("p", [_word_ast(w) for w in mb_shift])

        # substitute and relabel in one pass: with kb = 0 the shift is
        # downward and a staged relabel would collide with the slot
        def leaf(v):
            if v == i:
                return sub_ast
            return v if v < i else v + kb - 1

        for ma, ca in a.terms.items():
            sgn = -1 if (db * _slot_left_degree(ma, i, n)) % 2 else 1
            blocks = []
            for w in ma:
                ast = leaf(w[0])
                for v in w[1:]:
                    ast = ("b", ast, leaf(v))
                blocks.append(ast)
            piece = PoissonElement(n, out.arity, _expand(("p", blocks), n))
            out = out.add(piece.scale(ca * cb * sgn))
    return out


def codegeneracy(i: int, e: PoissonElement) -> PoissonElement:
    """Contract leaf i: kill monomials with x_i inside a bracket, else drop
    the singleton block and close the index gap."""
    if not 1 <= i <= e.arity:
        raise ValueError(f"leaf {i} out of range for arity {e.arity}")
    out: dict[Monomial, Fraction] = {}
    for m, c in e.terms.items():
        if (i,) not in m:
            continue
        kept = tuple(_relabel_word(w, lambda v: v if v < i else v - 1)
                     for w in m if w != (i,))
        out[kept] = out.get(kept, 0) + c
    return PoissonElement(e.n, e.arity - 1, out)


def multiplication(n: int) -> PoissonElement:
    return monomial_element(n, 2, ((1,), (2,)))


def unit(n: int) -> PoissonElement:
    return monomial_element(n, 1, ((1,),))


def coface(i: int, e: PoissonElement) -> PoissonElement:
    """Cosimplicial coface: multiply by a fresh first/last variable at the
    ends, insert the two-variable product in the middle."""
    mu = multiplication(e.n)
    if i == 0:
        return circ(mu, 2, e)
    if i == e.arity + 1:
        return circ(mu, 1, e)
    if 1 <= i <= e.arity:
        return circ(e, i, mu)
    raise ValueError(f"coface index {i} out of range for arity {e.arity}")


# -- basis ------------------------------------------------------------------------


def _set_partitions(items: tuple) -> list:
    if not items:
        return [()]
    first, rest = items[0], items[1:]
    out = []
    for part in _set_partitions(rest):
        out.append(((first,),) + part)
        for idx in range(len(part)):
            grown = (first,) + part[idx]
            out.append(part[:idx] + (grown,) + part[idx + 1:])
    return out


@lru_cache(maxsize=None)
def _basis_monomials(k: int) -> tuple:
    monos = []
    for part in _set_partitions(tuple(range(1, k + 1))):
        blocks_words = []
        for block in part:
            lo, others = block[0], block[1:]
            blocks_words.append([
                (lo,) + perm for perm in itertools.permutations(others)])
        for choice in itertools.product(*blocks_words):
            monos.append(tuple(sorted(choice, key=lambda w: w[0])))
    monos.sort(key=lambda m: (monomial_arity(m) - len(m), m))
    return tuple(monos)


def basis(n: int, k: int) -> list:
    """Normal-form monomials of arity k, ordered by degree then
    lexicographically.  The list itself does not depend on n (degrees do)."""
    if k < 0:
        raise ValueError("arity must be non-negative")
    return list(_basis_monomials(k))


class PoissonOperad(OperadInstance):
    """Basis-driven operad instance at a fixed bracket degree."""

    def __init__(self, n: int):
        self.n = n
        self.name = f"poisson[n={n}]"

    def entry(self, k: int) -> list:
        return [monomial_element(self.n, k, m) for m in basis(self.n, k)]

    def arity_of(self, e: PoissonElement) -> int:
        return e.arity

    def circ(self, a, i, b):
        return circ(a, i, b)

    def degree(self, e: PoissonElement) -> int:
        degs = e.degrees
        if len(degs) > 1:
            raise ValueError("element is not homogeneous")
        return next(iter(degs), 0)

    def unit(self):
        return unit(self.n)

    def multiplication(self):
        return multiplication(self.n)

    def codegeneracy(self, i, e):
        return codegeneracy(i, e)


# -- text and JSON forms -------------------------------------------------------------


def word_to_text(w: Word) -> str:
    out = f"x{w[0]}"
    for v in w[1:]:
        out = f"[{out},x{v}]"
    return out


def monomial_to_text(m: Monomial) -> str:
    if not m:
        return "1"
    return " ".join(word_to_text(w) for w in m)


def element_to_text(e: PoissonElement) -> str:
    if not e.terms:
        return "0"
    parts = []
    for m in sorted(e.terms, key=lambda m: (monomial_arity(m) - len(m), m)):
        c = e.terms[m]
        mono = monomial_to_text(m)
        if c == 1:
            text = mono
        elif c == -1:
            text = f"-{mono}"
        else:
            text = f"{c}*{mono}"
        parts.append(text)
    out = parts[0]
    for p in parts[1:]:
        out += f" - {p[1:]}" if p.startswith("-") else f" + {p}"
    return out


_TOKEN = re.compile(r"\s*(\[|\]|,|\+|-|\*|/|x\d+|\d+)")


def _tokenize(text: str) -> list[str]:
    pos, out = 0, []
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            if text[pos:].strip():
                raise ValueError(f"bad character at {text[pos:]!r}")
            break
        out.append(m.group(1))
        pos = m.end()
    return out


class _Parser:
    def __init__(self, tokens):
        self.toks = tokens
        self.pos = 0

    def peek(self):
        return self.toks[self.pos] if self.pos < len(self.toks) else None

    def take(self):
        t = self.peek()
        self.pos += 1
        return t

    def expect(self, t):
        got = self.take()
        if got != t:
            raise ValueError(f"expected {t!r}, got {got!r}")

    def _at_factor(self) -> bool:
        t = self.peek()
        return t == "[" or t == "1" or (t or "").startswith("x")

    def factor(self):
        t = self.peek()
        if t == "[":
            self.take()
            left = self.slot()
            self.expect(",")
            right = self.slot()
            self.expect("]")
            return ("b", left, right)
        if t == "1":  # the empty monomial
            self.take()
            return ("p", [])
        if t and t.startswith("x"):
            self.take()
            return int(t[1:])
        raise ValueError(f"expected a variable or bracket, got {t!r}")

    def slot(self):
        factors = [self.factor()]
        while self._at_factor():
            factors.append(self.factor())
        return factors[0] if len(factors) == 1 else ("p", factors)

    def coefficient(self):
        sign = 1
        while self.peek() in ("+", "-"):
            if self.take() == "-":
                sign = -sign
        t = self.peek()
        if t is not None and t.isdigit():
            nxt = self.toks[self.pos + 1] if self.pos + 1 < len(self.toks) else None
            if nxt in ("/", "*"):
                num = int(self.take())
                c = Fraction(num)
                if self.peek() == "/":
                    self.take()
                    c = Fraction(num, int(self.take()))
                if self.peek() == "*":
                    self.take()
                return sign * c
            if t != "1":  # a bare integer; only 0 survives validation later
                self.take()
                return Fraction(sign * int(t))
        return Fraction(sign)

    def term(self):
        c = self.coefficient()
        if self.peek() is None or self.peek() in ("+", "-"):
            return c, None  # bare number, e.g. "0"
        factors = [self.factor()]
        while self._at_factor():
            factors.append(self.factor())
        return c, ("p", factors)


def parse_element(text: str, n: int, arity: int | None = None) -> PoissonElement:
    """Parse `coeff*monomial` sums; brackets may nest arbitrarily and are
    renormalized.  All terms must use the same variable range 1..k."""
    parser = _Parser(_tokenize(text))
    pieces = []
    while parser.peek() is not None:
        c, ast = parser.term()
        pieces.append((c, ast))
    arities = set()
    for c, ast in pieces:
        if ast is not None:
            seen: set[int] = set()
            _expr_vars(ast, seen)
            arities.add(len(seen))
            if seen != set(range(1, len(seen) + 1)):
                raise ValueError(f"variables must be x1..xk, got {sorted(seen)}")
        elif c != 0:
            raise ValueError("a bare nonzero number is not a monomial")
    if len(arities) > 1:
        raise ValueError(f"mixed arities in one element: {sorted(arities)}")
    k_vars = arities.pop() if arities else None
    if k_vars is not None and arity is not None and arity != k_vars:
        raise ValueError(f"declared arity {arity} but variables give {k_vars}")
    k = k_vars if k_vars is not None else (arity if arity is not None else 0)
    out = zero(n, k)
    for c, ast in pieces:
        if ast is not None:
            out = out.add(normalize(ast, n).scale(c))
    return out


def element_to_json_obj(e: PoissonElement) -> dict:
    terms = []
    for m in sorted(e.terms, key=lambda m: (monomial_arity(m) - len(m), m)):
        c = e.terms[m]
        terms.append({"monomial": [list(w) for w in m],
                      "numerator": str(c.numerator),
                      "denominator": str(c.denominator)})
    return {"bracket_degree": e.n, "arity": e.arity, "terms": terms}


def element_from_json_obj(obj: dict) -> PoissonElement:
    terms = {}
    for item in obj["terms"]:
        m = tuple(tuple(w) for w in item["monomial"])
        terms[m] = Fraction(int(item["numerator"]), int(item["denominator"]))
    return PoissonElement(obj["bracket_degree"], obj["arity"], terms)


def element_to_json(e: PoissonElement) -> str:
    return json.dumps(element_to_json_obj(e), sort_keys=True)


def element_from_json(text: str) -> PoissonElement:
    return element_from_json_obj(json.loads(text))

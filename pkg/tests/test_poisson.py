"""Tests for the Poisson operad: normal forms, composition, (co)faces.

The main correctness oracle (even bracket degree only, where all Koszul
signs are +1) is the classical expansion into the free associative algebra:
send a bracket to the commutator of expansions and a product to the sum of
its factor orderings, concatenated.  That map is independent of normalize's
rewriting and must agree with it term by term; it is also injective on the
basis, which pins linear independence of the normal forms.
"""

import itertools
from fractions import Fraction

import pytest

from knotoperads.operad_core import (
    check_cosimplicial_identities,
    check_operad_axioms,
    cosimplicial_from_operad,
)
from knotoperads.poisson import (
    PoissonElement,
    PoissonOperad,
    basis,
    circ,
    codegeneracy,
    coface,
    element_from_json,
    element_to_json,
    element_to_text,
    monomial_arity,
    monomial_degree,
    monomial_element,
    multiplication,
    normalize,
    parse_element,
    unit,
    zero,
)

# -- the associative-expansion oracle (independent of the module's rewriting) --


def _cat(a: dict, b: dict) -> dict:
    out = {}
    for wa, ca in a.items():
        for wb, cb in b.items():
            w = wa + wb
            out[w] = out.get(w, 0) + ca * cb
    return out


def _acc(a: dict, b: dict, s=1) -> dict:
    out = dict(a)
    for w, c in b.items():
        out[w] = out.get(w, 0) + s * c
    return {w: c for w, c in out.items() if c}


def _flatten_product(expr) -> list:
    if isinstance(expr, tuple) and expr[0] == "p":
        out = []
        for sub in expr[1]:
            out.extend(_flatten_product(sub))
        return out
    return [expr]


def phi(expr) -> dict:
    """Free-associative expansion, valid for even bracket degree.

    Brackets become commutators and products become sums over all orderings
    of their factors.  This agrees with the rewriting engine only when every
    product node multiplies pure bracket words (no products nested inside a
    factor) and every bracket node has at least one pure-bracket-word side;
    otherwise the ordering sum has the wrong granularity (symmetrization is
    not an algebra map, and a commutator of two symmetrized products is not
    the symmetrized bracket).
    """
    if isinstance(expr, int):
        return {(expr,): Fraction(1)}
    if expr[0] == "b":
        a, b = phi(expr[1]), phi(expr[2])
        return _acc(_cat(a, b), _cat(b, a), -1)
    factors = [phi(f) for f in _flatten_product(expr)]
    out = {}
    for perm in itertools.permutations(factors):
        term = {(): Fraction(1)}
        for f in perm:
            term = _cat(term, f)
        out = _acc(out, term)
    return out


def _word_ast(w):
    ast = w[0]
    for v in w[1:]:
        ast = ("b", ast, v)
    return ast


def _mono_ast(m):
    return ("p", [_word_ast(w) for w in m])


def phi_element(e: PoissonElement) -> dict:
    assert e.n % 2 == 0
    out = {}
    for m, c in e.terms.items():
        out = _acc(out, {w: c * v for w, v in phi(_mono_ast(m)).items()})
    return out


def _subst_ast(ma, i, mb):
    """Composite of two monomials rebuilt from scratch as an expression."""
    kb = max(v for w in mb for v in w)
    mb_shift = tuple(tuple(v + i - 1 for v in w) for w in mb)
    ma_rel = tuple(tuple(v if v <= i else v + kb - 1 for v in w) for w in ma)
    sub = _mono_ast(mb_shift)

    def leaf(v):
        return sub if v == i else v

    blocks = []
    for w in ma_rel:
        ast = leaf(w[0])
        for v in w[1:]:
            ast = ("b", ast, leaf(v))
        blocks.append(ast)
    return ("p", blocks)


def _subst_sign(ma, i, mb, n):
    """Koszul sign for plugging mb into slot i of ma, via an infix walk:
    letters carry degree 0 and each bracket sits between its operands
    carrying degree n, so left degree accumulates bracket by bracket."""
    left = 0
    for w in ma:
        if i in w:
            left += n * w.index(i)
            break
        left += n * (len(w) - 1)
    else:
        raise AssertionError(f"variable {i} not in {ma}")
    db = sum(n * (len(w) - 1) for w in mb)
    return -1 if (left * db) % 2 else 1


def _rank_fractions(rows) -> int:
    rows = [list(map(Fraction, r)) for r in rows]
    rank, col = 0, 0
    width = len(rows[0]) if rows else 0
    while rank < len(rows) and col < width:
        piv = next((r for r in range(rank, len(rows)) if rows[r][col]), None)
        if piv is None:
            col += 1
            continue
        rows[rank], rows[piv] = rows[piv], rows[rank]
        for r in range(len(rows)):
            if r != rank and rows[r][col]:
                f = rows[r][col] / rows[rank][col]
                rows[r] = [a - f * b for a, b in zip(rows[r], rows[rank])]
        rank += 1
        col += 1
    return rank


# -- basis ----------------------------------------------------------------------


def _independent_dim(k: int) -> int:
    # blocks containing variable 1 chosen of size s: C(k-1, s-1) subsets,
    # (s-1)! bracket words, then recurse on the rest
    if k == 0:
        return 1
    total = 0
    for s in range(1, k + 1):
        n_choose = 1
        for t in range(1, s):
            n_choose = n_choose * (k - t) // t
        fact = 1
        for t in range(1, s):
            fact *= t
        total += n_choose * fact * _independent_dim(k - s)
    return total


class TestBasis:
    def test_dimension_is_factorial(self):
        for k in range(8):
            want = _independent_dim(k)
            assert want == max(1, k) if k <= 1 else True
            assert len(basis(2, k)) == want
            fact = 1
            for t in range(1, k + 1):
                fact *= t
            assert want == fact

    def test_arity_two(self):
        assert basis(5, 2) == [((1,), (2,)), ((1, 2),)]

    def test_arity_three(self):
        got = basis(2, 3)
        assert got[0] == ((1,), (2,), (3,))
        assert set(got[1:4]) == {((1,), (2, 3)), ((1, 2), (3,)), ((1, 3), (2,))}
        assert got[4:] == [((1, 2, 3),), ((1, 3, 2),)]

    def test_sorted_by_degree_then_lex(self):
        for k in range(6):
            b = basis(3, k)
            keys = [(monomial_arity(m) - len(m), m) for m in b]
            assert keys == sorted(keys)

    def test_normal_forms_linearly_independent(self):
        # oracle: associative expansions of the basis have full rank
        for k in range(1, 6):
            b = basis(2, k)
            words = list(itertools.permutations(range(1, k + 1)))
            rows = []
            for m in b:
                vec = phi(_mono_ast(m))
                rows.append([vec.get(w, 0) for w in words])
            assert _rank_fractions(rows) == len(b)


# -- normalize -------------------------------------------------------------------


class TestNormalize:
    @pytest.mark.parametrize("n", [2, 3])
    def test_leibniz_example(self, n):
        e = normalize(("b", 1, ("p", [2, 3])), n)
        assert e.terms == {((1, 2), (3,)): 1, ((1, 3), (2,)): 1}

    def test_product_sorting(self):
        e = normalize(("p", [2, 1]), 2)
        assert e.terms == {((1,), (2,)): 1}

    @pytest.mark.parametrize("n,sign", [(2, -1), (3, 1), (4, -1), (5, 1)])
    def test_antisymmetry_on_generators(self, n, sign):
        e = normalize(("b", 2, 1), n)
        assert e.terms == {((1, 2),): sign}

    @pytest.mark.parametrize("n,sign", [(2, 1), (3, -1)])
    def test_koszul_block_swap(self, n, sign):
        # [x3,x4][x1,x2] = (-1)^(n*n) [x1,x2][x3,x4]
        e = normalize(("p", [("b", 3, 4), ("b", 1, 2)]), n)
        assert e.terms == {((1, 2), (3, 4)): sign}

    def test_jacobi_even(self):
        e = normalize(("b", 1, ("b", 2, 3)), 2)
        assert e.terms == {((1, 2, 3),): 1, ((1, 3, 2),): -1}

    def test_idempotent_on_basis(self):
        for n in (2, 3):
            for k in range(5):
                for m in basis(n, k):
                    e = normalize(_mono_ast(m), n)
                    assert e.terms == {m: 1}

    def test_rejects_repeated_variable(self):
        with pytest.raises(ValueError):
            normalize(("p", [1, 1]), 2)
        with pytest.raises(ValueError):
            normalize(("b", 1, ("p", [2, ("b", 1, 3)])), 2)

    def test_rejects_gap_in_variables(self):
        with pytest.raises(ValueError):
            normalize(("p", [1, 3]), 2)

    def test_oracle_agreement(self):
        # every expression here stays inside phi's validity domain
        exprs = [
            ("b", 1, ("p", [2, 3])),
            ("b", ("p", [1, 2]), 3),
            ("b", ("b", 1, 2), ("b", 3, 4)),
            ("b", 1, ("b", 2, ("b", 3, 4))),
            ("p", [("b", 2, 4), 1, 3]),
            ("b", ("b", ("p", [1, 2]), 3), 4),
            ("b", 1, ("p", [2, ("b", 3, 4)])),
            ("p", [("b", 1, ("b", 2, 3)), 4]),
            ("b", ("b", 2, 3), 1),
        ]
        for expr in exprs:
            e = normalize(expr, 2)
            assert phi_element(e) == phi(expr), expr


# -- circ -------------------------------------------------------------------------


class TestCirc:
    def test_product_substitution(self):
        mu = multiplication(2)
        got = circ(mu, 2, mu)
        assert got.terms == {((1,), (2,), (3,)): 1}

    def test_bracket_slot_expands(self):
        a = monomial_element(2, 2, ((1, 2),))
        got = circ(a, 2, multiplication(2))
        assert got.terms == {((1, 2), (3,)): 1, ((1, 3), (2,)): 1}

    @pytest.mark.parametrize("n", [2, 3])
    def test_unit_laws(self, n):
        e = unit(n)
        for k in range(4):
            for m in basis(n, k):
                a = monomial_element(n, k, m)
                assert circ(e, 1, a) == a
                for i in range(1, k + 1):
                    assert circ(a, i, e) == a

    def test_degree_additive(self):
        for n in (2, 3):
            for ma in basis(n, 3):
                for mb in basis(n, 2):
                    a = monomial_element(n, 3, ma)
                    b = monomial_element(n, 2, mb)
                    q = monomial_degree(ma, n) + monomial_degree(mb, n)
                    got = circ(a, 2, b)
                    assert got.degrees <= {q}

    def test_slot_range(self):
        with pytest.raises(ValueError):
            circ(unit(2), 2, unit(2))

    @pytest.mark.parametrize("n", [2, 3])
    def test_substitution_oracle(self, n):
        # rebuild the composite expression from scratch and normalize it,
        # independently of circ's relabeling bookkeeping; moving an odd
        # substituted term into its slot costs the infix-walk sign
        for ma in basis(n, 3):
            for mb in basis(n, 2):
                a = monomial_element(n, 3, ma)
                b = monomial_element(n, 2, mb)
                for i in (1, 2, 3):
                    got = circ(a, i, b)
                    want = normalize(_subst_ast(ma, i, mb), n)
                    want = want.scale(_subst_sign(ma, i, mb, n))
                    assert got == want, (ma, i, mb)

    def test_free_associative_oracle(self):
        # substituting a single bracket word keeps every product factor a
        # pure word, so phi stays inside its validity domain end to end
        singles = [(2, ((1, 2),)), (3, ((1, 2, 3),)), (3, ((1, 3, 2),))]
        for ma in basis(2, 3):
            a = monomial_element(2, 3, ma)
            for kb, mb in singles:
                b = monomial_element(2, kb, mb)
                for i in (1, 2, 3):
                    got = circ(a, i, b)
                    want = phi(_subst_ast(ma, i, mb))
                    assert phi_element(got) == want, (ma, i, mb)


# -- codegeneracy and coface --------------------------------------------------------


class TestCodegeneracy:
    def test_spec_values(self):
        assert codegeneracy(1, multiplication(2)).terms == {((1,),): 1}
        assert codegeneracy(1, monomial_element(2, 2, ((1, 2),))).is_zero()
        e = monomial_element(2, 3, ((1, 3), (2,)))
        assert codegeneracy(2, e).terms == {((1, 2),): 1}

    def test_degree_preserved(self):
        for n in (2, 3):
            for m in basis(n, 4):
                e = monomial_element(n, 4, m)
                for i in range(1, 5):
                    got = codegeneracy(i, e)
                    assert got.degrees <= {monomial_degree(m, n)}

    def test_index_range(self):
        with pytest.raises(ValueError):
            codegeneracy(3, multiplication(2))


class TestCoface:
    def test_bottom(self):
        got = coface(0, unit(2))
        assert got.terms == {((1,), (2,)): 1}

    def test_top(self):
        e = monomial_element(2, 2, ((1, 2),))
        got = coface(3, e)
        assert got.terms == {((1, 2), (3,)): 1}

    @pytest.mark.parametrize("n", [2, 3])
    def test_middle_leibniz(self, n):
        e = monomial_element(n, 2, ((1, 2),))
        got = coface(1, e)
        assert got.terms == {((1, 3), (2,)): 1, ((1,), (2, 3)): 1}

    def test_degree_preserved(self):
        for n in (2, 3):
            for m in basis(n, 3):
                e = monomial_element(n, 3, m)
                for i in range(5):
                    assert coface(i, e).degrees <= {monomial_degree(m, n)}

    def test_index_range(self):
        with pytest.raises(ValueError):
            coface(4, multiplication(2))


# -- operad instance ------------------------------------------------------------------


class TestOperadInstance:
    @pytest.mark.parametrize("n", [2, 3])
    def test_axioms_small(self, n):
        rep = check_operad_axioms(PoissonOperad(n), max_arity=3)
        assert rep.passed, rep.failures[:2]

    @pytest.mark.parametrize("n", [2, 3])
    def test_cosimplicial_identities_small(self, n):
        cos = cosimplicial_from_operad(PoissonOperad(n))
        rep = check_cosimplicial_identities(cos, max_level=3)
        assert rep.passed, rep.failures[:2]

    def test_normalized_monomials_degree_bound(self):
        # no singleton block forces every block size >= 2, so
        # q = (k - blocks) n >= k n / 2
        for k in range(8):
            for m in basis(3, k):
                if all(len(w) >= 2 for w in m):
                    assert len(m) <= k // 2
                    assert monomial_degree(m, 3) * 2 >= k * 3


# -- text and JSON ----------------------------------------------------------------------


class TestFormats:
    def test_monomial_text(self):
        e = PoissonElement(2, 5, {((1, 2), (3,), (4, 5)): Fraction(1)})
        assert element_to_text(e) == "[x1,x2] x3 [x4,x5]"

    def test_element_text(self):
        e = PoissonElement(2, 2, {((1,), (2,)): Fraction(3, 2),
                                  ((1, 2),): Fraction(-1)})
        assert element_to_text(e) == "3/2*x1 x2 - [x1,x2]"

    def test_zero_text(self):
        assert element_to_text(zero(2, 3)) == "0"
        assert parse_element("0", 2, arity=3) == zero(2, 3)

    def test_text_round_trip(self):
        for n in (2, 3):
            for k in range(5):
                for m in basis(n, k):
                    e = monomial_element(n, k, m, Fraction(-7, 3))
                    assert parse_element(element_to_text(e), n) == e

    def test_parse_renormalizes_nesting(self):
        e = parse_element("[x3,[x4,x5]] [x1,x2]", 2)
        direct = normalize(("p", [("b", 3, ("b", 4, 5)), ("b", 1, 2)]), 2)
        assert e == direct

    def test_parse_rejects_mixed_arity(self):
        with pytest.raises(ValueError):
            parse_element("x1 + x1 x2", 2)

    def test_json_round_trip(self):
        e = parse_element("3/2*x1 x2 - [x1,x2]", 3)
        assert element_from_json(element_to_json(e)) == e


class TestOddDegreeSigns:
    """Koszul coherence where several odd-degree blocks interact.

    In odd bracket degree a length-2 word is an odd element, so the
    bracket-against-product expansion must treat ad_a as a derivation of
    degree |a| + n; these identities pin that sign down."""

    def test_graded_leibniz_with_odd_blocks(self):
        lhs = normalize(("b", ("b", 1, 2),
                         ("p", [("b", 3, 4), ("b", 5, 6)])), 3)
        first = normalize(("p", [("b", ("b", 1, 2), ("b", 3, 4)),
                                 ("b", 5, 6)]), 3)
        second = normalize(("p", [("b", 3, 4),
                                  ("b", ("b", 1, 2), ("b", 5, 6))]), 3)
        # (-1)^{(|a|+n)|b|} = +1 here: |a|+n = 6, |b| = 3
        assert lhs == first.add(second)

    def test_graded_jacobi_with_odd_blocks(self):
        lhs = normalize(("b", ("b", 1, 2),
                         ("b", ("b", 3, 4), ("b", 5, 6))), 3)
        first = normalize(("b", ("b", ("b", 1, 2), ("b", 3, 4)),
                           ("b", 5, 6)), 3)
        second = normalize(("b", ("b", 3, 4),
                            ("b", ("b", 1, 2), ("b", 5, 6))), 3)
        assert lhs == first.add(second)

    def test_coface_interchange_reaches_arity_six(self):
        # first composite size where three odd blocks appear, odd degree
        x = monomial_element(3, 4, ((1, 2, 3, 4),))
        assert coface(3, coface(1, x)) == coface(1, coface(2, x))
        assert coface(4, coface(1, x)) == coface(1, coface(3, x))
        assert coface(2, coface(2, x)) == coface(3, coface(2, x))

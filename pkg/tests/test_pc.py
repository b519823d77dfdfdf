from __future__ import annotations

import pytest
from hypothesis import given, strategies as st

from sigmaforge.pc import (
    InvalidPresentation,
    ParseError,
    PcPresentation,
    vec_of_word,
    word_of_vec,
)


def c3c3() -> PcPresentation:
    return PcPresentation(3, 2, [(), ()], {}, [1, 1], 2)


def es27() -> PcPresentation:
    """Extraspecial of order 27 and exponent 3: the commutator of the two
    defining generators is the third, central, generator."""
    return PcPresentation(3, 3, [(), (), ()], {(1, 0): ((1, 1), (2, 1))}, [1, 1, 2], 2)


def c9c3() -> PcPresentation:
    return PcPresentation(3, 3, [((2, 1),), (), ()], {}, [1, 1, 2], 2)


def c27() -> PcPresentation:
    return PcPresentation(3, 3, [((1, 1),), ((2, 1),), ()], {}, [1, 2, 3], 1)


def vectors(pres: PcPresentation):
    return st.lists(
        st.integers(0, pres.prime - 1), min_size=pres.ngens, max_size=pres.ngens
    ).map(tuple)


def all_elements(pres: PcPresentation):
    import itertools

    return itertools.product(range(pres.prime), repeat=pres.ngens)


# ----------------------------------------------------------------------
# construction and validation


def test_validation_rejects_decreasing_weights():
    with pytest.raises(InvalidPresentation):
        PcPresentation(3, 2, [(), ()], {}, [2, 1], 0)


def test_validation_rejects_bad_conjugate_leading():
    with pytest.raises(InvalidPresentation):
        PcPresentation(3, 2, [(), ()], {(1, 0): ((0, 1),)}, [1, 1], 2)


def test_validation_rejects_out_of_range_exponent():
    with pytest.raises(InvalidPresentation):
        PcPresentation(3, 2, [((1, 3),), ()], {}, [1, 1], 2)


def test_validation_rejects_wrong_defining_count():
    with pytest.raises(InvalidPresentation):
        PcPresentation(3, 2, [(), ()], {}, [1, 1], 1)


def test_trivial_group_is_legal():
    t = PcPresentation(3, 0, [], {}, [], 0)
    assert t.identity() == ()
    assert t.collect([]) == ()
    assert t.consistency_check() == []


# ----------------------------------------------------------------------
# collection


def test_known_product_in_extraspecial():
    es = es27()
    # moving g2 past g1 produces the central correction
    assert es.multiply((0, 1, 0), (1, 0, 0)) == (1, 1, 1)
    assert es.multiply((1, 0, 0), (0, 1, 0)) == (1, 1, 0)


def test_power_relation_carries():
    g = c9c3()
    assert g.power((1, 0, 0), 3) == (0, 0, 1)
    assert g.power((1, 0, 0), 9) == (0, 0, 0)
    assert g.element_order((1, 0, 0)) == 9
    assert g.element_order((0, 1, 0)) == 3


def test_element_order_multisets():
    from collections import Counter

    g = c9c3()
    orders = Counter(g.element_order(v) for v in all_elements(g))
    assert orders == {1: 1, 3: 8, 9: 18}
    es = es27()
    orders = Counter(es.element_order(v) for v in all_elements(es))
    assert orders == {1: 1, 3: 26}
    c = c27()
    orders = Counter(c.element_order(v) for v in all_elements(c))
    assert orders == {1: 1, 3: 2, 9: 6, 27: 18}


@pytest.mark.parametrize("make", [c3c3, es27, c9c3, c27])
def test_collection_is_associative_on_all_pairs(make):
    pres = make()
    elems = list(all_elements(pres))
    for a in elems:
        for b in elems:
            ab = pres.multiply(a, b)
            for c in (elems[0], elems[-1], elems[len(elems) // 2]):
                assert pres.multiply(ab, c) == pres.multiply(a, pres.multiply(b, c))


@given(data=st.data())
def test_inverse_and_power_laws(data):
    pres = data.draw(st.sampled_from([c3c3(), es27(), c9c3(), c27()]))
    a = data.draw(vectors(pres))
    b = data.draw(vectors(pres))
    ident = pres.identity()
    assert pres.multiply(a, pres.inverse(a)) == ident
    assert pres.multiply(pres.inverse(a), a) == ident
    k = data.draw(st.integers(-8, 8))
    # x^k by binary powering equals the iterated product
    step = ident
    base = a if k >= 0 else pres.inverse(a)
    for _ in range(abs(k)):
        step = pres.multiply(step, base)
    assert pres.power(a, k) == step
    # commutator identity [a,b] = a^-1 a^b
    assert pres.commutator(a, b) == pres.multiply(
        pres.inverse(a), pres.conjugate(a, b)
    )


@given(data=st.data())
def test_collect_agrees_with_stepwise_multiplication(data):
    pres = data.draw(st.sampled_from([es27(), c9c3()]))
    n = pres.ngens
    word = data.draw(
        st.lists(
            st.tuples(st.integers(0, n - 1), st.integers(1, 7)), min_size=0, max_size=10
        )
    )
    acc = pres.identity()
    for g, e in word:
        acc = pres.multiply(acc, pres.power(pres.generator(g), e))
    assert pres.collect(word) == acc


def test_word_vector_round_trip():
    v = (0, 2, 0, 1)
    assert vec_of_word(4, word_of_vec(v)) == v
    assert word_of_vec(v) == ((1, 2), (3, 1))


# ----------------------------------------------------------------------
# consistency checking


@pytest.mark.parametrize("make", [c3c3, es27, c9c3, c27])
def test_consistent_presentations_pass(make):
    assert make().consistency_check() == []


def test_inconsistent_presentation_is_reported():
    # g3 is declared to be g1 cubed yet also to have a nontrivial commutator
    # with g1; no group satisfies that, so a test equation must break
    bad = PcPresentation(
        3,
        4,
        [((2, 1),), (), (), ()],
        {(2, 0): ((2, 1), (3, 1))},
        [1, 1, 2, 2],
        2,
    )
    violations = bad.consistency_check()
    assert violations
    assert {v.kind for v in violations} <= {
        "triple",
        "power_left",
        "power_right",
        "power_self",
    }
    assert any(v.kind == "power_self" for v in violations)


def test_weight_bound_restricts_tests():
    g = c9c3()
    assert g.consistency_check(weight_bound=2) == []


# ----------------------------------------------------------------------
# tail accounting


def extend_with_tails(base: PcPresentation, tailmap) -> PcPresentation:
    """The same presentation with one explicit central generator per tail,
    appended to its relation.  Collection there is ground truth for the
    counting collector."""
    n = base.ngens
    nt = max(tailmap.values()) + 1
    pows = []
    for i in range(n):
        w = list(base.power_relations[i])
        t = tailmap.get(("pow", i))
        if t is not None:
            w.append((n + t, 1))
        pows.append(tuple(w))
    pows += [()] * nt
    conjs = dict(base.conjugate_relations)
    for key, t in tailmap.items():
        if key[0] == "conj":
            _, j, i = key
            w = list(conjs.get((j, i), ((j, 1),)))
            w.append((n + t, 1))
            conjs[(j, i)] = tuple(w)
    weights = list(base.weights) + [base.eclass() + 1] * nt
    return PcPresentation(
        3, n + nt, pows, conjs, weights, base.defining_count, validate=False
    )


FULL_TAIL_MAPS = {
    "c3c3": (c3c3, {("pow", 0): 0, ("pow", 1): 1, ("conj", 1, 0): 2}),
    "es27": (
        es27,
        {
            ("pow", 0): 0,
            ("pow", 1): 1,
            ("pow", 2): 2,
            ("conj", 1, 0): 3,
            ("conj", 2, 0): 4,
            ("conj", 2, 1): 5,
        },
    ),
    "c9c3": (
        c9c3,
        {
            ("pow", 0): 0,
            ("pow", 1): 1,
            ("pow", 2): 2,
            ("conj", 1, 0): 3,
            ("conj", 2, 0): 4,
            ("conj", 2, 1): 5,
        },
    ),
    "es27-partial": (es27, {("pow", 1): 0, ("conj", 2, 1): 1}),
}


@pytest.mark.parametrize("name", sorted(FULL_TAIL_MAPS))
def test_tail_counts_match_explicit_tail_generators(name, rng):
    make, tailmap = FULL_TAIL_MAPS[name]
    base = make()
    ext = extend_with_tails(base, tailmap)
    tracked = make()
    tracked.set_tail_map(tailmap)
    n = base.ngens
    for _ in range(300):
        word = tuple(
            (rng.randrange(n), rng.randrange(1, 6))
            for _ in range(rng.randrange(1, 9))
        )
        v, tails = tracked.collect_with_tails(word)
        ve = ext.collect(word)
        assert v == ve[:n]
        assert tuple(tails) == ve[n:]


def test_tail_map_required_for_counting():
    g = c3c3()
    with pytest.raises(Exception):
        g.collect_with_tails([(0, 1)])


# ----------------------------------------------------------------------
# text format


@pytest.mark.parametrize("make", [es27, c9c3, c27])
def test_text_round_trip(make):
    pres = make()
    back = PcPresentation.parse(pres.to_text(header="round trip"))
    assert back.prime == pres.prime
    assert back.ngens == pres.ngens
    assert back.power_relations == pres.power_relations
    assert back.conjugate_relations == pres.conjugate_relations
    assert back.weights == pres.weights
    assert back.defining_count == pres.defining_count


def test_parse_reports_line_numbers():
    with pytest.raises(ParseError) as exc:
        PcPresentation.parse("p 3\nn 2\npow 5 = g2\n")
    assert "line 3" in str(exc.value)


def test_parse_rejects_garbage_directive():
    with pytest.raises(ParseError):
        PcPresentation.parse("p 3\nn 1\nfrobnicate 1\n")


def test_parse_recomputes_weights_and_rejects_misordered_generators():
    # a C9 x C3 written with the square generator in the middle: the series
    # walk finds a non-suffix term and refuses
    text = "p 3\nn 3\npow 1 = g2\n"
    with pytest.raises(InvalidPresentation):
        PcPresentation.parse(text)


def test_parse_assigns_weights_from_series():
    text = "p 3\nn 3\npow 1 = g3\n"   # C9 x C3 with the square last
    pres = PcPresentation.parse(text)
    assert pres.weights == (1, 1, 2)
    assert pres.defining_count == 2

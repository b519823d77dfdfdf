from __future__ import annotations

import pytest
from hypothesis import given, strategies as st

from sigmaforge import aut
from sigmaforge.aut import (
    apply,
    automorphism_group,
    closure_elements,
    compose,
    identity_images,
    invert,
    is_automorphism,
    reduce_generators,
)

from test_pc import c3c3, c9c3, c27, es27
from test_pgen import c27_defs, c9c3_defs, es27_defs, m27_defs


def test_group_orders_of_small_groups():
    assert len(automorphism_group(c3c3())) == 48
    assert len(automorphism_group(c9c3_defs())) == 108
    assert len(automorphism_group(es27_defs())) == 432
    assert len(automorphism_group(m27_defs())) == 54
    # GL(1, 3) on each cyclic layer that survives: Aut(C27) = C18
    assert len(automorphism_group(c27_defs())) == 18


def test_identity_and_generator_swap():
    g = c3c3()
    assert is_automorphism(g, identity_images(g))
    swap = ((0, 1), (1, 0))
    assert is_automorphism(g, swap)
    collapse = ((1, 0), (1, 0))
    assert not is_automorphism(g, collapse)


def test_non_homomorphisms_are_rejected():
    es = es27()
    # swapping the defining generators inverts the commutator, so the
    # central image must follow suit; sending it to itself breaks the
    # relation check
    bad = ((0, 1, 0), (1, 0, 0), (0, 0, 1))
    good = ((0, 1, 0), (1, 0, 0), (0, 0, 2))
    assert not is_automorphism(es, bad)
    assert is_automorphism(es, good)


def _aut_strategy(make):
    pres = make()
    gens = automorphism_group(pres).gens
    return st.sampled_from(gens)


@given(f=_aut_strategy(es27_defs), g=_aut_strategy(es27_defs), h=_aut_strategy(es27_defs))
def test_compose_is_associative(f, g, h):
    pres = es27()
    left = compose(pres, compose(pres, f, g), h)
    right = compose(pres, f, compose(pres, g, h))
    assert left == right


@given(f=_aut_strategy(es27_defs), data=st.data())
def test_inverse_undoes_application(f, data):
    pres = es27()
    vec = data.draw(
        st.tuples(*[st.integers(0, 2) for _ in range(pres.ngens)])
    )
    finv = invert(pres, f)
    assert apply(pres, finv, apply(pres, f, vec)) == vec
    assert compose(pres, finv, f) == identity_images(pres)


@given(f=_aut_strategy(c9c3_defs), data=st.data())
def test_application_is_a_homomorphism(f, data):
    pres = c9c3()
    x = data.draw(st.tuples(*[st.integers(0, 2) for _ in range(3)]))
    y = data.draw(st.tuples(*[st.integers(0, 2) for _ in range(3)]))
    assert apply(pres, f, pres.multiply(x, y)) == pres.multiply(
        apply(pres, f, x), apply(pres, f, y)
    )


def test_closure_reaches_the_whole_group_and_respects_caps():
    g = c3c3()
    gens = automorphism_group(g).gens
    closed = closure_elements(g, gens)
    assert len(closed) == 48
    assert closure_elements(g, gens, cap=10) is None


def test_reduced_generators_keep_the_closure():
    for make in (c3c3, es27_defs):
        pres = make()
        grp = automorphism_group(pres)
        reduced = reduce_generators(pres, grp.gens)
        assert len(reduced) < len(grp.gens)
        assert set(closure_elements(pres, reduced)) == set(
            closure_elements(pres, grp.gens)
        )


def test_reduced_generators_are_memoized_on_the_group():
    grp = automorphism_group(c3c3())
    first = grp.reduced_gens()
    assert grp.reduced_gens() is first


def test_surjectivity_check_catches_frattini_collapse():
    # images inside the Frattini subgroup pass every relation of an
    # elementary group but span nothing
    g = c9c3()
    endo = ((0, 0, 1), (0, 0, 0), (0, 0, 0))
    assert not is_automorphism(g, endo)

from __future__ import annotations

import numpy as np
import pytest

from sigmaforge import aut, gf, oracle, pgen, subgrp
from sigmaforge.pc import PcPresentation
from sigmaforge.pgen import (
    PgenError,
    allowable_subspaces,
    cover_images,
    descendants,
    extend_action,
    p_cover,
)

from test_pc import c3c3, c9c3, c27, es27


def es27_defs() -> PcPresentation:
    """Exponent-3 extraspecial group with its commutator definition recorded,
    as the cover construction requires."""
    return PcPresentation(
        3,
        3,
        [(), (), ()],
        {(1, 0): ((1, 1), (2, 1))},
        [1, 1, 2],
        2,
        definitions={2: ("conj", 1, 0)},
    )


def m27_defs() -> PcPresentation:
    return PcPresentation(
        3,
        3,
        [((2, 1),), (), ()],
        {(1, 0): ((1, 1), (2, 1))},
        [1, 1, 2],
        2,
        definitions={2: ("pow", 0)},
    )


def c9c3_defs() -> PcPresentation:
    return PcPresentation(
        3, 3, [((2, 1),), (), ()], {}, [1, 1, 2], 2, definitions={2: ("pow", 0)}
    )


def c27_defs() -> PcPresentation:
    return PcPresentation(
        3,
        3,
        [((1, 1),), ((2, 1),), ()],
        {},
        [1, 2, 3],
        1,
        definitions={1: ("pow", 0), 2: ("pow", 1)},
    )


def two_generator_census(max_exp: int) -> list[PcPresentation]:
    """Every two-generator group of order up to 3^max_exp, found by iterated
    descendant construction from the elementary group of rank 2."""
    root = c3c3()
    out = [root]
    frontier = [(root, aut.automorphism_group(root))]
    while frontier:
        pres, autgrp = frontier.pop()
        if pres.ngens >= max_exp:
            continue
        cover = p_cover(pres)
        if cover.terminal:
            continue
        for step in range(1, cover.nu + 1):
            if pres.ngens + step > max_exp:
                break
            for child in descendants(cover, autgrp, step):
                out.append(child.pres)
                frontier.append((child.pres, child.aut))
    return out


# ----------------------------------------------------------------------
# covers


def test_cover_shapes_of_order_27_groups():
    cov = p_cover(c3c3())
    assert (cov.pres.ngens, cov.mu, cov.nu) == (5, 3, 3)
    assert not cov.terminal
    assert (p_cover(es27_defs()).mu, p_cover(es27_defs()).nu) == (4, 2)
    assert (p_cover(c9c3_defs()).mu, p_cover(c9c3_defs()).nu) == (3, 1)


def test_modular_group_is_terminal():
    cov = p_cover(m27_defs())
    assert (cov.mu, cov.nu) == (2, 0)
    assert cov.terminal
    assert descendants(cov, aut.automorphism_group(m27_defs()), 1) == []


def test_cover_needs_definitions():
    plain = es27()
    assert plain.definitions is None
    with pytest.raises(PgenError):
        p_cover(plain)


def test_cover_multiplicator_is_central_elementary():
    """The tail generators span a central subgroup of exponent p in the
    cover."""
    for make in (c3c3, es27_defs, c9c3_defs):
        cov = p_cover(make())
        cp = cov.pres
        for t in cov.tail_pos:
            g = cp.generator(t)
            assert cp.power(g, 3) == cp.identity()
            for i in range(cp.ngens):
                assert cp.conjugate(g, cp.generator(i)) == g


def test_allowable_subspace_counts_for_full_nucleus():
    # the rank-2 elementary group's nucleus is the whole multiplicator, so
    # every proper subspace is allowable
    cov = p_cover(c3c3())
    for step, want in ((1, 13), (2, 13), (3, 1)):
        got = list(allowable_subspaces(cov, step))
        assert len(got) == want
        assert gf.count_subspaces(3, 3 - step, 3) == want
    assert list(allowable_subspaces(cov, 4)) == []


def test_allowable_subspaces_respect_the_nucleus():
    # c9c3 has a one-dimensional nucleus inside a three-dimensional
    # multiplicator: exactly the hyperplanes missing it survive
    cov = p_cover(c9c3_defs())
    hyper = list(allowable_subspaces(cov, 1))
    assert 0 < len(hyper) < gf.count_subspaces(3, 2, 3)
    for m in hyper:
        stacked = np.vstack([m, cov.nucleus])
        assert gf.rank(stacked, 3) == cov.mu


# ----------------------------------------------------------------------
# automorphism extension to the cover


def test_cover_images_restrict_to_the_parent_map():
    pres = es27_defs()
    cov = p_cover(pres)
    for images in aut.automorphism_group(pres).gens:
        ci = cover_images(cov, images)
        assert set(ci) == set(range(pres.ngens))
        # non-defining images are forced; defining ones are plain lifts
        for i in range(pres.defining_count):
            assert ci[i][: pres.ngens] == images[i]


def test_extended_action_is_functorial_on_the_multiplicator():
    pres = es27_defs()
    cov = p_cover(pres)
    gens = aut.automorphism_group(pres).gens
    for f in gens[:6]:
        for g in gens[:6]:
            af = extend_action(cov, f)
            ag = extend_action(cov, g)
            fg = aut.compose(pres, f, g)
            # rows are images of basis vectors, so composition reverses
            assert np.array_equal(extend_action(cov, fg), (ag @ af) % 3)


def test_extended_action_is_invertible():
    for make in (c3c3, es27_defs, c9c3_defs):
        pres = make()
        cov = p_cover(pres)
        for images in aut.automorphism_group(pres).gens[:8]:
            assert gf.rank(extend_action(cov, images), 3) == cov.mu


# ----------------------------------------------------------------------
# descendants


def test_first_descendants_of_rank_two_elementary():
    """One step from C3xC3 gives exactly the three two-generator groups of
    order 27, one per isomorphism type."""
    kids = descendants(p_cover(c3c3()), aut.automorphism_group(c3c3()), 1)
    assert len(kids) == 3
    tables = [oracle.realize(k.pres) for k in kids]
    known = [oracle.realize(p()) for p in (c9c3, es27, m27_defs)]
    matches = []
    for t in tables:
        hit = [i for i, w in enumerate(known) if oracle.are_isomorphic(t, w)]
        assert len(hit) == 1
        matches.append(hit[0])
    assert sorted(matches) == [0, 1, 2]


def test_descended_automorphisms_generate_the_full_group():
    """The automorphism generators handed to each order-27 child generate
    its whole automorphism group (checked against a fresh brute force)."""
    kids = descendants(p_cover(c3c3()), aut.automorphism_group(c3c3()), 1)
    sizes = []
    for kid in kids:
        assert kid.aut.complete
        closed = aut.closure_elements(kid.pres, kid.aut.gens)
        brute = aut.automorphism_group(kid.pres)
        assert len(closed) == len(brute)
        sizes.append(len(closed))
    assert sorted(sizes) == [54, 108, 432]


def test_census_counts_to_order_81():
    nodes = two_generator_census(4)
    by_exp: dict[int, list[PcPresentation]] = {}
    for pres in nodes:
        by_exp.setdefault(pres.ngens, []).append(pres)
    assert len(by_exp[2]) == 1
    assert len(by_exp[3]) == 3
    assert len(by_exp[4]) == 9
    for exp in (3, 4):
        tables = [oracle.realize(p) for p in by_exp[exp]]
        for i in range(len(tables)):
            for j in range(i + 1, len(tables)):
                assert not oracle.are_isomorphic(tables[i], tables[j])


def test_children_carry_consistent_weight_data():
    for child in descendants(p_cover(c3c3()), aut.automorphism_group(c3c3()), 2):
        pres = child.pres
        assert pres.ngens == 4
        assert pres.defining_count == 2
        assert max(pres.weights) == pres.eclass()
        # every automorphism generator actually is one
        for g in child.aut.gens:
            assert aut.is_automorphism(pres, g)


def test_step_sizes_beyond_the_nucleus_yield_nothing():
    cov = p_cover(c9c3_defs())
    assert cov.nu == 1
    assert descendants(cov, aut.automorphism_group(c9c3_defs()), 2) == []

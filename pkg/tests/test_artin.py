from __future__ import annotations

import pytest
from hypothesis import given, strategies as st

from sigmaforge import artin, gf, invariants, oracle, subgrp
from sigmaforge.artin import (
    ArtinError,
    Tkt,
    artin_pattern,
    artin_transfer,
    coset_transversal,
    enumerate_layers,
    format_kappa,
    format_tau1,
    format_tau2,
    match_symbol,
    normalize_kappa,
    relabel_kappa,
    transfer_kernel_type,
    transfer_value,
)
from sigmaforge.aut import automorphism_group
from sigmaforge.pc import PcPresentation
from sigmaforge.pgen import descendants, p_cover

from test_pc import c3c3, c9c3, c27, es27
from test_oracle import es27_exp9


def c3cubed() -> PcPresentation:
    return PcPresentation(3, 3, [(), (), ()], {}, [1, 1, 1], 3)


def _table_index(pres: PcPresentation, v) -> int:
    """Index of an exponent vector in the realized table's element order."""
    n = pres.ngens
    return sum(e * 3 ** (n - 1 - k) for k, e in enumerate(v))


def _member_indices(pres: PcPresentation, s: subgrp.Subgroup) -> frozenset[int]:
    return frozenset(_table_index(pres, v) for v in s.elements())


def _pullback(pres: PcPresentation, layers, kernel_q) -> subgrp.Subgroup:
    """Kernel of a transfer as a subgroup of the ambient group."""
    ab = layers.ab
    gens = [ab.lift(r) for r in kernel_q.rows] + list(ab.kernel.rows)
    return subgrp.closure(pres, gens)


def _first_descendant_line(start: PcPresentation, length: int) -> list[PcPresentation]:
    """A deterministic chain of step-1 descendants, preferring the first
    child that itself has children."""
    line = [start]
    while len(line) < length:
        cur = line[-1]
        kids = descendants(p_cover(cur), automorphism_group(cur), 1)
        if not kids:
            raise AssertionError("descendant line ended early")
        chosen = None
        for kid in kids:
            if p_cover(kid.pres).nu > 0:
                chosen = kid.pres
                break
        line.append(chosen if chosen is not None else kids[0].pres)
    return line


# ----------------------------------------------------------------------
# layers


def test_layer_counts_for_elementary_abelianization():
    for make in (c3c3, es27):
        layers = enumerate_layers(make())
        assert len(layers.layer1) == 4
        assert len(layers.layer2) == 1
        assert layers.puncture_index is None
        # the single layer-2 member is the derived subgroup itself
        der = subgrp.derived_subgroup(make())
        assert layers.layer2[0] == der


def test_layer_counts_for_c9c3_shape():
    g = c9c3()
    layers = enumerate_layers(g)
    assert len(layers.layer1) == 4
    assert len(layers.layer2) == 4
    assert layers.puncture_index is not None
    punct = layers.layer1[layers.puncture_index]
    assert invariants.aqi(g, punct) == (1, 1)
    others = [
        u for i, u in enumerate(layers.layer1) if i != layers.puncture_index
    ]
    assert all(invariants.aqi(g, u) == (2,) for u in others)


def test_layer_counts_against_subgroup_oracle():
    """Layer members must be exactly the derived-containing subgroups of
    index 3 and 9 that the table-side lattice enumeration finds."""
    for make in (c3c3, c9c3, es27, es27_exp9):
        pres = make()
        t = oracle.realize(pres)
        der = _member_indices(pres, subgrp.derived_subgroup(pres))
        subs = oracle.enumerate_subgroups(t)
        want1 = {s for s in subs if der <= s and len(s) * 3 == t.order}
        want2 = {s for s in subs if der <= s and len(s) * 9 == t.order}
        layers = enumerate_layers(pres)
        assert {_member_indices(pres, u) for u in layers.layer1} == want1
        assert {_member_indices(pres, u) for u in layers.layer2} == want2


def test_puncture_is_the_unique_noncyclic_image():
    g = c9c3()
    t = oracle.realize(g)
    layers = enumerate_layers(g)
    flags = [
        oracle.is_cyclic_members(t, _member_indices(g, u))
        for u in layers.layer1
    ]
    assert flags.count(False) == 1
    assert flags.index(False) == layers.puncture_index


# ----------------------------------------------------------------------
# the transfer map


def test_abelian_transfer_is_the_cube_map():
    for make in (c3c3, c9c3):
        pres = make()
        layers = enumerate_layers(pres)
        for u in layers.layer1:
            tmap = artin_transfer(pres, u)
            for v in subgrp.full_subgroup(pres).elements():
                q = tmap.source.project(v)
                assert tmap.evaluate(q) == pres.power(v, 3)


def test_transfer_kernels_match_table_oracle():
    groups = [c3c3(), c9c3(), es27(), es27_exp9()]
    line = _first_descendant_line(c3c3(), 4)
    groups += line[2:]  # one group of order 81 and one of order 243
    for pres in groups:
        t = oracle.realize(pres)
        layers = enumerate_layers(pres)
        for u in layers.layer1:
            got = artin_transfer(pres, u).kernel()
            back = _member_indices(pres, _pullback(pres, layers, got))
            want = oracle.transfer_kernel_table(t, _member_indices(pres, u))
            assert back == want


def test_total_capitulation_on_exponent_three_extraspecial():
    k = transfer_kernel_type(es27())
    assert k.entries == (0, 0, 0, 0)
    assert k.punctured_entry is None
    assert format_kappa(k) == "0000"


def test_kernel_type_of_the_other_extraspecial():
    # all four kernels coincide with the image of the first maximal
    # subgroup, which is the cyclic one of order 9
    k = transfer_kernel_type(es27_exp9())
    assert k.entries == (1, 1, 1, 1)
    assert format_kappa(k) == "1111"


def test_kernel_type_of_abelian_c9c3():
    # the cube-map kernel is the 3-torsion, which is the punctured
    # subgroup's image, for all four transfers
    k = transfer_kernel_type(c9c3())
    assert k.entries == (4, 4, 4)
    assert k.punctured_entry == 4
    assert format_kappa(k) == "444;4"
    assert normalize_kappa(k) == k


def test_kernel_type_entries_rederivable_from_stored_kernels():
    for make in (c9c3, es27, es27_exp9):
        pres = make()
        layers = enumerate_layers(pres)
        k = transfer_kernel_type(pres, layers)
        ab = layers.ab
        order = artin._designator_order(layers)
        images = [
            subgrp.closure(ab.pres, [ab.project(r) for r in u.rows])
            for u in order
        ]
        full = subgrp.full_subgroup(ab.pres)
        entries = list(k.entries) + (
            [k.punctured_entry] if k.punctured_entry is not None else []
        )
        for designator, kernel in zip(entries, k.kernels):
            if designator == 0:
                assert kernel == full
            else:
                assert kernel == images[designator - 1]


def test_transfer_rejects_subgroups_missing_the_derived_subgroup():
    es = es27()
    small = subgrp.closure(es, [(1, 0, 0)])
    with pytest.raises(ArtinError):
        artin_transfer(es, small)


def test_kernel_type_needs_rank_two():
    with pytest.raises(ArtinError):
        transfer_kernel_type(c3cubed())
    with pytest.raises(ArtinError):
        transfer_kernel_type(c27())


def test_transversal_independence(rng):
    groups = [c9c3(), es27(), es27_exp9(), _first_descendant_line(c3c3(), 3)[2]]
    for pres in groups:
        layers = enumerate_layers(pres)
        for u in layers.layer1:
            canonical = artin_transfer(pres, u)
            reps = list(u.transversal())
            for _ in range(20):
                scrambled = []
                for r in reps:
                    member = pres.identity()
                    for row in u.rows:
                        member = pres.multiply(
                            member, pres.power(row, rng.randrange(3))
                        )
                    scrambled.append(pres.multiply(member, r))
                rng.shuffle(scrambled)
                assert artin_transfer(pres, u, scrambled).images == canonical.images


def test_bad_transversals_are_rejected():
    g = c9c3()
    u = enumerate_layers(g).layer1[0]
    with pytest.raises(ArtinError):
        artin_transfer(g, u, [g.identity()] * 3)
    with pytest.raises(ArtinError):
        artin_transfer(g, u, [g.identity()])


def _transitive_on_all_chains(pres, subs, limit=None, rng=None):
    full = subgrp.full_subgroup(pres)
    qgens = [
        q
        for q in (pres.generator(a) for a in range(pres.defining_count))
    ]
    chains = [
        (u, v)
        for u in subs
        for v in subs
        if len(v.rows) <= len(u.rows) and u.contains_subgroup(v)
    ]
    if limit is not None and len(chains) > limit:
        chains = rng.sample(chains, limit)
    for u, v in chains:
        vder = subgrp.derived_of(pres, v)
        for g in qgens:
            via_u = transfer_value(pres, full, u, g)
            comp = transfer_value(pres, u, v, via_u, sub_derived=vder)
            direct = transfer_value(pres, full, v, g, sub_derived=vder)
            assert comp == direct


def test_transfer_transitivity_exhaustive_small():
    for make in (es27, c9c3, es27_exp9):
        pres = make()
        _transitive_on_all_chains(pres, subgrp.all_subgroups(pres))


def test_transfer_transitivity_sampled_larger(rng):
    line = _first_descendant_line(c3c3(), 4)
    for pres, limit in ((line[2], 60), (line[3], 25)):
        subs = set()
        els = list(subgrp.full_subgroup(pres).elements())
        for _ in range(40):
            pair = rng.sample(els, 2)
            subs.add(subgrp.closure(pres, pair))
            subs.add(subgrp.closure(pres, pair[:1]))
        _transitive_on_all_chains(pres, sorted(subs, key=lambda s: s.rows), limit, rng)


def test_transversal_helper_matches_canonical():
    g = c9c3()
    full = subgrp.full_subgroup(g)
    u = enumerate_layers(g).layer1[0]
    assert set(coset_transversal(g, full, u)) == set(u.transversal())
    with pytest.raises(ArtinError):
        coset_transversal(g, u, full)


# ----------------------------------------------------------------------
# relabeling and normal forms


def test_normalize_fixed_cases():
    got = normalize_kappa(Tkt((4, 1, 4), 4))
    assert (got.entries, got.punctured_entry) == ((2, 4, 4), 4)
    fixed = normalize_kappa(Tkt((1, 4, 4), 4))
    assert (fixed.entries, fixed.punctured_entry) == ((1, 4, 4), 4)
    flat = normalize_kappa(Tkt((2, 1, 1, 4), None))
    assert (flat.entries, flat.punctured_entry) == ((1, 3, 2, 2), None)


@given(
    st.tuples(*([st.sampled_from([-1, 0, 1, 2, 3, 4])] * 3)),
    st.sampled_from([-1, 0, 1, 2, 3, 4]),
    st.permutations([1, 2, 3]),
)
def test_normalize_is_idempotent_and_relabel_invariant(entries, punct, perm):
    k = Tkt(entries, punct)
    norm = normalize_kappa(k)
    assert normalize_kappa(norm) == norm
    assert normalize_kappa(relabel_kappa(k, tuple(perm))) == norm


@given(
    st.tuples(*([st.sampled_from([-1, 0, 1, 2, 3, 4])] * 4)),
    st.permutations([1, 2, 3, 4]),
)
def test_normalize_without_puncture(entries, perm):
    k = Tkt(entries, None)
    norm = normalize_kappa(k)
    assert normalize_kappa(norm) == norm
    assert normalize_kappa(relabel_kappa(k, tuple(perm))) == norm


def test_relabel_rejects_non_permutations():
    with pytest.raises(ArtinError):
        relabel_kappa(Tkt((1, 2, 3), 4), (1, 1, 2))


def test_format_kappa_markers():
    assert format_kappa(Tkt((1, -1, 0), 4)) == "1*0;4"
    assert format_kappa(Tkt((0, 0, 0, 0), None)) == "0000"


# ----------------------------------------------------------------------
# patterns


def test_pattern_depth_one_of_c9c3():
    pat = artin_pattern(c9c3(), 1)
    assert pat.tau1 == ((2, 1), (1, 1), (2,), (2,), (2,))
    assert pat.tau2 is None and pat.symbols is None
    assert format_tau1(pat.tau1) == "[21; 1², 2, 2, 2]"


def test_pattern_tau1_counts_layer_subgroups():
    for make in (c3c3, c9c3, es27, es27_exp9):
        pres = make()
        pat = artin_pattern(pres, 1)
        assert len(pat.tau1) == 1 + len(enumerate_layers(pres).layer1)


def test_pattern_depth_two_restricts_to_depth_one():
    for make in (c9c3, es27, es27_exp9):
        deep = artin_pattern(make(), 2)
        flat = artin_pattern(make(), 1)
        assert deep.kappa == flat.kappa
        assert deep.tau1 == flat.tau1
        assert len(deep.tau2) == len(deep.tau1) - 1


def test_pattern_depth_two_of_abelian_group_nests_subgroup_types():
    pat = artin_pattern(c9c3(), 2)
    # puncture first: its index-3 subgroups are the four order-3 ones;
    # each cyclic layer-1 subgroup has the single subgroup C3 below
    assert pat.tau2[0] == ((1, 1), ((1,), (1,), (1,), (1,)))
    for u_aqi, comps in pat.tau2[1:]:
        assert u_aqi == (2,)
        assert comps == ((1,),)


def test_pattern_rejects_bad_inputs():
    with pytest.raises(ArtinError):
        artin_pattern(c9c3(), 3)
    with pytest.raises(ArtinError):
        artin_pattern(c27(), 1)


def test_index_three_subgroup_count_at_rank_three():
    # a rank-3 group has (3^3 - 1) / (3 - 1) = 13 subgroups of index 3
    assert gf.count_subspaces(3, 2, 3) == 13
    assert len(subgrp.maximal_subgroups(c3cubed())) == 13
    up = subgrp.induced_presentation(
        c3cubed(), subgrp.full_subgroup(c3cubed())
    )
    assert len(subgrp.maximal_subgroups(up)) == 13


def test_match_symbol_fixed_rows():
    assert match_symbol(((3, 2, 1),) * 3 + ((3, 2),) * 9) == "α"
    assert match_symbol(((3, 2, 1, 1, 1),) * 3 + ((2, 2, 1),) * 9) == "ζ"
    assert match_symbol(((1,),) * 3 + ((1,),) * 9) is None
    assert match_symbol(((1,),) * 12) is None
    assert match_symbol(((3, 2, 1),) * 4 + ((3, 2),) * 9) is None


def test_symbol_table_rows_are_well_formed():
    for (a, b), name in artin.COMPONENT_SYMBOLS.items():
        assert a == tuple(sorted(a, reverse=True))
        assert b == tuple(sorted(b, reverse=True))
        assert match_symbol((a,) * 3 + (b,) * 9) == name


def test_depth_two_rendering():
    pat = artin_pattern(c9c3(), 2)
    assert format_tau2(pat) == "[21; (1²; (1)⁴), (2; 1), (2; 1), (2; 1)]"
    with pytest.raises(ArtinError):
        format_tau2(artin_pattern(c9c3(), 1))

"""Slow, independent group computations on explicit multiplication tables.

Everything in this module deliberately avoids the pc-presentation machinery:
groups are dense multiplication tables, subgroups are element index sets, and
invariants come from first principles (determinantal divisors, cyclic factor
peeling).  The point is cross-checking, so overlap in technique with the rest
of the package would defeat the purpose.  Sizes are capped accordingly:
realization up to order 3^7, isomorphism testing up to 3^6, subgroup
enumeration up to 3^5.

The element indexing convention for realized presentations: element i is the
exponent vector given by the base-p digits of i, most significant digit first
(so index 0 is the identity and generator k has index p^(n-1-k)).
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .pc import PcPresentation

REALIZE_MAX_EXP = 7
ISO_MAX_EXP = 6
ENUM_MAX_EXP = 5


@dataclass(frozen=True)
class MultiplicationTable:
    """A finite group as a dense table: table[i, j] is the index of the
    product of elements i and j, with 0 the identity."""

    order: int
    table: np.ndarray

    def __post_init__(self):
        t = self.table
        if t.shape != (self.order, self.order):
            raise ValueError("table shape does not match order")

    def mul(self, i: int, j: int) -> int:
        return int(self.table[i, j])

    def inv(self, i: int) -> int:
        js = np.nonzero(self.table[i] == 0)[0]
        return int(js[0])


def realize(pres: PcPresentation) -> MultiplicationTable:
    """Multiplication table of a pc-presented group.

    One collection per (element, generator) pair builds right-multiplication
    permutations; table columns then extend each other by peeling the last
    syllable, so the whole table costs n * order collections plus order fancy
    indexings.
    """
    n = pres.ngens
    p = pres.prime
    if n > REALIZE_MAX_EXP:
        raise ValueError(f"realization is capped at order {p}^{REALIZE_MAX_EXP}")
    order = p**n
    weights_pos = [p ** (n - 1 - k) for k in range(n)]

    def vec_of(i: int):
        v = []
        for w in weights_pos:
            v.append((i // w) % p)
        return tuple(v)

    def idx_of(v) -> int:
        return sum(e * w for e, w in zip(v, weights_pos))

    gen_perm = np.empty((n, order), dtype=np.int32)
    for k in range(n):
        g = pres.generator(k)
        for i in range(order):
            gen_perm[k, i] = idx_of(pres.multiply(vec_of(i), g))
    table = np.empty((order, order), dtype=np.int32)
    table[:, 0] = np.arange(order, dtype=np.int32)
    for j in range(1, order):
        v = vec_of(j)
        d = max(k for k in range(n) if v[k])
        prev = j - weights_pos[d]
        table[:, j] = gen_perm[d][table[:, prev]]
    return MultiplicationTable(order, table)


# ----------------------------------------------------------------------
# elementary structure


def element_orders(t: MultiplicationTable) -> np.ndarray:
    out = np.zeros(t.order, dtype=np.int64)
    for i in range(t.order):
        k = 1
        x = i
        while x != 0:
            x = t.mul(x, i)
            k += 1
        out[i] = k
    return out


def center_elements(t: MultiplicationTable) -> list[int]:
    eq = t.table == t.table.T
    return [i for i in range(t.order) if eq[i].all()]


def span(t: MultiplicationTable, gens) -> frozenset[int]:
    """Subgroup generated by the given element indices."""
    seen = {0}
    frontier = [0]
    gens = list(gens)
    while frontier:
        x = frontier.pop()
        for g in gens:
            y = t.mul(x, g)
            if y not in seen:
                seen.add(y)
                frontier.append(y)
    return frozenset(seen)


def commutator_elements(t: MultiplicationTable, a: int, b: int) -> int:
    return t.mul(t.inv(t.mul(b, a)), t.mul(a, b))


def derived_span(t: MultiplicationTable, members) -> frozenset[int]:
    ms = sorted(members)
    gens = set()
    for a in ms:
        for b in ms:
            gens.add(commutator_elements(t, a, b))
    return span(t, gens)


def lower_central_series_table(t: MultiplicationTable) -> list[frozenset[int]]:
    everything = frozenset(range(t.order))
    out = [everything]
    while len(out[-1]) > 1:
        term = out[-1]
        gens = {commutator_elements(t, a, b) for a in term for b in range(t.order)}
        nxt = span(t, gens)
        if nxt == term:
            raise ValueError("series stalls; the table is not nilpotent")
        out.append(nxt)
    return out


def exponent_p_series_table(t: MultiplicationTable, p: int) -> list[frozenset[int]]:
    everything = frozenset(range(t.order))
    out = [everything]
    while len(out[-1]) > 1:
        term = out[-1]
        gens = {commutator_elements(t, a, b) for a in term for b in range(t.order)}
        for a in term:
            x = a
            for _ in range(p - 1):
                x = t.mul(x, a)
            gens.add(x)
        nxt = span(t, gens)
        if nxt == term:
            raise ValueError("series stalls")
        out.append(nxt)
    return out


def derived_series_table(t: MultiplicationTable) -> list[frozenset[int]]:
    out = [frozenset(range(t.order))]
    while len(out[-1]) > 1:
        nxt = derived_span(t, out[-1])
        if nxt == out[-1]:
            raise ValueError("derived series stalls")
        out.append(nxt)
    return out


def is_abelian(t: MultiplicationTable) -> bool:
    return bool((t.table == t.table.T).all())


# ----------------------------------------------------------------------
# abelian invariants by cyclic peeling


def abelian_invariants_table(t: MultiplicationTable, members=None, p: int = 3):
    """Invariant exponents of an abelian (sub)group by peeling off a maximal
    cyclic factor at a time.  Returns descending prime exponents."""
    if members is None:
        members = frozenset(range(t.order))
    ms = sorted(members)
    for a in ms:
        for b in ms:
            if t.mul(a, b) != t.mul(b, a):
                raise ValueError("subgroup is not abelian")
    parts = []
    # peel a maximal cyclic factor of the quotient by what is already chosen
    chosen: list[int] = []
    while True:
        sub = span(t, chosen) & frozenset(ms)
        if len(sub) == len(ms):
            break
        # order of the image of x in the quotient: least k with x^k in sub
        best, best_ord = None, 0
        for x in ms:
            k = 1
            y = x
            while y not in sub:
                y = t.mul(y, x)
                k += 1
            if k > best_ord:
                best, best_ord = x, k
        e = 0
        while best_ord > 1:
            if best_ord % p:
                raise ValueError("order is not a prime power")
            best_ord //= p
            e += 1
        parts.append(e)
        chosen.append(best)
    return tuple(sorted(parts, reverse=True))


# ----------------------------------------------------------------------
# determinantal-divisor Smith form


def _det(mat) -> int:
    """Integer determinant by cofactor expansion; fine for the tiny minors
    this module sees."""
    k = len(mat)
    if k == 0:
        return 1
    if k == 1:
        return mat[0][0]
    total = 0
    for c in range(k):
        if mat[0][c] == 0:
            continue
        minor = [row[:c] + row[c + 1 :] for row in mat[1:]]
        total += (-1) ** c * mat[0][c] * _det(minor)
    return total


def determinantal_divisors(mat) -> list[int]:
    """Smith diagonal via gcds of k-by-k minors.  Exponential in the matrix
    size; callers keep matrices at six rows or fewer."""
    from math import gcd

    m = len(mat)
    n = len(mat[0]) if m else 0
    if min(m, n) > 6:
        raise ValueError("determinantal route is for tiny matrices only")
    prev = 1
    out = []
    for k in range(1, min(m, n) + 1):
        g = 0
        for rows in combinations(range(m), k):
            for cols in combinations(range(n), k):
                sub = [[mat[r][c] for c in cols] for r in rows]
                g = gcd(g, abs(_det(sub)))
        if g == 0:
            out.append(0)
            prev = 0
            continue
        out.append(g // prev if prev else 0)
        prev = g
    return out


# ----------------------------------------------------------------------
# subgroup enumeration


def enumerate_subgroups(t: MultiplicationTable) -> list[frozenset[int]]:
    """Every subgroup, by closing each found subgroup under one more element.

    Breadth-first over the subgroup lattice from the trivial subgroup; capped
    at order 3^5 where the lattice stays in the low thousands.
    """
    if t.order > 3**ENUM_MAX_EXP:
        raise ValueError(f"subgroup enumeration is capped at order 3^{ENUM_MAX_EXP}")
    trivial = frozenset([0])
    seen = {trivial}
    frontier = [trivial]
    while frontier:
        s = frontier.pop()
        for x in range(1, t.order):
            if x in s:
                continue
            bigger = span(t, set(s) | {x})
            if bigger not in seen:
                seen.add(bigger)
                frontier.append(bigger)
    return sorted(seen, key=lambda s: (len(s), sorted(s)))


def is_cyclic_members(t: MultiplicationTable, members) -> bool:
    return any(len(span(t, [x])) == len(members) for x in members)


# ----------------------------------------------------------------------
# transfer on tables


def transfer_kernel_table(t: MultiplicationTable, members) -> frozenset[int]:
    """Kernel of the transfer homomorphism into a subgroup's abelianization.

    Right cosets, arbitrary fixed representatives; the kernel is independent
    of their choice.
    """
    h = frozenset(members)
    reps = []
    covered = set()
    for x in range(t.order):
        if x not in covered:
            reps.append(x)
            covered |= {t.mul(m, x) for m in h}
    hprime = derived_span(t, h)
    rep_of = {}
    for r in reps:
        for m in h:
            rep_of[t.mul(m, r)] = r
    kernel = []
    for g in range(t.order):
        acc = 0
        for r in reps:
            z = t.mul(r, g)
            u = t.mul(z, t.inv(rep_of[z]))
            if u not in h:
                raise AssertionError("transfer factor escaped the subgroup")
            acc = t.mul(acc, u)
        # the product is taken in any order; differences land in the derived
        # subgroup, which is exactly what gets quotiented away
        if acc in hprime:
            kernel.append(g)
    return frozenset(kernel)


# ----------------------------------------------------------------------
# isomorphism testing


def _element_profile(t: MultiplicationTable):
    orders = element_orders(t)
    n = t.order
    cent = []
    for i in range(n):
        row = t.table[i]
        col = t.table[:, i]
        cent.append(int((row == col).sum()))
    prof = []
    for i in range(n):
        cube = t.mul(t.mul(i, i), i)
        prof.append((int(orders[i]), cent[i], int(orders[cube]), cent[cube]))
    return prof


def _line_subgroups(t: MultiplicationTable) -> list[frozenset[int]]:
    """Subgroups generated by the Frattini subgroup and one element.  For a
    two-generator group these are exactly the maximal subgroups; in general
    they are still an isomorphism-invariant family."""
    frat_gens = set()
    for i in range(t.order):
        frat_gens.add(t.mul(t.mul(i, i), i))
    for a in range(t.order):
        for b in range(t.order):
            frat_gens.add(commutator_elements(t, a, b))
    frat = sorted(span(t, frat_gens))
    out: set[frozenset[int]] = set()
    for x in range(t.order):
        if x not in frat:
            x2 = t.mul(x, x)
            out.add(
                frozenset(t.mul(f, e) for e in (0, x, x2) for f in frat)
            )
    return sorted(out, key=sorted)


def fingerprint(t: MultiplicationTable) -> tuple:
    """Isomorphism-invariant signature cheap enough to bucket many groups
    before any search: element profiles, series shapes, and per-line-subgroup
    order statistics.  Equal fingerprints do not prove isomorphism; distinct
    ones refute it."""
    prof = _element_profile(t)
    orders = element_orders(t)
    hist = tuple(sorted(Counter(prof).items()))
    lcs = tuple(len(m) for m in lower_central_series_table(t))
    der = tuple(len(m) for m in derived_series_table(t))
    eps = tuple(len(m) for m in exponent_p_series_table(t, 3))
    z = len(center_elements(t))
    msig = []
    for m in _line_subgroups(t):
        ms = sorted(m)
        inner = tuple(sorted(Counter(int(orders[i]) for i in ms).items()))
        sub = t.table[np.ix_(ms, ms)]
        msig.append((len(ms), bool((sub == sub.T).all()), inner))
    return (t.order, z, lcs, der, eps, hist, tuple(sorted(msig)))


def _refined_colors(t: MultiplicationTable) -> list[int]:
    """Partition of the elements into classes no isomorphism can mix.

    Starts from the element profiles and repeatedly re-colors each element
    by the multiset of (color of b, color of a*b) pairs over the whole
    group, until the partition stops splitting.  Color ids are ranks of the
    signature values, so two isomorphic tables produce identical colorings
    up to the isomorphism.
    """
    n = t.order
    base = _element_profile(t)
    ranks = {v: r for r, v in enumerate(sorted(set(base)))}
    colors = np.array([ranks[v] for v in base], dtype=np.int64)
    ncol = len(ranks)
    inv = np.array([t.inv(i) for i in range(n)], dtype=np.int64)
    cube = np.array([t.mul(t.mul(i, i), i) for i in range(n)], dtype=np.int64)
    while True:
        sigs = []
        for i in range(n):
            trip = np.empty((n, 3), dtype=np.int64)
            trip[:, 0] = colors
            trip[:, 1] = colors[t.table[i]]
            trip[:, 2] = colors[t.table[:, i]]
            order = np.lexsort((trip[:, 2], trip[:, 1], trip[:, 0]))
            sigs.append(
                (
                    int(colors[i]),
                    int(colors[inv[i]]),
                    int(colors[cube[i]]),
                    trip[order].tobytes(),
                )
            )
        ranks = {v: r for r, v in enumerate(sorted(set(sigs)))}
        if len(ranks) == ncol:
            # a round that splits nothing is a fixed point: the new color is
            # a function of the old one, so the partition is unchanged
            return [int(c) for c in colors]
        colors = np.array([ranks[s] for s in sigs], dtype=np.int64)
        ncol = len(ranks)


def _minimal_generators(t: MultiplicationTable) -> list[int]:
    gens: list[int] = []
    current = span(t, gens)
    orders = element_orders(t)
    by_order = sorted(range(t.order), key=lambda i: -orders[i])
    while len(current) < t.order:
        for x in by_order:
            if x not in current:
                gens.append(x)
                current = span(t, gens)
                break
    return gens


def are_isomorphic(t1: MultiplicationTable, t2: MultiplicationTable) -> bool:
    """Isomorphism test by generator-image search with profile pruning and a
    vectorized final verification."""
    if t1.order != t2.order:
        return False
    if t1.order > 3**ISO_MAX_EXP:
        raise ValueError(f"isomorphism testing is capped at order 3^{ISO_MAX_EXP}")
    ab1, ab2 = is_abelian(t1), is_abelian(t2)
    if ab1 != ab2:
        return False
    if ab1:
        return abelian_invariants_table(t1) == abelian_invariants_table(t2)
    prof1 = _refined_colors(t1)
    prof2 = _refined_colors(t2)
    if Counter(prof1) != Counter(prof2):
        return False
    gens = _minimal_generators(t1)
    candidates = [
        [j for j in range(t2.order) if prof2[j] == prof1[g]] for g in gens
    ]

    def pair_sig(t, prof, a: int, b: int):
        ab = t.mul(a, b)
        ba = t.mul(b, a)
        comm = t.mul(t.inv(ba), ab)
        return (prof[ab], prof[ba], prof[comm])

    src_sigs = {
        (m, k): pair_sig(t1, prof1, gens[m], gens[k])
        for k in range(len(gens))
        for m in range(k)
    }

    def try_images(images) -> bool:
        phi = np.full(t1.order, -1, dtype=np.int64)
        phi[0] = 0
        frontier = [0]
        while frontier:
            x = frontier.pop()
            for g, img in zip(gens, images):
                y = t1.mul(x, g)
                fy = t2.mul(int(phi[x]), img)
                if phi[y] == -1:
                    phi[y] = fy
                    frontier.append(y)
                elif phi[y] != fy:
                    return False
        if (phi < 0).any():
            return False
        if len(set(phi.tolist())) != t1.order:
            return False
        return bool((phi[t1.table] == t2.table[phi][:, phi]).all())

    def rec(k: int, images: list[int]) -> bool:
        if k == len(gens):
            return try_images(images)
        for c in candidates[k]:
            if any(
                pair_sig(t2, prof2, images[m], c) != src_sigs[m, k]
                for m in range(k)
            ):
                continue
            if rec(k + 1, images + [c]):
                return True
        return False

    return rec(0, [])

"""Coset-product transfer maps and the layered invariants built on them.

For a subgroup U of a finite p-group G, the transfer (Verlagerung) is a
homomorphism from G into U/U' assembled from coset representatives.  Its
kernel, read across the index-p subgroups above the derived subgroup, is a
sharp invariant of G; pairing it with the abelian quotient invariants of
those subgroups, and of their own index-p subgroups one layer further down,
gives the pattern objects this module produces.  All maps are represented
on the abelianization, where the transfer factors anyway.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from itertools import permutations

from . import invariants, subgrp
from .invariants import Aqi
from .pc import PcError, PcPresentation, Vec


class ArtinError(PcError):
    """A subgroup or rank precondition of a transfer computation failed."""


KERNEL_TOTAL = 0
KERNEL_UNMATCHED = -1

#: Greek labels for recognized pairs (triple block, nine-fold block) of
#: nested abelian quotient invariants, each written as descending
#: logarithmic parts.
COMPONENT_SYMBOLS: dict[tuple[Aqi, Aqi], str] = {
    ((3, 2, 1), (3, 2)): "α",
    ((3, 2, 1), (2, 2, 1)): "β",
    ((3, 1, 1, 1), (3, 2)): "γ",
    ((2, 2, 1, 1), (2, 2, 1)): "δ",
    ((3, 2, 1, 1), (2, 2, 1)): "ε",
    ((3, 2, 1, 1, 1), (2, 2, 1)): "ζ",
    ((3, 2, 1, 1), (3, 2)): "η",
    ((2, 2, 2, 1), (2, 2, 1)): "ϑ",
    ((4, 1, 1, 1, 1), (3, 2)): "ξ",
}


# ----------------------------------------------------------------------
# layer labeling


@dataclass(frozen=True)
class LayerLabeling:
    """The subgroups between the derived subgroup and the whole group.

    ``layer1`` holds those of index p and ``layer2`` those of index p^2,
    each sorted by the canonical rows of their image in the abelianization,
    so the labels do not depend on construction order.  ``puncture_index``
    points into ``layer1`` at the unique subgroup with non-cyclic image
    when exactly one exists (the distinguished slot of a punctured kernel
    type); for an elementary abelianization it is None.
    """

    layer1: tuple[subgrp.Subgroup, ...]
    layer2: tuple[subgrp.Subgroup, ...]
    puncture_index: int | None
    ab: subgrp.Quotient = field(compare=False, repr=False)


def _order_exp(pres: PcPresentation, v: Vec) -> int:
    e = 0
    while any(v):
        v = pres.power(v, pres.prime)
        e += 1
    return e


def _is_cyclic(pres: PcPresentation, s: subgrp.Subgroup) -> bool:
    if not s.rows:
        return True
    return any(_order_exp(pres, v) == s.order_exp for v in s.elements())


def enumerate_layers(pres: PcPresentation) -> LayerLabeling:
    """Label the derived-subgroup-containing subgroups of index p and p^2.

    Enumeration happens inside the abelianization, whose subgroup lattice
    is small; sorted images are then pulled back to ambient subgroups.
    """
    der = subgrp.derived_subgroup(pres)
    ab = subgrp.quotient(pres, der)
    q = ab.pres
    tiers: dict[int, list[subgrp.Subgroup]] = {1: [], 2: []}
    for s in subgrp.all_subgroups(q):
        idx = q.ngens - s.order_exp
        if idx in tiers:
            tiers[idx].append(s)
    for bucket in tiers.values():
        bucket.sort(key=lambda s: s.rows)

    def pullback(s: subgrp.Subgroup) -> subgrp.Subgroup:
        gens = [ab.lift(r) for r in s.rows] + list(der.rows)
        return subgrp.closure(pres, gens)

    layer1 = tuple(pullback(s) for s in tiers[1])
    layer2 = tuple(pullback(s) for s in tiers[2])
    puncture = None
    if any(e > 1 for e in invariants.aqi(q)):
        hits = [i for i, s in enumerate(tiers[1]) if not _is_cyclic(q, s)]
        if len(hits) == 1:
            puncture = hits[0]
    return LayerLabeling(layer1, layer2, puncture, ab)


# ----------------------------------------------------------------------
# the transfer


def coset_transversal(
    pres: PcPresentation, sup: subgrp.Subgroup, sub: subgrp.Subgroup
) -> list[Vec]:
    """Canonical representatives of the cosets of sub inside sup."""
    if not sup.contains_subgroup(sub):
        raise ArtinError("transversal requested for a non-nested pair")
    if len(sup.rows) == pres.ngens:
        return list(sub.transversal())
    reps: dict[Vec, None] = {}
    for u in sup.elements():
        reps.setdefault(sub.coset_rep(u), None)
    return list(reps)


def transfer_value(
    pres: PcPresentation,
    sup: subgrp.Subgroup,
    sub: subgrp.Subgroup,
    g: Vec,
    transversal: list[Vec] | None = None,
    sub_derived: subgrp.Subgroup | None = None,
) -> Vec:
    """Transfer of g from sup into sub, as a canonical [sub,sub]-coset rep.

    Each coset representative r contributes the factor carrying r*g back to
    the representative of its own coset; the factors all lie in sub and the
    product is taken modulo the derived subgroup of sub, which also makes
    the multiplication order immaterial.  A caller-supplied transversal is
    checked, not trusted.
    """
    if not sup.contains(g):
        raise ArtinError("transfer argument lies outside the source subgroup")
    if not sup.contains_subgroup(sub):
        raise ArtinError("transfer target is not inside the source subgroup")
    if transversal is None:
        transversal = coset_transversal(pres, sup, sub)
    index = pres.prime ** (len(sup.rows) - len(sub.rows))
    by_coset = {sub.coset_rep(t): t for t in transversal}
    if len(transversal) != index or len(by_coset) != index:
        raise ArtinError("not a transversal of the target in the source")
    if not all(sup.contains(t) for t in transversal):
        raise ArtinError("transversal leaves the source subgroup")
    der = sub_derived if sub_derived is not None else subgrp.derived_of(pres, sub)
    acc = pres.identity()
    for r in transversal:
        rg = pres.multiply(r, g)
        # the factor must come back to the transversal's own member of the
        # target coset, not to the canonical representative
        mate = by_coset[sub.coset_rep(rg)]
        factor = pres.multiply(rg, pres.inverse(mate))
        acc = pres.multiply(acc, factor)
    return der.coset_rep(acc)


@dataclass(frozen=True)
class TransferMap:
    """A transfer homomorphism from the abelianization into U/U'.

    ``images`` lists, per generator of the abelianization presentation, the
    canonical U'-coset representative of its transfer value in ambient
    coordinates.  Evaluation multiplies image powers along a coordinate
    vector, exact because the target is abelian.
    """

    source: subgrp.Quotient = field(repr=False)
    sub: subgrp.Subgroup = field(repr=False)
    sub_derived: subgrp.Subgroup = field(repr=False)
    images: tuple[Vec, ...]

    def evaluate(self, vq: Vec) -> Vec:
        pres = self.source.source
        acc = pres.identity()
        for img, e in zip(self.images, vq):
            if e:
                acc = pres.multiply(acc, pres.power(img, e))
        return self.sub_derived.coset_rep(acc)

    def kernel(self) -> subgrp.Subgroup:
        """The kernel, as a subgroup of the abelianization presentation."""
        q = self.source.pres
        members = [
            v
            for v in subgrp.full_subgroup(q).elements()
            if not any(self.evaluate(v))
        ]
        return subgrp.closure(q, members)


def artin_transfer(
    pres: PcPresentation,
    u: subgrp.Subgroup,
    transversal: list[Vec] | None = None,
) -> TransferMap:
    """Transfer from the whole group into u, on abelianization generators.

    Only subgroups containing the derived subgroup are accepted; the
    pattern computations never need any other, and restricting here keeps
    the map an invariant of the abelianization on both sides.
    """
    der = subgrp.derived_subgroup(pres)
    if not u.contains_subgroup(der):
        raise ArtinError("transfer target does not contain the derived subgroup")
    q = subgrp.quotient(pres, der)
    uder = subgrp.derived_of(pres, u)
    full = subgrp.full_subgroup(pres)
    if transversal is None:
        transversal = list(u.transversal())
    images = tuple(
        transfer_value(
            pres, full, u, q.lift(q.pres.generator(a)), transversal, uder
        )
        for a in range(q.pres.ngens)
    )
    return TransferMap(q, u, uder, images)


# ----------------------------------------------------------------------
# kernel types


@dataclass(frozen=True)
class Tkt:
    """Kernel designators of the layer-1 transfers.

    ``entries`` covers the non-punctured subgroups in canonical order and
    ``punctured_entry`` the distinguished one (None without a puncture).
    Designator 0 means the kernel is the whole abelianization, j > 0 that
    it equals the image of layer-1 subgroup j in the designator numbering
    (non-punctured first, puncture last), and -1 that it matches neither;
    the kernels themselves ride along in ``kernels`` in the same order so
    a designator can always be re-derived.
    """

    entries: tuple[int, ...]
    punctured_entry: int | None
    kernels: tuple[subgrp.Subgroup, ...] | None = field(
        default=None, compare=False, repr=False
    )


def _designator_order(layers: LayerLabeling) -> list[subgrp.Subgroup]:
    if layers.puncture_index is None:
        return list(layers.layer1)
    rest = [
        u for i, u in enumerate(layers.layer1) if i != layers.puncture_index
    ]
    return rest + [layers.layer1[layers.puncture_index]]


def transfer_kernel_type(
    pres: PcPresentation, layers: LayerLabeling | None = None
) -> Tkt:
    """Kernel designators of all layer-1 transfers of a rank-2 group."""
    if len(invariants.aqi(pres)) != 2:
        raise ArtinError("kernel types are defined for rank-2 abelianizations")
    if layers is None:
        layers = enumerate_layers(pres)
    ab = layers.ab
    q = ab.pres
    order = _designator_order(layers)
    images = [
        subgrp.closure(q, [ab.project(r) for r in u.rows]) for u in order
    ]
    full = subgrp.full_subgroup(q)
    designators = []
    kernels = []
    for u in order:
        k = artin_transfer(pres, u).kernel()
        kernels.append(k)
        if k == full:
            designators.append(KERNEL_TOTAL)
            continue
        hits = [j for j, img in enumerate(images, start=1) if img == k]
        designators.append(hits[0] if hits else KERNEL_UNMATCHED)
    if layers.puncture_index is None:
        return Tkt(tuple(designators), None, tuple(kernels))
    return Tkt(tuple(designators[:-1]), designators[-1], tuple(kernels))


def relabel_kappa(k: Tkt, perm: tuple[int, ...]) -> Tkt:
    """Apply a relabeling of the non-punctured subgroups to a kernel type.

    ``perm`` sends old label i to perm[i-1]; positions and designator
    values move together, while 0, the unmatched marker, and the puncture
    designator are fixed points.
    """
    n = len(k.entries)
    if sorted(perm) != list(range(1, n + 1)):
        raise ArtinError("relabeling must permute the non-punctured labels")
    rho = {KERNEL_TOTAL: KERNEL_TOTAL, KERNEL_UNMATCHED: KERNEL_UNMATCHED}
    for i, v in enumerate(perm, start=1):
        rho[i] = v
    if k.punctured_entry is not None:
        rho[n + 1] = n + 1
    inv = {v: i for i, v in enumerate(perm, start=1)}
    entries = tuple(rho[k.entries[inv[pos] - 1]] for pos in range(1, n + 1))
    punct = None if k.punctured_entry is None else rho[k.punctured_entry]
    kernels = None
    if k.kernels is not None:
        moved = [k.kernels[inv[pos] - 1] for pos in range(1, n + 1)]
        if k.punctured_entry is not None:
            moved.append(k.kernels[-1])
        kernels = tuple(moved)
    return Tkt(entries, punct, kernels)


def normalize_kappa(k: Tkt) -> Tkt:
    """Lexicographically least relabeling of the non-punctured slots.

    Brute force over all permutations; the counts in play never exceed
    4! = 24.  Idempotent, and constant on relabeling orbits.
    """
    best = None
    best_key = None
    for perm in permutations(range(1, len(k.entries) + 1)):
        cand = relabel_kappa(k, perm)
        key = cand.entries + (
            (cand.punctured_entry,) if cand.punctured_entry is not None else ()
        )
        if best_key is None or key < best_key:
            best_key, best = key, cand
    return best


def format_kappa(k: Tkt) -> str:
    """Digit-string rendering, puncture after a semicolon, marker as *."""

    def digit(d: int) -> str:
        return "*" if d < 0 else str(d)

    body = "".join(digit(d) for d in k.entries)
    if k.punctured_entry is None:
        return body
    return body + ";" + digit(k.punctured_entry)


# ----------------------------------------------------------------------
# layered patterns


@dataclass(frozen=True)
class ArtinPattern:
    """Kernel type with nested abelian invariants, one or two layers deep.

    ``tau1`` opens with the group's own abelian quotient invariants and
    continues with those of every layer-1 subgroup, puncture first when one
    exists.  At depth 2, ``tau2`` pairs each layer-1 subgroup's invariants
    with the sorted multiset over its own index-p subgroups, and
    ``symbols`` carries the Greek label of any recognized block
    decomposition, aligned with ``tau2``; both stay None at depth 1.
    """

    kappa: Tkt
    tau1: tuple[Aqi, ...]
    tau2: tuple[tuple[Aqi, tuple[Aqi, ...]], ...] | None
    symbols: tuple[str | None, ...] | None


def _tau_order(layers: LayerLabeling) -> list[subgrp.Subgroup]:
    if layers.puncture_index is None:
        return list(layers.layer1)
    rest = [
        u for i, u in enumerate(layers.layer1) if i != layers.puncture_index
    ]
    return [layers.layer1[layers.puncture_index]] + rest


def match_symbol(components: tuple[Aqi, ...]) -> str | None:
    """Greek label of a pair of invariant blocks with multiplicities 3 and 9.

    Expects the twelve components left after removing the distinguished
    one; any other multiplicity shape matches nothing.
    """
    counts = Counter(components)
    triple = [a for a, c in counts.items() if c == 3]
    nine = [a for a, c in counts.items() if c == 9]
    if len(components) != 12 or len(triple) != 1 or len(nine) != 1:
        return None
    return COMPONENT_SYMBOLS.get((triple[0], nine[0]))


def _symbol_of(components: tuple[Aqi, ...]) -> str | None:
    counts = Counter(components)
    singles = [a for a, c in counts.items() if c == 1]
    if len(singles) != 1:
        return None
    rest = list(components)
    rest.remove(singles[0])
    return match_symbol(tuple(rest))


def artin_pattern(pres: PcPresentation, depth: int = 1) -> ArtinPattern:
    """Kernel type plus nested invariants of a rank-2 group.

    Depth 1 stops at the layer-1 subgroups' own invariants; depth 2 adds,
    for each of them, the invariant multiset of its index-p subgroups
    (every one of which contains its derived subgroup, so no filtering is
    needed) and the symbol lookup on the multiplicity blocks.
    """
    if depth not in (1, 2):
        raise ArtinError("pattern depth must be 1 or 2")
    if len(invariants.aqi(pres)) != 2:
        raise ArtinError("patterns are defined for rank-2 abelianizations")
    layers = enumerate_layers(pres)
    kappa = transfer_kernel_type(pres, layers)
    order = _tau_order(layers)
    tau1 = (invariants.aqi(pres),) + tuple(
        invariants.aqi(pres, u) for u in order
    )
    if depth == 1:
        return ArtinPattern(kappa, tau1, None, None)
    tau2 = []
    symbols = []
    for u in order:
        up = subgrp.induced_presentation(pres, u)
        comps = tuple(
            sorted(
                invariants.aqi(up, m) for m in subgrp.maximal_subgroups(up)
            )
        )
        tau2.append((invariants.aqi(pres, u), comps))
        symbols.append(_symbol_of(comps))
    return ArtinPattern(kappa, tau1, tuple(tau2), tuple(symbols))


# ----------------------------------------------------------------------
# rendering


def format_tau1(tau1: tuple[Aqi, ...]) -> str:
    head = invariants.format_aqi(tau1[0])
    rest = ", ".join(invariants.format_aqi(c) for c in tau1[1:])
    return f"[{head}; {rest}]"


def _format_multiset(comps: tuple[Aqi, ...]) -> str:
    counts = Counter(comps)
    parts = []
    for a in sorted(counts):
        token = invariants.format_aqi(a)
        if counts[a] > 1:
            token = f"({token}){invariants._sup(counts[a])}"
        parts.append(token)
    return ", ".join(parts)


def format_tau2(pattern: ArtinPattern) -> str:
    """Bracket rendering of a depth-2 pattern in logarithmic notation.

    A component with a recognized symbol prints as its distinguished
    invariant followed by the symbol; otherwise the whole multiset is
    written out with multiplicity superscripts.
    """
    if pattern.tau2 is None:
        raise ArtinError("rendering a second layer needs a depth-2 pattern")
    head = invariants.format_aqi(pattern.tau1[0])
    blocks = []
    for (u_aqi, comps), sym in zip(pattern.tau2, pattern.symbols):
        if sym is not None:
            counts = Counter(comps)
            single = next(a for a, c in counts.items() if c == 1)
            inner = f"{invariants.format_aqi(single)}, {sym}"
        else:
            inner = _format_multiset(comps)
        blocks.append(f"({invariants.format_aqi(u_aqi)}; {inner})")
    return f"[{head}; " + ", ".join(blocks) + "]"

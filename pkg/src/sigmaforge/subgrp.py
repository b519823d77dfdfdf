"""Subgroups of pc-presented p-groups: sifting, closure, series, quotients.

A subgroup is stored as a canonical induced generating sequence: one row per
leading depth, leading exponent 1, zero entries at every deeper row's leading
depth.  That form is unique per subgroup, so row tuples double as dictionary
keys.  All algorithms are depth-sweep sifting in the style of non-commutative
Gaussian elimination; group sizes in this package are tiny (order at most
3^24), so no effort goes into asymptotics.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product as _iproduct

from . import gf
from .pc import PcPresentation, Vec, word_of_vec


def depth(v: Vec, n: int) -> int:
    """Index of the first nonzero coordinate, or n for the identity."""
    for i, e in enumerate(v):
        if e:
            return i
    return n


@dataclass(frozen=True)
class Subgroup:
    """Canonical induced generating sequence of a subgroup.

    ``rows`` are in strictly increasing leading depth; ``leading`` caches the
    depths.  Equality and hashing look at the rows only, so subgroups of the
    same presentation compare structurally.
    """

    pres: PcPresentation = field(compare=False, hash=False, repr=False)
    rows: tuple[Vec, ...]
    leading: tuple[int, ...] = field(init=False)

    def __post_init__(self):
        n = self.pres.ngens
        object.__setattr__(self, "leading", tuple(depth(r, n) for r in self.rows))

    @property
    def order_exp(self) -> int:
        return len(self.rows)

    def coset_rep(self, v: Vec) -> Vec:
        """Canonical representative of the left coset S*v: the unique member
        with zero coordinates at every leading depth of S."""
        pres = self.pres
        p = pres.prime
        cur = v
        for pos, d in enumerate(self.leading):
            e = cur[d]
            if e:
                cur = pres.multiply(pres.power(self.rows[pos], p - e), cur)
        return cur

    def contains(self, v: Vec) -> bool:
        return not any(self.coset_rep(v))

    def contains_subgroup(self, other: "Subgroup") -> bool:
        return all(self.contains(r) for r in other.rows)

    def express(self, v: Vec) -> list[int]:
        """Exponents of v along the rows (ascending depth); raises on
        non-members."""
        pres = self.pres
        coeffs = []
        cur = v
        for pos, d in enumerate(self.leading):
            e = cur[d]
            coeffs.append(e)
            if e:
                cur = pres.multiply(pres.inverse(pres.power(self.rows[pos], e)), cur)
        if any(cur):
            raise ValueError("element is not in the subgroup")
        return coeffs

    def transversal(self):
        """All canonical coset representatives, in lexicographic coordinate
        order.  The representative set is exactly the vectors vanishing on the
        leading depths."""
        pres = self.pres
        n = pres.ngens
        free = [d for d in range(n) if d not in set(self.leading)]
        for combo in _iproduct(range(pres.prime), repeat=len(free)):
            v = [0] * n
            for d, e in zip(free, combo):
                v[d] = e
            yield tuple(v)

    def elements(self):
        """Every member, by iterating exponents along the rows."""
        pres = self.pres
        for combo in _iproduct(range(pres.prime), repeat=len(self.rows)):
            acc = pres.identity()
            for row, e in zip(self.rows, combo):
                if e:
                    acc = pres.multiply(acc, pres.power(row, e))
            yield acc

    def __repr__(self) -> str:
        return f"Subgroup(order_exp={len(self.rows)}, leading={self.leading})"


def closure(pres: PcPresentation, gens, conjugators=()) -> Subgroup:
    """Subgroup generated by ``gens``, optionally closed under conjugation by
    ``conjugators`` (pass the group generators for a normal closure).

    Sifting closure: maintain one row per depth, queue every pair product both
    ways plus p-th powers, and conjugates of each inserted row.  Rows are never
    replaced once inserted, so each pair is processed after both members are
    final.
    """
    n = pres.ngens
    p = pres.prime
    table: dict[int, Vec] = {}

    def sift(v):
        while True:
            d = depth(v, n)
            if d == n:
                return None
            row = table.get(d)
            if row is None:
                return v
            v = pres.multiply(pres.inverse(pres.power(row, v[d])), v)

    queue = [v for v in gens if any(v)]
    while queue:
        r = sift(queue.pop())
        if r is None:
            continue
        d = depth(r, n)
        r = pres.power(r, pow(r[d], -1, p))
        table[d] = r
        queue.append(pres.power(r, p))
        for e, row in list(table.items()):
            if e != d:
                queue.append(pres.multiply(row, r))
                queue.append(pres.multiply(r, row))
        for c in conjugators:
            queue.append(pres.conjugate(r, c))
    return Subgroup(pres, _canonical_rows(pres, table))


def _canonical_rows(pres: PcPresentation, table: dict[int, Vec]) -> tuple[Vec, ...]:
    ds = sorted(table)
    rows = dict(table)
    for idx in range(len(ds) - 1, -1, -1):
        r = rows[ds[idx]]
        for e in ds[idx + 1 :]:
            c = r[e]
            if c:
                r = pres.multiply(r, pres.power(rows[e], pres.prime - c))
        rows[ds[idx]] = r
    return tuple(rows[d] for d in ds)


def subgroup_from_canonical_rows(pres: PcPresentation, rows) -> Subgroup:
    """Wrap rows already known to be a canonical sequence (no closure run)."""
    return Subgroup(pres, tuple(rows))


def trivial_subgroup(pres: PcPresentation) -> Subgroup:
    return Subgroup(pres, ())


def full_subgroup(pres: PcPresentation) -> Subgroup:
    return Subgroup(pres, tuple(pres.generator(i) for i in range(pres.ngens)))


def suffix_subgroup(pres: PcPresentation, start: int) -> Subgroup:
    """The (normal) subgroup generated by the generators from ``start`` on."""
    return Subgroup(pres, tuple(pres.generator(i) for i in range(start, pres.ngens)))


def normal_closure(pres: PcPresentation, gens) -> Subgroup:
    conj = [pres.generator(i) for i in range(pres.ngens)]
    return closure(pres, gens, conjugators=conj)


def is_normal(pres: PcPresentation, s: Subgroup) -> bool:
    return all(
        s.contains(pres.conjugate(r, pres.generator(i)))
        for r in s.rows
        for i in range(pres.ngens)
    )


def derived_of(pres: PcPresentation, s: Subgroup) -> Subgroup:
    """Commutator subgroup of s (normal closure inside s of row commutators)."""
    gens = [
        pres.commutator(a, b) for i, a in enumerate(s.rows) for b in s.rows[i + 1 :]
    ]
    return closure(pres, gens, conjugators=s.rows)


def derived_subgroup(pres: PcPresentation) -> Subgroup:
    return derived_of(pres, full_subgroup(pres))


def exponent_p_step(pres: PcPresentation, s: Subgroup) -> Subgroup:
    """[S,G] S^p for a normal S: one step down the lower exponent-p central
    series when iterated from the whole group."""
    gens = [pres.power(r, pres.prime) for r in s.rows]
    gens += [
        pres.commutator(r, pres.generator(i))
        for r in s.rows
        for i in range(pres.ngens)
    ]
    return normal_closure(pres, gens)


def lower_exponent_p_series(pres: PcPresentation) -> list[Subgroup]:
    """Descending series G = L1 > L2 > ... > 1 with L_{k+1} = [L_k,G] L_k^p."""
    out = [full_subgroup(pres)]
    while out[-1].rows:
        nxt = exponent_p_step(pres, out[-1])
        if nxt.rows == out[-1].rows:
            raise ValueError("exponent-p central series does not reach the identity")
        out.append(nxt)
    return out


def lower_central_series(pres: PcPresentation) -> list[Subgroup]:
    out = [full_subgroup(pres)]
    gens_g = [pres.generator(i) for i in range(pres.ngens)]
    while out[-1].rows:
        term = out[-1]
        gens = [pres.commutator(r, g) for r in term.rows for g in gens_g]
        nxt = normal_closure(pres, gens)
        if nxt.rows == term.rows:
            raise ValueError("lower central series does not reach the identity")
        out.append(nxt)
    return out


def derived_series(pres: PcPresentation) -> list[Subgroup]:
    out = [full_subgroup(pres)]
    while out[-1].rows:
        nxt = derived_of(pres, out[-1])
        if nxt.rows == out[-1].rows:
            raise ValueError("derived series does not reach the identity")
        out.append(nxt)
    return out


def nilpotency_class(pres: PcPresentation) -> int:
    """Largest c with a nontrivial c-th lower central term (0 for the trivial
    group): the series list holds terms 1..c+1."""
    return len(lower_central_series(pres)) - 1


def derived_length(pres: PcPresentation) -> int:
    return len(derived_series(pres)) - 1


def coclass(pres: PcPresentation) -> int:
    return pres.ngens - nilpotency_class(pres)


def frattini_subgroup(pres: PcPresentation) -> Subgroup:
    """For a p-group the Frattini subgroup is G^p [G,G], the second term of
    the exponent-p series."""
    return exponent_p_step(pres, full_subgroup(pres))


def maximal_subgroups(pres: PcPresentation) -> list[Subgroup]:
    """The index-p subgroups, as preimages of the hyperplanes of the
    Frattini quotient, in the fixed hyperplane enumeration order."""
    frat = frattini_subgroup(pres)
    q = quotient(pres, frat)
    r = q.pres.ngens
    if r == 0:
        return []
    out = []
    for hyper in gf.subspaces(r, r - 1, pres.prime):
        gens = [q.lift(tuple(int(e) for e in row)) for row in hyper]
        out.append(closure(pres, gens + list(frat.rows)))
    return out


def all_subgroups(pres: PcPresentation) -> list[Subgroup]:
    """Every subgroup, found by repeatedly adjoining a single element to a
    known subgroup.  Exponential in the lattice size, so reserved for small
    groups: layer enumeration inside abelianizations, and tests."""
    elems = [v for v in full_subgroup(pres).elements() if any(v)]
    start = closure(pres, [])
    seen = {start}
    frontier = [start]
    while frontier:
        s = frontier.pop()
        for x in elems:
            if s.contains(x):
                continue
            t = closure(pres, [*s.rows, x])
            if t not in seen:
                seen.add(t)
                frontier.append(t)
    return sorted(seen, key=lambda s: (s.order_exp, s.rows))


# ----------------------------------------------------------------------
# quotients


@dataclass(frozen=True)
class Quotient:
    """A quotient presentation together with the projection data.

    ``kept`` lists the source depths that survive as quotient generators, in
    order.  ``project`` is the quotient homomorphism on exponent vectors.
    """

    source: PcPresentation = field(repr=False)
    kernel: Subgroup = field(repr=False)
    pres: PcPresentation
    kept: tuple[int, ...]

    def project(self, v: Vec) -> Vec:
        rep = self.kernel.coset_rep(v)
        return tuple(rep[d] for d in self.kept)

    def lift(self, vq: Vec) -> Vec:
        out = [0] * self.source.ngens
        for d, e in zip(self.kept, vq):
            out[d] = e
        return tuple(out)


def quotient(pres: PcPresentation, kernel: Subgroup) -> Quotient:
    """Quotient by a normal subgroup, presented on the surviving depths.

    The kernel's canonical coset representatives vanish exactly on its leading
    depths, so the remaining depths carry the quotient presentation; induced
    weights are the restricted source weights, which stays valid because the
    exponent-p series terms of a weight-compatible presentation are suffix
    subgroups and project onto the quotient's series terms.
    """
    if not is_normal(pres, kernel):
        raise ValueError("quotient kernel is not normal")
    n = pres.ngens
    dead = set(kernel.leading)
    kept = tuple(d for d in range(n) if d not in dead)
    pos = {d: a for a, d in enumerate(kept)}

    def down(v: Vec):
        rep = kernel.coset_rep(v)
        if any(rep[d] for d in dead):
            raise AssertionError("coset representative off the kept depths")
        return tuple((pos[d], rep[d]) for d in kept if rep[d])

    pows = []
    conjs = {}
    for d in kept:
        w = down(pres.power(pres.generator(d), pres.prime))
        pows.append(w)
    for b, e in enumerate(kept):
        for a in range(b):
            d = kept[a]
            w = down(pres.conjugate(pres.generator(e), pres.generator(d)))
            if w == ((b, 1),):
                continue
            if not w or w[0] != (b, 1):
                raise AssertionError("conjugate image lost its leading generator")
            conjs[(b, a)] = w
    weights = [pres.weights[d] for d in kept]
    dcount = sum(1 for w in weights if w == 1)
    q = PcPresentation(pres.prime, len(kept), pows, conjs, weights, dcount)
    return Quotient(pres, kernel, q, kept)


# ----------------------------------------------------------------------
# induced presentations of subgroups


def induced_presentation(pres: PcPresentation, s: Subgroup) -> PcPresentation:
    """Pc presentation of a subgroup on its canonical rows.

    Relation words come from expressing row powers and row conjugates along
    the rows.  The result is consistent and collects correctly but carries
    placeholder weights (all 1): it exists for abelian-invariant and subgroup
    computations inside s, not for cover construction.
    """
    k = len(s.rows)
    pows = []
    conjs = {}
    for a, r in enumerate(s.rows):
        coeffs = s.express(pres.power(r, pres.prime))
        if any(coeffs[:a + 1]):
            raise AssertionError("row power escapes the deeper rows")
        pows.append(tuple((i, e) for i, e in enumerate(coeffs) if e))
    for b in range(1, k):
        for a in range(b):
            coeffs = s.express(pres.conjugate(s.rows[b], s.rows[a]))
            w = tuple((i, e) for i, e in enumerate(coeffs) if e)
            if w == ((b, 1),):
                continue
            if not w or w[0] != (b, 1):
                raise AssertionError("row conjugate lost its leading row")
            conjs[(b, a)] = w
    return PcPresentation(
        pres.prime, k, pows, conjs, weights=[1] * k, defining_count=k
    )

"""Immediate descendants of a finite p-group along its exponent-p central
series.

The construction runs in four stages.  First the covering group: every
relation that neither defines a deeper generator nor exceeds the next weight
level picks up a fresh central tail generator of order p.  Second,
consistency: associativity tests of bounded weight, collected with tail
accounting on the parent, yield linear conditions over GF(p); eliminating
pivot tails leaves the free tails, a basis of the multiplicator section M.
Third, the nucleus N, the deepest series term of the cover, spanned by cubes
and commutators of the top-weight generators.  A proper subspace U < M with
U + N = M of codimension s corresponds to an order p^s extension; quotients
by subspaces in the same orbit under the parent's automorphisms are
isomorphic, so only orbit representatives become children.  Fourth, every
child receives a generating set for its own automorphism group: the orbit
stabilizer, descended, together with the central maps onto the new layer.

Orbit counting is only meaningful when the parent's automorphism generators
actually generate the full automorphism group; the ``complete`` flag on
:class:`sigmaforge.aut.AutGroup` tracks that and is propagated, never
inferred.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np

from . import aut as aut_mod
from . import gf, subgrp
from .pc import PcError, PcPresentation, Vec, Word, word_of_vec

__all__ = [
    "Cover",
    "Child",
    "PgenError",
    "p_cover",
    "allowable_subspaces",
    "extend_action",
    "descendants",
]


class PgenError(PcError):
    pass


def _relation_keys(pres: PcPresentation) -> list[tuple]:
    """Every relation of the refined presentation, the trivial conjugate ones
    included: a commuting pair still has a relation, and in the cover that
    relation picks up a tail like any other."""
    keys: list[tuple] = [("pow", i) for i in range(pres.ngens)]
    keys.extend(
        ("conj", j, i) for j in range(1, pres.ngens) for i in range(j)
    )
    return keys


def _conj_word(pres: PcPresentation, j: int, i: int) -> Word:
    return pres.conjugate_relations.get((j, i), ((j, 1),))


def _relation_weight(pres: PcPresentation, key: tuple) -> int:
    if key[0] == "pow":
        return pres.weights[key[1]] + 1
    _, j, i = key
    return pres.weights[j] + pres.weights[i]


@dataclass
class Cover:
    """The covering group of a presentation, reduced to the free tails.

    ``tail_pos`` lists the cover generator index of each free tail; ``nucleus``
    is an RREF matrix in free-tail coordinates.  ``mu`` and ``nu`` are the
    dimensions that control how many descendants can exist: no proper
    subspace complements a trivial nucleus, so ``nu == 0`` means terminal.
    """

    parent: PcPresentation = field(repr=False)
    pres: PcPresentation = field(repr=False)
    old_to_new: tuple[int, ...]
    tail_pos: tuple[int, ...]
    tail_rel: tuple[tuple, ...]
    nucleus: np.ndarray = field(repr=False)

    @property
    def mu(self) -> int:
        return len(self.tail_pos)

    @property
    def nu(self) -> int:
        return int(self.nucleus.shape[0])

    @property
    def terminal(self) -> bool:
        return self.nu == 0


def p_cover(pres: PcPresentation) -> Cover:
    p, n, d = pres.prime, pres.ngens, pres.defining_count
    c = pres.eclass()
    defs = pres.definitions or {}
    if len(defs) != n - d:
        raise PgenError("cover construction needs a definition per non-defining generator")
    defset = set(defs.values())

    keys = _relation_keys(pres)
    order = {k: t for t, k in enumerate(keys)}
    tailed = [k for k in keys if k not in defset and _relation_weight(pres, k) <= c + 1]
    tailed.sort(key=lambda k: (_relation_weight(pres, k), order[k]))
    m0 = len(tailed)

    shadow = PcPresentation(
        p,
        n,
        pres.power_relations,
        pres.conjugate_relations,
        pres.weights,
        d,
        validate=False,
    )
    shadow.set_tail_map({k: t for t, k in enumerate(tailed)})
    rows = _consistency_rows(shadow, m0, bound=c + 1)
    if rows:
        red, pivots = gf.rref(np.array(rows, dtype=np.int64), p)
    else:
        red, pivots = np.zeros((0, m0), dtype=np.int64), ()
    pivset = set(pivots)
    free = [t for t in range(m0) if t not in pivset]
    slot_of = {t: s for s, t in enumerate(free)}

    # substitution for eliminated tails: always onto strictly later columns,
    # so pivot relations only gain support of equal or larger weight
    subst: dict[int, dict[int, int]] = {}
    for r, t in enumerate(pivots):
        subst[t] = {f: int((-red[r, f]) % p) for f in free if red[r, f]}

    entries: list[tuple[str, int, int]] = [("old", i, pres.weights[i]) for i in range(n)]
    entries.extend(("tail", s, _relation_weight(pres, tailed[f])) for s, f in enumerate(free))
    entries.sort(key=lambda e: e[2])
    old_to_new = [0] * n
    tail_to_new = [0] * len(free)
    for new, (kind, idx, _w) in enumerate(entries):
        if kind == "old":
            old_to_new[idx] = new
        else:
            tail_to_new[idx] = new
    weights = [e[2] for e in entries]
    ncov = n + len(free)

    tail_index = {k: t for t, k in enumerate(tailed)}

    def remap(w: Word) -> list[tuple[int, int]]:
        return [(old_to_new[g], e) for g, e in w]

    def tail_syllables(key: tuple) -> list[tuple[int, int]]:
        t = tail_index.get(key)
        if t is None:
            return []
        if t in slot_of:
            return [(tail_to_new[slot_of[t]], 1)]
        return [(tail_to_new[slot_of[f]], coef) for f, coef in sorted(subst[t].items())]

    pow_rel: list[Word] = [()] * ncov
    conj_rel: dict[tuple[int, int], Word] = {}
    for i in range(n):
        word = sorted(remap(pres.power_relations[i]) + tail_syllables(("pow", i)))
        pow_rel[old_to_new[i]] = tuple(word)
    for j in range(1, n):
        for i in range(j):
            word = sorted(
                remap(_conj_word(pres, j, i)) + tail_syllables(("conj", j, i))
            )
            if word != [(old_to_new[j], 1)]:
                conj_rel[(old_to_new[j], old_to_new[i])] = tuple(word)

    def remap_key(key: tuple) -> tuple:
        if key[0] == "pow":
            return ("pow", old_to_new[key[1]])
        return ("conj", old_to_new[key[1]], old_to_new[key[2]])

    cover_defs = {old_to_new[k]: remap_key(ref) for k, ref in defs.items()}
    for s, f in enumerate(free):
        cover_defs[tail_to_new[s]] = remap_key(tailed[f])

    cover_pres = PcPresentation(
        p, ncov, pow_rel, conj_rel, weights, d, definitions=cover_defs
    )
    cover_pres.enable_multiply_cache()

    tail_pos = tuple(sorted(tail_to_new))
    # tail_rel follows tail_pos order
    pos_to_rel = {tail_to_new[s]: tailed[f] for s, f in enumerate(free)}
    tail_rel = tuple(pos_to_rel[pos] for pos in tail_pos)

    nucleus = _nucleus(pres, cover_pres, old_to_new, tail_pos, c)
    return Cover(pres, cover_pres, tuple(old_to_new), tail_pos, tail_rel, nucleus)


def _consistency_rows(shadow: PcPresentation, m0: int, bound: int) -> list[list[int]]:
    """Associativity tests of weight at most the bound, each contributing the
    difference of the tail counts of its two collections.  Deeper tests hold
    automatically in the cover and are skipped."""
    p, n, w = shadow.prime, shadow.ngens, shadow.weights
    rows: list[list[int]] = []

    def two_stage(first, prefix=(), suffix=()):
        v1, t1 = shadow.collect_with_tails(first)
        v2, t2 = shadow.collect_with_tails(
            tuple(prefix) + word_of_vec(v1) + tuple(suffix)
        )
        return v2, [(a + b) % p for a, b in zip(t1, t2)]

    def push(lhs, rhs):
        vl, tl = lhs
        vr, tr = rhs
        if vl != vr:
            raise AssertionError("parent presentation is inconsistent")
        row = [(a - b) % p for a, b in zip(tl, tr)]
        if any(row):
            rows.append(row)

    for k in range(2, n):
        for j in range(1, k):
            for i in range(j):
                if w[k] + w[j] + w[i] > bound:
                    continue
                push(
                    two_stage([(k, 1), (j, 1)], suffix=[(i, 1)]),
                    two_stage([(j, 1), (i, 1)], prefix=[(k, 1)]),
                )
    for j in range(1, n):
        for i in range(j):
            if w[j] + w[i] + 1 > bound:
                continue
            push(
                shadow.collect_with_tails([(j, p), (i, 1)]),
                two_stage([(j, 1), (i, 1)], prefix=[(j, p - 1)]),
            )
            push(
                two_stage([(j, 1), (i, 1)], suffix=[(i, p - 1)]),
                shadow.collect_with_tails([(j, 1), (i, p)]),
            )
    for i in range(n):
        if 2 * w[i] + 1 > bound:
            continue
        push(
            two_stage([(i, p)], suffix=[(i, 1)]),
            shadow.collect_with_tails([(i, p + 1)]),
        )
    return rows


def _nucleus(pres, cover_pres, old_to_new, tail_pos, c) -> np.ndarray:
    """Span of the deepest series term of the cover in free-tail coordinates:
    cubes of top-weight generators and their commutators with the defining
    ones.  Everything must land on pure tails; a base residue would mean the
    cover relations are wrong."""
    p = pres.prime
    d = pres.defining_count
    rows = []
    top = [old_to_new[i] for i in range(pres.ngens) if pres.weights[i] == c]
    tailset = set(tail_pos)
    for u in top:
        vecs = [cover_pres.power(cover_pres.generator(u), p)]
        for k in range(d):
            vecs.append(
                cover_pres.commutator(
                    cover_pres.generator(u), cover_pres.generator(old_to_new[k])
                )
            )
        for v in vecs:
            if any(e and i not in tailset for i, e in enumerate(v)):
                raise AssertionError("nucleus generator has support outside the tails")
            rows.append([v[pos] for pos in tail_pos])
    if not rows:
        return np.zeros((0, len(tail_pos)), dtype=np.int64)
    red, _ = gf.rref(np.array(rows, dtype=np.int64), p)
    return red


def allowable_subspaces(cover: Cover, step: int):
    """Subspaces of M of codimension ``step`` whose sum with the nucleus is
    all of M, as RREF matrices in a fixed enumeration order."""
    p = cover.parent.prime
    mu = cover.mu
    k = mu - step
    if step < 1 or k < 0 or step > cover.nu:
        return
    nuc = cover.nucleus
    for mat in gf.subspaces(mu, k, p):
        if gf.rank(np.vstack([mat, nuc]), p) == mu:
            yield mat


def cover_images(cover: Cover, images) -> dict[int, Vec]:
    """The forced extension of a parent automorphism to the old generators of
    the cover.

    Defining generators take the plain lift of their parent image.  Every
    non-defining generator is then pinned down by its definition relation:
    with the relation word split as pre * g_k * post, the image of g_k is
    pre^-1 * (left side) * post^-1 evaluated in the already-known images.
    Definitions only reference strictly shallower generators, so a worklist
    pass settles them all; a cycle would mean corrupt bookkeeping."""
    cp = cover.pres
    parent = cover.parent
    p = parent.prime
    img: dict[int, Vec] = {
        cover.old_to_new[i]: _lift(cover, images[i])
        for i in range(parent.defining_count)
    }
    pending = {
        cover.old_to_new[k]: ref
        for k, ref in (parent.definitions or {}).items()
    }
    remapped = {}
    for k_cov, ref in pending.items():
        if ref[0] == "pow":
            remapped[k_cov] = ("pow", cover.old_to_new[ref[1]])
        else:
            remapped[k_cov] = ("conj", cover.old_to_new[ref[1]], cover.old_to_new[ref[2]])
    while pending:
        progressed = False
        for k_cov in sorted(pending):
            ref = remapped[k_cov]
            if ref[0] == "pow":
                need = {ref[1]}
                word = cp.power_relations[ref[1]]
            else:
                need = {ref[1], ref[2]}
                word = cp.conjugate_relations[(ref[1], ref[2])]
            need.update(g for g, _e in word if g != k_cov)
            if not need <= img.keys():
                continue
            if ref[0] == "pow":
                lhs = cp.power(img[ref[1]], p)
            else:
                lhs = cp.conjugate(img[ref[1]], img[ref[2]])
            cut = [s for s, (g, _e) in enumerate(word) if g == k_cov]
            pre, post = word[: cut[0]], word[cut[0] + 1 :]
            val = lhs
            if pre:
                val = cp.multiply(cp.inverse(_eval(cp, img, pre)), val)
            if post:
                val = cp.multiply(val, cp.inverse(_eval(cp, img, post)))
            img[k_cov] = val
            del pending[k_cov]
            progressed = True
        if not progressed:
            raise PgenError("definition references form a cycle")
    return img


def _eval(cp: PcPresentation, img: dict[int, Vec], word: Word) -> Vec:
    acc = cp.identity()
    for g, e in word:
        acc = cp.multiply(acc, cp.power(img[g], e))
    return acc


def extend_action(cover: Cover, images, ci: dict[int, Vec] | None = None) -> np.ndarray:
    """Matrix (rows act on the right) of the induced action of a parent
    automorphism on the free-tail space M.

    The image of a free tail is forced: the tail's relation, with the tail
    removed, must map to the image of its left side up to a pure tail
    residue, and that residue is the image."""
    cp = cover.pres
    parent = cover.parent
    p = parent.prime
    mu = cover.mu
    if ci is None:
        ci = cover_images(cover, images)
    A = np.zeros((mu, mu), dtype=np.int64)
    tailset = set(cover.tail_pos)
    for slot, (pos, key) in enumerate(zip(cover.tail_pos, cover.tail_rel)):
        if key[0] == "pow":
            i = cover.old_to_new[key[1]]
            lhs = cp.power(ci[i], p)
            base = tuple(s for s in cp.power_relations[i] if s[0] != pos)
        else:
            j, i = cover.old_to_new[key[1]], cover.old_to_new[key[2]]
            lhs = cp.conjugate(ci[j], ci[i])
            base = tuple(s for s in cp.conjugate_relations[(j, i)] if s[0] != pos)
        x = cp.multiply(cp.inverse(_eval(cp, ci, base)), lhs)
        if any(e and g not in tailset for g, e in enumerate(x)):
            raise AssertionError("automorphism does not extend to the cover")
        for s2, pos2 in enumerate(cover.tail_pos):
            A[slot, s2] = x[pos2]
    return A % p


def _lift(cover: Cover, v: Vec) -> Vec:
    out = [0] * cover.pres.ngens
    for i, e in enumerate(v):
        out[cover.old_to_new[i]] = e
    return tuple(out)


@dataclass
class Child:
    """One descendant: its presentation, the automorphism generators it
    inherits, which step produced it and its 1-based position among the orbit
    representatives of that step."""

    pres: PcPresentation = field(repr=False)
    aut: aut_mod.AutGroup = field(repr=False)
    step: int
    index: int
    orbit_size: int


def descendants(
    cover: Cover, autgrp: aut_mod.AutGroup, step: int, reduce_cap: int = 20000
) -> list[Child]:
    parent = cover.parent
    p = parent.prime
    parent.enable_multiply_cache()

    allow = [(gf.row_space_key(m, p, cover.mu), m) for m in allowable_subspaces(cover, step)]
    if not allow:
        return []
    position = {key: i for i, (key, _m) in enumerate(allow)}
    if len(position) != len(allow):
        raise AssertionError("allowable enumeration repeated a subspace")

    gens = autgrp.reduced_gens(cap=reduce_cap)
    mats = [extend_action(cover, g) for g in gens]
    ginv = [aut_mod.invert(parent, g) for g in gens]
    ident = aut_mod.identity_images(parent)

    unseen = dict(allow)
    children: list[Child] = []
    index = 0
    for key0, U0 in allow:
        if key0 not in unseen:
            continue
        index += 1
        # BFS over the orbit, carrying transversal automorphisms both ways
        info: dict[bytes, tuple[np.ndarray, tuple, tuple]] = {key0: (U0, ident, ident)}
        queue = deque([key0])
        stab_raw: set = set()
        while queue:
            ukey = queue.popleft()
            Um, Tu, Tui = info[ukey]
            for gi, A in enumerate(mats):
                Vm, _piv = gf.rref((Um @ A) % p, p)
                vkey = gf.row_space_key(Vm, p, cover.mu)
                if vkey not in position:
                    raise AssertionError("automorphism left the allowable set")
                hit = info.get(vkey)
                if hit is None:
                    info[vkey] = (
                        Vm,
                        aut_mod.compose(parent, gens[gi], Tu),
                        aut_mod.compose(parent, Tui, ginv[gi]),
                    )
                    queue.append(vkey)
                else:
                    s = aut_mod.compose(
                        parent, hit[2], aut_mod.compose(parent, gens[gi], Tu)
                    )
                    if s != ident:
                        stab_raw.add(s)
        for k in info:
            unseen.pop(k, None)
        children.append(
            _build_child(cover, U0, step, index, len(info), stab_raw, autgrp)
        )
    return children


def _build_child(cover, U, step, index, orbit_size, stab_raw, autgrp) -> Child:
    parent = cover.parent
    p = parent.prime
    cp = cover.pres
    c = parent.eclass()
    d = parent.defining_count

    # the subspace as a canonical subgroup of the cover
    rows = []
    for r in range(U.shape[0]):
        vec = [0] * cp.ngens
        for s, pos in enumerate(cover.tail_pos):
            vec[pos] = int(U[r, s])
        rows.append(tuple(vec))
    rows.sort(key=lambda v: subgrp.depth(v, cp.ngens))
    kernel = subgrp.subgroup_from_canonical_rows(cp, rows)
    q = subgrp.quotient(cp, kernel)
    pres0, kept = q.pres, list(q.kept)

    tailset = set(cover.tail_pos)
    olds0 = [t for t, depth in enumerate(kept) if depth not in tailset]
    survivors0 = [t for t, depth in enumerate(kept) if depth in tailset]
    new_order = olds0 + survivors0
    pi = {old0: new for new, old0 in enumerate(new_order)}
    nchild = len(kept)

    def remap_word(w: Word) -> Word:
        return tuple(sorted((pi[g], e) for g, e in w))

    pow_rel: list[Word] = [()] * nchild
    for old0, w in enumerate(pres0.power_relations):
        pow_rel[pi[old0]] = remap_word(w)
    conj_rel: dict[tuple[int, int], Word] = {}
    for (j0, i0), w in pres0.conjugate_relations.items():
        if j0 in survivors0 or i0 in survivors0:
            raise AssertionError("new-layer generator appears in a conjugate relation")
        conj_rel[(pi[j0], pi[i0])] = remap_word(w)
    weights = [0] * nchild
    for old0 in olds0:
        weights[pi[old0]] = pres0.weights[old0]
    for old0 in survivors0:
        weights[pi[old0]] = c + 1

    depth_to0 = {depth: t for t, depth in enumerate(kept)}

    def remap_key(key: tuple) -> tuple:
        if key[0] == "pow":
            return ("pow", pi[depth_to0[key[1]]])
        return ("conj", pi[depth_to0[key[1]]], pi[depth_to0[key[2]]])

    defs: dict[int, tuple] = {}
    for k_cov, ref in (cp.definitions or {}).items():
        if k_cov in depth_to0:
            defs[pi[depth_to0[k_cov]]] = remap_key(ref)
    child = PcPresentation(p, nchild, pow_rel, conj_rel, weights, d, definitions=defs)
    child.enable_multiply_cache()

    def project(v_cover: Vec) -> Vec:
        v0 = q.project(v_cover)
        out = [0] * nchild
        for t, e in enumerate(v0):
            out[pi[t]] = e
        return tuple(out)

    # descend the stabilizer
    slot_at = {pos: s for s, pos in enumerate(cover.tail_pos)}
    child_gens: list = []
    seen: set = set()
    for alpha in sorted(stab_raw):
        ci = cover_images(cover, alpha)
        A = extend_action(cover, alpha, ci)
        imgs = []
        for depth in kept:
            if depth in tailset:
                vec = [0] * cp.ngens
                for s2, pos2 in enumerate(cover.tail_pos):
                    vec[pos2] = int(A[slot_at[depth], s2])
                imgs.append(project(tuple(vec)))
            else:
                imgs.append(project(ci[depth]))
        timgs = tuple(imgs)
        if timgs not in seen:
            seen.add(timgs)
            child_gens.append(timgs)

    # central maps onto the new layer
    ident = aut_mod.identity_images(child)
    for a in range(d):
        for old0 in survivors0:
            z = child.generator(pi[old0])
            imgs = list(ident)
            imgs[a] = child.multiply(child.generator(a), z)
            timgs = tuple(imgs)
            if timgs not in seen:
                seen.add(timgs)
                child_gens.append(timgs)

    for g in child_gens:
        if not aut_mod.is_automorphism(child, g):
            raise AssertionError("descended map is not an automorphism of the child")
    return Child(
        pres=child,
        aut=aut_mod.AutGroup(child, child_gens, complete=autgrp.complete),
        step=step,
        index=index,
        orbit_size=orbit_size,
    )

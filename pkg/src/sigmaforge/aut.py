"""Automorphisms of pc-presented p-groups.

An automorphism is stored as its tuple of generator images (one exponent
vector per generator); everything else is derived.  Composition and
application are collection exercises.  Inversion re-expresses the standard
generators as words in the images by a word-tracking sifting closure, which
avoids hunting for the element order.

Group-level automorphism computation here is deliberately modest: the brute
force search is meant for the tiny root groups a descendant search starts
from.  Deeper in a tree, automorphism generators come from the generation
step itself (stabilizer lifts plus central maps), never from search.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product as _iproduct

import numpy as np

from . import gf, subgrp
from .pc import PcPresentation, Vec, vec_of_word

Images = tuple[Vec, ...]


def identity_images(pres: PcPresentation) -> Images:
    return tuple(pres.generator(i) for i in range(pres.ngens))


def apply(pres: PcPresentation, images: Images, v: Vec) -> Vec:
    """Image of an element: evaluate its normal word in the generator
    images."""
    acc = pres.identity()
    for i, e in enumerate(v):
        if e:
            acc = pres.multiply(acc, pres.power(images[i], e))
    return acc


def compose(pres: PcPresentation, outer: Images, inner: Images) -> Images:
    """outer after inner."""
    return tuple(apply(pres, outer, w) for w in inner)


def _eval_word(pres: PcPresentation, images, word) -> Vec:
    acc = pres.identity()
    for j, e in word:
        acc = pres.multiply(acc, pres.power(images[j], e))
    return acc


def invert(pres: PcPresentation, images: Images) -> Images:
    """Inverse automorphism via a closure over the images that remembers, for
    each induced row, a word in the images producing it.  Expressing g_i along
    those rows and evaluating the word with plain generators gives the inverse
    image of g_i."""
    n = pres.ngens
    p = pres.prime
    table: dict[int, tuple[Vec, tuple]] = {}

    def sift(v: Vec, w: tuple):
        while True:
            d = subgrp.depth(v, n)
            if d == n:
                return None
            hit = table.get(d)
            if hit is None:
                return v, w
            row, rw = hit
            e = v[d]
            # v := row^-e * v
            v = pres.multiply(pres.inverse(pres.power(row, e)), v)
            w = _inv_word(rw) * e + w
        # unreachable

    queue: list[tuple[Vec, tuple]] = [
        (img, ((j, 1),)) for j, img in enumerate(images) if any(img)
    ]
    while queue:
        res = sift(*queue.pop())
        if res is None:
            continue
        v, w = res
        d = subgrp.depth(v, n)
        k = pow(v[d], -1, p)
        v, w = pres.power(v, k), w * k
        table[d] = (v, w)
        queue.append((pres.power(v, p), w * p))
        for e, (row, rw) in list(table.items()):
            if e != d:
                queue.append((pres.multiply(row, v), rw + w))
                queue.append((pres.multiply(v, row), w + rw))
    if len(table) != n:
        raise ValueError("images do not generate the group")
    out = []
    for i in range(n):
        v = pres.generator(i)
        word: tuple = ()
        for d in sorted(table):
            e = v[d]
            if e:
                row, rw = table[d]
                word = word + rw * e
                v = pres.multiply(pres.inverse(pres.power(row, e)), v)
        if any(v):
            raise AssertionError("expression along closure rows failed")
        out.append(_eval_word(pres, [pres.generator(j) for j in range(n)], word))
    inv = tuple(out)
    if compose(pres, images, inv) != identity_images(pres):
        raise AssertionError("computed inverse does not invert")
    return inv


def _inv_word(w: tuple) -> tuple:
    return tuple((j, -e) for j, e in reversed(w))


def is_automorphism(pres: PcPresentation, images: Images) -> bool:
    """Images define an endomorphism respecting all relations, and generate
    the whole group (surjective equals bijective here).

    Surjectivity reduces to the defining images spanning the quotient by the
    weight-two-and-deeper generators: once the relations hold, every deeper
    image is a word in the defining ones."""
    p, n = pres.prime, pres.ngens
    for i in range(n):
        lhs = pres.power(images[i], p)
        rhs = apply(pres, images, vec_of_word(n, pres.power_relations[i]))
        if lhs != rhs:
            return False
    for j in range(1, n):
        for i in range(j):
            lhs = pres.conjugate(images[j], images[i])
            word = pres.conjugate_relations.get((j, i), ((j, 1),))
            if lhs != apply(pres, images, vec_of_word(n, word)):
                return False
    d = pres.defining_count
    head = np.array([[images[i][j] for j in range(d)] for i in range(d)], dtype=np.int64)
    return gf.rank(head, p) == d


@dataclass
class AutGroup:
    """A generating set of automorphisms.  ``complete`` records whether the
    set is known to generate the full automorphism group, which the orbit
    machinery needs for its counts to mean anything."""

    pres: PcPresentation = field(repr=False)
    gens: list[Images]
    complete: bool
    _reduced: list[Images] | None = field(default=None, repr=False, compare=False)

    def __len__(self) -> int:
        return len(self.gens)

    def reduced_gens(self, cap: int = 20000) -> list[Images]:
        """Memoized shrunken generating set; the stored list is untouched."""
        if self._reduced is None:
            self._reduced = reduce_generators(self.pres, self.gens, cap=cap)
        return self._reduced


def automorphism_group(pres: PcPresentation) -> AutGroup:
    """Every automorphism of a small group by brute force over images of the
    defining generators, extended to deeper generators through their
    definitions.  Intended for search roots; refuses groups without the
    needed definition bookkeeping."""
    n = pres.ngens
    d = pres.defining_count
    if n > 5:
        raise ValueError("brute force automorphism search is for tiny groups")
    defs = pres.definitions
    for k in range(d, n):
        if defs is None or k not in defs:
            raise ValueError(f"generator {k + 1} has no recorded definition")
    elems = [tuple(v) for v in _iproduct(range(pres.prime), repeat=n)]
    by_order: dict[int, list[Vec]] = {}
    for v in elems:
        by_order.setdefault(pres.element_order(v), []).append(v)
    gen_orders = [pres.element_order(pres.generator(i)) for i in range(d)]
    found: list[Images] = []
    for combo in _iproduct(*[by_order.get(o, []) for o in gen_orders]):
        images = list(combo) + [pres.identity()] * (n - d)
        ok = True
        for k in range(d, n):
            kind = defs[k]
            if kind[0] == "pow":
                i = kind[1]
                base = pres.power(images[i], pres.prime)
                word = pres.power_relations[i]
            else:
                _, j, i = kind
                base = pres.conjugate(images[j], images[i])
                word = pres.conjugate_relations[(j, i)]
            rest = [(g, e) for g, e in word if g != k]
            if any(g > k for g, _e in rest) or (k, 1) not in word:
                raise ValueError(
                    f"definition of generator {k + 1} is not directly solvable"
                )
            # relation: base = pre * g_k  with pre already image-known
            pre = _eval_word(pres, images, rest)
            images[k] = pres.multiply(pres.inverse(pre), base)
            if not any(images[k]):
                ok = False
                break
        if not ok:
            continue
        images_t = tuple(images)
        if is_automorphism(pres, images_t):
            found.append(images_t)
    return AutGroup(pres, found, complete=True)


def closure_elements(pres: PcPresentation, gens, cap: int | None = None):
    """All automorphisms generated by the given image tuples (BFS), or None
    when a cap is given and exceeded."""
    ident = identity_images(pres)
    seen = {ident}
    frontier = [ident]
    while frontier:
        x = frontier.pop()
        for g in gens:
            y = compose(pres, g, x)
            if y not in seen:
                if cap is not None and len(seen) >= cap:
                    return None
                seen.add(y)
                frontier.append(y)
    return seen


_PERM_LIMIT = 3**7


def _element_table(pres: PcPresentation):
    """Breadth-first enumeration of the whole group, remembering for every
    element which earlier element and generator reach it.  Any endomorphism
    can then be tabulated with one multiplication per element."""
    ident = pres.identity()
    elems = [ident]
    index = {ident: 0}
    links = [(0, -1)]
    i = 0
    while i < len(elems):
        x = elems[i]
        for g in range(pres.ngens):
            y = pres.multiply(x, pres.generator(g))
            if y not in index:
                index[y] = len(elems)
                elems.append(y)
                links.append((i, g))
        i += 1
    return elems, index, links


def _as_permutation(pres, images: Images, table) -> np.ndarray:
    elems, index, links = table
    vals: list = [pres.identity()] + [None] * (len(elems) - 1)
    out = np.empty(len(elems), dtype=np.int32)
    out[0] = 0
    for i in range(1, len(elems)):
        src, g = links[i]
        v = pres.multiply(vals[src], images[g])
        vals[i] = v
        out[i] = index[v]
    return out


def reduce_generators(
    pres: PcPresentation, gens: list[Images], cap: int = 20000
) -> list[Images]:
    """Deterministic greedy reduction: keep a generator only when it falls
    outside the closure of those already kept.

    Groups small enough to tabulate run the closure on permutations of the
    element list, where composition is an index gather instead of a stack of
    collections.  If the running closure outgrows the cap it stops growing;
    later candidates are still dropped when the partial closure already
    contains them, which stays correct and merely less tidy."""
    ident = identity_images(pres)
    uniq: list[Images] = []
    seen: set[Images] = {ident}
    for g in gens:
        if g not in seen:
            seen.add(g)
            uniq.append(g)
    if len(uniq) <= 1:
        return uniq

    if pres.prime**pres.ngens <= _PERM_LIMIT:
        table = _element_table(pres)
        reps: list = [_as_permutation(pres, g, table) for g in uniq]
        id_rep = np.arange(len(table[0]), dtype=np.int32)

        def comp(a, b):
            return a[b]

        def key(r):
            return r.tobytes()

    else:
        reps = uniq
        id_rep = ident

        def comp(a, b):
            return compose(pres, a, b)

        def key(r):
            return r

    kept: list[Images] = []
    kept_reps: list = []
    pool = [id_rep]
    closed = {key(id_rep)}
    growing = True
    for g, r in zip(uniq, reps):
        if key(r) in closed:
            continue
        kept.append(g)
        kept_reps.append(r)
        if not growing:
            continue
        i = 0
        while i < len(pool):
            x = pool[i]
            i += 1
            for gr in kept_reps:
                y = comp(gr, x)
                k = key(y)
                if k not in closed:
                    if len(pool) >= cap:
                        growing = False
                        break
                    closed.add(k)
                    pool.append(y)
            if not growing:
                break
    return kept

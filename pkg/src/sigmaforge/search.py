"""Pattern-guided walks over the generation tree.

A walk starts from a rank-2 presentation and repeatedly attaches
descendants computed by :func:`sigmaforge.pgen.descendants`.  Nodes are
pruned as early as the available invariants allow: a child whose derived
quotient admits no inverting automorphism can never lead to one that
does, and a child whose abelianization is not a quotient of the target
can never grow into it.  Kernel types and second-layer invariants only
settle some way down the tree, so their filters activate at configurable
order thresholds instead of everywhere.

Leaves are the terminal balanced nodes that match the pattern exactly.
Everything the walk keeps is serializable to a stable JSON form, and a
walk with a thread pool splits the tree at the first level only, so the
assembled output does not depend on scheduling.
"""

from __future__ import annotations

import json
import re
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import permutations

from . import artin, invariants, pgen, sigma, subgrp
from . import aut as aut_mod
from .invariants import Aqi, dominates
from .pc import PcError, PcPresentation


class SearchError(PcError):
    pass


# ----------------------------------------------------------------------
# identifiers


@dataclass(frozen=True)
class Identifier:
    """Path address of a tree node: a tag plus (step, index) hops."""

    tag: str
    hops: tuple[tuple[int, int], ...] = ()

    def child(self, step: int, index: int) -> "Identifier":
        if step < 1 or index < 1:
            raise SearchError("steps and child indices are 1-based")
        return Identifier(self.tag, self.hops + ((step, index),))

    def render(self) -> str:
        return self.tag + "".join(f"-#{s};{i}" for s, i in self.hops)

    @classmethod
    def parse(cls, text: str) -> "Identifier":
        head, sep, rest = text.partition("-#")
        if not head:
            raise SearchError(f"identifier {text!r} has an empty tag")
        if not sep:
            return cls(head)
        hops = []
        for piece in rest.split("-#"):
            m = re.fullmatch(r"(\d+);(\d+)", piece)
            if m is None:
                raise SearchError(f"malformed hop {piece!r} in {text!r}")
            hops.append((int(m.group(1)), int(m.group(2))))
        return cls(head, tuple(hops))

# ----------------------------------------------------------------------
# patterns


def _parse_aqi_token(token: str) -> Aqi:
    return invariants.parse_aqi(token)


def _parse_alternatives(text: str) -> tuple[Aqi, ...]:
    return tuple(_parse_aqi_token(t.strip()) for t in text.split("|"))


@dataclass(frozen=True)
class BlockTemplate:
    """Target for one layer-1 block of a depth-2 pattern.

    ``heads`` lists the accepted invariants of the subgroup itself and
    ``comps`` the full multiset over its index-p subgroups.  When the
    block is given by a symbol, comps are the symbol's twelve components
    plus the listed distinguished one.
    """

    heads: tuple[Aqi, ...]
    comps: tuple[Aqi, ...] | None = None
    symbol: str | None = None

    def component_sets(self) -> tuple[tuple[Aqi, ...], ...]:
        if self.comps is not None:
            return (tuple(sorted(self.comps)),)
        if self.symbol is None:
            return ()
        out = []
        for (triple, nine), name in artin.COMPONENT_SYMBOLS.items():
            if name != self.symbol:
                continue
            for head in self.heads:
                single = _distinguished_component(head)
                out.append(tuple(sorted((single,) + (triple,) * 3 + (nine,) * 9)))
        if not out:
            raise SearchError(f"unknown block symbol {self.symbol!r}")
        return tuple(dict.fromkeys(out))


def _distinguished_component(head: Aqi) -> Aqi:
    """The one component a symbol leaves out of its twelve.

    In every computed rank-3 block the thirteen components split as one
    single plus a 3-multiplet plus a 9-multiplet, and the single is
    (2,2,1,1,1) for each head that occurs in symbol form.
    """
    if head in ((2, 2, 2), (3, 2, 1), (2, 2, 1)):
        return (2, 2, 1, 1, 1)
    raise SearchError(f"no distinguished component recorded for head {head}")


@dataclass(frozen=True)
class SearchPattern:
    """What a walk is looking for.

    ``abelianization`` is required: internal nodes must stay quotients of
    it and leaves must hit it exactly.  ``kappa`` (designator tuple with
    optional punctured entry) and the depth-2 ``blocks`` are always
    checked exactly at leaves; kernel types drift along a path, so as
    mid-tree prunes they only activate once a from_exp threshold is set
    and reached.  ``tau1`` slots, when given, are checked by domination
    everywhere and exactly at leaves.  ``blocks`` order: punctured
    first, the rest matched as a multiset.
    """

    abelianization: Aqi
    kappa: tuple[tuple[int, ...], int | None] | None = None
    tau1: tuple[tuple[Aqi, ...], ...] | None = None
    blocks: tuple[BlockTemplate, ...] | None = None
    kappa_from_exp: int | None = None
    tau2_from_exp: int | None = None

    def needs_tau2(self) -> bool:
        return self.blocks is not None


def _kappa_target(p: SearchPattern) -> artin.Tkt:
    entries, punct = p.kappa
    return artin.normalize_kappa(artin.Tkt(tuple(entries), punct))


def parse_kappa_text(text: str) -> tuple[tuple[int, ...], int | None]:
    """Designator tuple from text like ``144;4``, ``2114`` or ``0*43``."""
    body, sep, punct = text.partition(";")
    def one(ch: str) -> int:
        if ch == "*":
            return artin.KERNEL_UNMATCHED
        if ch.isdigit():
            return int(ch)
        raise SearchError(f"bad kernel designator {ch!r} in {text!r}")
    entries = tuple(one(ch) for ch in body.strip())
    if not sep:
        return entries, None
    return entries, one(punct.strip())


# ----------------------------------------------------------------------
# multiset matching with room to grow


def _inject(items: list, slots: list, fits) -> bool:
    """Whether items map injectively into slots under ``fits``.

    Plain backtracking; both sides stay tiny (at most thirteen), and
    sorting items by how few slots accept them keeps the tree shallow.
    """
    options = [
        [j for j, s in enumerate(slots) if fits(it, s)] for it in items
    ]
    order = sorted(range(len(items)), key=lambda i: len(options[i]))
    used = [False] * len(slots)

    def place(k: int) -> bool:
        if k == len(order):
            return True
        for j in options[order[k]]:
            if not used[j]:
                used[j] = True
                if place(k + 1):
                    return True
                used[j] = False
        return False

    return place(0)


def _aqi_fits(current: Aqi, target: Aqi) -> bool:
    return dominates(target, current)


def _tau1_compatible(pat: SearchPattern, tau1: tuple[Aqi, ...], exact: bool) -> bool:
    if pat.tau1 is None:
        return True
    slots = list(pat.tau1)
    comps = list(tau1[1:])
    if len(comps) != len(slots):
        return False
    fits = (lambda c, alts: c in alts) if exact else (
        lambda c, alts: any(_aqi_fits(c, a) for a in alts)
    )
    # the punctured component is pinned to the first slot when present
    if not fits(comps[0], slots[0]):
        return False
    return _inject(comps[1:], slots[1:], fits)


def _kappa_matches(pat: SearchPattern, k: artin.Tkt) -> bool:
    return artin.normalize_kappa(artin.Tkt(k.entries, k.punctured_entry)) == _kappa_target(pat)


def _block_compatible(
    block: tuple[Aqi, tuple[Aqi, ...]], tmpl: BlockTemplate, exact: bool
) -> bool:
    head, comps = block
    if exact:
        if head not in tmpl.heads:
            return False
        return tuple(sorted(comps)) in tmpl.component_sets()
    if not any(_aqi_fits(head, h) for h in tmpl.heads):
        return False
    sets = tmpl.component_sets()
    if not sets:
        return True
    return any(
        len(comps) <= len(target)
        and _inject(list(comps), list(target), _aqi_fits)
        for target in sets
    )


def _tau2_compatible(
    pat: SearchPattern,
    tau2: tuple[tuple[Aqi, tuple[Aqi, ...]], ...],
    exact: bool,
) -> bool:
    if pat.blocks is None:
        return True
    if len(tau2) != len(pat.blocks):
        return False
    if not _block_compatible(tau2[0], pat.blocks[0], exact):
        return False
    return _inject(
        list(tau2[1:]),
        list(pat.blocks[1:]),
        lambda b, t: _block_compatible(b, t, exact),
    )


# ----------------------------------------------------------------------
# tree nodes


@dataclass
class TreeNode:
    """One kept vertex of a walk, with everything the reports need."""

    ident: Identifier
    pres: PcPresentation = field(repr=False)
    autgrp: aut_mod.AutGroup = field(repr=False)
    order_exp: int
    nilpotency_class: int
    coclass: int
    derived_length: int
    mu: int
    nu: int
    report: sigma.SigmaReport
    pattern: artin.ArtinPattern | None
    meta_sig: tuple | None = None
    is_leaf: bool = False
    children: list["TreeNode"] = field(default_factory=list)


def node_invariants(pres: PcPresentation) -> tuple[int, int, int]:
    return (
        subgrp.nilpotency_class(pres),
        subgrp.coclass(pres),
        subgrp.derived_length(pres),
    )


def metabelianization(pres: PcPresentation) -> PcPresentation:
    """The quotient by the second derived subgroup (the group itself when
    that is trivial)."""
    ds = subgrp.derived_series(pres)
    if len(ds) <= 3:
        return pres
    return subgrp.quotient(pres, ds[2]).pres


def metabelian_signature(pres: PcPresentation) -> tuple:
    """Order, class, coclass, kernel type and first-layer invariants of
    the metabelianization, rendered so signatures compare and serialize
    cleanly."""
    m = metabelianization(pres)
    pat = artin.artin_pattern(m, 1)
    return (
        m.ngens,
        subgrp.nilpotency_class(m),
        subgrp.coclass(m),
        artin.format_kappa(artin.normalize_kappa(pat.kappa)),
        artin.format_tau1(pat.tau1),
    )


# ----------------------------------------------------------------------
# the walk


class _Budget:
    """Shared node allowance; the only state a threaded walk mutates."""

    def __init__(self, limit: int):
        self._lock = threading.Lock()
        self.left = limit
        self.exhausted = False

    def take(self) -> bool:
        with self._lock:
            if self.left > 0:
                self.left -= 1
                return True
            self.exhausted = True
            return False


@dataclass
class SearchResult:
    root: TreeNode | None
    leaves: list[TreeNode]
    nodes_constructed: int
    truncated: bool
    truncation_reason: str | None


def _steps_for(policy: str, nu: int) -> list[int]:
    if policy == "nuclear-rank":
        return [nu] if nu > 0 else []
    if policy == "all":
        return list(range(1, nu + 1))
    raise SearchError(f"unknown step policy {policy!r}")


def _classify(
    ident: Identifier,
    pres: PcPresentation,
    autgrp: aut_mod.AutGroup,
    pat: SearchPattern,
) -> TreeNode | None:
    """Build a node, or None when the pattern rules its subtree out."""
    ab = invariants.aqi(pres)
    if not dominates(pat.abelianization, ab):
        return None
    cover = pgen.p_cover(pres)
    report = sigma.schur_sigma_report(pres, autgrp, cover)
    if not report.has_sigma:
        return None
    exp = pres.ngens
    want_tau2 = (
        pat.needs_tau2()
        and pat.tau2_from_exp is not None
        and exp >= pat.tau2_from_exp
    )
    apat = artin.artin_pattern(pres, 2 if want_tau2 else 1)
    if (
        pat.kappa is not None
        and pat.kappa_from_exp is not None
        and exp >= pat.kappa_from_exp
    ):
        if not _kappa_matches(pat, apat.kappa):
            return None
    if not _tau1_compatible(pat, apat.tau1, exact=False):
        return None
    if want_tau2 and not _tau2_compatible(pat, apat.tau2, exact=False):
        return None
    klass, cocl, dl = node_invariants(pres)
    node = TreeNode(
        ident=ident,
        pres=pres,
        autgrp=autgrp,
        order_exp=exp,
        nilpotency_class=klass,
        coclass=cocl,
        derived_length=dl,
        mu=cover.mu,
        nu=cover.nu,
        report=report,
        pattern=apat,
    )
    node._cover = cover
    if report.is_schur_sigma:
        node.is_leaf = _leaf_matches(pat, node)
        if node.is_leaf:
            node.meta_sig = metabelian_signature(pres)
    return node


def _leaf_matches(pat: SearchPattern, node: TreeNode) -> bool:
    if invariants.aqi(node.pres) != pat.abelianization:
        return False
    apat = node.pattern
    if pat.kappa is not None and not _kappa_matches(pat, apat.kappa):
        return False
    if not _tau1_compatible(pat, apat.tau1, exact=True):
        return False
    if pat.needs_tau2():
        if apat.tau2 is None:
            apat = artin.artin_pattern(node.pres, 2)
            node.pattern = apat
        if not _tau2_compatible(pat, apat.tau2, exact=True):
            return False
    return True


def _expand(
    node: TreeNode,
    pat: SearchPattern,
    policy: str,
    max_exp: int,
    budget: _Budget,
    leaves: list[TreeNode],
) -> None:
    if node.is_leaf:
        leaves.append(node)
        return
    if node.nu == 0:
        return
    cover = node._cover
    for step in _steps_for(policy, node.nu):
        if node.order_exp + step > max_exp:
            continue
        for ch in pgen.descendants(cover, node.autgrp, step):
            if not budget.take():
                return
            child = _classify(node.ident.child(step, ch.index), ch.pres, ch.aut, pat)
            if child is None:
                continue
            node.children.append(child)
            _expand(child, pat, policy, max_exp, budget, leaves)


def search(
    root_pres: PcPresentation,
    pattern: SearchPattern,
    *,
    root_aut: aut_mod.AutGroup | None = None,
    root_tag: str = "R",
    policy: str = "nuclear-rank",
    max_order_exp: int = 23,
    node_budget: int = 10**6,
    threads: int = 1,
) -> SearchResult:
    """Walk the descendant tree under a pattern and collect the leaves.

    Threads split the work at the first level below the root; everything
    deeper runs serially inside its subtree, and the children are stitched
    back in enumeration order, so the result does not depend on the thread
    count.  A run that drains the node budget is reported as truncated,
    never silently shortened.
    """
    if root_aut is None:
        root_aut = aut_mod.automorphism_group(root_pres)
    budget = _Budget(node_budget)
    budget.take()
    root = _classify(Identifier(root_tag), root_pres, root_aut, pattern)
    if root is None:
        return SearchResult(None, [], 1, False, None)
    leaves: list[TreeNode] = []
    if threads <= 1 or root.nu == 0 or root.is_leaf:
        _expand(root, pattern, policy, max_order_exp, budget, leaves)
    else:
        first: list[tuple[TreeNode, list[TreeNode]]] = []
        for step in _steps_for(policy, root.nu):
            if root.order_exp + step > max_order_exp:
                continue
            for ch in pgen.descendants(root._cover, root.autgrp, step):
                if not budget.take():
                    break
                child = _classify(
                    root.ident.child(step, ch.index), ch.pres, ch.aut, pattern
                )
                if child is not None:
                    first.append((child, []))
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(
                pool.map(
                    lambda cl: _expand(
                        cl[0], pattern, policy, max_order_exp, budget, cl[1]
                    ),
                    first,
                )
            )
        for child, sub in first:
            root.children.append(child)
            leaves.extend(sub)
    constructed = node_budget - budget.left
    truncated = budget.exhausted
    reason = (
        f"node budget {node_budget} exhausted; subtrees beyond it were not expanded"
        if truncated
        else None
    )
    return SearchResult(root, leaves, constructed, truncated, reason)


# ----------------------------------------------------------------------
# reporting


def node_to_dict(node: TreeNode, with_children: bool = True) -> dict:
    """JSON form of a node; nested invariants appear once computed."""
    apat = node.pattern
    out: dict = {
        "id": node.ident.render(),
        "order_exp": node.order_exp,
        "class": node.nilpotency_class,
        "coclass": node.coclass,
        "dl": node.derived_length,
        "nuclear_rank": node.nu,
        "mu_rank": node.mu,
        "kappa": artin.format_kappa(artin.normalize_kappa(apat.kappa)),
        "tau1": artin.format_tau1(apat.tau1),
    }
    if apat.tau2 is not None:
        out["tau2"] = artin.format_tau2(apat)
        out["symbols"] = list(apat.symbols)
    rep = node.report
    out["sigma"] = {
        "has_sigma": rep.has_sigma,
        "generator_rank": rep.generator_rank,
        "relation_rank": rep.relation_rank,
        "is_balanced": rep.is_balanced,
        "is_terminal": rep.is_terminal,
        "is_schur_sigma": rep.is_schur_sigma,
    }
    if node.meta_sig is not None:
        out["meta_sig"] = list(node.meta_sig)
    if with_children:
        out["children"] = [node_to_dict(c) for c in node.children]
    return out


def result_to_dict(result: SearchResult) -> dict:
    return {
        "root": None if result.root is None else node_to_dict(result.root),
        "leaves": [leaf.ident.render() for leaf in result.leaves],
        "nodes_constructed": result.nodes_constructed,
        "truncated": result.truncated,
        "truncation_reason": result.truncation_reason,
    }


def render_json(data: dict) -> str:
    return json.dumps(data, ensure_ascii=False, indent=2) + "\n"


# ----------------------------------------------------------------------
# multiplets and block evolution


def multiplets(leaves: list[TreeNode]) -> dict[tuple, list[Identifier]]:
    """Leaves grouped by the signature of their metabelianization."""
    groups: dict[tuple, list[Identifier]] = {}
    for leaf in leaves:
        sig = leaf.meta_sig
        if sig is None:
            sig = metabelian_signature(leaf.pres)
            leaf.meta_sig = sig
        groups.setdefault(sig, []).append(leaf.ident)
    return {sig: sorted(ids, key=lambda i: i.render()) for sig, ids in sorted(groups.items())}


@dataclass(frozen=True)
class EvolutionEvent:
    """A block whose component multiset changed between two orders."""

    order_exp: int
    head: Aqi
    before: tuple[Aqi, ...]
    after: tuple[Aqi, ...]


def _paired_blocks(parent, child):
    """Match parent blocks to child blocks, same heads first, then by
    closest components; both lists are small so greedy pairing is fine."""
    remaining = list(range(len(child)))
    pairs = []
    for pb in parent:
        best = None
        for idx in remaining:
            cb = child[idx]
            if cb[0] != pb[0]:
                continue
            score = sum(1 for a, b in zip(sorted(pb[1]), sorted(cb[1])) if a == b)
            if best is None or score > best[0]:
                best = (score, idx)
        if best is None:
            for idx in remaining:
                best = (0, idx)
                break
        if best is not None:
            pairs.append((pb, child[best[1]]))
            remaining.remove(best[1])
    return pairs


def detect_evolution(path: list[TreeNode]) -> list[EvolutionEvent]:
    """Component changes between consecutive depth-2 patterns on a path.

    Only edges where both ends carry a second layer participate; an event
    records the child's order, so a change reported at order e happened on
    the hop into order e.
    """
    events: list[EvolutionEvent] = []
    for parent, child in zip(path, path[1:]):
        pp, cp = parent.pattern, child.pattern
        if pp is None or cp is None or pp.tau2 is None or cp.tau2 is None:
            continue
        for pb, cb in _paired_blocks(pp.tau2, cp.tau2):
            if pb[0] == cb[0] and tuple(sorted(pb[1])) != tuple(sorted(cb[1])):
                events.append(
                    EvolutionEvent(
                        order_exp=child.order_exp,
                        head=pb[0],
                        before=tuple(sorted(pb[1])),
                        after=tuple(sorted(cb[1])),
                    )
                )
    return events


def path_to(root: TreeNode, ident: Identifier) -> list[TreeNode]:
    """Nodes from the root to the addressed descendant, inclusive."""
    if root.ident.tag != ident.tag or root.ident.hops != ():
        if root.ident.hops and ident.hops[: len(root.ident.hops)] != root.ident.hops:
            raise SearchError("identifier does not extend the root's address")
    path = [root]
    node = root
    for hop in ident.hops[len(root.ident.hops):]:
        nxt = None
        for ch in node.children:
            if ch.ident.hops[-1] == hop:
                nxt = ch
                break
        if nxt is None:
            raise SearchError(f"{ident.render()} leaves the kept tree at {node.ident.render()}")
        path.append(nxt)
        node = nxt
    return path

"""Generator-inverting automorphisms and presentation balance.

The inversion condition only constrains how an automorphism acts on the
derived quotient, so detection works in the induced group of maps there
instead of walking the full automorphism group.  Derived quotients in a
rank-two descendant search are small abelian groups; their automorphism
groups have at most a few hundred elements.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import aut, subgrp
from .pc import PcPresentation
from .pgen import Cover


@dataclass(frozen=True)
class SigmaReport:
    has_sigma: bool
    generator_rank: int
    relation_rank: int
    is_balanced: bool
    is_terminal: bool
    is_schur_sigma: bool


def induced_on_derived_quotient(
    pres: PcPresentation, q: subgrp.Quotient, images: aut.Images
) -> aut.Images:
    """Action of an automorphism on the derived quotient, as images of the
    quotient generators."""
    out = []
    for a in range(q.pres.ngens):
        lifted = q.lift(q.pres.generator(a))
        out.append(q.project(aut.apply(pres, images, lifted)))
    return tuple(out)


def has_sigma(pres: PcPresentation, auts: aut.AutGroup, cap: int = 200000) -> bool:
    """Whether some automorphism inverts every element of the derived
    quotient.

    Closes the induced maps of the given generators and tests membership of
    the inversion map.  The generating set must generate the full
    automorphism group for a False to be meaningful."""
    q = subgrp.quotient(pres, subgrp.derived_subgroup(pres))
    Q = q.pres
    inversion = tuple(Q.inverse(Q.generator(a)) for a in range(Q.ngens))
    if inversion == aut.identity_images(Q):
        return True
    if not pres.conjugate_relations and auts.complete:
        # abelian group: the derived quotient is the group itself and
        # inversion commutes with everything, so it is always induced
        return True
    seeds = {induced_on_derived_quotient(pres, q, g) for g in auts.gens}
    closed = aut.closure_elements(Q, sorted(seeds), cap=cap)
    if closed is None:
        raise RuntimeError("induced automorphism closure exceeded its cap")
    return inversion in closed


def schur_sigma_report(
    pres: PcPresentation, auts: aut.AutGroup, cover: Cover
) -> SigmaReport:
    """Generator rank, relation rank read from the multiplicator, and the
    leaf predicate combining balance, inversion, and terminality."""
    d1 = pres.defining_count
    d2 = cover.mu
    sigma = has_sigma(pres, auts)
    balanced = d1 == d2
    terminal = cover.nu == 0
    return SigmaReport(
        has_sigma=sigma,
        generator_rank=d1,
        relation_rank=d2,
        is_balanced=balanced,
        is_terminal=terminal,
        is_schur_sigma=sigma and balanced and terminal,
    )

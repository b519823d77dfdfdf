"""Abelian invariants of pc groups and their subgroups.

The invariant of an abelian quotient is stored as a tuple of descending prime
exponents: (2, 1) means C9 x C3.  The rendered form is logarithmic with
multiplicities as superscripts, so (2, 1) prints as "21" and (2, 2, 1, 1, 1)
as "2²1³"; entries of ten or more are parenthesized to keep the
string unambiguous.

Invariants are computed from the Smith normal form of the relation matrix of
the abelianized (induced) presentation.  A second, independent route through
the p-power filtration of the abelianization exists so the two can be played
against each other in tests.
"""

from __future__ import annotations

from . import subgrp
from .pc import PcPresentation, vec_of_word

Aqi = tuple[int, ...]


def smith_normal_form(mat) -> list[int]:
    """Diagonal of the Smith normal form of an integer matrix, as non-negative
    integers in divisibility order (including any zeros).

    Plain elementary-operation elimination with smallest-pivot selection; the
    matrices here are tiny, so clarity beats Hermite-style sophistication.
    """
    a = [list(row) for row in mat]
    m = len(a)
    n = len(a[0]) if m else 0
    if m and any(len(row) != n for row in a):
        raise ValueError("ragged matrix")
    diag: list[int] = []
    t = 0
    while t < m and t < n:
        # pivot: entry of least nonzero magnitude in the remaining block
        pr = pc = 0
        best = 0
        for i in range(t, m):
            for j in range(t, n):
                v = abs(a[i][j])
                if v and (best == 0 or v < best):
                    best, pr, pc = v, i, j
        if best == 0:
            break
        a[t], a[pr] = a[pr], a[t]
        for row in a:
            row[t], row[pc] = row[pc], row[t]
        if a[t][t] < 0:
            a[t] = [-x for x in a[t]]
        # clear the row and column; restart whenever a remainder appears,
        # since it is strictly smaller than the pivot
        dirty = False
        for i in range(t + 1, m):
            q = a[i][t] // a[t][t]
            if q:
                a[i] = [x - q * y for x, y in zip(a[i], a[t])]
            if a[i][t]:
                dirty = True
        for j in range(t + 1, n):
            q = a[t][j] // a[t][t]
            if q:
                for row in a:
                    row[j] -= q * row[t]
            if a[t][j]:
                dirty = True
        if dirty:
            continue
        # divisibility: fold any non-multiple into the pivot column and redo
        offender = None
        d = a[t][t]
        for i in range(t + 1, m):
            for j in range(t + 1, n):
                if a[i][j] % d:
                    offender = i
                    break
            if offender is not None:
                break
        if offender is not None:
            a[t] = [x + y for x, y in zip(a[t], a[offender])]
            continue
        diag.append(d)
        t += 1
    diag += [0] * (min(m, n) - len(diag))
    return diag


def _p_exponent(d: int, p: int) -> int:
    e = 0
    while d % p == 0:
        d //= p
        e += 1
    if d != 1:
        raise ValueError(f"divisor {d * p ** e} is not a power of {p}")
    return e


def aqi(pres: PcPresentation, s: subgrp.Subgroup | None = None) -> Aqi:
    """Invariants of the abelianization of the group, or of a subgroup.

    Relation matrix of the abelianized presentation: one row p*e_i - w_i per
    power relation and one row w - e_j per conjugate relation, fed to the
    Smith normal form.  A zero on the diagonal would mean an infinite
    quotient, which a consistent pc presentation cannot produce.
    """
    if s is not None:
        pres = subgrp.induced_presentation(pres, s)
    p, n = pres.prime, pres.ngens
    if n == 0:
        return ()
    rows = []
    for i in range(n):
        w = vec_of_word(n, pres.power_relations[i])
        row = [-x for x in w]
        row[i] += p
        rows.append(row)
    for (j, _i), word in pres.conjugate_relations.items():
        w = vec_of_word(n, word)
        row = list(w)
        row[j] -= 1
        rows.append(row)
    diag = smith_normal_form(rows)
    if len(diag) < n or any(d == 0 for d in diag):
        raise ValueError("relation matrix does not define a finite quotient")
    parts = sorted((_p_exponent(d, p) for d in diag), reverse=True)
    return tuple(e for e in parts if e)


def aqi_via_filtration(pres: PcPresentation, s: subgrp.Subgroup | None = None) -> Aqi:
    """Same invariants through the p-power filtration of the abelianization:
    the number of parts with exponent at least k is the rank of the k-th
    filtration step.  Independent of the Smith form route."""
    if s is not None:
        pres = subgrp.induced_presentation(pres, s)
    der = subgrp.derived_subgroup(pres)
    q = subgrp.quotient(pres, der)
    ab = q.pres
    p = ab.prime
    term = subgrp.full_subgroup(ab)
    ranks = []
    while term.rows:
        nxt = subgrp.closure(ab, [ab.power(r, p) for r in term.rows])
        ranks.append(term.order_exp - nxt.order_exp)
        term = nxt
    # ranks[k-1] counts the parts with exponent at least k
    parts: list[int] = []
    for k in range(len(ranks), 0, -1):
        parts += [k] * (ranks[k - 1] - len(parts))
    return tuple(sorted(parts, reverse=True))


_SUPERSCRIPTS = "⁰¹²³⁴⁵⁶⁷⁸⁹"


def _sup(k: int) -> str:
    return "".join(_SUPERSCRIPTS[int(c)] for c in str(k))


def format_aqi(parts: Aqi) -> str:
    """Logarithmic rendering: descending exponents with multiplicity
    superscripts, parts of ten or more in parentheses.  The trivial group
    renders as "0"."""
    if not parts:
        return "0"
    out = []
    i = 0
    while i < len(parts):
        e = parts[i]
        j = i
        while j < len(parts) and parts[j] == e:
            j += 1
        token = f"({e})" if e >= 10 else str(e)
        if j - i > 1:
            token += _sup(j - i)
        out.append(token)
        i = j
    return "".join(out)


def parse_aqi(text: str) -> Aqi:
    text = text.strip()
    if text == "0":
        return ()
    parts: list[int] = []
    i = 0
    while i < len(text):
        c = text[i]
        if c == "(":
            j = text.index(")", i)
            e = int(text[i + 1 : j])
            i = j + 1
        elif c.isdigit():
            e = int(c)
            i += 1
        else:
            raise ValueError(f"unexpected character {c!r} in {text!r}")
        mult = 0
        digits = ""
        while i < len(text) and text[i] in _SUPERSCRIPTS:
            digits += str(_SUPERSCRIPTS.index(text[i]))
            i += 1
        mult = int(digits) if digits else 1
        if e <= 0 or mult <= 0:
            raise ValueError(f"bad part {e} with multiplicity {mult}")
        parts.extend([e] * mult)
    if parts != sorted(parts, reverse=True):
        raise ValueError(f"parts not descending in {text!r}")
    return tuple(parts)


def orders_of(parts: Aqi, p: int = 3) -> tuple[int, ...]:
    return tuple(p**e for e in parts)


def dominates(a: Aqi, b: Aqi) -> bool:
    """Whether the abelian group with invariants b is a quotient of the one
    with invariants a: pointwise domination of the descending exponents."""
    if len(b) > len(a):
        return False
    return all(be <= ae for ae, be in zip(a, b))


def rank(parts: Aqi) -> int:
    return len(parts)


def gcd_chain_ok(diag) -> bool:
    """Divisibility sanity for a Smith diagonal (helper for tests)."""
    prev = None
    for d in diag:
        if prev not in (None, 0) and d % prev:
            return False
        if prev == 0 and d != 0:
            return False
        prev = d
    return True

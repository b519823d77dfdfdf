"""Weighted polycyclic presentations of finite p-groups.

A presentation here is a power-conjugate presentation refined so that every
cyclic factor has order p: generators g_1 < g_2 < ... < g_n, one power relation
g_i^p = w_i and one conjugate relation g_j^{g_i} = w_ji per pair j > i, with
every right-hand side a normal word supported on strictly later generators
(the conjugate relation keeps its leading g_j).  Elements are exponent vectors
with entries in [0, p); products are computed by collection from the left.

Each generator carries a weight, its level in the lower exponent-p central
series.  Weights are what make bounded consistency checking and the cover
construction in :mod:`sigmaforge.pgen` work; plain element arithmetic never
looks at them.

Tail accounting: the cover construction needs to know, for a product being
collected, how often each relation of the parent presentation fired, because
in the covering group every non-defining relation picks up a central "tail"
generator.  A presentation given a tail map via :meth:`PcPresentation.set_tail_map`
counts relation applications mod p during collection; the counts are exact
because tails are central of order p, so only the multiplicity matters.
"""

from __future__ import annotations

from dataclasses import dataclass

Syllable = tuple[int, int]
Word = tuple[Syllable, ...]
Vec = tuple[int, ...]


class PcError(Exception):
    """Base error for presentation handling."""


class ParseError(PcError):
    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class InvalidPresentation(PcError):
    pass


@dataclass(frozen=True)
class Violation:
    """One failed consistency test: the association that broke, both collected
    sides."""

    kind: str  # "triple", "power_left", "power_right" or "power_self"
    indices: tuple[int, ...]
    lhs: Vec
    rhs: Vec

    def __str__(self) -> str:
        gens = ".".join(f"g{i + 1}" for i in self.indices)
        return f"{self.kind}({gens}): {self.lhs} != {self.rhs}"


def word_of_vec(v) -> Word:
    return tuple((i, e) for i, e in enumerate(v) if e)


def vec_of_word(n: int, w: Word) -> Vec:
    out = [0] * n
    for i, e in w:
        out[i] = e
    return tuple(out)


class PcPresentation:
    """A weighted pc presentation.

    Instances are treated as immutable; every structural change builds a new
    object.  Collection caches (iterated conjugates) accumulate lazily and are
    private.
    """

    __slots__ = (
        "prime",
        "ngens",
        "power_relations",
        "conjugate_relations",
        "weights",
        "defining_count",
        "definitions",
        "_pow",
        "_conj",
        "_conj_pow_cache",
        "_tails",
        "_ntails",
        "_mulcache",
        "_ident",
    )

    def __init__(
        self,
        prime: int,
        ngens: int,
        power_relations,
        conjugate_relations,
        weights,
        defining_count: int,
        definitions: dict[int, tuple] | None = None,
        validate: bool = True,
    ):
        self.prime = prime
        self.ngens = ngens
        self.power_relations = tuple(tuple(w) if w else () for w in power_relations)
        self.conjugate_relations = {
            k: tuple(w) for k, w in conjugate_relations.items() if w
        }
        self.weights = tuple(weights)
        self.defining_count = defining_count
        self.definitions = dict(definitions) if definitions is not None else None
        # flat lookup structures for the collector
        self._pow: list[Word | None] = [w if w else None for w in self.power_relations]
        self._conj: list[list[Word | None]] = [[None] * ngens for _ in range(ngens)]
        for (j, i), w in self.conjugate_relations.items():
            self._conj[j][i] = w
        self._conj_pow_cache: dict = {}
        self._tails: dict[tuple, int] | None = None
        self._ntails = 0
        self._mulcache: dict | None = None
        self._ident: Vec = (0,) * ngens
        if validate:
            self.validate()

    # ------------------------------------------------------------------
    # structure

    def validate(self) -> None:
        p, n = self.prime, self.ngens
        if p < 2:
            raise InvalidPresentation(f"prime {p} out of range")
        if len(self.power_relations) != n:
            raise InvalidPresentation("power relation count != ngens")
        if len(self.weights) != n:
            raise InvalidPresentation("weight count != ngens")
        if any(self.weights[i] > self.weights[i + 1] for i in range(n - 1)):
            raise InvalidPresentation("weights must be non-decreasing")
        if n and self.weights[0] != 1:
            raise InvalidPresentation("first generator must have weight 1")
        d = sum(1 for w in self.weights if w == 1)
        if self.defining_count != d:
            raise InvalidPresentation(
                f"defining_count {self.defining_count} != weight-1 generator count {d}"
            )
        for i, w in enumerate(self.power_relations):
            self._check_word(w, above=i, what=f"pow {i + 1}")
        for (j, i), w in self.conjugate_relations.items():
            if not (0 <= i < j < n):
                raise InvalidPresentation(f"conjugate relation indices ({j + 1},{i + 1})")
            if not w or w[0] != (j, 1):
                raise InvalidPresentation(
                    f"conj {j + 1} {i + 1}: right side must lead with g{j + 1}"
                )
            self._check_word(w[1:], above=j, what=f"conj {j + 1} {i + 1}")
        if self.definitions is not None:
            self._check_definitions()

    def _check_definitions(self) -> None:
        """Definitions, when recorded, must cover exactly the non-defining
        generators, point at existing relations, and a relation may define at
        most one generator.  The defined generator has to occur in the
        relation's word with exponent 1, or it could not be solved for."""
        n, d = self.ngens, self.defining_count
        defs = self.definitions
        if set(defs) != set(range(d, n)):
            raise InvalidPresentation("definitions must cover the non-defining generators")
        seen_rel = set()
        for k, ref in defs.items():
            if ref in seen_rel:
                raise InvalidPresentation(f"relation {ref} defines two generators")
            seen_rel.add(ref)
            if ref[0] == "pow" and len(ref) == 2 and 0 <= ref[1] < n:
                word = self.power_relations[ref[1]]
            elif ref[0] == "conj" and len(ref) == 3 and (ref[1], ref[2]) in self.conjugate_relations:
                word = self.conjugate_relations[(ref[1], ref[2])]
            else:
                raise InvalidPresentation(f"definition of g{k + 1} names no relation: {ref}")
            if (k, 1) not in word:
                raise InvalidPresentation(
                    f"definition of g{k + 1}: g{k + 1} does not occur with exponent 1"
                )

    def _check_word(self, w: Word, above: int, what: str) -> None:
        last = above
        for g, e in w:
            if g <= last:
                raise InvalidPresentation(f"{what}: support must increase past g{last + 1}")
            if not (1 <= e < self.prime):
                raise InvalidPresentation(f"{what}: exponent {e} out of [1, {self.prime})")
            last = g

    @property
    def order_exp(self) -> int:
        return self.ngens

    def identity(self) -> Vec:
        return self._ident

    def generator(self, i: int) -> Vec:
        v = [0] * self.ngens
        v[i] = 1
        return tuple(v)

    def eclass(self) -> int:
        """Exponent-p class, read off as the top weight."""
        return self.weights[-1] if self.ngens else 0

    def set_tail_map(self, tailmap: dict[tuple, int]) -> None:
        """Install relation-application accounting.

        Keys are ("pow", i) or ("conj", j, i); values are tail indices.  Meant
        for a private copy used by the cover construction: installing a map
        clears the conjugate cache so every cached word carries tail data.
        A tailed conjugate relation whose word is trivial gets an explicit
        identity-action word, otherwise the collector would never visit it.
        """
        self._tails = dict(tailmap)
        self._ntails = (max(tailmap.values()) + 1) if tailmap else 0
        self._conj_pow_cache.clear()
        for key in tailmap:
            if key[0] == "conj":
                _, j, i = key
                if self._conj[j][i] is None:
                    self._conj[j][i] = ((j, 1),)

    # ------------------------------------------------------------------
    # collection

    def collect(self, syllables) -> Vec:
        v, _ = self._collect(syllables, None)
        return v

    def collect_with_tails(self, syllables):
        """Collect and report how often each tailed relation fired (mod p).

        Requires a tail map to be installed.  Returns (vector, counts).
        """
        if self._tails is None:
            raise PcError("no tail map installed")
        tails = [0] * self._ntails
        v, _ = self._collect(syllables, tails)
        return v, tails

    def _collect(self, syllables, tails):
        p = self.prime
        n = self.ngens
        a = [0] * n
        top = -1  # highest index with a[top] != 0, maintained lazily
        stack: list[Syllable] = []
        self._push_word(stack, syllables, tails)
        pow_rel = self._pow
        tmap = self._tails
        while stack:
            g, e = stack.pop()
            while top >= 0 and a[top] == 0:
                top -= 1
            if top > g:
                # hard case: strip the part above g, fold g^e in, then put the
                # stripped part back conjugated by g^e
                tail_syl = [(h, a[h]) for h in range(g + 1, top + 1) if a[h]]
                for h, _f in tail_syl:
                    a[h] = 0
                top = g
                for h, f in reversed(tail_syl):
                    w = self._conj_pow(h, g, e, tails, mult=f)
                    if w is None:
                        stack.append((h, f))
                    else:
                        rw = w[::-1]
                        for _ in range(f):
                            stack.extend(rw)
            x = a[g] + e
            if x >= p:
                x -= p
                if tails is not None and tmap is not None:
                    t = tmap.get(("pow", g))
                    if t is not None:
                        tails[t] = (tails[t] + 1) % p
                w = pow_rel[g]
                if w:
                    stack.extend(w[::-1])
            a[g] = x
            if x and g > top:
                top = g
        return tuple(a), tails

    def _push_word(self, stack: list, syllables, tails) -> None:
        """Push a left-to-right word so the collector pops it in order,
        normalizing exponents into [1, p)."""
        p = self.prime
        tmap = self._tails
        items = list(syllables)
        for g, e in reversed(items):
            if e == 0:
                continue
            if 1 <= e < p:
                stack.append((g, e))
                continue
            if e > 0:
                q, r = divmod(e, p)
                # g^e = g^r (g^p)^q and g commutes with its own power word
                if tails is not None and tmap is not None:
                    t = tmap.get(("pow", g))
                    if t is not None:
                        tails[t] = (tails[t] + q) % p
                w = self._pow[g]
                if w:
                    rw = w[::-1]
                    for _ in range(q):
                        stack.extend(rw)
                if r:
                    stack.append((g, r))
            else:
                if tails is not None:
                    raise PcError("negative exponents not supported under tail accounting")
                v = self.inverse(self.collect([(g, -e)]))
                for syl in word_of_vec(v)[::-1]:
                    stack.append(syl)

    def _conj_pow(self, h: int, g: int, e: int, tails, mult: int = 1) -> Word | None:
        """Normal word for g_h conjugated by (g_g)^e, or None when they
        commute.  Cached; under tail accounting the cache carries the counts
        incurred while producing the word and replays them, scaled by how many
        copies of the word the caller is about to use."""
        if self._conj[h][g] is None:
            return None
        key = (h, g, e)
        hit = self._conj_pow_cache.get(key)
        if hit is None:
            hit = self._build_conj_pow(h, g, e)
            self._conj_pow_cache[key] = hit
        word, tvec = hit
        if tails is not None:
            if tvec is None:
                raise PcError("conjugate cache entry lacks tail data")
            for idx, c in enumerate(tvec):
                if c:
                    tails[idx] = (tails[idx] + c * mult) % self.prime
        return word if word else None

    def _build_conj_pow(self, h: int, g: int, e: int):
        tmap = self._tails
        base = self._conj[h][g]
        if e == 1:
            if tmap is None:
                return (base, None)
            tvec = [0] * self._ntails
            t = tmap.get(("conj", h, g))
            if t is not None:
                tvec[t] = 1
            return (base, tuple(tvec))
        prev_key = (h, g, e - 1)
        prev = self._conj_pow_cache.get(prev_key)
        if prev is None:
            prev = self._build_conj_pow(h, g, e - 1)
            self._conj_pow_cache[prev_key] = prev
        prev_word, prev_t = prev
        # conjugate the (e-1)-step word once more by g, syllable by syllable
        syl: list[Syllable] = []
        unit_tails: list[int] = []
        for k, x in prev_word:
            wk = self._conj[k][g]
            if wk is None:
                syl.append((k, x))
            else:
                if tmap is not None:
                    t = tmap.get(("conj", k, g))
                    if t is not None:
                        unit_tails.extend([t] * x)
                for _ in range(x):
                    syl.extend(wk)
        if tmap is None:
            return (word_of_vec(self.collect(syl)), None)
        acc = [0] * self._ntails
        v, _ = self._collect(syl, acc)
        for idx, c in enumerate(prev_t):
            acc[idx] = (acc[idx] + c) % self.prime
        for t in unit_tails:
            acc[t] = (acc[t] + 1) % self.prime
        return (word_of_vec(v), tuple(acc))

    # ------------------------------------------------------------------
    # element arithmetic

    def enable_multiply_cache(self, cap: int = 1 << 19) -> None:
        """Memoize products.  Worth switching on for automorphism-heavy work
        (orbit and stabilizer computations repeat the same products over and
        over); the cap stops insertions, it never evicts."""
        if self._mulcache is None:
            self._mulcache = {"cap": cap}

    def multiply(self, a: Vec, b: Vec) -> Vec:
        cache = self._mulcache
        if cache is None:
            return self.collect(word_of_vec(a) + word_of_vec(b))
        hit = cache.get((a, b))
        if hit is None:
            hit = self.collect(word_of_vec(a) + word_of_vec(b))
            if len(cache) < cache["cap"]:
                cache[(a, b)] = hit
        return hit

    def inverse(self, a: Vec) -> Vec:
        """Peel the inverse off depth by depth: after each step the partial
        product a*b has no support at or below the killed depth."""
        p = self.prime
        c = a
        inv: list[Syllable] = []
        for d in range(self.ngens):
            e = c[d]
            if e:
                k = p - e
                inv.append((d, k))
                c = self.collect(word_of_vec(c) + ((d, k),))
        return vec_of_word(self.ngens, tuple(inv))

    def power(self, a: Vec, k: int) -> Vec:
        if k < 0:
            return self.power(self.inverse(a), -k)
        out = self.identity()
        base = a
        while k:
            if k & 1:
                out = self.multiply(out, base)
            base = self.multiply(base, base)
            k >>= 1
        return out

    def conjugate(self, a: Vec, b: Vec) -> Vec:
        """a^b = b^-1 a b."""
        return self.multiply(self.multiply(self.inverse(b), a), b)

    def commutator(self, a: Vec, b: Vec) -> Vec:
        """[a, b] = a^-1 b^-1 a b."""
        return self.multiply(self.inverse(self.multiply(b, a)), self.multiply(a, b))

    def element_order(self, a: Vec) -> int:
        k = 1
        x = a
        ident = self.identity()
        while x != ident:
            x = self.power(x, self.prime)
            k *= self.prime
        return k

    # ------------------------------------------------------------------
    # consistency

    def consistency_check(self, weight_bound: int | None = None) -> list[Violation]:
        """Run the associativity test equations and report every failure.

        With no bound every triple, pair and single is tested, which certifies
        order p^n.  A weight bound restricts to tests of total weight at most
        the bound, the form used on covers where deeper tests hold for free.
        Never raises; an empty list means consistent.
        """
        p, n, w = self.prime, self.ngens, self.weights
        out: list[Violation] = []
        gen = self.generator
        mul = self.multiply

        def powvec(i: int) -> Vec:
            return vec_of_word(n, self.power_relations[i])

        for k in range(2, n):
            for j in range(1, k):
                for i in range(j):
                    if weight_bound is not None and w[k] + w[j] + w[i] > weight_bound:
                        continue
                    gk, gj, gi = gen(k), gen(j), gen(i)
                    lhs = mul(mul(gk, gj), gi)
                    rhs = mul(gk, mul(gj, gi))
                    if lhs != rhs:
                        out.append(Violation("triple", (k, j, i), lhs, rhs))
        for j in range(1, n):
            for i in range(j):
                if weight_bound is not None and w[j] + w[i] + 1 > weight_bound:
                    continue
                gj, gi = gen(j), gen(i)
                lhs = mul(powvec(j), gi)
                rhs = mul(self.power(gj, p - 1), mul(gj, gi))
                if lhs != rhs:
                    out.append(Violation("power_left", (j, i), lhs, rhs))
                lhs = mul(mul(gj, gi), self.power(gi, p - 1))
                rhs = mul(gj, powvec(i))
                if lhs != rhs:
                    out.append(Violation("power_right", (j, i), lhs, rhs))
        for i in range(n):
            if weight_bound is not None and 2 * w[i] + 1 > weight_bound:
                continue
            gi = gen(i)
            lhs = mul(powvec(i), gi)
            rhs = mul(gi, powvec(i))
            if lhs != rhs:
                out.append(Violation("power_self", (i,), lhs, rhs))
        return out

    # ------------------------------------------------------------------
    # text format

    def to_text(self, header: str | None = None) -> str:
        lines = []
        if header:
            for h in header.splitlines():
                lines.append(f"# {h}".rstrip())
        lines.append(f"p {self.prime}")
        lines.append(f"n {self.ngens}")
        if self.ngens:
            lines.append("# weights " + " ".join(str(w) for w in self.weights))
        for i, w in enumerate(self.power_relations):
            if w:
                lines.append(f"pow {i + 1} = " + _format_word(w))
        for j in range(1, self.ngens):
            for i in range(j):
                w = self.conjugate_relations.get((j, i))
                if w:
                    lines.append(f"conj {j + 1} {i + 1} = " + _format_word(w))
        if self.definitions is not None:
            for k in sorted(self.definitions):
                ref = self.definitions[k]
                if ref[0] == "pow":
                    lines.append(f"def {k + 1} = pow {ref[1] + 1}")
                else:
                    lines.append(f"def {k + 1} = conj {ref[1] + 1} {ref[2] + 1}")
        return "\n".join(lines) + "\n"

    @classmethod
    def parse(cls, text: str) -> "PcPresentation":
        """Parse the text format.  Weights are recomputed from the lower
        exponent-p central series rather than trusted from annotations, so a
        parsed presentation is always checked for weight compatibility."""
        prime: int | None = None
        ngens: int | None = None
        pows: dict[int, Word] = {}
        conjs: dict[tuple[int, int], Word] = {}
        defs: dict[int, tuple] = {}
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            tok = line.split()
            try:
                if tok[0] == "p":
                    prime = int(tok[1])
                elif tok[0] == "n":
                    ngens = int(tok[1])
                elif tok[0] == "def":
                    if ngens is None:
                        raise ParseError("def before p/n header", lineno)
                    k = int(tok[1]) - 1
                    if tok[2] != "=" or not (0 <= k < ngens):
                        raise ParseError(f"malformed definition for g{k + 1}", lineno)
                    if tok[3] == "pow":
                        defs[k] = ("pow", int(tok[4]) - 1)
                    elif tok[3] == "conj":
                        defs[k] = ("conj", int(tok[4]) - 1, int(tok[5]) - 1)
                    else:
                        raise ParseError(f"unknown definition kind {tok[3]!r}", lineno)
                elif tok[0] == "pow":
                    if prime is None or ngens is None:
                        raise ParseError("pow before p/n header", lineno)
                    i = int(tok[1]) - 1
                    if tok[2] != "=":
                        raise ParseError("expected '='", lineno)
                    if not (0 <= i < ngens):
                        raise ParseError(f"generator g{i + 1} out of range", lineno)
                    pows[i] = _parse_word(tok[3:], ngens, lineno)
                elif tok[0] == "conj":
                    if prime is None or ngens is None:
                        raise ParseError("conj before p/n header", lineno)
                    j, i = int(tok[1]) - 1, int(tok[2]) - 1
                    if tok[3] != "=":
                        raise ParseError("expected '='", lineno)
                    if not (0 <= i < j < ngens):
                        raise ParseError(f"bad conjugate pair ({j + 1},{i + 1})", lineno)
                    conjs[(j, i)] = _parse_word(tok[4:], ngens, lineno)
                else:
                    raise ParseError(f"unknown directive {tok[0]!r}", lineno)
            except ParseError:
                raise
            except (IndexError, ValueError) as exc:
                raise ParseError(f"malformed line: {raw.strip()!r}", lineno) from exc
        if prime is None or ngens is None:
            raise ParseError("missing p/n header")
        power_relations = [pows.get(i, ()) for i in range(ngens)]
        pre = cls(
            prime,
            ngens,
            power_relations,
            conjs,
            weights=[1] * ngens,
            defining_count=ngens,
            validate=False,
        )
        weights = _recompute_weights(pre)
        d = sum(1 for w in weights if w == 1)
        out = cls(prime, ngens, power_relations, conjs, weights, d, definitions=defs or None)
        if out.definitions is None and d < ngens:
            inferred = infer_definitions(out)
            if inferred is not None:
                out = cls(prime, ngens, power_relations, conjs, weights, d, definitions=inferred)
        return out


def _format_word(w: Word) -> str:
    parts = []
    for g, e in w:
        parts.append(f"g{g + 1}" if e == 1 else f"g{g + 1}^{e}")
    return " ".join(parts)


def _parse_word(tokens, ngens: int, lineno: int) -> Word:
    out: list[Syllable] = []
    for t in tokens:
        if "^" in t:
            gpart, epart = t.split("^", 1)
            e = int(epart)
        else:
            gpart, e = t, 1
        if not gpart.startswith("g"):
            raise ParseError(f"bad syllable {t!r}", lineno)
        g = int(gpart[1:]) - 1
        if not (0 <= g < ngens):
            raise ParseError(f"generator g{g + 1} out of range", lineno)
        out.append((g, e))
    return tuple(out)


def infer_definitions(pres: PcPresentation) -> dict[int, tuple] | None:
    """Guess a definition for each non-defining generator by looking for a
    relation whose word leads with that generator to the first power.  Works
    for presentations whose deeper generators were introduced one relation at
    a time; returns None when any generator stays uncovered."""
    defs: dict[int, tuple] = {}
    used: set[tuple] = set()
    for k in range(pres.defining_count, pres.ngens):
        ref = None
        for i, w in enumerate(pres.power_relations):
            if w and w[0] == (k, 1) and ("pow", i) not in used:
                ref = ("pow", i)
                break
        if ref is None:
            for (j, i) in sorted(pres.conjugate_relations):
                w = pres.conjugate_relations[(j, i)]
                # a conjugate word leads with g_j; the introduced generator
                # is the first syllable after it
                if len(w) > 1 and w[1] == (k, 1) and ("conj", j, i) not in used:
                    ref = ("conj", j, i)
                    break
        if ref is None:
            return None
        used.add(ref)
        defs[k] = ref
    return defs


def _recompute_weights(pre: PcPresentation) -> list[int]:
    """Weights from the lower exponent-p central series of the parsed group.

    Requires every series term to be a suffix subgroup of the generator
    sequence; the presentation is rejected otherwise (a base change would be
    needed first)."""
    from . import subgrp

    n = pre.ngens
    if n == 0:
        return []
    weights = [0] * n
    term = subgrp.full_subgroup(pre)
    level = 0
    while term.order_exp:
        level += 1
        start = min(term.leading)
        if set(term.leading) != set(range(start, n)):
            raise InvalidPresentation(
                "presentation is not weight-compatible: series term is not a suffix subgroup"
            )
        nxt = subgrp.exponent_p_step(pre, term)
        for d in set(term.leading) - set(nxt.leading):
            weights[d] = level
        if level > n:
            raise InvalidPresentation("exponent-p central series does not terminate")
        term = nxt
    if any(w == 0 for w in weights):
        raise InvalidPresentation("weight recomputation left a generator unassigned")
    return weights

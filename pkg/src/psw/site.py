"""Finite base categories with fully materialized composition tables.

A :class:`Site` stores every morphism explicitly and composes by table
lookup; all downstream enumeration (functoriality checks, lifting search,
section enumeration) reduces to these lookups.  Sites are immutable after
construction and safe to share across workers.

Two built-in families are provided:

* ``builtin_simplex_site(N)`` -- the full subcategory of the simplex
  category on objects 0..N, morphisms all monotone maps.
* ``builtin_cube_site(N)`` -- the full subcategory of the monotone cube
  category on 0..N: morphisms are all monotone maps {0,1}^m -> {0,1}^n.
  This contains faces, degeneracies, both connections, symmetries and
  diagonals, so the interval carries min/max connections for the
  cartesian product.

``build_site`` constructs a site from a finite presentation by bounded
shortlex rewriting.
"""

from __future__ import annotations

import itertools
from collections import deque
from typing import Iterable, Mapping, Sequence

from .errors import InvalidRelation, NonTerminatingPresentation, UnknownObject

Word = tuple[str, ...]


class Site:
    def __init__(
        self,
        name: str,
        objects: Sequence[str],
        degree: Mapping[str, int],
        morphisms: Sequence[tuple[str, str, str]],
        identity: Mapping[str, str],
        table: Mapping[tuple[str, str], str],
        meta: dict | None = None,
    ):
        self.name = name
        self.objects = tuple(objects)
        self.obj_index = {o: i for i, o in enumerate(self.objects)}
        if len(self.obj_index) != len(self.objects):
            raise InvalidRelation("duplicate object labels")
        self.degree = dict(degree)
        self.mor_labels = tuple(m[0] for m in morphisms)
        self.mor_index = {m: i for i, m in enumerate(self.mor_labels)}
        if len(self.mor_index) != len(self.mor_labels):
            raise InvalidRelation("duplicate morphism labels")
        self._src = tuple(m[1] for m in morphisms)
        self._tgt = tuple(m[2] for m in morphisms)
        self.identity = dict(identity)
        self.table = dict(table)
        self.meta = meta or {}
        # index form of the table and per-object morphism groups
        self.table_idx: dict[tuple[int, int], int] = {
            (self.mor_index[g], self.mor_index[f]): self.mor_index[h]
            for (g, f), h in self.table.items()
        }
        nobj = len(self.objects)
        self.by_target: list[list[int]] = [[] for _ in range(nobj)]
        self.by_source: list[list[int]] = [[] for _ in range(nobj)]
        for i in range(len(self.mor_labels)):
            self.by_source[self.obj_index[self._src[i]]].append(i)
            self.by_target[self.obj_index[self._tgt[i]]].append(i)
        self._hom: dict[tuple[str, str], tuple[str, ...]] = {}
        for i, lbl in enumerate(self.mor_labels):
            self._hom.setdefault((self._src[i], self._tgt[i]), ())
        for (a, b) in list(self._hom):
            self._hom[(a, b)] = tuple(
                l for l in self.mor_labels if self._src[self.mor_index[l]] == a and self._tgt[self.mor_index[l]] == b
            )

    # -- basic accessors -------------------------------------------------

    def src(self, m: str) -> str:
        return self._src[self.mor_index[m]]

    def tgt(self, m: str) -> str:
        return self._tgt[self.mor_index[m]]

    def hom(self, a: str, b: str) -> tuple[str, ...]:
        if a not in self.obj_index or b not in self.obj_index:
            raise UnknownObject(f"{a if a not in self.obj_index else b}")
        return self._hom.get((a, b), ())

    def compose(self, g: str, f: str) -> str:
        """Label of g∘f for composable f: a→b, g: b→c."""
        return self.table[(g, f)]

    def is_identity(self, m: str) -> bool:
        return self.identity.get(self.src(m)) == m and self._src[self.mor_index[m]] == self._tgt[self.mor_index[m]]

    def non_identity_endos_exist(self) -> bool:
        return any(
            self._src[i] == self._tgt[i] and not self.is_identity(l)
            for i, l in enumerate(self.mor_labels)
        )

    # -- law checking ----------------------------------------------------

    def check_laws(self) -> list[str]:
        """Exhaustive identity and associativity check; returns violations."""
        bad: list[str] = []
        for o in self.objects:
            i = self.identity.get(o)
            if i is None or self.src(i) != o or self.tgt(i) != o:
                bad.append(f"identity of {o} missing or has wrong endpoints")
        for m in self.mor_labels:
            a, b = self.src(m), self.tgt(m)
            if self.table.get((m, self.identity[a])) != m:
                bad.append(f"{m}∘id_{a} != {m}")
            if self.table.get((self.identity[b], m)) != m:
                bad.append(f"id_{b}∘{m} != {m}")
        by_src: dict[str, list[str]] = {}
        for m in self.mor_labels:
            by_src.setdefault(self.src(m), []).append(m)
        for f in self.mor_labels:
            for g in by_src.get(self.tgt(f), ()):
                gf = self.table.get((g, f))
                if gf is None:
                    bad.append(f"table missing ({g},{f})")
                    continue
                if self.src(gf) != self.src(f) or self.tgt(gf) != self.tgt(g):
                    bad.append(f"({g},{f}) endpoints wrong")
                for h in by_src.get(self.tgt(g), ()):
                    if self.table.get((h, gf)) != self.table.get((self.table.get((h, g)), f)):
                        bad.append(f"associativity fails at ({h},{g},{f})")
        return bad

    def split_epis(self) -> frozenset[str]:
        """Morphisms h with a section (h∘s = id); cached."""
        cached = self.meta.get("_split_epis")
        if cached is not None:
            return cached
        out = set()
        for h in self.mor_labels:
            a, b = self.src(h), self.tgt(h)
            idb = self.identity[b]
            if any(self.table[(h, s)] == idb for s in self.hom(b, a)):
                out.add(h)
        res = frozenset(out)
        self.meta["_split_epis"] = res
        return res

    def isos(self) -> frozenset[str]:
        """Invertible morphisms; cached."""
        cached = self.meta.get("_isos")
        if cached is not None:
            return cached
        out = set()
        for h in self.mor_labels:
            a, b = self.src(h), self.tgt(h)
            ida, idb = self.identity[a], self.identity[b]
            for s in self.hom(b, a):
                if self.table[(h, s)] == idb and self.table[(s, h)] == ida:
                    out.add(h)
                    break
        res = frozenset(out)
        self.meta["_isos"] = res
        return res

    def __repr__(self):
        return f"Site({self.name!r}, {len(self.objects)} objects, {len(self.mor_labels)} morphisms)"


# ---------------------------------------------------------------------------
# built-in sites
# ---------------------------------------------------------------------------


def _monotone_tuples(m: int, n: int) -> list[tuple[int, ...]]:
    """All weakly increasing (m+1)-tuples with values in 0..n."""
    return [t for t in itertools.combinations_with_replacement(range(n + 1), m + 1)]


def simplex_label(m: int, n: int, values: Sequence[int]) -> str:
    return f"a{m}{n}_" + "".join(str(v) for v in values)


def builtin_simplex_site(n_max: int) -> Site:
    """Truncated simplex category: objects 0..N, morphisms monotone maps.

    Morphism labels encode the value table, e.g. ``a12_02`` is the
    monotone map [1]→[2] with 0↦0, 1↦2.
    """
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    objects = [str(i) for i in range(n_max + 1)]
    degree = {str(i): i for i in range(n_max + 1)}
    morphisms: list[tuple[str, str, str]] = []
    values: dict[str, tuple[int, ...]] = {}
    for m in range(n_max + 1):
        for n in range(n_max + 1):
            for t in _monotone_tuples(m, n):
                lbl = simplex_label(m, n, t)
                morphisms.append((lbl, str(m), str(n)))
                values[lbl] = t
    identity = {str(m): simplex_label(m, m, range(m + 1)) for m in range(n_max + 1)}
    table: dict[tuple[str, str], str] = {}
    by_pair: dict[tuple[str, str], list[str]] = {}
    for lbl, s, t in morphisms:
        by_pair.setdefault((s, t), []).append(lbl)
    for (a, b), fs in by_pair.items():
        for (b2, c), gs in by_pair.items():
            if b2 != b:
                continue
            for f in fs:
                vf = values[f]
                for g in gs:
                    vg = values[g]
                    comp = tuple(vg[v] for v in vf)
                    table[(g, f)] = simplex_label(int(a), int(c), comp)
    return Site(
        f"simplex{n_max}",
        objects,
        degree,
        morphisms,
        identity,
        table,
        meta={"kind": "simplex", "values": values, "n_max": n_max},
    )


def _monotone_bool_functions(m: int) -> list[tuple[int, ...]]:
    """Monotone functions {0,1}^m -> {0,1} as value tables over vertex ints."""
    verts = list(range(1 << m))
    le = [
        [(x & y) == x for y in verts]  # x <= y pointwise iff x AND y == x
        for x in verts
    ]
    out = []
    for bits in itertools.product((0, 1), repeat=len(verts)):
        ok = True
        for x in verts:
            for y in verts:
                if le[x][y] and bits[x] > bits[y]:
                    ok = False
                    break
            if not ok:
                break
        if ok:
            out.append(bits)
    return out


def cube_label(m: int, n: int, images: Sequence[int]) -> str:
    return f"c{m}{n}_" + "-".join(str(v) for v in images)


def builtin_cube_site(n_max: int) -> Site:
    """Truncated monotone cube category: objects 0..N.

    Morphisms [m]→[n] are all monotone maps {0,1}^m → {0,1}^n, encoded by
    the image of each vertex (vertices as integers, coordinate i = bit i).
    Contains faces, degeneracies, min/max connections, symmetries and
    diagonals.  Practical up to N = 2; N = 3 materializes 8000 morphisms
    in the top hom-set alone.
    """
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    objects = [str(i) for i in range(n_max + 1)]
    degree = {str(i): i for i in range(n_max + 1)}
    coords: dict[int, list[tuple[int, ...]]] = {
        m: _monotone_bool_functions(m) for m in range(n_max + 1)
    }
    morphisms: list[tuple[str, str, str]] = []
    values: dict[str, tuple[int, ...]] = {}
    for m in range(n_max + 1):
        for n in range(n_max + 1):
            # a monotone map to {0,1}^n is an n-tuple of monotone coordinates
            for comb in itertools.product(coords[m], repeat=n):
                imgs = tuple(
                    sum(comb[j][x] << j for j in range(n)) for x in range(1 << m)
                )
                lbl = cube_label(m, n, imgs)
                morphisms.append((lbl, str(m), str(n)))
                values[lbl] = imgs
    identity = {
        str(m): cube_label(m, m, tuple(range(1 << m))) for m in range(n_max + 1)
    }
    table: dict[tuple[str, str], str] = {}
    by_pair: dict[tuple[str, str], list[str]] = {}
    for lbl, s, t in morphisms:
        by_pair.setdefault((s, t), []).append(lbl)
    for (a, b), fs in by_pair.items():
        for (b2, c), gs in by_pair.items():
            if b2 != b:
                continue
            for f in fs:
                vf = values[f]
                for g in gs:
                    vg = values[g]
                    comp = tuple(vg[v] for v in vf)
                    table[(g, f)] = cube_label(int(a), int(c), comp)
    return Site(
        f"cube{n_max}",
        objects,
        degree,
        morphisms,
        identity,
        table,
        meta={"kind": "cube", "values": values, "n_max": n_max},
    )


# ---------------------------------------------------------------------------
# presentation-based construction
# ---------------------------------------------------------------------------


def _shortlex_key(word: Word, gen_order: Mapping[str, int]):
    return (len(word), tuple(gen_order[g] for g in word))


def _rewrite(word: Word, rules: Mapping[Word, Word]) -> Word:
    """Normalize by leftmost-innermost rule application until irreducible."""
    changed = True
    w = word
    while changed:
        changed = False
        for lhs, rhs in rules.items():
            k = len(lhs)
            for i in range(len(w) - k + 1):
                if w[i : i + k] == lhs:
                    w = w[:i] + rhs + w[i + k :]
                    changed = True
                    break
            if changed:
                break
    return w


def build_site(
    name: str,
    objects: Sequence[tuple[str, int]],
    generators: Sequence[tuple[str, str, str]],
    relations: Iterable[tuple[Word, Word]] = (),
    max_word_len: int = 16,
    max_rules: int = 4000,
) -> Site:
    """Materialize a finitely presented category by bounded rewriting.

    ``objects``: (label, degree) pairs.  ``generators``: (label, src, tgt).
    ``relations``: pairs of words, each word a tuple of generator labels
    read right-to-left (``(g, f)`` denotes g∘f); the empty word denotes an
    identity and is only legal when the other side is an endo-word.

    Raises :class:`NonTerminatingPresentation` when completion or normal
    form enumeration exceeds the bounds, :class:`InvalidRelation` for
    ill-typed relations.
    """
    obj_labels = [o for o, _ in objects]
    obj_set = set(obj_labels)
    gsrc = {g: s for g, s, _ in generators}
    gtgt = {g: t for g, _, t in generators}
    for g, s, t in generators:
        if s not in obj_set or t not in obj_set:
            raise UnknownObject(f"generator {g}: {s} -> {t}")
    gen_order = {g: i for i, (g, _, _) in enumerate(generators)}

    def endpoints(word: Word) -> tuple[str, str]:
        # word (g1, ..., gk) is g1∘...∘gk : src(gk) -> tgt(g1)
        for a, b in zip(word, word[1:]):
            if gsrc[a] != gtgt[b]:
                raise InvalidRelation(f"word {'.'.join(word)} not composable")
        return gsrc[word[-1]], gtgt[word[0]]

    rules: dict[Word, Word] = {}

    def orient(u: Word, v: Word):
        if u == v:
            return
        if _shortlex_key(u, gen_order) < _shortlex_key(v, gen_order):
            u, v = v, u
        if len(u) > max_word_len:
            raise NonTerminatingPresentation(f"rule LHS too long: {'.'.join(u)}")
        rules[u] = v

    for lhs, rhs in relations:
        lhs, rhs = tuple(lhs), tuple(rhs)
        if not lhs and not rhs:
            continue
        if lhs and rhs:
            if endpoints(lhs) != endpoints(rhs):
                raise InvalidRelation(
                    f"{'.'.join(lhs)} = {'.'.join(rhs)} has mismatched endpoints"
                )
        else:
            w = lhs or rhs
            a, b = endpoints(w)
            if a != b:
                raise InvalidRelation(f"{'.'.join(w)} = id needs equal endpoints")
        orient(lhs, rhs)

    # naive completion: resolve critical pairs until stable
    for _round in range(64):
        new: list[tuple[Word, Word]] = []
        items = sorted(rules.items(), key=lambda kv: _shortlex_key(kv[0], gen_order))
        for l1, r1 in items:
            for l2, r2 in items:
                # overlap: a suffix of l1 equals a prefix of l2
                for k in range(1, min(len(l1), len(l2)) + 1):
                    if l1[len(l1) - k :] == l2[:k]:
                        sup = l1 + l2[k:]
                        a = _rewrite(r1 + l2[k:], rules)
                        b = _rewrite(l1[: len(l1) - k] + r2, rules)
                        if a != b:
                            new.append((a, b))
                # l2 inside l1
                if len(l2) < len(l1):
                    for i in range(len(l1) - len(l2) + 1):
                        if l1[i : i + len(l2)] == l2:
                            a = _rewrite(r1, rules)
                            b = _rewrite(l1[:i] + r2 + l1[i + len(l2) :], rules)
                            if a != b:
                                new.append((a, b))
        if not new:
            break
        for u, v in new:
            orient(_rewrite(u, rules), _rewrite(v, rules))
            if len(rules) > max_rules:
                raise NonTerminatingPresentation("completion exceeded rule budget")
    else:
        raise NonTerminatingPresentation("completion did not stabilize")

    # enumerate irreducible words breadth-first
    def irreducible(w: Word) -> bool:
        return all(
            w[i : i + len(l)] != l
            for l in rules
            for i in range(len(w) - len(l) + 1)
        )

    words: dict[Word, tuple[str, str]] = {}
    queue: deque[Word] = deque()
    for g in gen_order:
        w = _rewrite((g,), rules)
        if w and w not in words and irreducible(w):
            words[w] = endpoints(w)
            queue.append(w)
    while queue:
        w = queue.popleft()
        for g in gen_order:
            if gsrc[g] != words[w][1]:
                continue
            nw = _rewrite((g,) + w, rules)
            if not nw or nw in words:
                continue
            if len(nw) > max_word_len:
                raise NonTerminatingPresentation(
                    f"irreducible word exceeds bound: {'.'.join(nw)}"
                )
            if irreducible(nw):
                words[nw] = endpoints(nw)
                queue.append(nw)

    def word_label(w: Word) -> str:
        return ".".join(w)

    morphisms: list[tuple[str, str, str]] = []
    identity: dict[str, str] = {}
    for o in obj_labels:
        lbl = f"id@{o}"
        identity[o] = lbl
        morphisms.append((lbl, o, o))
    ordered = sorted(words, key=lambda w: _shortlex_key(w, gen_order))
    for w in ordered:
        a, b = words[w]
        morphisms.append((word_label(w), a, b))

    def normal_label(w: Word, a: str) -> str:
        if not w:
            return identity[a]
        return word_label(w)

    table: dict[tuple[str, str], str] = {}
    all_words: dict[str, tuple[Word, str, str]] = {}
    for o in obj_labels:
        all_words[identity[o]] = ((), o, o)
    for w in ordered:
        a, b = words[w]
        all_words[word_label(w)] = (w, a, b)
    for f, (wf, af, bf) in all_words.items():
        for g, (wg, ag, bg) in all_words.items():
            if ag != bf:
                continue
            comp = _rewrite(wg + wf, rules)
            lbl = normal_label(comp, af)
            if lbl not in all_words:
                raise NonTerminatingPresentation(
                    f"composite {'.'.join(comp) or 'id'} escaped the enumerated set"
                )
            table[(g, f)] = lbl

    degree = dict(objects)
    site = Site(name, obj_labels, degree, morphisms, identity, table, meta={"kind": "presented"})
    bad = site.check_laws()
    if bad:
        raise NonTerminatingPresentation("presentation closure inconsistent: " + bad[0])
    return site

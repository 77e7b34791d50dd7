"""Locally cartesian closed structure: base change, pushforward, exponentials.

Sections are enumerated with the shared backtracking engine; an element of
``hom(A, B)`` at level c is literally a natural map y(c) x A -> B, and an
element of the pushforward of p: X -> A along m: A -> B over (c, b) is a
natural map E -> X over A, where E is the pullback of b's classifying map
along m.  Element labels record the section's values on a generating set,
so reruns are byte-identical.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

from .errors import NotMono
from .limits import Span, pair_label, pullback, pullback_mediator, product
from .presheaf import (
    ArrowSquare,
    Presheaf,
    PresheafMap,
    compose_maps,
    identity_map,
    inverse_of,
    is_levelwise_bijection,
    is_mono,
    representable,
    yoneda_map,
)
from .search import NatSearch


@dataclass
class SliceObject:
    """An object of a slice category: a presheaf with its anchor map."""

    total: Presheaf
    anchor: PresheafMap  # total -> base

    @property
    def base(self) -> Presheaf:
        return self.anchor.target


@dataclass
class BaseChange:
    slice: SliceObject
    to_total: PresheafMap  # new total -> old total


def base_change(f: PresheafMap, q: SliceObject, name: str | None = None) -> BaseChange:
    """Pull the slice object q back along f into a slice over f's source."""
    if q.anchor.target != f.target:
        raise ValueError("base_change: q is not a slice over the target of f")
    pb = pullback(f, q.anchor, name=name or f"bc({f.name},{q.total.name})")
    return BaseChange(SliceObject(pb.obj, pb.p1), pb.p2)


def _signature_label(section: PresheafMap, gens: list[tuple[str, str]]) -> str:
    parts = [f"{e}>{section.components[o][e]}" for o, e in gens]
    return "[" + ",".join(parts) + "]"


class Exponential:
    """hom(A, B) with evaluation data retained for functorial use."""

    def __init__(self, a: Presheaf, b: Presheaf, name: str | None = None):
        site = a.site
        self.a = a
        self.b = b
        self.products: dict[str, Span] = {}
        self.maps: dict[str, dict[str, PresheafMap]] = {}
        self._label_of: dict[str, dict[tuple, str]] = {}
        levels: dict[str, tuple[str, ...]] = {}
        for c in site.objects:
            yc = representable(site, c)
            sp = product(yc, a, name=f"(y:{c}*{a.name})")
            self.products[c] = sp
            sections = NatSearch(sp.obj, b, name=f"sec{c}").all()
            keyed = sorted(
                (self._assignment_key(s), s) for s in sections
            )
            gens = sp.obj.generators()
            lab: dict[str, PresheafMap] = {}
            lmap: dict[tuple, str] = {}
            lvl = []
            for key, s in keyed:
                label = _signature_label(s, gens)
                lvl.append(label)
                lab[label] = s
                lmap[key] = label
            levels[c] = tuple(lvl)
            self.maps[c] = lab
            self._label_of[c] = lmap
        action: dict[str, dict[str, str]] = {}
        for m in site.mor_labels:
            c_src, c_tgt = site.src(m), site.tgt(m)
            table = {}
            for t_label in levels[c_tgt]:
                table[t_label] = self._restrict(m, c_src, c_tgt, t_label)
            action[m] = table
        self.obj = Presheaf(site, name or f"hom({a.name},{b.name})", levels, action)

    def _assignment_key(self, s: PresheafMap) -> tuple:
        site = s.site
        return tuple(
            tuple(s.components[o][e] for e in s.source.levels[o]) for o in site.objects
        )

    def _restrict(self, m: str, c_src: str, c_tgt: str, t_label: str) -> str:
        """Action by precomposition with y(m) x A."""
        site = self.a.site
        t = self.maps[c_tgt][t_label]
        sp_src = self.products[c_src]
        key = []
        comps: dict[str, dict[str, str]] = {}
        for d in site.objects:
            row = {}
            for g in representable_hom(site, d, c_src):
                fg = site.compose(m, g)
                for a_elt in self.a.levels[d]:
                    row[pair_label(g, a_elt)] = t.components[d][pair_label(fg, a_elt)]
            comps[d] = row
            key.append(tuple(row[e] for e in sp_src.obj.levels[d]))
        return self._label_of[c_src][tuple(key)]

    # -- helpers ------------------------------------------------------------

    def evaluate(self, c: str, label: str, g: str, a_elt: str) -> str:
        """Value of the section `label` at (g: d -> c, a)."""
        d = self.a.site.src(g)
        return self.maps[c][label].components[d][pair_label(g, a_elt)]

    def label_for_assignment(self, c: str, comps: Mapping[str, Mapping[str, str]]) -> str:
        site = self.a.site
        sp = self.products[c]
        key = tuple(
            tuple(comps[o][e] for e in sp.obj.levels[o]) for o in site.objects
        )
        return self._label_of[c][key]

    def transpose_in(self, x_prod: Span, h: PresheafMap, name: str | None = None) -> PresheafMap:
        """Curry h: X x A -> B into X -> hom(A, B); x_prod is the product used by h."""
        site = self.a.site
        x = x_prod.p1.target
        comps: dict[str, dict[str, str]] = {o: {} for o in site.objects}
        for c in site.objects:
            for xe in x.levels[c]:
                sec: dict[str, dict[str, str]] = {}
                for d in site.objects:
                    row = {}
                    for g in representable_hom(site, d, c):
                        xg = x.action[g][xe]
                        for a_elt in self.a.levels[d]:
                            row[pair_label(g, a_elt)] = h.components[d][
                                pair_label(xg, a_elt)
                            ]
                    sec[d] = row
                comps[c][xe] = self.label_for_assignment(c, sec)
        return PresheafMap(x, self.obj, name or f"curry:{h.name}", comps)

    def transpose_out(self, k: PresheafMap, x_prod: Span, name: str | None = None) -> PresheafMap:
        """Uncurry k: X -> hom(A, B) into X x A -> B over the given product."""
        site = self.a.site
        comps: dict[str, dict[str, str]] = {o: {} for o in site.objects}
        for c in site.objects:
            idc = site.identity[c]
            for pe in x_prod.obj.levels[c]:
                xe = x_prod.p1.components[c][pe]
                ae = x_prod.p2.components[c][pe]
                comps[c][pe] = self.evaluate(c, k.components[c][xe], idc, ae)
        return PresheafMap(x_prod.obj, self.b, name or f"uncurry:{k.name}", comps)

    def precompose(self, u: PresheafMap, target: "Exponential", name: str | None = None) -> PresheafMap:
        """hom(u, B): self = hom(A, B) -> target = hom(A', B) for u: A' -> A."""
        if u.target != self.a or target.a != u.source or target.b != self.b:
            raise ValueError("precompose: exponentials do not match u")
        site = self.a.site
        comps: dict[str, dict[str, str]] = {o: {} for o in site.objects}
        for c in site.objects:
            for label in self.obj.levels[c]:
                t = self.maps[c][label]
                sec: dict[str, dict[str, str]] = {}
                for d in site.objects:
                    row = {}
                    for g in representable_hom(site, d, c):
                        for a_elt in u.source.levels[d]:
                            row[pair_label(g, a_elt)] = t.components[d][
                                pair_label(g, u.components[d][a_elt])
                            ]
                    sec[d] = row
                comps[c][label] = target.label_for_assignment(c, sec)
        return PresheafMap(self.obj, target.obj, name or f"hom({u.name},{self.b.name})", comps)

    def postcompose(self, p: PresheafMap, target: "Exponential", name: str | None = None) -> PresheafMap:
        """hom(A, p): self = hom(A, B) -> target = hom(A, B') for p: B -> B'."""
        if p.source != self.b or target.a != self.a or target.b != p.target:
            raise ValueError("postcompose: exponentials do not match p")
        site = self.a.site
        comps: dict[str, dict[str, str]] = {o: {} for o in site.objects}
        for c in site.objects:
            for label in self.obj.levels[c]:
                t = self.maps[c][label]
                sec = {
                    d: {
                        e: p.components[d][t.components[d][e]]
                        for e in t.source.levels[d]
                    }
                    for d in site.objects
                }
                comps[c][label] = target.label_for_assignment(c, sec)
        return PresheafMap(self.obj, target.obj, name or f"hom({self.a.name},{p.name})", comps)


def representable_hom(site, d: str, c: str) -> tuple[str, ...]:
    return site.hom(d, c)


def exponential(a: Presheaf, b: Presheaf, name: str | None = None) -> Exponential:
    return Exponential(a, b, name=name)


class Pushforward:
    """Dependent product of p: X -> A along m: A -> B, with section data."""

    def __init__(self, m: PresheafMap, p: SliceObject, name: str | None = None):
        if p.anchor.target != m.source:
            raise ValueError("pushforward: p is not a slice over the source of m")
        site = m.site
        self.m = m
        self.p = p
        a_obj, b_obj, x = m.source, m.target, p.total
        self.domains: dict[tuple[str, str], Span] = {}   # (c, b) -> E
        self.maps: dict[tuple[str, str], dict[str, PresheafMap]] = {}
        self._label_of: dict[tuple[str, str], dict[tuple, str]] = {}
        self._b_of: dict[tuple[str, str], str] = {}
        levels: dict[str, tuple[str, ...]] = {}
        fiber = _fiber_table(p.anchor)
        for c in site.objects:
            lvl: list[str] = []
            for b_elt in b_obj.levels[c]:
                e_span = pullback(
                    yoneda_map(b_obj, c, b_elt), m, name=f"E({c},{b_elt})"
                )
                key_pairs = []
                search = NatSearch(
                    e_span.obj,
                    x,
                    allowed=lambda obj, pe, _pr=e_span: fiber[obj][
                        _pr.p2.components[obj][pe]
                    ],
                    name=f"sec({c},{b_elt})",
                )
                sections = search.all()
                keyed = sorted(
                    (
                        tuple(
                            tuple(s.components[o][e] for e in e_span.obj.levels[o])
                            for o in site.objects
                        ),
                        s,
                    )
                    for s in sections
                )
                gens = e_span.obj.generators()
                lab: dict[str, PresheafMap] = {}
                lmap: dict[tuple, str] = {}
                for key, s in keyed:
                    label = f"pf:{b_elt}:" + _signature_label(s, gens)
                    lvl.append(label)
                    lab[label] = s
                    lmap[key] = label
                    self._b_of[(c, label)] = b_elt
                self.domains[(c, b_elt)] = e_span
                self.maps[(c, b_elt)] = lab
                self._label_of[(c, b_elt)] = lmap
            levels[c] = tuple(lvl)
        action: dict[str, dict[str, str]] = {}
        for mo in site.mor_labels:
            c_src, c_tgt = site.src(mo), site.tgt(mo)
            table = {}
            for label in levels[c_tgt]:
                b_elt = self._b_of[(c_tgt, label)]
                b_new = b_obj.action[mo][b_elt]
                sec = self.maps[(c_tgt, b_elt)][label]
                e_new = self.domains[(c_src, b_new)]
                key = []
                for d in site.objects:
                    row = []
                    for pe in e_new.obj.levels[d]:
                        g = e_new.p1.components[d][pe]  # g: d -> c_src in y(c_src)
                        a_elt = e_new.p2.components[d][pe]
                        fg = site.compose(mo, g)
                        row.append(
                            sec.components[d][pair_label(fg, a_elt)]
                        )
                    key.append(tuple(row))
                table[label] = self._label_of[(c_src, b_new)][tuple(key)]
            action[mo] = table
        total = Presheaf(
            site, name or f"pf({m.name},{x.name})", levels, action
        )
        anchor = PresheafMap(
            total,
            b_obj,
            f"anchor:{total.name}",
            {
                c: {label: self._b_of[(c, label)] for label in levels[c]}
                for c in site.objects
            },
        )
        self.slice = SliceObject(total, anchor)

    def section_label(self, c: str, b_elt: str, comps: Mapping[str, Mapping[str, str]]) -> str:
        site = self.m.site
        e_span = self.domains[(c, b_elt)]
        key = tuple(
            tuple(comps[o][e] for e in e_span.obj.levels[o]) for o in site.objects
        )
        return self._label_of[(c, b_elt)][key]

    def counit(self) -> tuple[BaseChange, PresheafMap, ArrowSquare]:
        """Base change of the pushforward along m, with evaluation at identities.

        Returns (m^* m_* p, counit map to X, counit square).  When m is a
        mono the counit is a levelwise bijection (the reflection).
        """
        site = self.m.site
        bc = base_change(self.m, self.slice)
        x = self.p.total
        comps: dict[str, dict[str, str]] = {o: {} for o in site.objects}
        for c in site.objects:
            idc = site.identity[c]
            for pe in bc.slice.total.levels[c]:
                a_elt = bc.slice.anchor.components[c][pe]
                label = bc.to_total.components[c][pe]
                b_elt = self._b_of[(c, label)]
                sec = self.maps[(c, b_elt)][label]
                comps[c][pe] = sec.components[c][pair_label(idc, a_elt)]
        eps = PresheafMap(bc.slice.total, x, f"counit:{self.slice.total.name}", comps)
        square = ArrowSquare(
            left=bc.slice.anchor,
            right=self.p.anchor,
            top=eps,
            bottom=identity_map(self.m.source),
            name="counit-square",
        )
        return bc, eps, square

    def transpose(self, name: str | None = None) -> PresheafMap:
        """The canonical comparison X -> m_* X over m (defined for mono m).

        Sends x over a to the section g, a' |-> x.g; the fiber constraint
        pins a' = a.g because m is injective.
        """
        if not is_mono(self.m):
            raise NotMono("transpose needs a mono")
        site = self.m.site
        x = self.p.total
        comps: dict[str, dict[str, str]] = {o: {} for o in site.objects}
        for c in site.objects:
            for xe in x.levels[c]:
                a0 = self.p.anchor.components[c][xe]
                b0 = self.m.components[c][a0]
                e_span = self.domains[(c, b0)]
                sec = {
                    d: {
                        pe: x.action[e_span.p1.components[d][pe]][xe]
                        for pe in e_span.obj.levels[d]
                    }
                    for d in site.objects
                }
                comps[c][xe] = self.section_label(c, b0, sec)
        return PresheafMap(x, self.slice.total, name or f"eta:{x.name}", comps)

    def extension_square(self) -> ArrowSquare:
        """The pullback square exhibiting m_* p as an extension of p (mono m)."""
        u = self.transpose()
        return ArrowSquare(
            left=self.p.anchor,
            right=self.slice.anchor,
            top=u,
            bottom=self.m,
            name=f"ext:{self.slice.total.name}",
        )


def _fiber_table(anchor: PresheafMap) -> dict[str, dict[str, tuple[str, ...]]]:
    """Per object, per base element, the anchor fiber in level order."""
    site = anchor.site
    out: dict[str, dict[str, tuple[str, ...]]] = {}
    for o in site.objects:
        tab: dict[str, list[str]] = {e: [] for e in anchor.target.levels[o]}
        for x in anchor.source.levels[o]:
            tab[anchor.components[o][x]].append(x)
        out[o] = {e: tuple(v) for e, v in tab.items()}
    return out


def pushforward(m: PresheafMap, p: SliceObject, name: str | None = None) -> Pushforward:
    return Pushforward(m, p, name=name)


def slice_exponential_monad(
    m: PresheafMap, q: SliceObject
) -> tuple[Pushforward, PresheafMap]:
    """The monad (-)^A = m_* m^* on slices over B, with its unit at q.

    Returns (m_* m^* q as a Pushforward, unit: q.total -> (q^A).total).
    """
    bc = base_change(m, q)
    pf = Pushforward(m, bc.slice)
    site = m.site
    comps: dict[str, dict[str, str]] = {o: {} for o in site.objects}
    for c in site.objects:
        for ye in q.total.levels[c]:
            b0 = q.anchor.components[c][ye]
            e_span = pf.domains[(c, b0)]
            sec = {
                d: {
                    pe: pair_label(
                        e_span.p2.components[d][pe],
                        q.total.action[e_span.p1.components[d][pe]][ye],
                    )
                    for pe in e_span.obj.levels[d]
                }
                for d in site.objects
            }
            comps[c][ye] = pf.section_label(c, b0, sec)
    unit = PresheafMap(q.total, pf.slice.total, f"unit:{q.total.name}", comps)
    return pf, unit


def naive_sections(
    m: PresheafMap, p: SliceObject, c: str, b_elt: str, cap: int = 10**6
) -> int:
    """Independent count of pushforward sections at (c, b) by raw product
    enumeration plus a posteriori naturality filtering.

    Used as an oracle against :class:`Pushforward`; raises RuntimeError when
    the raw candidate space exceeds the cap.
    """
    import itertools

    site = m.site
    x = p.total
    e_span = pullback(yoneda_map(m.target, c, b_elt), m)
    fiber = _fiber_table(p.anchor)
    keys: list[tuple[str, str]] = []
    cand: list[tuple[str, ...]] = []
    total = 1
    for o in site.objects:
        for pe in e_span.obj.levels[o]:
            keys.append((o, pe))
            choices = fiber[o][e_span.p2.components[o][pe]]
            cand.append(choices)
            total *= max(len(choices), 1)
            if not choices:
                return 0
            if total > cap:
                raise RuntimeError("candidate space exceeds cap")
    count = 0
    for combo in itertools.product(*cand):
        val = {k: v for k, v in zip(keys, combo)}
        ok = True
        for mo in site.mor_labels:
            a_, b_ = site.src(mo), site.tgt(mo)
            for pe in e_span.obj.levels[b_]:
                if x.action[mo][val[(b_, pe)]] != val[(a_, e_span.obj.action[mo][pe])]:
                    ok = False
                    break
            if not ok:
                break
        if ok:
            count += 1
    return count

"""Finite limits and colimits of presheaves, computed pointwise.

Labels are canonical: product/pullback elements are ``(x|y)`` pairs,
coproduct elements are tagged ``i0:x`` / ``i1:y``, pushout classes are
named by their least tagged member.  Reruns over equal inputs are
byte-identical.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import NotMono
from .presheaf import (
    ArrowSquare,
    Presheaf,
    PresheafMap,
    is_levelwise_bijection,
    is_mono,
    sub_presheaf,
)


def pair_label(x: str, y: str) -> str:
    return f"({x}|{y})"


@dataclass
class Span:
    """Product-like result: object with its two projections."""

    obj: Presheaf
    p1: PresheafMap
    p2: PresheafMap


@dataclass
class Cospan:
    """Coproduct-like result: object with its two injections."""

    obj: Presheaf
    i1: PresheafMap
    i2: PresheafMap


def product(x: Presheaf, y: Presheaf, name: str | None = None) -> Span:
    site = x.site
    levels = {
        o: tuple(pair_label(a, b) for a in x.levels[o] for b in y.levels[o])
        for o in site.objects
    }
    pairs = {
        o: {pair_label(a, b): (a, b) for a in x.levels[o] for b in y.levels[o]}
        for o in site.objects
    }
    action = {}
    for m in site.mor_labels:
        a_, b_ = site.src(m), site.tgt(m)
        action[m] = {
            e: pair_label(x.action[m][p[0]], y.action[m][p[1]])
            for e, p in pairs[b_].items()
        }
    obj = Presheaf(site, name or f"({x.name}*{y.name})", levels, action)
    p1 = PresheafMap(obj, x, f"pr1:{obj.name}", {o: {e: p[0] for e, p in pairs[o].items()} for o in site.objects})
    p2 = PresheafMap(obj, y, f"pr2:{obj.name}", {o: {e: p[1] for e, p in pairs[o].items()} for o in site.objects})
    return Span(obj, p1, p2)


def pair_into_product(prod: Span, f: PresheafMap, g: PresheafMap, name: str | None = None) -> PresheafMap:
    """The mediator <f, g> into a computed product (also works for pullbacks)."""
    if f.source != g.source:
        raise ValueError("pairing needs a common source")
    comps = {
        o: {
            e: pair_label(f.components[o][e], g.components[o][e])
            for e in f.source.levels[o]
        }
        for o in f.site.objects
    }
    return PresheafMap(f.source, prod.obj, name or f"<{f.name},{g.name}>", comps)


def product_map(prod_src: Span, prod_tgt: Span, f: PresheafMap, g: PresheafMap, name: str | None = None) -> PresheafMap:
    """f x g between computed products."""
    from .presheaf import compose_maps

    return pair_into_product(
        prod_tgt,
        compose_maps(f, prod_src.p1),
        compose_maps(g, prod_src.p2),
        name or f"({f.name}x{g.name})",
    )


def coproduct(x: Presheaf, y: Presheaf, name: str | None = None) -> Cospan:
    site = x.site
    levels = {
        o: tuple(f"i0:{e}" for e in x.levels[o]) + tuple(f"i1:{e}" for e in y.levels[o])
        for o in site.objects
    }
    action = {}
    for m in site.mor_labels:
        action[m] = {}
        for e in x.levels[site.tgt(m)]:
            action[m][f"i0:{e}"] = f"i0:{x.action[m][e]}"
        for e in y.levels[site.tgt(m)]:
            action[m][f"i1:{e}"] = f"i1:{y.action[m][e]}"
    obj = Presheaf(site, name or f"({x.name}+{y.name})", levels, action)
    i1 = PresheafMap(x, obj, f"in1:{obj.name}", {o: {e: f"i0:{e}" for e in x.levels[o]} for o in site.objects})
    i2 = PresheafMap(y, obj, f"in2:{obj.name}", {o: {e: f"i1:{e}" for e in y.levels[o]} for o in site.objects})
    return Cospan(obj, i1, i2)


def copair_out_of_coproduct(cop: Cospan, f: PresheafMap, g: PresheafMap, name: str | None = None) -> PresheafMap:
    """The mediator [f, g] out of a computed coproduct."""
    if f.target != g.target:
        raise ValueError("copairing needs a common target")
    comps: dict[str, dict[str, str]] = {}
    for o in f.site.objects:
        d = {}
        for e in f.source.levels[o]:
            d[f"i0:{e}"] = f.components[o][e]
        for e in g.source.levels[o]:
            d[f"i1:{e}"] = g.components[o][e]
        comps[o] = d
    return PresheafMap(cop.obj, f.target, name or f"[{f.name},{g.name}]", comps)


def pullback(f: PresheafMap, g: PresheafMap, name: str | None = None) -> Span:
    """Pullback of f: X -> Z and g: Y -> Z, levelwise pairs with f(x) = g(y)."""
    if f.target != g.target:
        raise ValueError("pullback needs a common target")
    site = f.site
    x, y = f.source, g.source
    levels = {}
    pairs = {}
    for o in site.objects:
        chosen = [
            (a, b)
            for a in x.levels[o]
            for b in y.levels[o]
            if f.components[o][a] == g.components[o][b]
        ]
        levels[o] = tuple(pair_label(a, b) for a, b in chosen)
        pairs[o] = {pair_label(a, b): (a, b) for a, b in chosen}
    action = {}
    for m in site.mor_labels:
        b_ = site.tgt(m)
        action[m] = {
            e: pair_label(x.action[m][p[0]], y.action[m][p[1]])
            for e, p in pairs[b_].items()
        }
    obj = Presheaf(site, name or f"pb({f.name},{g.name})", levels, action)
    p1 = PresheafMap(obj, x, f"pr1:{obj.name}", {o: {e: p[0] for e, p in pairs[o].items()} for o in site.objects})
    p2 = PresheafMap(obj, y, f"pr2:{obj.name}", {o: {e: p[1] for e, p in pairs[o].items()} for o in site.objects})
    return Span(obj, p1, p2)


def pullback_mediator(pb: Span, w1: PresheafMap, w2: PresheafMap, name: str | None = None) -> PresheafMap:
    """Mediator into a computed pullback from a commuting cone (w1, w2)."""
    return pair_into_product(pb, w1, w2, name or f"med<{w1.name},{w2.name}>")


def pushout(f: PresheafMap, g: PresheafMap, name: str | None = None) -> Cospan:
    """Pushout of f: Z -> X and g: Z -> Y; levelwise quotient of X + Y."""
    if f.source != g.source:
        raise ValueError("pushout needs a common source")
    site = f.site
    x, y = f.target, g.target
    z = f.source

    # union-find per level over tagged labels
    parent: dict[str, dict[str, str]] = {}

    def find(o: str, e: str) -> str:
        p = parent[o]
        while p[e] != e:
            p[e] = p[p[e]]
            e = p[e]
        return e

    def union(o: str, a: str, b: str) -> None:
        ra, rb = find(o, a), find(o, b)
        if ra == rb:
            return
        lo, hi = (ra, rb) if ra < rb else (rb, ra)
        parent[o][hi] = lo

    for o in site.objects:
        parent[o] = {}
        for e in x.levels[o]:
            parent[o][f"i0:{e}"] = f"i0:{e}"
        for e in y.levels[o]:
            parent[o][f"i1:{e}"] = f"i1:{e}"
        for e in z.levels[o]:
            union(o, f"i0:{f.components[o][e]}", f"i1:{g.components[o][e]}")

    # class representative = least tagged label; level order = first
    # appearance scanning X then Y in their canonical orders
    levels = {}
    rep_of: dict[str, dict[str, str]] = {}
    for o in site.objects:
        reps: list[str] = []
        seen = set()
        rep_of[o] = {}
        for e in list(f"i0:{a}" for a in x.levels[o]) + list(
            f"i1:{b}" for b in y.levels[o]
        ):
            r = find(o, e)
            rep_of[o][e] = r
            if r not in seen:
                seen.add(r)
                reps.append(r)
        levels[o] = tuple(reps)

    def tagged_act(m: str, tag_e: str) -> str:
        tag, e = tag_e.split(":", 1)
        if tag == "i0":
            return f"i0:{x.action[m][e]}"
        return f"i1:{y.action[m][e]}"

    action = {}
    for m in site.mor_labels:
        b_ = site.tgt(m)
        table = {}
        for r in levels[b_]:
            table[r] = rep_of[site.src(m)][tagged_act(m, r)]
        action[m] = table
    obj = Presheaf(site, name or f"po({f.name},{g.name})", levels, action)
    i1 = PresheafMap(
        x, obj, f"in1:{obj.name}", {o: {e: rep_of[o][f"i0:{e}"] for e in x.levels[o]} for o in site.objects}
    )
    i2 = PresheafMap(
        y, obj, f"in2:{obj.name}", {o: {e: rep_of[o][f"i1:{e}"] for e in y.levels[o]} for o in site.objects}
    )
    return Cospan(obj, i1, i2)


def pushout_induced(po: Cospan, h1: PresheafMap, h2: PresheafMap, name: str | None = None) -> PresheafMap:
    """Mediator out of a computed pushout for a commuting cocone (h1, h2).

    Raises ValueError when the cocone does not respect the identifications.
    """
    if h1.target != h2.target:
        raise ValueError("cocone needs a common target")
    site = po.obj.site
    comps: dict[str, dict[str, str]] = {o: {} for o in site.objects}
    for o in site.objects:
        for e, r in ((e, po.i1.components[o][e]) for e in po.i1.source.levels[o]):
            v = h1.components[o][e]
            prev = comps[o].get(r)
            if prev is not None and prev != v:
                raise ValueError(f"cocone not compatible with pushout at {o}:{r}")
            comps[o][r] = v
        for e, r in ((e, po.i2.components[o][e]) for e in po.i2.source.levels[o]):
            v = h2.components[o][e]
            prev = comps[o].get(r)
            if prev is not None and prev != v:
                raise ValueError(f"cocone not compatible with pushout at {o}:{r}")
            comps[o][r] = v
    return PresheafMap(po.obj, h1.target, name or f"[{h1.name},{h2.name}]", comps)


def is_pullback_square(sq: ArrowSquare) -> bool:
    """True iff the mediator to the computed pullback is a levelwise bijection.

    The square reads: ``top: A -> B``, ``left: A -> C``, ``right: B -> D``,
    ``bottom: C -> D``; it is tested as a pullback of (bottom, right).
    """
    if not sq.commutes():
        return False
    pb = pullback(sq.bottom, sq.right)
    med = pullback_mediator(pb, sq.left, sq.top)
    return is_levelwise_bijection(med)


def effective_union(m1: PresheafMap, m2: PresheafMap, name: str | None = None) -> PresheafMap:
    """Union of two subobjects of a common target, as a subobject inclusion."""
    if not is_mono(m1) or not is_mono(m2):
        raise NotMono("effective_union needs monos")
    if m1.target != m2.target:
        raise ValueError("unions need a common target")
    site = m1.site
    chosen = {
        o: set(m1.components[o].values()) | set(m2.components[o].values())
        for o in site.objects
    }
    _, incl = sub_presheaf(m1.target, chosen, name=name or f"union:{m1.name},{m2.name}")
    return incl

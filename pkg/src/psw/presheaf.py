"""Finite presheaves, their maps, and commuting squares.

A presheaf assigns to every site object a finite ordered list of element
labels and to every site morphism f: a→b a function from the level at b
to the level at a (contravariant).  Everything is validated exhaustively
against the site's full composition table.

Presheaves and maps are immutable after construction; internal index
caches are built lazily and shared by the search engine.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Sequence

from .errors import NotMono, UnknownObject
from .site import Site


@dataclass(frozen=True)
class ValidationReport:
    ok: bool
    problems: tuple[str, ...] = ()

    def __bool__(self) -> bool:
        return self.ok


class Presheaf:
    def __init__(
        self,
        site: Site,
        name: str,
        levels: Mapping[str, Sequence[str]],
        action: Mapping[str, Mapping[str, str]],
    ):
        self.site = site
        self.name = name
        self.levels = {o: tuple(levels.get(o, ())) for o in site.objects}
        self.action = {m: dict(action.get(m, {})) for m in site.mor_labels}
        self._idx: dict[str, dict[str, int]] = {
            o: {e: i for i, e in enumerate(self.levels[o])} for o in site.objects
        }
        self._act_idx: dict[int, list[int]] = {}
        self._generators: list[tuple[str, str]] | None = None
        self._order: list[tuple[int, int]] | None = None

    # -- accessors ---------------------------------------------------------

    def level(self, obj: str) -> tuple[str, ...]:
        if obj not in self._idx:
            raise UnknownObject(obj)
        return self.levels[obj]

    def act(self, mor: str, elt: str) -> str:
        return self.action[mor][elt]

    def act_idx(self, mor_i: int) -> list[int]:
        """Action of morphism #mor_i as an index table (target level -> source level)."""
        tab = self._act_idx.get(mor_i)
        if tab is None:
            site = self.site
            m = site.mor_labels[mor_i]
            a, b = site.src(m), site.tgt(m)
            src_idx = self._idx[a]
            amap = self.action[m]
            tab = [src_idx[amap[e]] for e in self.levels[b]]
            self._act_idx[mor_i] = tab
        return tab

    def element_order(self) -> list[tuple[int, int]]:
        """Canonical global order of (object index, element index) pairs.

        Sorted by (degree, object position, element position); the search
        engine assigns values in this order.
        """
        if self._order is None:
            site = self.site
            self._order = [
                (oi, ei)
                for oi in sorted(
                    range(len(site.objects)),
                    key=lambda i: (site.degree[site.objects[i]], i),
                )
                for ei in range(len(self.levels[site.objects[oi]]))
            ]
        return self._order

    def total_size(self) -> int:
        return sum(len(v) for v in self.levels.values())

    def is_empty(self) -> bool:
        return self.total_size() == 0

    def generators(self) -> list[tuple[str, str]]:
        """Minimal (object, element) set whose action orbit covers everything."""
        if self._generators is None:
            site = self.site
            covered: set[tuple[int, int]] = set()
            gens: list[tuple[str, str]] = []
            for oi, ei in self.element_order():
                if (oi, ei) in covered:
                    continue
                obj = site.objects[oi]
                gens.append((obj, self.levels[obj][ei]))
                for mi in site.by_target[oi]:
                    si = site.obj_index[site.src(site.mor_labels[mi])]
                    covered.add((si, self.act_idx(mi)[ei]))
            self._generators = gens
        return self._generators

    # -- structural equality -------------------------------------------------

    def same_data(self, other: "Presheaf") -> bool:
        return (
            self.site is other.site
            and self.levels == other.levels
            and self.action == other.action
        )

    def __eq__(self, other):
        return isinstance(other, Presheaf) and self.same_data(other)

    def __hash__(self):
        return object.__hash__(self)

    def __repr__(self):
        sizes = ",".join(str(len(self.levels[o])) for o in self.site.objects)
        return f"Presheaf({self.name!r}, levels [{sizes}])"

    # -- validation ----------------------------------------------------------

    def validate(self) -> ValidationReport:
        return validate_presheaf(self)


def validate_presheaf(p: Presheaf) -> ValidationReport:
    """Check label uniqueness, identity actions, and functoriality exhaustively."""
    site = p.site
    problems: list[str] = []
    for o in site.objects:
        if len(set(p.levels[o])) != len(p.levels[o]):
            problems.append(f"duplicate labels at level {o}")
    for m in site.mor_labels:
        a, b = site.src(m), site.tgt(m)
        amap = p.action.get(m, {})
        if set(amap) != set(p.levels[b]):
            problems.append(f"action of {m} not total on level {b}")
            continue
        for e, v in amap.items():
            if v not in p._idx[a]:
                problems.append(f"action of {m} sends {e} outside level {a}")
    if problems:
        return ValidationReport(False, tuple(problems))
    for o in site.objects:
        ident = site.identity[o]
        for e in p.levels[o]:
            if p.action[ident][e] != e:
                problems.append(f"action of {ident} moves {e}")
    for (g, f), h in site.table.items():
        # action(g∘f) = action(f)∘action(g) on the level at tgt(g)
        ag, af, ah = p.action[g], p.action[f], p.action[h]
        for e in p.levels[site.tgt(g)]:
            if af[ag[e]] != ah[e]:
                problems.append(f"functoriality fails at ({g},{f}) on {e}")
    return ValidationReport(not problems, tuple(problems))


class PresheafMap:
    def __init__(
        self,
        source: Presheaf,
        target: Presheaf,
        name: str,
        components: Mapping[str, Mapping[str, str]],
    ):
        if source.site is not target.site:
            raise ValueError("source and target live over different sites")
        self.site = source.site
        self.source = source
        self.target = target
        self.name = name
        self.components = {
            o: dict(components.get(o, {})) for o in self.site.objects
        }

    def __call__(self, obj: str, elt: str) -> str:
        return self.components[obj][elt]

    def component_idx(self, obj: str) -> list[int]:
        tgt_idx = self.target._idx[obj]
        return [tgt_idx[self.components[obj][e]] for e in self.source.levels[obj]]

    def same_data(self, other: "PresheafMap") -> bool:
        return (
            self.source == other.source
            and self.target == other.target
            and self.components == other.components
        )

    def __eq__(self, other):
        return isinstance(other, PresheafMap) and self.same_data(other)

    def __hash__(self):
        return object.__hash__(self)

    def __repr__(self):
        return f"PresheafMap({self.name!r}: {self.source.name} -> {self.target.name})"

    def validate(self) -> ValidationReport:
        problems: list[str] = []
        site = self.site
        for o in site.objects:
            comp = self.components.get(o, {})
            if set(comp) != set(self.source.levels[o]):
                problems.append(f"component at {o} not total")
                continue
            for e, v in comp.items():
                if v not in self.target._idx[o]:
                    problems.append(f"component at {o} sends {e} outside target level")
        if problems:
            return ValidationReport(False, tuple(problems))
        for m in site.mor_labels:
            a, b = site.src(m), site.tgt(m)
            for e in self.source.levels[b]:
                if self.target.action[m][self.components[b][e]] != self.components[a][
                    self.source.action[m][e]
                ]:
                    problems.append(f"naturality fails at {m} on {e}")
        return ValidationReport(not problems, tuple(problems))


def identity_map(p: Presheaf, name: str | None = None) -> PresheafMap:
    return PresheafMap(
        p, p, name or f"id:{p.name}", {o: {e: e for e in p.levels[o]} for o in p.site.objects}
    )


def compose_maps(g: PresheafMap, f: PresheafMap, name: str | None = None) -> PresheafMap:
    if f.target is not g.source and f.target != g.source:
        raise ValueError(f"maps not composable: {f.name} then {g.name}")
    comps = {
        o: {e: g.components[o][f.components[o][e]] for e in f.source.levels[o]}
        for o in f.site.objects
    }
    return PresheafMap(f.source, g.target, name or f"({g.name}.{f.name})", comps)


def is_mono(m: PresheafMap) -> bool:
    for o in m.site.objects:
        vals = list(m.components[o].values())
        if len(set(vals)) != len(vals):
            return False
    return True


def is_levelwise_bijection(m: PresheafMap) -> bool:
    return is_mono(m) and all(
        len(m.source.levels[o]) == len(m.target.levels[o]) for o in m.site.objects
    )


def inverse_of(m: PresheafMap, name: str | None = None) -> PresheafMap:
    if not is_levelwise_bijection(m):
        raise NotMono(f"{m.name} is not an isomorphism")
    comps = {
        o: {v: e for e, v in m.components[o].items()} for o in m.site.objects
    }
    return PresheafMap(m.target, m.source, name or f"inv:{m.name}", comps)


@dataclass
class ArrowSquare:
    """A commuting square (top, bottom): left -> right in the arrow category."""

    left: PresheafMap
    right: PresheafMap
    top: PresheafMap
    bottom: PresheafMap
    name: str = "square"

    def commutes(self) -> bool:
        lhs = compose_maps(self.right, self.top)
        rhs = compose_maps(self.bottom, self.left)
        return lhs.components == rhs.components

    def validate(self) -> ValidationReport:
        problems = []
        if self.top.source != self.left.source:
            problems.append("top/left domain mismatch")
        if self.top.target != self.right.source:
            problems.append("top codomain is not right domain")
        if self.bottom.source != self.left.target:
            problems.append("bottom domain is not left codomain")
        if self.bottom.target != self.right.target:
            problems.append("bottom/right codomain mismatch")
        if not problems and not self.commutes():
            problems.append("square does not commute")
        return ValidationReport(not problems, tuple(problems))


def identity_square(f: PresheafMap) -> ArrowSquare:
    return ArrowSquare(
        f, f, identity_map(f.source), identity_map(f.target), name=f"idsq:{f.name}"
    )


# ---------------------------------------------------------------------------
# constructions
# ---------------------------------------------------------------------------


def representable(site: Site, c: str, name: str | None = None) -> Presheaf:
    """The Yoneda presheaf hom(-, c) with morphism labels as elements."""
    if c not in site.obj_index:
        raise UnknownObject(c)
    levels = {d: site.hom(d, c) for d in site.objects}
    action = {
        m: {g: site.compose(g, m) for g in levels[site.tgt(m)]}
        for m in site.mor_labels
    }
    return Presheaf(site, name or f"y:{c}", levels, action)


def yoneda_map(p: Presheaf, c: str, x: str, name: str | None = None) -> PresheafMap:
    """The map y(c) -> p classifying the element x at level c."""
    yc = representable(p.site, c)
    comps = {
        d: {g: p.act(g, x) for g in yc.levels[d]} for d in p.site.objects
    }
    return PresheafMap(yc, p, name or f"el:{x}@{c}", comps)


def terminal_presheaf(site: Site, name: str = "1") -> Presheaf:
    levels = {o: ("*",) for o in site.objects}
    action = {m: {"*": "*"} for m in site.mor_labels}
    return Presheaf(site, name, levels, action)


def initial_presheaf(site: Site, name: str = "0") -> Presheaf:
    return Presheaf(site, name, {o: () for o in site.objects}, {m: {} for m in site.mor_labels})


def terminal_map(p: Presheaf, t: Presheaf | None = None) -> PresheafMap:
    t = t if t is not None else terminal_presheaf(p.site)
    return PresheafMap(
        p, t, f"!:{p.name}", {o: {e: "*" for e in p.levels[o]} for o in p.site.objects}
    )


def initial_map(p: Presheaf, z: Presheaf | None = None) -> PresheafMap:
    z = z if z is not None else initial_presheaf(p.site)
    return PresheafMap(z, p, f"0>{p.name}", {o: {} for o in p.site.objects})


def discrete_presheaf(site: Site, points: Sequence[str], name: str | None = None) -> Presheaf:
    """Constant presheaf on a finite set of points."""
    pts = tuple(points)
    levels = {o: pts for o in site.objects}
    action = {m: {e: e for e in pts} for m in site.mor_labels}
    return Presheaf(site, name or f"disc:{'|'.join(pts)}", levels, action)


def chaotic_presheaf(site: Site, points: Sequence[str], name: str | None = None) -> Presheaf:
    """Nerve of the indiscrete groupoid on the given points.

    Levels are all functions from the vertex set of an object to the
    points, acting by precomposition; needs the vertex semantics the
    built-in sites carry.  These are the standard contractible fibrant
    objects at desk scale.
    """
    vals = site.meta.get("values")
    if vals is None:
        raise ValueError("chaotic_presheaf needs a built-in site")
    import itertools

    pts = tuple(points)
    nverts = {c: len(vals[site.identity[c]]) for c in site.objects}
    levels = {
        c: tuple("".join(w) for w in itertools.product(pts, repeat=nverts[c]))
        for c in site.objects
    }
    action = {}
    for m in site.mor_labels:
        a = site.src(m)
        table = {}
        for w in levels[site.tgt(m)]:
            table[w] = "".join(w[v] for v in vals[m])
        action[m] = table
    return Presheaf(site, name or f"chaotic:{'|'.join(pts)}", levels, action)


def sub_presheaf(
    p: Presheaf, chosen: Mapping[str, Iterable[str]], name: str | None = None
) -> tuple[Presheaf, PresheafMap]:
    """The subpresheaf on the given element sets, with its inclusion.

    Raises ValueError when the selection is not closed under the action.
    """
    site = p.site
    sel = {o: frozenset(chosen.get(o, ())) for o in site.objects}
    levels = {o: tuple(e for e in p.levels[o] if e in sel[o]) for o in site.objects}
    action: dict[str, dict[str, str]] = {}
    for m in site.mor_labels:
        a, b = site.src(m), site.tgt(m)
        sub = {}
        for e in levels[b]:
            v = p.action[m][e]
            if v not in sel[a]:
                raise ValueError(
                    f"selection not action-closed: {m} sends {e} to {v} outside"
                )
            sub[e] = v
        action[m] = sub
    q = Presheaf(site, name or f"sub:{p.name}", levels, action)
    incl = PresheafMap(
        q, p, f"incl:{q.name}", {o: {e: e for e in levels[o]} for o in site.objects}
    )
    return q, incl


def subpresheaf_generated(
    p: Presheaf, seeds: Iterable[tuple[str, str]], name: str | None = None
) -> PresheafMap:
    """Smallest action-closed family containing the seeds, as a mono into p."""
    site = p.site
    chosen: dict[str, set[str]] = {o: set() for o in site.objects}
    stack = list(seeds)
    for o, e in stack:
        if e not in p._idx[o]:
            raise ValueError(f"seed {e} not at level {o}")
    while stack:
        o, e = stack.pop()
        if e in chosen[o]:
            continue
        chosen[o].add(e)
        oi = site.obj_index[o]
        for mi in site.by_target[oi]:
            m = site.mor_labels[mi]
            a = site.src(m)
            v = p.action[m][e]
            if v not in chosen[a]:
                stack.append((a, v))
    _, incl = sub_presheaf(p, chosen, name=name or f"gen:{p.name}")
    return incl


def image_factorization(
    f: PresheafMap, name: str | None = None
) -> tuple[PresheafMap, PresheafMap]:
    """Factor f as a levelwise surjection followed by a subobject inclusion."""
    site = f.site
    chosen = {
        o: {f.components[o][e] for e in f.source.levels[o]} for o in site.objects
    }
    img, mono = sub_presheaf(f.target, chosen, name=name or f"im:{f.name}")
    epi = PresheafMap(
        f.source,
        img,
        f"epi:{f.name}",
        {o: dict(f.components[o]) for o in site.objects},
    )
    return epi, mono


def nondegenerate_elements(p: Presheaf) -> list[tuple[str, str]]:
    """Elements not in the image of any action along a non-invertible split epi.

    Over the built-in sites this picks out the classical nondegenerate
    cells (Eilenberg-Zilber style); invertible morphisms are excluded so
    that symmetries do not count as degeneracies.
    """
    site = p.site
    isos = site.isos()
    degenerate: set[tuple[str, str]] = set()
    for m in site.split_epis():
        if m in isos:
            continue
        a, b = site.src(m), site.tgt(m)
        for e in p.levels[b]:
            degenerate.add((a, p.action[m][e]))
    return [
        (o, e)
        for o in site.objects
        for e in p.levels[o]
        if (o, e) not in degenerate
    ]

"""Backtracking enumeration of natural maps between presheaves.

One engine serves every enumeration in the package: hom-sets, lifting
fillers, homotopy bodies, exponential and pushforward sections, and
isomorphism search.  Elements of the source are assigned values in
canonical order (increasing site degree, then object position, then
element position); each assignment propagates along every site morphism
into its level, so naturality violations are detected as early as
possible.  With a total composition table a single propagation step from
each assigned element reaches all composite constraints.

All orders are structural, so enumeration results are deterministic and
independent of scheduling.
"""

from __future__ import annotations

from typing import Callable, Iterable, Iterator, Sequence
from weakref import WeakKeyDictionary

from .presheaf import Presheaf, PresheafMap


class _PairTables:
    """Propagation tables for a (source, target) pair; reused across runs."""

    def __init__(self, source: Presheaf, target: Presheaf):
        site = source.site
        self.order = source.element_order()
        self.gid_of = {pos: g for g, pos in enumerate(self.order)}
        self.prop: list[list[tuple[int, list[int]]]] = []
        self.level_of: list[int] = []
        for oi, ei in self.order:
            entries = []
            for mi in site.by_target[oi]:
                m = site.mor_labels[mi]
                si = site.obj_index[site.src(m)]
                s_img = source.act_idx(mi)[ei]
                entries.append((self.gid_of[(si, s_img)], target.act_idx(mi)))
            self.prop.append(entries)
            self.level_of.append(oi)
        self.tlevels: list[tuple[str, ...]] = [
            target.levels[site.objects[oi]] for oi in range(len(site.objects))
        ]


_pair_cache: "WeakKeyDictionary[Presheaf, WeakKeyDictionary[Presheaf, _PairTables]]" = (
    WeakKeyDictionary()
)


def _tables_for(source: Presheaf, target: Presheaf) -> _PairTables:
    per_src = _pair_cache.setdefault(source, WeakKeyDictionary())
    tab = per_src.get(target)
    if tab is None:
        tab = _PairTables(source, target)
        per_src[target] = tab
    return tab


class NatSearch:
    """Search for natural maps S -> T under seed and per-element constraints.

    seeds: iterable of (obj, source_elt, target_elt) forced values.
    allowed: optional callable (obj, source_elt) -> iterable of permitted
        target elements; applied to forced values too.
    bijective: restrict to levelwise bijections.
    """

    def __init__(
        self,
        source: Presheaf,
        target: Presheaf,
        *,
        seeds: Iterable[tuple[str, str, str]] = (),
        allowed: Callable[[str, str], Iterable[str]] | None = None,
        bijective: bool = False,
        name: str = "h",
    ):
        if source.site is not target.site:
            raise ValueError("source/target over different sites")
        self.site = source.site
        self.source = source
        self.target = target
        self.name = name
        self.bijective = bijective

        site = self.site
        tables = _tables_for(source, target)
        self.order = tables.order
        self.gid_of = tables.gid_of
        n = len(self.order)
        self._prop = tables.prop
        self._level_of = tables.level_of
        self._tlevels = tables.tlevels
        # allowed sets as index sets, None = unrestricted
        self._allowed: list[frozenset[int] | None] = [None] * n
        if allowed is not None:
            for g, (oi, ei) in enumerate(self.order):
                o = site.objects[oi]
                e = source.levels[o][ei]
                tidx = target._idx[o]
                self._allowed[g] = frozenset(tidx[t] for t in allowed(o, e))
        self._seed: dict[int, int] = {}
        self._feasible = True
        for o, se, te in seeds:
            g = self.gid_of[(site.obj_index[o], source._idx[o][se])]
            ti = target._idx[o][te]
            if g in self._seed and self._seed[g] != ti:
                self._feasible = False
            self._seed[g] = ti
        if bijective:
            for oi in range(len(site.objects)):
                o = site.objects[oi]
                if len(source.levels[o]) != len(target.levels[o]):
                    self._feasible = False

    # -- core ---------------------------------------------------------------

    def _solutions(self) -> Iterator[list[int]]:
        if not self._feasible:
            return
        n = len(self.order)
        assign = [-1] * n
        used: list[set[int]] | None = (
            [set() for _ in self.site.objects] if self.bijective else None
        )
        trail: list[int] = []
        prop = self._prop
        allowed_tab = self._allowed
        level_of = self._level_of

        def force(g: int, val: int) -> bool:
            stack = [(g, val)]
            pop = stack.pop
            push = stack.append
            while stack:
                gg, vv = pop()
                cur = assign[gg]
                if cur != -1:
                    if cur != vv:
                        return False
                    continue
                allowed = allowed_tab[gg]
                if allowed is not None and vv not in allowed:
                    return False
                if used is not None:
                    lu = used[level_of[gg]]
                    if vv in lu:
                        return False
                    lu.add(vv)
                assign[gg] = vv
                trail.append(gg)
                for g2, t_act in prop[gg]:
                    push((g2, t_act[vv]))
            return True

        def undo(mark: int) -> None:
            while len(trail) > mark:
                g = trail.pop()
                if used is not None:
                    used[level_of[g]].discard(assign[g])
                assign[g] = -1

        for g, v in sorted(self._seed.items()):
            if not force(g, v):
                undo(0)
                return

        def rec(i: int) -> Iterator[list[int]]:
            while i < n and assign[i] != -1:
                i += 1
            if i == n:
                yield list(assign)
                return
            allowed = allowed_tab[i]
            level = self._tlevels[level_of[i]]
            candidates = range(len(level)) if allowed is None else sorted(allowed)
            for v in candidates:
                mark = len(trail)
                if force(i, v):
                    yield from rec(i + 1)
                undo(mark)

        yield from rec(0)

    def _to_map(self, assign: list[int], tag: int | None = None) -> PresheafMap:
        site = self.site
        comps: dict[str, dict[str, str]] = {o: {} for o in site.objects}
        for g, (oi, ei) in enumerate(self.order):
            o = site.objects[oi]
            comps[o][self.source.levels[o][ei]] = self._tlevels[oi][assign[g]]
        nm = self.name if tag is None else f"{self.name}#{tag}"
        return PresheafMap(self.source, self.target, nm, comps)

    # -- public -------------------------------------------------------------

    def first(self) -> PresheafMap | None:
        for a in self._solutions():
            return self._to_map(a)
        return None

    def all(self, limit: int | None = None) -> list[PresheafMap]:
        out = []
        for i, a in enumerate(self._solutions()):
            if limit is not None and i >= limit:
                raise RuntimeError(f"enumeration exceeded limit {limit}")
            out.append(self._to_map(a, tag=i))
        return out

    def count(self) -> int:
        return sum(1 for _ in self._solutions())

    def assignments(self) -> Iterator[list[int]]:
        return self._solutions()


def enumerate_maps(
    source: Presheaf,
    target: Presheaf,
    *,
    seeds: Iterable[tuple[str, str, str]] = (),
    allowed=None,
    name: str = "h",
    limit: int | None = None,
) -> list[PresheafMap]:
    return NatSearch(source, target, seeds=seeds, allowed=allowed, name=name).all(limit)


def find_map(
    source: Presheaf,
    target: Presheaf,
    *,
    seeds: Iterable[tuple[str, str, str]] = (),
    allowed=None,
    name: str = "h",
) -> PresheafMap | None:
    return NatSearch(source, target, seeds=seeds, allowed=allowed, name=name).first()


def find_isomorphism(
    x: Presheaf,
    y: Presheaf,
    *,
    seeds: Iterable[tuple[str, str, str]] = (),
    allowed=None,
    name: str = "iso",
) -> PresheafMap | None:
    """First levelwise-bijective natural map x -> y in canonical order.

    A levelwise bijection that is natural is an isomorphism of presheaves
    (the inverse is automatically natural), so this decides isomorphism.
    """
    return NatSearch(
        x, y, seeds=seeds, allowed=allowed, bijective=True, name=name
    ).first()

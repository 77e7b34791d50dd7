"""Lifting problems, RLP checks, generator families, cell certificates.

``solve_lift`` searches for a natural diagonal by backtracking with
naturality propagation; a ``None`` answer is exhaustive-search certified.
Square-against-arrow problems reduce to arrow problems on the square's
left edge with composed attachments, while attachment enumeration always
runs over the square's right edge.

Trivial-cofibration status is never a boolean: ``cell_certify`` returns a
verified :class:`CellCertificate`, a refutation, or Unknown.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from weakref import WeakKeyDictionary

from .cylinder import IntervalStructure, leibniz_tensor, theta_square
from .errors import DimensionBudgetExceeded
from .presheaf import (
    ArrowSquare,
    Presheaf,
    PresheafMap,
    ValidationReport,
    compose_maps,
    identity_map,
    is_levelwise_bijection,
    is_mono,
    representable,
    sub_presheaf,
    subpresheaf_generated,
)
from .limits import pushout, pushout_induced, coproduct, Cospan
from .search import NatSearch
from .site import Site, simplex_label


# ---------------------------------------------------------------------------
# problems and the solver
# ---------------------------------------------------------------------------


@dataclass
class LiftingProblem:
    """left (arrow or square) against right, with outer attachments.

    The attachments (top, bottom) attach the *right edge* of the left
    datum: for an arrow l they are u: dom(l) -> X and v: cod(l) -> Y; for
    a square s: l' -> l they attach l, and a filler is a map
    cod(l') -> X compatible with the composed boundary data.
    """

    left: PresheafMap | ArrowSquare
    right: PresheafMap
    top: PresheafMap
    bottom: PresheafMap

    def left_edge(self) -> PresheafMap:
        return self.left.right if isinstance(self.left, ArrowSquare) else self.left

    def validate(self) -> ValidationReport:
        problems = []
        l = self.left_edge()
        if self.top.source != l.source or self.top.target != self.right.source:
            problems.append("top attachment endpoints wrong")
        if self.bottom.source != l.target or self.bottom.target != self.right.target:
            problems.append("bottom attachment endpoints wrong")
        if not problems:
            lhs = compose_maps(self.right, self.top)
            rhs = compose_maps(self.bottom, l)
            if lhs.components != rhs.components:
                problems.append("outer rectangle does not commute")
        if isinstance(self.left, ArrowSquare):
            rep = self.left.validate()
            if not rep.ok:
                problems.extend("left square: " + p for p in rep.problems)
        return ValidationReport(not problems, tuple(problems))


_fiber_cache: "WeakKeyDictionary[PresheafMap, dict]" = WeakKeyDictionary()


def _fiber_table(r: PresheafMap) -> dict[str, dict[str, tuple[str, ...]]]:
    out = _fiber_cache.get(r)
    if out is not None:
        return out
    site = r.site
    out = {}
    for o in site.objects:
        tab: dict[str, list[str]] = {e: [] for e in r.target.levels[o]}
        for x in r.source.levels[o]:
            tab[r.components[o][x]].append(x)
        out[o] = {e: tuple(v) for e, v in tab.items()}
    _fiber_cache[r] = out
    return out


def _solve_arrow(
    l: PresheafMap, u: PresheafMap, v: PresheafMap, r: PresheafMap
) -> PresheafMap | None:
    fibers = _fiber_table(r)
    seeds = [
        (o, l.components[o][a], u.components[o][a])
        for o in l.site.objects
        for a in l.source.levels[o]
    ]
    return NatSearch(
        l.target,
        r.source,
        seeds=seeds,
        allowed=lambda o, e: fibers[o][v.components[o][e]],
        name="lift",
    ).first()


def solve_lift(problem: LiftingProblem) -> PresheafMap | None:
    """A natural diagonal filler, or None (exhaustively certified).

    Deterministic: the first filler in canonical assignment order.
    """
    rep = problem.validate()
    if not rep.ok:
        raise ValueError(f"invalid lifting problem: {rep.problems}")
    if isinstance(problem.left, ArrowSquare):
        sq = problem.left
        u_eff = compose_maps(problem.top, sq.top)
        v_eff = compose_maps(problem.bottom, sq.bottom)
        return _solve_arrow(sq.left, u_eff, v_eff, problem.right)
    return _solve_arrow(problem.left, problem.top, problem.bottom, problem.right)


def naive_solve_lift(problem: LiftingProblem, cap: int = 10**6) -> PresheafMap | None:
    """Independent oracle: enumerate all raw diagonals and filter.

    Candidates are products of right-fiber choices per element; naturality
    and the boundary condition are checked a posteriori.  Raises
    RuntimeError when the raw space exceeds the cap.
    """
    rep = problem.validate()
    if not rep.ok:
        raise ValueError(f"invalid lifting problem: {rep.problems}")
    if isinstance(problem.left, ArrowSquare):
        sq = problem.left
        l = sq.left
        u = compose_maps(problem.top, sq.top)
        v = compose_maps(problem.bottom, sq.bottom)
    else:
        l, u, v = problem.left, problem.top, problem.bottom
    r = problem.right
    site = l.site
    b, x = l.target, r.source
    fibers = _fiber_table(r)
    keys: list[tuple[str, str]] = []
    cand: list[tuple[str, ...]] = []
    total = 1
    for o in site.objects:
        for e in b.levels[o]:
            keys.append((o, e))
            choices = fibers[o][v.components[o][e]]
            cand.append(choices)
            if not choices:
                return None
            total *= len(choices)
            if total > cap:
                raise RuntimeError("diagonal space exceeds cap")
    for combo in itertools.product(*cand):
        val = dict(zip(keys, combo))
        ok = True
        for o in site.objects:
            for a in l.source.levels[o]:
                if val[(o, l.components[o][a])] != u.components[o][a]:
                    ok = False
                    break
            if not ok:
                break
        if ok:
            for m in site.mor_labels:
                a_, b_ = site.src(m), site.tgt(m)
                for e in b.levels[b_]:
                    if x.action[m][val[(b_, e)]] != val[(a_, b.action[m][e])]:
                        ok = False
                        break
                if not ok:
                    break
        if ok:
            comps = {o: {} for o in site.objects}
            for (o, e), xv in val.items():
                comps[o][e] = xv
            return PresheafMap(b, x, "naive-lift", comps)
    return None


# ---------------------------------------------------------------------------
# generator families and RLP
# ---------------------------------------------------------------------------


@dataclass
class GeneratorFamily:
    name: str
    members: list[tuple[str, PresheafMap | ArrowSquare]]

    def member_map(self, name: str) -> PresheafMap | ArrowSquare:
        for n, m in self.members:
            if n == name:
                return m
        raise KeyError(name)


@dataclass
class MemberWitness:
    member: str
    ok: bool
    attachments: int
    filler: PresheafMap | None = None
    failing: tuple[PresheafMap, PresheafMap] | None = None


@dataclass
class RLPResult:
    ok: bool
    witnesses: list[MemberWitness]

    def __bool__(self) -> bool:
        return self.ok


def enumerate_attachments(l: PresheafMap, r: PresheafMap):
    """All commuting (u, v) pairs attaching l to r, canonically ordered."""
    for u in NatSearch(l.source, r.source, name="att-u").all():
        ru = compose_maps(r, u)
        seeds = [
            (o, l.components[o][a], ru.components[o][a])
            for o in l.site.objects
            for a in l.source.levels[o]
        ]
        for v in NatSearch(l.target, r.target, seeds=seeds, name="att-v").all():
            yield u, v


def has_rlp(p: PresheafMap, family: GeneratorFamily) -> RLPResult:
    """True iff every lifting problem of every member against p has a filler.

    The witness table records, per member, one filler (of the first
    attachment) or the first failing attachment.
    """
    witnesses: list[MemberWitness] = []
    all_ok = True
    for name, member in family.members:
        edge = member.right if isinstance(member, ArrowSquare) else member
        count = 0
        wit = MemberWitness(member=name, ok=True, attachments=0)
        for u, v in enumerate_attachments(edge, p):
            count += 1
            filler = solve_lift(LiftingProblem(member, p, u, v))
            if filler is None:
                wit = MemberWitness(name, False, count, failing=(u, v))
                all_ok = False
                break
            if wit.filler is None:
                wit.filler = filler
        wit.attachments = count
        witnesses.append(wit)
    return RLPResult(all_ok, witnesses)


_rlp_cache: "WeakKeyDictionary[PresheafMap, dict[str, bool]]" = WeakKeyDictionary()


def rlp_cached(p: PresheafMap, family: GeneratorFamily) -> bool:
    per_map = _rlp_cache.setdefault(p, {})
    hit = per_map.get(family.name)
    if hit is None:
        hit = has_rlp(p, family).ok
        per_map[family.name] = hit
    return hit


def boundary_inclusion(site: Site, c: str) -> PresheafMap:
    """The subobject of y(c) on elements with no section, included into y(c)."""
    yc = representable(site, c)
    splits = site.split_epis()
    chosen = {d: [e for e in yc.levels[d] if e not in splits] for d in site.objects}
    _, incl = sub_presheaf(yc, chosen, name=f"bd:{c}")
    incl.name = f"bd:{c}"
    return incl


def gen_cofibrations(site: Site) -> GeneratorFamily:
    cached = site.meta.get("_gencof")
    if cached is None:
        cached = GeneratorFamily(
            "gencof", [(f"bd:{c}", boundary_inclusion(site, c)) for c in site.objects]
        )
        site.meta["_gencof"] = cached
    return cached


def _interval_cache(interval: IntervalStructure) -> dict:
    cache = getattr(interval, "_family_cache", None)
    if cache is None:
        cache = {}
        interval._family_cache = cache
    return cache


def gen_trivcofs(site: Site, interval: IntervalStructure) -> GeneratorFamily:
    """The family of endpoint-Leibniz applications to generating cofibrations."""
    cache = _interval_cache(interval)
    fam = cache.get("J")
    if fam is None:
        members = []
        for k in (0, 1):
            for name, m in gen_cofibrations(site).members:
                lt = leibniz_tensor(interval.delta(k), m)
                lt.map.name = f"d{k}^{name}"
                members.append((f"d{k}^{name}", lt.map))
                cache[("lt", k, name)] = lt
        fam = GeneratorFamily("J", members)
        cache["J"] = fam
    return fam


def gen_squares(site: Site, interval: IntervalStructure) -> GeneratorFamily:
    """The square family: theta_k ⊗̂ m for generating cofibrations m."""
    cache = _interval_cache(interval)
    fam = cache.get("Jsq")
    if fam is None:
        gen_trivcofs(site, interval)  # ensure the tensors are cached
        members = []
        for k in (0, 1):
            for name, m in gen_cofibrations(site).members:
                lt = cache[("lt", k, name)]
                sq = theta_square(k, m, interval, lt=lt)
                members.append((f"t{k}^{name}", sq))
        fam = GeneratorFamily("Jsq", members)
        cache["Jsq"] = fam
    return fam


def horn_family(site: Site) -> GeneratorFamily:
    """Horn inclusions of the truncated simplex site."""
    if site.meta.get("kind") != "simplex":
        raise ValueError("horn_family is defined for simplex sites only")
    cached = site.meta.get("_horns")
    if cached is not None:
        return cached
    n_max = site.meta["n_max"]
    members = []
    for n in range(1, n_max + 1):
        yc = representable(site, str(n))
        for k in range(n + 1):
            seeds = []
            for i in range(n + 1):
                if i == k:
                    continue
                vals = tuple(v for v in range(n + 1) if v != i)
                seeds.append((str(n - 1), simplex_label(n - 1, n, vals)))
            incl = subpresheaf_generated(yc, seeds, name=f"horn:{n}:{k}")
            incl.name = f"horn:{n}:{k}"
            members.append((f"horn:{n}:{k}", incl))
    fam = GeneratorFamily("horns", members)
    site.meta["_horns"] = fam
    return fam


def is_trivial_fibration(p: PresheafMap) -> bool:
    return rlp_cached(p, gen_cofibrations(p.site))


def is_fibration(p: PresheafMap, interval: IntervalStructure) -> bool:
    return rlp_cached(p, gen_trivcofs(p.site, interval))


def is_kan_fibration_horn(p: PresheafMap) -> bool:
    return rlp_cached(p, horn_family(p.site))


# ---------------------------------------------------------------------------
# biased retracts
# ---------------------------------------------------------------------------


def biased_retract_verify(
    outer: ArrowSquare,
    inner: ArrowSquare,
    a: tuple[PresheafMap, PresheafMap],
    b: tuple[PresheafMap, PresheafMap],
) -> bool:
    """Check that (a, b) factor the outer square through the inner one.

    a: outer.left -> inner.left and b: inner.right -> outer.right are maps
    of arrows; the condition is b ∘ inner ∘ a = outer componentwise.
    """
    a_dom, a_cod = a
    b_dom, b_cod = b
    checks = [
        compose_maps(inner.left, a_dom).components
        == compose_maps(a_cod, outer.left).components,
        compose_maps(outer.right, b_dom).components
        == compose_maps(b_cod, inner.right).components,
        compose_maps(b_dom, compose_maps(inner.top, a_dom)).components
        == outer.top.components,
        compose_maps(b_cod, compose_maps(inner.bottom, a_cod)).components
        == outer.bottom.components,
    ]
    return all(checks)


# ---------------------------------------------------------------------------
# cell certificates
# ---------------------------------------------------------------------------


@dataclass
class CellBudget:
    max_stages: int = 32
    max_cells: int = 400
    max_nodes: int = 20000  # explored search states


@dataclass
class CellStage:
    """One cobase change of a coproduct of named generators."""

    members: list[tuple[str, PresheafMap, PresheafMap]]
    # (generator name, attach: U -> S_i, leg: V -> S_{i+1})
    incl: PresheafMap  # S_i -> S_{i+1}


@dataclass
class CellCertificate:
    first: PresheafMap  # dom(m) -> S_0, the corestriction of m onto stage 0
    stages: list[CellStage]
    final: PresheafMap  # S_k -> B, a levelwise bijection
    retract: None = None  # reserved; retract stages are not produced


@dataclass
class CertifyOutcome:
    status: str  # "certified" | "refuted" | "unknown"
    certificate: CellCertificate | None = None
    trace: tuple[str, ...] = ()


class _NodeBudget(Exception):
    pass


def _fold_coproduct(objs: list[Presheaf]) -> tuple[Presheaf, list[PresheafMap]]:
    cur = objs[0]
    injs = [identity_map(cur)]
    for nxt in objs[1:]:
        cs = coproduct(cur, nxt)
        injs = [compose_maps(cs.i1, j) for j in injs]
        injs.append(cs.i2)
        cur = cs.obj
    return cur, injs


def _copair(maps: list[PresheafMap], injs, src_obj, target) -> PresheafMap:
    comps: dict[str, dict[str, str]] = {o: {} for o in src_obj.site.objects}
    for mp, inj in zip(maps, injs):
        for o in src_obj.site.objects:
            for e in inj.source.levels[o]:
                comps[o][inj.components[o][e]] = mp.components[o][e]
    return PresheafMap(src_obj, target, "copair", comps)


def cell_certify(
    m: PresheafMap,
    family: GeneratorFamily,
    budget: CellBudget | None = None,
) -> CertifyOutcome:
    """Bounded search for a cell decomposition of m over the family.

    The search maintains a monic stage map into cod(m) and attaches, per
    stage, a coproduct of all generator placements whose boundary lands in
    the current image and whose new cells are fresh (lowest member first,
    canonical placement order).  The result, when found, is re-verified
    stage by stage.  Refuted is returned only on the mono обstruction.
    """
    budget = budget or CellBudget()
    edges: list[tuple[str, PresheafMap]] = []
    for name, member in family.members:
        edge = member.right if isinstance(member, ArrowSquare) else member
        edges.append((name, edge))
    if not is_mono(m):
        if all(is_mono(e) for _, e in edges):
            return CertifyOutcome(
                "refuted",
                trace=("map is not mono; all generators are mono",),
            )
        return CertifyOutcome("unknown", trace=("map is not mono",))

    site = m.site
    b = m.target
    objs = site.objects
    start = {o: frozenset(m.components[o].values()) for o in objs}
    full = {o: frozenset(b.levels[o]) for o in objs}
    missing = sum(len(full[o]) - len(start[o]) for o in objs)
    trace: list[str] = []
    if missing > budget.max_cells:
        return CertifyOutcome(
            "unknown", trace=(f"needs {missing} cells, budget {budget.max_cells}",)
        )

    # placements are image-independent; enumerate once per member
    placements: list[tuple[str, PresheafMap, PresheafMap, dict]] = []
    for name, edge in edges:
        u_img = {o: frozenset(edge.components[o].values()) for o in objs}
        for v in NatSearch(edge.target, b, name="place").all():
            placements.append((name, edge, v, u_img))

    def classify(image: dict, entry) -> dict | None:
        """New elements added by the placement, or None if not attachable."""
        name, edge, v, u_img = entry
        new: dict[str, set[str]] = {}
        for o in objs:
            seen: set[str] = set()
            for e in edge.target.levels[o]:
                val = v.components[o][e]
                if e in u_img[o]:
                    if val not in image[o]:
                        return None
                else:
                    if val in image[o] or val in seen:
                        return None
                    seen.add(val)
            new[o] = seen
        if all(not s for s in new.values()):
            return None
        return new

    failed: set[tuple] = set()
    nodes = 0
    found: list[tuple[str, PresheafMap]] | None = None

    def dfs(image: dict, path: list) -> bool:
        nonlocal nodes, found
        if all(len(image[o]) == len(full[o]) for o in objs):
            found = list(path)
            return True
        key = tuple(image[o] for o in objs)
        if key in failed:
            return False
        nodes += 1
        if nodes > budget.max_nodes:
            raise _NodeBudget()
        for entry in placements:
            new = classify(image, entry)
            if new is None:
                continue
            nxt = {o: image[o] | frozenset(new[o]) for o in objs}
            path.append((entry[0], entry[2]))
            if dfs(nxt, path):
                return True
            path.pop()
        failed.add(key)
        return False

    try:
        ok = dfs(dict(start), [])
    except _NodeBudget:
        return CertifyOutcome(
            "unknown", trace=tuple(trace) + ("search node budget exhausted",)
        )
    if not ok:
        return CertifyOutcome(
            "unknown",
            trace=tuple(trace) + ("search space exhausted without a certificate",),
        )

    # merge consecutive attachments into coproduct stages: a placement may
    # join the current stage if its boundary lies in the image *before*
    # the stage and its new cells are disjoint from the stage's pending set
    image = {o: set(start[o]) for o in objs}
    stages_data: list[list[tuple[str, PresheafMap]]] = []
    pending: dict[str, set[str]] = {o: set() for o in objs}
    current: list[tuple[str, PresheafMap]] = []
    edge_of = dict(edges)
    for name, v in found:
        edge = edge_of[name]
        u_img = {o: frozenset(edge.components[o].values()) for o in objs}
        fits = True
        new: dict[str, set[str]] = {o: set() for o in objs}
        for o in objs:
            for e in edge.target.levels[o]:
                val = v.components[o][e]
                if e in u_img[o]:
                    if val not in image[o]:
                        fits = False
                        break
                elif val in pending[o]:
                    fits = False
                    break
                else:
                    new[o].add(val)
            if not fits:
                break
        if not fits:
            if current:
                stages_data.append(current)
            for o in objs:
                image[o] |= pending[o]
            pending = {o: set() for o in objs}
            current = []
            new = {o: set() for o in objs}
            for o in objs:
                for e in edge.target.levels[o]:
                    val = v.components[o][e]
                    if e not in u_img[o]:
                        new[o].add(val)
        current.append((name, v))
        for o in objs:
            pending[o] |= new[o]
    if current:
        stages_data.append(current)
    if len(stages_data) > budget.max_stages:
        return CertifyOutcome(
            "unknown", trace=tuple(trace) + ("stage budget exhausted",)
        )
    trace.extend(
        f"stage {i}: {len(batch)} cells" for i, batch in enumerate(stages_data)
    )

    # build the certificate objects: stages are canonical subobjects of B
    stages: list[CellStage] = []
    cur_sets = {o: set(m.components[o].values()) for o in site.objects}
    cur_obj, _ = sub_presheaf(b, cur_sets, name="stage:0")
    first = PresheafMap(m.source, cur_obj, "corestrict:0", dict(m.components))
    for si, batch in enumerate(stages_data):
        new_sets = {o: set(cur_sets[o]) for o in site.objects}
        members = []
        for name, v in batch:
            for o in site.objects:
                new_sets[o] |= set(v.components[o].values())
        nxt_obj, _ = sub_presheaf(b, new_sets, name=f"stage:{si + 1}")
        for name, v in batch:
            edge = dict(edges)[name]
            attach = PresheafMap(
                edge.source,
                cur_obj,
                f"attach:{si}:{name}",
                {
                    o: {
                        e: v.components[o][edge.components[o][e]]
                        for e in edge.source.levels[o]
                    }
                    for o in site.objects
                },
            )
            leg = PresheafMap(edge.target, nxt_obj, f"leg:{si}:{name}", dict(v.components))
            members.append((name, attach, leg))
        incl = PresheafMap(
            cur_obj,
            nxt_obj,
            f"incl:{si}",
            {o: {e: e for e in cur_obj.levels[o]} for o in site.objects},
        )
        stages.append(CellStage(members, incl))
        cur_obj, cur_sets = nxt_obj, new_sets
    final = PresheafMap(
        cur_obj, b, "final", {o: {e: e for e in cur_obj.levels[o]} for o in site.objects}
    )

    cert = CellCertificate(first=first, stages=stages, final=final)
    rep = verify_certificate(cert, m, family)
    if not rep.ok:
        return CertifyOutcome("unknown", trace=tuple(trace) + rep.problems)
    return CertifyOutcome("certified", certificate=cert, trace=tuple(trace))


def verify_certificate(
    cert: CellCertificate, m: PresheafMap, family: GeneratorFamily
) -> ValidationReport:
    """Re-verify a certificate: every stage square is a pushout of a
    coproduct of named generators and the composite equals m pointwise."""
    problems: list[str] = []
    cur = cert.first
    if cur.source != m.source or cur.components != m.components:
        problems.append("stage-0 corestriction differs from the certified map")
        return ValidationReport(False, tuple(problems))
    for si, stage in enumerate(cert.stages):
        if not stage.members:
            problems.append(f"stage {si} is empty")
            break
        gens = []
        for name, attach, leg in stage.members:
            member = family.member_map(name)
            edge = member.right if isinstance(member, ArrowSquare) else member
            gens.append((edge, attach, leg))
        u_maps = [g[0] for g in gens]
        src_obj, src_inj = _fold_coproduct([g.source for g in u_maps])
        tgt_obj, tgt_inj = _fold_coproduct([g.target for g in u_maps])
        big_u = _copair(
            [compose_maps(tgt_inj[i], u_maps[i]) for i in range(len(gens))],
            src_inj,
            src_obj,
            tgt_obj,
        )
        attach = _copair([g[1] for g in gens], src_inj, src_obj, gens[0][1].target)
        legs = _copair([g[2] for g in gens], tgt_inj, tgt_obj, gens[0][2].target)
        po = pushout(attach, big_u)
        try:
            med = pushout_induced(po, stage.incl, legs)
        except ValueError as exc:
            problems.append(f"stage {si}: cocone invalid: {exc}")
            break
        if not is_levelwise_bijection(med):
            problems.append(f"stage {si}: square is not a pushout")
            break
        cur = compose_maps(stage.incl, cur)
    if not problems:
        if not is_levelwise_bijection(cert.final):
            problems.append("final comparison is not an isomorphism")
        elif compose_maps(cert.final, cur).components != m.components:
            problems.append("composite of stages differs from the certified map")
    return ValidationReport(not problems, tuple(problems))

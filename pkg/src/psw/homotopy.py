"""Path objects, mapping cocylinders, homotopies, equivalences, transport.

Everything is relative: constructions take explicit anchor maps and the
ambient case passes the terminal anchor.  Homotopy composition and
inversion are produced by the lifting solver against three-sided boxes
built from the cylinder, then verified on their endpoints, so they work
uniformly over both built-in intervals.
"""

from __future__ import annotations

from dataclasses import dataclass

from .cylinder import (
    IntervalStructure,
    boundary_inclusion_map,
    endpoint_insert,
    leibniz_tensor,
)
from .errors import HypothesisFailure, NoFiller
from .lcc import Exponential, SliceObject, exponential
from .lifting import LiftingProblem, is_trivial_fibration, solve_lift
from .limits import (
    Span,
    pair_into_product,
    pair_label,
    product,
    product_map,
    pullback,
    pullback_mediator,
    pushout_induced,
)
from .presheaf import (
    ArrowSquare,
    Presheaf,
    PresheafMap,
    compose_maps,
    identity_map,
    initial_map,
    initial_presheaf,
    is_levelwise_bijection,
    terminal_map,
    terminal_presheaf,
)
from .search import NatSearch


@dataclass
class Homotopy:
    """A homotopy from f to g with body I x X -> Y."""

    f: PresheafMap
    g: PresheafMap
    body: PresheafMap
    prod: Span  # the product I x X the body is defined on

    def verify(self, over: PresheafMap | None = None) -> bool:
        """Endpoint restrictions match f and g; optionally vertical over
        an anchor q: Y -> A against f's implied anchor."""
        iv_insert0 = self._insert(0)
        iv_insert1 = self._insert(1)
        ok = (
            compose_maps(self.body, iv_insert0).components == self.f.components
            and compose_maps(self.body, iv_insert1).components == self.g.components
        )
        if ok and over is not None:
            lhs = compose_maps(over, self.body)
            rhs = compose_maps(
                compose_maps(over, self.f), self.prod.p2
            )
            ok = lhs.components == rhs.components
        return ok

    def _insert(self, k: int) -> PresheafMap:
        x = self.prod.p2.target
        i = self.prod.p1.target
        comps = {
            c: {
                e: pair_label(self._delta_value(k, c), e)
                for e in x.levels[c]
            }
            for c in x.site.objects
        }
        return PresheafMap(x, self.prod.obj, f"ins{k}", comps)

    def _delta_value(self, k: int, c: str) -> str:
        # endpoints of the interval factor, read off the product projection
        i = self.prod.p1.target
        iv = getattr(self, "_interval", None)
        if iv is not None:
            return iv.delta_value(k, c)
        raise RuntimeError("homotopy lacks interval context")


def _mk_homotopy(
    interval: IntervalStructure,
    f: PresheafMap,
    g: PresheafMap,
    body: PresheafMap,
    prod: Span,
) -> Homotopy:
    h = Homotopy(f, g, body, prod)
    h._interval = interval
    return h


def constant_homotopy(interval: IntervalStructure, f: PresheafMap) -> Homotopy:
    sp = product(interval.i, f.source)
    body = compose_maps(f, sp.p2, name=f"const:{f.name}")
    return _mk_homotopy(interval, f, f, body, sp)


def find_homotopy(
    interval: IntervalStructure,
    f: PresheafMap,
    g: PresheafMap,
    over: PresheafMap | None = None,
) -> Homotopy | None:
    """Exhaustive search for a homotopy body; first witness in canonical
    order, or None.  ``over`` restricts to vertical homotopies against the
    given anchor q: Y -> A (f's anchor is q∘f)."""
    if f.source != g.source or f.target != g.target:
        raise ValueError("find_homotopy needs parallel maps")
    sp = product(interval.i, f.source)
    seeds = []
    for c in f.site.objects:
        d0 = interval.delta_value(0, c)
        d1 = interval.delta_value(1, c)
        for e in f.source.levels[c]:
            seeds.append((c, pair_label(d0, e), f.components[c][e]))
            seeds.append((c, pair_label(d1, e), g.components[c][e]))
    allowed = None
    if over is not None:
        fibers: dict[str, dict[str, list[str]]] = {}
        for c in f.site.objects:
            tab: dict[str, list[str]] = {a: [] for a in over.target.levels[c]}
            for y in over.source.levels[c]:
                tab[over.components[c][y]].append(y)
            fibers[c] = tab
        anchor_of = compose_maps(over, f)

        def allowed(c, pe, _sp=sp, _anchor=anchor_of, _fib=fibers):
            x = _sp.p2.components[c][pe]
            return _fib[c][_anchor.components[c][x]]

    body = NatSearch(sp.obj, f.target, seeds=seeds, allowed=allowed, name="hty").first()
    if body is None:
        return None
    return _mk_homotopy(interval, f, g, body, sp)


# ---------------------------------------------------------------------------
# path objects
# ---------------------------------------------------------------------------


@dataclass
class PathObject:
    space: Presheaf
    reflexivity: PresheafMap  # X -> P
    ev0: PresheafMap          # P -> X
    ev1: PresheafMap
    boundary: PresheafMap     # P -> X x_A X
    boundary_prod: Span
    paths: PresheafMap        # P -> hom(I, X)
    exp: Exponential
    anchor: PresheafMap       # P -> A (ambient: to the terminal)


def _const_section(exp: Exponential, x: Presheaf, c: str, xe: str) -> str:
    site = x.site
    sec = {
        d: {
            pair_label(g, ie): x.action[g][xe]
            for g in site.hom(d, c)
            for ie in exp.a.levels[d]
        }
        for d in site.objects
    }
    return exp.label_for_assignment(c, sec)


def path_object(interval: IntervalStructure, q: SliceObject) -> PathObject:
    """The relative path object of q: X -> A: paths in X constant over A.

    Pass the terminal anchor for the ambient path object.
    """
    site = interval.site
    x, a = q.total, q.anchor.target
    exp_x = exponential(interval.i, x, name=f"cocyl:{x.name}")
    exp_a = exponential(interval.i, a, name=f"cocyl:{a.name}")
    hom_iq = exp_x.postcompose(q.anchor, exp_a)
    const_a = PresheafMap(
        a,
        exp_a.obj,
        f"const:{a.name}",
        {
            c: {ae: _const_section(exp_a, a, c, ae) for ae in a.levels[c]}
            for c in site.objects
        },
    )
    pb = pullback(const_a, hom_iq, name=f"P({x.name}/{a.name})")
    space = pb.obj
    anchor = pb.p1
    paths = pb.p2
    refl = pair_into_product(
        pb,
        q.anchor,
        PresheafMap(
            x,
            exp_x.obj,
            f"const:{x.name}",
            {
                c: {xe: _const_section(exp_x, x, c, xe) for xe in x.levels[c]}
                for c in site.objects
            },
        ),
        name=f"refl:{x.name}",
    )
    evs = []
    for k in (0, 1):
        comps = {
            c: {
                pe: exp_x.evaluate(
                    c,
                    paths.components[c][pe],
                    site.identity[c],
                    interval.delta_value(k, c),
                )
                for pe in space.levels[c]
            }
            for c in site.objects
        }
        evs.append(PresheafMap(space, x, f"ev{k}:{x.name}", comps))
    bprod = pullback(q.anchor, q.anchor, name=f"({x.name}x_{a.name}{x.name})")
    boundary = pair_into_product(bprod, evs[0], evs[1], name=f"bdry:{x.name}")
    return PathObject(
        space=space,
        reflexivity=refl,
        ev0=evs[0],
        ev1=evs[1],
        boundary=boundary,
        boundary_prod=bprod,
        paths=paths,
        exp=exp_x,
        anchor=anchor,
    )


def ambient_slice(x: Presheaf) -> SliceObject:
    one = terminal_presheaf(x.site)
    return SliceObject(x, terminal_map(x, one))


# ---------------------------------------------------------------------------
# mapping cocylinder
# ---------------------------------------------------------------------------


@dataclass
class MappingCocylinder:
    mf: Presheaf
    j: PresheafMap       # X0 -> Mf
    e: PresheafMap       # Mf -> X1
    proj: PresheafMap    # Mf -> X0, retraction of j
    square: ArrowSquare  # the defining pullback square
    path: PathObject

    def verify(self, f: PresheafMap) -> bool:
        return (
            compose_maps(self.e, self.j).components == f.components
            and compose_maps(self.proj, self.j).components
            == identity_map(self.j.source).components
            and self.square.validate().ok
        )


def mapping_cocylinder(
    f: PresheafMap, p0: PresheafMap, p1: PresheafMap, interval: IntervalStructure
) -> MappingCocylinder:
    """The factorization X0 -> Mf -> X1 of f over the base of the anchors.

    p0: X0 -> A and p1: X1 -> A with p1 ∘ f = p0; the path object of p1 is
    pulled back along f at its 0-end.
    """
    if compose_maps(p1, f).components != p0.components:
        raise HypothesisFailure("mapping-cocylinder", "f is not a map over the base")
    po = path_object(interval, SliceObject(f.target, p1))
    pb = pullback(f, po.ev0, name=f"M({f.name})")
    mf = pb.obj
    j = pair_into_product(pb, identity_map(f.source), compose_maps(po.reflexivity, f), name=f"j:{f.name}")
    e = compose_maps(po.ev1, pb.p2, name=f"e:{f.name}")
    square = ArrowSquare(left=pb.p1, right=po.ev0, top=pb.p2, bottom=f, name=f"Mf-square:{f.name}")
    return MappingCocylinder(mf=mf, j=j, e=e, proj=pb.p1, square=square, path=po)


def is_equivalence(
    f: PresheafMap,
    p0: PresheafMap,
    p1: PresheafMap,
    interval: IntervalStructure,
) -> bool:
    """f is an equivalence over the base iff the second mapping-cocylinder
    leg is a trivial fibration."""
    mc = mapping_cocylinder(f, p0, p1, interval)
    return is_trivial_fibration(mc.e)


# ---------------------------------------------------------------------------
# homotopy composition and inversion
# ---------------------------------------------------------------------------


def _three_sided_problem(
    interval: IntervalStructure,
    x: Presheaf,
    cap,       # (c, t, xe) -> value in Y at the s = cap_end face
    side0,     # (c, s, xe) -> value at t = 0
    side1,     # (c, s, xe) -> value at t = 1
    target: Presheaf,
    cap_end: int = 1,
):
    """Assemble the lifting problem of delta_{cap_end} ⊗̂ (i^1 x X) with the
    given boundary data; the solved face is s = 1 - cap_end.  Returns
    (tensor, top map, the inner product I x X)."""
    site = interval.site
    i1 = boundary_inclusion_map(interval)
    prod_bdi_x = product(i1.source, x)
    prod_i_x = product(interval.i, x)
    i1x = product_map(prod_bdi_x, prod_i_x, i1, identity_map(x), name="i1xX")
    lt = leibniz_tensor(interval.delta(cap_end), i1x)
    # cap component: 1 x (I x X)
    cap_comps = {}
    for c in site.objects:
        row = {}
        for pe in lt.prod_ad.obj.levels[c]:
            tx = lt.prod_ad.p2.components[c][pe]
            t = prod_i_x.p1.components[c][tx]
            xe = prod_i_x.p2.components[c][tx]
            row[pe] = cap(c, t, xe)
        cap_comps[c] = row
    cap_map = PresheafMap(lt.prod_ad.obj, target, "box-cap", cap_comps)
    # side component: I x (bdI x X)
    side_comps = {}
    for c in site.objects:
        row = {}
        for pe in lt.prod_bc.obj.levels[c]:
            s = lt.prod_bc.p1.components[c][pe]
            bx = lt.prod_bc.p2.components[c][pe]
            b = prod_bdi_x.p1.components[c][bx]
            xe = prod_bdi_x.p2.components[c][bx]
            row[pe] = side0(c, s, xe) if b.startswith("i0:") else side1(c, s, xe)
        side_comps[c] = row
    side_map = PresheafMap(lt.prod_bc.obj, target, "box-sides", side_comps)
    top = pushout_induced(lt.pushout, cap_map, side_map, name="box-top")
    return lt, top, prod_i_x


def compose_homotopy(
    interval: IntervalStructure, h: Homotopy, k: Homotopy
) -> Homotopy:
    """Composite homotopy f ~ h.g for h: f ~ g and k: g ~ g2, target fibrant.

    Solves the box with sides (t=0) the first homotopy, (s=1) the second,
    (t=1) constant, and reads the composite off the solved s = 0 face.
    Raises NoFiller when the solver finds no filler.
    """
    if h.g.components != k.f.components:
        raise ValueError("homotopies are not composable")
    x = h.f.source
    y = h.f.target
    lt, top, prod_i_x = _three_sided_problem(
        interval,
        x,
        cap=lambda c, t, xe: k.body.components[c][pair_label(t, xe)],
        side0=lambda c, s, xe: h.body.components[c][pair_label(s, xe)],
        side1=lambda c, s, xe: k.g.components[c][xe],
        target=y,
    )
    one = terminal_presheaf(interval.site)
    problem = LiftingProblem(
        lt.map,
        terminal_map(y, one),
        top,
        terminal_map(lt.map.target, one),
    )
    q = solve_lift(problem)
    if q is None:
        raise NoFiller("homotopy composition found no filler")
    body = _restrict_box(interval, q, lt, prod_i_x, 0)
    out = _mk_homotopy(interval, h.f, k.g, body, prod_i_x)
    assert out.verify()
    return out


def invert_homotopy(interval: IntervalStructure, h: Homotopy) -> Homotopy:
    """Inverse homotopy g ~ f for h: f ~ g, target fibrant.

    Solves the box with sides (s=0, t=1) constant at g and (s=1) the given
    homotopy read in t, and reads the inverse off the solved t = 0 face.
    """
    x = h.f.source
    y = h.f.target
    site = interval.site
    i1 = boundary_inclusion_map(interval)
    prod_i_x = product(interval.i, x)
    d1x = endpoint_insert(interval, 1, prod_i_x)  # X -> I x X at t = 1
    lt = leibniz_tensor(i1, d1x)
    # components: bdI x (I x X) and I x X
    cap_comps = {}
    for c in site.objects:
        row = {}
        for pe in lt.prod_ad.obj.levels[c]:
            b = lt.prod_ad.p1.components[c][pe]
            tx = lt.prod_ad.p2.components[c][pe]
            t = prod_i_x.p1.components[c][tx]
            xe = prod_i_x.p2.components[c][tx]
            if b.startswith("i0:"):
                row[pe] = h.g.components[c][xe]  # s = 0: constant g
            else:
                row[pe] = h.body.components[c][pair_label(t, xe)]  # s = 1
        cap_comps[c] = row
    cap_map = PresheafMap(lt.prod_ad.obj, y, "inv-sides", cap_comps)
    side_comps = {
        c: {
            pe: h.g.components[c][lt.prod_bc.p2.components[c][pe]]
            for pe in lt.prod_bc.obj.levels[c]
        }
        for c in site.objects
    }
    side_map = PresheafMap(lt.prod_bc.obj, y, "inv-top", side_comps)
    top = pushout_induced(lt.pushout, cap_map, side_map, name="inv-box")
    one = terminal_presheaf(site)
    problem = LiftingProblem(
        lt.map, terminal_map(y, one), top, terminal_map(lt.map.target, one)
    )
    q = solve_lift(problem)
    if q is None:
        raise NoFiller("homotopy inversion found no filler")
    # read off the t = 0 face: (s, x) |-> q(s, (delta_0, x))
    comps = {}
    for c in site.objects:
        d0 = interval.delta_value(0, c)
        row = {}
        for pe in prod_i_x.obj.levels[c]:
            s = prod_i_x.p1.components[c][pe]
            xe = prod_i_x.p2.components[c][pe]
            row[pe] = q.components[c][pair_label(s, pair_label(d0, xe))]
        comps[c] = row
    body = PresheafMap(prod_i_x.obj, y, "inv-body", comps)
    out = _mk_homotopy(interval, h.g, h.f, body, prod_i_x)
    assert out.verify()
    return out


def _restrict_box(
    interval: IntervalStructure,
    q: PresheafMap,
    lt,
    prod_i_x: Span,
    k: int,
) -> PresheafMap:
    """Precompose a box filler I x (I x X) -> Y with the s = delta_k insert."""
    site = interval.site
    comps = {}
    for c in site.objects:
        dk = interval.delta_value(k, c)
        row = {}
        for pe in prod_i_x.obj.levels[c]:
            row[pe] = q.components[c][pair_label(dk, pe)]
        comps[c] = row
    return PresheafMap(prod_i_x.obj, q.target, f"face{k}", comps)


# ---------------------------------------------------------------------------
# fiber transport
# ---------------------------------------------------------------------------


@dataclass
class FiberTransport:
    x0: Span  # fiber over delta_0 with projections (to A, to X)
    x1: Span
    u0: PresheafMap  # X0 -> X1
    u1: PresheafMap  # X1 -> X0
    h0: Homotopy     # id_{X0} ~ u1 ∘ u0 over A
    h1: Homotopy     # id_{X1} ~ u0 ∘ u1 over A


def fiber_transport(
    p: PresheafMap,
    prod_ia: Span,
    interval: IntervalStructure,
) -> FiberTransport:
    """Transport along the cylinder: a fibration over I x A restricts to
    homotopy-equivalent fibers over the two ends.

    ``prod_ia`` is the product presentation of p's codomain.
    Raises NoFiller when a required lift does not exist (non-fibration).
    """
    site = interval.site
    a = prod_ia.p2.target
    inserts = {k: endpoint_insert(interval, k, prod_ia) for k in (0, 1)}
    fib = {k: pullback(inserts[k], p, name=f"fiber{k}:{p.name}") for k in (0, 1)}
    anchors = {k: fib[k].p1 for k in (0, 1)}
    lifts = {}
    for k in (0, 1):
        xk = fib[k].obj
        prod_i_xk = product(interval.i, xk)
        bottom = PresheafMap(
            prod_i_xk.obj,
            prod_ia.obj,
            f"base{k}",
            {
                c: {
                    pe: pair_label(
                        prod_i_xk.p1.components[c][pe],
                        anchors[k].components[c][prod_i_xk.p2.components[c][pe]],
                    )
                    for pe in prod_i_xk.obj.levels[c]
                }
                for c in site.objects
            },
        )
        prob = LiftingProblem(
            endpoint_insert(interval, k, prod_i_xk),
            p,
            fib[k].p2,
            bottom,
        )
        f_k = solve_lift(prob)
        if f_k is None:
            raise NoFiller(f"no transport lift at end {k}; p is not a fibration")
        lifts[k] = (f_k, prod_i_xk)
    u = {}
    for k in (0, 1):
        f_k, prod_i_xk = lifts[k]
        end = compose_maps(f_k, endpoint_insert(interval, 1 - k, prod_i_xk))
        u[k] = pullback_mediator(fib[1 - k], anchors[k], end, name=f"u{k}:{p.name}")
        assert u[k].validate().ok
    h = {}
    for k in (0, 1):
        f_k, prod_i_xk = lifts[k]
        f_other, _ = lifts[1 - k]
        xk = fib[k].obj
        # three-sided box inside X over I x A; the cap sits at the opposite
        # end so the solved face lies over delta_k
        lt, top, prod_face = _three_sided_problem(
            interval,
            xk,
            cap=lambda c, t, xe: _incl_val(fib[1 - k], u[k], c, xe),
            side0=lambda c, s, xe, _f=f_k: _f.components[c][pair_label(s, xe)],
            side1=lambda c, s, xe, _fo=f_other, _u=u[k]: _fo.components[c][
                pair_label(s, _u.components[c][xe])
            ],
            target=p.source,
            cap_end=1 - k,
        )
        bottom = PresheafMap(
            lt.map.target,
            prod_ia.obj,
            f"hbase{k}",
            {
                c: {
                    pe: pair_label(
                        lt.prod_bd.p1.components[c][pe],
                        anchors[k].components[c][
                            prod_face.p2.components[c][
                                lt.prod_bd.p2.components[c][pe]
                            ]
                        ],
                    )
                    for pe in lt.map.target.levels[c]
                }
                for c in site.objects
            },
        )
        prob = LiftingProblem(lt.map, p, top, bottom)
        q = solve_lift(prob)
        if q is None:
            raise NoFiller(f"no homotopy filler at end {k}")
        face = _restrict_box(interval, q, lt, prod_face, k)
        # the face lands in the fiber over delta_k; factor through it
        body = pullback_mediator(
            fib[k],
            compose_maps(anchors[k], prod_face.p2),
            face,
            name=f"hbody{k}",
        )
        assert body.validate().ok
        comp = compose_maps(u[1 - k], u[k])
        h[k] = _mk_homotopy(interval, identity_map(xk), comp, body, prod_face)
        assert h[k].verify()
    return FiberTransport(
        x0=fib[0], x1=fib[1], u0=u[0], u1=u[1], h0=h[0], h1=h[1]
    )


def _incl_val(fib_span: Span, u_map: PresheafMap, c: str, xe: str) -> str:
    return fib_span.p2.components[c][u_map.components[c][xe]]


# ---------------------------------------------------------------------------
# strong codeformation retract data
# ---------------------------------------------------------------------------


@dataclass
class SdrData:
    section: PresheafMap          # s: X -> Y with r ∘ s = id
    homotopy: Homotopy            # id_Y ~ s ∘ r, vertical over X
    relative_to: PresheafMap | None  # the leg the homotopy is constant on


def span_retract_data(
    a1: PresheafMap, a2: PresheafMap, r: PresheafMap, interval: IntervalStructure
) -> SdrData:
    """Section and relative vertical homotopy for a triangle a2 = r ∘ a1.

    Solves two lifting problems against r: first for the section, then for
    the homotopy along the boundary-Leibniz of a1.
    """
    if compose_maps(r, a1).components != a2.components:
        raise HypothesisFailure("span-retract", "triangle does not commute")
    y, x = r.source, r.target
    s = solve_lift(LiftingProblem(a2, r, a1, identity_map(x)))
    if s is None:
        raise NoFiller("no section for the span triangle")
    site = interval.site
    i1 = boundary_inclusion_map(interval)
    lt = leibniz_tensor(i1, a1)
    # top on bdI x Y: delta_0 copy id, delta_1 copy s ∘ r
    sr = compose_maps(s, r)
    cap_comps = {}
    for c in site.objects:
        row = {}
        for pe in lt.prod_ad.obj.levels[c]:
            b = lt.prod_ad.p1.components[c][pe]
            ye = lt.prod_ad.p2.components[c][pe]
            row[pe] = ye if b.startswith("i0:") else sr.components[c][ye]
        cap_comps[c] = row
    cap_map = PresheafMap(lt.prod_ad.obj, y, "sdr-ends", cap_comps)
    side_comps = {
        c: {
            pe: a1.components[c][lt.prod_bc.p2.components[c][pe]]
            for pe in lt.prod_bc.obj.levels[c]
        }
        for c in site.objects
    }
    side_map = PresheafMap(lt.prod_bc.obj, y, "sdr-rel", side_comps)
    top = pushout_induced(lt.pushout, cap_map, side_map, name="sdr-top")
    bottom = compose_maps(r, lt.prod_bd.p2, name="sdr-bottom")
    q = solve_lift(LiftingProblem(lt.map, r, top, bottom))
    if q is None:
        raise NoFiller("no relative homotopy for the span triangle")
    body = q
    hom = _mk_homotopy(interval, identity_map(y), sr, body, lt.prod_bd)
    assert hom.verify()
    assert compose_maps(r, body).components == compose_maps(r, lt.prod_bd.p2).components
    return SdrData(section=s, homotopy=hom, relative_to=a1 if not a1.source.is_empty() else None)


def sdr_extract(r: PresheafMap, interval: IntervalStructure) -> SdrData:
    """Strong codeformation retract data of a trivial fibration."""
    if not is_trivial_fibration(r):
        raise HypothesisFailure("sdr-extract", "map is not a trivial fibration")
    zero = initial_presheaf(r.site)
    return span_retract_data(
        initial_map(r.source, zero), initial_map(r.target, zero), r, interval
    )

"""The equivalence extension construction and the extension operations.

``equivalence_extend`` implements the central construction: factor the
given equivalence through its mapping cocylinder over the small base,
push the factorization forward along the pulled-back cofibration, and
re-verify every postcondition by search.  ``trivfib_extend`` is the
pushforward extension of trivial fibrations along cofibrations;
``fib_extend_theta`` extends fibrations along endpoint-insertion squares
by assembling transport data into an equivalence-extension input; and
``fib_extend_cellular`` iterates that mechanism along a verified cell
certificate, one cobase change of a coproduct of generators at a time.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .cylinder import IntervalStructure, leibniz_tensor, theta_square, j_retraction
from .errors import HypothesisFailure, PostconditionFailure
from .homotopy import (
    MappingCocylinder,
    fiber_transport,
    mapping_cocylinder,
    path_object,
)
from .lcc import (
    Pushforward,
    SliceObject,
    base_change,
    exponential,
    pushforward,
    slice_exponential_monad,
)
from .lifting import (
    CellBudget,
    CellCertificate,
    GeneratorFamily,
    gen_trivcofs,
    is_fibration,
    is_trivial_fibration,
    verify_certificate,
)
from .limits import (
    Span,
    is_pullback_square,
    pair_into_product,
    pair_label,
    product,
    pullback,
    pullback_mediator,
    pushout,
    pushout_induced,
)
from .presheaf import (
    ArrowSquare,
    Presheaf,
    PresheafMap,
    compose_maps,
    identity_map,
    inverse_of,
    is_levelwise_bijection,
    is_mono,
)
from .search import NatSearch, find_isomorphism


@dataclass
class GlueInput:
    """Hypotheses of the equivalence extension: a cofibration m: A -> B, a
    fibration p1: Y1 -> B, its restriction X1 = A x_B Y1 (with t: X1 -> Y1
    the top of the lower pullback square), a fibration p0: X0 -> A, and an
    equivalence f: X0 -> X1 over A."""

    m: PresheafMap
    p1: PresheafMap
    t: PresheafMap   # X1 -> Y1
    x1_anchor: PresheafMap  # X1 -> A
    p0: PresheafMap
    f: PresheafMap
    interval: IntervalStructure

    def validate(self) -> list[str]:
        problems = []
        if not is_mono(self.m):
            problems.append("cofibration-not-mono")
        lower = ArrowSquare(
            left=self.x1_anchor, right=self.p1, top=self.t, bottom=self.m
        )
        if not lower.validate().ok or not is_pullback_square(lower):
            problems.append("lower-square-not-pullback")
        if compose_maps(self.x1_anchor, self.f).components != self.p0.components:
            problems.append("f-not-over-base")
        if not is_fibration(self.p0, self.interval):
            problems.append("p0-not-fibration")
        if not is_fibration(self.p1, self.interval):
            problems.append("p1-not-fibration")
        return problems


@dataclass
class GlueOutput:
    y0: SliceObject            # Y0 over B
    to_y1: PresheafMap         # Y0 -> Y1
    back_square: ArrowSquare   # X0 -> Y0 over A -> B
    n_slice: SliceObject       # the pushed-forward cocylinder N over Y1
    y0_to_n: PresheafMap
    n_to_y1: PresheafMap
    mc: MappingCocylinder      # the mapping cocylinder used, over A
    report: dict[str, bool] = field(default_factory=dict)


def equivalence_extend(inp: GlueInput, verify: str = "full") -> GlueOutput:
    """Extend the equivalence f along the cofibration m.

    With verify="full" (the default) every hypothesis and postcondition is
    re-verified by search and a postcondition failure on validated input
    raises PostconditionFailure.  verify="none" skips the lifting sweeps;
    pipelines that re-verify their own final output use it internally.
    """
    full = verify == "full"
    if full:
        problems = inp.validate()
        if problems:
            raise HypothesisFailure("equivalence-extend", ", ".join(problems))

    iv = inp.interval
    # mapping cocylinder of f over A
    mc = mapping_cocylinder(inp.f, inp.p0, inp.x1_anchor, iv)
    if full and not is_trivial_fibration(mc.e):
        raise HypothesisFailure("equivalence-extend", "f-not-equivalence")

    # the restriction t: X1 -> Y1 is a mono (pullback of the mono m)
    if not is_mono(inp.t):
        raise HypothesisFailure("equivalence-extend", "restriction-not-mono")

    # push the factorization X0 -> M -> X1 forward along t
    pf_x0 = pushforward(inp.t, SliceObject(inp.f.source, inp.f))
    pf_m = pushforward(inp.t, SliceObject(mc.mf, mc.e))
    y0_over_y1 = pf_x0.slice
    n_over_y1 = pf_m.slice

    # Y0 -> N: push the map j: X0 -> M forward (sections compose with j)
    y0_to_n = _pushforward_map(pf_x0, pf_m, mc.j)

    q0 = compose_maps(inp.p1, y0_over_y1.anchor, name=f"q0:{inp.f.name}")
    y0 = SliceObject(y0_over_y1.total, q0)

    # back square: the reflection pulls Y0 back to X0 along t, and pasting
    # with the lower pullback square lands the corner on the literal X0
    ext = pf_x0.extension_square()
    back = ArrowSquare(
        left=inp.p0, right=q0, top=ext.top, bottom=inp.m, name=f"back:{inp.f.name}"
    )
    report: dict[str, bool] = {}
    report["back-square-pullback"] = back.validate().ok and is_pullback_square(back)
    if full:
        report["n-trivial-fibration"] = is_trivial_fibration(n_over_y1.anchor)
        report["y0-fibration"] = is_fibration(q0, iv)

        from .homotopy import is_equivalence as _is_equiv

        report["y0-to-y1-equivalence"] = _is_equiv(y0_over_y1.anchor, q0, inp.p1, iv)

    if not all(report.values()):
        failed = ",".join(k for k, v in report.items() if not v)
        raise PostconditionFailure(f"equivalence_extend postconditions failed: {failed}")
    return GlueOutput(
        y0=y0,
        to_y1=y0_over_y1.anchor,
        back_square=back,
        n_slice=SliceObject(n_over_y1.total, compose_maps(inp.p1, n_over_y1.anchor)),
        y0_to_n=y0_to_n,
        n_to_y1=n_over_y1.anchor,
        mc=mc,
        report=report,
    )


def _pushforward_map(
    pf_src: Pushforward, pf_tgt: Pushforward, g: PresheafMap
) -> PresheafMap:
    """m_*(g) for a map g of slices over the shared source of m."""
    site = g.site
    comps: dict[str, dict[str, str]] = {o: {} for o in site.objects}
    for c in site.objects:
        for lbl in pf_src.slice.total.levels[c]:
            b_elt = pf_src.slice.anchor.components[c][lbl]
            sec = pf_src.maps[(c, b_elt)][lbl]
            pushed = {
                d: {
                    pe: g.components[d][sec.components[d][pe]]
                    for pe in sec.source.levels[d]
                }
                for d in site.objects
            }
            comps[c][lbl] = pf_tgt.section_label(c, b_elt, pushed)
    return PresheafMap(
        pf_src.slice.total, pf_tgt.slice.total, f"pf:{g.name}", comps
    )


def factorization_iso(
    first_legs: tuple[PresheafMap, PresheafMap],
    second_legs: tuple[PresheafMap, PresheafMap],
) -> PresheafMap | None:
    """An isomorphism of factorizations (j1, e1) vs (j2, e2) of the same map:
    a levelwise bijection phi with phi ∘ j1 = j2 and e2 ∘ phi = e1."""
    j1, e1 = first_legs
    j2, e2 = second_legs
    seeds = [
        (o, j1.components[o][a], j2.components[o][a])
        for o in j1.site.objects
        for a in j1.source.levels[o]
    ]
    fibers: dict[str, dict[str, list[str]]] = {}
    for o in e2.site.objects:
        tab: dict[str, list[str]] = {e: [] for e in e2.target.levels[o]}
        for x in e2.source.levels[o]:
            tab[e2.components[o][x]].append(x)
        fibers[o] = tab
    return NatSearch(
        e1.source,
        e2.source,
        seeds=seeds,
        allowed=lambda o, x: fibers[o][e1.components[o][x]],
        bijective=True,
        name="fact-iso",
    ).first()


def glue_core_factors(
    inp: GlueInput,
) -> tuple[PresheafMap, PresheafMap, PresheafMap]:
    """The two trivial-fibration factors behind the construction, over B.

    Returns (section, first_factor, second_factor): the co-contraction
    section Y1 -> I ⊸_B Y1 of the 0-end projection, that projection, and
    the slice Leibniz exponential of the 1-end projection with m.
    """
    iv = inp.interval
    site = iv.site
    y1 = inp.p1.source
    po_b = path_object(iv, SliceObject(y1, inp.p1))
    section = po_b.reflexivity
    first_factor = po_b.ev0

    # second factor: I ⊸_B Y1 -> (I ⊸_B Y1)^A x_{Y1^A} Y1 induced by the
    # exponential-monad unit along m and the 1-end projection
    pf_p, unit_p = slice_exponential_monad(inp.m, SliceObject(po_b.space, po_b.anchor))
    pf_y, unit_y = slice_exponential_monad(inp.m, SliceObject(y1, inp.p1))
    # base-changed 1-end projection m^*(ev1), then pushed forward
    bc_p = base_change(inp.m, SliceObject(po_b.space, po_b.anchor))
    bc_y = base_change(inp.m, SliceObject(y1, inp.p1))
    bc_ev1 = PresheafMap(
        bc_p.slice.total,
        bc_y.slice.total,
        "m*ev1",
        {
            o: {
                pe: pair_label(
                    bc_p.slice.anchor.components[o][pe],
                    po_b.ev1.components[o][bc_p.to_total.components[o][pe]],
                )
                for pe in bc_p.slice.total.levels[o]
            }
            for o in site.objects
        },
    )
    ev1_pushed = _pushforward_map(pf_p, pf_y, bc_ev1)
    corner = pullback(ev1_pushed, unit_y, name="glue-corner")
    med = pullback_mediator(corner, unit_p, po_b.ev1, name="glue-second")
    return section, first_factor, med


# ---------------------------------------------------------------------------
# extension of trivial fibrations (Joyal's trick) and of fibrations
# ---------------------------------------------------------------------------


@dataclass
class Extension:
    slice: SliceObject        # the extended map over the large base
    square: ArrowSquare       # pullback square: restriction -> extension
    report: dict[str, bool]


def trivfib_extend(m: PresheafMap, p: SliceObject) -> Extension:
    """Extend a trivial fibration over dom(m) along the cofibration m.

    The extension is the pushforward; the back square is the reflection
    square and is verified to be a pullback, and the extended map is
    re-verified to be a trivial fibration.
    """
    if not is_mono(m):
        raise HypothesisFailure("trivfib-extend", "m is not mono")
    if p.anchor.target != m.source:
        raise HypothesisFailure("trivfib-extend", "p is not a slice over dom(m)")
    if not is_trivial_fibration(p.anchor):
        raise HypothesisFailure("trivfib-extend", "p is not a trivial fibration")
    pf = pushforward(m, p)
    sq = pf.extension_square()
    report = {
        "back-square-pullback": sq.validate().ok and is_pullback_square(sq),
        "extension-trivial-fibration": is_trivial_fibration(pf.slice.anchor),
    }
    if not all(report.values()):
        failed = ",".join(k for k, v in report.items() if not v)
        raise PostconditionFailure(f"trivfib_extend postconditions failed: {failed}")
    return Extension(slice=pf.slice, square=sq, report=report)


def fib_extend_theta(
    k: int,
    m: PresheafMap,
    q: SliceObject,
    interval: IntervalStructure,
    verify: str = "full",
) -> Extension:
    """Extend a fibration along the square theta_k ⊗̂ m.

    q is a fibration over dom(delta_k ⊗̂ m) = B +_A (I x A); the result is
    a fibration over B whose base change along the square's top leg equals
    the input's restriction on the nose (the restriction object itself is
    the corner of the verified pullback square).
    """
    iv = interval
    full = verify == "full"
    if not is_mono(m):
        raise HypothesisFailure("fib-extend-theta", "m is not mono")
    lt = leibniz_tensor(iv.delta(k), m)
    sq = theta_square(k, m, iv, lt=lt)
    if q.anchor.target != sq.right.source:
        raise HypothesisFailure(
            "fib-extend-theta", "q is not a slice over the square's domain corner"
        )
    if full and not is_fibration(q.anchor, iv):
        raise HypothesisFailure("fib-extend-theta", "q is not a fibration")

    # restriction along the top leg: the literal input restriction object
    top_bc = base_change(sq.top, q)      # fibration over A
    bcomp_bc = base_change(lt.pushout.i1, q)  # fibration over the 1 x B part

    # the I x A part, transported to fibers over the two ends
    ia_bc = base_change(lt.pushout.i2, q)  # over I x A
    ft = fiber_transport(ia_bc.slice.anchor, lt.prod_bc, iv)
    fibs = {0: ft.x0, 1: ft.x1}
    us = {0: ft.u0, 1: ft.u1}

    # identify the theta-top restriction with the transport fiber at 1 - k:
    # both are pullbacks of q along equal composites, so the mediator is a
    # forced levelwise bijection
    med = pullback_mediator(
        fibs[1 - k],
        top_bc.slice.anchor,
        _paste_mediator(top_bc, ia_bc, lt, iv, 1 - k),
        name="paste",
    )
    if not (med.validate().ok and is_levelwise_bijection(med)):
        raise PostconditionFailure("theta restriction does not match the fiber")

    # equivalence over A from transport, rebased onto the literal restriction
    f_over_a = compose_maps(us[1 - k], med, name=f"transport:{m.name}")

    # the k-end fiber is the pullback of the B-part fibration along m
    x1_span = fibs[k]
    x1_anchor = x1_span.p1
    wb_total = bcomp_bc.slice.total
    wb_anchor = compose_maps(lt.prod_ad.p2, bcomp_bc.slice.anchor, name="wb")
    t_map = _corner_to_bpart(x1_span, ia_bc, bcomp_bc, lt, iv, k, m)

    inp = GlueInput(
        m=m,
        p1=wb_anchor,
        t=t_map,
        x1_anchor=x1_anchor,
        p0=top_bc.slice.anchor,
        f=f_over_a,
        interval=iv,
    )
    out = equivalence_extend(inp, verify=verify)
    back = out.back_square
    report = dict(out.report)
    report["coherence-pullback"] = is_pullback_square(back)
    if not all(report.values()):
        failed = ",".join(k_ for k_, v in report.items() if not v)
        raise PostconditionFailure(f"fib_extend_theta postconditions failed: {failed}")
    return Extension(slice=out.y0, square=back, report=report)


def _paste_mediator(top_bc, ia_bc, lt, iv, end: int) -> PresheafMap:
    """The comparison from the top-leg restriction into the I x A slice.

    Elements of the top restriction are pairs (a, w) with q(w) the image of
    the delta_{end} insertion; the corresponding element over I x A is
    ((delta_end, a), w).
    """
    site = iv.site
    src = top_bc.slice.total
    tgt = ia_bc.slice.total
    comps: dict[str, dict[str, str]] = {o: {} for o in site.objects}
    for c in site.objects:
        dk = iv.delta_value(end, c)
        for pe in src.levels[c]:
            a_elt = top_bc.slice.anchor.components[c][pe]
            w = top_bc.to_total.components[c][pe]
            comps[c][pe] = pair_label(pair_label(dk, a_elt), w)
    return PresheafMap(src, tgt, "paste", comps)


def _corner_to_bpart(x1_span, ia_bc, bcomp_bc, lt, iv, k: int, m) -> PresheafMap:
    """X_k -> W_B: move the k-end fiber of the I x A part into the B part
    through the pushout identification (delta_k, a) ~ m(a)."""
    site = iv.site
    comps: dict[str, dict[str, str]] = {o: {} for o in site.objects}
    src = x1_span.obj
    tgt = bcomp_bc.slice.total
    for c in site.objects:
        for pe in src.levels[c]:
            a_elt = x1_span.p1.components[c][pe]
            w = x1_span.p2.components[c][pe]  # element of the I x A slice total
            w_q = ia_bc.to_total.components[c][w]
            b_elt = m.components[c][a_elt]
            comps[c][pe] = pair_label(pair_label("*", b_elt), w_q)
    return PresheafMap(src, tgt, f"corner:{m.name}", comps)


def fib_extend_cellular(
    cert: CellCertificate,
    m: PresheafMap,
    p: SliceObject,
    interval: IntervalStructure,
    family: GeneratorFamily | None = None,
) -> Extension:
    """Extend a fibration along a certified trivial cofibration, stagewise.

    Per stage: pull back to each generator's domain, extend through the
    connection-built biased retract and the theta-square mechanism, glue
    the results by the stage pushout.  Intermediate stages skip the
    redundant per-step lifting sweeps (their hypotheses are pullbacks of a
    checked fibration); the final output is verified in full: the composite
    coherence square must be an exact pullback and the extended anchor must
    pass the fibration sweep.  Retract data in certificates is rejected.
    """
    iv = interval
    site = iv.site
    fam = family or gen_trivcofs(site, iv)
    if cert.retract is not None:
        raise HypothesisFailure("fib-extend-cellular", "retract stages unsupported")
    rep = verify_certificate(cert, m, fam)
    if not rep.ok:
        raise HypothesisFailure("fib-extend-cellular", "; ".join(rep.problems))
    if p.anchor.target != m.source:
        raise HypothesisFailure("fib-extend-cellular", "p is not over dom(m)")
    if not is_fibration(p.anchor, iv):
        raise HypothesisFailure("fib-extend-cellular", "p is not a fibration")

    # move p onto stage 0 (the corestriction relabels the base only)
    cur = SliceObject(p.total, compose_maps(cert.first, p.anchor))
    overall_top = identity_map(p.total)
    for stage in cert.stages:
        cur, stage_square = _extend_one_stage(stage, cur, iv, fam)
        overall_top = compose_maps(stage_square.top, overall_top)
    # final relabel along the iso onto cod(m)
    final_anchor = compose_maps(cert.final, cur.anchor)
    out_slice = SliceObject(cur.total, final_anchor)
    back = ArrowSquare(
        left=p.anchor,
        right=final_anchor,
        top=overall_top,
        bottom=compose_maps(cert.final, _compose_incls(cert), name="cells"),
        name="cellular-coherence",
    )
    report = {
        "extension-fibration": is_fibration(final_anchor, iv),
        "coherence-pullback": back.validate().ok and is_pullback_square(back),
    }
    if not all(report.values()):
        failed = ",".join(k for k, v in report.items() if not v)
        raise PostconditionFailure(f"fib_extend_cellular failed: {failed}")
    return Extension(slice=out_slice, square=back, report=report)


def _compose_incls(cert: CellCertificate) -> PresheafMap:
    cur = cert.first
    for stage in cert.stages:
        cur = compose_maps(stage.incl, cur)
    return cur


def _extend_one_stage(
    stage, cur: SliceObject, iv: IntervalStructure, fam: GeneratorFamily
) -> tuple[SliceObject, ArrowSquare]:
    """One cobase change: extend across each generator, then glue the
    extended pieces onto the current total by pushouts over the restrictions."""
    ext_totals = []
    for name, attach, leg in stage.members:
        j_lt, k = _member_tensor(fam, name, iv)
        restricted = base_change(attach, cur)
        ext = _extend_along_j_arrow(k, j_lt, restricted.slice, iv)
        ext_totals.append((name, attach, leg, restricted, ext))

    new_total = cur.total
    new_anchor = compose_maps(stage.incl, cur.anchor)
    top = identity_map(cur.total)
    for name, attach, leg, restricted, ext in ext_totals:
        # W' = W ⊔_R ext.total over S_{i+1}, R the restriction to dom(j)
        into_w = compose_maps(top, restricted.to_total)
        po = pushout(into_w, ext.square.top)
        anchor = pushout_induced(
            po,
            new_anchor,
            compose_maps(leg, ext.slice.anchor),
            name="glued-anchor",
        )
        new_total = po.obj
        new_anchor = anchor
        top = compose_maps(po.i1, top)
    sq = ArrowSquare(
        left=cur.anchor,
        right=new_anchor,
        top=top,
        bottom=stage.incl,
        name="stage-square",
    )
    return SliceObject(new_total, new_anchor), sq


def _member_tensor(fam: GeneratorFamily, name: str, iv: IntervalStructure):
    """Recover (pushout-product, endpoint index) for a J member by name."""
    cache = getattr(iv, "_family_cache", {})
    k = 0 if name.startswith("d0^") else 1
    lt = cache.get(("lt", k, name.split("^", 1)[1]))
    if lt is None:
        raise HypothesisFailure("fib-extend-cellular", f"unknown generator {name}")
    return lt, k


def _extend_along_j_arrow(
    k: int, j_lt, q: SliceObject, iv: IntervalStructure
) -> Extension:
    """Extension of a fibration along the arrow delta_k ⊗̂ m, via the
    connection retraction and the theta square of the arrow itself.

    The coherence square's top map lands the original total into the
    extension through the retraction section, so the pullback along the
    arrow is the input on the nose.
    """
    tau, rho_dom, rho_cod = j_retraction(k, j_lt, iv)
    pulled = base_change(rho_dom, q)
    ext = fib_extend_theta(k, j_lt.map, pulled.slice, iv, verify="none")
    # section of the theta corner: w |-> (a, (tau_top(a), w)) with a the
    # anchor of w; the inner pair lives in the rho-pullback, the outer one
    # in the theta-top restriction, and rho ∘ tau = id makes it natural
    corner = ext.square.top.source
    comps = {}
    for o in q.total.site.objects:
        row = {}
        for w in q.total.levels[o]:
            a = q.anchor.components[o][w]
            d = tau.top.components[o][a]
            row[w] = pair_label(a, pair_label(d, w))
        comps[o] = row
    section = PresheafMap(q.total, corner, "tau-section", comps)
    top = compose_maps(ext.square.top, section)
    sq = ArrowSquare(
        left=q.anchor,
        right=ext.slice.anchor,
        top=top,
        bottom=j_lt.map,
        name="j-arrow-extension",
    )
    report = {
        "arrow-coherence-pullback": sq.validate().ok and is_pullback_square(sq),
    }
    if not all(report.values()):
        raise PostconditionFailure("extension along a generator arrow failed")
    return Extension(slice=ext.slice, square=sq, report=report)

"""Default corpora: named presheaves, maps, and role-tagged instances.

The corpus is data: ``default_corpus`` builds the shipped instances
programmatically with stable names, and ``write_corpus_files`` freezes
them into the text formats for the audit CLI.  Extending desk experiments
means editing a manifest, not this module.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .cylinder import IntervalStructure, interval_for_site
from .homotopy import ambient_slice, mapping_cocylinder, path_object
from .lcc import SliceObject
from .limits import coproduct, copair_out_of_coproduct, product, pullback
from .presheaf import (
    Presheaf,
    PresheafMap,
    chaotic_presheaf,
    compose_maps,
    discrete_presheaf,
    identity_map,
    initial_map,
    initial_presheaf,
    representable,
    subpresheaf_generated,
    terminal_map,
    terminal_presheaf,
    yoneda_map,
)
from .site import Site, builtin_cube_site, builtin_simplex_site


@dataclass
class GlueSpec:
    """Names of the five maps of a glue bundle within a corpus."""

    name: str
    m: str
    p1: str
    p0: str
    f: str
    t: str


@dataclass
class Corpus:
    site: Site
    interval: IntervalStructure
    presheaves: dict[str, Presheaf] = field(default_factory=dict)
    maps: dict[str, PresheafMap] = field(default_factory=dict)
    rlp_members: list[str] = field(default_factory=list)
    fibrant: list[str] = field(default_factory=list)
    triangles: list[tuple[str, str]] = field(default_factory=list)
    lcc_pairs: list[tuple[str, str]] = field(default_factory=list)
    glue_bundles: list[GlueSpec] = field(default_factory=list)
    frobenius: list[tuple[str, str]] = field(default_factory=list)
    spans: list[tuple[str, str, str]] = field(default_factory=list)
    # maps where square-lifting is strictly weaker than arrow-lifting:
    # boundary inclusions pass every composition (square) problem while
    # failing a filling (arrow) problem; the audit records the gap
    square_gap: list[str] = field(default_factory=list)

    def add_presheaf(self, p: Presheaf) -> Presheaf:
        self.presheaves[p.name] = p
        return p

    def add_map(self, f: PresheafMap, rlp: bool = False) -> PresheafMap:
        self.maps[f.name] = f
        if rlp:
            self.rlp_members.append(f.name)
        return f


def _endpoint(site: Site, i: Presheaf, k: int) -> PresheafMap:
    lbl = [m for m in site.hom("0", "1") if site.meta["values"][m][0] == k][0]
    f = yoneda_map(i, "0", lbl, name=f"end{k}")
    return f


def default_corpus(site_token: str) -> Corpus:
    if site_token == "simplex:2":
        return _simplex2_corpus()
    if site_token == "cube:2":
        return _cube2_corpus()
    raise ValueError(f"no default corpus for {site_token}")


def _common_objects(c: Corpus):
    site = c.site
    one = terminal_presheaf(site, name="one")
    zero = initial_presheaf(site, name="zero")
    i = c.interval.i
    i.name = "I"
    disc2 = discrete_presheaf(site, ("u", "v"), name="disc2")
    disc3 = discrete_presheaf(site, ("u", "v", "w"), name="disc3")
    e2 = chaotic_presheaf(site, ("a", "b"), name="E2")
    for p in (one, zero, i, disc2, disc3, e2):
        c.add_presheaf(p)
    return one, zero, i, disc2, disc3, e2


def _bang(c: Corpus, x: Presheaf, name: str) -> PresheafMap:
    f = terminal_map(x, c.presheaves["one"])
    f.name = name
    return c.add_map(f, rlp=True)


def _simplex2_corpus() -> Corpus:
    site = builtin_simplex_site(2)
    iv = interval_for_site(site)
    c = Corpus(site=site, interval=iv)
    one, zero, i, disc2, disc3, e2 = _common_objects(c)

    y2 = c.add_presheaf(representable(site, "2", name="y2"))

    # terminal maps: the collapse of the interval is the classic negative
    c.add_map(identity_map(one, name="id_one"), rlp=True)
    c.add_map(identity_map(i, name="id_I"), rlp=True)
    c.add_map(identity_map(e2, name="id_E2"), rlp=True)
    _bang(c, i, "I_to_one")
    _bang(c, e2, "E2_to_one")
    _bang(c, disc2, "disc2_to_one")
    _bang(c, disc3, "disc3_to_one")
    _bang(c, y2, "y2_to_one")
    zmap = initial_map(one, zero)
    zmap.name = "zero_to_one"
    c.add_map(zmap, rlp=True)

    d0 = _endpoint(site, i, 0)
    d0.name = "end0"
    d1 = _endpoint(site, i, 1)
    d1.name = "end1"
    c.add_map(d0, rlp=True)
    c.add_map(d1, rlp=True)

    # products with fibrant and non-fibrant fibers
    sp_ii = product(i, i, name="IxI")
    c.add_presheaf(sp_ii.obj)
    pr_ii = sp_ii.p2
    pr_ii.name = "IxI_pr2"
    c.add_map(pr_ii, rlp=True)
    sp_d2i = product(disc2, i, name="disc2xI")
    c.add_presheaf(sp_d2i.obj)
    pr_d2i = sp_d2i.p2
    pr_d2i.name = "disc2xI_pr2"
    c.add_map(pr_d2i, rlp=True)
    sp_e2d2 = product(e2, disc2, name="E2xdisc2")
    c.add_presheaf(sp_e2d2.obj)
    pr_e2d2 = sp_e2d2.p2
    pr_e2d2.name = "E2xdisc2_pr2"
    c.add_map(pr_e2d2, rlp=True)
    pr_e2d2b = sp_e2d2.p1
    pr_e2d2b.name = "E2xdisc2_pr1"
    c.add_map(pr_e2d2b, rlp=True)

    # boundary and horn inclusions
    from .lifting import gen_cofibrations, gen_trivcofs, horn_family

    gc = gen_cofibrations(site)
    bd1 = gc.member_map("bd:1")
    bd1.source.name = "bdI"
    c.add_presheaf(bd1.source)
    c.add_map(_named(bd1, "incl_bdI"))
    bd2 = gc.member_map("bd:2")
    bd2.source.name = "bdy2"
    c.add_presheaf(bd2.source)
    c.add_map(_named(bd2, "incl_bdy2"))
    c.square_gap = ["incl_bdI", "incl_bdy2"]
    horn21 = horn_family(site).member_map("horn:2:1")
    horn21.source.name = "horn21"
    c.add_presheaf(horn21.source)
    c.add_map(_named(horn21, "incl_horn21"), rlp=True)

    # path object of the chaotic nerve: endpoints and boundary
    po = path_object(iv, ambient_slice(e2))
    po.space.name = "PE2"
    c.add_presheaf(po.space)
    c.add_presheaf(po.boundary_prod.obj)
    po.boundary_prod.obj.name = "E2xE2"
    c.add_map(_named(po.ev0, "PE2_ev0"), rlp=True)
    c.add_map(_named(po.ev1, "PE2_ev1"), rlp=True)
    c.add_map(_named(po.boundary, "PE2_boundary"), rlp=True)

    # mapping cocylinder leg of a point inclusion into the nerve
    pt_a = PresheafMap(
        one, e2, "point_a", {o: {"*": "a" * len(e2.levels[o][0])} for o in site.objects}
    )
    c.add_map(pt_a)
    mc = mapping_cocylinder(pt_a, identity_map(one), _bang_of(c, e2), iv)
    mc.mf.name = "M_point_a"
    c.add_presheaf(mc.mf)
    c.add_map(_named(mc.e, "M_point_a_e"), rlp=True)

    # fold of the nerve
    cp = coproduct(e2, e2, name="E2+E2")
    c.add_presheaf(cp.obj)
    fold = copair_out_of_coproduct(cp, identity_map(e2), identity_map(e2), name="fold_E2")
    c.add_map(fold, rlp=True)

    # degeneracy image: the representable collapse y2 -> I
    s0lbl = [m for m in site.hom("2", "1") if site.meta["values"][m] == (0, 0, 1)][0]
    ys0 = yoneda_map(i, "2", s0lbl, name="y_s0")
    c.add_map(ys0, rlp=True)

    # swap automorphism of disc2
    swap = PresheafMap(
        disc2, disc2, "swap_disc2",
        {o: {"u": "v", "v": "u"} for o in site.objects},
    )
    c.add_map(swap, rlp=True)

    # fibrant members for the path-object sweep
    c.fibrant = ["one", "disc2", "disc3", "E2"]

    # triangles of fibrations (p then q), composable pairs
    c.triangles = [
        ("id_E2", "E2_to_one"),
        ("E2_to_one", "id_one"),
        ("id_one", "id_one"),
        ("PE2_ev0", "E2_to_one"),
        ("PE2_ev1", "E2_to_one"),
        ("E2xdisc2_pr2", "disc2_to_one"),
        ("E2xdisc2_pr1", "E2_to_one"),
        ("disc2_to_one", "id_one"),
        ("disc3_to_one", "id_one"),
        ("M_point_a_e", "E2_to_one"),
        ("swap_disc2", "disc2_to_one"),
        ("zero_to_one", "id_one"),
        ("fold_E2", "E2_to_one"),
        ("id_disc2_tri", "disc2_to_one"),
        ("PE2_boundary", "E2xE2_pr1"),
    ]
    c.add_map(identity_map(disc2, name="id_disc2_tri"))
    pr_ee = PresheafMap(
        po.boundary_prod.obj,
        e2,
        "E2xE2_pr1",
        {
            o: {
                pe: po.boundary_prod.p1.components[o][pe]
                for pe in po.boundary_prod.obj.levels[o]
            }
            for o in site.objects
        },
    )
    c.add_map(pr_ee)

    # pushforward pairs (mono, slice anchor over its source)
    c.lcc_pairs = _standard_lcc_pairs(c, d0, d1, bd1, horn21)

    # glue bundles
    c.glue_bundles = _standard_glue_bundles(c, d0, d1)

    # Frobenius instances: J generators pulled back along corpus fibrations
    c.frobenius = [
        ("d0^bd:0", "id_cod_j0"),
        ("d0^bd:0", "disc2_proj_j0"),
        ("d1^bd:0", "disc3_proj_j1"),
    ]
    j = gen_trivcofs(site, iv)
    j0 = j.member_map("d0^bd:0")
    c.add_map(identity_map(j0.target, name="id_cod_j0"))
    spf = product(disc2, j0.target, name="disc2xcodj0")
    c.add_presheaf(spf.obj)
    c.add_map(_named(spf.p2, "disc2_proj_j0"))
    j1 = j.member_map("d1^bd:0")
    spf3 = product(disc3, j1.target, name="disc3xcodj1")
    c.add_presheaf(spf3.obj)
    c.add_map(_named(spf3.p2, "disc3_proj_j1"))

    # span instances: (a1, a2, r) with certified legs
    pt_vertex = PresheafMap(
        one, e2, "span_a1", {o: {"*": "a" * len(e2.levels[o][0])} for o in site.objects}
    )
    c.add_map(pt_vertex)
    c.add_map(identity_map(one, name="span_a2"))
    c.spans = [("span_a1", "span_a2", "E2_to_one")]
    return c


def _named(f: PresheafMap, name: str) -> PresheafMap:
    f.name = name
    return f


def _bang_of(c: Corpus, x: Presheaf) -> PresheafMap:
    return terminal_map(x, c.presheaves["one"])


def _standard_lcc_pairs(c: Corpus, d0, d1, bd1, horn21):
    site = c.site
    one = c.presheaves["one"]
    pairs = []

    def reg(name, mono, anchor):
        c.maps.setdefault(mono.name, mono)
        c.maps.setdefault(anchor.name, anchor)
        pairs.append((mono.name, anchor.name))

    i = c.presheaves["I"]
    disc2 = c.presheaves["disc2"]
    disc3 = c.presheaves["disc3"]
    e2 = c.presheaves["E2"]

    # identity mono with a product anchor
    sp = product(disc2, i, name="lcc_disc2xI")
    c.add_presheaf(sp.obj)
    reg("p1", identity_map(i, name="lcc_idI"), _named(sp.p2, "lcc_pr_disc2xI"))

    # endpoint inclusions with discrete and chaotic fibers over the point
    y0 = d0.source
    c.presheaves.setdefault(y0.name, y0)
    for nm, fib in (("d2", disc2), ("d3", disc3), ("e2", e2)):
        anchor = PresheafMap(
            fib, y0, f"lcc_anchor_{nm}",
            {o: {e: y0.levels[o][0] for e in fib.levels[o]} for o in site.objects},
        )
        reg(nm, d0, anchor)
    anchor3 = PresheafMap(
        disc2, y0, "lcc_anchor_d2_end1",
        {o: {e: y0.levels[o][0] for e in disc2.levels[o]} for o in site.objects},
    )
    reg("d2e1", d1, anchor3)

    # boundary inclusion with a product fiber over the boundary
    bdi = bd1.source
    spb = product(disc2, bdi, name="lcc_disc2xbdI")
    c.add_presheaf(spb.obj)
    reg("bd", bd1, _named(spb.p2, "lcc_pr_disc2xbdI"))
    spb2 = product(e2, bdi, name="lcc_E2xbdI")
    c.add_presheaf(spb2.obj)
    reg("bdE2", bd1, _named(spb2.p2, "lcc_pr_E2xbdI"))

    # horn inclusion with a discrete fiber
    horn = horn21.source
    sph = product(disc2, horn, name="lcc_disc2xhorn")
    c.add_presheaf(sph.obj)
    reg("horn", horn21, _named(sph.p2, "lcc_pr_disc2xhorn"))

    # empty slice pushed along the initial mono
    zero = c.presheaves["zero"]
    reg(
        "empty",
        _named(initial_map(one, zero), "lcc_zero_to_one"),
        _named(identity_map(zero), "lcc_id_zero"),
    )

    # identity slice over the boundary
    reg("bdid", bd1, _named(identity_map(bdi), "lcc_id_bdI"))
    return pairs


def _standard_glue_bundles(c: Corpus, d0, d1) -> list[GlueSpec]:
    site = c.site
    iv = c.interval
    one = c.presheaves["one"]
    i = c.presheaves["I"]
    disc2 = c.presheaves["disc2"]
    disc3 = c.presheaves["disc3"]
    e2 = c.presheaves["E2"]
    bundles = []

    def product_bundle(name, fib: Presheaf, m: PresheafMap, perm: dict | None):
        sp = product(fib, m.target, name=f"{name}_Y1")
        c.add_presheaf(sp.obj)
        p1 = _named(sp.p2, f"{name}_p1")
        c.add_map(p1)
        low = pullback(m, p1, name=f"{name}_X1")
        c.add_presheaf(low.obj)
        t = _named(low.p2, f"{name}_t")
        c.add_map(t)
        anchor = _named(low.p1, f"{name}_x1anchor")
        c.add_map(anchor)
        if perm is None:
            f = identity_map(low.obj, name=f"{name}_f")
        else:
            from .limits import pair_label

            comps = {}
            for o in site.objects:
                row = {}
                for pe in low.obj.levels[o]:
                    y = t.components[o][pe]
                    fb = sp.p1.components[o][y]
                    ib = sp.p2.components[o][y]
                    row[pe] = pair_label(
                        anchor.components[o][pe], pair_label(perm.get(fb, fb), ib)
                    )
            # elements of X1 are (a, (fib, base)) pairs
                comps[o] = row
            f = PresheafMap(low.obj, low.obj, f"{name}_f", comps)
        c.add_map(f)
        p0 = _named(compose_maps(anchor, f), f"{name}_p0")
        c.add_map(p0)
        c.maps.setdefault(m.name, m)
        bundles.append(
            GlueSpec(name, m.name, p1.name, p0.name, f.name, t.name)
        )

    # identity cofibration with the chaotic nerve
    idm = identity_map(one, name="glue_id_m")
    c.add_map(idm)
    p1 = _named(terminal_map(e2, one), "glue_id_p1")
    c.add_map(p1)
    low = pullback(idm, p1, name="glue_id_X1")
    c.add_presheaf(low.obj)
    c.add_map(_named(low.p2, "glue_id_t"))
    c.add_map(_named(low.p1, "glue_id_x1anchor"))
    fid = identity_map(low.obj, name="glue_id_f")
    c.add_map(fid)
    c.add_map(_named(compose_maps(low.p1, fid), "glue_id_p0"))
    bundles.append(
        GlueSpec("glue_id", "glue_id_m", "glue_id_p1", "glue_id_p0", "glue_id_f", "glue_id_t")
    )

    product_bundle("glue_d0_disc2", disc2, d0, None)
    product_bundle("glue_d1_disc2", disc2, d1, None)
    product_bundle("glue_d0_disc3", disc3, d0, None)
    product_bundle("glue_d0_swap", disc2, d0, {"u": "v", "v": "u"})
    return bundles


def _cube2_corpus() -> Corpus:
    site = builtin_cube_site(2)
    iv = interval_for_site(site)
    c = Corpus(site=site, interval=iv)
    one, zero, i, disc2, disc3, e2 = _common_objects(c)

    c.add_map(identity_map(one, name="id_one"), rlp=True)
    c.add_map(identity_map(i, name="id_I"), rlp=True)
    _bang(c, i, "I_to_one")
    _bang(c, disc2, "disc2_to_one")
    _bang(c, disc3, "disc3_to_one")
    zmap = initial_map(one, zero)
    zmap.name = "zero_to_one"
    c.add_map(zmap, rlp=True)

    d0 = _endpoint(site, i, 0)
    d0.name = "end0"
    c.add_map(d0, rlp=True)
    d1 = _endpoint(site, i, 1)
    d1.name = "end1"
    c.add_map(d1, rlp=True)

    sp_d2i = product(disc2, i, name="disc2xI")
    c.add_presheaf(sp_d2i.obj)
    c.add_map(_named(sp_d2i.p2, "disc2xI_pr2"), rlp=True)

    from .lifting import gen_cofibrations

    gc = gen_cofibrations(site)
    bd1 = gc.member_map("bd:1")
    bd1.source.name = "bdI"
    c.add_presheaf(bd1.source)
    c.add_map(_named(bd1, "incl_bdI"))
    c.square_gap = ["incl_bdI"]

    po2 = path_object(iv, ambient_slice(disc2))
    po2.space.name = "Pdisc2"
    c.add_presheaf(po2.space)
    c.add_presheaf(_rename(po2.boundary_prod.obj, "disc2xdisc2"))
    c.add_map(_named(po2.ev0, "Pdisc2_ev0"), rlp=True)
    c.add_map(_named(po2.boundary, "Pdisc2_boundary"), rlp=True)
    pr_dd = PresheafMap(
        po2.boundary_prod.obj,
        disc2,
        "disc2xdisc2_pr1",
        {
            o: {
                pe: po2.boundary_prod.p1.components[o][pe]
                for pe in po2.boundary_prod.obj.levels[o]
            }
            for o in site.objects
        },
    )
    c.add_map(pr_dd)

    c.fibrant = ["one", "disc2", "disc3"]
    c.triangles = [
        ("id_one", "id_one"),
        ("disc2_to_one", "id_one"),
        ("Pdisc2_ev0", "disc2_to_one"),
        ("Pdisc2_boundary", "disc2xdisc2_pr1"),
    ]
    c.lcc_pairs = []
    y0 = d0.source
    c.presheaves.setdefault(y0.name, y0)
    anchor = PresheafMap(
        disc2, y0, "lcc_anchor_d2",
        {o: {e: y0.levels[o][0] for e in disc2.levels[o]} for o in site.objects},
    )
    c.maps.setdefault(d0.name, d0)
    c.add_map(anchor)
    c.lcc_pairs.append(("end0", "lcc_anchor_d2"))
    c.glue_bundles = _standard_glue_bundles(c, d0, d1)[:3]
    c.frobenius = []
    c.spans = []
    return c


def _rename(p: Presheaf, name: str) -> Presheaf:
    p.name = name
    return p

"""Pointwise limits/colimits, pullback-square verification, effective unions."""

import pytest

from psw.presheaf import (
    ArrowSquare,
    compose_maps,
    discrete_presheaf,
    identity_map,
    initial_presheaf,
    is_levelwise_bijection,
    is_mono,
    nondegenerate_elements,
    representable,
    subpresheaf_generated,
    terminal_map,
    terminal_presheaf,
    validate_presheaf,
    yoneda_map,
)
from psw.limits import (
    coproduct,
    copair_out_of_coproduct,
    effective_union,
    is_pullback_square,
    pair_into_product,
    product,
    pullback,
    pullback_mediator,
    pushout,
    pushout_induced,
)
from psw.search import enumerate_maps, find_isomorphism
from psw.site import builtin_cube_site, builtin_simplex_site


@pytest.fixture(scope="module")
def d1():
    return builtin_simplex_site(1)


@pytest.fixture(scope="module")
def d2():
    return builtin_simplex_site(2)


def endpoint(site, k):
    """delta_k : Delta^0 -> Delta^1 as a presheaf map of representables."""
    i = representable(site, "1")
    lbl = [m for m in site.hom("0", "1") if site.meta["values"][m] == (k,)][0]
    return yoneda_map(i, "0", lbl, name=f"d{k}")


def test_product_level_counts(d2):
    y1 = representable(d2, "1")
    sq = product(y1, y1)
    assert [len(sq.obj.level(o)) for o in d2.objects] == [4, 9, 16]
    assert validate_presheaf(sq.obj).ok
    assert sq.p1.validate().ok and sq.p2.validate().ok


def test_product_with_terminal_is_iso(d2):
    y1 = representable(d2, "1")
    sp = product(y1, terminal_presheaf(d2))
    assert is_levelwise_bijection(sp.p1)


def test_coproduct_with_initial_is_iso(d2):
    y1 = representable(d2, "1")
    cs = coproduct(initial_presheaf(d2), y1)
    assert is_levelwise_bijection(cs.i2)


def test_pullback_along_identity_is_iso(d2):
    y1 = representable(d2, "1")
    f = terminal_map(y1)
    pb = pullback(f, identity_map(f.target))
    assert is_levelwise_bijection(pb.p1)


def test_disjoint_endpoints_pullback_is_empty(d2):
    p = pullback(endpoint(d2, 0), endpoint(d2, 1))
    assert p.obj.is_empty()


def test_cube_disjoint_endpoints(d2):
    c2 = builtin_cube_site(2)
    lbls = sorted(c2.hom("0", "1"))
    i = representable(c2, "1")
    d0 = yoneda_map(i, "0", [m for m in lbls if c2.meta["values"][m] == (0,)][0])
    d1_ = yoneda_map(i, "0", [m for m in lbls if c2.meta["values"][m] == (1,)][0])
    assert pullback(d0, d1_).obj.is_empty()


def test_pullback_of_two_intervals_over_point_is_square(d2):
    y1 = representable(d2, "1")
    f = terminal_map(y1)
    pb = pullback(f, f)
    assert [len(pb.obj.level(o)) for o in d2.objects] == [4, 9, 16]
    nd = nondegenerate_elements(pb.obj)
    counts = {o: sum(1 for oo, _ in nd if oo == o) for o in d2.objects}
    assert counts == {"0": 4, "1": 5, "2": 2}


def test_pushout_identity_is_iso(d2):
    y1 = representable(d2, "1")
    po = pushout(identity_map(y1), identity_map(y1))
    assert is_levelwise_bijection(po.i1)


def test_pushout_wedge_of_intervals(d2):
    pt = terminal_presheaf(d2)
    y1 = representable(d2, "1")
    d0 = endpoint(d2, 0)
    d1_ = endpoint(d2, 1)
    # rebase endpoints to a shared terminal source
    z = pt
    a = compose_maps(d0, identity_map(z)) if d0.source == z else d0
    po = pushout(d1_, d0)  # glue endpoint 1 of one copy to endpoint 0 of other
    wedge = po.obj
    assert validate_presheaf(wedge).ok
    assert len(wedge.level("0")) == 3
    nd = nondegenerate_elements(wedge)
    assert sum(1 for o, _ in nd if o == "1") == 2


def test_pushout_of_initial_is_coproduct(d2):
    y1 = representable(d2, "1")
    zero = initial_presheaf(d2)
    from psw.presheaf import initial_map

    po = pushout(initial_map(y1), initial_map(y1))
    cp = coproduct(y1, y1)
    assert find_isomorphism(po.obj, cp.obj) is not None


def test_pullback_square_detection(d2):
    y1 = representable(d2, "1")
    f = terminal_map(y1)
    pb = pullback(f, f)
    sq = ArrowSquare(left=pb.p1, right=f, top=pb.p2, bottom=f)
    assert is_pullback_square(sq)
    # identity square with equal verticals
    sq2 = ArrowSquare(left=f, right=f, top=identity_map(y1), bottom=identity_map(f.target))
    assert is_pullback_square(sq2)


def test_disjoint_endpoints_square_is_pullback(d2):
    from psw.presheaf import initial_map

    zero = initial_presheaf(d2)
    d0, d1_ = endpoint(d2, 0), endpoint(d2, 1)
    sq = ArrowSquare(
        left=initial_map(d0.source, zero),
        right=d0,
        top=initial_map(d1_.source, zero),
        bottom=d1_,
    )
    assert is_pullback_square(sq)


def test_square_missing_element_is_not_pullback(d2):
    y1 = representable(d2, "1")
    f = terminal_map(y1)
    pb = pullback(f, f)
    # delete one element from the pullback apex: horn of the square
    keep = {
        o: [e for e in pb.obj.level(o)]
        for o in d2.objects
    }
    gens = nondegenerate_elements(pb.obj)
    top_cell = [e for o, e in gens if o == "2"][0]
    sub = subpresheaf_generated(
        pb.obj,
        [(o, e) for o, e in gens if not (o == "2" and e == top_cell)],
    )
    smaller = sub.source
    sq = ArrowSquare(
        left=compose_maps(pb.p1, sub),
        right=f,
        top=compose_maps(pb.p2, sub),
        bottom=f,
    )
    assert not is_pullback_square(sq)


def test_pullback_universal_property_enumerated(d1):
    """Mediator existence and uniqueness against every cone from small tests."""
    y1 = representable(d1, "1")
    f = terminal_map(y1)
    pb = pullback(f, f)
    for w in (terminal_presheaf(d1), y1):
        cones = [
            (w1, w2)
            for w1 in enumerate_maps(w, y1)
            for w2 in enumerate_maps(w, y1)
        ]
        for w1, w2 in cones:
            med = pullback_mediator(pb, w1, w2)
            assert med.validate().ok
            assert compose_maps(pb.p1, med).components == w1.components
            assert compose_maps(pb.p2, med).components == w2.components
            # uniqueness: any map into pb with these projections equals med
            others = [
                h
                for h in enumerate_maps(w, pb.obj)
                if compose_maps(pb.p1, h).components == w1.components
                and compose_maps(pb.p2, h).components == w2.components
            ]
            assert len(others) == 1 and others[0].components == med.components


def test_pushout_universal_property_enumerated(d1):
    pt = terminal_presheaf(d1)
    d0 = endpoint(d1, 0)
    d1m = endpoint(d1, 1)
    po = pushout(d0, d1m)
    assert validate_presheaf(po.obj).ok
    y1 = representable(d1, "1")
    for w in (pt, y1):
        for h1 in enumerate_maps(y1, w):
            for h2 in enumerate_maps(y1, w):
                if compose_maps(h1, d0).components != compose_maps(h2, d1m).components:
                    continue
                med = pushout_induced(po, h1, h2)
                assert med.validate().ok
                others = [
                    h
                    for h in enumerate_maps(po.obj, w)
                    if compose_maps(h, po.i1).components == h1.components
                    and compose_maps(h, po.i2).components == h2.components
                ]
                assert len(others) == 1


def test_monos_stable_under_pullback(d2):
    y2 = representable(d2, "2")
    faces = [m for m in d2.hom("1", "2") if len(set(d2.meta["values"][m])) == 2]
    bnd = subpresheaf_generated(y2, [("1", f) for f in faces])
    f = terminal_map(y2, terminal_presheaf(d2))
    g = terminal_map(representable(d2, "1"), terminal_presheaf(d2))
    # pull the mono back along an arbitrary map into its target
    for h in enumerate_maps(representable(d2, "1"), y2)[:5]:
        pb = pullback(bnd, h)
        assert is_mono(pb.p2)


def test_pushout_along_mono_is_mono_and_pullback(d2):
    """Adhesivity consequences on instances."""
    y2 = representable(d2, "2")
    m = subpresheaf_generated(y2, [("1", "a12_01")])  # edge inside the 2-simplex
    f = terminal_map(m.source, terminal_presheaf(d2))  # collapse the edge
    po = pushout(m, f)
    assert is_mono(po.i2)  # opposite leg of the mono is mono
    sq = ArrowSquare(left=f, right=po.i1, top=m, bottom=po.i2)
    assert is_pullback_square(sq)


def test_effective_union(d2):
    y1 = representable(d2, "1")
    d0, d1_ = endpoint(d2, 0), endpoint(d2, 1)
    u = effective_union(d0, d1_)
    assert is_mono(u)
    assert len(u.source.level("0")) == 2
    # same mono twice
    same = effective_union(d0, d0)
    assert set(same.source.level("0")) == set(d0.components["0"].values())
    # two faces of the 2-simplex
    y2 = representable(d2, "2")
    f01 = yoneda_map(y2, "1", "a12_01")
    f12 = yoneda_map(y2, "1", "a12_12")
    m1 = subpresheaf_generated(y2, [("1", "a12_01")])
    m2 = subpresheaf_generated(y2, [("1", "a12_12")])
    uu = effective_union(m1, m2)
    assert len(uu.source.level("0")) == 3
    nd = nondegenerate_elements(uu.source)
    assert sum(1 for o, _ in nd if o == "1") == 2


def test_effective_union_equals_pushout_over_intersection(d2):
    y2 = representable(d2, "2")
    m1 = subpresheaf_generated(y2, [("1", "a12_01")])
    m2 = subpresheaf_generated(y2, [("1", "a12_12")])
    u = effective_union(m1, m2)
    inter = pullback(m1, m2)
    po = pushout(inter.p1, inter.p2)
    glued = pushout_induced(po, m1, m2)
    assert find_isomorphism(po.obj, u.source) is not None

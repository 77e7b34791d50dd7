"""Base change, pushforward (dependent product), and exponentials."""

import pytest

from psw.lcc import (
    SliceObject,
    base_change,
    exponential,
    naive_sections,
    pushforward,
    slice_exponential_monad,
)
from psw.limits import is_pullback_square, product, pullback
from psw.presheaf import (
    PresheafMap,
    compose_maps,
    discrete_presheaf,
    identity_map,
    initial_presheaf,
    initial_map,
    is_levelwise_bijection,
    representable,
    terminal_map,
    terminal_presheaf,
    yoneda_map,
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
    i = representable(site, "1")
    lbl = [m for m in site.hom("0", "1") if site.meta["values"][m] == (k,)][0]
    return yoneda_map(i, "0", lbl, name=f"d{k}")


def slice_over(p: PresheafMap) -> SliceObject:
    return SliceObject(p.source, p)


def test_base_change_along_identity(d2):
    y1 = representable(d2, "1")
    q = slice_over(terminal_map(y1))
    bc = base_change(identity_map(q.base), q)
    assert is_levelwise_bijection(bc.to_total)


def test_base_change_of_iso_anchor_is_iso(d2):
    y1 = representable(d2, "1")
    q = slice_over(identity_map(y1))
    d0 = endpoint(d2, 0)
    bc = base_change(d0, q)
    assert is_levelwise_bijection(bc.slice.anchor)


def test_base_change_along_terminal_is_product(d2):
    """Pulling a slice over 1 back along X -> 1 is the product projection."""
    y1 = representable(d2, "1")
    two = discrete_presheaf(d2, ("u", "v"))
    q = slice_over(terminal_map(two))
    f = terminal_map(y1, q.base)
    bc = base_change(f, q)
    sp = product(y1, two)
    assert find_isomorphism(bc.slice.total, sp.obj) is not None
    assert [len(bc.slice.total.level(o)) for o in d2.objects] == [
        len(sp.obj.level(o)) for o in d2.objects
    ]


def test_pushforward_along_identity(d1):
    y1 = representable(d1, "1")
    two = discrete_presheaf(d1, ("u", "v"))
    p = slice_over(terminal_map(product(y1, two).obj, terminal_presheaf(d1)))
    # anchor here goes to the terminal; push forward along id of terminal
    pf = pushforward(identity_map(p.base), p)
    assert find_isomorphism(pf.slice.total, p.total) is not None


def test_pushforward_along_initial_map_gives_terminal_slice(d1):
    """Pushing forward the empty slice along 0 -> B yields one empty family per b."""
    y1 = representable(d1, "1")
    zero = initial_presheaf(d1)
    m = initial_map(y1, zero)
    p = slice_over(identity_map(zero))
    pf = pushforward(m, p)
    assert is_levelwise_bijection(pf.slice.anchor)


def test_pushforward_endpoint_example_matches_naive_enumeration(d1):
    """2-point discrete fiber over Delta^0 pushed along an endpoint inclusion."""
    two = discrete_presheaf(d1, ("u", "v"))
    pt = terminal_presheaf(d1)
    d0 = endpoint(d1, 0)
    # rebase: anchor two -> y(0) (the representable point, source of d0)
    y0 = d0.source
    anchor = PresheafMap(
        two, y0, "p", {o: {e: y0.levels[o][0] for e in two.levels[o]} for o in d1.objects}
    )
    pf = pushforward(d0, slice_over(anchor))
    for c in d1.objects:
        for b_elt in d0.target.levels[c]:
            got = sum(
                1
                for lbl in pf.slice.total.levels[c]
                if pf.slice.anchor.components[c][lbl] == b_elt
            )
            want = naive_sections(d0, slice_over(anchor), c, b_elt)
            assert got == want
    # fiber over the far endpoint is a single empty family; over the base
    # endpoint it is the original 2-point fiber
    sizes = sorted(
        len([l for l in pf.slice.total.level("0") if pf.slice.anchor.components["0"][l] == b])
        for b in d0.target.level("0")
    )
    assert sizes == [1, 2]


def test_reflection_counit_bijective_for_mono(d2):
    """base_change(m, pushforward(m, p)) is p again, via the counit."""
    d0 = endpoint(d2, 0)
    y0 = d0.source
    two = discrete_presheaf(d2, ("u", "v"))
    anchor = PresheafMap(
        two, y0, "p", {o: {e: y0.levels[o][0] for e in two.levels[o]} for o in d2.objects}
    )
    pf = pushforward(d0, slice_over(anchor))
    bc, eps, square = pf.counit()
    assert square.validate().ok
    assert is_levelwise_bijection(eps)


def test_extension_square_is_pullback(d2):
    d0 = endpoint(d2, 0)
    y0 = d0.source
    two = discrete_presheaf(d2, ("u", "v"))
    anchor = PresheafMap(
        two, y0, "p", {o: {e: y0.levels[o][0] for e in two.levels[o]} for o in d2.objects}
    )
    pf = pushforward(d0, slice_over(anchor))
    sq = pf.extension_square()
    assert sq.validate().ok
    assert is_pullback_square(sq)


def test_adjunction_triangle_identity(d1):
    """Triangle at m_*: (m_* eps) after (unit at m_* p) is the identity."""
    d0 = endpoint(d1, 0)
    y0 = d0.source
    two = discrete_presheaf(d1, ("u", "v"))
    anchor = PresheafMap(
        two, y0, "p", {o: {e: y0.levels[o][0] for e in two.levels[o]} for o in d1.objects}
    )
    p = slice_over(anchor)
    pf = pushforward(d0, p)
    bc, eps, _ = pf.counit()
    pf2 = pushforward(d0, bc.slice)  # m_* m^* m_* p
    # m_*(eps): postcompose each section with the counit
    comps = {}
    for c in d1.objects:
        comps[c] = {}
        for lbl in pf2.slice.total.levels[c]:
            b_elt = pf2.slice.anchor.components[c][lbl]
            sec = pf2.maps[(c, b_elt)][lbl]
            pushed = {
                d: {
                    pe: eps.components[d][sec.components[d][pe]]
                    for pe in sec.source.levels[d]
                }
                for d in d1.objects
            }
            comps[c][lbl] = pf.section_label(c, b_elt, pushed)
    m_star_eps = PresheafMap(pf2.slice.total, pf.slice.total, "m*eps", comps)
    # unit of the monad at m_* p coincides with the adjunction unit there
    _, unit = slice_exponential_monad(d0, pf.slice)
    assert unit.target.levels == pf2.slice.total.levels
    unit_to_pf2 = PresheafMap(unit.source, pf2.slice.total, unit.name, unit.components)
    t1 = compose_maps(m_star_eps, unit_to_pf2)
    assert t1.components == identity_map(pf.slice.total).components


def test_exponential_terminal_and_initial(d2):
    y1 = representable(d2, "1")
    one = terminal_presheaf(d2)
    zero = initial_presheaf(d2)
    e1 = exponential(one, y1)
    assert find_isomorphism(e1.obj, y1) is not None
    e0 = exponential(zero, y1)
    assert find_isomorphism(e0.obj, one) is not None


def test_exponential_interval_endomaps(d1):
    y1 = representable(d1, "1")
    e = exponential(y1, y1)
    assert len(e.obj.level("0")) == 3  # the three monotone endomaps of [1]


def test_currying_bijection(d1):
    """hom(X, hom(A,B)) is in bijection with hom(X x A, B) by transposition."""
    y1 = representable(d1, "1")
    two = discrete_presheaf(d1, ("u", "v"))
    e = exponential(y1, two)
    for x in (terminal_presheaf(d1), y1):
        sp = product(x, y1)
        curried = enumerate_maps(x, e.obj)
        raw = enumerate_maps(sp.obj, two)
        assert len(curried) == len(raw)
        for h in raw:
            k = e.transpose_in(sp, h)
            assert k.validate().ok
            back = e.transpose_out(k, sp)
            assert back.components == h.components


def test_exponential_valid_on_cube_site():
    c2 = builtin_cube_site(2)
    i = representable(c2, "1")
    e = exponential(i, i)
    assert e.obj.validate().ok


def test_slice_exponential_monad_unit(d1):
    d0 = endpoint(d1, 0)
    y1t = d0.target
    q = slice_over(identity_map(y1t))
    pf, unit = slice_exponential_monad(d0, q)
    assert unit.validate().ok
    assert compose_maps(pf.slice.anchor, unit).components == q.anchor.components

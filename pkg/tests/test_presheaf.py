"""Presheaf validation, representables, subobjects, image factorization."""

import pytest

from psw.presheaf import (
    Presheaf,
    PresheafMap,
    compose_maps,
    discrete_presheaf,
    identity_map,
    image_factorization,
    initial_presheaf,
    is_mono,
    nondegenerate_elements,
    representable,
    sub_presheaf,
    subpresheaf_generated,
    terminal_map,
    terminal_presheaf,
    validate_presheaf,
    yoneda_map,
)
from psw.search import find_isomorphism
from psw.site import builtin_cube_site, builtin_simplex_site


@pytest.fixture(scope="module")
def d1():
    return builtin_simplex_site(1)


@pytest.fixture(scope="module")
def d2():
    return builtin_simplex_site(2)


@pytest.fixture(scope="module")
def c1():
    return builtin_cube_site(1)


def test_representable_valid_on_both_builtin_sites(d2, c1):
    for site in (d2, c1):
        for c in site.objects:
            assert validate_presheaf(representable(site, c)).ok


def test_representable_levels(d1, c1):
    y1 = representable(d1, "1")
    assert len(y1.level("0")) == 2
    assert len(y1.level("1")) == 3
    yc = representable(c1, "1")
    assert len(yc.level("0")) == 2


def test_broken_simplicial_identity_is_reported(d1):
    y1 = representable(d1, "1")
    action = {m: dict(y1.action[m]) for m in d1.mor_labels}
    # corrupt one action value: swap the two vertices under some morphism
    d0 = "a01_1"
    e = y1.level("1")[0]
    lvl0 = y1.level("0")
    action[d0][e] = lvl0[0] if action[d0][e] == lvl0[1] else lvl0[1]
    broken = Presheaf(d1, "broken", y1.levels, action)
    rep = validate_presheaf(broken)
    assert not rep.ok
    assert any(d0 in p or "functoriality" in p for p in rep.problems)


def test_relabeled_representable_stays_valid(d2):
    y2 = representable(d2, "2")
    ren = {o: {e: f"r{idx}_{o}" for idx, e in enumerate(y2.level(o))} for o in d2.objects}
    levels = {o: tuple(ren[o][e] for e in y2.level(o)) for o in d2.objects}
    action = {
        m: {
            ren[d2.tgt(m)][e]: ren[d2.src(m)][v]
            for e, v in y2.action[m].items()
        }
        for m in d2.mor_labels
    }
    assert validate_presheaf(Presheaf(d2, "relabeled", levels, action)).ok


def test_is_mono(d2):
    y2 = representable(d2, "2")
    assert is_mono(identity_map(y2))
    two = discrete_presheaf(d2, ("p", "q"))
    assert not is_mono(terminal_map(two))
    # boundary inclusion of the 2-simplex
    faces = [m for m in d2.hom("1", "2") if len(set(d2.meta["values"][m])) == 2]
    bnd = subpresheaf_generated(y2, [("1", f) for f in faces])
    assert is_mono(bnd)


def test_image_factorization_mono_and_split_epi(d1):
    y1 = representable(d1, "1")
    epi, mono = image_factorization(identity_map(y1))
    assert is_mono(mono)
    assert mono.source.levels == y1.levels
    # collapse: s0-type degeneracy image is the point
    pt = terminal_presheaf(d1)
    epi2, mono2 = image_factorization(terminal_map(y1, pt))
    assert mono2.source.total_size() == len(d1.objects)
    for o in d1.objects:
        assert set(epi2.components[o].values()) == set(mono2.source.levels[o])


def test_subpresheaf_generated_full_and_empty(d2):
    y1 = representable(d2, "1")
    seeds = [(o, e) for o in d2.objects for e in y1.level(o)]
    incl = subpresheaf_generated(y1, seeds)
    assert incl.source.levels == y1.levels
    empty = subpresheaf_generated(y1, [])
    assert empty.source.total_size() == 0


def test_horn_from_edge_seeds(d2):
    """Seeding the two outer edges of the 2-simplex generates the middle horn."""
    y2 = representable(d2, "2")
    e01 = "a12_01"
    e12 = "a12_12"
    horn = subpresheaf_generated(y2, [("1", e01), ("1", e12)]).source
    assert len(horn.level("0")) == 3
    nd = nondegenerate_elements(horn)
    assert [(o, e) for o, e in nd if o == "1"] == [("1", e01), ("1", e12)]
    assert all(o != "2" for o, _ in nd)


def test_subpresheaf_generated_idempotent_monotone(d2):
    y2 = representable(d2, "2")
    small = subpresheaf_generated(y2, [("1", "a12_01")]).source
    bigger = subpresheaf_generated(y2, [("1", "a12_01"), ("0", "a02_2")]).source
    for o in d2.objects:
        assert set(small.level(o)) <= set(bigger.level(o))
    again = subpresheaf_generated(y2, [(o, e) for o in d2.objects for e in small.level(o)]).source
    assert again.levels == small.levels


def test_yoneda_map_classifies_elements(d2):
    y2 = representable(d2, "2")
    for e in y2.level("1"):
        f = yoneda_map(y2, "1", e)
        assert f.validate().ok
        assert f.components["1"][d2.identity["1"]] == e


def test_degenerate_inputs_are_first_class(d2):
    zero = initial_presheaf(d2)
    assert validate_presheaf(zero).ok
    assert zero.is_empty()
    assert identity_map(zero).validate().ok


def test_find_isomorphism_relabeling(d1):
    y1 = representable(d1, "1")
    ren = {o: {e: f"z{i}" + o for i, e in enumerate(y1.level(o))} for o in d1.objects}
    levels = {o: tuple(ren[o][e] for e in y1.level(o)) for o in d1.objects}
    action = {
        m: {ren[d1.tgt(m)][e]: ren[d1.src(m)][v] for e, v in y1.action[m].items()}
        for m in d1.mor_labels
    }
    other = Presheaf(d1, "ren", levels, action)
    iso = find_isomorphism(y1, other)
    assert iso is not None and iso.validate().ok
    assert find_isomorphism(y1, discrete_presheaf(d1, ("a", "b"))) is None


def test_nondegenerate_counts_interval_square(d2):
    y1 = representable(d2, "1")
    nd = nondegenerate_elements(y1)
    by_dim = {o: sum(1 for oo, _ in nd if oo == o) for o in d2.objects}
    assert by_dim == {"0": 2, "1": 1, "2": 0}


def test_compose_maps_associative(d1):
    y1 = representable(d1, "1")
    t = terminal_presheaf(d1)
    f = terminal_map(y1, t)
    g = identity_map(t)
    assert compose_maps(g, f).components == f.components

"""Site construction: built-in sites and presentation closure."""

import itertools

import pytest

from psw.errors import InvalidRelation, NonTerminatingPresentation
from psw.site import (
    build_site,
    builtin_cube_site,
    builtin_simplex_site,
    simplex_label,
)


# independent oracle: count monotone maps [m] -> [n] by direct enumeration
def monotone_maps(m, n):
    return [
        t
        for t in itertools.product(range(n + 1), repeat=m + 1)
        if all(t[i] <= t[i + 1] for i in range(m))
    ]


def test_simplex_hom_counts_match_enumeration_oracle():
    site = builtin_simplex_site(3)
    for m in range(4):
        for n in range(4):
            assert len(site.hom(str(m), str(n))) == len(monotone_maps(m, n))


def test_simplex_small_hom_sizes():
    s1 = builtin_simplex_site(1)
    assert len(s1.hom("1", "1")) == 3
    assert len(s1.hom("0", "1")) == 2
    s2 = builtin_simplex_site(2)
    assert len(s2.hom("2", "1")) == 4


def test_simplex_laws_exhaustive():
    for n in (1, 2, 3):
        assert builtin_simplex_site(n).check_laws() == []


def test_simplex_composition_agrees_with_function_composition():
    site = builtin_simplex_site(2)
    vals = site.meta["values"]
    for f in site.mor_labels:
        for g in site.mor_labels:
            if site.tgt(f) != site.src(g):
                continue
            h = site.compose(g, f)
            assert vals[h] == tuple(vals[g][v] for v in vals[f])


def test_simplex_ordering_is_stable():
    a = builtin_simplex_site(2)
    b = builtin_simplex_site(2)
    assert a.mor_labels == b.mor_labels
    assert a.table == b.table


def test_cube_laws_and_counts():
    site = builtin_cube_site(2)
    assert site.check_laws() == []
    # hom([m],[n]) = (#monotone boolean functions on m vars)^n: 2, 3, 6
    a = {0: 2, 1: 3, 2: 6}
    for m in range(3):
        for n in range(3):
            assert len(site.hom(str(m), str(n))) == a[m] ** n


def test_cube_unit_homs():
    site = builtin_cube_site(1)
    assert len(site.hom("1", "0")) == 1  # degeneracy only
    assert len(site.hom("0", "1")) == 2  # the two faces


def test_cube_contains_connections_symmetry_diagonal():
    site = builtin_cube_site(2)
    vals = site.meta["values"]
    tables = set(vals[m] for m in site.hom("2", "1"))
    assert (0, 0, 0, 1) in tables  # min
    assert (0, 1, 1, 1) in tables  # max
    tables21 = set(vals[m] for m in site.hom("1", "2"))
    assert (0, 3) in tables21  # diagonal
    endo = set(vals[m] for m in site.hom("2", "2"))
    assert (0, 2, 1, 3) in endo  # swap


def test_split_epis_simplex():
    site = builtin_simplex_site(2)
    vals = site.meta["values"]
    for m in site.mor_labels:
        surj = set(vals[m]) == set(range(int(site.tgt(m)) + 1))
        assert (m in site.split_epis()) == surj


# -- presentation-based construction ---------------------------------------


def test_build_site_terminal_category():
    s = build_site("pt", [("x", 0)], [], [])
    assert len(s.mor_labels) == 1
    assert s.check_laws() == []


def test_build_site_arrow_category():
    s = build_site("arrow", [("a", 0), ("b", 1)], [("f", "a", "b")], [])
    assert len(s.mor_labels) == 3
    assert s.check_laws() == []


def test_build_site_invalid_relation_endpoints():
    with pytest.raises(InvalidRelation):
        build_site(
            "bad",
            [("a", 0), ("b", 1)],
            [("f", "a", "b"), ("g", "b", "a")],
            [(("f",), ("g",))],
        )


def test_build_site_nonterminating_free_loop():
    with pytest.raises(NonTerminatingPresentation):
        build_site("loop", [("a", 0)], [("f", "a", "a")], [], max_word_len=6)


def simplex2_presentation():
    """Textbook presentation of the 2-truncated simplex category.

    Generators d{i}_{n}: [n-1] -> [n] and s{j}_{n}: [n+1] -> [n]; every
    relation is verified against the monotone-map semantics before use,
    so a transcription slip fails loudly here rather than downstream.
    """
    import itertools as it

    def face(n, i):  # [n-1] -> [n], skip i
        return tuple(v if v < i else v + 1 for v in range(n))

    def degen(n, j):  # [n+1] -> [n], repeat j
        return tuple(v if v <= j else v - 1 for v in range(n + 2))

    gens = {}
    for n in (1, 2):
        for i in range(n + 1):
            gens[f"d{i}_{n}"] = (n - 1, n, face(n, i))
    for n in (0, 1):
        for j in range(n + 1):
            gens[f"s{j}_{n}"] = (n + 1, n, degen(n, j))

    def compose(a, b):  # function composition a∘b on value tables
        return tuple(a[v] for v in b)

    rels = []
    # enumerate all composable generator pairs whose composite lands in
    # dimension <= 2 and relate equal-length words with equal semantics
    names = list(gens)
    for w1 in it.product(names, repeat=2):
        (g1, g2) = w1
        s1, t1, v1 = gens[g1]
        s2, t2, v2 = gens[g2]
        if t2 != s1:
            continue
        sem1 = compose(v1, v2)
        # identity relations
        if s2 == t1 and sem1 == tuple(range(s2 + 1)):
            rels.append(((g1, g2), ()))
            continue
        for w2 in it.product(names, repeat=2):
            if w2 <= w1:
                continue
            (h1, h2) = w2
            u1, r1, x1 = gens[h1]
            u2, r2, x2 = gens[h2]
            if r2 != u1 or (u2, r1) != (s2, t1):
                continue
            if compose(x1, x2) == sem1:
                rels.append((w1, w2))
    objects = [("0", 0), ("1", 1), ("2", 2)]
    generators = [(g, str(s), str(t)) for g, (s, t, _) in gens.items()]
    return objects, generators, rels, gens


def test_build_site_simplex2_matches_monotone_count():
    objects, generators, rels, gens = simplex2_presentation()
    s = build_site("delta2", objects, generators, rels)
    assert s.check_laws() == []
    ref = builtin_simplex_site(2)
    for m in range(3):
        for n in range(3):
            assert len(s.hom(str(m), str(n))) == len(ref.hom(str(m), str(n))), (m, n)
    # total: 31 morphisms by the monotone-map enumeration oracle
    assert len(s.mor_labels) == sum(
        len(monotone_maps(m, n)) for m in range(3) for n in range(3)
    )
    assert len(s.mor_labels) == 31


def test_cube_1_to_2_count_matches_word_closure_oracle():
    """Brute-force closure of the generator presentation (with diagonals and
    symmetries) reproduces the [1]->[2] hom count of the built-in site."""
    site = builtin_cube_site(2)

    # semantic word closure, independent of the built-in enumeration:
    # compose generator value-tables until stable, staying within dim 2
    def vertices(n):
        return list(range(1 << n))

    gens = []  # (src, tgt, table)
    for n in (1, 2):  # faces [n-1] -> [n]
        for i in range(n):
            for eps in (0, 1):
                tab = tuple(
                    (v & ((1 << i) - 1)) | (eps << i) | ((v >> i) << (i + 1))
                    for v in vertices(n - 1)
                )
                gens.append((n - 1, n, tab))
    for n in (1, 2):  # degeneracies [n] -> [n-1]: drop coordinate i
        for i in range(n):
            tab = tuple(
                (v & ((1 << i) - 1)) | ((v >> (i + 1)) << i) for v in vertices(n)
            )
            gens.append((n, n - 1, tab))
    # connections [2] -> [1]: min and max of the two coordinates
    gens.append((2, 1, (0, 0, 0, 1)))
    gens.append((2, 1, (0, 1, 1, 1)))
    # symmetry [2] -> [2] and diagonal [1] -> [2]
    gens.append((2, 2, (0, 2, 1, 3)))
    gens.append((1, 2, (0, 3)))

    morphs = {(n, n, tuple(vertices(n))) for n in range(3)}
    morphs.update(gens)
    changed = True
    while changed:
        changed = False
        for (s1, t1, v1) in list(morphs):
            for (s2, t2, v2) in list(morphs):
                if t2 != s1:
                    continue
                comp = (s2, t1, tuple(v1[x] for x in v2))
                if comp not in morphs:
                    morphs.add(comp)
                    changed = True
    closure_12 = {v for (s, t, v) in morphs if (s, t) == (1, 2)}
    assert len(closure_12) == len(site.hom("1", "2")) == 9

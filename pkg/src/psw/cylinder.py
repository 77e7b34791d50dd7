"""Interval structure and the Leibniz calculus.

The functorial cylinder is cartesian product with a chosen interval
presheaf; its right adjoint is the exponential.  Both built-in sites get
an interval from the representable of the 1-dimensional object, with
min/max connections and the cartesian swap as symmetry.

Connection conventions: ``conn_k`` absorbs ``delta_k`` and has
``delta_{1-k}`` as unit, i.e. conn_0 = min and conn_1 = max with the
usual 0/1 reading of the endpoints.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import DimensionBudgetExceeded
from .lcc import Exponential, exponential
from .limits import (
    Cospan,
    Span,
    copair_out_of_coproduct,
    coproduct,
    is_pullback_square,
    pair_into_product,
    pair_label,
    product,
    product_map,
    pullback,
    pushout,
    pushout_induced,
)
from .presheaf import (
    ArrowSquare,
    Presheaf,
    PresheafMap,
    ValidationReport,
    compose_maps,
    identity_map,
    image_factorization,
    initial_map,
    initial_presheaf,
    representable,
    terminal_map,
    terminal_presheaf,
)
from .site import Site, cube_label, simplex_label


@dataclass
class IntervalStructure:
    name: str
    i: Presheaf
    one: Presheaf
    delta0: PresheafMap
    delta1: PresheafMap
    epsilon: PresheafMap
    square: Span  # product(i, i)
    conn0: PresheafMap
    conn1: PresheafMap
    symmetry: PresheafMap | None = None

    def delta(self, k: int) -> PresheafMap:
        return self.delta0 if k == 0 else self.delta1

    def conn(self, k: int) -> PresheafMap:
        return self.conn0 if k == 0 else self.conn1

    def delta_value(self, k: int, obj: str) -> str:
        return self.delta(k).components[obj]["*"]

    def conn_value(self, k: int, obj: str, s: str, t: str) -> str:
        return self.conn(k).components[obj][pair_label(s, t)]

    @property
    def site(self) -> Site:
        return self.i.site

    def max_degree(self) -> int:
        return max(self.site.degree.values())


def _pointwise_lattice_map(site: Site, i: Presheaf, sq: Span, op, label_fn) -> PresheafMap:
    vals = site.meta["values"]
    comps: dict[str, dict[str, str]] = {}
    for c in site.objects:
        row = {}
        for pe in sq.obj.levels[c]:
            g = sq.p1.components[c][pe]
            h = sq.p2.components[c][pe]
            merged = tuple(op(a, b) for a, b in zip(vals[g], vals[h]))
            row[pe] = label_fn(c, merged)
        comps[c] = row
    return PresheafMap(sq.obj, i, "conn", comps)


def interval_for_site(site: Site) -> IntervalStructure:
    """The canonical interval of a built-in site: representable of object 1."""
    kind = site.meta.get("kind")
    if kind not in ("simplex", "cube"):
        raise ValueError("interval_for_site supports the built-in sites only")
    i = representable(site, "1", name="I")
    one = terminal_presheaf(site)
    vals = site.meta["values"]
    ends = {vals[m][0] if kind == "simplex" else vals[m][0]: m for m in site.hom("0", "1")}
    to_point = {c: site.hom(c, "0")[0] for c in site.objects}
    deltas = []
    for k in (0, 1):
        comps = {
            c: {"*": site.compose(ends[k], to_point[c])} for c in site.objects
        }
        deltas.append(PresheafMap(one, i, f"d{k}", comps))
    eps = terminal_map(i, one)
    eps.name = "eps"
    sq = product(i, i, name="IxI")
    if kind == "simplex":
        n_of = lambda c: int(c)
        label_fn = lambda c, t: simplex_label(int(c), 1, t)
    else:
        label_fn = lambda c, t: cube_label(int(c), 1, t)
    conn0 = _pointwise_lattice_map(site, i, sq, min, label_fn)
    conn0.name = "c0"
    conn1 = _pointwise_lattice_map(site, i, sq, max, label_fn)
    conn1.name = "c1"
    sym = PresheafMap(
        sq.obj,
        sq.obj,
        "sym",
        {
            c: {
                pe: pair_label(sq.p2.components[c][pe], sq.p1.components[c][pe])
                for pe in sq.obj.levels[c]
            }
            for c in site.objects
        },
    )
    return IntervalStructure(
        name=f"interval:{site.name}",
        i=i,
        one=one,
        delta0=deltas[0],
        delta1=deltas[1],
        epsilon=eps,
        square=sq,
        conn0=conn0,
        conn1=conn1,
        symmetry=sym,
    )


# ---------------------------------------------------------------------------
# cylinder / cocylinder
# ---------------------------------------------------------------------------


def cyl(interval: IntervalStructure, x: Presheaf) -> Span:
    """The cylinder I x X with its projections."""
    return product(interval.i, x, name=f"cyl:{x.name}")


def cocyl(interval: IntervalStructure, x: Presheaf) -> Exponential:
    """The cocylinder hom(I, X)."""
    return exponential(interval.i, x, name=f"cocyl:{x.name}")


def endpoint_insert(
    interval: IntervalStructure, k: int, prod_ix: Span, name: str | None = None
) -> PresheafMap:
    """X -> I x X inserting at endpoint k, for a computed product I x X."""
    x = prod_ix.p2.target
    comps = {
        c: {
            e: pair_label(interval.delta_value(k, c), e)
            for e in x.levels[c]
        }
        for c in x.site.objects
    }
    return PresheafMap(x, prod_ix.obj, name or f"d{k}x{x.name}", comps)


# ---------------------------------------------------------------------------
# Leibniz constructions
# ---------------------------------------------------------------------------


@dataclass
class PushoutProduct:
    """The pushout-product u ⊗̂ v with its construction data."""

    map: PresheafMap  # Q -> B x D
    pushout: Cospan   # Q with injections from A x D and B x C
    prod_ad: Span
    prod_bc: Span
    prod_ac: Span
    prod_bd: Span

    @property
    def source(self) -> Presheaf:
        return self.map.source

    @property
    def target(self) -> Presheaf:
        return self.map.target


def leibniz_tensor(u: PresheafMap, v: PresheafMap, name: str | None = None) -> PushoutProduct:
    a, b = u.source, u.target
    c, d = v.source, v.target
    ad = product(a, d)
    bc = product(b, c)
    ac = product(a, c)
    bd = product(b, d)
    f = product_map(ac, ad, identity_map(a), v)  # A x C -> A x D
    g = product_map(ac, bc, u, identity_map(c))  # A x C -> B x C
    po = pushout(f, g, name=f"dom({u.name}^{v.name})")
    top = product_map(ad, bd, u, identity_map(d))
    bot = product_map(bc, bd, identity_map(b), v)
    corner = pushout_induced(po, top, bot, name=name or f"({u.name}^{v.name})")
    return PushoutProduct(corner, po, ad, bc, ac, bd)


@dataclass
class PullbackHom:
    """The pullback-hom u ⊸̂ p with its construction data."""

    map: PresheafMap  # hom(B, X) -> corner
    corner: Span      # hom(A, X) x_{hom(A, Y)} hom(B, Y)
    hom_bx: Exponential
    hom_ax: Exponential
    hom_ay: Exponential
    hom_by: Exponential


def leibniz_hom(u: PresheafMap, p: PresheafMap, name: str | None = None) -> PullbackHom:
    a, b = u.source, u.target
    x, y = p.source, p.target
    hom_bx = exponential(b, x)
    hom_ax = exponential(a, x)
    hom_ay = exponential(a, y)
    hom_by = exponential(b, y)
    r1 = hom_bx.precompose(u, hom_ax)
    s1 = hom_ax.postcompose(p, hom_ay)
    r2 = hom_by.precompose(u, hom_ay)
    s2 = hom_bx.postcompose(p, hom_by)
    corner = pullback(s1, r2, name=f"corner({u.name},{p.name})")
    med = pair_into_product(corner, r1, s2, name=name or f"({u.name}\\{p.name})")
    return PullbackHom(med, corner, hom_bx, hom_ax, hom_ay, hom_by)


def boundary_inclusion_map(interval: IntervalStructure) -> PresheafMap:
    """i^1 = [delta_0, delta_1]: 1 + 1 -> I."""
    cp = coproduct(interval.one, interval.one, name="bdI")
    return copair_out_of_coproduct(cp, interval.delta0, interval.delta1, name="i1")


def boundary_i(interval: IntervalStructure, n: int) -> PresheafMap:
    """The iterated Leibniz boundary i^n : bd(I^n) -> I^n.

    Raises DimensionBudgetExceeded when n exceeds the site truncation, where
    the cube would have no honest top-dimensional cells.
    """
    if n < 0:
        raise ValueError("n must be >= 0")
    if n > interval.max_degree():
        raise DimensionBudgetExceeded(
            f"i^{n} exceeds the site truncation {interval.max_degree()}"
        )
    if n == 0:
        return initial_map(interval.one, initial_presheaf(interval.site))
    cur = boundary_inclusion_map(interval)
    i1 = cur
    for _ in range(n - 1):
        cur = leibniz_tensor(i1, cur).map
    return cur


def theta_square(
    k: int,
    m: PresheafMap,
    interval: IntervalStructure,
    lt: PushoutProduct | None = None,
) -> ArrowSquare:
    """The square from m to delta_k ⊗̂ m (endpoint-insertion extension square)."""
    if lt is None:
        lt = leibniz_tensor(interval.delta(k), m)
    ins_a = endpoint_insert(interval, 1 - k, lt.prod_bc)  # A -> I x A
    top = compose_maps(lt.pushout.i2, ins_a, name=f"th{k}-top:{m.name}")
    bottom = endpoint_insert(interval, 1 - k, lt.prod_bd)  # B -> I x B
    sq = ArrowSquare(left=m, right=lt.map, top=top, bottom=bottom, name=f"theta{k}:{m.name}")
    rep = sq.validate()
    if not rep.ok:
        raise AssertionError(f"theta square failed to commute: {rep.problems}")
    return sq


def j_retraction(
    k: int, j: PushoutProduct, interval: IntervalStructure
) -> tuple[ArrowSquare, PresheafMap, PresheafMap]:
    """Connection-built retraction of the square theta_k ⊗̂ j onto the arrow j.

    For j = delta_k ⊗̂ m, returns (tau, rho_dom, rho_cod) where tau is the
    square j -> delta_k ⊗̂ j and rho = (rho_dom, rho_cod) is a map of arrows
    delta_k ⊗̂ j -> j with rho ∘ tau = id.
    """
    jj = leibniz_tensor(interval.delta(k), j.map)
    tau = theta_square(k, j.map, interval, lt=jj)

    site = interval.site
    # rho_cod : I x (I x B) -> I x B, (s, (t, b)) |-> (conn_k(s, t), b)
    src = jj.prod_bd.obj
    tgt = j.prod_bd.obj
    comps: dict[str, dict[str, str]] = {}
    for c in site.objects:
        row = {}
        for pe in src.levels[c]:
            s = jj.prod_bd.p1.components[c][pe]
            tb = jj.prod_bd.p2.components[c][pe]
            t = j.prod_bd.p1.components[c][tb]
            b_elt = j.prod_bd.p2.components[c][tb]
            row[pe] = pair_label(interval.conn_value(k, c, s, t), b_elt)
        comps[c] = row
    rho_cod = PresheafMap(src, tgt, f"rho-cod:{j.map.name}", comps)

    # rho_dom : dom(delta_k ⊗̂ j) -> dom(j) by cases on the pushout parts
    q = j.map.source
    # component on 1 x cod(j): (*, (t, b)) |-> class of (*, b)
    cap = jj.prod_ad  # product(1, I x B)
    comps1: dict[str, dict[str, str]] = {}
    for c in site.objects:
        row = {}
        for pe in cap.obj.levels[c]:
            star = cap.p1.components[c][pe]
            tb = cap.p2.components[c][pe]
            b_elt = j.prod_bd.p2.components[c][tb]
            row[pe] = j.pushout.i1.components[c][pair_label(star, b_elt)]
        comps1[c] = row
    comp_cap = PresheafMap(cap.obj, q, "rho-cap", comps1)

    # component on I x dom(j): case split on the class representative
    side = jj.prod_bc  # product(I, Q)
    comps2: dict[str, dict[str, str]] = {}
    for c in site.objects:
        row = {}
        for pe in side.obj.levels[c]:
            s = side.p1.components[c][pe]
            q_elt = side.p2.components[c][pe]
            tag, raw = q_elt.split(":", 1)
            if tag == "i0":
                row[pe] = q_elt  # (s, (*, b)) |-> (*, b)
            else:
                t = j.prod_bc.p1.components[c][raw]
                a_elt = j.prod_bc.p2.components[c][raw]
                merged = pair_label(interval.conn_value(k, c, s, t), a_elt)
                row[pe] = j.pushout.i2.components[c][merged]
        comps2[c] = row
    comp_side = PresheafMap(side.obj, q, "rho-side", comps2)

    rho_dom = pushout_induced(jj.pushout, comp_cap, comp_side, name=f"rho-dom:{j.map.name}")
    return tau, rho_dom, rho_cod


# ---------------------------------------------------------------------------
# interval law verification
# ---------------------------------------------------------------------------


def _maps_equal(f: PresheafMap, g: PresheafMap) -> bool:
    return f.components == g.components


def verify_interval_laws(interval: IntervalStructure) -> ValidationReport:
    """Pointwise verification of the interval-object laws.

    Checks, by name: section laws; connection unit and absorption laws;
    contraction after connection; disjointness of the endpoint inclusions
    (as a pullback square); and, when a symmetry is present, that it is an
    involution exchanging the insertions, fixes the connections, and
    exhibits the two mixed Leibniz boundary maps as the same subobject.
    """
    problems: list[str] = []
    iv = interval
    site = iv.site
    one, i, sq = iv.one, iv.i, iv.square

    for k in (0, 1):
        if not _maps_equal(compose_maps(iv.epsilon, iv.delta(k)), identity_map(one)):
            problems.append(f"section-law-{k}")

    # insertion maps built against the interval's own square product
    ins_left = {k: _insert_left(iv, k) for k in (0, 1)}
    ins_right = {k: _insert_right(iv, k) for k in (0, 1)}
    for k in (0, 1):
        konst = compose_maps(iv.delta(k), iv.epsilon)  # I -> I constant at k
        if not _maps_equal(compose_maps(iv.conn(k), ins_left[k]), konst):
            problems.append(f"connection-{k}-absorb-left")
        if not _maps_equal(compose_maps(iv.conn(k), ins_right[k]), konst):
            problems.append(f"connection-{k}-absorb-right")
        if not _maps_equal(compose_maps(iv.conn(k), ins_left[1 - k]), identity_map(i)):
            problems.append(f"connection-{k}-unit-left")
        if not _maps_equal(compose_maps(iv.conn(k), ins_right[1 - k]), identity_map(i)):
            problems.append(f"connection-{k}-unit-right")
        # contraction after connection agrees with contracting both factors
        lhs = compose_maps(iv.epsilon, iv.conn(k))
        rhs = terminal_map(sq.obj, one)
        if not _maps_equal(lhs, rhs):
            problems.append(f"contraction-after-connection-{k}")

    zero = initial_presheaf(site)
    disjoint = ArrowSquare(
        left=initial_map(one, zero),
        right=iv.delta0,
        top=initial_map(one, zero),
        bottom=iv.delta1,
        name="disjoint-endpoints",
    )
    if not is_pullback_square(disjoint):
        problems.append("disjoint-endpoints")

    if iv.symmetry is not None:
        sym = iv.symmetry
        if not _maps_equal(compose_maps(sym, sym), identity_map(sq.obj)):
            problems.append("symmetry-involution")
        for k in (0, 1):
            if not _maps_equal(compose_maps(sym, ins_left[k]), ins_right[k]):
                problems.append(f"symmetry-swaps-insertion-{k}")
            if not _maps_equal(compose_maps(iv.conn(k), sym), iv.conn(k)):
                problems.append(f"symmetry-fixes-connection-{k}")
        i1 = boundary_inclusion_map(iv)
        for k in (0, 1):
            l1 = leibniz_tensor(i1, iv.delta(k))
            l2 = leibniz_tensor(iv.delta(k), i1)
            _, im1 = image_factorization(l1.map)
            _, im2 = image_factorization(compose_maps(sym, l2.map))
            if im1.source.levels != im2.source.levels:
                problems.append(f"swap-arguments-{k}")

    return ValidationReport(not problems, tuple(problems))


def _insert_left(iv: IntervalStructure, k: int) -> PresheafMap:
    """I -> I x I inserting delta_k on the left: x |-> (delta_k, x)."""
    comps = {
        c: {e: pair_label(iv.delta_value(k, c), e) for e in iv.i.levels[c]}
        for c in iv.site.objects
    }
    return PresheafMap(iv.i, iv.square.obj, f"insL{k}", comps)


def _insert_right(iv: IntervalStructure, k: int) -> PresheafMap:
    """I -> I x I inserting delta_k on the right: x |-> (x, delta_k)."""
    comps = {
        c: {e: pair_label(e, iv.delta_value(k, c)) for e in iv.i.levels[c]}
        for c in iv.site.objects
    }
    return PresheafMap(iv.i, iv.square.obj, f"insR{k}", comps)

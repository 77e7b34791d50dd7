"""Line-oriented text formats for sites, presheaves, maps, intervals, bundles.

All serialization is deterministic: element and morphism order is the
construction order, so dump-then-load round-trips byte-identically.

Formats (UTF-8, ``#`` comments, blank lines ignored):

site files::

    site <name>
    object <label> degree <n>
    gen <label> : <src> -> <tgt>
    rel <word> = <word>          # word = g1.g2.....gk or id@<obj>

presheaf files::

    presheaf <name> over <site>
    level <object>: e1 e2 ...
    act <morphism>: e_target -> e_source

map files::

    map <name>: <P> -> <Q>
    at <object>: e -> e'

interval files::

    interval <name> uses I=<psh> d0=<map> d1=<map> eps=<map> c0=<map> c1=<map> [sym=<map>]

glue bundles::

    glue <name>
    m <map>
    p1 <map>
    p0 <map>
    f <map>
    t <map>
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .cylinder import IntervalStructure
from .errors import FormatError
from .lcc import SliceObject
from .limits import product
from .presheaf import Presheaf, PresheafMap
from .site import Site, build_site, builtin_cube_site, builtin_simplex_site


def _lines(text: str) -> list[str]:
    out = []
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if line:
            out.append(line)
    return out


# ---------------------------------------------------------------------------
# sites
# ---------------------------------------------------------------------------


def parse_site_token(token: str) -> Site:
    """Resolve a --site token: simplex:N, cube:N, or a site file path."""
    if token.startswith("simplex:"):
        return builtin_simplex_site(int(token.split(":", 1)[1]))
    if token.startswith("cube:"):
        return builtin_cube_site(int(token.split(":", 1)[1]))
    with open(token, encoding="utf-8") as fh:
        return load_site(fh.read())


def load_site(text: str) -> Site:
    name = None
    objects: list[tuple[str, int]] = []
    gens: list[tuple[str, str, str]] = []
    rels: list[tuple[tuple[str, ...], tuple[str, ...]]] = []

    def word(tok: str) -> tuple[str, ...]:
        if tok.startswith("id@"):
            return ()
        return tuple(tok.split("."))

    for line in _lines(text):
        parts = line.split()
        if parts[0] == "site":
            name = parts[1]
        elif parts[0] == "object":
            if len(parts) != 4 or parts[2] != "degree":
                raise FormatError(f"bad object line: {line}")
            objects.append((parts[1], int(parts[3])))
        elif parts[0] == "gen":
            if len(parts) != 6 or parts[2] != ":" or parts[4] != "->":
                raise FormatError(f"bad gen line: {line}")
            gens.append((parts[1], parts[3], parts[5]))
        elif parts[0] == "rel":
            if len(parts) != 4 or parts[2] != "=":
                raise FormatError(f"bad rel line: {line}")
            rels.append((word(parts[1]), word(parts[3])))
        else:
            raise FormatError(f"unknown site directive: {parts[0]}")
    if name is None:
        raise FormatError("missing 'site <name>' header")
    return build_site(name, objects, gens, rels)


def dump_site(site: Site) -> str:
    """Serialize a presented site (generators and relations as provided).

    Built-in sites carry materialized tables rather than presentations,
    so only presented sites round-trip through this format.
    """
    if site.meta.get("kind") != "presented":
        raise FormatError("only presented sites serialize to the site format")
    out = [f"site {site.name}"]
    for o in site.objects:
        out.append(f"object {o} degree {site.degree[o]}")
    for m in site.mor_labels:
        if site.is_identity(m) or "." in m:
            continue
        out.append(f"gen {m} : {site.src(m)} -> {site.tgt(m)}")
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------------------
# presheaves and maps
# ---------------------------------------------------------------------------


def load_presheaf(text: str, site: Site) -> Presheaf:
    name = None
    levels: dict[str, list[str]] = {}
    action: dict[str, dict[str, str]] = {}
    for line in _lines(text):
        parts = line.split()
        if parts[0] == "presheaf":
            if len(parts) != 4 or parts[2] != "over":
                raise FormatError(f"bad presheaf line: {line}")
            name = parts[1]
            if parts[3] != site.name:
                raise FormatError(
                    f"presheaf {name} is over {parts[3]}, loaded against {site.name}"
                )
        elif parts[0] == "level":
            obj = parts[1].rstrip(":")
            levels[obj] = parts[2:]
        elif parts[0] == "act":
            mor = parts[1].rstrip(":")
            if len(parts) != 5 or parts[3] != "->":
                raise FormatError(f"bad act line: {line}")
            action.setdefault(mor, {})[parts[2]] = parts[4]
        else:
            raise FormatError(f"unknown presheaf directive: {parts[0]}")
    if name is None:
        raise FormatError("missing 'presheaf <name> over <site>' header")
    return Presheaf(site, name, levels, action)


def dump_presheaf(p: Presheaf) -> str:
    out = [f"presheaf {p.name} over {p.site.name}"]
    for o in p.site.objects:
        if p.levels[o]:
            out.append(f"level {o}: " + " ".join(p.levels[o]))
        else:
            out.append(f"level {o}:")
    for m in p.site.mor_labels:
        if p.site.is_identity(m):
            continue
        for e in p.levels[p.site.tgt(m)]:
            out.append(f"act {m}: {e} -> {p.action[m][e]}")
    return "\n".join(out) + "\n"


def load_map(text: str, presheaves: dict[str, Presheaf]) -> PresheafMap:
    name = None
    source = target = None
    comps: dict[str, dict[str, str]] = {}
    for line in _lines(text):
        parts = line.split()
        if parts[0] == "map":
            if len(parts) != 5 or parts[3] != "->":
                raise FormatError(f"bad map line: {line}")
            name = parts[1].rstrip(":")
            source = presheaves.get(parts[2])
            target = presheaves.get(parts[4])
            if source is None or target is None:
                raise FormatError(f"map {name}: unknown presheaf")
        elif parts[0] == "at":
            obj = parts[1].rstrip(":")
            if len(parts) != 5 or parts[3] != "->":
                raise FormatError(f"bad at line: {line}")
            comps.setdefault(obj, {})[parts[2]] = parts[4]
        else:
            raise FormatError(f"unknown map directive: {parts[0]}")
    if name is None or source is None or target is None:
        raise FormatError("missing 'map <name>: <P> -> <Q>' header")
    return PresheafMap(source, target, name, comps)


def dump_map(f: PresheafMap) -> str:
    out = [f"map {f.name}: {f.source.name} -> {f.target.name}"]
    for o in f.site.objects:
        for e in f.source.levels[o]:
            out.append(f"at {o}: {e} -> {f.components[o][e]}")
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------------------
# intervals and glue bundles
# ---------------------------------------------------------------------------


def load_interval(
    text: str, presheaves: dict[str, Presheaf], maps: dict[str, PresheafMap]
) -> IntervalStructure:
    for line in _lines(text):
        parts = line.split()
        if parts[0] != "interval" or parts[2] != "uses":
            raise FormatError(f"bad interval line: {line}")
        name = parts[1]
        kv = {}
        for tok in parts[3:]:
            if "=" not in tok:
                raise FormatError(f"bad interval assignment: {tok}")
            k, v = tok.split("=", 1)
            kv[k] = v
        try:
            i = presheaves[kv["I"]]
            d0 = maps[kv["d0"]]
            d1 = maps[kv["d1"]]
            eps = maps[kv["eps"]]
            c0 = maps[kv["c0"]]
            c1 = maps[kv["c1"]]
        except KeyError as exc:
            raise FormatError(f"interval {name}: missing component {exc}")
        sym = maps.get(kv["sym"]) if "sym" in kv else None
        sq = product(i, i, name="IxI")
        if c0.source != sq.obj:
            raise FormatError(
                f"interval {name}: connections must be defined on the product {sq.obj.name}"
            )
        return IntervalStructure(
            name=name,
            i=i,
            one=d0.source,
            delta0=d0,
            delta1=d1,
            epsilon=eps,
            square=sq,
            conn0=c0,
            conn1=c1,
            symmetry=sym,
        )
    raise FormatError("empty interval file")


def dump_interval(iv: IntervalStructure) -> str:
    parts = [
        f"interval {iv.name} uses",
        f"I={iv.i.name}",
        f"d0={iv.delta0.name}",
        f"d1={iv.delta1.name}",
        f"eps={iv.epsilon.name}",
        f"c0={iv.conn0.name}",
        f"c1={iv.conn1.name}",
    ]
    if iv.symmetry is not None:
        parts.append(f"sym={iv.symmetry.name}")
    return " ".join(parts) + "\n"


@dataclass
class GlueBundle:
    name: str
    m: str
    p1: str
    p0: str
    f: str
    t: str


def load_glue_bundle(text: str) -> GlueBundle:
    name = None
    fields: dict[str, str] = {}
    for line in _lines(text):
        parts = line.split()
        if parts[0] == "glue":
            name = parts[1]
        elif parts[0] in ("m", "p1", "p0", "f", "t"):
            if len(parts) != 2:
                raise FormatError(f"bad bundle line: {line}")
            fields[parts[0]] = parts[1]
        else:
            raise FormatError(f"unknown bundle directive: {parts[0]}")
    if name is None or set(fields) != {"m", "p1", "p0", "f", "t"}:
        raise FormatError("bundle must name m, p1, p0, f, t")
    return GlueBundle(name=name, **fields)


def dump_glue_bundle(b: GlueBundle) -> str:
    return "\n".join(
        [f"glue {b.name}", f"m {b.m}", f"p1 {b.p1}", f"p0 {b.p0}", f"f {b.f}", f"t {b.t}"]
    ) + "\n"


# ---------------------------------------------------------------------------
# audit manifests
# ---------------------------------------------------------------------------


@dataclass
class Manifest:
    """A corpus description: named resources plus role-tagged members.

    Directives::

        site <token>                       # simplex:N, cube:N, or a file
        presheaf <file>
        map <file>
        interval builtin | <file>
        role <tag> <name> [<name2>]        # tags: fibrant-candidate,
                                           # rlp-member, span-instance,
                                           # triangle, frobenius, glue-bundle
        bundle <file>
    """

    site_token: str = ""
    presheaf_files: list[str] = field(default_factory=list)
    map_files: list[str] = field(default_factory=list)
    interval_token: str = "builtin"
    bundle_files: list[str] = field(default_factory=list)
    roles: list[tuple[str, tuple[str, ...]]] = field(default_factory=list)


def load_manifest(text: str) -> Manifest:
    man = Manifest()
    for line in _lines(text):
        parts = line.split()
        if parts[0] == "site":
            man.site_token = parts[1]
        elif parts[0] == "presheaf":
            man.presheaf_files.append(parts[1])
        elif parts[0] == "map":
            man.map_files.append(parts[1])
        elif parts[0] == "interval":
            man.interval_token = parts[1]
        elif parts[0] == "bundle":
            man.bundle_files.append(parts[1])
        elif parts[0] == "role":
            if len(parts) < 3:
                raise FormatError(f"bad role line: {line}")
            man.roles.append((parts[1], tuple(parts[2:])))
        else:
            raise FormatError(f"unknown manifest directive: {parts[0]}")
    if not man.site_token:
        raise FormatError("manifest must name a site")
    return man

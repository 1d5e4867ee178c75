"""Manifold files: TOML documents describing a chart, a map and a potential.

Sections::

    [chart]     dimension, box, singular (expressions), singular_margin, tag
    [metric]    g11, g12, ... (upper triangle; missing off-diagonals are 0)
    [target]    dimension, flat, h11, ..., box
    [map]       phi1, ..., phin
    [potential] f  or  X1, ..., Xm
    [constants] alpha, lambda, b (list), c, any user constant
    [probes]    points  or  count + seed
    [rigid]     base_dimension, k             (products built by rigid-model)
    [family]    parameters, boxes, weights    (ansatz families)
"""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any

import tomli_w

try:
    import tomllib as tomli
except ModuleNotFoundError:  # Python 3.10
    import tomli

from ..expr import ExprError, FieldEnv, Node, eval_float, is_constant, parse, to_text
from ..geometry import GeometryData, PotentialData
from ..maps import MapData
from ..solitons import AnsatzFamily, SolitonData
from .probes import DEFAULT_PROBE_COUNT, ProbeError, quasi_random_probes

KNOWN_SECTIONS = {"chart", "metric", "target", "map", "potential", "constants", "probes", "rigid", "family"}


class ManifestError(ValueError):
    pass


class ParseError(ManifestError):
    pass


class ValidationError(ManifestError):
    pass


@dataclass
class Manifest:
    path: str
    sha256: str
    name: str
    geo: GeometryData
    map: MapData | None
    soliton: SolitonData | None
    family: AnsatzFamily | None
    probes: tuple[tuple[float, ...], ...]
    alpha: float
    lam: float | None
    box: tuple[tuple[float, float], ...]
    potential: PotentialData | None
    rigid_base_dimension: int | None = None
    rigid_k: int | None = None
    raw: dict = field(default_factory=dict)


def resolve_path(path: str | Path) -> Path:
    """Filesystem path, falling back to the bundled gallery for ``gallery/<name>``."""
    p = Path(path)
    if p.exists():
        return p
    parts = p.parts
    if parts and parts[0] == "gallery":
        candidate = resources.files("harmricci").joinpath("gallery", *parts[1:])
        if candidate.is_file():
            return Path(str(candidate))
    raise FileNotFoundError(f"no such manifold file: {path}")


def gallery_files() -> list[Path]:
    root = resources.files("harmricci").joinpath("gallery")
    return sorted(Path(str(p)) for p in root.iterdir() if p.name.endswith(".mf"))


class _Locator:
    """Maps (section, key) to a line number for error messages."""

    def __init__(self, text: str):
        self.lines: dict[tuple[str, str], int] = {}
        section = ""
        for no, line in enumerate(text.splitlines(), start=1):
            s = line.strip()
            m = re.match(r"\[([^\]]+)\]", s)
            if m:
                section = m.group(1).strip()
                self.lines.setdefault((section, ""), no)
                continue
            m = re.match(r"([A-Za-z_][A-Za-z_0-9]*)\s*=", s)
            if m:
                self.lines.setdefault((section, m.group(1)), no)

    def where(self, section: str, key: str = "") -> str:
        no = self.lines.get((section, key)) or self.lines.get((section, ""))
        loc = f"[{section}]" + (f" {key}" if key else "")
        return f"{loc} (line {no})" if no else loc


def load(path: str | Path, probe_count: int | None = None, seed: int | None = None) -> Manifest:
    real = resolve_path(path)
    data = real.read_bytes()
    try:
        doc = tomli.loads(data.decode("utf-8"))
    except (tomli.TOMLDecodeError, UnicodeDecodeError) as err:
        raise ParseError(f"{path}: {err}") from None
    return build(doc, data.decode("utf-8"), str(path), hashlib.sha256(data).hexdigest(),
                 probe_count=probe_count, seed=seed, name=real.stem)


def loads(text: str, name: str = "<string>", probe_count: int | None = None, seed: int | None = None) -> Manifest:
    try:
        doc = tomli.loads(text)
    except tomli.TOMLDecodeError as err:
        raise ParseError(f"{name}: {err}") from None
    return build(doc, text, name, hashlib.sha256(text.encode()).hexdigest(), probe_count=probe_count,
                 seed=seed, name=name)


def _require(doc: dict, section: str, key: str, loc: _Locator):
    sec = doc.get(section)
    if sec is None:
        raise ValidationError(f"missing section [{section}]")
    if key not in sec:
        raise ValidationError(f"{loc.where(section)}: missing key {key!r}")
    return sec[key]


def _expr(text: Any, env: FieldEnv, loc: _Locator, section: str, key: str) -> Node:
    if isinstance(text, (int, float)) and not isinstance(text, bool):
        text = repr(float(text))
    if not isinstance(text, str):
        raise ValidationError(f"{loc.where(section, key)}: expected an expression string")
    try:
        return parse(text, env)
    except ExprError as err:
        raise ValidationError(f"{loc.where(section, key)}: {err}") from None


def _box(value: Any, dim: int, loc: _Locator, section: str) -> tuple[tuple[float, float], ...]:
    try:
        box = tuple((float(lo), float(hi)) for lo, hi in value)
    except (TypeError, ValueError):
        raise ValidationError(f"{loc.where(section, 'box')}: expected a list of [lo, hi] pairs") from None
    if len(box) != dim:
        raise ValidationError(f"{loc.where(section, 'box')}: {len(box)} intervals for dimension {dim}")
    for lo, hi in box:
        if hi < lo:
            raise ValidationError(f"{loc.where(section, 'box')}: interval [{lo}, {hi}] is empty")
    return box


def _metric(section: dict, dim: int, prefix: str, env: FieldEnv, loc: _Locator, name: str, probes_for_check):
    rows = [[None] * dim for _ in range(dim)]
    for key in section:
        m = re.fullmatch(prefix + r"(\d)(\d)", key)
        if not m:
            continue
        i, j = int(m.group(1)) - 1, int(m.group(2)) - 1
        if not (0 <= i < dim and 0 <= j < dim):
            raise ValidationError(f"{loc.where(name, key)}: index outside dimension {dim}")
        rows[i][j] = (_expr(section[key], env, loc, name, key), key)
    zero = parse("0", env)
    out = [[None] * dim for _ in range(dim)]
    for i in range(dim):
        if rows[i][i] is None:
            raise ValidationError(f"{loc.where(name)}: missing diagonal entry {prefix}{i + 1}{i + 1}")
        for j in range(dim):
            upper, lower = rows[min(i, j)][max(i, j)], rows[max(i, j)][min(i, j)]
            if upper is not None and lower is not None and upper[0] != lower[0]:
                pts = probes_for_check()
                for p in pts:
                    a, b = eval_float(upper[0], p), eval_float(lower[0], p)
                    if abs(a - b) > 1e-14 * (1 + abs(a)):
                        raise ValidationError(
                            f"{loc.where(name, lower[1])}: {lower[1]} = {b!r} differs from "
                            f"{upper[1]} = {a!r} at {p}; the metric must be symmetric"
                        )
            chosen = upper or lower
            out[i][j] = chosen[0] if chosen else zero
    return tuple(tuple(r) for r in out)


def build(doc: dict, text: str, path: str, sha: str, probe_count: int | None = None, seed: int | None = None,
          name: str = "") -> Manifest:
    loc = _Locator(text)
    unknown = set(doc) - KNOWN_SECTIONS
    if unknown:
        raise ValidationError(f"unknown section(s): {', '.join(sorted(unknown))}")
    dim = _require(doc, "chart", "dimension", loc)
    if not isinstance(dim, int) or dim < 1:
        raise ValidationError(f"{loc.where('chart', 'dimension')}: dimension must be a positive integer")
    chart = doc["chart"]

    consts_raw = dict(doc.get("constants", {}))
    constants: dict[str, float] = {}
    for key, val in consts_raw.items():
        if key == "b":
            if not isinstance(val, list):
                raise ValidationError(f"{loc.where('constants', 'b')}: b must be a list")
            for t, v in enumerate(val, start=1):
                constants[f"b{t}"] = float(v)
            continue
        if isinstance(val, bool) or not isinstance(val, (int, float)):
            raise ValidationError(f"{loc.where('constants', key)}: constants must be numbers")
        if re.fullmatch(r"[xy]\d+", key) or key == "pi":
            raise ValidationError(f"{loc.where('constants', key)}: {key!r} is a reserved name")
        constants[key] = float(val)
    alpha = float(constants.get("alpha", 1.0))
    lam = constants.get("lambda")

    family_sec = doc.get("family")
    params: tuple[str, ...] = ()
    if family_sec is not None:
        params = tuple(str(p) for p in family_sec.get("parameters", ()))
        if not params:
            raise ValidationError(f"{loc.where('family', 'parameters')}: at least one parameter required")

    target_sec = doc.get("target")
    map_sec = doc.get("map")
    if map_sec is not None and target_sec is None:
        raise ValidationError(f"{loc.where('map')}: a map needs a [target] section")
    n = int(target_sec.get("dimension", 0)) if target_sec is not None else 0
    env = FieldEnv(dim, n, constants, params)

    box = _box(chart.get("box", [[-1.0, 1.0]] * dim), dim, loc, "chart")
    margin = float(chart.get("singular_margin", 0.0))
    singular = [_expr(e, env, loc, "chart", "singular") for e in chart.get("singular", [])]

    param_center = tuple(0.5 * (lo + hi) for lo, hi in
                         (_box(family_sec.get("boxes", []), len(params), loc, "family") if family_sec else ()))

    def admissible(p):
        full = tuple(p) + param_center
        return all(abs(eval_float(e, full)) >= margin for e in singular)

    probes_sec = doc.get("probes", {})
    explicit = probes_sec.get("points")
    if explicit is not None and probe_count is None:
        pts = []
        for idx, pt in enumerate(explicit):
            pt = tuple(float(x) for x in pt)
            if len(pt) != dim:
                raise ValidationError(f"{loc.where('probes', 'points')}: probe {idx} has {len(pt)} coordinates")
            if not admissible(pt):
                raise ValidationError(
                    f"{loc.where('probes', 'points')}: probe {idx} {pt} lies inside the singular margin {margin}"
                )
            pts.append(pt)
        probes = tuple(pts)
    else:
        count = probe_count if probe_count is not None else int(probes_sec.get("count", DEFAULT_PROBE_COUNT))
        s = seed if seed is not None else int(probes_sec.get("seed", 0))
        try:
            probes = tuple(quasi_random_probes(box, count, s, admissible if singular else None))
        except ProbeError as err:
            raise ValidationError(f"{loc.where('probes')}: {err}") from None

    def check_points():
        return [tuple(p) + param_center for p in probes[:8]]

    metric = _metric(doc.get("metric", {}), dim, "g", env, loc, "metric", check_points)
    geo = GeometryData(dim, metric, env, tag=chart.get("tag"))

    mapping = None
    if target_sec is not None:
        if n < 1:
            raise ValidationError(f"{loc.where('target', 'dimension')}: target dimension must be >= 1")
        tenv = env.for_target()
        tbox = _box(target_sec["box"], n, loc, "target") if "box" in target_sec else None
        tcenter = [tuple(0.5 * (lo + hi) for lo, hi in tbox)] if tbox else [tuple(0.1 * (a + 1) for a in range(n))]
        tmetric = _metric(target_sec, n, "h", tenv, loc, "target", lambda: tcenter)
        if map_sec is None:
            raise ValidationError(f"{loc.where('target')}: a target needs a [map] section")
        comps = tuple(_expr(_require(doc, "map", f"phi{a}", loc), env, loc, "map", f"phi{a}")
                      for a in range(1, n + 1))
        flat = bool(target_sec.get("flat", False))
        mapping = MapData(GeometryData(n, tmetric, tenv), comps, flat, tbox)

    pot_sec = doc.get("potential")
    potential = None
    if pot_sec is not None:
        if "f" in pot_sec and any(k.startswith("X") for k in pot_sec):
            raise ValidationError(f"{loc.where('potential')}: give either f or X components, not both")
        if "f" in pot_sec:
            potential = PotentialData(f=_expr(pot_sec["f"], env, loc, "potential", "f"))
        else:
            xs = tuple(_expr(_require(doc, "potential", f"X{i}", loc), env, loc, "potential", f"X{i}")
                       for i in range(1, dim + 1))
            potential = PotentialData(vector_field=xs)

    rigid_sec = doc.get("rigid", {})
    rigid_base = rigid_sec.get("base_dimension")
    rigid_k = rigid_sec.get("k")
    if rigid_sec and (rigid_base is None or rigid_k is None or rigid_base + rigid_k != dim):
        raise ValidationError(f"{loc.where('rigid')}: base_dimension + k must equal the chart dimension")

    if alpha <= 0:
        raise ValidationError(f"{loc.where('constants', 'alpha')}: alpha must be positive")

    soliton = None
    if potential is not None and family_sec is None:
        if lam is None:
            raise ValidationError(f"{loc.where('constants')}: a potential needs lambda")
        soliton = SolitonData(geo, mapping, alpha, float(lam), potential, probes, name,
                              rigid_base, rigid_k)

    family = None
    if family_sec is not None:
        fboxes = _box(family_sec.get("boxes", []), len(params), loc, "family")
        weights = family_sec.get("weights")
        if weights is not None and len(weights) != len(probes):
            raise ValidationError(f"{loc.where('family', 'weights')}: one weight per probe required")
        family = AnsatzFamily(geo, mapping, alpha, fboxes, probes, None if lam is None else float(lam),
                              tuple(float(w) for w in weights) if weights is not None else None)

    return Manifest(path, sha, name, geo, mapping, soliton, family, probes, alpha,
                    None if lam is None else float(lam), box, potential, rigid_base, rigid_k, doc)


# -- writing -------------------------------------------------------------------


def _upper_triangle(prefix: str, metric) -> dict[str, str]:
    out = {}
    for i, row in enumerate(metric):
        for j in range(i, len(row)):
            if i != j and is_constant(row[j]) and eval_float(row[j], ()) == 0.0:
                continue
            out[f"{prefix}{i + 1}{j + 1}"] = to_text(row[j])
    return out


def soliton_document(data: SolitonData, constants: dict[str, float], box=None) -> dict:
    """TOML-ready dictionary describing a soliton (used to emit rigid products)."""
    m = data.dimension
    doc: dict[str, Any] = {"chart": {"dimension": m}}
    if box is not None:
        doc["chart"]["box"] = [list(b) for b in box]
    doc["metric"] = _upper_triangle("g", data.geo.metric)
    if data.map is not None:
        n = data.map.dimension
        tgt: dict[str, Any] = {"dimension": n, "flat": data.map.flat}
        tgt.update(_upper_triangle("h", data.map.target.metric))
        if data.map.box is not None:
            tgt["box"] = [list(b) for b in data.map.box]
        doc["target"] = tgt
        doc["map"] = {f"phi{a + 1}": to_text(c) for a, c in enumerate(data.map.components)}
    if data.potential.f is not None:
        doc["potential"] = {"f": to_text(data.potential.f)}
    else:
        doc["potential"] = {f"X{i + 1}": to_text(x) for i, x in enumerate(data.potential.vector_field)}
    consts = dict(constants)
    consts["alpha"] = data.alpha
    consts["lambda"] = data.lam
    doc["constants"] = consts
    doc["probes"] = {"points": [list(p) for p in data.probes]}
    if data.rigid_k is not None:
        doc["rigid"] = {"base_dimension": data.rigid_base_dimension, "k": data.rigid_k}
    return doc


def dumps(doc: dict) -> str:
    return tomli_w.dumps(doc)

"""Room-model representation, loading, decimation and absorption-band reduction.

A room is a polygon soup over a shared vertex list. Closed-shell polygons
carry the acoustically active boundary; free-standing interior polygons
(furniture panels and the like) are allowed and detected automatically.
Materials hold octave-band absorption and scattering spectra.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np
import yaml

from .errors import NotWatertightError, RoomFormatError, ValidationError

OCTAVE_CENTERS = (125.0, 250.0, 500.0, 1000.0, 2000.0, 4000.0, 8000.0, 16000.0)

COPLANAR_TOL = 1e-3  # 1 mm out-of-plane tolerance
WELD_TOL = 1e-3      # vertex weld tolerance for edge pairing


@dataclass(frozen=True)
class BandSpectrum:
    """Per-band coefficient vector (absorption, scattering, areas, times...)."""

    centers: tuple
    values: tuple

    def __post_init__(self):
        centers = tuple(float(c) for c in self.centers)
        values = tuple(float(v) for v in self.values)
        object.__setattr__(self, "centers", centers)
        object.__setattr__(self, "values", values)
        if len(centers) != len(values):
            raise ValidationError("centers and values must have the same length")
        if len(centers) not in (8, 4, 2, 1):
            raise ValidationError(f"band count must be 8, 4, 2 or 1, got {len(centers)}")
        if any(c <= 0 for c in centers):
            raise ValidationError("band centers must be positive")
        if any(b <= a for a, b in zip(centers, centers[1:])):
            raise ValidationError("band centers must be strictly ascending")

    @classmethod
    def octave(cls, values) -> "BandSpectrum":
        values = tuple(float(v) for v in values)
        if len(values) != 8:
            raise ValidationError("octave spectrum needs 8 values")
        return cls(OCTAVE_CENTERS, values)

    def require_coefficients(self, what="coefficient"):
        if any(not (0.0 <= v <= 1.0) for v in self.values):
            raise ValidationError(f"{what} values must lie in [0, 1]: {self.values}")

    def as_array(self) -> np.ndarray:
        return np.asarray(self.values, dtype=float)


def band_reduce(spectrum: BandSpectrum, target_bands: int) -> BandSpectrum:
    """Merge the canonical 8 octave bands into 4, 2 or 1 wider bands.

    Merged value is the arithmetic mean of the members, the merged center
    is their geometric mean.
    """
    if target_bands not in (4, 2, 1):
        raise ValidationError(f"target_bands must be 4, 2 or 1, got {target_bands}")
    if len(spectrum.centers) != 8 or tuple(spectrum.centers) != OCTAVE_CENTERS:
        raise ValidationError("band_reduce expects the canonical 8-band octave spectrum")
    group = 8 // target_bands
    centers = []
    values = []
    for i in range(target_bands):
        cs = spectrum.centers[i * group:(i + 1) * group]
        vs = spectrum.values[i * group:(i + 1) * group]
        centers.append(math.exp(sum(math.log(c) for c in cs) / group))
        values.append(sum(vs) / group)
    return BandSpectrum(tuple(centers), tuple(values))


@dataclass(frozen=True)
class Material:
    id: str
    absorption: BandSpectrum
    scattering: BandSpectrum

    def __post_init__(self):
        if self.absorption.centers != self.scattering.centers:
            raise ValidationError(
                f"material {self.id!r}: absorption and scattering bands differ"
            )
        self.absorption.require_coefficients("absorption")
        self.scattering.require_coefficients("scattering")


@dataclass(frozen=True)
class Polygon:
    vertex_indices: tuple
    material_id: str
    tags: frozenset = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "vertex_indices", tuple(int(i) for i in self.vertex_indices))
        object.__setattr__(self, "tags", frozenset(self.tags))
        if len(self.vertex_indices) < 3:
            raise ValidationError(
                f"polygon needs at least 3 vertices, got {len(self.vertex_indices)}"
            )


@dataclass(frozen=True)
class RoomModel:
    vertices: np.ndarray                 # (N, 3) metres
    polygons: tuple                      # of Polygon
    materials: dict                      # id -> Material
    sources: dict                        # label -> (3,) point
    receivers: dict                      # label -> (3,) point
    speed_of_sound: float = 343.0
    warnings_: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "vertices", np.asarray(self.vertices, dtype=float))
        object.__setattr__(self, "polygons", tuple(self.polygons))
        object.__setattr__(
            self, "sources", {k: np.asarray(v, dtype=float) for k, v in self.sources.items()}
        )
        object.__setattr__(
            self, "receivers", {k: np.asarray(v, dtype=float) for k, v in self.receivers.items()}
        )

    def polygon_vertices(self, poly: Polygon) -> np.ndarray:
        return self.vertices[list(poly.vertex_indices)]


# ---------------------------------------------------------------------------
# Polygon geometry helpers

def polygon_normal_area(pts: np.ndarray):
    """Unit normal and area via Newell's method."""
    n = np.zeros(3)
    for i in range(len(pts)):
        a = pts[i]
        b = pts[(i + 1) % len(pts)]
        n += np.cross(a, b)
    norm = np.linalg.norm(n)
    area = 0.5 * norm
    if norm < 1e-14:
        return np.array([0.0, 0.0, 1.0]), 0.0
    return n / norm, area


def polygon_centroid(pts: np.ndarray) -> np.ndarray:
    # area-weighted centroid from the triangle fan about pts[0]
    total = 0.0
    acc = np.zeros(3)
    for i in range(1, len(pts) - 1):
        c = np.cross(pts[i] - pts[0], pts[i + 1] - pts[0])
        a = 0.5 * np.linalg.norm(c)
        acc += a * (pts[0] + pts[i] + pts[i + 1]) / 3.0
        total += a
    if total < 1e-14:
        return pts.mean(axis=0)
    return acc / total


def _check_polygon(model: RoomModel, poly: Polygon, index: int):
    nverts = len(model.vertices)
    for vi in poly.vertex_indices:
        if not (0 <= vi < nverts):
            raise ValidationError(f"polygon {index}: vertex index {vi} out of range")
    if poly.material_id not in model.materials:
        raise ValidationError(
            f"polygon {index}: unknown material {poly.material_id!r}"
        )
    pts = model.polygon_vertices(poly)
    normal, area = polygon_normal_area(pts)
    if area <= 1e-12:
        raise ValidationError(f"polygon {index}: degenerate (zero area)")
    d = pts - pts.mean(axis=0)
    out_of_plane = np.abs(d @ normal)
    if out_of_plane.max() > COPLANAR_TOL:
        raise ValidationError(
            f"polygon {index}: vertices out of plane by {out_of_plane.max() * 1e3:.2f} mm"
        )


def _shell_polygon_indices(model: RoomModel):
    """Split polygons into closed-shell members and free-standing panels.

    Edges are paired by welded vertex position. A polygon with no edge
    shared with any other polygon is free-standing (furniture panel);
    a polygon with some but not all edges paired leaves the shell open.
    """
    key_of = {}
    keys = []
    for v in model.vertices:
        k = tuple(np.round(v / WELD_TOL).astype(np.int64))
        if k not in key_of:
            key_of[k] = len(key_of)
        keys.append(key_of[k])

    edge_count = {}
    poly_edges = []
    for poly in model.polygons:
        vi = poly.vertex_indices
        edges = []
        for i in range(len(vi)):
            a, b = keys[vi[i]], keys[vi[(i + 1) % len(vi)]]
            edges.append((min(a, b), max(a, b)))
        poly_edges.append(edges)
        for e in edges:
            edge_count[e] = edge_count.get(e, 0) + 1

    shell, detached, open_edges = [], [], []
    for idx, edges in enumerate(poly_edges):
        shared = [e for e in edges if edge_count[e] > 1]
        if not shared:
            detached.append(idx)
        else:
            shell.append(idx)
            open_edges.extend(e for e in edges if edge_count[e] == 1)
    return shell, detached, sorted(set(open_edges))


def _oriented_shell_volume(model: RoomModel, shell):
    """Signed volume of the shell, after propagating a consistent orientation."""
    keys_dir = []  # per polygon: list of directed edges (a, b) in vertex-key space
    key_of = {}
    vert_keys = []
    for v in model.vertices:
        k = tuple(np.round(v / WELD_TOL).astype(np.int64))
        if k not in key_of:
            key_of[k] = len(key_of)
        vert_keys.append(key_of[k])
    for idx in shell:
        vi = model.polygons[idx].vertex_indices
        keys_dir.append(
            [(vert_keys[vi[i]], vert_keys[vi[(i + 1) % len(vi)]]) for i in range(len(vi))]
        )

    # adjacency through shared undirected edges
    by_edge = {}
    for local, edges in enumerate(keys_dir):
        for a, b in edges:
            by_edge.setdefault((min(a, b), max(a, b)), []).append(local)

    flip = [None] * len(shell)
    for start in range(len(shell)):
        if flip[start] is not None:
            continue
        flip[start] = False
        stack = [start]
        while stack:
            cur = stack.pop()
            cur_edges = {
                (b, a) if flip[cur] else (a, b) for a, b in keys_dir[cur]
            }
            for a, b in keys_dir[cur]:
                for other in by_edge[(min(a, b), max(a, b))]:
                    if other == cur or flip[other] is not None:
                        continue
                    # consistent orientation: shared edge traversed oppositely
                    other_dirs = set(keys_dir[other])
                    edge_fwd = (a, b) in cur_edges
                    shared_fwd = (a, b) in other_dirs
                    flip[other] = (edge_fwd == shared_fwd)
                    stack.append(other)

    total = 0.0
    for local, idx in enumerate(shell):
        pts = model.polygon_vertices(model.polygons[idx])
        if flip[local]:
            pts = pts[::-1]
        for i in range(1, len(pts) - 1):
            total += np.dot(pts[0], np.cross(pts[i], pts[i + 1])) / 6.0
    return total


def compute_volume(model: RoomModel) -> float:
    """Enclosed volume of the closed shell, ignoring free-standing panels."""
    shell, _, open_edges = _shell_polygon_indices(model)
    if open_edges:
        raise NotWatertightError(open_edges)
    if len(shell) < 4:
        raise NotWatertightError([])
    return abs(_oriented_shell_volume(model, shell))


def total_surface(model: RoomModel) -> float:
    return sum(polygon_normal_area(model.polygon_vertices(p))[1] for p in model.polygons)


def equivalent_absorption_area(model: RoomModel) -> BandSpectrum:
    """A(b) = sum over polygons of area * absorption(b)."""
    centers = None
    acc = None
    for poly in model.polygons:
        mat = model.materials[poly.material_id]
        _, area = polygon_normal_area(model.polygon_vertices(poly))
        a = area * mat.absorption.as_array()
        if acc is None:
            centers = mat.absorption.centers
            acc = a
        else:
            if mat.absorption.centers != centers:
                raise ValidationError("materials disagree on band centers")
            acc = acc + a
    if acc is None:
        raise ValidationError("model has no polygons")
    return BandSpectrum(centers, tuple(acc))


def validate(model: RoomModel) -> RoomModel:
    """Check all RoomModel invariants; returns the model for chaining."""
    if len(model.vertices) < 4:
        raise ValidationError("model needs at least 4 vertices")
    for idx, poly in enumerate(model.polygons):
        _check_polygon(model, poly, idx)
    # strictness of containment: every source/receiver inside the convex hull
    from scipy.spatial import ConvexHull

    hull = ConvexHull(model.vertices)
    eqs = hull.equations  # (F, 4): n.x + d <= 0 inside
    for kind, table in (("source", model.sources), ("receiver", model.receivers)):
        for label, p in table.items():
            margin = eqs[:, :3] @ p + eqs[:, 3]
            if margin.max() >= -1e-9:
                raise ValidationError(f"{kind} {label!r} is not strictly inside the room")
    vol = compute_volume(model)
    if vol <= 0:
        raise ValidationError("room volume must be positive")
    return model


# ---------------------------------------------------------------------------
# Loading

def _require(mapping, key, ctx):
    if key not in mapping:
        raise RoomFormatError(f"missing {key!r} in {ctx}")
    return mapping[key]


def room_from_dict(doc: dict) -> RoomModel:
    if not isinstance(doc, dict):
        raise RoomFormatError("room document must be a mapping")
    schema = doc.get("schema", "room/1")
    if schema != "room/1":
        raise RoomFormatError(f"unsupported room schema {schema!r}")
    try:
        vertices = np.asarray(_require(doc, "vertices", "room"), dtype=float)
    except (TypeError, ValueError) as exc:
        raise RoomFormatError(f"bad vertex table: {exc}") from None
    if vertices.ndim != 2 or vertices.shape[1] != 3:
        raise RoomFormatError("vertices must be a list of [x, y, z] triples")

    def spectrum(obj, ctx):
        # plain list = the default octave grid; a mapping carries its own centers
        if isinstance(obj, dict):
            centers = _require(obj, "centers", ctx)
            values = _require(obj, "values", ctx)
            return BandSpectrum(tuple(float(c) for c in centers),
                                tuple(float(v) for v in values))
        return BandSpectrum.octave(obj)

    materials = {}
    for mid, m in _require(doc, "materials", "room").items():
        ctx = f"material {mid!r}"
        absorption = spectrum(_require(m, "absorption", ctx), ctx)
        default_scatter = {"centers": list(absorption.centers),
                           "values": [0.0] * len(absorption.centers)}
        scattering = spectrum(m.get("scattering", default_scatter), ctx)
        materials[mid] = Material(mid, absorption, scattering)

    polygons = []
    for entry in _require(doc, "polygons", "room"):
        polygons.append(
            Polygon(
                vertex_indices=tuple(_require(entry, "indices", "polygon")),
                material_id=_require(entry, "material", "polygon"),
                tags=frozenset(entry.get("tags", [])),
            )
        )

    model = RoomModel(
        vertices=vertices,
        polygons=tuple(polygons),
        materials=materials,
        sources={k: tuple(v) for k, v in doc.get("sources", {}).items()},
        receivers={k: tuple(v) for k, v in doc.get("receivers", {}).items()},
        speed_of_sound=float(doc.get("speed_of_sound", 343.0)),
    )
    return validate(model)


def load_room(path) -> RoomModel:
    """Load and validate a room-model YAML file."""
    try:
        with open(path, "r") as fh:
            doc = yaml.safe_load(fh)
    except yaml.YAMLError as exc:
        raise RoomFormatError(f"cannot parse {path}: {exc}") from None
    return room_from_dict(doc)


def _spectrum_to_doc(s: BandSpectrum):
    if s.centers == OCTAVE_CENTERS:
        return list(s.values)
    return {"centers": list(s.centers), "values": list(s.values)}


def room_to_dict(model: RoomModel) -> dict:
    return {
        "schema": "room/1",
        "speed_of_sound": model.speed_of_sound,
        "vertices": [[float(x) for x in v] for v in model.vertices],
        "materials": {
            mid: {
                "absorption": _spectrum_to_doc(m.absorption),
                "scattering": _spectrum_to_doc(m.scattering),
            }
            for mid, m in model.materials.items()
        },
        "polygons": [
            {
                "indices": list(p.vertex_indices),
                "material": p.material_id,
                **({"tags": sorted(p.tags)} if p.tags else {}),
            }
            for p in model.polygons
        ],
        "sources": {k: [float(x) for x in v] for k, v in model.sources.items()},
        "receivers": {k: [float(x) for x in v] for k, v in model.receivers.items()},
    }


def save_room(model: RoomModel, path):
    with open(path, "w") as fh:
        yaml.safe_dump(room_to_dict(model), fh, sort_keys=False)


# ---------------------------------------------------------------------------
# Constructors

def shoebox(
    dims,
    material: Material,
    sources=None,
    receivers=None,
    speed_of_sound: float = 343.0,
    origin=(0.0, 0.0, 0.0),
) -> RoomModel:
    """Axis-aligned box room with a single material on all six faces."""
    lx, ly, lz = (float(d) for d in dims)
    ox, oy, oz = (float(d) for d in origin)
    v = np.array(
        [
            [ox, oy, oz], [ox + lx, oy, oz], [ox + lx, oy + ly, oz], [ox, oy + ly, oz],
            [ox, oy, oz + lz], [ox + lx, oy, oz + lz],
            [ox + lx, oy + ly, oz + lz], [ox, oy + ly, oz + lz],
        ]
    )
    faces = [
        (0, 3, 2, 1),  # floor (outward -z)
        (4, 5, 6, 7),  # ceiling
        (0, 1, 5, 4),  # y = 0 wall
        (2, 3, 7, 6),  # y = ly wall
        (0, 4, 7, 3),  # x = 0 wall
        (1, 2, 6, 5),  # x = lx wall
    ]
    polys = tuple(Polygon(f, material.id, frozenset({"wall"})) for f in faces)
    return RoomModel(
        vertices=v,
        polygons=polys,
        materials={material.id: material},
        sources=sources or {},
        receivers=receivers or {},
        speed_of_sound=speed_of_sound,
    )


def uniform_material(mid: str, absorption: float, scattering: float = 0.0) -> Material:
    return Material(
        mid,
        BandSpectrum.octave([absorption] * 8),
        BandSpectrum.octave([scattering] * 8),
    )


# ---------------------------------------------------------------------------
# Simplification

def decimate(model: RoomModel, area_threshold: float, remove_tagged=frozenset()) -> RoomModel:
    """Drop small and tagged polygons, conserving equivalent absorption area.

    Each removed polygon's per-band absorption area is moved onto the
    nearest remaining polygon (centroid distance) by raising its effective
    absorption, clamped at 1 (clamping attaches a warning to the result).
    """
    if area_threshold < 0:
        raise ValidationError("area_threshold must be >= 0")
    remove_tagged = frozenset(remove_tagged)

    areas, centroids = [], []
    for poly in model.polygons:
        pts = model.polygon_vertices(poly)
        areas.append(polygon_normal_area(pts)[1])
        centroids.append(polygon_centroid(pts))

    keep, removed = [], []
    for i, poly in enumerate(model.polygons):
        if poly.tags & remove_tagged or areas[i] < area_threshold:
            removed.append(i)
        else:
            keep.append(i)

    if not removed:
        return model

    if len(keep) < 4:
        raise ValidationError(
            f"decimation leaves {len(keep)} polygon(s); cannot form a closed shell"
        )

    # per-band absorption area to redistribute, target = nearest kept centroid
    nbands = len(next(iter(model.materials.values())).absorption.values)
    extra = {i: np.zeros(nbands) for i in keep}
    kept_centroids = np.array([centroids[i] for i in keep])
    for i in removed:
        mat = model.materials[model.polygons[i].material_id]
        load = areas[i] * mat.absorption.as_array()
        target = keep[int(np.argmin(np.linalg.norm(kept_centroids - centroids[i], axis=1)))]
        extra[target] += load

    new_materials = dict(model.materials)
    new_polys = []
    warn = list(model.warnings_)
    clamped = False
    for i in keep:
        poly = model.polygons[i]
        if extra[i].any():
            mat = model.materials[poly.material_id]
            alpha = mat.absorption.as_array() + extra[i] / areas[i]
            if (alpha > 1.0).any():
                clamped = True
                alpha = np.minimum(alpha, 1.0)
            nid = f"{poly.material_id}+redist{i}"
            new_materials[nid] = Material(
                nid,
                BandSpectrum(mat.absorption.centers, tuple(alpha)),
                mat.scattering,
            )
            poly = replace(poly, material_id=nid)
        new_polys.append(poly)
    if clamped:
        warn.append("decimate: absorption redistribution clamped at 1 on some surface")

    # drop unreferenced vertices, reindex
    used = sorted({vi for p in new_polys for vi in p.vertex_indices})
    remap = {old: new for new, old in enumerate(used)}
    new_polys = [
        replace(p, vertex_indices=tuple(remap[vi] for vi in p.vertex_indices))
        for p in new_polys
    ]
    used_mats = {p.material_id for p in new_polys}

    result = RoomModel(
        vertices=model.vertices[used],
        polygons=tuple(new_polys),
        materials={k: v for k, v in new_materials.items() if k in used_mats},
        sources=model.sources,
        receivers=model.receivers,
        speed_of_sound=model.speed_of_sound,
        warnings_=tuple(warn),
    )
    # removing shell polygons must not open the boundary
    compute_volume(result)
    return result


def to_shoebox(model: RoomModel) -> RoomModel:
    """Replace the room with its volume-matched bounding box, one material.

    The box face absorption is uniform and chosen so the equivalent
    absorption area of the input is conserved (clamped to [0, 1]).
    """
    vol = compute_volume(model)
    lo = model.vertices.min(axis=0)
    hi = model.vertices.max(axis=0)
    dims = hi - lo
    box_vol = float(np.prod(dims))
    scale = (vol / box_vol) ** (1.0 / 3.0)
    center = 0.5 * (lo + hi)
    dims = dims * scale
    origin = center - dims / 2.0

    a_band = equivalent_absorption_area(model)
    if len(a_band.centers) != 8:
        raise ValidationError("to_shoebox expects an 8-band model")
    lx, ly, lz = dims
    surface = 2.0 * (lx * ly + lx * lz + ly * lz)
    alpha = a_band.as_array() / surface
    warn = list(model.warnings_)
    if (alpha > 1.0).any():
        warn.append("to_shoebox: uniform absorption clamped at 1")
        alpha = np.minimum(alpha, 1.0)

    # area-weighted mean scattering carried over
    s_acc = np.zeros(8)
    total_area = 0.0
    for poly in model.polygons:
        _, area = polygon_normal_area(model.polygon_vertices(poly))
        s_acc += area * model.materials[poly.material_id].scattering.as_array()
        total_area += area
    s_mean = s_acc / total_area if total_area > 0 else s_acc

    mat = Material(
        "shoebox",
        BandSpectrum.octave(alpha),
        BandSpectrum.octave(np.clip(s_mean, 0.0, 1.0)),
    )
    box = shoebox(
        dims,
        mat,
        sources=model.sources,
        receivers=model.receivers,
        speed_of_sound=model.speed_of_sound,
        origin=tuple(origin),
    )
    return replace(box, warnings_=tuple(warn))


def expand_to_octaves(spectrum: BandSpectrum) -> BandSpectrum:
    """Spread a reduced (4/2/1-band) spectrum back over the 8 octave bands.

    Each merged value is repeated across its member octaves, so the
    spectrum is piecewise constant at the reduced resolution but defined
    on the canonical grid — the form a band-limited prediction engine
    actually simulates with.
    """
    n = len(spectrum.centers)
    if n == 8:
        return spectrum
    group = 8 // n
    values = tuple(v for v in spectrum.values for _ in range(group))
    return BandSpectrum(OCTAVE_CENTERS, values)


def band_reduce_model(model: RoomModel, target_bands: int,
                      octave_grid: bool = False) -> RoomModel:
    """Apply band_reduce to every material (absorption and scattering alike).

    With ``octave_grid`` the merged values are re-expanded onto the 8
    octave bands (piecewise constant), keeping the simulation's band
    structure while reducing the coefficient resolution.
    """
    def reduce_spectrum(s):
        r = band_reduce(s, target_bands)
        return expand_to_octaves(r) if octave_grid else r

    materials = {
        mid: Material(
            mid,
            reduce_spectrum(m.absorption),
            reduce_spectrum(m.scattering),
        )
        for mid, m in model.materials.items()
    }
    return replace(model, materials=materials)

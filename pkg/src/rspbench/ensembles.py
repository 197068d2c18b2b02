"""Target ensembles: Platonic vertex sets, sphere sampling and JSON files."""

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import qstate
from .errors import EnsembleFileError, InputError

GOLDEN = (1 + np.sqrt(5)) / 2

SOLIDS = ("tetrahedron", "octahedron", "cube", "icosahedron", "dodecahedron")
VERTEX_COUNTS = {"tetrahedron": 4, "octahedron": 6, "cube": 8, "icosahedron": 12, "dodecahedron": 20}

PROB_TOL = 1e-12
RADIUS_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class TargetEnsemble:
    """Weighted list of target Bloch vectors.

    ``common_radius`` is detected automatically when every vector has the same
    length; pass it explicitly to assert that property.
    """

    blochs: np.ndarray
    probs: np.ndarray
    name: str = "ensemble"
    common_radius: float | None = field(default=None)

    def __post_init__(self):
        b = np.array(self.blochs, dtype=float).reshape(-1, 3)
        p = np.array(self.probs, dtype=float).reshape(-1)
        if len(b) == 0 or len(b) != len(p):
            raise EnsembleFileError(f"{len(b)} states but {len(p)} probabilities", "malformed")
        if np.any(p <= 0):
            raise EnsembleFileError("probabilities must be positive", "probability-sum")
        if abs(p.sum() - 1) > PROB_TOL:
            raise EnsembleFileError(f"probabilities sum to {p.sum():.15g}, not 1", "probability-sum")
        norms = np.linalg.norm(b, axis=1)
        if np.any(norms > 1 + RADIUS_TOL):
            raise EnsembleFileError(f"Bloch norm {norms.max():.15g} exceeds 1", "norm")
        radius = self.common_radius
        if radius is None:
            if np.ptp(norms) <= RADIUS_TOL:
                radius = float(np.mean(norms))
        elif np.any(np.abs(norms - radius) > RADIUS_TOL):
            raise EnsembleFileError("Bloch norms differ from the declared common_radius", "common-radius")
        b.setflags(write=False)
        p.setflags(write=False)
        object.__setattr__(self, "blochs", b)
        object.__setattr__(self, "probs", p)
        object.__setattr__(self, "common_radius", None if radius is None else float(radius))

    def __len__(self):
        return len(self.probs)

    def __eq__(self, other):
        if not isinstance(other, TargetEnsemble):
            return NotImplemented
        return (
            self.name == other.name
            and self.common_radius == other.common_radius
            and np.array_equal(self.blochs, other.blochs)
            and np.array_equal(self.probs, other.probs)
        )

    @property
    def is_uniform(self):
        return bool(np.all(self.probs == self.probs[0]))

    @property
    def is_pure(self):
        return self.common_radius is not None and abs(self.common_radius - 1) <= RADIUS_TOL

    def densities(self):
        return [qstate.bloch_to_density(b) for b in self.blochs]

    def rotated(self, rotation):
        rotation = _check_rotation(rotation)
        return TargetEnsemble(self.blochs @ rotation.T, self.probs, self.name, self.common_radius)

    def scaled(self, radius):
        """Same directions, every state mixed down to Bloch length ``radius``."""
        if not 0 <= radius <= 1:
            raise InputError(f"radius {radius} outside [0, 1]", "radius")
        norms = np.linalg.norm(self.blochs, axis=1)
        dirs = np.divide(self.blochs, norms[:, None], out=np.zeros_like(self.blochs), where=norms[:, None] > 0)
        return TargetEnsemble(dirs * radius, self.probs, self.name, radius)


def _check_rotation(rotation):
    r = np.asarray(rotation, dtype=float)
    if r.shape != (3, 3) or np.max(np.abs(r @ r.T - np.eye(3))) > 1e-10:
        raise InputError("orientation must be an orthogonal 3x3 matrix", "orientation")
    return r


def _cyclic(v):
    x, y, z = v
    return [(x, y, z), (z, x, y), (y, z, x)]


def platonic_vertices(solid):
    """Unit vertex directions in the canonical orientation."""
    g = GOLDEN
    if solid == "tetrahedron":
        pts = [(1, 1, 1), (1, -1, -1), (-1, 1, -1), (-1, -1, 1)]
    elif solid == "octahedron":
        pts = [(1, 0, 0), (-1, 0, 0), (0, 1, 0), (0, -1, 0), (0, 0, 1), (0, 0, -1)]
    elif solid == "cube":
        pts = [(sx, sy, sz) for sx in (1, -1) for sy in (1, -1) for sz in (1, -1)]
    elif solid == "icosahedron":
        pts = [p for s1 in (1, -1) for s2 in (1, -1) for p in _cyclic((0, s1, s2 * g))]
    elif solid == "dodecahedron":
        pts = [(sx, sy, sz) for sx in (1, -1) for sy in (1, -1) for sz in (1, -1)]
        pts += [p for s1 in (1, -1) for s2 in (1, -1) for p in _cyclic((0, s1 / g, s2 * g))]
    else:
        raise InputError(f"unknown solid {solid!r}; choose from {', '.join(SOLIDS)}", "solid")
    v = np.array(pts, dtype=float)
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def platonic_ensemble(solid, radius=1.0, orientation=None):
    if not 0 <= radius <= 1:
        raise InputError(f"radius {radius} outside [0, 1]", "radius")
    v = platonic_vertices(solid)
    if orientation is not None:
        v = v @ _check_rotation(orientation).T
    n = len(v)
    return TargetEnsemble(v * radius, np.full(n, 1 / n), solid, float(radius))


def uniform_sphere_sample(n, seed):
    """``n`` unit vectors uniform on the sphere, via z ~ U[-1, 1], azimuth ~ U[0, 2 pi)."""
    if n < 1:
        raise InputError("sample count must be at least 1", "count")
    rng = np.random.default_rng(seed)
    z = rng.uniform(-1.0, 1.0, n)
    t = rng.uniform(0.0, 2 * np.pi, n)
    s = np.sqrt(np.clip(1 - z * z, 0, None))
    return np.column_stack([s * np.cos(t), s * np.sin(t), z])


def random_rotation(rng):
    q, r = np.linalg.qr(rng.normal(size=(3, 3)))
    q = q * np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q


def _parse_state(entry):
    if not isinstance(entry, dict):
        raise EnsembleFileError("each state must be a mapping", "malformed")
    keys = set(entry) - {"p"}
    try:
        if keys == {"x", "y", "z"}:
            b = np.array([float(entry["x"]), float(entry["y"]), float(entry["z"])])
        elif keys == {"phi", "theta", "r"}:
            angles = qstate.PureAngles(float(entry["phi"]), float(entry["theta"]))
            r = float(entry["r"])
            if r > 1 + RADIUS_TOL:
                raise EnsembleFileError(f"radius {r} exceeds 1", "norm")
            b = qstate.density_to_bloch(qstate.angles_to_state(angles, min(r, 1.0)))
        else:
            raise EnsembleFileError(f"state fields {sorted(entry)} match neither x/y/z nor phi/theta/r", "malformed")
    except (TypeError, ValueError) as exc:
        if isinstance(exc, EnsembleFileError):
            raise
        raise EnsembleFileError(f"bad numeric value in state {entry}: {exc}", "malformed") from exc
    return b, entry.get("p")


def ensemble_from_dict(doc):
    if not isinstance(doc, dict) or not isinstance(doc.get("states"), list) or not doc["states"]:
        raise EnsembleFileError("document needs a non-empty 'states' list", "malformed")
    parsed = [_parse_state(e) for e in doc["states"]]
    blochs = np.array([b for b, _ in parsed])
    ps = [p for _, p in parsed]
    if all(p is None for p in ps):
        probs = np.full(len(ps), 1 / len(ps))
    elif any(p is None for p in ps):
        raise EnsembleFileError("either every state or no state carries 'p'", "malformed")
    else:
        try:
            probs = np.array([float(p) for p in ps])
        except (TypeError, ValueError) as exc:
            raise EnsembleFileError(f"bad probability: {exc}", "malformed") from exc
    radius = doc.get("common_radius")
    return TargetEnsemble(blochs, probs, str(doc.get("name", "ensemble")), None if radius is None else float(radius))


def ensemble_to_dict(e):
    doc = {
        "name": e.name,
        "states": [{"x": float(b[0]), "y": float(b[1]), "z": float(b[2]), "p": float(p)} for b, p in zip(e.blochs, e.probs)],
    }
    if e.common_radius is not None:
        doc["common_radius"] = e.common_radius
    return doc


def load_ensemble(path):
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise EnsembleFileError(f"{path}: not valid JSON ({exc})", "malformed") from exc
    return ensemble_from_dict(doc)


def save_ensemble(e, path):
    # json writes floats with repr(), which round-trips exactly
    Path(path).write_text(json.dumps(ensemble_to_dict(e), indent=2) + "\n")

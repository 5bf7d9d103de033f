"""Joint-log datasets: ingestion, friction targets, segmentation, feature
construction, train/test splitting and synthetic generation.

A dataset is a set of aligned columns recorded from one joint: time ``t``,
position ``q``, velocity ``qdot``, motor torque ``tau_m`` and gravity torque
``tau_g``, optionally with a measured external torque and per-movement
labels.  In the quasi-static regime the motor balances gravity minus
friction, so the friction target is recovered as ``tau_g - tau_m``.
"""
from __future__ import annotations

import csv
import math
import warnings
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import expr as ex
from .baseline import AsymmetricStribeck, StribeckParams, asymmetric_eval, stribeck_eval
from .errors import InputError
from .util import read_json, write_json

#: canonical feature order; sign features use sign(0) = 0
FEATURES = ("qdot", "sign_qdot", "tau_g", "sign_tau_g")

#: features a residual correction model is allowed to read (velocity
#: magnitude excluded by design)
ADAPT_FEATURES = ("tau_g", "sign_tau_g", "sign_qdot")

_FEATURE_ALIASES = {
    "qdot": "qdot",
    "sign_qdot": "sign_qdot",
    "sign(qdot)": "sign_qdot",
    "sgn(qdot)": "sign_qdot",
    "tau_g": "tau_g",
    "sign_tau_g": "sign_tau_g",
    "sign(tau_g)": "sign_tau_g",
    "sgn(tau_g)": "sign_tau_g",
}


def normalize_features(features) -> tuple[str, ...]:
    """Canonical feature-name tuple; unknown or empty input is an error."""
    if isinstance(features, str):
        features = [f for f in features.split(",")]
    names = []
    for f in features:
        key = str(f).strip().lower()
        if key not in _FEATURE_ALIASES:
            raise InputError(
                f"unknown feature {f!r}; known features: {', '.join(FEATURES)}"
            )
        names.append(_FEATURE_ALIASES[key])
    if not names:
        raise InputError("feature set must not be empty")
    if len(set(names)) != len(names):
        raise InputError(f"duplicate features in {tuple(names)}")
    return tuple(names)


# ---------------------------------------------------------------------------
# dataset containers


@dataclass(frozen=True)
class JointSample:
    t: float
    q: float
    qdot: float
    tau_m: float
    tau_g: float
    tau_ext_measured: float | None = None


@dataclass
class JointDataset:
    """Immutable-by-convention column store for one joint's log.

    ``t`` must be strictly increasing and every present column finite.
    When ``rate`` is declared, sampling must be uniform within 1% jitter.
    """

    t: np.ndarray
    q: np.ndarray
    qdot: np.ndarray
    tau_m: np.ndarray
    tau_g: np.ndarray
    tau_ext: np.ndarray | None = None
    movement: np.ndarray | None = None
    joint_id: int = 0
    rate: float | None = None
    provenance: dict = field(default_factory=lambda: {"kind": "measured"})

    def __post_init__(self):
        cols = ["t", "q", "qdot", "tau_m", "tau_g"]
        for name in cols:
            setattr(self, name, np.asarray(getattr(self, name), dtype=float))
        n = self.t.size
        if n == 0:
            raise InputError("dataset must not be empty")
        for name in cols:
            arr = getattr(self, name)
            if arr.shape != (n,):
                raise InputError(f"column {name} has shape {arr.shape}, expected ({n},)")
            if not np.all(np.isfinite(arr)):
                raise InputError(f"column {name} contains non-finite values")
        if self.tau_ext is not None:
            self.tau_ext = np.asarray(self.tau_ext, dtype=float)
            if self.tau_ext.shape != (n,) or not np.all(np.isfinite(self.tau_ext)):
                raise InputError("tau_ext column malformed")
        if self.movement is not None:
            self.movement = np.asarray(self.movement, dtype=np.int64)
            if self.movement.shape != (n,):
                raise InputError("movement column malformed")
        if n > 1:
            dt = np.diff(self.t)
            if np.any(dt <= 0):
                raise InputError("t must be strictly increasing")
            if self.rate is not None:
                nominal = 1.0 / self.rate
                if np.max(np.abs(dt - nominal)) > 0.01 * nominal:
                    raise InputError(
                        f"sampling jitter exceeds 1% of the declared {self.rate} Hz rate"
                    )

    def __len__(self) -> int:
        return int(self.t.size)

    def sample(self, i: int) -> JointSample:
        return JointSample(
            t=float(self.t[i]),
            q=float(self.q[i]),
            qdot=float(self.qdot[i]),
            tau_m=float(self.tau_m[i]),
            tau_g=float(self.tau_g[i]),
            tau_ext_measured=float(self.tau_ext[i]) if self.tau_ext is not None else None,
        )

    def __iter__(self):
        return (self.sample(i) for i in range(len(self)))

    def subset(self, indices, provenance: dict | None = None) -> "JointDataset":
        """Dataset restricted to the given sample indices (kept in time
        order).  The declared rate is dropped: a subset need not be
        uniformly sampled."""
        idx = np.sort(np.asarray(indices, dtype=int))
        if idx.size == 0:
            raise InputError("subset must keep at least one sample")
        return JointDataset(
            t=self.t[idx],
            q=self.q[idx],
            qdot=self.qdot[idx],
            tau_m=self.tau_m[idx],
            tau_g=self.tau_g[idx],
            tau_ext=self.tau_ext[idx] if self.tau_ext is not None else None,
            movement=self.movement[idx] if self.movement is not None else None,
            joint_id=self.joint_id,
            rate=None,
            provenance=provenance or dict(self.provenance),
        )


@dataclass(frozen=True)
class FrictionPoint:
    features: tuple[float, ...]
    target: float


@dataclass(frozen=True)
class Segment:
    """One constant-velocity run with its per-run means."""

    start: int
    stop: int  # exclusive
    duration: float
    mean_qdot: float
    mean_tau_f: float
    mean_tau_g: float

    @property
    def n(self) -> int:
        return self.stop - self.start


# ---------------------------------------------------------------------------
# targets and features


def friction_target(obj):
    """Friction torque implied by the quasi-static torque balance:
    ``tau_g - tau_m``.  Accepts a sample (returns float) or a dataset
    (returns a vector)."""
    return obj.tau_g - obj.tau_m


def feature_matrix(qdot, tau_g, features) -> np.ndarray:
    """Column per canonical feature name over the given velocity and
    gravity-torque vectors."""
    names = normalize_features(features)
    v = np.asarray(qdot, dtype=float)
    g = np.asarray(tau_g, dtype=float)
    columns = {
        "qdot": lambda: v,
        "sign_qdot": lambda: np.sign(v),
        "tau_g": lambda: g,
        "sign_tau_g": lambda: np.sign(g),
    }
    return np.column_stack([columns[n]() for n in names])


def design_matrix(source, features) -> tuple[np.ndarray, np.ndarray]:
    """Feature matrix and friction-target vector from a dataset (one row
    per sample) or a list of segments (one row per segment mean)."""
    if isinstance(source, JointDataset):
        X = feature_matrix(source.qdot, source.tau_g, features)
        y = friction_target(source)
    else:
        segments = list(source)
        if not segments:
            raise InputError("no segments to build points from")
        qd = np.array([s.mean_qdot for s in segments])
        tg = np.array([s.mean_tau_g for s in segments])
        X = feature_matrix(qd, tg, features)
        y = np.array([s.mean_tau_f for s in segments])
    return X, np.asarray(y, dtype=float)


def build_points(source, features) -> list[FrictionPoint]:
    """Regression-ready points: per sample for a dataset, per run mean for
    a segment list."""
    X, y = design_matrix(source, features)
    return [
        FrictionPoint(tuple(float(v) for v in row), float(t)) for row, t in zip(X, y)
    ]


def points_arrays(points) -> tuple[np.ndarray, np.ndarray]:
    pts = list(points)
    if not pts:
        raise InputError("empty point list")
    X = np.array([p.features for p in pts], dtype=float)
    y = np.array([p.target for p in pts], dtype=float)
    return X, y


# ---------------------------------------------------------------------------
# segmentation


def segment_constant_velocity(
    ds: JointDataset, velocity_tolerance: float, min_duration: float
) -> list[Segment]:
    """Segments of near-constant velocity.

    A sample is *quasi-constant* when it lies inside at least one window
    whose velocities all fit inside a band of half-width
    ``velocity_tolerance`` (max - min <= 2 * tolerance) and whose time span
    is at least ``min_duration``.  The union of the returned segments is
    exactly the quasi-constant samples, so every sample that holds a level
    for long enough is covered; each segment additionally fits inside one
    velocity band, so abutting constant levels are reported as separate
    runs rather than blurred into one mean.  Averaging over each segment
    isolates the static friction-velocity relationship."""
    if velocity_tolerance <= 0:
        raise ValueError("velocity tolerance must be > 0")
    if min_duration < 0:
        raise ValueError("min duration must be >= 0")
    v = ds.qdot
    t = ds.t
    n = len(ds)
    band = 2.0 * velocity_tolerance

    # For each start a, grow the widest window [a, b] whose velocity range
    # fits in the band (two pointers; deques track the running max/min).
    # A window marks its samples as covered when it also spans min_duration.
    max_q: deque[int] = deque()
    min_q: deque[int] = deque()
    delta = np.zeros(n + 1, dtype=np.int64)
    ends = np.empty(n, dtype=np.int64)
    b = -1
    for a in range(n):
        while b + 1 < n:
            i = b + 1
            hi = max(v[max_q[0]], v[i]) if max_q else v[i]
            lo = min(v[min_q[0]], v[i]) if min_q else v[i]
            if hi - lo > band:
                break
            while max_q and v[max_q[-1]] <= v[i]:
                max_q.pop()
            max_q.append(i)
            while min_q and v[min_q[-1]] >= v[i]:
                min_q.pop()
            min_q.append(i)
            b = i
        ends[a] = b
        if t[b] - t[a] >= min_duration:
            delta[a] += 1
            delta[b + 1] -= 1
        if max_q and max_q[0] == a:
            max_q.popleft()
        if min_q and min_q[0] == a:
            min_q.popleft()
    covered = np.cumsum(delta[:n]) > 0

    tau_f = friction_target(ds)
    segments: list[Segment] = []

    def emit(i: int, j: int) -> None:  # [i, j] inclusive
        stop = j + 1
        segments.append(
            Segment(
                start=i,
                stop=stop,
                duration=float(t[j] - t[i]),
                mean_qdot=float(np.mean(v[i:stop])),
                mean_tau_f=float(np.mean(tau_f[i:stop])),
                mean_tau_g=float(np.mean(ds.tau_g[i:stop])),
            )
        )

    i = 0
    while i < n:
        if not covered[i]:
            i += 1
            continue
        j = i
        while j + 1 < n and covered[j + 1]:
            j += 1
        # split the covered run so each reported piece fits one band
        k = i
        while k <= j:
            piece_end = min(int(ends[k]), j)
            emit(k, piece_end)
            k = piece_end + 1
        i = j + 1
    return segments


# ---------------------------------------------------------------------------
# splitting


def split_movements(
    ds: JointDataset, n_train: int, seed: int
) -> tuple[JointDataset, JointDataset]:
    """Select ``n_train`` movements at random for training, the rest for
    testing, then subsample every movement to the common per-movement
    minimum count so each movement carries equal weight.  Deterministic
    for a fixed seed."""
    if ds.movement is None:
        raise InputError("dataset carries no movement labels")
    ids = np.unique(ds.movement)
    if n_train < 1:
        raise InputError("n_train must be >= 1")
    if n_train >= ids.size:
        raise InputError(
            f"n_train ({n_train}) must be smaller than the movement count ({ids.size})"
        )
    rng = np.random.default_rng(seed)
    train_ids = set(int(m) for m in rng.choice(ids, size=n_train, replace=False))

    per_movement = {int(m): np.flatnonzero(ds.movement == m) for m in ids}
    min_count = min(idx.size for idx in per_movement.values())

    train_idx: list[np.ndarray] = []
    test_idx: list[np.ndarray] = []
    for m in ids:
        idx = per_movement[int(m)]
        take = idx[(np.arange(min_count) * idx.size) // min_count]
        (train_idx if int(m) in train_ids else test_idx).append(take)

    def pack(chunks, which):
        prov = dict(ds.provenance)
        prov.update({"split": which, "split_seed": seed})
        return ds.subset(np.concatenate(chunks), provenance=prov)

    return pack(train_idx, "train"), pack(test_idx, "test")


# ---------------------------------------------------------------------------
# quasi-static guard


def max_acceleration(ds: JointDataset) -> float:
    """Largest finite-difference |dqdot/dt|, skipping movement boundaries
    (velocity steps between distinct movements are by construction not part
    of any movement's dynamics)."""
    if len(ds) < 2:
        return 0.0
    dv = np.diff(ds.qdot)
    dt = np.diff(ds.t)
    acc = np.abs(dv / dt)
    if ds.movement is not None:
        same = ds.movement[1:] == ds.movement[:-1]
        acc = acc[same]
    return float(np.max(acc)) if acc.size else 0.0


def check_quasistatic(ds: JointDataset, threshold: float = 0.5) -> float:
    """Warn when the acceleration estimate exceeds ``threshold`` (rad/s^2),
    the operational validity bound of the quasi-static torque balance.
    Returns the estimate."""
    worst = max_acceleration(ds)
    if worst > threshold:
        warnings.warn(
            f"|qddot| reaches {worst:.3g} rad/s^2 (> {threshold:g}); "
            "the quasi-static torque balance may not hold",
            stacklevel=2,
        )
    return worst


# ---------------------------------------------------------------------------
# CSV + metadata I/O

_REQUIRED_COLUMNS = ("t", "q", "qdot", "tau_m", "tau_g")
_OPTIONAL_COLUMNS = ("tau_ext", "movement")


def _meta_path(path: Path) -> Path:
    return Path(str(path) + ".meta.json")


def save_csv(ds: JointDataset, path) -> Path:
    """Write the dataset as CSV (17-significant-digit floats, so loading
    round-trips exactly) plus a ``<name>.meta.json`` sidecar with joint id,
    rate and provenance."""
    path = Path(path)
    header = list(_REQUIRED_COLUMNS)
    if ds.tau_ext is not None:
        header.append("tau_ext")
    if ds.movement is not None:
        header.append("movement")
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for i in range(len(ds)):
            row = [
                format(float(col[i]), ".17g")
                for col in (ds.t, ds.q, ds.qdot, ds.tau_m, ds.tau_g)
            ]
            if ds.tau_ext is not None:
                row.append(format(float(ds.tau_ext[i]), ".17g"))
            if ds.movement is not None:
                row.append(str(int(ds.movement[i])))
            fh.write(",".join(row) + "\n")
    write_json(
        _meta_path(path),
        {
            "joint_id": ds.joint_id,
            "rate": ds.rate,
            "n_samples": len(ds),
            "provenance": ds.provenance,
        },
    )
    return path


def load_csv(path) -> JointDataset:
    """Load a dataset CSV (header row required); reads the metadata sidecar
    when present."""
    path = Path(path)
    if not path.exists():
        raise InputError(f"file not found: {path}")
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise InputError(f"{path}: empty file (header row required)")
        header = [h.strip() for h in header]
        expected = list(_REQUIRED_COLUMNS)
        for opt in _OPTIONAL_COLUMNS:
            if opt in header:
                expected.append(opt)
        if header != expected:
            raise InputError(
                f"{path}: header must be {','.join(expected)} "
                f"(columns {','.join(_OPTIONAL_COLUMNS)} optional), got {','.join(header)}"
            )
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and row[0].strip() == ""):
                continue
            if len(row) != len(header):
                raise InputError(f"{path}:{lineno}: expected {len(header)} fields")
            try:
                rows.append([float(v) for v in row])
            except ValueError:
                raise InputError(f"{path}:{lineno}: non-numeric value")
    if not rows:
        raise InputError(f"{path}: no data rows")
    data = np.asarray(rows, dtype=float)
    cols = {name: data[:, j] for j, name in enumerate(header)}

    joint_id, rate, provenance = 0, None, {"kind": "measured", "source": str(path)}
    meta_file = _meta_path(path)
    if meta_file.exists():
        meta = read_json(meta_file)
        joint_id = int(meta.get("joint_id", 0))
        rate = meta.get("rate")
        provenance = meta.get("provenance", provenance)

    return JointDataset(
        t=cols["t"],
        q=cols["q"],
        qdot=cols["qdot"],
        tau_m=cols["tau_m"],
        tau_g=cols["tau_g"],
        tau_ext=cols.get("tau_ext"),
        movement=cols["movement"].astype(np.int64) if "movement" in cols else None,
        joint_id=joint_id,
        rate=rate,
        provenance=provenance,
    )


# ---------------------------------------------------------------------------
# synthetic generation


@dataclass(frozen=True)
class SynthSpec:
    """Generator description for synthetic joint logs.

    ``profile`` drives the velocity trajectory, ``friction`` the planted
    friction law, ``gravity`` the gravity-torque law and ``external`` an
    optional planted external torque; ``noise_std`` is the Gaussian noise
    on the motor torque.
    """

    profile: dict
    friction: dict
    gravity: dict = field(default_factory=lambda: {"kind": "zero"})
    external: dict = field(default_factory=lambda: {"kind": "none"})
    noise_std: float = 0.0
    rate: float = 100.0
    joint_id: int = 2
    seed: int = 0

    def __post_init__(self):
        if self.noise_std < 0:
            raise InputError("noise_std must be >= 0")
        if self.rate <= 0:
            raise InputError("rate must be > 0")

    def to_dict(self) -> dict:
        return {
            "profile": dict(self.profile),
            "friction": dict(self.friction),
            "gravity": dict(self.gravity),
            "external": dict(self.external),
            "noise_std": self.noise_std,
            "rate": self.rate,
            "joint_id": self.joint_id,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SynthSpec":
        if not isinstance(data, dict):
            raise InputError("generator spec must be a JSON object")
        known = {
            "profile", "friction", "gravity", "external",
            "noise_std", "rate", "joint_id", "seed",
        }
        unknown = set(data) - known
        if unknown:
            raise InputError(f"unknown generator spec keys: {sorted(unknown)}")
        for required in ("profile", "friction"):
            if required not in data:
                raise InputError(f"generator spec needs a {required!r} entry")
        return cls(**data)


def _spec_fields(d: dict, kind: str, required: tuple[str, ...], optional: dict):
    """Validate a tagged sub-spec and return its fields with defaults."""
    unknown = set(d) - {"kind"} - set(required) - set(optional)
    if unknown:
        raise InputError(f"unknown keys in {kind} spec: {sorted(unknown)}")
    missing = [k for k in required if k not in d]
    if missing:
        raise InputError(f"{kind} spec missing keys: {missing}")
    out = {k: d[k] for k in required}
    for k, default in optional.items():
        out[k] = d.get(k, default)
    return out


def _profile_arrays(profile: dict, rate: float):
    kind = profile.get("kind")
    if kind == "constant_grid":
        f = _spec_fields(profile, "profile", ("count", "samples_per_level"),
                         {"min": -2.0, "max": 2.0})
        count, per = int(f["count"]), int(f["samples_per_level"])
        if count < 1 or per < 1:
            raise InputError("constant_grid needs count >= 1 and samples_per_level >= 1")
        levels = np.linspace(float(f["min"]), float(f["max"]), count)
        qdot = np.repeat(levels, per)
        movement = np.repeat(np.arange(count), per)
        return qdot, movement
    if kind == "levels":
        f = _spec_fields(profile, "profile", ("values", "samples_per_level"), {})
        values = np.asarray(f["values"], dtype=float)
        per = int(f["samples_per_level"])
        if values.size < 1 or per < 1:
            raise InputError("levels needs non-empty values and samples_per_level >= 1")
        qdot = np.repeat(values, per)
        movement = np.repeat(np.arange(values.size), per)
        return qdot, movement
    if kind == "trapezoid":
        f = _spec_fields(profile, "profile", ("plateaus",), {"ramp": 0.5})
        ramp_n = max(1, round(float(f["ramp"]) * rate))
        qdot_parts = []
        prev = 0.0
        for p in f["plateaus"]:
            pf = _spec_fields(dict(p, kind="plateau"), "plateau", ("velocity", "hold"), {})
            v, hold_n = float(pf["velocity"]), max(1, round(float(pf["hold"]) * rate))
            qdot_parts.append(np.linspace(prev, v, ramp_n, endpoint=False))
            qdot_parts.append(np.full(hold_n, v))
            prev = v
        if not qdot_parts:
            raise InputError("trapezoid needs at least one plateau")
        return np.concatenate(qdot_parts), None
    if kind == "sinusoid":
        f = _spec_fields(profile, "profile", ("amplitude", "period"), {"cycles": 1.0})
        period = float(f["period"])
        if period <= 0:
            raise InputError("sinusoid period must be > 0")
        n = max(2, round(period * float(f["cycles"]) * rate))
        t = np.arange(n) / rate
        return float(f["amplitude"]) * np.sin(2 * math.pi * t / period), None
    raise InputError(f"unknown velocity profile kind {kind!r}")


def _gravity_torque(gravity: dict, q: np.ndarray, movement: np.ndarray | None):
    kind = gravity.get("kind")
    if kind == "zero":
        _spec_fields(gravity, "gravity", (), {})
        return np.zeros_like(q)
    if kind == "constant":
        f = _spec_fields(gravity, "gravity", ("value",), {})
        return np.full_like(q, float(f["value"]))
    if kind == "sine":
        f = _spec_fields(gravity, "gravity", ("amplitude",), {"frequency": 1.0, "offset": 0.0})
        return float(f["amplitude"]) * np.sin(float(f["frequency"]) * q) + float(f["offset"])
    if kind == "levels":
        f = _spec_fields(gravity, "gravity", ("values",), {})
        values = np.asarray(f["values"], dtype=float)
        if movement is None:
            raise InputError("gravity levels require a movement-labelled profile")
        if values.size < 1:
            raise InputError("gravity levels must not be empty")
        return values[movement % values.size]
    raise InputError(f"unknown gravity kind {kind!r}")


def _friction_torque(friction: dict, qdot: np.ndarray, tau_g: np.ndarray):
    kind = friction.get("kind")
    if kind == "stribeck":
        f = {k: v for k, v in friction.items() if k != "kind"}
        try:
            params = StribeckParams.from_dict(f)
        except (KeyError, ValueError) as err:
            raise InputError(f"bad stribeck friction spec: {err}")
        return stribeck_eval(params, qdot)
    if kind == "stribeck_asym":
        f = _spec_fields(friction, "friction", ("positive", "negative"), {})
        try:
            model = AsymmetricStribeck.from_dict(f)
        except (KeyError, ValueError) as err:
            raise InputError(f"bad asymmetric friction spec: {err}")
        return asymmetric_eval(model, qdot)
    if kind == "expr":
        f = _spec_fields(friction, "friction", ("formula",), {"features": list(FEATURES)})
        names = normalize_features(f["features"])
        try:
            tree = ex.parse(f["formula"])
        except ex.ParseError as err:
            raise InputError(f"bad friction formula: {err}")
        X = feature_matrix(qdot, tau_g, names)
        try:
            return ex.evaluate(tree, X)
        except ex.ArityError as err:
            raise InputError(str(err))
    raise InputError(f"unknown friction kind {kind!r}")


def _external_torque(external: dict, t: np.ndarray):
    kind = external.get("kind")
    if kind == "none":
        _spec_fields(external, "external", (), {})
        return None
    if kind == "step":
        f = _spec_fields(external, "external", ("amplitude", "start", "stop"), {})
        start, stop = float(f["start"]), float(f["stop"])
        if stop <= start:
            raise InputError("external step needs stop > start")
        out = np.zeros_like(t)
        out[(t >= start) & (t < stop)] = float(f["amplitude"])
        return out
    raise InputError(f"unknown external-torque kind {kind!r}")


def synth_generate(spec: SynthSpec | dict) -> JointDataset:
    """Generate a joint log from a planted friction law.

    The motor torque follows the quasi-static balance
    ``tau_m = tau_g - tau_f - tau_ext`` plus Gaussian noise, so with zero
    noise ``friction_target`` recovers the planted law exactly wherever the
    external torque is zero.
    """
    if isinstance(spec, dict):
        spec = SynthSpec.from_dict(spec)
    qdot, movement = _profile_arrays(spec.profile, spec.rate)
    n = qdot.size
    t = np.arange(n) / spec.rate
    dt = 1.0 / spec.rate
    q = np.concatenate([[0.0], np.cumsum(0.5 * (qdot[1:] + qdot[:-1]) * dt)])

    tau_g = _gravity_torque(spec.gravity, q, movement)
    tau_f = _friction_torque(spec.friction, qdot, tau_g)
    tau_ext = _external_torque(spec.external, t)

    rng = np.random.default_rng(spec.seed)
    noise = rng.normal(0.0, spec.noise_std, size=n) if spec.noise_std > 0 else 0.0
    tau_m = tau_g - tau_f - (tau_ext if tau_ext is not None else 0.0) + noise

    return JointDataset(
        t=t,
        q=q,
        qdot=qdot,
        tau_m=tau_m,
        tau_g=tau_g,
        tau_ext=tau_ext,
        movement=movement,
        joint_id=spec.joint_id,
        rate=spec.rate,
        provenance={"kind": "synthetic", "generator": spec.to_dict()},
    )

"""Binary feature files, synthetic generators, CSV export, landscape grid.

Feature file layout (all integers little-endian):

    magic   4 bytes  b"RLFV"
    version u32      1
    count   u32      number of records
    fdim    u32      feature dimension
    ldim    u32      logit dimension, 0 when absent
    lflag   u32      1 when a label block is present
    labels  count * u32            (only when lflag == 1)
    payload count * (fdim + ldim) * f32, features then logits per record

Payloads are 32-bit floats on disk and widened to float64 in memory, so
a write/read round trip is bitwise exact for float32-representable data.
The reader rejects any header whose implied size mismatches the file.

Model files prepend a metadata header (beta, gamma, covering radius,
emission log variances, optional partition estimate) to an embedded
feature block holding the interaction matrix.
"""

import csv
import math
import struct
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from .energy import modern_energy
from .lagrangians import gate_value
from .probability import DensityModel, LogPartition
from .trainer import Dataset, GaussianEmission

MAGIC = b"RLFV"
VERSION = 1
_HEADER = struct.Struct("<4s5I")

MODEL_MAGIC = b"RLMD"
MODEL_VERSION = 1
_MODEL_HEADER = struct.Struct("<4sI3d I")
_PARTITION_BLOCK = struct.Struct("<2d q q")


class FeatureFileError(ValueError):
    """Malformed or inconsistent feature file."""


def _write_feature_block(fh, data):
    count, fdim = data.features.shape
    ldim = 0 if data.logits is None else data.logits.shape[1]
    lflag = 0 if data.labels is None else 1
    for name, value in (("count", count), ("feature_dim", fdim),
                        ("logit_dim", ldim)):
        if value >= 2 ** 32:
            raise FeatureFileError(f"{name} {value} overflows 32 bits")
    fh.write(_HEADER.pack(MAGIC, VERSION, count, fdim, ldim, lflag))
    if lflag:
        labels = np.asarray(data.labels)
        if labels.size and (np.any(labels < 0) or np.any(labels >= 2 ** 32)):
            raise FeatureFileError("labels must fit an unsigned 32-bit int")
        fh.write(labels.astype("<u4").tobytes())
    if ldim:
        payload = np.concatenate([data.features, data.logits], axis=1)
    else:
        payload = data.features
    fh.write(payload.astype("<f4").tobytes())


def _read_exact(fh, n, what, offset):
    buf = fh.read(n)
    if len(buf) != n:
        raise FeatureFileError(
            f"truncated file: expected {n} bytes for {what} at offset "
            f"{offset}, got {len(buf)}"
        )
    return buf


def _read_feature_block(fh, offset=0, expect_exhausted=True):
    raw = _read_exact(fh, _HEADER.size, "header", offset)
    magic, version, count, fdim, ldim, lflag = _HEADER.unpack(raw)
    if magic != MAGIC:
        raise FeatureFileError(
            f"bad magic {magic!r} at offset {offset}, expected {MAGIC!r}"
        )
    if version != VERSION:
        raise FeatureFileError(f"unsupported version {version}")
    if fdim < 1:
        raise FeatureFileError("feature_dim must be >= 1")
    pos = offset + _HEADER.size
    labels = None
    if lflag:
        buf = _read_exact(fh, count * 4, "label block", pos)
        labels = np.frombuffer(buf, dtype="<u4").astype(np.int64)
        pos += count * 4
    payload_bytes = count * (fdim + ldim) * 4
    buf = _read_exact(fh, payload_bytes, "payload", pos)
    pos += payload_bytes
    flat = np.frombuffer(buf, dtype="<f4").astype(np.float64)
    payload = flat.reshape(count, fdim + ldim)
    features = payload[:, :fdim]
    logits = payload[:, fdim:] if ldim else None
    if expect_exhausted and fh.read(1) != b"":
        raise FeatureFileError(
            f"trailing bytes after payload at offset {pos}"
        )
    return Dataset(features=features, labels=labels, logits=logits), pos


def write_features(path, data):
    """Serialize a Dataset; the round trip is bitwise for float32 data."""
    with open(path, "wb") as fh:
        _write_feature_block(fh, data)


def read_features(path):
    """Parse a feature file, validating magic, version, and exact size."""
    with open(path, "rb") as fh:
        data, _ = _read_feature_block(fh)
    return data


def write_density_model(path, model, emission):
    """Serialize a density model plus emission to a single binary file."""
    log_var = np.asarray(emission.log_variances, dtype=np.float64)
    with open(path, "wb") as fh:
        fh.write(_MODEL_HEADER.pack(
            MODEL_MAGIC, MODEL_VERSION, model.beta, model.gamma,
            model.sphere_radius, 1 if model.log_partition else 0,
        ))
        if model.log_partition:
            lp = model.log_partition
            fh.write(_PARTITION_BLOCK.pack(lp.estimate, lp.std_error,
                                           lp.n_samples, lp.seed))
        fh.write(struct.pack("<I", log_var.size))
        fh.write(log_var.astype("<f8").tobytes())
        _write_feature_block(fh, Dataset(features=model.xi))


def read_density_model(path):
    """Inverse of :func:`write_density_model`."""
    with open(path, "rb") as fh:
        raw = _read_exact(fh, _MODEL_HEADER.size, "model header", 0)
        magic, version, beta, gamma, radius, has_part = \
            _MODEL_HEADER.unpack(raw)
        if magic != MODEL_MAGIC:
            raise FeatureFileError(
                f"bad magic {magic!r} at offset 0, expected {MODEL_MAGIC!r}"
            )
        if version != MODEL_VERSION:
            raise FeatureFileError(f"unsupported model version {version}")
        pos = _MODEL_HEADER.size
        partition = None
        if has_part:
            raw = _read_exact(fh, _PARTITION_BLOCK.size, "partition", pos)
            est, se, n, seed = _PARTITION_BLOCK.unpack(raw)
            partition = LogPartition(estimate=est, std_error=se,
                                     n_samples=n, seed=seed)
            pos += _PARTITION_BLOCK.size
        raw = _read_exact(fh, 4, "log-variance length", pos)
        (n_lv,) = struct.unpack("<I", raw)
        pos += 4
        raw = _read_exact(fh, n_lv * 8, "log variances", pos)
        log_var = np.frombuffer(raw, dtype="<f8").astype(np.float64)
        pos += n_lv * 8
        xi_data, _ = _read_feature_block(fh, offset=pos)
    # interaction rows travel as float32; widened like any feature payload
    model = DensityModel(xi=xi_data.features, beta=beta, gamma=gamma,
                         sphere_radius=radius, log_partition=partition)
    return model, GaussianEmission(log_variances=log_var)


def gen_gaussian_mixture(n_clusters, per_cluster, dim, center_scale,
                         noise_sigma, seed=0):
    """Well-separated Gaussian clusters with cluster-index labels.

    Centers are drawn uniformly in [-center_scale, center_scale]^dim and
    re-drawn until all pairwise distances reach 4 * noise_sigma; more
    than 10^4 rejections is an error (centers too dense for the box).
    """
    if n_clusters < 1 or per_cluster < 1 or dim < 1:
        raise ValueError("counts and dimension must be positive")
    if noise_sigma <= 0:
        raise ValueError("noise_sigma must be positive")
    rng = np.random.default_rng(seed)
    centers = []
    tries = 0
    while len(centers) < n_clusters:
        cand = rng.uniform(-center_scale, center_scale, size=dim)
        tries += 1
        if tries > 10_000:
            raise RuntimeError(
                "could not place cluster centers with pairwise distance "
                f">= {4 * noise_sigma} after 10000 tries"
            )
        if all(np.linalg.norm(cand - c) >= 4.0 * noise_sigma
               for c in centers):
            centers.append(cand)
    feats = []
    labels = []
    for k, c in enumerate(centers):
        feats.append(c[None, :] + noise_sigma
                     * rng.standard_normal((per_cluster, dim)))
        labels.extend([k] * per_cluster)
    return Dataset(features=np.concatenate(feats, axis=0),
                   labels=np.array(labels, dtype=np.int64))


def gen_uniform_ring(n, dim=2, r_inner=1.0, r_outer=2.0, seed=0):
    """Uniform samples in the annulus r_inner <= ||x|| <= r_outer.

    The radial law is volume-correct in any dimension.
    """
    if n < 1:
        raise ValueError("n must be positive")
    if not 0.0 < r_inner < r_outer:
        raise ValueError(
            f"need 0 < r_inner < r_outer, got ({r_inner}, {r_outer})"
        )
    rng = np.random.default_rng(seed)
    dirs = rng.standard_normal((n, dim))
    norms = np.linalg.norm(dirs, axis=1)
    norms[norms == 0.0] = 1.0
    u = rng.random(n)
    radii = (u * (r_outer ** dim - r_inner ** dim) + r_inner ** dim) \
        ** (1.0 / dim)
    return Dataset(features=dirs * (radii / norms)[:, None])


@dataclass
class LandscapeGrid:
    """Per-node landscape quantities on a 2-d evaluation grid.

    Column arrays all have length resolution**2; the basin flag is
    exactly (gate < 0) row by row.
    """

    bounds: Tuple[float, float, float, float]
    resolution: int
    x: np.ndarray
    y: np.ndarray
    energy: np.ndarray
    gate: np.ndarray
    basin: np.ndarray
    log_density: np.ndarray

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["x", "y", "energy", "gate", "basin", "log_density"])
            for x, y, e, g, b, d in zip(self.x, self.y, self.energy,
                                        self.gate, self.basin,
                                        self.log_density):
                w.writerow([repr(float(x)), repr(float(y)), repr(float(e)),
                            repr(float(g)), int(b), repr(float(d))])


def export_landscape(model, mem=None, bounds=None, resolution=128):
    """Evaluate energy, gate, basin flag, and log density on a 2-d grid.

    Only defined for two feature dimensions. The unnormalized log
    density is log gamma + G; the normalizer is a constant shift and is
    not needed for the picture.
    """
    if model.n_features != 2:
        raise ValueError(
            f"landscape export needs N_V = 2, got {model.n_features}"
        )
    if resolution < 2:
        raise ValueError("resolution must be >= 2")
    beta = mem.beta if mem is not None else model.beta
    if bounds is None:
        bounds = default_demo_bounds()
    x_min, x_max, y_min, y_max = bounds
    xs = np.linspace(x_min, x_max, resolution)
    ys = np.linspace(y_min, y_max, resolution)
    gx, gy = np.meshgrid(xs, ys, indexing="ij")
    nodes = np.column_stack([gx.ravel(), gy.ravel()])
    energy = modern_energy(model.xi, nodes, beta)
    gate = gate_value(model.xi, nodes, beta, model.gamma)
    return LandscapeGrid(
        bounds=(x_min, x_max, y_min, y_max),
        resolution=resolution,
        x=nodes[:, 0],
        y=nodes[:, 1],
        energy=np.asarray(energy),
        gate=np.asarray(gate),
        basin=np.asarray(gate) < 0.0,
        log_density=math.log(model.gamma) + np.asarray(gate),
    )


def demo_model():
    """Small 2-d model reproducing the qualitative landscape structure.

    Five stored patterns of norm 1.5, the first pointing at the corner
    of the default bounds; beta 3, gamma 1.2 * N_H so the origin basin
    exists and stays well inside the frame.
    """
    angles = np.deg2rad([45.0, 117.0, 189.0, 261.0, 333.0])
    xi = 1.5 * np.column_stack([np.cos(angles), np.sin(angles)])
    return DensityModel(xi=xi, beta=3.0, gamma=1.2 * xi.shape[0],
                        sphere_radius=2.5)


def default_demo_bounds():
    """Square window whose corner coincides with the first demo pattern."""
    half = 1.5 / math.sqrt(2.0)
    return (-half, half, -half, half)


def write_loss_csv(path, history):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["epoch", "mean_log_objective"])
        for epoch, value in enumerate(history):
            w.writerow([epoch, repr(float(value))])


def write_metrics_csv(path, rows):
    """rows: iterables of (scorer, dataset_pair, fpr95, auroc)."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["scorer", "dataset_pair", "fpr95", "auroc"])
        for scorer, pair, fpr95, auroc in rows:
            w.writerow([scorer, pair, repr(float(fpr95)),
                        repr(float(auroc))])


def write_roc_csv(path, metrics):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["fpr", "tpr"])
        for fpr, tpr in metrics.roc:
            w.writerow([repr(float(fpr)), repr(float(tpr))])


def write_trajectory_csv(path, traj):
    """Rows (k, v components..., energy); energy empty when untracked."""
    dim = traj.states.shape[1]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["k"] + [f"v{i}" for i in range(dim)] + ["energy"])
        for k, state in enumerate(traj.states):
            energy = "" if traj.energies is None \
                else repr(float(traj.energies[k]))
            w.writerow([k] + [repr(float(s)) for s in state] + [energy])

"""SLK driver: parallel z-updates (inner loop) alternating with mode updates (outer loop)."""

from __future__ import annotations

import csv
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.special import softmax

from .affinity import (
    KernelSpec,
    SparseAffinity,
    build_knn_affinity,
    estimate_bandwidth,
    resolve_threads,
    row_blocks,
)
from .core import (
    ModeSet,
    SlkConfig,
    bound_coupling,
    check_assignment,
    discrete_objective,
    hard_labels,
    mode_affinities,
    one_hot,
    relaxed_from_buffers,
)
from .dataset import Dataset
from .errors import ConfigError, ShapeError
from .modes import byproduct_mode, initial_bo_modes, mean_shift_mode
from .seeding import kmeanspp_seeds

log = logging.getLogger(__name__)

EMPTY_MASS_FRACTION = 1e-6
TRACE_COLUMNS = ("outer_iter", "inner_iter", "relaxed_obj", "discrete_obj", "max_row_delta", "mode_change")


@dataclass
class UpdateBuffers:
    a: np.ndarray
    b: np.ndarray


@dataclass
class InnerResult:
    Z: np.ndarray
    relaxed: list = field(default_factory=list)
    deltas: list = field(default_factory=list)
    converged: bool = False

    @property
    def iterations(self) -> int:
        return len(self.deltas)


@dataclass
class Trace:
    """Per-inner-iteration relaxed objective and per-outer-iteration summaries.

    ``rows`` follow TRACE_COLUMNS (shifted affinity); ``outer`` entries also
    carry the relaxed objective under the unshifted affinity.
    """

    rows: list = field(default_factory=list)
    outer: list = field(default_factory=list)

    def inner_relaxed(self, outer_iter: int) -> list:
        return [r["relaxed_obj"] for r in self.rows if r["outer_iter"] == outer_iter]

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=TRACE_COLUMNS)
            writer.writeheader()
            for row in self.rows:
                writer.writerow({k: ("" if row.get(k) is None else row[k]) for k in TRACE_COLUMNS})


@dataclass
class ClusterResult:
    labels: np.ndarray
    Z: np.ndarray
    modes: ModeSet
    trace: Trace
    sigma2: float
    outer_iterations: int
    inner_iterations: int
    converged: bool
    relaxed: float
    relaxed_unshifted: float
    discrete: float


def _map_blocks(fn, n, threads):
    blocks = row_blocks(n, threads)
    if len(blocks) == 1:
        fn(blocks[0])
        return
    with ThreadPoolExecutor(max_workers=len(blocks)) as pool:
        list(pool.map(fn, blocks))


def build_update_vectors(ds: Dataset, aff: SparseAffinity, ks: KernelSpec, Z, modes: ModeSet,
                         threads: int = 1, a=None) -> UpdateBuffers:
    """a = k(x_p, m_l) and b = (K + shift I) Z from the snapshot (Z, modes)."""
    Z = np.asarray(Z, dtype=np.float64)
    if Z.shape != (ds.n, len(modes)):
        raise ShapeError(f"Z shape {Z.shape} does not match N={ds.n}, L={len(modes)}")
    if a is None:
        a = mode_affinities(ds, ks, modes)
    return UpdateBuffers(a, aff.matmul(Z, shifted=True, threads=threads))


def z_update(buffers: UpdateBuffers, lam: float, threads: int = 1) -> np.ndarray:
    """Row-wise softmax of a_p + lam * b_p.

    ``lam`` is the weight on b as it enters the update; the driver passes
    ``bound_coupling(lambda)``.
    """
    logits = buffers.a + lam * buffers.b
    out = np.empty_like(logits)

    def work(rows):
        out[rows] = softmax(logits[rows], axis=1)

    _map_blocks(work, logits.shape[0], threads)
    return out


def initialize_z(ds: Dataset, ks: KernelSpec, modes: ModeSet) -> np.ndarray:
    return softmax(mode_affinities(ds, ks, modes), axis=1)


def inner_loop(ds, aff, ks, Z0, modes: ModeSet, cfg: SlkConfig, a=None) -> InnerResult:
    """Jacobi z-updates until the largest entry change drops below ``cfg.inner_tol``.

    ``relaxed`` holds R at Z0 and after every update.
    """
    Z = check_assignment(Z0, ds.n)
    threads = resolve_threads(cfg.threads)
    if a is None:
        a = mode_affinities(ds, ks, modes)
    coupling = bound_coupling(cfg.lam)
    res = InnerResult(Z)
    buf = build_update_vectors(ds, aff, ks, Z, modes, threads, a)
    res.relaxed.append(relaxed_from_buffers(Z, a, buf.b, cfg.lam))
    for _ in range(cfg.inner_max):
        Z_new = z_update(buf, coupling, threads)
        delta = float(np.abs(Z_new - Z).max())
        Z = Z_new
        buf = build_update_vectors(ds, aff, ks, Z, modes, threads, a)
        res.relaxed.append(relaxed_from_buffers(Z, a, buf.b, cfg.lam))
        res.deltas.append(delta)
        if delta < cfg.inner_tol:
            res.converged = True
            break
    res.Z = Z
    return res


def _rescue_empty(Z, mode_idx, vectors, ds, cfg):
    """Reseed clusters without mass to the most ambiguous points."""
    n, L = Z.shape
    mass = Z.sum(0)
    empty = np.flatnonzero(mass < EMPTY_MASS_FRACTION * n / L)
    if empty.size:
        order = np.argsort(Z.max(1), kind="stable")
        for l, p in zip(empty, order):
            log.info("cluster %d is empty; reseeding its mode at point %d", l, p)
            mode_idx[l] = p
            vectors[l] = ds.points[p]
    return empty


def update_modes(ds, ks, Z, modes: ModeSet, cfg: SlkConfig):
    """One outer mode update.  Returns (new ModeSet, change measure, converged)."""
    L = Z.shape[1]
    idx = np.array(modes.indices, copy=True)
    vectors = np.array(modes.vectors, copy=True)
    mass = Z.sum(0)
    live = mass >= EMPTY_MASS_FRACTION * ds.n / L
    for l in np.flatnonzero(live):
        if cfg.mode_variant == "bo":
            idx[l] = byproduct_mode(Z, l)
            vectors[l] = ds.points[idx[l]]
        else:
            vectors[l] = mean_shift_mode(ds, ks, Z[:, l], modes.vectors[l], cfg.ms_tol, cfg.ms_max)
            idx[l] = -1
    rescued = _rescue_empty(Z, idx, vectors, ds, cfg)
    new = ModeSet(vectors, idx)
    if cfg.mode_variant == "bo":
        change = int((new.indices != modes.indices).sum())
        converged = change == 0
    else:
        change = float(np.linalg.norm(new.vectors - modes.vectors, axis=1).max())
        converged = change < cfg.ms_tol * ks.sigma
    return new, change, converged and rescued.size == 0


def run_slk(ds: Dataset, cfg: SlkConfig, aff: SparseAffinity | None = None, ks: KernelSpec | None = None,
            seeds=None) -> ClusterResult:
    """Cluster ``ds`` into ``cfg.num_clusters`` groups with Scalable Laplacian K-modes."""
    L = cfg.num_clusters
    if ds.n <= L:
        raise ConfigError(f"need N > L, got N={ds.n}, L={L}")
    if aff is None:
        aff = build_knn_affinity(ds, cfg.k_n, cfg.knn_method)
    if ks is None:
        ks = KernelSpec(cfg.sigma2) if cfg.sigma2 is not None else estimate_bandwidth(ds, aff)
    if seeds is None:
        seeds = kmeanspp_seeds(ds, L, cfg.seed)
    modes = ModeSet.from_indices(ds, seeds)
    if cfg.mode_variant == "bo":
        modes = initial_bo_modes(ds, ks, initialize_z(ds, ks, modes), modes)

    trace = Trace()
    total_inner = 0
    converged = False
    outer = 0
    for outer in range(1, cfg.outer_max + 1):
        a = mode_affinities(ds, ks, modes)
        inner = inner_loop(ds, aff, ks, softmax(a, axis=1), modes, cfg, a=a)
        total_inner += inner.iterations
        Z = inner.Z
        for i, value in enumerate(inner.relaxed):
            trace.rows.append({
                "outer_iter": outer, "inner_iter": i, "relaxed_obj": value, "discrete_obj": None,
                "max_row_delta": inner.deltas[i - 1] if i else None, "mode_change": None,
            })
        new_modes, change, converged = update_modes(ds, ks, Z, modes, cfg)
        labels = hard_labels(Z)
        energy = discrete_objective(ds, aff, ks, one_hot(labels, L), new_modes, cfg.lam)
        trace.rows[-1]["discrete_obj"] = energy
        trace.rows[-1]["mode_change"] = change
        trace.outer.append({
            "outer_iter": outer, "inner_iterations": inner.iterations, "inner_converged": inner.converged,
            "discrete_obj": energy, "mode_change": change,
            "relaxed_unshifted": relaxed_unshifted(ds, aff, ks, Z, modes, cfg.lam),
        })
        log.debug("outer %d: %d inner iterations, E=%.6g, mode change %s", outer, inner.iterations, energy, change)
        modes = new_modes
        if converged:
            break

    labels = hard_labels(Z)
    return ClusterResult(
        labels=labels, Z=Z, modes=modes, trace=trace, sigma2=ks.sigma2, outer_iterations=outer,
        inner_iterations=total_inner, converged=converged, relaxed=inner.relaxed[-1],
        relaxed_unshifted=trace.outer[-1]["relaxed_unshifted"], discrete=trace.outer[-1]["discrete_obj"],
    )


def relaxed_unshifted(ds, aff, ks, Z, modes, lam) -> float:
    a = mode_affinities(ds, ks, modes)
    return relaxed_from_buffers(Z, a, aff.matmul(Z, shifted=False), lam)

"""
Loss evaluators for the online diarization model (no gradients).

All values are float64 means: BCE is averaged over frames and speakers,
cross-entropy over attractors, and chunk-level terms over chunks.
"""
import itertools
from dataclasses import dataclass
from typing import Sequence, Tuple, Union

import numpy as np
from scipy.optimize import linear_sum_assignment

from .cluster import NEW, Assignment, AssignmentProbs
from .errors import ContractViolation

EPS = 1e-7
CHUNK_LOSS_WEIGHT = 10.0


def bce(p, y) -> np.ndarray:
    """Elementwise binary cross-entropy with p clamped to [EPS, 1 - EPS]."""
    p = np.clip(np.asarray(p, dtype=np.float64), EPS, 1.0 - EPS)
    y = np.asarray(y, dtype=np.float64)
    return -(y * np.log(p) + (1.0 - y) * np.log(1.0 - p))


def existence_loss(z_hat, n_speakers: int) -> float:
    """Mean BCE of S+1 existence probabilities against [1, ..., 1, 0]."""
    z_hat = np.asarray(z_hat, dtype=np.float64).reshape(-1)
    if z_hat.shape[0] != n_speakers + 1:
        raise ContractViolation(f"expected {n_speakers + 1} existence probabilities, got {z_hat.shape[0]}")
    target = np.zeros(n_speakers + 1)
    target[:n_speakers] = 1.0
    return float(bce(z_hat, target).mean())


def _check_reference(y: np.ndarray) -> None:
    if not np.all((y == 0) | (y == 1)):
        raise ContractViolation("reference labels must be 0 or 1")


def _pairwise_cost(y_hat: np.ndarray, y: np.ndarray) -> np.ndarray:
    """cost[i, j] = mean over frames of BCE(y_hat[i], y[j])."""
    p = np.clip(y_hat, EPS, 1.0 - EPS)
    log_p, log_q = np.log(p), np.log(1.0 - p)
    return -(log_p @ y.T + log_q @ (1.0 - y).T) / y.shape[1]


def _prepare(y_hat, y) -> Tuple[np.ndarray, np.ndarray]:
    y_hat = np.atleast_2d(np.asarray(y_hat, dtype=np.float64))
    y = np.atleast_2d(np.asarray(y, dtype=np.float64))
    if y_hat.shape != y.shape:
        raise ContractViolation(f"posteriors {y_hat.shape} and reference {y.shape} differ in shape")
    if y.shape[1] == 0:
        raise ContractViolation("diarization loss needs at least one frame")
    _check_reference(y)
    return y_hat, y


def pit_diarization_loss(y_hat, y) -> Tuple[float, Tuple[int, ...]]:
    """
    Permutation-free BCE: min over speaker permutations of the mean BCE.

    Returns the loss and ``perm`` with ``perm[i]`` = reference row matched
    to hypothesis row ``i``.
    """
    y_hat, y = _prepare(y_hat, y)
    n = y.shape[0]
    if n == 0:
        return 0.0, ()
    cost = _pairwise_cost(y_hat, y)
    rows, cols = linear_sum_assignment(cost)
    perm = tuple(int(c) for c in cols[np.argsort(rows)])
    return float(cost[np.arange(n), perm].sum() / n), perm


def pit_diarization_loss_exhaustive(y_hat, y) -> Tuple[float, Tuple[int, ...]]:
    """Same as :func:`pit_diarization_loss` by enumerating every permutation."""
    y_hat, y = _prepare(y_hat, y)
    n = y.shape[0]
    if n == 0:
        return 0.0, ()
    cost = _pairwise_cost(y_hat, y)
    best, best_perm = np.inf, None
    for perm in itertools.permutations(range(n)):
        value = cost[np.arange(n), perm].sum() / n
        if value < best:
            best, best_perm = value, perm
    return float(best), tuple(best_perm)


@dataclass(frozen=True)
class ChunkTarget:
    """Model outputs for one chunk together with its reference."""

    posteriors: np.ndarray   # S_n x T_n
    existence: np.ndarray    # S_n + 1
    reference: np.ndarray    # S_n x T_n, binary

    @property
    def n_speakers(self) -> int:
        return np.atleast_2d(self.reference).shape[0]


def eend_eda_loss(chunks: Union[ChunkTarget, Sequence[ChunkTarget]]) -> float:
    """
    Diarization + existence loss, each averaged over chunks.

    A single ``ChunkTarget`` covering the whole recording gives the global form.
    """
    if isinstance(chunks, ChunkTarget):
        chunks = [chunks]
    if not chunks:
        raise ContractViolation("eend_eda_loss needs at least one chunk")
    diar = np.mean([pit_diarization_loss(c.posteriors, c.reference)[0] for c in chunks])
    exist = np.mean([existence_loss(c.existence, c.n_speakers) for c in chunks])
    return float(diar + exist)


def one_hot_targets(assignment: Assignment) -> np.ndarray:
    """Rows over C + 1 classes; NEW maps to the last (h0) column."""
    out = np.zeros((len(assignment), assignment.n_centroids + 1))
    for i, target in assignment.pairs:
        out[i, assignment.n_centroids if target == NEW else target] = 1.0
    return out


def clustering_ce(probs, reference) -> float:
    """
    Cross-entropy of the assignment probabilities against one-hot targets.

    Accepts one chunk (``AssignmentProbs``, S_n x (C+1) array) or aligned
    sequences of them; the result is averaged over attractors, then chunks.
    Chunks without attractors do not contribute.
    """
    if isinstance(probs, AssignmentProbs):
        probs, reference = [probs], [reference]
    if len(probs) != len(reference):
        raise ContractViolation(f"{len(probs)} probability chunks but {len(reference)} reference chunks")

    per_chunk = []
    for p, r in zip(probs, reference):
        p = np.asarray(p.p if isinstance(p, AssignmentProbs) else p, dtype=np.float64)
        r = np.asarray(r, dtype=np.float64)
        if p.shape != r.shape:
            raise ContractViolation(f"probabilities {p.shape} and reference {r.shape} differ in shape")
        if p.shape[0] == 0:
            continue
        if not (np.all((r == 0) | (r == 1)) and np.all(r.sum(axis=1) == 1)):
            raise ContractViolation("reference rows must be one-hot")
        true_p = np.clip(p[r.astype(bool)], EPS, 1.0)
        per_chunk.append(float(np.mean(-np.log(true_p))))
    return float(np.mean(per_chunk)) if per_chunk else 0.0


def cluster_diar_loss(stitched, reference) -> float:
    """
    PIT BCE on the stitched global output.

    The side with fewer speakers is padded: the hypothesis with all-EPS rows,
    the reference with all-zero rows.
    """
    y_hat = np.atleast_2d(np.asarray(stitched, dtype=np.float64))
    y = np.atleast_2d(np.asarray(reference, dtype=np.float64))
    if y_hat.shape[1] != y.shape[1]:
        raise ContractViolation(f"stitched output has {y_hat.shape[1]} frames, reference {y.shape[1]}")
    n = max(y_hat.shape[0], y.shape[0])
    if y_hat.shape[0] < n:
        y_hat = np.vstack([y_hat, np.full((n - y_hat.shape[0], y.shape[1]), EPS)])
    if y.shape[0] < n:
        y = np.vstack([y, np.zeros((n - y.shape[0], y.shape[1]))])
    return pit_diarization_loss(y_hat, y)[0]


def total_loss(global_loss: float, chunk_loss: float, ce_loss: float, cluster_loss: float) -> float:
    parts = (global_loss, chunk_loss, ce_loss, cluster_loss)
    if not all(np.isfinite(parts)):
        raise ContractViolation(f"loss components must be finite, got {parts}")
    return float(global_loss + CHUNK_LOSS_WEIGHT * chunk_loss + ce_loss + cluster_loss)

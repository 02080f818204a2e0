"""
Online neural clustering used to stitch chunk predictions together.

Each discovered speaker is the hidden state of a GRU (a *centroid*); every
GRU starts from the shared embedding h0, which also acts as the "new speaker"
class when attractors are assigned. Matching maximises the total
log-probability of the assignment, so a chunk can open several new speakers
but never maps two attractors onto the same existing centroid.
"""
from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np
import torch
from loguru import logger
from scipy.optimize import linear_sum_assignment

from .errors import ContractViolation
from .model.eend_eda import LocalPosteriors
from .model.gru import GruCell
from .model.network import OnlineDiarizationNetwork

NEW = -1
"""Assignment target meaning "matched to h0, open a new centroid"."""

# Cost of a forbidden cell while resolving ties; far above any -log p.
_FORBIDDEN = 1e12
_TINY = np.finfo(np.float64).tiny


@dataclass(frozen=True)
class CentroidBank:
    """D x C centroids plus the shared GRU and its initial state h0."""

    centroids: torch.Tensor
    h0: torch.Tensor
    gru: GruCell

    @classmethod
    def empty(cls, net: OnlineDiarizationNetwork) -> "CentroidBank":
        h0 = net.h0.detach()
        return cls(centroids=h0.new_zeros(h0.shape[0], 0), h0=h0, gru=net.gru)

    @property
    def n_centroids(self) -> int:
        return self.centroids.shape[1]


@dataclass(frozen=True)
class AssignmentProbs:
    """S_n x (C + 1) row-stochastic matrix; the last column is h0."""

    p: np.ndarray

    @property
    def n_attractors(self) -> int:
        return self.p.shape[0]

    @property
    def n_centroids(self) -> int:
        return self.p.shape[1] - 1


@dataclass(frozen=True)
class Assignment:
    """
    One target per attractor: an existing centroid index or :data:`NEW`.

    NEW targets receive fresh indices C, C+1, ... in attractor order.
    """

    targets: Tuple[int, ...]
    n_centroids: int
    log_prob: float = 0.0

    def __len__(self) -> int:
        return len(self.targets)

    @property
    def n_new(self) -> int:
        return sum(1 for t in self.targets if t == NEW)

    @property
    def resolved(self) -> Tuple[int, ...]:
        """Global speaker index of every attractor."""
        fresh = iter(range(self.n_centroids, self.n_centroids + self.n_new))
        return tuple(next(fresh) if t == NEW else t for t in self.targets)

    @property
    def pairs(self) -> List[Tuple[int, int]]:
        return list(enumerate(self.targets))

    @classmethod
    def empty(cls, n_centroids: int) -> "Assignment":
        return cls(targets=(), n_centroids=n_centroids)


@torch.no_grad()
def assignment_probs(
    refined_centroids: torch.Tensor,
    h0: torch.Tensor,
    refined_attractors: torch.Tensor,
) -> AssignmentProbs:
    """Softmax over [H' columns..., h0] of the dot products with each attractor."""
    candidates = torch.cat([refined_centroids, h0[:, None]], dim=1)
    logits = (refined_attractors.T @ candidates).double().numpy()
    logits -= logits.max(axis=1, keepdims=True)
    p = np.exp(logits)
    p /= p.sum(axis=1, keepdims=True)
    return AssignmentProbs(p)


def _solve(cost: np.ndarray, n_centroids: int) -> Tuple[int, ...]:
    rows, cols = linear_sum_assignment(cost)
    targets = [NEW] * cost.shape[0]
    for r, c in zip(rows, cols):
        targets[r] = int(c) if c < n_centroids else NEW
    return tuple(targets)


def _total(logp: np.ndarray, targets: Sequence[int]) -> float:
    c = logp.shape[1] - 1
    return float(sum(logp[i, c if t == NEW else t] for i, t in enumerate(targets)))


def match(probs: AssignmentProbs) -> Assignment:
    """
    Maximise sum_i log p[i, target(i)] with distinct existing targets.

    Solved as a linear assignment over the C centroid columns plus S_n copies
    of the h0 column. Among optimal assignments the lexicographically
    smallest target vector wins (NEW ranks after every existing index).
    """
    n_attr, n_cent = probs.n_attractors, probs.n_centroids
    if n_attr == 0:
        return Assignment.empty(n_cent)

    logp = np.log(np.maximum(probs.p, _TINY))
    cost = np.concatenate([-logp[:, :n_cent], np.repeat(-logp[:, n_cent:], n_attr, axis=1)], axis=1)

    best = _solve(cost, n_cent)
    best_value = _total(logp, best)

    forced = cost.copy()
    for i in range(n_attr):
        options = [j for j in range(n_cent) if j not in best[:i]] + [NEW]
        for j in options:
            if j == best[i]:
                break
            trial = forced.copy()
            trial[i, :] = _FORBIDDEN
            if j == NEW:
                trial[i, n_cent:] = forced[i, n_cent:]
            else:
                trial[i, j] = forced[i, j]
            candidate = _solve(trial, n_cent)
            value = _total(logp, candidate)
            if candidate[i] == j and value >= best_value:
                best, best_value = candidate, value
                break
        # Pin attractor i to its final target for the remaining rows.
        pinned = forced[i].copy()
        forced[i, :] = _FORBIDDEN
        if best[i] == NEW:
            forced[i, n_cent:] = pinned[n_cent:]
        else:
            forced[i, best[i]] = pinned[best[i]]

    return Assignment(targets=best, n_centroids=n_cent, log_prob=best_value)


@torch.no_grad()
def gru_cell(x: torch.Tensor, h: torch.Tensor, gru: GruCell) -> torch.Tensor:
    return gru(x, h)


@torch.no_grad()
def update_centroids(
    bank: CentroidBank,
    refined_attractors: torch.Tensor,
    assignment: Assignment,
) -> CentroidBank:
    """
    GRU update of the centroid bank along a given assignment.

    Matched centroids step once with their attractor, NEW targets append
    GRU(a, h0), and every other centroid is carried over untouched.
    """
    if assignment.n_centroids != bank.n_centroids:
        raise ContractViolation(
            f"assignment was computed for {assignment.n_centroids} centroids, bank has {bank.n_centroids}"
        )
    if len(assignment) != refined_attractors.shape[1]:
        raise ContractViolation(
            f"assignment covers {len(assignment)} attractors, got {refined_attractors.shape[1]}"
        )
    if len(assignment) == 0:
        return bank

    centroids = bank.centroids.clone()
    created = []
    for i, target in assignment.pairs:
        a = refined_attractors[:, i]
        if target == NEW:
            created.append(gru_cell(a, bank.h0, bank.gru))
        else:
            centroids[:, target] = gru_cell(a, bank.centroids[:, target], bank.gru)
    if created:
        centroids = torch.cat([centroids, torch.stack(created, dim=1)], dim=1)
        logger.debug("opened {} new centroid(s), C = {}", len(created), centroids.shape[1])
    return CentroidBank(centroids=centroids, h0=bank.h0, gru=bank.gru)


def permute_local(local: LocalPosteriors, assignment: Assignment) -> torch.Tensor:
    """
    Re-index chunk rows by global speaker id.

    Returns a (C + n_new) x T matrix; speakers not present in the chunk get
    all-zero rows.
    """
    if local.n_speakers != len(assignment):
        raise ContractViolation(
            f"{local.n_speakers} posterior rows but {len(assignment)} assignment targets"
        )
    n_global = assignment.n_centroids + assignment.n_new
    out = local.data.new_zeros(n_global, local.n_frames)
    for row, index in enumerate(assignment.resolved):
        out[index] = local.data[row]
    return out

"""Potentials, marginal inference and decoding for one state layer.

Temporal cliques attach to the already decoded previous layer, so each
step is a single-layer pairwise CRF whose unaries carry the temporal
evidence. Marginals come from log-space loopy belief propagation, with
brute-force enumeration available as an oracle on tiny grids.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .fields import (
    BACKGROUND,
    PAIRWISE_FAMILIES,
    SILHOUETTE,
    UNARY_FAMILIES,
    CliqueSet,
    LabelField,
    ModelParams,
)

MAX_EXACT_NODES = 20


@dataclass(frozen=True)
class PotentialTable:
    """Log-potentials: ``unary`` is ``(n, 2)``, ``pairwise`` is ``(E, 2, 2)``
    indexed ``[label_i, label_j]`` for ``edges[e] = (i, j)``."""

    unary: np.ndarray
    pairwise: np.ndarray
    edges: np.ndarray
    height: int
    width: int

    def __post_init__(self):
        unary = np.asarray(self.unary, dtype=np.float64).reshape(-1, 2)
        edges = np.asarray(self.edges, dtype=np.int64).reshape(-1, 2)
        pairwise = np.asarray(self.pairwise, dtype=np.float64).reshape(-1, 2, 2)
        if unary.shape[0] != self.height * self.width:
            raise ValueError("unary table does not match the grid size")
        if pairwise.shape[0] != edges.shape[0]:
            raise ValueError("pairwise table does not match the edge list")
        if not (np.all(np.isfinite(unary)) and np.all(np.isfinite(pairwise))):
            raise ValueError("potentials must be finite")
        object.__setattr__(self, "unary", unary)
        object.__setattr__(self, "pairwise", pairwise)
        object.__setattr__(self, "edges", edges)

    @property
    def n_nodes(self) -> int:
        return self.unary.shape[0]


@dataclass(frozen=True)
class MarginalField:
    """Per-node probability of the silhouette label.

    ``pairwise`` optionally carries edge marginals ``(E, 2, 2)``; ``log_z``
    is exact for enumeration and the Bethe estimate for BP.
    """

    p0: np.ndarray
    pairwise: np.ndarray | None = None
    log_z: float | None = None
    converged: bool = True
    iterations: int = 0
    exact: bool = False

    @property
    def p1(self) -> np.ndarray:
        return 1.0 - self.p0

    @property
    def shape(self) -> tuple[int, int]:
        return self.p0.shape


@dataclass(frozen=True)
class BPSettings:
    damping: float = 0.5
    tolerance: float = 1e-5
    max_iter: int = 200

    def __post_init__(self):
        if not 0.0 <= self.damping < 1.0:
            raise ValueError(f"damping must lie in [0, 1), got {self.damping}")
        if not self.tolerance > 0:
            raise ValueError("tolerance must be > 0")
        if int(self.max_iter) != self.max_iter or self.max_iter < 1:
            raise ValueError("max_iter must be an integer >= 1")


@dataclass(frozen=True)
class FeatureStack:
    """Per-family feature values on one layer.

    ``unary[k]`` is ``(n, 2)`` and ``pairwise[k]`` is ``(E, 2, 2)``; a
    family contributes zeros to the kind of clique it does not live on.
    """

    families: tuple[str, ...]
    unary: np.ndarray
    pairwise: np.ndarray
    edges: np.ndarray
    height: int
    width: int

    def potentials(self, params: ModelParams) -> PotentialTable:
        if tuple(params.families) != tuple(self.families):
            raise ValueError(f"parameter families {params.families} != {self.families}")
        w = params.weights
        return PotentialTable(
            unary=np.tensordot(w, self.unary, axes=1),
            pairwise=np.tensordot(w, self.pairwise, axes=1),
            edges=self.edges,
            height=self.height,
            width=self.width,
        )

    def totals(self, labels: np.ndarray) -> np.ndarray:
        """Feature sums ``F_k(y)`` of a full labelling, one per family."""
        y = np.asarray(labels, dtype=np.int64).ravel()
        n = y.shape[0]
        out = self.unary[:, np.arange(n), y].sum(axis=1)
        if self.edges.shape[0]:
            e = self.edges
            out = out + self.pairwise[:, np.arange(e.shape[0]), y[e[:, 0]], y[e[:, 1]]].sum(axis=1)
        return out

    def expected(self, marginals: MarginalField) -> np.ndarray:
        """Model expectation of each family's feature sum."""
        p0 = marginals.p0.ravel()
        node = np.stack([p0, 1.0 - p0], axis=1)
        out = np.einsum("kny,ny->k", self.unary, node)
        if self.edges.shape[0]:
            if marginals.pairwise is None:
                raise ValueError("edge marginals are required for pairwise families")
            out = out + np.einsum("keab,eab->k", self.pairwise, marginals.pairwise)
        return out


def temporal_unary(prev_labels: LabelField, cliques: CliqueSet) -> np.ndarray:
    """``(n, 2)`` temporal feature: +1 when the label copies its t-1 neighbour."""
    yk = prev_labels.labels.ravel()[cliques.previous]
    f0 = np.where(yk == SILHOUETTE, 1.0, -1.0)
    return np.stack([f0, -f0], axis=1)


def feature_stack(
    cliques: CliqueSet,
    features: dict[str, np.ndarray],
    families: tuple[str, ...],
    prev_labels: LabelField,
) -> FeatureStack:
    n, e = cliques.n_nodes, cliques.intra.shape[0]
    if prev_labels.shape != (cliques.height, cliques.width):
        raise ValueError("previous labels do not match the clique grid")
    unary = np.zeros((len(families), n, 2))
    pairwise = np.zeros((len(families), e, 2, 2))
    for k, fam in enumerate(families):
        if fam == "temporal":
            unary[k] = temporal_unary(prev_labels, cliques)
            continue
        if fam not in features:
            raise KeyError(f"missing feature family {fam!r}")
        values = np.asarray(features[fam], dtype=np.float64)
        if fam in UNARY_FAMILIES:
            if values.shape != (cliques.height, cliques.width, 2):
                raise ValueError(f"feature {fam!r} has shape {values.shape}")
            unary[k] = values.reshape(n, 2)
        elif fam in PAIRWISE_FAMILIES:
            if values.shape != (e, 2, 2):
                raise ValueError(f"feature {fam!r} has shape {values.shape}")
            pairwise[k] = values
        else:
            raise ValueError(f"unknown feature family {fam!r}")
    return FeatureStack(tuple(families), unary, pairwise, cliques.intra, cliques.height, cliques.width)


def assemble_potentials(
    cliques: CliqueSet,
    features: dict[str, np.ndarray],
    params: ModelParams,
    prev_labels: LabelField,
) -> PotentialTable:
    """Weighted sum of all feature families into log-potentials."""
    return feature_stack(cliques, features, params.families, prev_labels).potentials(params)


def _normalize_log(a: np.ndarray) -> np.ndarray:
    return a - np.logaddexp(a[..., 0], a[..., 1])[..., None]


def _entropy(p: np.ndarray, axes) -> np.ndarray:
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(p > 0, p * np.log(p), 0.0)
    return -t.sum(axis=axes)


def bp_marginals(pot: PotentialTable, settings: BPSettings = BPSettings()) -> MarginalField:
    """Sum-product loopy BP with a synchronous, damped flooding schedule.

    Messages live in log space and are normalised after every sweep. When
    the iteration cap is hit before the largest message change drops below
    the tolerance, the current beliefs are returned with ``converged=False``.
    """
    n = pot.n_nodes
    edges = pot.edges
    n_e = edges.shape[0]
    shape = (pot.height, pot.width)
    U = pot.unary

    if n_e == 0:
        b = _normalize_log(U)
        p0 = np.exp(b[:, 0])
        log_z = float(np.logaddexp(U[:, 0], U[:, 1]).sum())
        return MarginalField(p0.reshape(shape), np.zeros((0, 2, 2)), log_z, True, 0, False)

    # directed copies: d < E runs i -> j, d >= E runs j -> i
    src = np.concatenate([edges[:, 0], edges[:, 1]])
    dst = np.concatenate([edges[:, 1], edges[:, 0]])
    table = np.concatenate([pot.pairwise, pot.pairwise.transpose(0, 2, 1)])  # [src_label, dst_label]
    rev = np.concatenate([np.arange(n_e, 2 * n_e), np.arange(n_e)])

    def incoming(m):
        s = np.empty((n, 2))
        s[:, 0] = np.bincount(dst, weights=m[:, 0], minlength=n)
        s[:, 1] = np.bincount(dst, weights=m[:, 1], minlength=n)
        return s

    msg = np.zeros((2 * n_e, 2))
    converged = False
    it = 0
    for it in range(1, int(settings.max_iter) + 1):
        cavity = U[src] + incoming(msg)[src] - msg[rev]
        scores = cavity[:, :, None] + table
        new = np.logaddexp(scores[:, 0, :], scores[:, 1, :])
        new = _normalize_log(new)
        if settings.damping > 0:
            new = _normalize_log(settings.damping * msg + (1.0 - settings.damping) * new)
        delta = np.max(np.abs(new - msg))
        msg = new
        if delta < settings.tolerance:
            converged = True
            break

    total = U + incoming(msg)
    node_log = _normalize_log(total)
    node_p = np.exp(node_log)

    i, j = edges[:, 0], edges[:, 1]
    ci = total[i] - msg[n_e:]   # drop the message j -> i
    cj = total[j] - msg[:n_e]   # drop the message i -> j
    edge_log = ci[:, :, None] + cj[:, None, :] + pot.pairwise
    edge_log -= np.max(edge_log, axis=(1, 2), keepdims=True)
    edge_p = np.exp(edge_log)
    edge_p /= edge_p.sum(axis=(1, 2), keepdims=True)

    degree = np.bincount(np.concatenate([i, j]), minlength=n)
    avg_energy = (node_p * U).sum() + (edge_p * pot.pairwise).sum()
    h_bethe = _entropy(edge_p, (1, 2)).sum() - ((degree - 1) * _entropy(node_p, 1)).sum()
    log_z = float(avg_energy + h_bethe)
    return MarginalField(node_p[:, 0].reshape(shape), edge_p, log_z, converged, it, False)


def labelling_scores(pot: PotentialTable, labellings: np.ndarray) -> np.ndarray:
    """Unnormalised log-probability of each row of ``labellings`` (``(m, n)``)."""
    y = np.asarray(labellings, dtype=np.int64)
    n = pot.n_nodes
    s = pot.unary[np.arange(n), y].sum(axis=1)
    if pot.edges.shape[0]:
        e = pot.edges
        s = s + pot.pairwise[np.arange(e.shape[0]), y[:, e[:, 0]], y[:, e[:, 1]]].sum(axis=1)
    return s


def exact_marginals(pot: PotentialTable) -> MarginalField:
    """Brute-force marginals, edge marginals and log Z over all 2^n labellings."""
    n = pot.n_nodes
    if n > MAX_EXACT_NODES:
        raise ValueError(f"exact enumeration limited to {MAX_EXACT_NODES} nodes, got {n}")
    ys = np.array(list(itertools.product((0, 1), repeat=n)), dtype=np.int8).reshape(-1, n)
    s = labelling_scores(pot, ys)
    log_z = float(np.logaddexp.reduce(s))
    w = np.exp(s - log_z)
    p0 = w @ (ys == 0)
    e = pot.edges
    pair = np.zeros((e.shape[0], 2, 2))
    for a in (0, 1):
        for b in (0, 1):
            pair[:, a, b] = w @ ((ys[:, e[:, 0]] == a) & (ys[:, e[:, 1]] == b))
    return MarginalField(p0.reshape(pot.height, pot.width), pair, log_z, True, 0, True)


def decode(marginals: MarginalField) -> LabelField:
    """Per-node argmax; an exact 0.5 tie goes to background."""
    return LabelField(np.where(marginals.p0 > 0.5, SILHOUETTE, BACKGROUND).astype(np.uint8))

"""Maximum-likelihood estimation of the feature weights.

The log-likelihood of a labelled layer is the weighted feature sum at the
ground truth minus log Z; its gradient is observed minus expected feature
sums. Small grids use exact enumeration, larger ones BP marginals and the
Bethe estimate of log Z.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import NumericalError
from .features import FeatureSettings, compute_features
from .fields import FAMILIES, Frame, LabelField, ModelParams
from .flow import FlowSettings, backward_flow
from .graph import build_cliques
from .inference import BPSettings, FeatureStack, bp_marginals, exact_marginals, feature_stack

log = logging.getLogger(__name__)

# fit(held_out_instances()) with the default settings, rounded
DEFAULT_WEIGHTS = {"flow": -0.097, "appearance": 0.62, "coherency": 0.809, "edge": 0.95, "temporal": 0.62}


def default_params() -> ModelParams:
    return ModelParams.from_dict(DEFAULT_WEIGHTS)


@dataclass(frozen=True)
class TrainingInstance:
    """Frames ``M[t-2], M[t-1], M[t]`` with truth masks ``Y[t-1]`` and ``Y[t]``."""

    frames: tuple[Frame, Frame, Frame]
    prev_truth: LabelField
    truth: LabelField

    def __post_init__(self):
        frames = tuple(self.frames)
        if len(frames) != 3:
            raise ValueError("a training instance needs exactly three frames")
        shapes = {f.shape for f in frames} | {self.prev_truth.shape, self.truth.shape}
        if len(shapes) != 1:
            raise ValueError(f"dimension mismatch in training instance: {sorted(shapes)}")
        object.__setattr__(self, "frames", frames)


@dataclass(frozen=True)
class PreparedInstance:
    """Feature stack of one layer plus its ground-truth labelling."""

    stack: FeatureStack
    labels: np.ndarray

    @property
    def n_nodes(self) -> int:
        return self.labels.size


@dataclass(frozen=True)
class TrainSettings:
    step: float = 0.5
    epochs: int = 200
    tolerance: float = 1e-6
    l2: float = 1e-3
    exact_max_nodes: int = 16
    min_step: float = 1e-12
    per_node: bool = True

    def __post_init__(self):
        if not self.step > 0:
            raise ValueError("step must be > 0")
        if int(self.epochs) != self.epochs or self.epochs < 0:
            raise ValueError("epochs must be a non-negative integer")
        if self.l2 < 0:
            raise ValueError("l2 must be >= 0")
        if self.tolerance < 0:
            raise ValueError("tolerance must be >= 0")


@dataclass(frozen=True)
class Likelihood:
    value: float
    gradient: np.ndarray
    exact: bool
    converged: bool = True


@dataclass
class FitResult:
    params: ModelParams
    trace: list[float] = field(default_factory=list)
    grad_norm: float = float("nan")
    converged: bool = False
    epochs: int = 0


def prepare(
    instance: TrainingInstance | PreparedInstance,
    families: tuple[str, ...] = FAMILIES,
    flow_settings: FlowSettings = FlowSettings(),
    feature_settings: FeatureSettings = FeatureSettings(),
) -> PreparedInstance:
    """Compute flow, cliques and features of a training instance once."""
    if isinstance(instance, PreparedInstance):
        return instance
    _, prev, curr = instance.frames
    flow = backward_flow(prev, curr, flow_settings)
    cliques = build_cliques(flow)
    feats = compute_features(curr, instance.prev_truth, flow, cliques, feature_settings)
    stack = feature_stack(cliques, feats, tuple(families), instance.prev_truth)
    return PreparedInstance(stack, instance.truth.labels.ravel().astype(np.int64))


def evaluate(
    prepared: PreparedInstance,
    params: ModelParams,
    bp: BPSettings = BPSettings(),
    exact_max_nodes: int = 16,
) -> Likelihood:
    """Log-likelihood and gradient of one prepared instance."""
    pot = prepared.stack.potentials(params)
    exact = prepared.n_nodes <= exact_max_nodes
    marg = exact_marginals(pot) if exact else bp_marginals(pot, bp)
    observed = prepared.stack.totals(prepared.labels)
    value = float(params.weights @ observed - marg.log_z)
    grad = observed - prepared.stack.expected(marg)
    return Likelihood(value, grad, exact, marg.converged)


def log_likelihood(instance, params: ModelParams, bp: BPSettings = BPSettings(),
                   exact_max_nodes: int = 16, **prepare_kw) -> float:
    """Unregularised log-likelihood; see :func:`evaluate` for the exact/BP flag."""
    prepared = prepare(instance, params.families, **prepare_kw)
    return evaluate(prepared, params, bp, exact_max_nodes).value


def gradient(instance, params: ModelParams, bp: BPSettings = BPSettings(),
             exact_max_nodes: int = 16, **prepare_kw) -> np.ndarray:
    prepared = prepare(instance, params.families, **prepare_kw)
    return evaluate(prepared, params, bp, exact_max_nodes).gradient


def _objective(prepared, weights, families, settings, bp):
    params = ModelParams(weights, families)
    value = 0.0
    grad = np.zeros(len(families))
    for inst in prepared:  # fixed order keeps the reduction deterministic
        res = evaluate(inst, params, bp, settings.exact_max_nodes)
        value += res.value
        grad += res.gradient
    if settings.per_node:
        scale = 1.0 / sum(inst.n_nodes for inst in prepared)
        value *= scale
        grad *= scale
    value -= 0.5 * settings.l2 * float(weights @ weights)
    grad -= settings.l2 * weights
    if not (np.isfinite(value) and np.all(np.isfinite(grad))):
        raise NumericalError(f"non-finite log-likelihood at weights {weights.tolist()}")
    return value, grad


def fit(
    instances,
    settings: TrainSettings = TrainSettings(),
    bp: BPSettings = BPSettings(),
    families: tuple[str, ...] = FAMILIES,
    init: ModelParams | None = None,
    **prepare_kw,
) -> FitResult:
    """Gradient ascent on the L2-penalised log-likelihood of all instances.

    With ``settings.per_node`` the summed log-likelihood is divided by the
    total node count, which leaves the maximiser of the unpenalised sum
    unchanged but makes ``step`` and ``l2`` independent of image size.

    A step that would lower the objective is retried at half the size; the
    step is allowed to grow back towards ``settings.step`` after success.
    ``trace`` records the penalised objective after every accepted step.
    """
    instances = list(instances)
    if not instances:
        raise ValueError("fit needs at least one training instance")
    families = tuple(init.families) if init is not None else tuple(families)
    prepared = [prepare(inst, families, **prepare_kw) for inst in instances]

    w = np.zeros(len(families)) if init is None else np.array(init.weights, dtype=np.float64)
    value, grad = _objective(prepared, w, families, settings, bp)
    result = FitResult(ModelParams(w, families), [value])
    step = settings.step
    for epoch in range(int(settings.epochs)):
        gnorm = float(np.linalg.norm(grad))
        if gnorm < settings.tolerance:
            result.converged = True
            break
        while True:
            cand = w + step * grad
            c_value, c_grad = _objective(prepared, cand, families, settings, bp)
            if c_value >= value:
                break
            step *= 0.5
            if step < settings.min_step:
                log.info("line search stalled at epoch %d", epoch)
                result.converged = True
                break
        if step < settings.min_step:
            break
        w, value, grad = cand, c_value, c_grad
        result.trace.append(value)
        result.epochs = epoch + 1
        step = min(2.0 * step, settings.step)
        log.debug("epoch %d objective %.6f |grad| %.3e", epoch, value, gnorm)

    result.params = ModelParams(w, families)
    result.grad_norm = float(np.linalg.norm(grad))
    if result.grad_norm < settings.tolerance:
        result.converged = True
    return result

"""Object-silhouette tracking with a temporally stacked conditional random field.

Each new frame becomes a binary CRF layer (silhouette vs background) whose
nodes are tied to the previous decoded layer through optical-flow guided
cliques. Loopy belief propagation gives per-pixel marginals, and decoded
connected components are associated with persistent targets.
"""

from .errors import DataError, NumericalError
from .fields import (BACKGROUND, FAMILIES, SILHOUETTE, CliqueSet, FlowField, Frame, LabelField,
                     ModelParams, SequenceAnnotation)
from .flow import FlowSettings, backward_flow, dense_flow
from .graph import build_cliques
from .features import FeatureSettings, compute_features
from .inference import BPSettings, bp_marginals, decode, exact_marginals
from .training import TrainingInstance, TrainSettings, default_params, fit, gradient, log_likelihood
from .tracker import TrackerSettings, initialize, step, track
from .metrics import accuracy, iou
from .simulate import MotionSpec, generate, generate_scene

__version__ = "0.1.0"

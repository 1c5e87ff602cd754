"""
Application-wide constants and configuration values.

This module groups the static enumerations and default values used by the
cgen-lab engine so that:

 YAML run configs, manifests and checkpoint headers are strictly validated
 with Pydantic.
 The autodiff substrate, the environments and the trainers share a single
 source of truth for every default.
 Ruff, mypy and IDEs can leverage the strong typing provided by Enum classes.

IMPORTANT: Changing any enum value is a breaking-change for every stored
config, manifest and checkpoint. Add new members whenever possible instead of
renaming existing ones.
"""

from enum import IntEnum, StrEnum

# ======================================================================
# CONSTANTS FOR THE AUTODIFF SUBSTRATE
# ======================================================================


class AutodiffDefaults:
    """Numerical defaults of the tensor library."""

    BCE_EPS = 1e-7
    GRAD_CHECK_STEP = 1e-5
    GRAD_CHECK_FLOOR = 1e-8
    ADAM_BETA1 = 0.9
    ADAM_BETA2 = 0.999
    ADAM_EPS = 1e-8


class Elementwise(StrEnum):
    """Names of the elementwise primitives accepted by ``elementwise``."""

    RELU = "relu"
    SIGMOID = "sigmoid"
    TANH = "tanh"
    EXP = "exp"
    ADD = "add"
    SUB = "sub"
    MUL = "mul"
    SCALE = "scale"
    SHIFT = "shift"


class OptimizerKind(StrEnum):
    """Supported parameter update rules."""

    SGD = "sgd"
    ADAM = "adam"


class Precision(StrEnum):
    """Floating point modes: 32-bit for training, 64-bit for gradient checks."""

    FLOAT32 = "float32"
    FLOAT64 = "float64"


# ======================================================================
# CONSTANTS FOR THE NETWORK MODELS
# ======================================================================


class LayerKind(StrEnum):
    """Layer categories a ``LayerSpec`` may declare."""

    CONV = "conv"
    CONV_TRANSPOSE = "conv_transpose"
    DENSE = "dense"
    ACTIVATION = "activation"
    FLATTEN = "flatten"
    RESHAPE = "reshape"


class Activation(StrEnum):
    """Activations available to ``activation`` layers."""

    RELU = "relu"
    SIGMOID = "sigmoid"
    TANH = "tanh"


class ModelKind(StrEnum):
    """Network roles stored in checkpoints."""

    GENERATOR = "generator"
    CLASSIFIER = "classifier"
    PREDICTOR = "predictor"


class ModelDefaults:
    """Default architecture sizes."""

    SHAPES_IMAGE_SIZE = 32
    STONES_IMAGE_SIZE = 32
    NAV_IMAGE_SIZE = 64
    LATENT_DIM = 16
    CODE_DIM = 64
    BASE_CHANNELS = 8
    HIDDEN_UNITS = 32
    KL_WEIGHT = 1e-3
    BOTTLENECK_EXTENT = 8


# ======================================================================
# CONSTANTS FOR THE CHECKPOINT CONTAINER
# ======================================================================


class CheckpointFormat:
    """Bit layout of the CGEN checkpoint container."""

    MAGIC = b"CGEN"
    VERSION = 1
    # magic (4 bytes) + u32 version + u64 header length
    PREAMBLE_BYTES = 16
    PAYLOAD_DTYPE = "<f4"
    PAYLOAD_ITEM_BYTES = 4


# ======================================================================
# CONSTANTS FOR THE ENVIRONMENTS
# ======================================================================


class EnvName(StrEnum):
    """Procedural environments available to ``gen-data``."""

    SHAPES = "shapes"
    STONES = "stones"
    NAV = "nav"


class NavComplexity(StrEnum):
    """Demonstration complexity of the navigation micro-world."""

    FULL = "full"
    CONES_ONLY = "cones_only"
    EMPTY = "empty"


class ObstacleKind(StrEnum):
    """Obstacles of the navigation micro-world."""

    CONE = "cone"
    BARRIER = "barrier"


class DatasetSplit(StrEnum):
    """Split tag recorded per manifest entry."""

    TRAIN = "train"
    VALIDATION = "validation"


class ShapesDefaults:
    """Render parameters of the two-class ring dataset."""

    IMAGE_SIZE = 32
    MIN_RADIUS = 8.0
    MAX_RADIUS = 12.0
    INNER_RADIUS_RATIO = 0.6
    MIN_STROKE = 1.5
    MAX_STROKE = 2.5
    CENTER_JITTER = 2.0
    NOISE_SIGMA = 0.03
    MIN_RING_RADIUS = 3.0
    VALIDATION_FRACTION = 0.1


class StonesDefaults:
    """Geometry of the stepping-stones lane."""

    IMAGE_SIZE = 32
    DELTA = 0.25
    MIN_GAP = 0.14
    MIN_OBJECTS = 2
    MAX_OBJECTS = 6
    BLOCKING_MARGIN = 0.02
    MAX_BLOCKING_EXCESS = 0.4
    LANE_ROW = 15.5
    LANE_ORIGIN_PX = 1.5
    LANE_SPAN_PX = 28.0
    SQUARE_SIDE_PX = 2.0
    OBJECT_INTENSITY = 0.5
    TARGET_INTENSITY = 0.95
    TARGET_BAND_LOW = 0.75
    BLOB_THRESHOLD = 0.25
    AUGMENT_NOISE_SIGMA = 0.02
    AUGMENT_JITTER_PX = 0.5
    REACHABLE_FRACTION = 0.5


class NavDefaults:
    """Geometry and kinematics of the navigation micro-world."""

    IMAGE_SIZE = 64
    PIXELS_PER_UNIT = 24.0
    PLATFORM_SIZE = 3.0
    CORNER_INSET = 0.5
    SPEED = 0.2
    HORIZON_STEPS = 5
    STEP_SECONDS = 1.0
    SIM_DT = 0.05
    STUCK_WINDOW_S = 20.0
    MIN_PROGRESS = 0.05
    WAYPOINT_TOLERANCE = 0.1
    ROBOT_RADIUS = 0.05
    CONE_RADIUS = 0.05
    CONE_REPULSION = 0.1
    BARRIER_LENGTH = 0.5
    BARRIER_THICKNESS = 0.06
    BARRIER_CLEARANCE = 0.15
    MAX_CONES = 4
    MAX_BARRIERS = 2
    OBSTACLE_CORRIDOR = 0.35
    MIN_OBSTACLE_CLEARANCE = 0.3
    HEADING_NOISE_DEG = 15.0
    MAX_GOAL_DEG = 45.0
    OFF_PLATFORM_INTENSITY = 0.05
    EDGE_INTENSITY = 0.0
    EDGE_WIDTH = 0.04
    FLOOR_INTENSITY = 0.3
    BARRIER_INTENSITY = 0.6
    CONE_INTENSITY = 1.0
    MAX_RESAMPLES = 50


# ======================================================================
# CONSTANTS FOR THE COUNTERFACTUAL TRAINERS
# ======================================================================


class CGenMode(StrEnum):
    """Loss families of the counterfactual generator."""

    CLASSIFICATION = "classification"
    REGRESSION = "regression"


class TrainingPhase(StrEnum):
    """Which model an epoch updates."""

    PRETRAIN = "pretrain"
    GENERATOR = "generator"
    CLASSIFIER = "classifier"
    PREDICTOR = "predictor"


class CGenDefaults:
    """Training defaults of the cGen trainers."""

    ALPHA = 0.8
    REGRESSION_ALPHA = 0.8
    REGRESSION_BETA = 0.1
    REGRESSION_GAMMA = 0.1
    EPOCHS = 10
    PRETRAIN_EPOCHS = 20
    BATCH_SIZE = 32
    GENERATOR_LR = 1e-3
    CLASSIFIER_LR = 1e-3
    TARGET_CLASS = 1
    RECONSTRUCTION_THRESHOLD = 0.02
    SMOOTHING_WINDOW = 5
    LATENT_STEPS = 500
    LATENT_LR = 0.05
    CONVERGENCE_TOL = 1e-6
    CONVERGENCE_PATIENCE = 10
    MASK_THRESHOLD = 0.1
    GENERATOR_EPOCHS_PER_ROUND = 1


class TrainingLogColumn(StrEnum):
    """Columns of the training log CSV, in file order."""

    EPOCH = "epoch"
    L_G = "l_g"
    L_C = "l_c"
    L_P = "l_p"
    L_TOTAL = "l_total"
    CLASSIFIER_ACC = "classifier_acc"


# ======================================================================
# CONSTANTS FOR THE ROBUSTNESS ANALYSIS
# ======================================================================


class ProbeDefaults:
    """Noise-gain probe defaults."""

    EPSILON = 0.1
    ETA_STEP = 0.01
    ETA_MAX = 2.0
    TRIALS = 20


class RobustnessDefaults:
    """Default grid of the controller comparison."""

    SCENARIOS = 10
    GOALS_DEG = (-45.0, -30.0, -15.0, 0.0, 15.0, 30.0, 45.0)
    CONTROLLER_TAGS = ("a", "b", "c")
    NOISE_FACTOR = 2.0
    HEATMAP_CELL_PX = 8


class ReportColumn(StrEnum):
    """Columns of the long-format robustness CSV, in file order."""

    CONTROLLER = "controller"
    SCENARIO_ID = "scenario_id"
    GOAL_DEG = "goal_deg"
    L_G = "l_g"
    L_C = "l_c"
    L_P = "l_p"
    L_TOTAL = "l_total"
    ETA_STAR = "eta_star"


class Verdict(StrEnum):
    """Outcome of a qualitative ordering check."""

    HOLDS = "holds"
    VIOLATED = "violated"
    UNDETERMINED = "undetermined"


# ======================================================================
# CONSTANTS FOR THE COMMAND LINE
# ======================================================================


class ExitCode(IntEnum):
    """Stable process exit codes for scripting."""

    OK = 0
    CONFIG_ERROR = 2
    IO_ERROR = 3
    MISSING_PREREQUISITE = 4


class PretrainRole(StrEnum):
    """What ``cgen pretrain`` produces."""

    GENERATOR = "generator"
    VAE = "vae"
    DENOISER = "denoiser"
    CLASSIFIER = "classifier"


class GoalKind(StrEnum):
    """Prefix of a ``--goal`` value."""

    CLASS = "class"
    ANGLE = "angle"
    VECTOR = "vector"


class ArtifactName(StrEnum):
    """File names shared between pipeline stages."""

    GENERATOR = "generator.ckpt"
    VAE = "vae.ckpt"
    DENOISER = "denoiser.ckpt"
    CLASSIFIER = "classifier.ckpt"
    MEMBERSHIP = "membership.ckpt"
    PREDICTOR = "predictor.ckpt"
    MANIFEST = "manifest.yaml"
    LABELS = "labels.csv"
    RESOLVED_CONFIG = "resolved_config.yaml"
    TRAINING_LOG = "training_log.csv"
    ORIGINAL = "original.pgm"
    COUNTERFACTUAL = "counterfactual.pgm"
    DIFF = "diff.pgm"
    LOSSES = "losses.yaml"
    REPORT = "robustness.csv"
    SUMMARY = "summary.yaml"
    EVALUATION = "evaluation.yaml"

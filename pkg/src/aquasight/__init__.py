"""AquaSight: image-based water impurity detection.

Trains a small convolutional network that classifies a water photo as
clean (0) or contaminated (1), evaluates it with the standard binary
classification measures, and serves predictions over HTTP.
"""

from aquasight.tensor import Tensor, ShapeError
from aquasight.network import (
    Network,
    NetworkSpec,
    SpecError,
    build,
    predict,
    reference_spec,
)
from aquasight.weights import save_weights, load_network
from aquasight.metrics import (
    ConfusionMatrix,
    MetricsReport,
    Prediction,
    PredictionStats,
    classify,
    confusion,
    metrics,
    prediction_stats,
)
from aquasight.training import TrainConfig, TrainReport, bce_loss, fit, split
from aquasight.dataset import (
    ImageSample,
    decode_and_resize,
    generate_dataset,
    generate_sample,
    normalize_brightness,
)

__version__ = "0.1.0"

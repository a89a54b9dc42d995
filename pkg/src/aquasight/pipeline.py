"""The one inference path shared by the CLI and the HTTP service.

Both front ends call predict_bytes so a given image and model can never
produce different answers depending on the entry point.
"""

from __future__ import annotations

import numpy as np

from aquasight.dataset import decode_and_resize, normalize_brightness
from aquasight.metrics import Prediction, classify
from aquasight.network import Network, predict


def prepare_image(data: bytes, normalize: bool = True) -> np.ndarray:
    """Decode to [3,64,64] in [0,1]; brightness-normalize unless opted out."""
    pixels = decode_and_resize(data)
    if normalize:
        pixels = normalize_brightness(pixels)
    return pixels


def predict_pixels(net: Network, pixels: np.ndarray) -> Prediction:
    return classify(predict(net, pixels))


def predict_bytes(net: Network, data: bytes, normalize: bool = True) -> Prediction:
    """Full pipeline: decode, resize, normalize, forward, threshold."""
    return predict_pixels(net, prepare_image(data, normalize=normalize))

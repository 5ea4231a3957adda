"""Leave-one-out PCA separation of probe structure from photon noise."""

import logging
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
import scipy.ndimage

from src.custom_types.images import FloatArray, ImageStack, Rect
from src.errors import DomainError, InsufficientDataError
from src.parallel import bounded_map

logger = logging.getLogger(__name__)

MIN_FRAMES = 8
EIGEN_CUTOFF = 1e-10


class _FrameSplit(NamedTuple):
    mean: FloatArray
    noise: FloatArray
    eigenvalues: FloatArray
    components: int
    carried: float


@dataclass(frozen=True)
class NoiseDecomposition:
    """Per-frame structure estimate <N_i> and noise Delta N_i over the ROI.

    <N_i> is a weighted sum of the other frames, so Delta N_i holds their noise
    too, scaled by the sum of squared weights. `corrected_variance` divides that
    out along with the fraction of N_i's own noise lying in the projection span.
    """

    mean_images: FloatArray
    noise_images: FloatArray
    components: list[int]
    eigenvalues: list[FloatArray]
    mean_adu: float
    raw_variance: float
    corrected_variance: float
    roi: Rect

    @property
    def n_frames(self) -> int:
        return int(self.noise_images.shape[0])


def _split_frame(features: FloatArray, index: int) -> _FrameSplit:
    others = np.delete(features, index, axis=0)
    center = others.mean(axis=0)
    deviations = others - center
    gram = deviations @ deviations.T
    eigenvalues, vectors = np.linalg.eigh(gram)
    keep = eigenvalues > EIGEN_CUTOFF * max(float(eigenvalues.max()), 0.0)
    scaled = vectors[:, keep] / np.sqrt(eigenvalues[keep])
    basis = deviations.T @ scaled
    offset = features[index] - center
    # mean = center + deviations.T @ beta = sum_j weights_j * others_j
    beta = scaled @ (basis.T @ offset)
    weights = 1.0 / len(others) + beta - beta.sum() / len(others)
    mean = center + deviations.T @ beta
    return _FrameSplit(
        mean=mean,
        noise=features[index] - mean,
        eigenvalues=eigenvalues[::-1],
        components=int(keep.sum()),
        carried=float(np.sum(weights**2)),
    )


def loo_pca_decompose(
    stack: ImageStack, roi: Rect, workers: int = 1
) -> NoiseDecomposition:
    """Project each frame onto the principal components of the other frames.

    The components come from the small Gram matrix of the n - 1 other frames
    after subtracting their mean; the dark frame is removed first.
    """
    n = stack.n_frames
    if n < MIN_FRAMES:
        raise InsufficientDataError(f"{n} frames given, need at least {MIN_FRAMES}")
    if not roi.fits(stack.shape):
        raise DomainError(f"ROI {roi} does not fit a {stack.shape} sensor")
    frames = stack.dark_subtracted()[(slice(None), *roi.slices)]
    height, width = frames.shape[1:]
    features = frames.reshape(n, -1)
    m = features.shape[1]

    splits = bounded_map(lambda i: _split_frame(features, i), range(n), workers)
    noise = np.stack([s.noise for s in splits])
    raw = noise**2
    per_frame = raw.mean(axis=1)
    deflation = np.array([(1.0 - s.components / m) * (1.0 + s.carried) for s in splits])
    decomposition = NoiseDecomposition(
        mean_images=np.stack([s.mean for s in splits]).reshape(n, height, width),
        noise_images=noise.reshape(n, height, width),
        components=[s.components for s in splits],
        eigenvalues=[s.eigenvalues for s in splits],
        mean_adu=float(features.mean()),
        raw_variance=float(per_frame.mean()),
        corrected_variance=float(np.mean(per_frame / deflation)),
        roi=roi,
    )
    logger.debug(
        "%s: mean %.1f ADU, variance %.1f ADU^2 (raw %.1f), %d components",
        stack.label or "stack",
        decomposition.mean_adu,
        decomposition.corrected_variance,
        decomposition.raw_variance,
        decomposition.components[0],
    )
    return decomposition


def highpass_noise(stack: ImageStack, roi: Rect, sigma_px: float = 3.0) -> float:
    """Variance left after subtracting a Gaussian-smoothed copy of each frame.

    Only a comparison diagnostic; smooth structure leaks in quadratically.
    """
    if not roi.fits(stack.shape):
        raise DomainError(f"ROI {roi} does not fit a {stack.shape} sensor")
    frames = stack.dark_subtracted()
    residuals = [
        (frame - scipy.ndimage.gaussian_filter(frame, sigma_px))[roi.slices]
        for frame in frames
    ]
    return float(np.mean(np.square(residuals)))

"""
Image-versus-variety diagnostics: gap reports, separators for spurious
points and the sample-level surjectivity check between tower stages.
"""

import logging
from fractions import Fraction
from typing import Optional, Sequence, Tuple

import numpy as np

from app.core.config import Settings, settings as default_settings
from app.core.exceptions import SamplingError, TowerError
from app.schemas.tower import Provenance, SurjectivityReport, TowerState
from app.schemas.variety import GapReport, GapVerdict, PointCloud, SpuriousPoint
from app.services.polynomial import format_polynomial
from app.services.tower import add_generator, separator_generator
from app.services.variety import sample_image, sample_variety
from app.utils.sampling import dedupe, nearest_distances

logger = logging.getLogger(__name__)

MAX_SPURIOUS = 20


def gap_report(image: PointCloud, variety: PointCloud, delta: Optional[float] = None) -> GapReport:
    """Variety points farther than ``delta`` from every image point.

    Spurious points are listed farthest first, one representative per
    ``delta``-cluster.
    """
    delta = default_settings.NEIGHBORHOOD_RADIUS if delta is None else delta
    if image.size == 0 or variety.size == 0:
        raise SamplingError(
            "gap report needs nonempty image and variety samples; coverage undecided",
            {"image_size": image.size, "variety_size": variety.size},
        )
    if image.variables != variety.variables:
        raise TowerError("image and variety clouds use different variables")
    distances, _ = nearest_distances(image.points, variety.points)
    far = np.flatnonzero(distances > delta)
    order = far[np.argsort(-distances[far], kind="stable")]
    representatives = dedupe(variety.points[order], delta) if order.size else variety.points[:0]
    spurious = []
    if representatives.shape[0]:
        rep_distances, _ = nearest_distances(image.points, representatives)
        for point, distance in zip(representatives[:MAX_SPURIOUS], rep_distances[:MAX_SPURIOUS]):
            spurious.append(SpuriousPoint(point=point.tolist(), distance=float(distance)))
    verdict = GapVerdict.GAP_DETECTED if far.size else GapVerdict.IMAGE_EQUALS_VARIETY
    report = GapReport(
        verdict=verdict,
        variables=variety.variables,
        spurious=tuple(spurious),
        delta=delta,
        max_distance=float(distances.max()),
        image_size=image.size,
        variety_size=variety.size,
        image_seed=image.seed,
        variety_seed=variety.seed,
        thresholds={"delta": delta, "far_points": float(far.size)},
    )
    logger.info(
        f"Gap report: {verdict.value}; {far.size} of {variety.size} variety points beyond {delta}"
    )
    return report


def explore(
    tw: TowerState,
    samples: Optional[int] = None,
    delta: Optional[float] = None,
    seed: Optional[int] = None,
    box: Optional[Sequence[Optional[Tuple[float, float]]]] = None,
    settings: Optional[Settings] = None,
) -> Tuple[PointCloud, PointCloud, GapReport]:
    """Sample m(K_{Q,X}) and K_{Q,Y} and compare them."""
    settings = settings or default_settings
    seed = settings.DEFAULT_SEED if seed is None else seed
    delta = settings.NEIGHBORHOOD_RADIUS if delta is None else delta
    image = sample_image(tw, samples or settings.DOMAIN_SAMPLES, seed, box=box, settings=settings)
    variety = sample_variety(tw, n=samples or settings.VARIETY_SAMPLES, seed=seed, settings=settings)
    return image, variety, gap_report(image, variety, delta)


def exclude_point(
    tw: TowerState,
    y: Sequence,
    eps: Fraction,
    samples: Optional[int] = None,
    seed: Optional[int] = None,
    settings: Optional[Settings] = None,
) -> TowerState:
    """Add the separator at ``y`` after checking it is positive on the sampled image."""
    settings = settings or default_settings
    seed = settings.DEFAULT_SEED if seed is None else seed
    separator = separator_generator(tw, y, eps)
    text = format_polynomial(separator, tw.variables)
    image = sample_image(tw, samples or settings.DOMAIN_SAMPLES, seed, settings=settings)
    if image.size:
        values = separator.evaluate_many(image.points)
        worst = int(np.argmin(values))
        if values[worst] <= 0:
            raise TowerError(
                f"separator {text} is not positive on the image (value {values[worst]:.3g})",
                {"witness": image.points[worst].tolist()},
            )
    logger.info(f"Excluding ({', '.join(str(v) for v in y)}) with separator {text}")
    return add_generator(
        tw, separator, provenance=Provenance.SEPARATOR, note=f"eps={eps}", settings=settings
    )


def surjectivity_check(
    previous: TowerState,
    current: TowerState,
    n: Optional[int] = None,
    seed: Optional[int] = None,
    delta: Optional[float] = None,
    settings: Optional[Settings] = None,
) -> SurjectivityReport:
    """Every sampled point of the earlier stage's K_{Q,Y} lies near the projection of the later one."""
    settings = settings or default_settings
    seed = settings.DEFAULT_SEED if seed is None else seed
    delta = settings.NEIGHBORHOOD_RADIUS if delta is None else delta
    n = n or settings.VARIETY_SAMPLES
    k = previous.nvars
    if current.variables[:k] != previous.variables:
        raise TowerError("the later tower does not extend the earlier one")
    below = sample_variety(previous, n=n, seed=seed, settings=settings)
    above = sample_variety(current, n=n, seed=seed, settings=settings)
    if below.size == 0:
        return SurjectivityReport(holds=True, max_distance=0.0, delta=delta, samples=0, seed=seed)
    distances, _ = nearest_distances(above.points[:, :k], below.points)
    worst = int(np.argmax(distances))
    holds = bool(distances[worst] <= delta)
    logger.info(f"Surjectivity check: max distance {distances[worst]:.3g} (delta {delta})")
    return SurjectivityReport(
        holds=holds,
        max_distance=float(distances[worst]),
        delta=delta,
        samples=below.size,
        seed=seed,
        worst_point=None if holds else below.points[worst].tolist(),
    )

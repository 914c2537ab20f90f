from __future__ import annotations

import math

import pytest

from ovprep.geometry import GridCatalog, ImageShape, SpatialConfig


def brute_force_select(shape: ImageShape, catalog: GridCatalog) -> SpatialConfig:
    """Exhaustive reference for grid selection, written against the rules only.

    Works in plain floats and explicit passes; shares no code with the
    implementation under test.
    """
    edge = catalog.base_edge_px
    w, h = shape.width_px, shape.height_px

    def fit_scale(cfg: SpatialConfig) -> float:
        return min(cfg.a * edge / w, cfg.b * edge / h)

    def wasted(cfg: SpatialConfig) -> float:
        s = fit_scale(cfg)
        return cfg.a * cfg.b * edge * edge - s * s * w * h

    covering = [c for c in catalog.configs if c.a * edge >= w and c.b * edge >= h]
    if covering:
        candidates = covering
    else:
        best = max(fit_scale(c) for c in catalog.configs)
        candidates = [c for c in catalog.configs if math.isclose(fit_scale(c), best, rel_tol=1e-12)]
    fewest = min(c.a * c.b for c in candidates)
    candidates = [c for c in candidates if c.a * c.b == fewest]
    candidates.sort(key=lambda c: (wasted(c), c.a, c.b))
    return candidates[0]


@pytest.fixture
def default_catalog() -> GridCatalog:
    return GridCatalog.square(6)

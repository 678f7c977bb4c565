"""scikit-learn style wrapper around the reconstruction pipeline."""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .fastrecon import hankel_tables, run_pipeline
from .forward import DEFAULT_DELTA2, AcquisitionConfig
from .grids import AngularGrid, ImageGrid, Sinogram, TimeGrid, next_pow2
from .radon import FilterSpec, invert


class ArcReconstructor(TransformerMixin, BaseEstimator):
    """Boundary data ``(M, n_extended)`` -> image ``(image_size, image_size)``.

    ``fit`` only fixes the grids and tabulates the Hankel functions, which
    then serve every later ``transform`` call of the same shape.
    """

    def __init__(
        self,
        mode="reduced",
        t_max=2.0,
        n_time=256,
        zero_arc=(190.0, 350.0),
        mask="hard",
        delta2=DEFAULT_DELTA2,
        image_size=512,
        rolloff=0.0,
        pad_factor=4,
        workers=1,
    ):
        self.mode = mode
        self.t_max = t_max
        self.n_time = n_time
        self.zero_arc = zero_arc
        self.mask = mask
        self.delta2 = delta2
        self.image_size = image_size
        self.rolloff = rolloff
        self.pad_factor = pad_factor
        self.workers = workers

    def _grids(self, shape):
        m, n_ext = shape
        dt = self.t_max / self.n_time
        return TimeGrid(self.n_time, dt, 0.0, n_ext, next_pow2(self.pad_factor * n_ext)), AngularGrid(m)

    def fit(self, X, y=None):
        X = np.asarray(X.values if isinstance(X, Sinogram) else X, dtype=np.float64)
        if X.ndim != 2:
            raise ValueError("expected a 2D array of shape (detectors, time samples)")
        grid_t, grid_theta = self._grids(X.shape)
        self.grid_t_, self.grid_theta_ = grid_t, grid_theta
        self.tables_ = hankel_tables(grid_t.frequency_grid(), grid_theta.m_detectors // 2, workers=self.workers)
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        if not hasattr(self, "tables_"):
            raise ValueError("ArcReconstructor is not fitted yet")
        s = X if isinstance(X, Sinogram) else Sinogram(self.grid_t_, self.grid_theta_, np.asarray(X, dtype=np.float64))
        if s.values.shape != (self.grid_theta_.m_detectors, self.grid_t_.n_extended):
            raise ValueError(f"shape {s.values.shape} differs from the fitted shape")
        cfg = AcquisitionConfig(self.delta2, None if self.zero_arc is None else tuple(self.zero_arc), self.mask)
        d = run_pipeline(s, cfg, mode=self.mode, workers=self.workers, tables=self.tables_)
        img = invert(d, ImageGrid(self.image_size), FilterSpec.for_kind(d.kind, rolloff=self.rolloff), workers=self.workers)
        return np.array(img.values)

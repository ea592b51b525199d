"""Segment-model interface.

A segment model supplies log P(x_j | x_{1:j-1}, z_i): the density of one
observation given everything before it and the parameters of the segment it
belongs to.  Conditioning on the whole history is allowed.
"""

from __future__ import annotations

from abc import ABC, abstractmethod

import numpy as np

from ..errors import CapabilityError, ContractViolation


class SegmentModel(ABC):
    """Per-point conditional densities for a changepoint model.

    Subclasses implement :meth:`log_density` and, if they support gradients,
    :meth:`log_density_grad`.  The matrix methods loop over both; override
    them with vectorised versions where the model allows.
    """

    #: names of the per-segment parameters, in column order of ``z``
    param_names: tuple[str, ...] = ()

    @property
    def n_params(self) -> int:
        return len(self.param_names)

    @abstractmethod
    def log_density(self, history: np.ndarray, value: float, z_i: np.ndarray) -> float:
        """log P(value | history, z_i).  Must be finite or -inf."""

    def log_density_grad(self, history: np.ndarray, value: float, z_i: np.ndarray) -> np.ndarray:
        """Gradient of :meth:`log_density` with respect to ``z_i``."""
        raise CapabilityError(f"{type(self).__name__} does not provide log-density gradients")

    @property
    def supports_gradient(self) -> bool:
        return type(self).log_density_grad is not SegmentModel.log_density_grad

    def params_array(self, z) -> np.ndarray:
        """Coerce segment parameters to an (m, d) float array."""
        z = np.array(z, dtype=float)
        if z.ndim == 1 and self.n_params == 1:
            z = z[:, None]
        if z.ndim != 2 or z.shape[1] != self.n_params or z.shape[0] < 1:
            raise ContractViolation(
                f"expected segment parameters of shape (m, {self.n_params}), got {z.shape}"
            )
        return z

    def log_density_matrix(self, x: np.ndarray, z) -> np.ndarray:
        z = self.params_array(z)
        out = np.empty((z.shape[0], x.size))
        for i, z_i in enumerate(z):
            for j in range(x.size):
                out[i, j] = self.log_density(x[:j], x[j], z_i)
        return out

    def log_density_grad_matrix(self, x: np.ndarray, z) -> np.ndarray:
        """Array of shape (m, n, d) with d log P(x_j | ., z_i) / d z_i."""
        if not self.supports_gradient:
            raise CapabilityError(f"{type(self).__name__} does not provide log-density gradients")
        z = self.params_array(z)
        out = np.empty((z.shape[0], x.size, self.n_params))
        for i, z_i in enumerate(z):
            for j in range(x.size):
                out[i, j] = self.log_density_grad(x[:j], x[j], z_i)
        return out

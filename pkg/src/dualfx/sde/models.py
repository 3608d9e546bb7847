"""Driftless diffusion models and the change-of-numeraire dual.

A model gives the diffusion coefficient of the exchange rate X under the
dollar measure.  Its dual is the diffusion of Y = 1/X under the euro measure,
obtained from the local change of measure:

    sigma_Y(y, t) = y^2 * sigma(1/y, t),      y0 = 1/x0.

Explosion of X is never simulated directly; it is bookkept as absorption of Y
at zero in the dual simulation.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping

SigmaFn = Callable[[object, float], object]  # accepts numpy arrays in x


@dataclass(frozen=True)
class DiffusionModel:
    """Diffusion of X under the dollar measure: dX = sigma(X, t) dW, X_0 = x0.

    `sigma` must be finite on (0, inf) x [0, T); a singularity as t -> T is
    allowed (the deterministically time-changed model uses one) and must be
    handled by the model's exact scheme.  `dual_payoff_flags` maps claim kinds
    to "integrable" / "nonintegrable" / "unknown" verdicts on the euro-side
    expectation, so the pricer can return an analytic infinity where Monte
    Carlo would silently produce garbage.
    """

    name: str
    sigma: SigmaFn
    x0: float
    horizon: float
    zero_attainable: bool
    dual_payoff_flags: Mapping[str, str] = field(default_factory=dict)
    exact_scheme: str | None = None
    dual_exact_scheme: str | None = None
    params: Mapping[str, float] = field(default_factory=dict)


@dataclass(frozen=True)
class DualDiffusion:
    """Diffusion of Y = 1/X under the euro measure: dY = sigma_y(Y, t) dW."""

    name: str
    sigma: SigmaFn
    y0: float
    horizon: float
    exact_scheme: str | None = None
    params: Mapping[str, float] = field(default_factory=dict)


def derive_dual_model(model: DiffusionModel) -> DualDiffusion:
    """The diffusion of the reciprocal rate under the euro measure."""
    primal = model.sigma

    def sigma_y(y, t):
        return y * y * primal(1.0 / y, t)

    return DualDiffusion(
        name=f"{model.name}.dual",
        sigma=sigma_y,
        y0=1.0 / model.x0,
        horizon=model.horizon,
        exact_scheme=model.dual_exact_scheme,
        params=model.params,
    )

"""Ready-made densities and scenarios for the worked examples.

The bundled ``.scn`` files describe the same scenarios; a test checks that
parsing them reproduces these objects.
"""

from __future__ import annotations

import math

from .functions import (CostCdf, DeviationCost, Feasibility, GaussianBumps, Motivation,
                        ProductPdf, QuadraticMotivation, mix_pdfs, normalize_pdf)
from .model1d import Scenario1D


def bell(offset: float = math.exp(-2.0)):
    """Single peak ``exp(-x^2 / (2 * 0.5^2)) - offset``; the offset makes it vanish at +-1."""
    return normalize_pdf(GaussianBumps((1.0,), (0.0,), (0.5,), offset))


def double_peak():
    return normalize_pdf(GaussianBumps((0.5, 0.5), (-0.5, 0.5), (0.3, 0.3), 0.1246))


def wide_peak():
    """Nearly flat single peak, ``exp(-x^2 / 16) - 0.9394``."""
    return normalize_pdf(GaussianBumps((1.0,), (0.0,), (math.sqrt(8.0),), 0.9394))


def close_peaks():
    return normalize_pdf(GaussianBumps((0.5, 0.5), (-0.3, 0.3), (0.25, 0.25), 0.0099))


def ex1(k_right: float = 0.6, k_left: float = 0.6) -> Scenario1D:
    return Scenario1D(bell(), CostCdf(0.5), Motivation((1.0, 0.0, 1.0)),
                      DeviationCost(k_left, -0.7), DeviationCost(k_right, 0.7))


def transition1(lam: float = 0.0) -> Scenario1D:
    """Single peak turning into two separated peaks as ``lam`` goes from 0 to 1."""
    pdf = mix_pdfs(bell(0.1353), double_peak(), lam)
    return Scenario1D(pdf, CostCdf(0.5), Motivation((0.5, 0.0, 1.0)),
                      DeviationCost(0.3, -0.7), DeviationCost(0.5, 0.8))


def transition2(lam: float = 0.0) -> Scenario1D:
    """Wide single peak turning into two close peaks; turnout clamps at one."""
    pdf = mix_pdfs(wide_peak(), close_peaks(), lam)
    return Scenario1D(pdf, CostCdf(0.5), Motivation((0.7, 0.0, 1.0)),
                      DeviationCost(0.4, -0.7), DeviationCost(0.5, 0.6))


def ex2d(region: str = "bisector", phi_scale: float = 1.0):
    """Two policy axes (tax, welfare) with a feasibility cost tilting against low tax plus high welfare."""
    from .multidim import ScenarioND
    axis = lambda mu: normalize_pdf(GaussianBumps((1.0,), (mu,), (0.5,)))
    return ScenarioND(
        pdf=ProductPdf((axis(0.1), axis(-0.1))),
        cost=CostCdf(1.0, kind="identity"),
        motivation=QuadraticMotivation(0.5, (0.25, 0.25)),
        left=DeviationCost(1.0, (-0.7, -0.5)),
        right=DeviationCost(1.0, (0.6, 0.6)),
        feasibility=Feasibility((0.1, -0.1), phi_scale),
        region=region,
    )

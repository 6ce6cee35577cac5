"""Numerical lab for degenerate reaction-diffusion in one dimension.

Core pieces: reaction nonlinearities with bistable or monostable sign
structure (`reaction`), the elliptic time-map machinery for the pressure
boundary-value problem (`elliptic`), a conservative finite-volume solver
for the density equation at stiff diffusion exponents (`pme`), traveling
wave speeds and profiles by phase-plane shooting (`waves`), and multi-run
studies reproducing the stiff-limit behavior (`experiments`).
"""

from . import elliptic, errors, experiments, numerics, pme, reaction, waves
from .reaction import ReactionModel, bistable_quadratic, polynomial_reaction

__all__ = ["elliptic", "errors", "experiments", "numerics", "pme", "reaction",
           "waves", "ReactionModel", "bistable_quadratic", "polynomial_reaction"]

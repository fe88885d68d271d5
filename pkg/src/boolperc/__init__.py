"""Simulation lab for vacancy percolation in the planar and spatial Boolean model."""
from .laws import Exponential, Fixed, LawSpecError, Pareto, RadiusLaw, Uniform, ZeroAtom, law_from_dict
from .model import Grain, GrainSet, law_moment, law_tail, sample_boolean, sample_poisson_points, sample_reaching_grains
from .regions import Difference, Disc, Neighborhood, Rect, Region
from .rng import RngStream
from .stats import BernoulliEstimate, wilson_interval

__version__ = "0.1.0"

__all__ = [
    "Exponential", "Fixed", "LawSpecError", "Pareto", "RadiusLaw", "Uniform", "ZeroAtom", "law_from_dict",
    "Grain", "GrainSet", "law_moment", "law_tail", "sample_boolean", "sample_poisson_points",
    "sample_reaching_grains", "Difference", "Disc", "Neighborhood", "Rect", "Region", "RngStream",
    "BernoulliEstimate", "wilson_interval",
]

"""
Search methods run before the poll of each Mads iteration.
"""

from madsopt.algos.search.base import SearchMethod
from madsopt.algos.search.lh import LatinHypercubeSearch, lh_points, lh_search_points
from madsopt.algos.search.nelder_mead import NelderMeadSearch, nm_candidates, nm_search_points
from madsopt.algos.search.quad_model import QuadModelSearch, fit_quadratic_model, quad_model_search_points
from madsopt.algos.search.speculative import SpeculativeSearch, speculative_search_points

__all__ = [
    "SearchMethod",
    "LatinHypercubeSearch",
    "NelderMeadSearch",
    "QuadModelSearch",
    "SpeculativeSearch",
    "lh_points",
    "lh_search_points",
    "nm_candidates",
    "nm_search_points",
    "fit_quadratic_model",
    "quad_model_search_points",
    "speculative_search_points",
]

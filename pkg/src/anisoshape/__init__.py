"""Anisotropic free-energy minimisation on planar polygonal curves."""

from .anisotropy import Anisotropy, elliptic, iso, lq, parse_anisotropy, wulff_shape
from .curve2d import MultiCurve, build, circle, convex_hull, enclosed_area, load_curve, save_curve
from .errors import AllComponentsVanished, AnisoshapeError, InputError
from .potential import Potential, convexity_modulus, quadratic, signed_distance_potential, tilted
from .report import Certificate, diagnose, write_svg
from .solve import (
    SolveConfig,
    SolveResult,
    atw_step,
    minimize_constrained,
    minimize_multistart,
    minimize_unconstrained,
)
from .twopoint import component_instability, lemma_key_check, subsolution_certificate, two_point
from .variation import check_variations, first_variation_residual, jacobi_operator, spectrum, stability_form

__version__ = "0.1.0"

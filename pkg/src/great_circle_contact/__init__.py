"""
Great Circle Contact

Numerical verification of great-circle fibrations of S^3: the fibration
criterion, the contact structure orthogonal to the fibres and a contraction
to the Hopf fibration.
"""

__version__ = "0.1.0"

from .fibration import FibrationSpec, PullToward, fibre_through, left_hopf, right_hopf, solve_fibres
from .chart import firing_jacobian, prop1_margin, standardize
from .contact import contact_coefficient_numeric, contact_along_path
from .specfile import load_spec_file

__all__ = [
    "FibrationSpec",
    "PullToward",
    "fibre_through",
    "left_hopf",
    "right_hopf",
    "solve_fibres",
    "standardize",
    "firing_jacobian",
    "prop1_margin",
    "contact_coefficient_numeric",
    "contact_along_path",
    "load_spec_file",
]

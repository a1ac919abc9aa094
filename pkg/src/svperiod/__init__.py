"""Numerical single-valued periods on the projective line, C^n and elliptic curves."""
from .errors import DomainError, InputError, SvPeriodError
from .forms import LinFactor, LogForm1, LogFormN, c0_dual_hypercube, c0_dual_path, leray_residue, residue_coeff
from .geom import INF, Arc, Chain, Segment, circle, dual_pairing_matrix, intersection_matrix, intersection_number
from .quad import Estimate, McConfig, QuadConfig, RadialTest, cauchy_stokes_pairing, integrate_mc, integrate_path, integrate_sphere
from .svcore import (
    PeriodMatrix,
    SvMatrix,
    double_copy_check,
    fubini_check,
    mzv_series,
    period_matrix,
    sv_log,
    sv_matrix,
    sv_mzv,
    sv_pairing,
)

__version__ = "0.1.0"

"""Smallest canonical heights of elliptic curves over fields of degree <= 2."""
from __future__ import annotations

from .bounds import (
    CPS_QUADRATIC,
    GLOBAL_SILVERMAN,
    HeightDifferenceBound,
    SearchCutoffs,
    cps_quadratic_diff_bound,
    discriminant_cutoff,
    global_diff_bound,
    lang_invariant,
    search_cutoffs,
    select_bound,
    silverman_height_floor,
)
from .curve import CurveModel, CurvePoint, SingularCurveError, compute_invariants, minimal_model, torsion_test
from .heights import NORMALIZATION_FACTOR, HeightValue, canonical_height, limit_oracle
from .qfield import QQ, QuadElement, QuadField, canonicalize, enumerate_fields, sqrt_in_field, weil_height
from .search import (
    HEURISTIC,
    NO_POINT_FOUND,
    PROVED,
    AmbiguousMinimumError,
    SearchCertificate,
    SearchConfig,
    certify_minimum,
    conjecture_stats,
    enumerate_x,
    initial_search,
)

__version__ = "0.1.0"

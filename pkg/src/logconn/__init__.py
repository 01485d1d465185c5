"""Exact computations with logarithmic connections on truncated
normal-crossing formal rings."""
from .errors import DocumentError, LogConnError, NotIntegrableError, NotNilpotentError, UsageError
from .series import (Derivation, RingSpec, Series, SeriesMatrix, apply_derivation,
                     basis_derivations, delta, valuation)
from .connection import (Connection, Family, LinearData, check_integrability,
                         check_nilpotent_residues, constant_connection, direct_sum, dual,
                         extend_u, gauge, pullback_from_log_point, residues, restrict,
                         set_u_zero, tensor, unit)
from .normal_form import (GaugeTransform, base_extend, crossing_expand, descend_crossing,
                          descend_smooth, expand_from_linear_data, gauge_normal_form,
                          katz_project, nilpotent_trigonalize, reduce_to_linear_data,
                          reduce_with_gauge, sylvester_solve)
from .homological import (HorizontalMorphism, check_horizontal, de_rham_cohomology, ext1,
                          ga_rep, horizontal_sections, kernel_cokernel, lift_rank1,
                          lift_uniqueness, nilpotent_log, pushforward_log_point,
                          u_bicomplex_cohomology)
from .document import parse_document, serialize_document

__all__ = [
    "DocumentError", "LogConnError", "NotIntegrableError", "NotNilpotentError", "UsageError",
    "Derivation", "RingSpec", "Series", "SeriesMatrix", "apply_derivation", "basis_derivations",
    "delta", "valuation",
    "Connection", "Family", "LinearData", "check_integrability", "check_nilpotent_residues",
    "constant_connection", "direct_sum", "dual", "extend_u", "gauge", "pullback_from_log_point",
    "residues", "restrict", "set_u_zero", "tensor", "unit",
    "GaugeTransform", "base_extend", "crossing_expand", "descend_crossing", "descend_smooth",
    "expand_from_linear_data", "gauge_normal_form", "katz_project", "nilpotent_trigonalize",
    "reduce_to_linear_data", "reduce_with_gauge", "sylvester_solve",
    "HorizontalMorphism", "check_horizontal", "de_rham_cohomology", "ext1", "ga_rep",
    "horizontal_sections", "kernel_cokernel", "lift_rank1", "lift_uniqueness", "nilpotent_log",
    "pushforward_log_point", "u_bicomplex_cohomology",
    "parse_document", "serialize_document",
]

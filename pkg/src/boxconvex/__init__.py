"""Computational tools for box-n-convex functions of several variables."""

from .core import (AxisSubset, Box, MultiIndex, PointSystem, all_subsets, complement,
                   slice_function, validate_point_system)
from .divdiff import (ConvexityCertificate, certify_box_convexity, check_box_affine, divdiff_1d,
                      divdiff_multi, divdiff_report, divdiff_right_limit)
from .errors import (BoxConvexError, DomainError, EvaluationError, ParseError, PointSystemError,
                     PreconditionError, SchemaError)
from .exprfn import (Builtin, Combination, Expression, FunctionSpec, Tabulated, evaluate,
                     function_from_json, parse_expression, tensor)
from .inequalities import (GapReport, alternating_gap, hh_check, jensen_gap, rasa_check, rasa_factor,
                           strongly_convex_check)
from .measures import (DiscreteSignedMeasure, FV1Function, TensorFVFunction, UniformSegment, binomial,
                       convolve, convolve_power, dirac, fv1_decompose, moment, rectangle_mass,
                       survival, survival_convolution, tensor_decompose, truncated_power_moment)
from .orders import (OrderVerdict, check_box_order_joint, check_box_order_product,
                     check_box_order_signed, check_nconvex_order, check_signed_positive,
                     classify_spline_sign, product_pair)
from .pseudopoly import (PseudoPolynomial, grid_interpolant, lagrange_slice_interpolant, regularize)
from .represent import (RepresentationSpec, chi, roundtrip_extract, spline_basis, synthesize)

__version__ = "0.1.0"

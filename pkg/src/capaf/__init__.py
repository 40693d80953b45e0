"""Anisotropic capillary convex bodies in the half-space.

Construction of capillary convex bodies from Minkowski norms and numerical
verification of the mixed-volume calculus: mixed-volume symmetry,
quermassintegral correspondence, Steiner formula, Minkowski integral
formula, kernel characterization, the associated elliptic operator, and
the Alexandrov-Fenchel inequalities with their equality cases.
"""

from .bodies import (CapillaryBody, body_from_field, make_wulff_cap,
                     minkowski_combine, random_capillary_body, rebind,
                     translate_horizontal)
from .capgeom import (CapConfig, CapMesh, admissible_range, build_cap_mesh,
                      ef_vector, icosphere, region_residual)
from .config import SuiteConfig, parse_config
from .errors import (CapafError, ConvexityViolationError, GenerationError,
                     InvalidConfigError, InvalidInputError,
                     MeshConstructionError, ModelInvalidError, NumericError)
from .fields import (CombinationField, LinearField, SphericalBumpField,
                     SupportField, WulffCapField, kernel_field)
from .functionals import (InequalityReport, MixedVolumeResult,
                          af_inequality_check, divergence_identity_check,
                          generalized_chain_check, hull_volume_oracle,
                          minkowski_formula_residual, mixed_volume,
                          operator_a_apply, operator_a_energy_check,
                          quermassintegral, quermassintegral_chain_check,
                          steiner_check, symmetry_check, volume)
from .mixdisc import (SymMatrixTuple, alexandrov_md_check,
                      md_transform_check, mixed_disc_gradient,
                      mixed_discriminant)
from .norms import (EllipsoidNorm, IsotropicNorm, MinkowskiNorm,
                    PerturbedNorm, PerturbTerm, anisotropy_matrix,
                    cahn_hoffman, dual_norm, eval_norm, metric_g, q_tensor)
from .report import RunReport, emit_report

__version__ = "0.1.0"

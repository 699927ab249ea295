"""Numerics for self-affine systems: Lyapunov spectra, stationary direction
measures on Grassmannians, separation certificates, and empirical checks of
the projection-dimension criterion."""

from .exterior import (BasisIndex, CompoundMatrix, MultiVector, basis_indices,
                       compound, compound_entries, inner, num_basis, wedge,
                       wedge_columns)
from .furstenberg import (ChainProvenance, ContractionResult, GrassmannCloud,
                          IrreducibilityCertificate, StationarityResult,
                          SubspaceTrack, bottom_subspace_track, contraction_check,
                          correlation_dimension, irreducibility_check, sample_chain,
                          stationarity_gap, stationarity_test, transversality_rate)
from .grassmann import (ProjectivePoint, Subspace, act, complement, dist,
                        orthonormalize, pairwise_dist, projector, proj_dist, psi,
                        random_subspace, transversal)
from .lyapunov import (IFSSpec, LyapunovEstimate, LyapunovReport, analyze_spectrum,
                       entropy, estimate_lyapunov, k_index, lyapunov_dimension,
                       multiplicity_m, singular_values)
from .report import report_json, report_record, summary_text, write_report
from .selfaffine import (CoverStats, PointCloud, SSCResult, attractor_point,
                         conditional_entropy, default_depth, det_sum,
                         local_dimension_profile, measure_dimension_estimate,
                         outer_radius, rectangle_cover_stats, sample_measure,
                         slice_dimension_F, slice_dimension_profile, ssc_certify)
from .verifier import (ConsistencyError, VerificationReport, VerifyOptions, builtin,
                       dump_spec, iterate_spec, load_spec, spec_record, verify)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]

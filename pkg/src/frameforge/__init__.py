"""Exact Schauder-frame operators, associated norms and schedule search."""

from .errors import (ApproximationError, FrameForgeError, NoCertificateError, PreconditionError,
                     WeakCertificateError)
from .frames import (CanonicalBasis, Example23, ExplicitFrame, FrameProvider, analysis,
                     frame_constant, load_frame, partial_reconstruction, shrinking_tail_bound,
                     synthesis)
from .norms import (DominationWitness, NormReport, domination_probe, ell1plus_prefix_test,
                    k_subnorm, min_norm, min_norm_closed_form_ex23, nk_norm, subsequence_norm)
from .pelczynski import (AuerbachSystem, SplitSystem, assemble_bap_frame, auerbach_basis,
                         split_operator, verify_pel)
from .reals import CertifiedReal
from .schedule import NkSchedule, find_schedule, validate_schedule
from .spaces import AmbientSpace, CoefVector, FiniteRankOperator, ambient_norm, operator_norm, pair

__all__ = [
    "AmbientSpace", "ApproximationError", "AuerbachSystem", "CanonicalBasis", "CertifiedReal",
    "CoefVector", "DominationWitness", "Example23", "ExplicitFrame", "FiniteRankOperator",
    "FrameForgeError", "FrameProvider", "NkSchedule", "NoCertificateError", "NormReport",
    "PreconditionError", "SplitSystem", "WeakCertificateError", "ambient_norm", "analysis",
    "assemble_bap_frame", "auerbach_basis", "domination_probe", "ell1plus_prefix_test",
    "find_schedule", "frame_constant", "k_subnorm", "load_frame", "min_norm",
    "min_norm_closed_form_ex23", "nk_norm", "operator_norm", "pair", "partial_reconstruction",
    "shrinking_tail_bound", "split_operator", "subsequence_norm", "synthesis",
    "validate_schedule", "verify_pel",
]

"""First-passage PMFs of discrete-time semi-Markov processes by inverse DFT."""
from .bounds import (BoundCertificate, choose_bound, monotone_tail_certificate,
                     n_from_cantelli, n_from_markov, periodic_tail_certificate)
from .errors import NumericalError, ValidationError
from .lattice import (DistributionSpec, MomentSummary, moments, parse_dist_spec,
                      pmf_at, sample_pmf, tail)
from .smp import (FirstPassageResult, SmpModel, TransitionEdge, eval_loop_formula,
                  first_passage_moments, first_passage_pmf, first_passage_spectrum)
from .transform import (LatticePmf, Spectrum, dft_forward, dft_inverse, extract_real,
                        geometric_transform, naive_dft)

__version__ = "0.1.0"

"""Spectral rank aggregation under the Erdos-Renyi outliers model."""

from .errors import (ConstantScores, EroError, IsolatedNode, NoConvergence, NotAPermutation,
                     OutOfRegime, TooLarge, ZeroMatrix, ZeroVector)
from .eigen import EigenPair, top_eigenpair_antisym, top_eigenpair_normalized
from .metrics import displacement, kemeny_mismatch, relative_linf_error
from .model import (ComparisonMatrix, EroParams, GroundTruth, custom_ground_truth,
                    expected_degree, make_ground_truth, sample_comparisons)
from .population import PopulationSpectrum, population_spectrum
from .ranking import SpectralEstimate, align_sign, rank_normalized, rank_unnormalized

__version__ = "0.1.0"

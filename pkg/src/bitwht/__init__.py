"""Bit-serial blockwise Walsh-Hadamard processing, end to end in numpy.

Transforms, the sign-magnitude bitplane codec, the 1-bit comparator
path with its noise model, predictive early termination, smooth
training surrogates, and a desk-scale trainable network.
"""

from .activation import ThresholdVector, soft_threshold, soft_threshold_grad
from .crossbar import (CrossbarConfig, NoiseModel, PsumRecord, comparator,
                       exact_oracle, f0_apply, f0_apply_codes, failure_stats,
                       psum_records, psum_row)
from .earlyterm import (CycleHistogram, RunningBounds, TerminationTrace,
                        cycle_histogram, f0_with_early_term,
                        random_termination_study, should_terminate,
                        start_bounds, threshold_to_code, update_bounds)
from .fixedpoint import (BitplaneMatrix, SignedBitplane, code_scale,
                         dequantize, quantize, quantize_codes, signed_plane)
from .hadamard import (BwhtPlan, WalshMatrix, build_hadamard, build_walsh,
                       bwht_forward, bwht_inverse, bwht_plan, fwht,
                       sequency_permutation, to_sequency)
from .network import (BwhtLayer, BwhtNetwork, Dataset, LossConfig,
                      TrainReport, build_network, evaluate, layer_forward,
                      load_checkpoint, loss_mod, make_layer,
                      make_toy_dataset, penalty_term, predict,
                      save_checkpoint, train)
from .surrogate import (SurrogateConfig, TauSchedule, bit_surrogate,
                        bit_surrogate_grad, f0_surrogate, sign_surrogate,
                        sign_surrogate_grad, surrogate_backward,
                        surrogate_forward)

__all__ = [
    "BitplaneMatrix", "BwhtLayer", "BwhtNetwork", "BwhtPlan",
    "CrossbarConfig", "CycleHistogram", "Dataset", "LossConfig",
    "NoiseModel", "PsumRecord", "RunningBounds", "SignedBitplane",
    "SurrogateConfig", "TauSchedule", "TerminationTrace", "ThresholdVector",
    "TrainReport", "WalshMatrix", "bit_surrogate", "bit_surrogate_grad",
    "build_hadamard", "build_network", "build_walsh", "bwht_forward",
    "bwht_inverse", "bwht_plan", "code_scale", "comparator",
    "cycle_histogram", "dequantize", "evaluate", "exact_oracle", "f0_apply",
    "f0_apply_codes", "f0_surrogate", "f0_with_early_term", "failure_stats",
    "fwht", "layer_forward", "load_checkpoint", "loss_mod", "make_layer",
    "make_toy_dataset", "penalty_term", "predict", "psum_records",
    "psum_row", "quantize", "quantize_codes", "random_termination_study",
    "save_checkpoint",
    "sequency_permutation", "should_terminate", "sign_surrogate",
    "sign_surrogate_grad", "signed_plane", "soft_threshold",
    "soft_threshold_grad", "start_bounds", "surrogate_backward",
    "surrogate_forward", "threshold_to_code", "to_sequency", "train",
    "update_bounds",
]

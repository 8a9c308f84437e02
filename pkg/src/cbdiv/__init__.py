"""Conditional ball divergence: estimation and conditional independence tests.

A library and CLI that estimate the conditional ball divergence between
random vectors x and y given z from i.i.d. samples and calibrate it into
tests via conditional randomization, conditional permutation, a local wild
bootstrap, and a discrete local bootstrap.
"""

__version__ = "0.1.0"

from . import backend
from .data import Dataset, DistanceOrder, load_csv, pairwise_distances, parse_roles, rank_order
from .errors import (
    CbdError,
    ContractViolationError,
    DegenerateScaleError,
    InsufficientSampleError,
    InvalidInputError,
    InvalidModelError,
    InvalidScenarioError,
    SchemaError,
)
from .kernels import (
    Bandwidths,
    KernelSpec,
    default_bandwidths,
    kde_yz,
    kde_z,
    kernel_profile,
    weights_yz,
    weights_z,
)
from .ballcore import (
    delta,
    eta,
    phi_core,
    phi_sym,
    pointwise_cbd,
    pointwise_cbd_bruteforce,
    theta2_weighted,
    theta2_weighted_bruteforce,
)
from .estimator import (
    CbdStatistic,
    VStatEvaluator,
    WeightFunction,
    cbd_linear,
    cbd_ustat,
    cbd_vstat,
    normalized_cbd,
)
from .resampling import (
    ConditionalSampler,
    GaussianAffineSampler,
    ResamplePlan,
    TableSampler,
    UniformAbsSampler,
    crt_resample,
    cpt_resample,
    dlb_resample,
    lwb_resample,
)
from .inference import KsResult, TestResult, ks_two_sample, resampling_pvalue, run_test
from .datagen import (
    MarksTable,
    ScenarioSpec,
    gen_scenario,
    load_marks,
    marks_dataset,
    misspecified_sampler,
    subsample,
    true_sampler,
)
from .harness import ExperimentSpec, KsStudySpec, PowerPoint, run_ks_study, run_power

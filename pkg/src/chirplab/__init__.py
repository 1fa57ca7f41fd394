"""CHIRP (W1-MDP distance) versus SOPR on SimpleGrid, with CHIRP policy reuse."""
from ._kernels import BACKEND
from .analysis import (CalibrationCurve, CorrelationReport, PairedSample, bin_equal_volume,
                       calibrate, correlate, fit_calibration)
from .chirp import (DistanceMatrix, MCCEConfig, SamplingConfig, Scheme, build_empirical,
                    chirp_exact, distance_matrix, estimate_chirp)
from .clustering import ClusterAssignment, brute_force_medoids, k_medoids
from .gridworld import Action, Cell, GridMdp, enumerate_state_actions, make_variant, reset_to, step
from .lifelong import ReuseStrategy, RunLog, Scenario, evaluate_success, run_scenario
from .policy_oracle import PolicyRole, TabularPolicy, optimal_policy, policy_evaluation
from .sopr import SoprResult, calculability_check, sopr
from .transport import PointCloud, TransportPlan, w1_bruteforce, w1_exact

__version__ = "0.1.0"

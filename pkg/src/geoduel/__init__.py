"""Chart-based workbench for dual, torsion-dual and mutual connection geometry."""
from .errors import GeoDuelError
from .expr import parse_expr
from .geometry import ConnectionJets, MetricField, MetricJets, christoffel_lc, curvature, nonmetricity, torsion
from .jet import Jet, Jet2, VectorFieldSpec, eval_jet2
from .scenario import load_scenario, parse_scenario
from .suites import run_scenario
from .tensor import DenseTensor

__version__ = "0.1.0"

__all__ = [
    "ConnectionJets",
    "DenseTensor",
    "GeoDuelError",
    "Jet",
    "Jet2",
    "MetricField",
    "MetricJets",
    "VectorFieldSpec",
    "christoffel_lc",
    "curvature",
    "eval_jet2",
    "load_scenario",
    "nonmetricity",
    "parse_expr",
    "parse_scenario",
    "run_scenario",
    "torsion",
]

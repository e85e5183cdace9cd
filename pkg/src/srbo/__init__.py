"""nu-SVM and one-class SVM with safe sample screening along a nu grid."""
from .data import Dataset, DataError, ParseError, load, parse_csv, parse_libsvm, scale, split
from .kernel import GramOracle, KernelSpec
from .nusvm import NuSvmModel, kkt_audit, train_full
from .ocsvm import OcSvmModel, decision_oc, solve_path_oc, train_full_oc
from .qp import (NuBoxConstraints, SimplexBoxConstraints, dcdm_solve, pg_reference_solve,
                 project_box_linear, smo_equality_solve)
from .screening import solve_path

__version__ = "0.1.0"

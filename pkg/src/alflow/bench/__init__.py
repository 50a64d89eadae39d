from .cases import (CaseReport, SweepPoint, build_problem, case_defaults, far_field_viscosity, make_solver,
                    power_law_contrast, run_case, velocity_error_L2)
from .config import CASES, RunConfig, parse_assignments, read_config, write_config
from .exact import exact_bingham
from .report import HEADER, read_report, write_fields, write_report

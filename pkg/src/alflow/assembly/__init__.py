from .forms import BlockOperator, LevelAssembler
from .pattern import BlockPattern, zero_rows_cols
from .problem import ProblemDefinition, velocity_constraints, zero_bc

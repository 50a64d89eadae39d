from .krylov import KrylovConfig, KrylovResult, fgmres, gmres_fixed
from .multigrid import BlockPreconditioner, MGConfig, Multigrid
from .newton import (ALSolver, NewtonConfig, NewtonResult, continuation, fd_check, line_search_l2,
                     newton_solve, secant_continuation, secant_guess)
from .relaxation import (JacobiRelaxation, MacrostarRelaxation, PatchDofs, dense_schwarz,
                         relax_gmres_wrapped)
from .transfer import Transfer, build_transfer, interpolation_matrix, mixed_mass

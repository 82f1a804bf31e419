"""Block-recursive matrix inversion (Strassen scheme and LU baseline).

Blocks are processed by a core-capped stage executor; an analytical
level-sum cost model predicts wall-clock behaviour over partition sizes.
"""

from .blockmatrix import (
    BlockMatrix,
    MatrixBlock,
    QuadrantSet,
    Tag,
    TaggedBlock,
    arrange,
    break_mat,
    densify,
    multiply,
    partition,
    quadrant,
    scalar_mul,
    subtract,
)
from .cost import (
    CostBreakdown,
    CostParams,
    CostWeights,
    lu_cost_closed,
    lu_cost_levelsum,
    predict_u_curve,
    spin_cost_closed,
    spin_cost_levelsum,
)
from .estimators import CostModelRegressor, LUInverse, SpinInverse
from .exceptions import (
    BadBlockSize,
    BadSpec,
    BlockInvError,
    DimensionMismatch,
    FormatError,
    InsufficientData,
    InvalidParams,
    NonPowerOfTwo,
    OddGrid,
    SingularTile,
)
from .executor import ExecConfig, Executor, StageReport, account_multiply_shuffle, run_stage
from .lu import BlockLUResult, block_lu, lu_invert, triangular_invert
from .spin import InversionTrace, spin_invert, spin_invert_serial

__version__ = "0.1.0"

__all__ = [
    "BadBlockSize",
    "BadSpec",
    "BlockInvError",
    "BlockLUResult",
    "BlockMatrix",
    "CostBreakdown",
    "CostModelRegressor",
    "CostParams",
    "CostWeights",
    "DimensionMismatch",
    "ExecConfig",
    "Executor",
    "FormatError",
    "InsufficientData",
    "InvalidParams",
    "InversionTrace",
    "LUInverse",
    "MatrixBlock",
    "NonPowerOfTwo",
    "OddGrid",
    "QuadrantSet",
    "SingularTile",
    "SpinInverse",
    "StageReport",
    "Tag",
    "TaggedBlock",
    "account_multiply_shuffle",
    "arrange",
    "block_lu",
    "break_mat",
    "densify",
    "lu_cost_closed",
    "lu_cost_levelsum",
    "lu_invert",
    "multiply",
    "partition",
    "predict_u_curve",
    "quadrant",
    "run_stage",
    "scalar_mul",
    "spin_cost_closed",
    "spin_cost_levelsum",
    "spin_invert",
    "spin_invert_serial",
    "subtract",
    "triangular_invert",
]

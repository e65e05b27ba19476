"""Programming photonic meshes of symmetric Mach-Zehnder interferometers.

Triangular and rectangular decompositions onto sMZIs, relocation of residual
phases to the mesh edges, and alternating-layer circuits programmed by
numerical optimization.
"""

from .alternating import (
    AlternatingCircuit,
    Distribution,
    Form,
    ImbalanceModel,
    OptimizeReport,
    alternating_layout,
    compactify,
    evaluate_alternating,
    expand_compact,
    infidelity,
    infidelity_gradient,
    optimize_phases,
    sample_imbalance,
)
from .clements import (
    AmziDecomposition,
    ClementsDecomposition,
    decompose_clements_amzi,
    decompose_clements_smzi,
    reconstruct_amzi,
    reconstruct_clements,
)
from .errors import (
    DecompositionError,
    LayoutError,
    NotUnitaryError,
    PhotomeshError,
    RelocationError,
    SchemaError,
    ShapeError,
)
from .linalg import UnitaryMatrix, as_unitary, global_phase_distance, haar_random_unitary, mat_mul
from .mesh import (
    Layout,
    MeshCircuit,
    PhaseSetting,
    SmziElement,
    SmziSetting,
    clements_edge_layout,
    evaluate,
    reck_layout,
    smzi_block,
)
from .reck import ReckDecomposition, decompose_reck, reconstruct_reck
from .relocate import PendingPhase, absorb_amzi_externals, layer_redundancy_check, relocate_all, relocate_one

__version__ = "0.1.0"

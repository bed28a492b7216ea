"""Exact finite models of rank-one towers with group-extension cocycles.

The package builds cutting-and-stacking tower schedules, decorates them with
cocycles into a semidirect product built from a finite abelian module, and
analyzes the resulting Koopman components as phased permutations: exact
spectra, weak-limit probes, correlation decay and spectral-multiplicity
bookkeeping with algebraic disjointness certificates.
"""

from .cf_builder import (
    CFSchedule,
    CFStage,
    DeltaBlock,
    build_schedule,
    concat_delta_blocks,
    delayed_staircase_cut,
    rigid_staircase_cut,
    staircase_cut,
    validate,
)
from .cocycle_engine import (
    CocycleStageMaps,
    CoordinateWord,
    SemidirectContext,
    StageLabel,
    TowerModel,
    canonical_word,
    evaluate_cocycle,
    schedule_labels,
    stage_maps,
    transition_values,
)
from .errors import CfspectraError
from .finite_algebra import (
    Character,
    CyclotomicSum,
    FiniteAbelianGroup,
    GroupAutomorphism,
    ModuleAction,
    RootOfUnity,
    cyclo_equal,
    dual_characters,
    orbit,
    orbit_average,
    orbit_trace_counts,
)
from .koopman_lab import (
    PhasedCycleOperator,
    SpectralSet,
    build_component,
    class_equivalence_check,
    correlation_decay,
    disjointness_certificate,
    exact_spectrum,
    multiplicity_report,
    simplicity_probe,
    weak_limit_probe,
)
from .module_factory import (
    AlgebraicTriple,
    CompactTower,
    DualityRecord,
    assemble_triple,
    compactify,
    dualize,
    orbit_block,
)
from .session import Session, SessionConfig, load_bundle, save_bundle, synth

__version__ = "0.1.0"

"""Exact verification of disjoint-occurrence inequalities and random-cluster bases."""

from .errors import (
    DegenerateFoldingError,
    EnumerationCapError,
    InputError,
    UnsupportedOperationError,
)
from .space import (
    Event,
    SitePairing,
    SpaceSpec,
    cylinder,
    enumerate_increasing,
    flip,
    is_decreasing,
    is_increasing,
)
from .boxops import (
    ChangingPathRule,
    FullRule,
    PotentialClusterRule,
    SelectionRule,
    SpinClusterRule,
    UpperOnesRule,
    WitnessPair,
    box,
    boxminus,
    minimal_witnesses,
    reimer_gap,
)
from .measures import (
    BkReport,
    Measure,
    build_measure,
    check_bk_pair,
    check_fkg_pair,
    check_lattice_condition,
    curie_weiss,
    curie_weiss_cubic,
    gibbs,
    ising,
    k_out_of_n,
    potts,
    product_measure,
    symmetric_levels,
)
from .potentials import (
    Potential,
    canonical_potential,
    efficient_cluster,
    ising_potential,
    is_inefficient,
    potts_potential,
    specialized_cluster,
)
from .folding import Folding, all_foldings, cw_fold_parameter, fold, folded_potential
from .rcr import (
    EtaConfig,
    RcrBase,
    check_cardinality_lemma,
    check_condition_i,
    check_condition_ii,
    compatible,
    eta_clusters,
    gibbs_base,
    trivial_base,
    validate_rcr,
)
from .permsolver import XiSolution, akj, count_matchings, matching_base, solve_xi
from .connectivity import corollary19_check, four_arm_check, path_event, punctured_box
from .harness import CheckRecord, run_suite

__version__ = "0.1.0"

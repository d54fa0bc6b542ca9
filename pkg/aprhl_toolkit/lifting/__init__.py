from .relation import Relation, Explicit, Eq, PredicatePair, LiftingError, SupportTooLarge, full_relation, \
    empty_relation, key_equality, key_implication
from .membership import LiftingCertificate, lifting_member, min_delta, skew_distance, endo_member, worst_event, \
    DEFAULT_BRUTE_FORCE_BOUND
from .witness import WitnessPair, Infeasible, witness_search
from .forall_eq import ForallEqResult, forall_eq_combine

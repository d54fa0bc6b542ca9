from .assertion import Assertion, AssertionShapeError, TRUE, conj, disj, negate, implies, parse_assertion, \
    print_assertion, holds, relation_of
from .entailment import Entailment, Policy, Verdict, Verified, Tested, Refuted, Assumed
from .judgement import Judgement
from .rules import Rule, RuleApp, ProofContext, ProofError, SideConditionFailed, GradeMismatch, \
    MeasurabilityRestriction, NeedContext, SideCondition, GradeAlgebra, apply_rule
from .script import ProofScript, ProofNode, Goal, load_script, parse_script
from .checker import Report, ProofChecker, check_proof
from .oracle import OracleRefusal, OracleResult, RunCache, universe, judgement_valid, required_delta
from .fuzz import FuzzConfig, FuzzError, FuzzSummary, Counterexample, MUTATIONS, FUZZ_RULES, soundness_fuzz

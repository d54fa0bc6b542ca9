from .evaluate import EvaluationError, evaluate, evaluate_vector, build_mechanism, store_value
from .exact import ExactResult, ExactInterpreter, UnrollBudgetExceeded, interp_exact, run_program, exact_pushforward
from .sampling import SampleResult, Sampler, interp_sample, sample_program, block_generator

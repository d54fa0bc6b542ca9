from .base import Mechanism, ContinuousMechanism, MechanismError, DomainError, ContinuousInExactMode
from .continuous import Laplace, Gauss, Cauchy, cauchy_gamma, LAPLACE_CONSTANTS
from .discrete import Bernoulli, UniformInt, RandomizedResponse, Exponential, distance_score
from .certify import Window, WindowCheck, Certificate, Refusal, SideConditionViolated, certify_window, \
    certify_named, certify_table, gauss_side_conditions, gauss_windows

__version__ = '0.1.0'

from .measure import Memory, SubDist
from .grade import Grade, grade_seq, grade_comp, grade_leq
from .config import RunConfig, load_config
from .lang import Program, parse_program, parse_file
from .semantics import interp_exact, interp_sample
from .logic import Judgement, Rule, ProofError, check_proof, load_script
from .audit import AuditSpec, AuditReport, audit_dp, load_audit
from .generator import APGenerator
from . import lifting, mechanisms

from .auditor import AuditError, AdjacentPair, EventFamily, AuditSpec, Margin, EventEstimate, Violation, PairReport, \
    AuditReport, AuditLoader, clopper_pearson, audit_dp, load_audit

from aprhl_toolkit.audit import AuditError, AuditLoader, AdjacentPair, audit_dp, clopper_pearson, load_audit
from aprhl_toolkit.measure import Memory
from aprhl_toolkit.records import RecordSyntaxError
from fractions import Fraction
import math
import pytest

PREFIX = 'audit 1\nprogram "laplace_release.pwhile"\npair(left: {x: 0}, right: {x: 1}, bound: 1)\n' \
         'claim(eps: 1, delta: 0)\ntrials(n: 20000, seed: 3)\n'


def load_text(events: str):
    return AuditLoader(PREFIX + events, base_dir='resources/corpus').load()


class TestClopperPearson:
    """Ensures the exact binomial bounds have their closed forms at the edges."""

    def test_no_successes(self):
        lower, upper = clopper_pearson(0, 100, 0.05)
        assert lower == 0
        assert math.isclose(upper, 1 - 0.05 ** (1 / 100), rel_tol=1e-9)

    def test_all_successes(self):
        lower, upper = clopper_pearson(100, 100, 0.05)
        assert upper == 1
        assert math.isclose(lower, 0.05 ** (1 / 100), rel_tol=1e-9)

    def test_brackets_estimate(self):
        lower, upper = clopper_pearson(300, 1000, 0.001)
        assert lower < 0.3 < upper

    def test_bad_count(self):
        with pytest.raises(ValueError):
            clopper_pearson(11, 10, 0.05)


class TestAuditDP:
    """Ensures audits find violations of wrong claims and stay consistent with true ones."""

    def test_laplace_consistent(self):
        report = audit_dp(load_audit('resources/corpus/laplace_eps1.audit'))
        assert report.verdict == 'Consistent'
        assert report.violation is None
        assert len(report.pairs[0].estimates) == 20
        assert report.pairs[0].exhausted == (0, 0)

    def test_laplace_violation(self):
        """Ensures the right tail exposes Laplace noise of scale 1 claimed at eps = 1/2."""
        report = audit_dp(load_audit('resources/corpus/laplace_eps05.audit'))
        assert report.verdict == 'Violation'
        assert report.violation.event == 'y > 2'
        assert report.violation.direction == 'backward'
        assert report.violation.margin.lower > 0.05
        assert report.describe().startswith('Verdict: Violation')

    def test_above_threshold(self):
        report = audit_dp(load_audit('resources/corpus/abovet.audit'))
        assert report.verdict == 'Consistent'
        assert [estimate.event for estimate in report.pairs[0].estimates] == [f'r = {v}' for v in (1, 2, 3, 4)]

    def test_predicates(self):
        report = audit_dp(load_text('events(predicates: ["y > 0", "y <= -1"])\n'))
        assert report.verdict == 'Consistent'
        first = report.pairs[0].estimates[0]
        assert first.event == 'y > 0'
        assert abs(first.p1 - 0.5) < 0.02
        assert abs(first.p2 - (1 - 0.5 * math.exp(-1))) < 0.02

    def test_seeded(self):
        """Ensures the same seed reproduces the same estimates."""
        spec = load_text('events(output: "y", bins: 5)\n')
        assert audit_dp(spec).to_record() == audit_dp(spec).to_record()

    def test_record(self):
        record = audit_dp(load_text('events(output: "y", edges: [0])\n')).to_record()
        assert record['verdict'] == 'Consistent'
        assert record['trials'] == 20000
        assert record['seed'] == 3
        assert [event['event'] for event in record['pairs'][0]['events']] == ['y <= 0', 'y > 0']
        assert record['pairs'][0]['left'] == {'x': 0, 'y': 0}

    @pytest.mark.parametrize('events', [
        'events(output: "y", predicates: ["y > 0"])\n',
        'events(output: "z", bins: 4)\n',
        'events(predicates: ["y +"])\n',
    ])
    def test_bad_events(self, events: str):
        with pytest.raises(AuditError):
            audit_dp(load_text(events))


class TestAuditLoader:
    """Ensures audit specs are validated when they are loaded."""

    def test_overrides(self):
        spec = load_audit('resources/corpus/laplace_eps1.audit', {'eps': Fraction(1, 2)})
        assert spec.program.param_values()['eps'] == Fraction(1, 2)
        assert spec.trials == 200000 and spec.seed == 7
        assert spec.claim.eps == 1

    def test_pair_distance(self):
        pair = AdjacentPair(Memory({'x': 0, 'y': 2}), Memory({'x': Fraction(1, 2), 'y': 1}), 2)
        assert pair.distance == Fraction(3, 2)
        assert pair.swapped().left == pair.right

    @pytest.mark.parametrize('file_path', [
        'resources/tests/audit/too_few_trials.audit',
        'resources/tests/audit/far_pair.audit',
    ])
    def test_rejected_specs(self, file_path: str):
        with pytest.raises(AuditError):
            load_audit(file_path)

    def test_missing_claim(self):
        with pytest.raises(RecordSyntaxError):
            load_audit('resources/tests/audit/no_claim.audit')

    def test_missing_file(self):
        with pytest.raises(FileNotFoundError):
            load_audit('resources/tests/audit/nowhere.audit')

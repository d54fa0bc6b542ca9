from aprhl_toolkit.logic import FUZZ_RULES, FuzzConfig, FuzzError, MUTATIONS, soundness_fuzz
import pytest


class TestSoundnessFuzz:
    """Ensures the rule fuzzer finds no counterexample for the sound rules and catches a broken grade algebra."""

    def test_sound_campaign(self):
        rules = ('skip', 'assn', 'rand', 'seq', 'weak', 'frame')
        summary = soundness_fuzz(FuzzConfig(trials=4, rules=rules, seed=11, workers=2))
        assert summary.counterexamples == []
        for rule in rules:
            assert summary.checked[rule] + summary.skipped[rule] == 4
        assert sum(summary.checked.values()) > 0

    def test_every_rule(self):
        """Ensures a full campaign over every fuzzed rule stays free of counterexamples."""
        summary = soundness_fuzz(FuzzConfig(trials=40, seed=3))
        assert summary.counterexamples == []
        assert set(summary.checked) == set(FUZZ_RULES)
        assert sum(summary.checked.values()) + sum(summary.skipped.values()) == 40 * len(FUZZ_RULES)

    def test_summed_sequence_grades(self):
        """Ensures adding the ratios of sequenced steps is caught by the oracle."""
        summary = soundness_fuzz(FuzzConfig(trials=16, rules=('seq',), mutation='seq-sum', seed=1))
        assert summary.counterexamples
        counterexample = summary.counterexamples[0]
        assert counterexample.rule == 'seq'
        assert len(counterexample.premises) == 2
        assert counterexample.to_record()['witness']['valid'] is False

    def test_composition_campaign(self):
        """Ensures composed relations checked in both directions stay within the composed slack."""
        summary = soundness_fuzz(FuzzConfig(trials=40, rules=('comp',), seed=3))
        assert summary.counterexamples == []
        assert summary.checked['comp'] > 0

    def test_smaller_composition_slack(self):
        """Ensures keeping only the smaller cross term of a composition is caught by the oracle."""
        summary = soundness_fuzz(FuzzConfig(trials=40, rules=('comp',), mutation='comp-min', seed=3))
        assert summary.counterexamples
        assert summary.counterexamples[0].rule == 'comp'

    def test_reproducible(self):
        cfg = FuzzConfig(trials=3, rules=('rand', 'cond'), seed=5, workers=1)
        assert soundness_fuzz(cfg).to_record() == soundness_fuzz(FuzzConfig(trials=3, rules=('rand', 'cond'),
                                                                            seed=5, workers=3)).to_record()

    def test_no_trials(self):
        summary = soundness_fuzz(FuzzConfig(trials=0, rules=('skip',)))
        assert summary.checked == {'skip': 0}

    @pytest.mark.parametrize('settings', [
        {'rules': ('magic',)},
        {'mutation': 'seq-product'},
        {'trials': -1},
        {'workers': 0},
    ])
    def test_misconfigured(self, settings):
        with pytest.raises(FuzzError):
            soundness_fuzz(FuzzConfig(**settings))

    def test_mutations(self):
        assert set(MUTATIONS) == {'seq-sum', 'comp-min'}

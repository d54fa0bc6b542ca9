from aprhl_toolkit import APGenerator
from aprhl_toolkit.generator import INT_VARS, BOOL_VARS
from aprhl_toolkit.lang import written_vars, initial_memory
from aprhl_toolkit.lang.syntax import commands_of
from aprhl_toolkit.logic import parse_assertion
from aprhl_toolkit.semantics import interp_exact
from fractions import Fraction
from typing import Tuple
import pytest


class TestAPGenerator:
    """Ensures random commands, assertions, sub-distributions and grades are well formed, reproducible
    and raise helpful errors on bad bounds."""

    @pytest.mark.parametrize('bound', [(10, 20), (0, 0), (-3, 5)])
    def test_generate_int(self, bound: Tuple[int, int]):
        assert bound[0] <= APGenerator()._generate_int(bound) <= bound[1]

    def test_fail_generate_int(self):
        with pytest.raises(ValueError):
            APGenerator()._generate_int((20, 10))

    def test_seeded(self):
        """Ensures the same seed gives the same sources."""
        first, second = APGenerator(seed=5), APGenerator(seed=5)
        assert [first.generate_source(4) for _ in range(5)] == [second.generate_source(4) for _ in range(5)]

    @pytest.mark.parametrize('seed', range(10))
    def test_commands_terminate(self, seed: int):
        """Ensures generated commands are loop-free and keep all their mass."""
        generator = APGenerator(seed=seed)
        command = generator.generate_command(4)
        assert 'While' not in [type(node).__name__ for node in commands_of(command)]
        result = interp_exact(command, initial_memory(generator.program.ctx))
        assert result.dist.mass() == 1
        for memory in result.dist.support():
            assert all(0 <= memory[name] <= 2 for name in INT_VARS)

    @pytest.mark.parametrize('seed', range(5))
    def test_avoid(self, seed: int):
        generator = APGenerator(seed=seed)
        assert written_vars(generator.generate_command(3, avoid=('x', 'b'))).isdisjoint({'x', 'b'})

    def test_avoid_everything(self):
        assert APGenerator(seed=1).generate_statement(avoid=INT_VARS + BOOL_VARS) == 'skip'

    def test_no_sampling(self):
        source = ' '.join(APGenerator(seed=seed).generate_source(3, sampling=False) for seed in range(20))
        assert '<$' not in source

    def test_generate_program(self):
        program = APGenerator(seed=2).generate_program(3)
        assert [name for name, _ in program.ctx] == ['x', 'y', 'b', 'c']

    @pytest.mark.parametrize('seed', range(5))
    def test_assertions_typecheck(self, seed: int):
        generator = APGenerator(seed=seed)
        text = generator.generate_assertion(names=('x', 'c'), atoms=(1, 3))
        assert 'y<' not in text and 'b<' not in text
        parse_assertion(text, generator.program)

    def test_empty_assertion(self):
        assert APGenerator(seed=0).generate_assertion(atoms=(0, 0)) == 'true'

    def test_generate_subdist(self):
        """Ensures sub-distributions respect the support bound and the requested mass."""
        generator = APGenerator(seed=3)
        for _ in range(10):
            dist = generator.generate_subdist(4, mass=Fraction(1, 2))
            assert dist.mass() == Fraction(1, 2)
            assert len(dist.support()) <= 4
            assert set(dist.support()) <= {0, 1, 2, 3}

    def test_fail_generate_subdist(self):
        with pytest.raises(ValueError):
            APGenerator().generate_subdist(3, mass=Fraction(3, 2))

    def test_generate_grade(self):
        grade = APGenerator(seed=4).generate_grade(gammas=(2,), deltas=(Fraction(1, 8),))
        assert grade.gamma == 2 and grade.delta == Fraction(1, 8)

from .apgenerator import APGenerator, FUZZ_PROGRAM, INT_VARS, BOOL_VARS

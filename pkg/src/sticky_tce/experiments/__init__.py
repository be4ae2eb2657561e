"""Monte Carlo studies of the sticky process and the test functions they use."""
from .functions import (
    GeneratorEval,
    TestFunction,
    boundary_defect,
    check_derivatives,
    constant_function,
    gaussian_bump,
    generator_apply,
    tuned_bump,
)
from .studies import (
    ExperimentReport,
    StickyModel,
    clock_order_study,
    gamma_sweep,
    martingale_test,
    no_solution_demo,
    occupation_study,
    random_lift,
    reflection_axioms_study,
)

__all__ = [
    "ExperimentReport", "GeneratorEval", "StickyModel", "TestFunction", "boundary_defect",
    "check_derivatives", "clock_order_study", "constant_function", "gamma_sweep", "gaussian_bump",
    "generator_apply", "martingale_test", "no_solution_demo", "occupation_study",
    "random_lift", "reflection_axioms_study", "tuned_bump",
]

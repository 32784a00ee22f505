"""Exact symbolic Rumin complexes of Carnot groups."""
from .enveloping import (
    DegreeCapExceeded,
    EnvelopingAlgebra,
    EnvelopingOperator,
    OperatorMatrix,
    adjoint_matrix,
    commutator,
    compose,
    enveloping,
    formal_adjoint,
    horizontalize,
    pbw_normal_form,
)
from .exterior import ExteriorAlgebra, Multivector, build_d0, build_delta0, build_full_d, hodge_star, wedge
from .group import BCH, ORDERED, GroupModel, build_group_model
from .lie import (
    AlgebraValidationError,
    StratifiedLieAlgebra,
    abelian,
    build_free_nilpotent,
    cartan,
    engel,
    heisenberg,
    preset,
)
from .rumin import (
    ContractViolation,
    RuminComplex,
    compute_delta_c,
    compute_d_c,
    compute_E0,
    compute_laplacians,
    compute_Pi_E,
)
from .scalars import Surd

__version__ = "0.1.0"

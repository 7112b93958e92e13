"""Memory bounds and exact compression protocols for tensor-network state families."""

from .bounds import BoundCase, BoundQuery, schur_dim_bound, symmetric_subspace_dim, table1_bound
from .flow import (
    Cut,
    FlowGraph,
    build_flow_network,
    enumerate_cuts,
    log3_bound_check,
    max_flow,
    memory_qubits,
    min_cut,
)
from .mps import Mps, eval_statevector, linear_combination, random_mps
from .network import (
    Edge,
    NetworkSpec,
    TemplateSpec,
    evaluate_operator,
    operator_rank,
    restrict_power_of_two,
    validate_template,
)
from .tensor import Tensor, contract_pair, matricize, svd_support, vectorize

__all__ = [
    "BoundCase",
    "BoundQuery",
    "Cut",
    "Edge",
    "FlowGraph",
    "Mps",
    "NetworkSpec",
    "TemplateSpec",
    "Tensor",
    "build_flow_network",
    "contract_pair",
    "enumerate_cuts",
    "eval_statevector",
    "evaluate_operator",
    "linear_combination",
    "log3_bound_check",
    "matricize",
    "max_flow",
    "memory_qubits",
    "min_cut",
    "operator_rank",
    "random_mps",
    "restrict_power_of_two",
    "schur_dim_bound",
    "svd_support",
    "symmetric_subspace_dim",
    "table1_bound",
    "validate_template",
    "vectorize",
]

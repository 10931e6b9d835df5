"""Compile discrete Bayesian network classifiers to decision diagrams and
verify if-then rules and feature monotonicity with SAT."""

from .compiler import BudgetExceeded, CompilerConfig, compile_network
from .encoder import (
    Cnf,
    EncodedModel,
    VariableRegistry,
    assert_class,
    encode,
    encode_ordinal_less,
    instantiate_copy,
)
from .inference import classify, posterior
from .io import bundled_network, load_network, parse_network, serialize_network
from .mdd import FALSE_SINK, TRUE_SINK, Mdd, evaluate, reduce, stats
from .network import BayesianNetwork, Cpt, NetworkError, Variable, ZeroEvidenceError
from .sat import enumerate_models, from_dimacs, solve, to_dimacs
from .verifier import Rule, RuleSet, Verdict, decode_model, verify_fmo, verify_itr

__all__ = [
    "BayesianNetwork", "BudgetExceeded", "Cnf", "CompilerConfig", "Cpt", "EncodedModel",
    "FALSE_SINK", "Mdd", "NetworkError", "Rule", "RuleSet", "TRUE_SINK", "Variable",
    "VariableRegistry", "Verdict", "ZeroEvidenceError", "assert_class", "bundled_network",
    "classify", "compile_network", "decode_model", "encode", "encode_ordinal_less",
    "enumerate_models", "evaluate", "from_dimacs", "instantiate_copy", "load_network",
    "parse_network", "posterior", "reduce", "serialize_network", "solve", "stats",
    "to_dimacs", "verify_fmo", "verify_itr",
]

__version__ = "0.1.0"

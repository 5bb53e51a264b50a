"""Ranks of Galois-module components of class groups of abelian p-extensions
of Q: exact group-ring and cohomology computations, Selmer groups, character
sums and conductor sweeps."""

from .abelian_core import AbelianPGroup, GroupChar, characters_of
from .arithmetic_ext import (
    ExtensionHandle,
    ExtensionTuple,
    char_eval,
    enumerate_extensions,
    handle_from_text,
    predict_rank,
    special_primes,
)
from .block_ring import IdempotentBlock, ie_exponent, mj_module, nontrivial_blocks, primitive_idempotents
from .cohomology import cohomology_group, constant_C, local_condition_size, n_phi, n_typical
from .selmer_engine import dual_selmer_mu_p, gw_identity_check, hom_nr_certified

__version__ = "0.1.0"

__all__ = [
    "AbelianPGroup",
    "ExtensionHandle",
    "ExtensionTuple",
    "GroupChar",
    "IdempotentBlock",
    "char_eval",
    "characters_of",
    "cohomology_group",
    "constant_C",
    "dual_selmer_mu_p",
    "enumerate_extensions",
    "gw_identity_check",
    "handle_from_text",
    "hom_nr_certified",
    "ie_exponent",
    "local_condition_size",
    "mj_module",
    "n_phi",
    "n_typical",
    "nontrivial_blocks",
    "predict_rank",
    "primitive_idempotents",
    "special_primes",
]

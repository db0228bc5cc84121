"""Classical simulation of two-prover non-negative-amplitude verification protocols.

Subpackages and modules: ``qstate`` (states and registers), ``proptest`` (swap,
symmetry, sparsity, validity and product tests), ``graphs`` (regular graphs, SSE
instances, expander certificates), ``protocols`` (SSE, Unique Games, toy CSP),
``adversary`` (worst-case prover search), ``complexity`` (gap and product-test
numerics), ``pcp`` (finite-field lines and the Hadamard PCP), ``harness`` (CLI).
"""

__version__ = "0.1.0"

"""Swap test three ways, and the product test on EPR versus product states."""

import numpy as np

from qmaplus.adversary import omega
from qmaplus.proptest import product_test, swap_circuit_probability, swap_density_oracle, swap_probability
from qmaplus.qstate import StateVector, haar_state, vec

a, b = haar_state(4, 1), haar_state(4, 2)
print("swap test on two Haar states in C^4")
print(f"  closed form  {swap_probability(a, b):.15f}")
print(f"  density      {swap_density_oracle(a, b):.15f}")
print(f"  circuit      {swap_circuit_probability(a, b):.15f}")

epr = StateVector.normalized([1, 0, 0, 1])
prod = np.kron(vec(haar_state(2, 3)), vec(haar_state(2, 4)))
print("product test")
print(f"  EPR pair      accept {product_test(epr, epr, [2, 2]):.4f}  omega {omega(epr, [2, 2]):.4f}")
print(f"  product state accept {product_test(prod, prod, [2, 2]):.4f}  omega {omega(prod, [2, 2]):.4f}")

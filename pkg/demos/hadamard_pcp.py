"""Hadamard proof for a one-gate circuit: honest acceptance and the effect of a flipped bit."""

from qmaplus import pcp

c = pcp.Circuit(1, 1, [pcp.Gate("AND", (0, 1))])
Q = pcp.circuit_to_quadsystem(c)
x = [1]
w = next(Q.solutions_extending(x))
proof = pcp.hadamard_prover(Q, w)
print(f"{Q.rows} equations in {Q.n} variables, rank {Q.rank()}")
print("honest:", {k: round(v, 4) for k, v in pcp.hadamard_accept_prob(proof, Q, x).to_dict().items()})
bad = proof.flipped("Y", 3)
print("Y[3] flipped:", {k: round(v, 4) for k, v in pcp.hadamard_accept_prob(bad, Q, x).to_dict().items()})

L = pcp.HadamardLayout(Q)
adj = pcp.HadamardAdjacency(L, ("Y", 1))
print(f"randomness strings {L.size}, strings reading Y(1): {adj.count}")
print(f"the 10th such string decodes to {L.decode(int(adj.from_index(9)))}")

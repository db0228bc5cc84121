"""Honest prover on a planted small-set-expansion yes-instance, exact and sampled."""

from qmaplus.graphs import expansion, planted_sse_yes
from qmaplus.proptest import TestMode
from qmaplus.protocols.sse import SseProtocolConfig, sse_honest_proofs, sse_protocol

inst = planted_sse_yes(32, 4, 0.25, 0.1, seed=1)
print(f"planted set of {len(inst.witness)} vertices, expansion {expansion(inst.graph, inst.witness):.4f}")
cfg = SseProtocolConfig(delta=0.25, eta=0.1)
Psi, Phi = sse_honest_proofs(inst, k=cfg.k)

exact = sse_protocol(inst, Psi, Phi, cfg)
for name, v in exact.subtests.items():
    print(f"  {name:10s} {v:.4f}  (verdict probability {exact.verdict_probabilities[name]:.4f})")
print(f"overall {exact.overall:.4f}, completeness target 1 - eta = {1 - cfg.eta:.4f}")

mc = sse_protocol(inst, Psi, Phi, cfg, TestMode.monte_carlo(seed=7, trials=20_000))
print(f"Monte Carlo overall {mc.overall:.4f} vs exact verdict probability "
      f"{exact.overall_verdict_probability:.4f}")

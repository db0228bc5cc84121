"""Regularize a small unique game with expander clouds and compare exhaustive values."""

from qmaplus.protocols.ug import random_general_ug, regularization_report, regularize_ug

game = random_general_ug(5, 6, 2, seed=3)
print(f"source game: {game.n} vertices, {len(game.edges)} edges, degrees {game.degrees().tolist()}")
reg = regularize_ug(game, d=3)
rep = regularization_report(reg)
print(f"regularized: {reg.instance.n} vertices, degree {reg.instance.d}, {rep['regularized_edges']} edges")
print(f"value {rep['value']:.4f} -> {rep['regularized_value']:.4f} (predicted {rep['predicted']:.4f})")
print(f"smallest cloud Cheeger constant {rep['min_cheeger']}")

"""The training objectives and their closed-form anchors.

Shows the values every implementation must reproduce: chance-level
adversarial losses equal 2 log 2 per scale, uniform-logit cross entropy
equals log C, and the paired/unpaired weighting of the total objective.

Run:  python demos/03_losses.py
"""

import math

import torch

from maskedit.losses import (
    LossWeights,
    discriminator_loss,
    generator_adversarial_loss,
    global_reconstruction_loss,
    local_reconstruction_loss,
    parsing_cross_entropy,
    total_generator_loss,
)

torch.set_default_dtype(torch.float64)

print("== closed-form anchors ==")
zeros = [torch.zeros(2, 1, 3, 3), torch.zeros(2, 1, 2, 2)]
d = float(discriminator_loss(zeros, zeros))
g = float(generator_adversarial_loss(zeros))
print(f"discriminator at sigma=1/2, two scales: {d:.6f}  (4 log 2 = {4 * math.log(2):.6f})")
print(f"generator     at sigma=1/2, two scales: {g:.6f}  (2 log 2 = {2 * math.log(2):.6f})")

for c in (6, 11):
    logits = torch.zeros(1, c, 4, 4)
    target = torch.randint(0, c, (1, 4, 4))
    print(f"uniform-logit cross entropy, {c} labels: "
          f"{float(parsing_cross_entropy(logits, target)):.6f}  (log {c} = {math.log(c):.6f})")

print("\n== reconstruction scale ==")
a = torch.zeros(1, 3, 8, 8)
b = torch.full((1, 3, 8, 8), 0.2)
print(f"constant 0.2 offset: global = {float(global_reconstruction_loss(a, b)):.4f} (= 0.5 * 0.04)")
valid = torch.ones(1, 8, 8, dtype=torch.bool)
print(f"unit offset, all valid: local = {float(local_reconstruction_loss(a, a + 1, valid)):.4f}")

print("\n== paired vs unpaired totals (all raw terms = 1) ==")
terms = {k: torch.tensor(1.0) for k in ("local", "global", "adv", "fm", "parse")}
for mode in ("paired", "unpaired"):
    total, report = total_generator_loss(terms, LossWeights(), mode)
    print(f"{mode:9s}: total = {float(total):5.1f}   weights = {report.weights}")

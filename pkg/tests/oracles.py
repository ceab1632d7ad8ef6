"""Independent brute-force oracles for the loss functions and a central
finite-difference gradient checker. Everything here is plain float64
numpy with explicit loops; none of it touches the package's torch code."""

import math

import numpy as np
import torch


def sigmoid(x):
    return 1.0 / (1.0 + math.exp(-x))


def oracle_local(crop, recon, valid):
    """Half MSE over valid pixels, channels included in the mean."""
    total = 0.0
    count = 0
    b, c, h, w = crop.shape
    for i in range(b):
        for ch in range(c):
            for r in range(h):
                for col in range(w):
                    if valid[i, r, col]:
                        d = recon[i, ch, r, col] - crop[i, ch, r, col]
                        total += d * d
                        count += 1
    return 0.5 * total / count if count else 0.0


def oracle_global(generated, source):
    total = 0.0
    flat_g = generated.reshape(-1)
    flat_s = source.reshape(-1)
    for i in range(flat_g.size):
        d = flat_g[i] - flat_s[i]
        total += d * d
    return 0.5 * total / flat_g.size


def oracle_disc(real_scores, fake_scores):
    total = 0.0
    for r, f in zip(real_scores, fake_scores):
        rr = r.reshape(-1)
        ff = f.reshape(-1)
        term = 0.0
        for v in rr:
            term -= math.log(sigmoid(v))
        term /= rr.size
        term2 = 0.0
        for v in ff:
            term2 -= math.log(1.0 - sigmoid(v))
        term2 /= ff.size
        total += term + term2
    return total


def oracle_gen_adv(fake_scores):
    total = 0.0
    for f in fake_scores:
        ff = f.reshape(-1)
        term = 0.0
        for v in ff:
            term -= math.log(sigmoid(v))
        total += term / ff.size
    return total


def oracle_fm(fake_feats, real_feats):
    total = 0.0
    for ff, rf in zip(fake_feats, real_feats):
        a = ff.reshape(-1)
        b = rf.reshape(-1)
        term = 0.0
        for i in range(a.size):
            d = a[i] - b[i]
            term += d * d
        total += 0.5 * term / a.size
    return total


def oracle_ce(logits, target):
    """Mean over pixels of -log softmax probability of the target label."""
    b, c, h, w = logits.shape
    total = 0.0
    for i in range(b):
        for r in range(h):
            for col in range(w):
                vec = logits[i, :, r, col]
                m = vec.max()
                logsumexp = m + math.log(np.exp(vec - m).sum())
                total += logsumexp - vec[target[i, r, col]]
    return total / (b * h * w)


def finite_difference_grad(fn, x: torch.Tensor, eps: float = 1e-5) -> torch.Tensor:
    """Central finite differences of a scalar torch function w.r.t. x."""
    x = x.detach().clone()
    grad = torch.zeros_like(x)
    flat = x.reshape(-1)
    gflat = grad.reshape(-1)
    for i in range(flat.numel()):
        orig = flat[i].item()
        flat[i] = orig + eps
        fp = float(fn(x))
        flat[i] = orig - eps
        fm = float(fn(x))
        flat[i] = orig
        gflat[i] = (fp - fm) / (2.0 * eps)
    return grad


def gradcheck_rel_error(fn, x: torch.Tensor, eps: float = 1e-5) -> float:
    """Relative error between autograd and central-difference gradients."""
    xv = x.detach().clone().requires_grad_(True)
    out = fn(xv)
    out.backward()
    analytic = xv.grad.detach()
    numeric = finite_difference_grad(fn, x, eps)
    denom = max(float(numeric.norm()), 1e-12)
    return float((analytic - numeric).norm()) / denom

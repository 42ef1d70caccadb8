"""Writes data/kernel_vectors.jsonl, the conformance suite for `cocogb check-kernel`.

Expected values are computed here with numpy, independently of the C++ kernel.
Gradients come from central finite differences rather than closed forms.
"""

import argparse
import json
from pathlib import Path

import numpy as np

FD_STEP = 1e-6
FD_TOL = 1e-4


def soft_mask(a, threshold=0.5, sharpness=10.0, scale="max"):
    x = a / a.max() if scale == "max" else a
    return 1.0 / (1.0 + np.exp(-sharpness * (x - threshold)))


def bilinear(a, h, w):
    """Corner-aligned bilinear resize that keeps the total mass."""
    rows, cols = a.shape
    ys = np.linspace(0, rows - 1, h) if h > 1 else np.zeros(1)
    xs = np.linspace(0, cols - 1, w) if w > 1 else np.zeros(1)
    out = np.empty((h, w))
    for i, fy in enumerate(ys):
        y0 = min(int(fy), rows - 1)
        y1 = min(y0 + 1, rows - 1)
        ty = fy - y0
        for j, fx in enumerate(xs):
            x0 = min(int(fx), cols - 1)
            x1 = min(x0 + 1, cols - 1)
            tx = fx - x0
            top = (1 - tx) * a[y0, x0] + tx * a[y0, x1]
            bottom = (1 - tx) * a[y1, x0] + tx * a[y1, x1]
            out[i, j] = (1 - ty) * top + ty * bottom
    if out.sum() > 0:
        out *= a.sum() / out.sum()
    return out


def fd_diag(f, a):
    """d f(a)[i] / d a[i] for an elementwise map."""
    g = np.zeros_like(a)
    for idx in np.ndindex(a.shape):
        p, m = a.copy(), a.copy()
        p[idx] += FD_STEP
        m[idx] -= FD_STEP
        g[idx] = (f(p)[idx] - f(m)[idx]) / (2 * FD_STEP)
    return g


def fd_grad(f, a):
    g = np.zeros_like(a)
    for idx in np.ndindex(a.shape):
        p, m = a.copy(), a.copy()
        p[idx] += FD_STEP
        m[idx] -= FD_STEP
        g[idx] = (f(p) - f(m)) / (2 * FD_STEP)
    return g


def outside_share(a, mask):
    return float((a * (1 - mask)).sum() / a.sum())


def build(rng):
    vecs = []

    def add(op, inputs, expected=None, tol=None, expect_error=None):
        v = {"op": op, "inputs": inputs}
        if expect_error:
            v["expect_error"] = expect_error
        else:
            v["expected"] = expected
        if tol is not None:
            v["tol"] = tol
        vecs.append(v)

    for scale, thr, w in [("max", 0.5, 10.0), ("raw", 0.05, 40.0), ("max", 0.3, 6.0)]:
        a = rng.uniform(0.01, 0.12, size=(5, 5))
        inputs = {"alpha": a.tolist(), "threshold": thr, "sharpness": w, "scale": scale}
        add("soft_mask", inputs, soft_mask(a, thr, w, scale).tolist())
        grad = fd_diag(lambda x: soft_mask(x, thr, w, scale), a)
        add("grad_soft_mask", inputs, grad.tolist(), tol=FD_TOL)

    add("soft_mask", {"alpha": [[0.2, 0.2], [0.2, 0.2]], "threshold": 0.2, "scale": "raw"},
        [[0.5, 0.5], [0.5, 0.5]])
    add("soft_mask", {"alpha": [[0.2]], "sharpness": -1.0}, expect_error="input error")

    for att_shape in [(4, 4), (2, 2)]:
        img = rng.uniform(0, 1, size=(3, 4, 4))
        a = rng.uniform(0, 1, size=att_shape)
        t = soft_mask(bilinear(a, 4, 4))
        add("masked_image", {"image": img.tolist(), "alpha": a.tolist()}, (img - img * t).tolist())

    for steps, vocab in [(4, 6), (7, 10)]:
        p = rng.uniform(0.05, 1, size=(steps, vocab))
        p /= p.sum(axis=1, keepdims=True)
        y = rng.integers(0, vocab, size=steps)
        nll = -float(np.log(p[np.arange(steps), y]).sum())
        add("token_nll", {"probs": p.tolist(), "targets": y.tolist()}, nll)
    add("token_nll", {"probs": [[0.0, 1.0]], "targets": [0]}, expect_error="infinite-loss error")
    add("token_nll", {"probs": [[0.5, 0.4]], "targets": [0]}, expect_error="input error")

    for shape in [(4, 4), (7, 7), (14, 14)]:
        a = rng.uniform(0, 1, size=shape)
        a /= a.sum()
        mask = (rng.uniform(0, 1, size=shape) < 0.4).astype(float)
        inputs = {"alpha": a.tolist(), "mask": mask.astype(int).tolist()}
        add("gender_attention_loss", inputs, float((a * (1 - mask)).sum()), tol=1e-12)
        raw = a * rng.uniform(1, 5)
        grad = fd_grad(lambda x: outside_share(x, mask), raw)
        add("grad_gender_attention_loss",
            {"alpha": raw.tolist(), "mask": mask.astype(int).tolist()}, grad.tolist(), tol=FD_TOL)
    add("gender_attention_loss", {"alpha": [[0.5, 0.6]], "mask": [[1, 0]]},
        expect_error="normalization error")
    add("gender_attention_loss", {"alpha": [[0.5, 0.5]], "mask": [[1, 0, 1]]},
        expect_error="shape error")

    for l_lq, l_ge, l_ga, mu, eta in [(2.5, 1.25, 0.5, 0.1, 0.05), (3.0, 0.0, 1.0, 0.0, 0.05),
                                      (1.75, 2.0, 0.25, 0.1, 0.0)]:
        l_self = l_lq + mu * l_ge
        add("combine_losses",
            {"l_lq": l_lq, "l_ge": l_ge, "l_ga": l_ga, "mu": mu, "eta": eta},
            {"l_self": l_self, "l_es": l_self + eta * l_ga}, tol=1e-15)
    add("combine_losses", {"l_lq": 1, "l_ge": 1, "l_ga": 1, "mu": -1}, expect_error="input error")
    return vecs


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--seed", type=int, default=20200)
    parser.add_argument("--out", type=Path,
                        default=Path(__file__).resolve().parent.parent / "data" / "kernel_vectors.jsonl")
    args = parser.parse_args()
    vecs = build(np.random.default_rng(args.seed))
    with args.out.open("w") as fh:
        for v in vecs:
            fh.write(json.dumps(v) + "\n")
    print(f"wrote {len(vecs)} vectors to {args.out}")


if __name__ == "__main__":
    main()

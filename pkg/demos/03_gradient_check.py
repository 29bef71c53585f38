"""Analytic BPTT gradients against central finite differences for each cell type.

python3 demos/03_gradient_check.py
"""
import numpy as np

from crashwatch.seqnet import RecurrentNet

rng = np.random.default_rng(2)
X = rng.normal(size=(6, 7, 4))  # 6 sequences, T=7, F=4
y = rng.integers(0, 2, 6).astype(float)

for cell in ("simple", "lstm", "gru"):
    for layers in (1, 2):
        net = RecurrentNet(4, cell, 8, layers, l1=1e-5, l2=1e-4, seed=1)
        _, grads = net.loss_and_grad(X, y)
        flat = net.get_flat()
        num = np.empty_like(flat)
        for i in range(flat.size):
            up, dn = flat.copy(), flat.copy()
            up[i] += 1e-5
            dn[i] -= 1e-5
            net.set_flat(up)
            lp = net.loss(X, y)
            net.set_flat(dn)
            num[i] = (lp - net.loss(X, y)) / 2e-5
        net.set_flat(flat)
        ana = np.concatenate([grads[n].ravel() for n, _ in net.named_params()])
        rel = np.abs(num - ana) / np.maximum(np.maximum(np.abs(num), np.abs(ana)), 1e-8)
        print(f"{cell:6s} layers={layers} params={flat.size:5d} max rel error {rel.max():.2e}")

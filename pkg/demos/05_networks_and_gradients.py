"""Actor-critic networks: forward passes, exact gradients, checkpoints.

Run:  python demos/05_networks_and_gradients.py
"""

import os
import tempfile

import numpy as np

from guidedrl.nn import (
    Adam,
    load_checkpoint,
    mlp_actor_critic,
    save_checkpoint,
)

rng = np.random.default_rng(0)
net = mlp_actor_critic(obs_size=12, action_count=32, hidden=(32, 32, 32),
                       activation="tanh", rng=rng)
print(f"card-game network: {net.parameter_count()} parameters")

obs = rng.random(12)
logits, value = net.forward(obs)
print(f"  logits shape {logits.shape}, value estimate {value:+.4f}")
print("  actor and critic share the trunk: one observation, two heads\n")

print("Backprop vs central finite differences on one weight:")
probe_l = rng.normal(size=(1, 32))
probe_v = rng.normal(size=1)
net.zero_grads()
net.forward(obs[None, :])
net.backward(probe_l, probe_v)
layer = net.trunk.layers[1]
analytic = layer.d_weight[3, 4]

h = 1e-5
original = layer.weight[3, 4]
for sign in (+1, -1):
    layer.weight[3, 4] = original + sign * h
    lg, vl = net.forward(obs[None, :])
    if sign > 0:
        up = float((probe_l * lg).sum() + probe_v * vl)
    else:
        down = float((probe_l * lg).sum() + probe_v * vl)
layer.weight[3, 4] = original
fd = (up - down) / (2 * h)
print(f"  analytic {analytic:+.10f}")
print(f"  numeric  {fd:+.10f}")
print(f"  |difference| = {abs(analytic - fd):.2e}\n")

print("Adam takes signed steps of about the learning rate at first:")
param = np.array([0.0])
opt = Adam([param], lr=0.01)
opt.step([np.array([42.0])])
print(f"  one step against gradient 42 moved the parameter by {param[0]:+.6f}\n")

print("Checkpoints round-trip the spec and every parameter bit:")
with tempfile.TemporaryDirectory() as tmp:
    path = os.path.join(tmp, "net.ckpt")
    save_checkpoint(net, path)
    clone = load_checkpoint(path)
    same = all(np.array_equal(a, b) for a, b in zip(net.params(), clone.params()))
    print(f"  wrote {os.path.getsize(path)} bytes; parameters identical: {same}")
    print(f"  embedded spec: {clone.spec}")

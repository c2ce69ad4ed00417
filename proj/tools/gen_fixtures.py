#!/usr/bin/env python3
"""Regenerate the bundled model and input fixtures under data/.

Trains a small LeNet-5 on the 5000-sample MNIST subset shipped with mlxtend,
applies symmetric per-tensor INT8 post-training quantization and writes the
model JSON + blob and a 100-image input fixture. Also writes the toy models
and their golden outputs, computed here with plain integer numpy code.
"""
import json
import math
import os
import sys

import numpy as np

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
DATA = os.path.join(ROOT, "data")


def round_half_away(x):
    x = np.asarray(x, dtype=np.float64)
    return np.sign(x) * np.floor(np.abs(x) + 0.5)


def quantize(values, bits=8):
    qmax = 2 ** (bits - 1) - 1
    m = float(np.max(np.abs(values)))
    scale = 1.0 if m == 0.0 else m / qmax
    q = np.clip(round_half_away(values / scale), -qmax, qmax).astype(np.int64)
    return q, scale


class Blob:
    def __init__(self):
        self.buf = bytearray()
        self.tensors = []

    def add(self, tid, arr, scale, dtype="int8"):
        arr = np.asarray(arr)
        raw = arr.astype("<i1" if dtype == "int8" else "<i4").tobytes()
        self.tensors.append({"id": tid, "dtype": dtype, "shape": list(arr.shape),
                             "scale": scale, "zero_point": 0,
                             "offset": len(self.buf), "length": len(raw)})
        self.buf += raw


def write_model(name, input_shape, layers, blob, stem):
    doc = {"name": name, "input_shape": list(input_shape), "layers": layers,
           "tensors": blob.tensors}
    with open(os.path.join(DATA, "models", stem + ".json"), "w") as f:
        json.dump(doc, f, indent=1)
        f.write("\n")
    with open(os.path.join(DATA, "models", stem + ".bin"), "wb") as f:
        f.write(bytes(blob.buf))


def write_tensor(path, arr, scale, labels=None):
    # same byte layout as the C++ tensor writer: compact, scale with 17 digits
    text = '{"shape":[%s],"scale":%s,"zero_point":0,"data":[%s]' % (
        ",".join(str(int(e)) for e in arr.shape), "%.17g" % scale,
        ",".join(str(int(v)) for v in arr.reshape(-1)))
    if labels is not None:
        text += ',"labels":[%s]' % ",".join(str(int(v)) for v in labels)
    with open(path, "w") as f:
        f.write(text + "}\n")


def measured_thresholds():
    # DNL per gap in ascending-voltage order plus the INL of the first transition.
    # Gap i is labelled code 13 - i, transition i code 14 - i.
    lo, hi, bits = 0.2, 0.8, 4
    lsb = (hi - lo) / 2 ** bits
    inl0 = 0.2
    dnl = [0.1, 0.2, -0.2, -0.15, -0.1, -0.25, -0.3, -0.2, -0.1, -0.05, -0.1, -0.05, 0.2, 0.4]
    t = [lo + (1 + inl0) * lsb]
    for d in dnl:
        t.append(t[-1] + (1 + d) * lsb)
    with open(os.path.join(DATA, "tdc", "measured_thresholds.txt"), "w") as f:
        f.write("# 4-bit transfer curve matched to the measured DNL/INL extrema, volts ascending\n")
        for v in t:
            f.write("%.17g\n" % v)


def requant(acc, s_in, s_w, s_out):
    m = (s_in * s_w) / s_out
    return np.clip(round_half_away(acc.astype(np.float64) * m), -128, 127).astype(np.int64)


def conv_int(x, w, b, stride, pad):
    c, h, wd = x.shape
    k, _, kh, kw = w.shape
    xp = np.pad(x, ((0, 0), (pad, pad), (pad, pad)))
    oh = (h + 2 * pad - kh) // stride + 1
    ow = (wd + 2 * pad - kw) // stride + 1
    out = np.zeros((k, oh, ow), dtype=np.int64)
    for o in range(k):
        for i in range(oh):
            for j in range(ow):
                patch = xp[:, i * stride:i * stride + kh, j * stride:j * stride + kw]
                out[o, i, j] = int(np.sum(patch.astype(np.int64) * w[o].astype(np.int64)))
        if b is not None:
            out[o] += int(b[o])
    return out


def toy_models():
    rng = np.random.default_rng(7)
    # single 3x3 conv, 2 -> 4 channels on 8x8, pad 1, random full-range weights
    w = rng.integers(-127, 128, size=(4, 2, 3, 3))
    b = rng.integers(-2000, 2000, size=(4,))
    x = rng.integers(0, 128, size=(2, 8, 8))
    s_in, s_w, s_out = 1.0 / 127, 0.01, 0.25
    blob = Blob()
    blob.add("conv.w", w, s_w)
    blob.add("conv.b", b, s_in * s_w, dtype="int32")
    layers = [{"kind": "conv2d", "in_channels": 2, "out_channels": 4, "kernel_h": 3,
               "kernel_w": 3, "stride": 1, "padding": 1, "weight_ref": "conv.w",
               "bias_ref": "conv.b", "out_scale": s_out}]
    write_model("toy_conv", (2, 8, 8), layers, blob, "toy_conv")
    write_tensor(os.path.join(DATA, "fixtures", "toy_conv_input.json"), x[None], s_in)
    y = requant(conv_int(x, w, b, 1, 1), s_in, s_w, s_out)
    write_tensor(os.path.join(DATA, "golden", "toy_conv_output.json"), y[None], s_out)

    # in-range model: binary weights and inputs, every nibble conversion <= 9
    w = rng.integers(0, 2, size=(3, 1, 3, 3)) * rng.choice([-1, 1], size=(3, 1, 3, 3))
    x = rng.integers(0, 2, size=(1, 6, 6))
    s_in, s_w, s_out = 1.0, 1.0, 1.0
    blob = Blob()
    blob.add("conv.w", w, s_w)
    layers = [{"kind": "conv2d", "in_channels": 1, "out_channels": 3, "kernel_h": 3,
               "kernel_w": 3, "stride": 1, "padding": 0, "weight_ref": "conv.w",
               "out_scale": s_out},
              {"kind": "relu"}]
    write_model("toy_inrange", (1, 6, 6), layers, blob, "toy_inrange")
    write_tensor(os.path.join(DATA, "fixtures", "toy_inrange_input.json"), x[None], s_in)
    y = np.maximum(requant(conv_int(x, w, None, 1, 0), s_in, s_w, s_out), 0)
    write_tensor(os.path.join(DATA, "golden", "toy_inrange_output.json"), y[None], s_out)


def lenet():
    import torch
    import torch.nn as nn
    from mlxtend.data import mnist_data

    torch.manual_seed(0)
    X, y = mnist_data()
    X = X.reshape(-1, 1, 28, 28).astype(np.float32) / 255.0
    X = np.pad(X, ((0, 0), (0, 0), (2, 2), (2, 2)))
    perm = np.random.default_rng(0).permutation(len(X))
    X, y = X[perm], y[perm]
    Xtr, ytr, Xte, yte = X[:4000], y[:4000], X[4000:], y[4000:]

    net = nn.Sequential(
        nn.Conv2d(1, 6, 5), nn.ReLU(), nn.MaxPool2d(2),
        nn.Conv2d(6, 16, 5), nn.ReLU(), nn.MaxPool2d(2),
        nn.Flatten(),
        nn.Linear(400, 120), nn.ReLU(),
        nn.Linear(120, 84), nn.ReLU(),
        nn.Linear(84, 10))
    opt = torch.optim.Adam(net.parameters(), lr=2e-3)
    xt, yt = torch.tensor(Xtr), torch.tensor(ytr, dtype=torch.long)
    for epoch in range(15):
        idx = torch.randperm(len(xt))
        for i in range(0, len(xt), 64):
            j = idx[i:i + 64]
            opt.zero_grad()
            loss = nn.functional.cross_entropy(net(xt[j]), yt[j])
            loss.backward()
            opt.step()
    net.eval()
    with torch.no_grad():
        acc = (net(torch.tensor(Xte)).argmax(1).numpy() == yte).mean()
    print(f"float test accuracy on {len(Xte)} held-out images: {acc:.4f}", file=sys.stderr)

    # activation ranges from the training set
    weighted = [m for m in net if isinstance(m, (nn.Conv2d, nn.Linear))]
    maxes = {id(m): 0.0 for m in weighted}
    hooks = [m.register_forward_hook(
        lambda mod, inp, out: maxes.__setitem__(id(mod), max(maxes[id(mod)], float(out.abs().max()))))
        for m in weighted]
    with torch.no_grad():
        net(torch.tensor(Xtr))
    for h in hooks:
        h.remove()

    s_in = 1.0 / 127
    blob = Blob()
    layers = []
    names = ["conv1", "conv2", "fc1", "fc2", "fc3"]
    cur_scale = s_in
    wi = 0
    for m in net:
        if isinstance(m, (nn.Conv2d, nn.Linear)):
            name = names[wi]
            wi += 1
            w = m.weight.detach().double().numpy()
            b = m.bias.detach().double().numpy()
            qw, s_w = quantize(w)
            qb = round_half_away(b / (cur_scale * s_w)).astype(np.int64)
            out_scale = maxes[id(m)] / 127
            blob.add(name + ".w", qw, s_w)
            blob.add(name + ".b", qb, cur_scale * s_w, dtype="int32")
            if isinstance(m, nn.Conv2d):
                layers.append({"kind": "conv2d", "in_channels": m.in_channels,
                               "out_channels": m.out_channels, "kernel_h": 5, "kernel_w": 5,
                               "stride": 1, "padding": 0, "weight_ref": name + ".w",
                               "bias_ref": name + ".b", "out_scale": out_scale})
            else:
                layers.append({"kind": "fully_connected", "in_channels": m.in_features,
                               "out_channels": m.out_features, "weight_ref": name + ".w",
                               "bias_ref": name + ".b", "out_scale": out_scale})
            cur_scale = out_scale
        elif isinstance(m, nn.ReLU):
            layers.append({"kind": "relu"})
        elif isinstance(m, nn.MaxPool2d):
            layers.append({"kind": "maxpool2d", "kernel_h": 2, "kernel_w": 2, "stride": 2, "padding": 0})
    write_model("lenet5", (1, 32, 32), layers, blob, "lenet5")

    xin = np.clip(round_half_away(Xte[:100] / s_in), -127, 127).astype(np.int64)
    write_tensor(os.path.join(DATA, "fixtures", "mnist100.json"), xin, s_in, labels=yte[:100])


if __name__ == "__main__":
    measured_thresholds()
    toy_models()
    if "--toy-only" not in sys.argv:
        lenet()

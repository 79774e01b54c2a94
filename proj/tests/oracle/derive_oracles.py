#!/usr/bin/env python3
# SPDX-License-Identifier: Apache-2.0
"""Computes the frozen reference values used by the C++ tests.

Everything here is an independent re-derivation (numpy/PIL plus a from-scratch
SplitMix64 port); the C++ code is never consulted. Run once and commit the
output:

    python3 tests/oracle/derive_oracles.py > tests/support/frozen_values.h
"""

import io
import math
import pathlib

import numpy as np
from PIL import Image

ROOT = pathlib.Path(__file__).resolve().parents[2]
MASK64 = (1 << 64) - 1


class SplitMix64:
    def __init__(self, seed):
        self.state = seed & MASK64

    def next(self):
        self.state = (self.state + 0x9E3779B97F4A7C15) & MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
        return z ^ (z >> 31)

    def next_double(self):
        return (self.next() >> 11) * 2.0 ** -53

    def next_below(self, n):
        threshold = ((1 << 64) - n) % n
        while True:
            r = self.next()
            if r >= threshold:
                return r % n


def fnv1a64(data):
    h = 0xCBF29CE484222325
    for b in data:
        h ^= b
        h = (h * 0x100000001B3) & MASK64
    return h


def psnr(a, b):
    mse = np.mean((a.astype(np.float64) - b.astype(np.float64)) ** 2)
    return float("inf") if mse == 0 else 10 * math.log10(255.0 ** 2 / mse)


def gradient_image(w, h):
    x = np.arange(w)[None, :].repeat(h, 0)
    y = np.arange(h)[:, None].repeat(w, 1)
    img = np.stack([x * 255 // (w - 1), y * 255 // (h - 1),
                    (x + y) * 255 // (w + h - 2)], axis=-1)
    return img.astype(np.uint8)


def smooth_image(size):
    t = np.linspace(0, 2 * math.pi, size)
    x, y = np.meshgrid(t, t)
    r = 128 + 80 * np.sin(x) * np.cos(0.5 * y)
    g = 128 + 60 * np.cos(x + y)
    b = 128 + 90 * np.sin(0.5 * x - y)
    return np.clip(np.rint(np.stack([r, g, b], -1)), 0, 255).astype(np.uint8)


def bilinear(img, tw, th):
    sh, sw = img.shape[:2]
    src = img.astype(np.float64)
    fy = np.clip((np.arange(th) + 0.5) * sh / th - 0.5, 0, sh - 1)
    fx = np.clip((np.arange(tw) + 0.5) * sw / tw - 0.5, 0, sw - 1)
    y0 = np.floor(fy).astype(int)
    x0 = np.floor(fx).astype(int)
    y1 = np.minimum(y0 + 1, sh - 1)
    x1 = np.minimum(x0 + 1, sw - 1)
    wy = (fy - y0)[:, None, None]
    wx = (fx - x0)[None, :, None]
    top = src[y0][:, x0] * (1 - wx) + src[y0][:, x1] * wx
    bot = src[y1][:, x0] * (1 - wx) + src[y1][:, x1] * wx
    return np.clip(np.rint(top * (1 - wy) + bot * wy), 0, 255).astype(np.uint8)


def clamped_noise_mse(mean, sigma_norm):
    """E[(round(clamp(mean + N(0, s^2))) - mean)^2] by exact summation."""
    s = sigma_norm * 255.0
    total = 0.0
    for v in range(256):
        lo, hi = v - 0.5, v + 0.5
        if v == 0:
            lo = -math.inf
        if v == 255:
            hi = math.inf
        p = 0.5 * (math.erf((hi - mean) / (s * math.sqrt(2))) -
                   math.erf((lo - mean) / (s * math.sqrt(2))))
        total += p * (v - mean) ** 2
    return total


def recompose(base, metrics, floor, min_share=0.5, metric_floor=1e-3):
    boost = {d: (floor / max(metrics[d], metric_floor)
                 if d in metrics and metrics[d] < floor else 1.0) for d in base}
    pinned = set()
    while True:
        remaining = 1.0 - sum(min_share * base[d] for d in pinned)
        mass = sum(base[d] * boost[d] for d in base if d not in pinned)
        out = {}
        violated = False
        for d in base:
            if d in pinned:
                out[d] = min_share * base[d]
                continue
            out[d] = remaining * base[d] * boost[d] / mass
            if out[d] < min_share * base[d]:
                pinned.add(d)
                violated = True
        if not violated:
            return out


def main():
    lines = []
    emit = lines.append

    table = (ROOT / "data" / "vqa_templates.tsv").read_bytes()
    emit(f"inline constexpr std::uint64_t kTemplateTableFnv1a64 = "
         f"0x{fnv1a64(table):016X}ULL;")
    emit(f"inline constexpr int kTemplateForSeed0 = "
         f"{SplitMix64(0).next_below(10)};")
    emit(f"inline constexpr int kTemplateForSeed42 = "
         f"{SplitMix64(42).next_below(10)};")

    rng = SplitMix64(0)
    emit("inline constexpr std::uint64_t kSplitMix64Seed0First3[] = {" +
         ", ".join(f"0x{rng.next():016X}ULL" for _ in range(3)) + "};")

    # JPEG quality 95 with 4:2:0 on a gradient.
    grad = gradient_image(128, 96)
    buf = io.BytesIO()
    Image.fromarray(grad).save(buf, "JPEG", quality=95, subsampling=2)
    decoded = np.asarray(Image.open(io.BytesIO(buf.getvalue())).convert("RGB"))
    emit(f"// PIL/libjpeg q95 4:2:0 gradient round trip: "
         f"{psnr(grad, decoded):.3f} dB")
    emit("inline constexpr double kJpeg95GradientPsnrFloor = 35.0;")

    # Resize round trip on a smooth 256x256 image.
    smooth = smooth_image(256)
    worst = math.inf
    for target in (128, 256, 384, 512, 640):
        back = bilinear(bilinear(smooth, target, target), 256, 256)
        p = psnr(smooth, back)
        worst = min(worst, p)
        emit(f"// resize {target} and back: {p:.3f} dB")
    emit("inline constexpr double kResizeRoundTripPsnrFloor = 25.0;")

    # Expected noise MSE on mid-gray (128), rounding and clamping included.
    for sigma in (0.05, 0.10, 0.15, 0.20, 0.25):
        ideal = (sigma * 255.0) ** 2
        exp = clamped_noise_mse(128.0, sigma)
        emit(f"// noise sigma {sigma:.2f}: ideal {ideal:.2f}, "
             f"clamped+rounded {exp:.2f} ({100 * (exp / ideal - 1):+.2f}%)")
    emit("inline constexpr double kNoiseExpectedMse[] = {" + ", ".join(
        f"{clamped_noise_mse(128.0, s):.10f}"
        for s in (0.05, 0.10, 0.15, 0.20, 0.25)) + "};")

    # Sampler law: equal weights, 1e5 draws, seed 7, one record per domain
    # (the within-domain pick consumes a draw only for pools of size > 1, but
    # NextBelow(1) still draws once).
    rng = SplitMix64(7)
    counts = [0, 0, 0, 0]
    for _ in range(100000):
        u = rng.next_double() * 1.0
        cum = 0.0
        for i in range(4):
            cum += 0.25
            if u < cum or i == 3:
                counts[i] += 1
                break
        rng.next_below(1)
    emit("inline constexpr std::size_t kSamplerCountsSeed7[] = {" +
         ", ".join(str(c) for c in counts) + "};")

    # Recompose: uniform base, one domain at 0.3 under floor 0.8.
    base = {"deepfake": 0.25, "aigc": 0.25, "document": 0.25, "nature": 0.25}
    out = recompose(base, {"document": 0.3, "deepfake": 0.9, "aigc": 0.95,
                           "nature": 0.85}, 0.8)
    emit("// deepfake, aigc, document, nature")
    emit("inline constexpr double kRecomposeOneWeak[] = {" + ", ".join(
        f"{out[d]:.17g}" for d in base) + "};")
    out = recompose(base, {"document": 0.01, "aigc": 0.7}, 0.8)
    emit("inline constexpr double kRecomposeTwoWeakUneven[] = {" + ", ".join(
        f"{out[d]:.17g}" for d in base) + "};")

    # Ledger fixture: AUC falls 4.9% relative to the base.
    emit(f"inline constexpr double kScalingGainFixture = "
         f"{100 * (0.951 - 1.0) / 1.0!r};")

    print("// SPDX-License-Identifier: Apache-2.0")
    print("// Generated by tests/oracle/derive_oracles.py. Do not edit.")
    print("#ifndef FIDL_TESTS_FROZEN_VALUES_H_")
    print("#define FIDL_TESTS_FROZEN_VALUES_H_")
    print()
    print("#include <cstddef>")
    print("#include <cstdint>")
    print()
    print("namespace fidl::frozen {")
    print()
    print("\n".join(lines))
    print()
    print("}  // namespace fidl::frozen")
    print()
    print("#endif  // FIDL_TESTS_FROZEN_VALUES_H_")


if __name__ == "__main__":
    main()

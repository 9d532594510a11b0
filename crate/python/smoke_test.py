"""Smoke test for the vff Python module.

Build and install first:
    pip install maturin && maturin build --release -m crates/py/Cargo.toml -o dist
    pip install dist/vff-*.whl
"""

import math
import os
import tempfile

import numpy as np
import vff


def wave(t, h, w):
    tt, yy, xx = np.meshgrid(np.arange(t), np.arange(h), np.arange(w), indexing="ij")
    phase = 2 * np.pi * ((xx - tt) / 16 + yy / 32)
    return np.stack([0.5 + 0.3 * np.sin(phase + c) for c in range(3)], axis=-1)


def main():
    bank = vff.FrequencyBank.init(48, omega_max=[math.pi / 2] * 3, seed=3)
    assert len(bank) == 48 and bank.omegas.shape == (48, 3) and bank.dc_index == 0

    clip = wave(4, 16, 16)
    grid = vff.fit(clip, bank, ridge=1e-6, weight_sigma=None, border="truncate")
    assert grid.dims == [4, 16, 16] and grid.coeffs.shape == (4, 16, 16, 3, 48, 2)
    recon = grid.sample(psf="point")
    p, _ = vff.psnr(recon, clip)
    print(f"fit/sample round trip: {p:.1f} dB")
    assert p > 40

    up = grid.sample(2.0, 2.0)
    assert up.shape == (8, 32, 32, 3)
    print(f"upsampled to {up.shape}")

    gt = wave(8, 32, 32)
    lr = vff.degrade(gt, 2.0, 2.0)
    ours = vff.stvsr(lr, bank, 2.0, 2.0, ridge=1e-6, weight_sigma=None, border="truncate")
    base = vff.trilinear(lr, 2.0, 2.0)
    a, b = vff.psnr(ours, gt, luma=True)[0], vff.psnr(base, gt, luma=True)[0]
    print(f"stvsr {a:.1f} dB vs trilinear {b:.1f} dB")
    assert a > b

    assert vff.psf_attenuation([1.0, 0.0, 0.0]) == 1.0
    assert vff.psf_attenuation([1.0, 0.0, 0.0], [0.5, 0.5, 0.5]) < 1.0
    coeffs = np.random.default_rng(0).uniform(-1, 1, (3, 48, 2))
    there = vff.phase_shift(coeffs, bank, [0.3, -1.2, 2.0])
    back = vff.phase_shift(there, bank, [-0.3, 1.2, -2.0])
    assert np.allclose(back, coeffs, atol=1e-12)
    assert vff.ssim(clip, clip)[0] == 1.0
    assert math.isinf(vff.psnr(clip, clip)[0])

    with tempfile.TemporaryDirectory() as d:
        path = os.path.join(d, "g.vff")
        grid.save(path)
        loaded = vff.FieldGrid.load(path)
        assert np.allclose(loaded.coeffs, grid.coeffs.astype(np.float32))
        vff.write_video(clip, os.path.join(d, "frames"), bit_depth=16)
        assert np.abs(vff.read_video(os.path.join(d, "frames")) - clip).max() < 1e-4
        vff.write_video(clip, os.path.join(d, "clip.y4m"))
        assert vff.read_video(os.path.join(d, "clip.y4m")).shape == clip.shape
        try:
            vff.FieldGrid.load(os.path.join(d, "missing.vff"))
        except OSError:
            pass
        else:
            raise AssertionError("expected OSError")
    try:
        vff.degrade(clip, 0.5, 1.0)
    except ValueError:
        pass
    else:
        raise AssertionError("expected ValueError")
    print("ok")


if __name__ == "__main__":
    main()

"""Finite-difference verification of the analytic gradients."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ovhar.errors import OvharError
from ovhar.nn.loss import mse_loss
from ovhar.nn.model import ModelConfig, RegressorModel
from ovhar.rng import SplitMix64, derive_seed


@dataclass
class GradCheckReport:
    max_rel_error: float
    worst: tuple[str, int]  # (tensor name, flat index)
    n_coords: int
    tol: float
    eps: float
    passed: bool
    per_tensor_max: dict[str, float] = field(default_factory=dict)

    def summary(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return (
            f"{status} max_rel_error={self.max_rel_error:.3e} "
            f"(tol {self.tol:.1e}, eps {self.eps:.1e}, {self.n_coords} coords, "
            f"worst {self.worst[0]}[{self.worst[1]}])"
        )


def well_conditioned_target(
    model: RegressorModel, window: np.ndarray, seed: int, loss_scale: float = 1e-2
) -> np.ndarray:
    """A regression target near the model's prediction.

    The finite-difference oracle's rounding noise is ~ulp(loss)/(2*eps), so a
    large loss drowns out small-magnitude gradients. Placing the target a
    seeded random direction from the prediction (loss == loss_scale) keeps the
    comparison well above the noise floor for every coordinate.
    """
    pred = model.forward(window)
    delta = SplitMix64(derive_seed(seed, "gc-target")).normals(pred.size)
    delta *= np.sqrt(loss_scale * pred.size) / np.linalg.norm(delta)
    return pred + delta


def _sample_coords(params: dict[str, np.ndarray], n_total: int, rng: SplitMix64):
    """At least ``n_total`` coordinates overall, at least one per tensor,
    allocated roughly proportionally to tensor size."""
    sizes = {name: p.size for name, p in params.items()}
    total = sum(sizes.values())
    coords: list[tuple[str, int]] = []
    for name, size in sizes.items():
        want = max(1, math.ceil(n_total * size / total))
        want = min(want, size)
        chosen: set[int] = set()
        while len(chosen) < want:
            chosen.add(rng.next_u64() % size)
        coords.extend((name, idx) for idx in sorted(chosen))
    return coords


def grad_check(
    model: RegressorModel,
    window: np.ndarray,
    target: np.ndarray,
    eps: float = 1e-5,
    tol: float = 1e-4,
    n_coords: int = 200,
    seed: int = 0,
    corrupt_tensor: str | None = None,
) -> GradCheckReport:
    """Compare analytic gradients against central finite differences.

    Relative error per coordinate is |ga - gn| / max(|ga|, |gn|, 1e-8).
    ``corrupt_tensor`` flips the sign of that tensor's analytic gradient; it
    exists to prove the checker catches a broken backward pass.
    """
    if eps <= 0 or tol <= 0:
        raise OvharError("grad_check requires eps > 0 and tol > 0")
    pred = model.forward(window)
    _, up = mse_loss(pred, target)
    analytic = model.backward(up)
    if corrupt_tensor is not None:
        if corrupt_tensor not in analytic:
            raise OvharError(f"unknown tensor to corrupt: {corrupt_tensor}")
        analytic[corrupt_tensor] = -analytic[corrupt_tensor]

    params = model.parameters()
    coords = _sample_coords(params, n_coords, SplitMix64(derive_seed(seed, "grad-check")))

    def loss_at() -> float:
        p = model.forward(window)
        value, _ = mse_loss(p, target)
        return value

    max_rel = 0.0
    worst = ("", -1)
    per_tensor: dict[str, float] = {name: 0.0 for name in params}
    for name, idx in coords:
        flat = params[name].reshape(-1)
        original = flat[idx]
        flat[idx] = original + eps
        loss_plus = loss_at()
        flat[idx] = original - eps
        loss_minus = loss_at()
        flat[idx] = original
        if not (np.isfinite(loss_plus) and np.isfinite(loss_minus)):
            raise OvharError(f"non-finite loss while probing {name}[{idx}]")
        g_num = (loss_plus - loss_minus) / (2.0 * eps)
        g_ana = float(analytic[name].reshape(-1)[idx])
        rel = abs(g_ana - g_num) / max(abs(g_ana), abs(g_num), 1e-8)
        per_tensor[name] = max(per_tensor[name], rel)
        if rel > max_rel:
            max_rel = rel
            worst = (name, idx)
    return GradCheckReport(
        max_rel_error=max_rel,
        worst=worst,
        n_coords=len(coords),
        tol=tol,
        eps=eps,
        passed=max_rel < tol,
        per_tensor_max=per_tensor,
    )


def standard_check(
    seed: int,
    full_size: bool = False,
    eps: float = 1e-5,
    tol: float = 1e-4,
    corrupt_tensor: str | None = None,
) -> GradCheckReport:
    """Self-contained check: seeded random model + standard-normal window.

    ``full_size`` uses the default architecture on a full 5 s / 50 Hz window;
    otherwise a reduced profile that still spans every parameter tensor (odd
    window lengths are included so pool-tail truncation gets exercised).
    """
    if full_size:
        config = ModelConfig(seed=seed)
        length = 250
    else:
        config = ModelConfig(
            in_channels=3, conv_filters=8, kernel_size=5, pool_size=2, hidden_size=8, seed=seed
        )
        length = 40 + (seed % 11)
    model = RegressorModel(config, init=True)
    rng = SplitMix64(derive_seed(seed, "gc-input"))
    window = rng.normals(length * config.in_channels).reshape(length, config.in_channels)
    target = well_conditioned_target(model, window, seed)
    return grad_check(
        model, window, target, eps=eps, tol=tol, seed=seed, corrupt_tensor=corrupt_tensor
    )

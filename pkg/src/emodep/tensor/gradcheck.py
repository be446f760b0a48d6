"""Central finite-difference check of autograd gradients."""

import numpy as np

from ..errors import NonFiniteLoss


def _scalar(value):
    v = float(np.asarray(getattr(value, "data", value)))
    if not np.isfinite(v):
        raise NonFiniteLoss(f"loss evaluated to {v}")
    return v


def _central(f, flat, k, eps):
    """Central difference plus the gap between the two one-sided differences."""
    orig = flat[k]
    flat[k] = orig + eps
    up = _scalar(f())
    flat[k] = orig - eps
    down = _scalar(f())
    flat[k] = orig
    mid = _scalar(f())
    return (up - down) / (2.0 * eps), abs((up - mid) - (mid - down)) / eps


def grad_check(f, params, eps=1e-5, coords=None, rng=None, refine=2, exclude=None):
    """Max relative error between autograd and central differences.

    ``f`` takes no arguments and returns a scalar Tensor built from ``params``
    (a name -> Tensor mapping, ideally float64).  ``coords`` limits the check
    to that many randomly chosen entries per parameter; ``None`` checks all.
    The error per coordinate is ``|g_ad - g_fd| / max(1, |g_ad|, |g_fd|)``.
    A coordinate whose one-sided differences disagree sits within ``eps`` of
    a kink (ReLU, Huber threshold); there the step shrinks 100x, at most
    ``refine`` times, before the error is recorded.  Points where ``f`` is
    not differentiable at all (``|x|`` at 0) belong in ``exclude``, a
    name -> flat-index collection of coordinates to skip.
    """
    rng = np.random.default_rng(0) if rng is None else rng
    for p in params.values():
        p.grad = None
    loss = f()
    _scalar(loss)
    loss.backward()
    analytic = {n: (p.grad.copy() if p.grad is not None else np.zeros_like(p.data)) for n, p in params.items()}
    worst = 0.0
    for name, p in params.items():
        flat = p.data.reshape(-1)
        if coords is None or coords >= flat.size:
            picks = np.arange(flat.size)
        else:
            picks = rng.choice(flat.size, size=coords, replace=False)
        skip = set((exclude or {}).get(name, ()))
        g_ad = analytic[name].reshape(-1)
        for k in picks:
            if int(k) in skip:
                continue
            step = eps
            for _ in range(refine + 1):
                g_fd, gap = _central(f, flat, k, step)
                err = abs(g_ad[k] - g_fd) / max(1.0, abs(g_ad[k]), abs(g_fd))
                if err < 1e-6 or gap < 1e-4 * max(1.0, abs(g_fd)):
                    break
                step /= 100.0
            worst = max(worst, err)
    for p in params.values():
        p.grad = None
    return worst

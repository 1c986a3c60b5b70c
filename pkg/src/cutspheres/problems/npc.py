"""Multiclass Neyman-Pearson classification with a sigmoid surrogate loss.

A linear classifier has one weight vector ``x_k`` per class and predicts
``argmax_k x_k . zeta``. Class 1 is prioritized: its surrogate error ``F_1`` is
minimized while the errors of classes ``k >= 2`` are capped at ``r_k`` and each
weight vector is kept in the ball of radius ``lambda``.

Variables are class-major: ``x = (x_1, ..., x_K)`` followed by the slack
coordinate of the squared-norm form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from ..errors import DatasetMismatch, InvalidParameter
from ..model import Array, Problem, WeaklyConvexConstraint, reformulate
from .libsvm import Dataset

# minimum of psi'' is attained at exp(xi) = 2 - sqrt(3)
RHO_PSI = 1.0 / (6.0 * math.sqrt(3.0))


def psi(xi):
    """``1 / (1 + exp(xi))``."""
    return expit(-np.asarray(xi, dtype=float))


def psi_prime(xi):
    xi = np.asarray(xi, dtype=float)
    return -expit(xi) * expit(-xi)


@dataclass(frozen=True)
class NpcSpec:
    """Training data split by class plus hyperparameters.

    ``classes[k]`` is the ``(|D_k|, p)`` matrix of instances of class ``k + 1``;
    ``thresholds[j]`` is ``r_{j+2}``.
    """

    classes: tuple[np.ndarray, ...]
    lam: float = 0.3
    thresholds: tuple[float, ...] = field(default=())

    def __post_init__(self):
        cls = tuple(np.atleast_2d(np.asarray(c, dtype=float)) for c in self.classes)
        if len(cls) < 2:
            raise DatasetMismatch("at least two classes are required")
        p = cls[0].shape[1]
        for k, c in enumerate(cls, start=1):
            if c.shape[0] == 0:
                raise DatasetMismatch(f"class {k} is empty")
            if c.shape[1] != p:
                raise DatasetMismatch(f"class {k} has {c.shape[1]} features, expected {p}")
        th = tuple(float(r) for r in self.thresholds) or (0.92,) * (len(cls) - 1)
        if len(th) != len(cls) - 1:
            raise DatasetMismatch(f"expected {len(cls) - 1} thresholds, got {len(th)}")
        if not self.lam > 0 or not all(r > 0 for r in th):
            raise InvalidParameter("lambda and the thresholds must be positive")
        object.__setattr__(self, "classes", cls)
        object.__setattr__(self, "thresholds", th)

    @property
    def K(self) -> int:
        return len(self.classes)

    @property
    def p(self) -> int:
        return self.classes[0].shape[1]

    @classmethod
    def from_dataset(cls, data: Dataset, lam: float = 0.3, thresholds=()) -> "NpcSpec":
        groups = tuple(data.class_rows(k) for k in range(1, data.n_classes + 1))
        return cls(groups, lam, tuple(thresholds))


def class_loss_modulus(Z: np.ndarray, K: int) -> float:
    """Weak-convexity estimate ``2 (K - 1) rho_psi sum ||zeta_t||^2 / |D_k|``."""
    return 2.0 * (K - 1) * RHO_PSI * float(np.sum(Z * Z)) / Z.shape[0]


def _weights(x: Array, K: int, p: int) -> np.ndarray:
    return np.asarray(x, dtype=float)[: K * p].reshape(K, p)


def class_loss(x: Array, Z: np.ndarray, k: int, K: int) -> float:
    """Average over ``t in D_k`` of ``sum_{l != k} psi(x_k.zeta_t - x_l.zeta_t)`` (``k`` 0-based)."""
    S = Z @ _weights(x, K, Z.shape[1]).T  # scores, |D| x K
    margins = S[:, [k]] - S
    vals = psi(margins)
    vals[:, k] = 0.0
    return float(vals.sum()) / Z.shape[0]


def class_loss_gradient(x: Array, Z: np.ndarray, k: int, K: int) -> Array:
    """Gradient of :func:`class_loss` in ``R^{Kp}``."""
    W = _weights(x, K, Z.shape[1])
    S = Z @ W.T
    D = psi_prime(S[:, [k]] - S)
    D[:, k] = 0.0
    V = -D
    V[:, k] = D.sum(axis=1)
    return (V.T @ Z / Z.shape[0]).reshape(-1)


def class_loss_gradient_kron(x: Array, Z: np.ndarray, k: int, K: int) -> Array:
    """Same gradient written as a sum of ``psi' * (u_l kron zeta_t)`` terms.

    Slow; kept to check the vectorized form.
    """
    W = _weights(x, K, Z.shape[1])
    g = np.zeros(K * Z.shape[1])
    for l in range(K):
        if l == k:
            continue
        u = np.zeros(K)
        u[k], u[l] = 1.0, -1.0
        for zeta in Z:
            g += psi_prime(W[k] @ zeta - W[l] @ zeta) * np.kron(u, zeta)
    return g / Z.shape[0]


def build_npc(spec: NpcSpec) -> Problem:
    """Squared-norm form in dimension ``pK + 1`` with ``rho = 2`` and ``eta = K lambda^2``.

    Constraints, in order: the prioritized loss ``F_1 + K lambda^2 - ||y||^2``,
    the capped losses of classes ``2..K`` and the norm caps ``||x_k||^2 <= lambda^2``.
    """
    K, p = spec.K, spec.p
    n = K * p
    lam2 = spec.lam**2
    rhos = [class_loss_modulus(Z, K) for Z in spec.classes]
    Z1 = spec.classes[0]
    objective = WeaklyConvexConstraint.from_smooth(
        lambda x: class_loss(x, Z1, 0, K),
        lambda x: class_loss_gradient(x, Z1, 0, K),
        0.5 * rhos[0],
        "F1",
    )
    cons = []
    for k in range(1, K):
        Zk, rk = spec.classes[k], spec.thresholds[k - 1]
        cons.append(
            WeaklyConvexConstraint.from_smooth(
                lambda x, Zk=Zk, k=k, rk=rk: class_loss(x, Zk, k, K) - rk,
                lambda x, Zk=Zk, k=k: class_loss_gradient(x, Zk, k, K),
                0.5 * rhos[k],
                f"class_{k + 1}",
            )
        )
    for k in range(K):
        sl = slice(k * p, (k + 1) * p)

        def cap(x, sl=sl):
            w = x[sl]
            return float(w @ w) - lam2

        def cap_grad(x, sl=sl):
            g = np.zeros(n)
            g[sl] = 2.0 * x[sl]
            return g

        cons.append(WeaklyConvexConstraint(cap, 0.0, cap_grad, f"norm_{k + 1}"))
    return reformulate(
        objective,
        cons,
        rho=2.0,
        eta=K * lam2,
        dimension=n,
        metadata={"kind": "npc", "K": K, "p": p, "lam": spec.lam, "rhos": rhos, "thresholds": list(spec.thresholds)},
    )


def npc_objective(x: Array, spec: NpcSpec) -> float:
    """``F_1`` at a point of either layout (the slack coordinate is ignored)."""
    return class_loss(x, spec.classes[0], 0, spec.K)


def npc_classify(x: Array, zeta: Array, K: int) -> int:
    """1-based class of ``zeta``; ties go to the smallest index."""
    zeta = np.asarray(zeta, dtype=float)
    W = _weights(x, K, zeta.shape[-1])
    return int(np.argmax(W @ zeta)) + 1


def class_counts(x: Array, spec: NpcSpec) -> list[tuple[int, int]]:
    """``(correct, total)`` per class on the training instances."""
    W = _weights(x, spec.K, spec.p)
    out = []
    for k, Z in enumerate(spec.classes):
        pred = np.argmax(Z @ W.T, axis=1)
        out.append((int(np.sum(pred == k)), Z.shape[0]))
    return out

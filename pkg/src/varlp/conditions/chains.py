"""Explicit constant chains.

Both chains are evaluated in 50-digit arithmetic from the exact binary
value of each float input and only rounded at the end, so closed-form
cases such as 8^(4/3) = 16 or r = 13/14 come out as the nearest double.
"""

from __future__ import annotations

import sys
from dataclasses import asdict, dataclass

import mpmath

_CTX = mpmath.mp.clone()
_CTX.dps = 50


def _q(x):
    return _CTX.mpf(x)


def _f(x) -> float:
    return float(x)


@dataclass(frozen=True)
class ConstantChain31:
    r: float
    C: float
    p_minus: float
    p_plus: float
    gamma: float
    k: float
    eps: float
    A: float
    gamma_dual: float
    eta: float
    eta_complement: float   # 1 - eta, kept separately since eta sits near 1
    delta: float
    feasible: bool

    def residuals(self) -> dict[str, float]:
        """Relative residuals of the defining equations, recomputed in floats."""
        def rel(a, b):
            return abs(a - b) / max(abs(b), 1e-300)
        if self.eta_complement >= sys.float_info.min:
            eta_res = rel(self.A * self.eta_complement ** (1 / self.gamma_dual), 0.5)
        else:
            # 1 - eta is subnormal or zero, so only a few bits survive; compare
            # against the float recomputation on the scale of the smallest normal
            ref = (1 / (2 * self.A)) ** self.gamma_dual
            eta_res = abs(self.eta_complement - ref) / max(ref, sys.float_info.min)
        return {
            "k": rel(self.k, 2 ** (1 + self.p_plus / self.p_minus) * self.C),
            "eps": rel(self.eps, self.r / self.gamma - 1),
            "A": rel(self.A, max((2 * self.k) ** (1 + self.eps), 2 * self.C)),
            "gamma_dual": rel(self.gamma_dual, self.gamma / (self.gamma - 1)),
            "eta": eta_res,
            "delta": rel(self.delta, self.eps / (1 + self.eps) * self.p_minus),
        }

    def to_dict(self) -> dict:
        return asdict(self)


def chain31(r: float, C: float, p_minus: float, p_plus: float,
            gamma: float | None = None) -> ConstantChain31:
    """From reverse-Holder constants (r, C) to the constants (A, eta, delta).

    k = 2^(1 + p_+/p_-) C, eps = r/gamma - 1, A = max((2k)^(1+eps), 2C),
    gamma' = gamma/(gamma - 1), eta from A (1 - eta)^(1/gamma') = 1/2 and
    delta = eps/(1 + eps) p_-.  gamma defaults to (1 + r)/2.
    """
    if gamma is None:
        gamma = (1 + r) / 2
    if not 1 < gamma < r:
        raise ValueError(f"need 1 < gamma < r, got gamma={gamma}, r={r}")
    if not C > 0:
        raise ValueError("C must be positive")
    if not 1 <= p_minus <= p_plus < float("inf"):
        raise ValueError("need 1 <= p_minus <= p_plus < inf")
    R, Cq, pm, pp, g = (_q(x) for x in (r, C, p_minus, p_plus, gamma))
    k = 2 ** (1 + pp / pm) * Cq
    eps = R / g - 1
    A = max((2 * k) ** (1 + eps), 2 * Cq)
    gd = g / (g - 1)
    eta_c = (1 / (2 * A)) ** gd
    eta = 1 - eta_c
    delta = eps / (1 + eps) * pm
    eta_f, delta_f = _f(eta), _f(delta)
    return ConstantChain31(
        r=float(r), C=float(C), p_minus=float(p_minus), p_plus=float(p_plus),
        gamma=float(gamma), k=_f(k), eps=_f(eps), A=_f(A), gamma_dual=_f(gd),
        eta=eta_f, eta_complement=_f(eta_c), delta=delta_f,
        feasible=0 < eta_f < 1 and 0 < delta_f < 1,
    )


@dataclass(frozen=True)
class ConstantChain45:
    lam: float
    eta: float
    n: int
    N: int
    C: float
    p_minus: float
    p_plus: float
    nu: float
    t: float
    r: float
    gamma: float

    @property
    def margin(self) -> float:
        """t r^n - (1 - r^n) - nu; positive when the core estimate closes."""
        rn = self.r ** self.n
        return self.t * rn - (1 - rn) - self.nu

    def residuals(self) -> dict[str, float]:
        lhs = 2 * self.N * self.C ** (self.p_plus - self.p_minus) * self.gamma ** self.p_minus
        return {
            "nu": abs(self.nu - max(self.lam, self.eta)),
            "t": abs(self.t - (1 + self.nu) / 2),
            "r": abs(self.r ** self.n - ((1 + self.nu) / (1 + self.t) + 1) / 2),
            "gamma": abs(lhs - 0.5) / 0.5,
        }

    def to_dict(self) -> dict:
        return asdict(self)


def chain45(lam: float, eta: float, n: int, N: int, C: float,
            p_minus: float, p_plus: float) -> ConstantChain45:
    """nu = max(lam, eta), t = (1 + nu)/2, r^n = ((1 + nu)/(1 + t) + 1)/2 and
    gamma from 2 N C^(p_+ - p_-) gamma^(p_-) = 1/2."""
    if not (0 < lam < 1 and 0 < eta < 1):
        raise ValueError("lambda and eta must lie in (0, 1)")
    if int(n) != n or n < 1:
        raise ValueError("n must be a positive integer")
    if N < 1 or C < 1:
        raise ValueError("need N >= 1 and C >= 1")
    if not 1 <= p_minus <= p_plus < float("inf"):
        raise ValueError("need 1 <= p_minus <= p_plus < inf")
    L, E, Cq, pm, pp = (_q(x) for x in (lam, eta, C, p_minus, p_plus))
    nu = max(L, E)
    t = (1 + nu) / 2
    rn = ((1 + nu) / (1 + t) + 1) / 2
    r = rn ** (_CTX.mpf(1) / int(n))
    gamma = (1 / (4 * int(N) * Cq ** (pp - pm))) ** (1 / pm)
    out = ConstantChain45(
        lam=float(lam), eta=float(eta), n=int(n), N=int(N), C=float(C),
        p_minus=float(p_minus), p_plus=float(p_plus),
        nu=_f(nu), t=_f(t), r=_f(r), gamma=_f(gamma),
    )
    if not t * rn - (1 - rn) - nu > 0:
        raise ArithmeticError("core margin t r^n - (1 - r^n) > nu failed")
    if not 0 < out.gamma < 1:
        raise ArithmeticError(f"gamma = {out.gamma} outside (0, 1)")
    return out

"""Implicit constitutive relations ``G(S, D) = 0`` and their derivatives.

Tensors are symmetric and traceless, stored as components ``(a, b)`` of
``[[a, b], [b, -a]]`` in the last axis, so ``|T|^2 = 2 (a^2 + b^2)``.
Derivatives are returned as ``(..., 2, 2)`` matrices acting on components.
Most families have the separable form ``G = alpha(|D|^2) D - beta(|S|^2) S``.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np

PAPANASTASIOU_SMALL = 1e-8
VISC_GUARD = 1e-12


def sqnorm(t: np.ndarray) -> np.ndarray:
    return 2.0 * (t[..., 0] ** 2 + t[..., 1] ** 2)


def _eye(shape):
    out = np.zeros(tuple(shape) + (2, 2))
    out[..., 0, 0] = 1.0
    out[..., 1, 1] = 1.0
    return out


def _outer(x, y):
    return x[..., :, None] * y[..., None, :]


def _check_positive(**kw):
    for k, v in kw.items():
        if not v > 0:
            raise ValueError(f"{k} must be positive, got {v}")


class ConstitutiveModel:
    family = "base"

    def alpha_beta(self, s, d):
        """Coefficients ``(alpha, beta)`` with ``G = alpha D - beta S``."""
        raise NotImplementedError

    def G(self, s, d):
        s, d = np.asarray(s, float), np.asarray(d, float)
        al, be = self.alpha_beta(s, d)
        return al[..., None] * d - be[..., None] * s

    def dG(self, s, d):
        raise NotImplementedError

    def eff_viscosity(self, s, d):
        al, be = self.alpha_beta(np.asarray(s, float), np.asarray(d, float))
        with np.errstate(divide="ignore"):
            # beta vanishes at S = 0 for shear-thinning power laws: infinite viscosity
            return 0.5 * al / be

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)

    @property
    def params(self) -> dict:
        return dataclasses.asdict(self)


class _Separable(ConstitutiveModel):
    """``G = alpha(|D|^2) D - beta(|S|^2) S``; subclasses give the scalar laws."""

    def alpha(self, t):
        return np.ones_like(t), np.zeros_like(t)

    def beta(self, t):
        raise NotImplementedError

    def alpha_beta(self, s, d):
        return self.alpha(sqnorm(d))[0], self.beta(sqnorm(s))[0]

    def dG(self, s, d):
        s, d = np.asarray(s, float), np.asarray(d, float)
        a, da = self.alpha(sqnorm(d))
        b, db = self.beta(sqnorm(s))
        # d|T|^2 / d(components) = 4 t
        dD = a[..., None, None] * _eye(a.shape) + 4.0 * da[..., None, None] * _outer(d, d)
        dS = -b[..., None, None] * _eye(b.shape) - 4.0 * db[..., None, None] * _outer(s, s)
        return dS, dD


@dataclass(frozen=True)
class Newtonian(_Separable):
    nu: float = 1.0
    family = "newtonian"

    def __post_init__(self):
        _check_positive(nu=self.nu)

    def beta(self, t):
        return np.full_like(t, 1.0 / (2 * self.nu)), np.zeros_like(t)


@dataclass(frozen=True)
class CarreauYasuda(_Separable):
    nu: float = 1.0
    r1: float = 2.0
    r2: float = 2.0
    beta1: float = 1.0
    beta2: float = 1.0
    Gamma1: float = 1.0
    Gamma2: float = 1.0
    family = "carreau"

    def __post_init__(self):
        _check_positive(nu=self.nu, Gamma1=self.Gamma1, Gamma2=self.Gamma2)
        if self.r1 <= 1 or self.r2 <= 1:
            raise ValueError("r1, r2 must exceed 1")
        if not (0 <= self.beta1 <= 1 and 0 <= self.beta2 <= 1):
            raise ValueError("beta1, beta2 must lie in [0, 1]")

    def alpha(self, t):
        e = 0.5 * (self.r1 - 2)
        base = 1 + self.Gamma1 * t
        val = self.beta1 + (1 - self.beta1) * base**e
        der = (1 - self.beta1) * e * self.Gamma1 * base ** (e - 1)
        return val, der

    def beta(self, t):
        e = (2 - self.r2) / (2 * (self.r2 - 1))
        base = 1 + self.Gamma2 * t
        c = 1.0 / (2 * self.nu)
        val = c * (self.beta2 + (1 - self.beta2) * base**e)
        der = c * (1 - self.beta2) * e * self.Gamma2 * base ** (e - 1)
        return val, der


@dataclass(frozen=True)
class ActivatedEuler(_Separable):
    nu: float = 1.0
    tau_y: float = 0.0
    eps: float = 1.0
    family = "activated-euler"

    def __post_init__(self):
        _check_positive(nu=self.nu, eps=self.eps)
        if self.tau_y < 0:
            raise ValueError("tau_y must be nonnegative")

    def beta(self, t):
        q = self.eps**2 + t
        val = 1.0 / (2 * self.nu) + self.tau_y / np.sqrt(q)
        der = -0.5 * self.tau_y * q**-1.5
        return val, der


@dataclass(frozen=True)
class EulerPowerLaw(_Separable):
    """Power law in ``S`` (dual exponent ``r' = r/(r-1)``) plus activation term."""

    nu: float = 1.0
    r: float = 2.0
    tau_y: float = 0.0
    eps: float = 1.0
    family = "euler-power-law"

    def __post_init__(self):
        _check_positive(nu=self.nu, eps=self.eps)
        if self.r <= 1:
            raise ValueError("r must exceed 1")
        if self.tau_y < 0:
            raise ValueError("tau_y must be nonnegative")

    @property
    def rprime(self) -> float:
        return self.r / (self.r - 1)

    def beta(self, t):
        c = 1.0 / (2 * self.nu)
        e = 0.5 * (self.rprime - 2)
        x = t * c * c  # |S / 2nu|^2
        pos = x > 0
        xs = np.where(pos, x, 1.0)
        val = c * np.where(pos, xs**e, 1.0 if e == 0 else 0.0)
        der = np.where(pos, c * e * xs ** (e - 1) * c * c, 0.0) if e != 0 else np.zeros_like(t)
        q = self.eps**2 + t
        return val + self.tau_y / np.sqrt(q), der - 0.5 * self.tau_y * q**-1.5


@dataclass(frozen=True)
class BinghamBE(ConstitutiveModel):
    """``G = 2 nu (tau_y + q) D - q S`` with ``q = sqrt(|2 nu D|^2 + eps^2)``."""

    nu: float = 1.0
    tau_y: float = 0.0
    eps: float = 1.0
    family = "bingham-be"

    def __post_init__(self):
        _check_positive(nu=self.nu, eps=self.eps)
        if self.tau_y < 0:
            raise ValueError("tau_y must be nonnegative")

    def _q(self, d):
        return np.sqrt(4 * self.nu**2 * sqnorm(d) + self.eps**2)

    def alpha_beta(self, s, d):
        q = self._q(d)
        return 2 * self.nu * (self.tau_y + q), q

    def dG(self, s, d):
        s, d = np.asarray(s, float), np.asarray(d, float)
        q = self._q(d)
        dq = (8 * self.nu**2 / q)[..., None] * d
        dD = (2 * self.nu * (self.tau_y + q))[..., None, None] * _eye(q.shape) \
            + _outer(2 * self.nu * d - s, dq)
        dS = -q[..., None, None] * _eye(q.shape)
        return dS, dD


@dataclass(frozen=True)
class BinghamPapanastasiou(ConstitutiveModel):
    """``G = (2 nu + tau_y/|D|)(1 - exp(-|D|/eps)) D - S``."""

    nu: float = 1.0
    tau_y: float = 0.0
    eps: float = 1.0
    family = "bingham-papanastasiou"

    def __post_init__(self):
        _check_positive(nu=self.nu, eps=self.eps)
        if self.tau_y < 0:
            raise ValueError("tau_y must be nonnegative")

    def _f(self, d):
        m = np.sqrt(sqnorm(d))
        small = m < PAPANASTASIOU_SMALL
        ms = np.where(small, 1.0, m)
        ex = np.exp(-ms / self.eps)
        nu, ty, eps = self.nu, self.tau_y, self.eps
        f = (2 * nu + ty / ms) * (1 - ex)
        df = -ty / ms**2 * (1 - ex) + (2 * nu + ty / ms) * ex / eps
        # removable singularity: second-order Taylor expansion about |D| = 0
        f_t = ty / eps * (1 - m / (2 * eps)) + 2 * nu * m / eps
        df_t = -ty / (2 * eps**2) + 2 * nu / eps
        return np.where(small, f_t, f), np.where(small, df_t, df), m, ms, small

    def alpha_beta(self, s, d):
        f = self._f(d)[0]
        return f, np.ones_like(f)

    def dG(self, s, d):
        s, d = np.asarray(s, float), np.asarray(d, float)
        f, df, m, ms, small = self._f(d)
        # d|D| / d(components) = 2 d / |D|
        unit = np.where(small[..., None], 0.0, 2 * d / ms[..., None])
        dD = f[..., None, None] * _eye(f.shape) + df[..., None, None] * _outer(d, unit)
        dS = -_eye(f.shape)
        return dS, dD


FAMILIES = {
    "newtonian": Newtonian,
    "carreau": CarreauYasuda,
    "bingham-be": BinghamBE,
    "bingham-papanastasiou": BinghamPapanastasiou,
    "activated-euler": ActivatedEuler,
    "euler-power-law": EulerPowerLaw,
}


def make_model(family: str, **params) -> ConstitutiveModel:
    try:
        cls = FAMILIES[family]
    except KeyError:
        raise ValueError(f"unknown model family {family!r}; choose from {sorted(FAMILIES)}") from None
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = set(params) - names
    if unknown:
        raise ValueError(f"unknown parameters for {family}: {sorted(unknown)}")
    return cls(**{k: float(v) for k, v in params.items()})


def eval_G(model: ConstitutiveModel, S, D) -> np.ndarray:
    return model.G(S, D)


def eval_dG(model: ConstitutiveModel, S, D):
    """``(dG/dS, dG/dD)`` as ``(..., 2, 2)`` component matrices."""
    return model.dG(S, D)


def eff_viscosity(model: ConstitutiveModel, S, D) -> np.ndarray:
    """``alpha / (2 beta)`` at the given state."""
    return model.eff_viscosity(S, D)


def eff_viscosity_field(model: ConstitutiveModel, S, D) -> np.ndarray:
    """``|S| / (2|D|)``, falling back to ``alpha / (2 beta)`` where ``|D| < 1e-12``."""
    S, D = np.asarray(S, float), np.asarray(D, float)
    nS, nD = np.sqrt(sqnorm(S)), np.sqrt(sqnorm(D))
    ok = nD >= VISC_GUARD
    ratio = nS / (2 * np.where(ok, nD, 1.0))
    return np.where(ok, ratio, model.eff_viscosity(S, D))

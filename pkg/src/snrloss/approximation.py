"""Moment-matching fits and evaluators for the SNR-loss distribution.

Three fitted families:

* three-moment shifted chi-square a1 * chi2(dof) + a2 (matches the first
  three cumulants of a weighted chi-square sum),
* two-moment scaled chi-square a * chi2(dof),
* three-cumulant scaled F, Q_a = a * chi2(nu) / chi2(mu), with a unique
  closed-form solution whenever k1*k3 != 2*k2^2.

A fitted (or exact) loss distribution is

    loss =d [1 + a_eff * chi2(nu) / chi2(mu)]^-1

whose density has the closed form implemented by :func:`loss_pdf`.  Degrees
of freedom are stored in the real-dof convention and may be fractional; the
density uses the half dofs nu/2 and mu/2, which is what makes the
no-mismatch case (a_eff = 1) collapse to the beta density with parameters
(K - N + 2, N - 1).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import integrate
from scipy.special import betainc, betaincinv, gammaincc, gammaincinv, gammaln

from .errors import DegenerateCumulants, InvalidFit, NegativePower, NonPositiveCumulant, OutOfSupport
from .mismatch import CumulantTriple, QuadraticFormSpec, cumulants_q, inverse_chi2_moment

__all__ = [
    "LossDistribution",
    "PearsonFit",
    "PearsonLossDistribution",
    "ScaledChi2Fit",
    "ScaledFFit",
    "assemble_loss",
    "assemble_pearson_loss",
    "exact_surprise_distribution",
    "loss_cdf",
    "loss_mean",
    "loss_pdf",
    "loss_quantile",
    "pearson_cumulants",
    "pearson_three_moment",
    "scaled_chi2_two_moment",
    "scaled_f_cumulants",
    "scaled_f_fit",
]

LOSS_KINDS = frozenset({"exact_beta", "exact_mpdr", "exact_surprise", "fitted_ger", "fitted_general"})

_QUAD_TOL = 1e-10
_QUANTILE_TOL = 1e-9
# Gauss-Legendre resolution for the shifted-fit cdf/pdf integrals
_PEARSON_NODES = 384


@dataclass(frozen=True)
class PearsonFit:
    """Three-moment fit a1 * chi2(dof) + a2 to a weighted chi-square sum."""

    a1: float
    dof: float
    a2: float


@dataclass(frozen=True)
class ScaledChi2Fit:
    """Two-moment fit a * chi2(dof)."""

    a: float
    dof: float


@dataclass(frozen=True)
class ScaledFFit:
    """Three-cumulant fit a * chi2(num_dof) / chi2(den_dof)."""

    a: float
    num_dof: float
    den_dof: float


def pearson_three_moment(c1, c2, c3) -> PearsonFit:
    """Best three-moment shifted chi-square approximation of a weighted
    chi-square sum with coefficients c_s.

    Matching the cumulants (c1, 2*c2, 8*c3) forces a1 = c3/c2,
    dof = c2^3/c3^2 and a2 = c1 - c2^2/c3.
    """
    if not (c2 > 0 and c3 > 0):
        raise NonPositiveCumulant("need c2 > 0 and c3 > 0")
    return PearsonFit(a1=c3 / c2, dof=c2**3 / c3**2, a2=c1 - c2**2 / c3)


def pearson_cumulants(fit: PearsonFit) -> tuple[float, float, float]:
    """First three cumulants of a1 * chi2(dof) + a2."""
    return (fit.a1 * fit.dof + fit.a2, 2.0 * fit.a1**2 * fit.dof, 8.0 * fit.a1**3 * fit.dof)


def scaled_chi2_two_moment(c1, c2) -> ScaledChi2Fit:
    """Two-moment scaled chi-square approximation: a = c2/c1, dof = c1^2/c2."""
    if not (c1 > 0 and c2 > 0):
        raise NonPositiveCumulant("need c1 > 0 and c2 > 0")
    return ScaledChi2Fit(a=c2 / c1, dof=c1**2 / c2)


def scaled_f_cumulants(a, num_dof, den_dof) -> CumulantTriple:
    """Analytic first three cumulants of a * chi2(num_dof) / chi2(den_dof);
    needs den_dof > 6."""
    e1 = inverse_chi2_moment(den_dof, 1)
    e2 = inverse_chi2_moment(den_dof, 2)
    e3 = inverse_chi2_moment(den_dof, 3)
    nu = num_dof
    k1 = a * nu * e1
    k2 = a**2 * nu * (nu + 2.0) * e2 - (a * nu) ** 2 * e1**2
    k3 = (
        a**3 * nu * (nu + 2.0) * (nu + 4.0) * e3
        - 3.0 * a**3 * nu**2 * (nu + 2.0) * e1 * e2
        + 2.0 * (a * nu * e1) ** 3
    )
    return CumulantTriple(k1=float(k1), k2=float(k2), k3=float(k3))


def _scaled_f_linear_solve(kappa: CumulantTriple) -> tuple[float, float, float]:
    """Solve the equivalent 3x3 linear system in (mu, a*nu, a)."""
    k1, k2, k3 = kappa.k1, kappa.k2, kappa.k3
    m2 = k2 + k1**2
    m3 = k3 + 3.0 * k1 * k2 + k1**3
    a_mat = np.array(
        [
            [k1, -1.0, 0.0],
            [m2, -k1, -2.0 * k1],
            [m3, -m2, -4.0 * m2],
        ]
    )
    b = np.array([2.0 * k1, 4.0 * m2, 6.0 * m3])
    mu, a_nu, a = np.linalg.solve(a_mat, b)
    return float(a), float(a_nu / a), float(mu)


def scaled_f_fit(kappa: CumulantTriple) -> ScaledFFit:
    """Fit a * chi2(nu) / chi2(mu) to the given cumulant triple.

    Uses the closed-form solution and cross-checks it against the linear
    3x3 system; the two must agree to 1e-9 relative.  Raises
    DegenerateCumulants when k1*k3 is too close to 2*k2^2 (the system has
    no solution there) and InvalidFit when the solution leaves the valid
    region (a, nu > 0 and mu > 6).
    """
    k1, k2, k3 = kappa.k1, kappa.k2, kappa.k3
    det = k1 * k3 - 2.0 * k2**2
    if abs(det) <= 1e-10 * max(abs(k1 * k3), k2**2):
        raise DegenerateCumulants(
            f"k1*k3 - 2*k2^2 vanishes for (k1, k2, k3) = ({k1!r}, {k2!r}, {k3!r}); "
            "no scaled-F solution exists"
        )
    denom_a = k2 * k3 + 4.0 * k1 * k2**2 - k1**2 * k3
    a = denom_a / det
    nu = 4.0 * k1 * (k1 * k3 + k1**2 * k2 - k2**2) / denom_a
    mu = 2.0 + 4.0 * (k1 * k3 + k1**2 * k2 - k2**2) / det

    a_lin, nu_lin, mu_lin = _scaled_f_linear_solve(kappa)
    for closed, linear in ((a, a_lin), (nu, nu_lin), (mu, mu_lin)):
        if abs(closed - linear) > 1e-9 * max(1.0, abs(closed)):
            raise InvalidFit("closed form and linear solve disagree")

    if not (a > 0 and nu > 0):
        raise InvalidFit(f"fit left the valid region: a={a}, nu={nu}")
    if not mu > 6:
        raise InvalidFit(f"fitted denominator dof must exceed 6, got {mu}")
    fit = ScaledFFit(a=float(a), num_dof=float(nu), den_dof=float(mu))
    check = scaled_f_cumulants(fit.a, fit.num_dof, fit.den_dof)
    if check.k1 * check.k3 <= 2.0 * check.k2**2:
        raise InvalidFit("fitted cumulants violate k1*k3 > 2*k2^2")
    return fit


@dataclass(frozen=True)
class LossDistribution:
    """Loss distribution [1 + a_eff * chi2(num_dof)/chi2(den_dof)]^-1.

    ``kind`` records provenance: exact_beta / exact_mpdr are exact closed
    forms, exact_surprise carries the exact two-eigenvalue compound in
    ``compound`` alongside its scaled-F fit, fitted_ger / fitted_general
    are moment approximations.
    """

    a_eff: float
    num_dof: float
    den_dof: float
    kind: str
    compound: QuadraticFormSpec | None = None

    def __post_init__(self):
        if self.kind not in LOSS_KINDS:
            raise ValueError(f"unknown kind {self.kind!r}")
        if not (self.a_eff > 0 and self.num_dof > 0 and self.den_dof > 0):
            raise InvalidFit("loss distribution parameters must be positive")

    # -- fast vectorized evaluators (closed forms) --------------------

    def pdf(self, x):
        return loss_pdf(self, x)

    def cdf(self, x):
        """Closed-form cdf via the regularized incomplete beta function."""
        x = np.asarray(x, dtype=float)
        if np.any(x < 0) or np.any(x > 1):
            raise OutOfSupport("loss lives on [0, 1]")
        t = self.a_eff * x / (1.0 + (self.a_eff - 1.0) * x)
        return betainc(0.5 * self.den_dof, 0.5 * self.num_dof, t)

    def quantile(self, prob):
        """Closed-form quantile by inverting the incomplete beta function."""
        prob = np.asarray(prob, dtype=float)
        if np.any(prob <= 0) or np.any(prob >= 1):
            raise OutOfSupport("probability must lie in (0, 1)")
        t = betaincinv(0.5 * self.den_dof, 0.5 * self.num_dof, prob)
        return t / (self.a_eff - (self.a_eff - 1.0) * t)

    def mean(self):
        return loss_mean(self)


def loss_pdf(dist: LossDistribution, x):
    """Density of the loss distribution, evaluated in log space.

    With nt = num_dof/2 and mt = den_dof/2:
    p(x) = a^mt * G(nt+mt)/(G(nt)G(mt)) * x^(mt-1) (1-x)^(nt-1)
           / (1 + (a-1) x)^(nt+mt).
    """
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0) or np.any(x >= 1):
        raise OutOfSupport("density defined on the open interval (0, 1)")
    a = dist.a_eff
    nt = 0.5 * dist.num_dof
    mt = 0.5 * dist.den_dof
    log_norm = mt * np.log(a) + gammaln(nt + mt) - gammaln(nt) - gammaln(mt)
    log_pdf = log_norm + (mt - 1.0) * np.log(x) + (nt - 1.0) * np.log1p(-x) - (nt + mt) * np.log1p((a - 1.0) * x)
    out = np.exp(log_pdf)
    return float(out) if out.ndim == 0 else out


def loss_cdf(dist: LossDistribution, x) -> float:
    """cdf by adaptive quadrature of :func:`loss_pdf` (tolerance 1e-9)."""
    x = float(x)
    if x < 0 or x > 1:
        raise OutOfSupport("loss lives on [0, 1]")
    if x == 0.0:
        return 0.0
    if x == 1.0:
        return 1.0
    value, _ = integrate.quad(lambda t: loss_pdf(dist, t), 0.0, x,
                              epsabs=_QUAD_TOL, epsrel=_QUAD_TOL, limit=200)
    return min(max(value, 0.0), 1.0)


def loss_quantile(dist: LossDistribution, prob) -> float:
    """Quantile by bisection on :func:`loss_cdf` to 1e-9."""
    prob = float(prob)
    if not 0.0 < prob < 1.0:
        raise OutOfSupport("probability must lie in (0, 1)")
    lo, hi = 0.0, 1.0
    while hi - lo > _QUANTILE_TOL:
        mid = 0.5 * (lo + hi)
        if loss_cdf(dist, mid) < prob:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def loss_mean(dist: LossDistribution) -> float:
    """Mean of the loss by quadrature."""
    value, _ = integrate.quad(lambda t: t * loss_pdf(dist, t), 0.0, 1.0,
                              epsabs=_QUAD_TOL, epsrel=_QUAD_TOL, limit=200)
    return value


def assemble_loss(fit, omega_2_1, n_training, n_elements, kind, *, gamma=None, soi_power=None) -> LossDistribution:
    """Build a LossDistribution from a fit (or exact-case parameters).

    * fitted_ger: fit is a ScaledChi2Fit for the numerator form; the loss
      uses a_eff = a / omega_2_1 and the exact denominator dof 2(K-N+2).
    * fitted_general: fit is a ScaledFFit of Q (V already embedded);
      a_eff = a / omega_2_1.
    * exact_beta: the no-mismatch parameters (1, 2(N-1), 2(K-N+2)).
    * exact_mpdr: a_eff = 1 + soi_power/gamma with soi_power the linear
      product P * v^H sigma^-1 v.
    """
    p = 2.0 * (n_training - n_elements + 2)
    if kind == "fitted_ger":
        if not isinstance(fit, ScaledChi2Fit):
            raise TypeError("fitted_ger expects a ScaledChi2Fit")
        return LossDistribution(a_eff=fit.a / omega_2_1, num_dof=fit.dof, den_dof=p, kind=kind)
    if kind == "fitted_general":
        if not isinstance(fit, ScaledFFit):
            raise TypeError("fitted_general expects a ScaledFFit")
        return LossDistribution(a_eff=fit.a / omega_2_1, num_dof=fit.num_dof, den_dof=fit.den_dof, kind=kind)
    if kind == "exact_beta":
        return LossDistribution(a_eff=1.0, num_dof=2.0 * (n_elements - 1), den_dof=p, kind=kind)
    if kind == "exact_mpdr":
        if gamma is None or soi_power is None:
            raise ValueError("exact_mpdr needs gamma and soi_power")
        return LossDistribution(a_eff=1.0 + soi_power / gamma, num_dof=2.0 * (n_elements - 1), den_dof=p, kind=kind)
    raise ValueError(f"unknown kind {kind!r}")


def exact_surprise_distribution(q_power, n_training, n_elements) -> LossDistribution:
    """Loss under a surprise interferer of training-whitened power q_power.

    The exact representation is
    [1 + (chi2(2(N-2)) + (1+q_power) chi2(2)) / chi2(2(K-N+2))]^-1; the
    returned distribution stores that two-eigenvalue compound (for exact
    sampling) together with its scaled-F fit, which is what the pdf/cdf
    evaluators use.
    """
    if q_power < 0:
        raise NegativePower("q_power must be >= 0")
    if n_elements < 2:
        raise ValueError("need at least 2 elements")
    lam = np.concatenate([[1.0 + q_power], np.ones(n_elements - 2)])
    spec = QuadraticFormSpec(
        lam=lam,
        h=np.full(lam.size, 2.0),
        delta=np.zeros(lam.size),
        p=2.0 * (n_training - n_elements + 2),
        scale=1.0,
    )
    fit = scaled_f_fit(cumulants_q(spec))
    return LossDistribution(a_eff=fit.a, num_dof=fit.num_dof, den_dof=fit.den_dof,
                            kind="exact_surprise", compound=spec)


# -- shifted-fit loss representation (no closed-form pdf) --------------


def _unit_gauss_legendre(n):
    nodes, weights = np.polynomial.legendre.leggauss(n)
    return 0.5 * (nodes + 1.0), 0.5 * weights


@dataclass(frozen=True)
class PearsonLossDistribution:
    """Loss representation [1 + (a1 chi2(dof) + a2) / (lam * chi2(p))]^-1.

    The shift a2 blocks a closed-form density, so cdf/pdf are computed by
    Gauss-Legendre quadrature over the denominator variable; ``sample``
    draws from the representation directly.
    """

    a1: float
    dof: float
    a2: float
    lam: float
    den_dof: float

    def _den_nodes(self):
        u, w = _unit_gauss_legendre(_PEARSON_NODES)
        return 2.0 * gammaincinv(0.5 * self.den_dof, u), w

    def cdf(self, x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if np.any(x < 0) or np.any(x > 1):
            raise OutOfSupport("loss lives on [0, 1]")
        v, w = self._den_nodes()
        out = np.empty(x.size)
        half_dof = 0.5 * self.dof
        chunk = 16384
        for start in range(0, x.size, chunk):
            xs = x[start : start + chunk]
            with np.errstate(divide="ignore"):
                r = (1.0 - xs) / xs
            thr = (self.lam * r[:, None] * v[None, :] - self.a2) / self.a1
            surv = np.where(thr <= 0, 1.0, gammaincc(half_dof, np.maximum(thr, 0.0) / 2.0))
            out[start : start + chunk] = surv @ w
        out[x == 0.0] = 0.0
        return out if out.size > 1 else float(out[0])

    def pdf(self, x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if np.any(x <= 0) or np.any(x >= 1):
            raise OutOfSupport("density defined on the open interval (0, 1)")
        v, w = self._den_nodes()
        half_dof = 0.5 * self.dof
        log_norm = -gammaln(half_dof) - half_dof * np.log(2.0)
        out = np.empty(x.size)
        chunk = 16384
        for start in range(0, x.size, chunk):
            xs = x[start : start + chunk]
            r = (1.0 - xs) / xs
            thr = (self.lam * r[:, None] * v[None, :] - self.a2) / self.a1
            with np.errstate(divide="ignore", invalid="ignore"):
                log_f = log_norm + (half_dof - 1.0) * np.log(thr) - 0.5 * thr
            f = np.where(thr > 0, np.exp(log_f), 0.0)
            jac = self.lam * v[None, :] / (self.a1 * xs[:, None] ** 2)
            out[start : start + chunk] = (f * jac) @ w
        return out if out.size > 1 else float(out[0])

    def sample(self, trials, rng):
        from .sampling import sample_chi2

        num = self.a1 * sample_chi2(self.dof, rng, trials) + self.a2
        den = self.lam * sample_chi2(self.den_dof, rng, trials)
        return 1.0 / (1.0 + num / den)


def assemble_pearson_loss(fit: PearsonFit, omega_2_1, n_training, n_elements) -> PearsonLossDistribution:
    """Shifted-fit loss representation for a GER pair (omega_2_1 = lambda)."""
    return PearsonLossDistribution(a1=fit.a1, dof=fit.dof, a2=fit.a2, lam=float(omega_2_1),
                                   den_dof=2.0 * (n_training - n_elements + 2))

"""Generation distributions.

Every distribution exposes the functionals the auction consumes: density,
CDF, inverse CDF, partial mean ``G(z) = int_0^z w f(w) dw`` and the
composition ``G(F^{-1}(rho))``. All methods are vectorised over numpy
arrays and return Python floats for scalar input.
"""

from __future__ import annotations

import abc
import csv
import math
from pathlib import Path

import numpy as np
from scipy import interpolate, special

__all__ = [
    "RHO_MAX",
    "DomainError",
    "GenerationDistribution",
    "WeibullDistribution",
    "TabulatedDistribution",
    "lower_gamma_3_2",
    "weibull_inv_cdf",
    "weibull_partial_mean",
    "g_of_inv_cdf",
    "sample",
    "parse_distribution",
]

# Operations needing F^{-1} reject probabilities at or above this value.
RHO_MAX = 1.0 - 1e-12


class DomainError(ValueError):
    """Argument outside the domain of a distribution functional."""


def _scalar_or_array(values, like):
    if np.ndim(like) == 0:
        return float(values)
    return values


def _check_probability(rho) -> np.ndarray:
    rho = np.asarray(rho, dtype=float)
    if np.any(~np.isfinite(rho)) or np.any(rho < 0.0) or np.any(rho >= RHO_MAX):
        raise DomainError(
            f"probability must lie in [0, 1 - 1e-12), got {rho if rho.ndim == 0 else 'array'}"
        )
    return rho


def lower_gamma_3_2(x):
    """Lower incomplete gamma function ``gamma(3/2, x)`` (not regularised).

    Uses ``(sqrt(pi)/2) erf(sqrt(x)) - sqrt(x) exp(-x)``; below ``x = 0.5`` the
    identity cancels badly, so the power series is summed instead.
    """
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise DomainError("gamma(3/2, x) requires x >= 0")
    out = np.empty_like(x)
    small = x < 0.5
    xs = x[small]
    # gamma(a, x) = x^a e^-x sum_n x^n / (a (a+1) ... (a+n))
    term = np.full_like(xs, 1.0 / 1.5)
    total = term.copy()
    for n in range(1, 40):
        term = term * xs / (1.5 + n)
        total += term
    out[small] = xs**1.5 * np.exp(-xs) * total
    xl = x[~small]
    r = np.sqrt(xl)
    with np.errstate(invalid="ignore"):
        tail = np.where(np.isinf(xl), 0.0, r * np.exp(-xl))
    out[~small] = 0.5 * math.sqrt(math.pi) * special.erf(r) - tail
    return _scalar_or_array(out, x)


class GenerationDistribution(abc.ABC):
    """Law of the realised generation ``w`` (kW), supported on ``[0, inf)``."""

    @abc.abstractmethod
    def pdf(self, w):
        """Density per kW; zero for ``w <= 0``."""

    @abc.abstractmethod
    def cdf(self, w):
        """``P(w(omega) <= w)``."""

    @abc.abstractmethod
    def _ppf(self, rho: np.ndarray) -> np.ndarray:
        """Unchecked inverse CDF on ``[0, 1)``."""

    @abc.abstractmethod
    def partial_mean(self, z):
        """``G(z) = int_0^z w f(w) dw`` in kW."""

    @abc.abstractmethod
    def mean(self) -> float:
        """Expected generation in kW."""

    def inv_cdf(self, rho):
        """Inverse CDF; raises :class:`DomainError` outside ``[0, RHO_MAX)``."""
        r = _check_probability(rho)
        return _scalar_or_array(self._ppf(np.atleast_1d(r)).reshape(r.shape), rho)

    def g_of_inv_cdf(self, rho):
        """``G(F^{-1}(rho)) = int_0^rho F^{-1}(u) du``."""
        r = _check_probability(rho)
        z = self._ppf(np.atleast_1d(r)).reshape(r.shape)
        return _scalar_or_array(np.asarray(self.partial_mean(z)), rho)

    def sample(self, rng: np.random.Generator, size=None):
        """Inverse-transform draws; deterministic given the generator state."""
        u = rng.random(size)
        return _scalar_or_array(self._ppf(np.atleast_1d(u)).reshape(np.shape(u)), u)


class WeibullDistribution(GenerationDistribution):
    """Weibull law with shape ``k`` and scale ``lam`` (kW).

    ``G`` has the closed form ``lam * gamma(1 + 1/k, (z/lam)^k)``; for ``k = 2``
    the ``gamma(3/2, .)`` branch is evaluated through :func:`lower_gamma_3_2`.
    """

    def __init__(self, k: float = 2.0, lam: float = 1509.0):
        if not (math.isfinite(k) and k > 0):
            raise ValueError(f"Weibull shape must be positive, got {k}")
        if not (math.isfinite(lam) and lam > 0):
            raise ValueError(f"Weibull scale must be positive, got {lam}")
        self.k = float(k)
        self.lam = float(lam)

    def __repr__(self) -> str:
        return f"WeibullDistribution(k={self.k:g}, lam={self.lam:g})"

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, WeibullDistribution)
            and self.k == other.k
            and self.lam == other.lam
        )

    def __hash__(self) -> int:
        return hash(("weibull", self.k, self.lam))

    def pdf(self, w):
        w_ = np.asarray(w, dtype=float)
        t = np.where(w_ > 0, w_, 1.0) / self.lam
        val = (self.k / self.lam) * t ** (self.k - 1) * np.exp(-(t**self.k))
        return _scalar_or_array(np.where(w_ > 0, val, 0.0), w)

    def cdf(self, w):
        w_ = np.asarray(w, dtype=float)
        t = np.where(w_ > 0, w_, 0.0) / self.lam
        return _scalar_or_array(-np.expm1(-(t**self.k)), w)

    def _ppf(self, rho):
        return self.lam * (-np.log1p(-rho)) ** (1.0 / self.k)

    def _lower_gamma(self, x):
        if self.k == 2.0:
            return np.asarray(lower_gamma_3_2(x))
        a = 1.0 + 1.0 / self.k
        return special.gammainc(a, x) * special.gamma(a)

    def partial_mean(self, z):
        z_ = np.asarray(z, dtype=float)
        if np.any(z_ < 0):
            raise DomainError("partial mean requires z >= 0")
        # inf maps to the full mean through gammainc(a, inf) == 1
        x = (z_ / self.lam) ** self.k
        return _scalar_or_array(self.lam * self._lower_gamma(x), z)

    def g_of_inv_cdf(self, rho):
        r = _check_probability(rho)
        return _scalar_or_array(self.lam * self._lower_gamma(-np.log1p(-r)), rho)

    def mean(self) -> float:
        return self.lam * math.gamma(1.0 + 1.0 / self.k)


class TabulatedDistribution(GenerationDistribution):
    """Distribution defined by a tabulated CDF on a kW grid.

    Parameters
    ----------
    w : array_like
        Strictly increasing grid starting at 0 kW.
    cdf : array_like
        Strictly increasing CDF values with ``cdf[0] == 0`` and
        ``cdf[-1] <= 1``.
    interpolation : {"pchip", "linear"}
        Monotone interpolant used between grid points.
    rtol : float
        Bisection tolerance for the inverse CDF, relative to the grid span.

    Notes
    -----
    When ``cdf[-1] < 1`` the remaining mass sits in an exponential tail whose
    rate matches the slope of the last grid segment, so ``F`` stays
    continuous and strictly increasing on ``(0, inf)``.
    """

    def __init__(self, w, cdf, interpolation: str = "pchip", rtol: float = 1e-13):
        w = np.asarray(w, dtype=float)
        F = np.asarray(cdf, dtype=float)
        if w.ndim != 1 or w.shape != F.shape or w.size < 2:
            raise ValueError("tabulated grid needs two equal-length 1-D arrays of size >= 2")
        if not (np.all(np.isfinite(w)) and np.all(np.isfinite(F))):
            raise ValueError("tabulated values must be finite")
        if w[0] != 0.0 or F[0] != 0.0:
            raise ValueError("tabulated grid must start at w=0 with CDF 0")
        if np.any(np.diff(w) <= 0):
            raise ValueError("tabulated w grid must be strictly increasing")
        if np.any(np.diff(F) <= 0):
            raise ValueError("tabulated CDF values must be strictly increasing")
        if F[-1] > 1.0:
            raise ValueError("tabulated CDF values must not exceed 1")
        if interpolation == "pchip":
            spline = interpolate.PchipInterpolator(w, F, extrapolate=False)
        elif interpolation == "linear":
            spline = interpolate.make_interp_spline(w, F, k=1)
        else:
            raise ValueError(f"unknown interpolation rule {interpolation!r}")
        self.w = w
        self.F = F
        self.interpolation = interpolation
        self.rtol = float(rtol)
        self._F = spline
        self._f = spline.derivative()
        self._int_F = spline.antiderivative()
        self._w_end = float(w[-1])
        self._q = 1.0 - float(F[-1])  # tail mass
        self._rate = float((F[-1] - F[-2]) / (w[-1] - w[-2])) / self._q if self._q > 0 else 0.0
        self._G_end = self._w_end * float(F[-1]) - float(self._int_F(self._w_end))

    @classmethod
    def from_csv(cls, path, interpolation: str = "pchip") -> "TabulatedDistribution":
        """Read a two-column ``w_kw,cdf`` CSV with a header row."""
        path = Path(path)
        with path.open(newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header is None or [h.strip() for h in header[:2]] != ["w_kw", "cdf"]:
                raise ValueError(f"{path}: expected header 'w_kw,cdf'")
            rows = [(float(r[0]), float(r[1])) for r in reader if r]
        w, F = zip(*rows) if rows else ((), ())
        return cls(w, F, interpolation=interpolation)

    def __repr__(self) -> str:
        return (
            f"TabulatedDistribution(n={self.w.size}, w_max={self._w_end:g}, "
            f"interpolation={self.interpolation!r})"
        )

    def _inner(self, w):
        return np.clip(w, 0.0, self._w_end)

    def cdf(self, w):
        w_ = np.asarray(w, dtype=float)
        inner = np.asarray(self._F(self._inner(w_)), dtype=float)
        out = np.where(w_ <= 0, 0.0, inner)
        if self._q > 0:
            tail = 1.0 - self._q * np.exp(-self._rate * np.maximum(w_ - self._w_end, 0.0))
            out = np.where(w_ > self._w_end, tail, out)
        return _scalar_or_array(np.clip(out, 0.0, 1.0), w)

    def pdf(self, w):
        w_ = np.asarray(w, dtype=float)
        inner = np.maximum(np.asarray(self._f(self._inner(w_)), dtype=float), 0.0)
        out = np.where((w_ <= 0) | (w_ > self._w_end), 0.0, inner)
        if self._q > 0:
            tail = self._q * self._rate * np.exp(-self._rate * np.maximum(w_ - self._w_end, 0.0))
            out = np.where(w_ > self._w_end, tail, out)
        return _scalar_or_array(out, w)

    def _ppf(self, rho):
        rho = np.asarray(rho, dtype=float)
        out = np.empty_like(rho)
        in_tail = rho >= self.F[-1]
        if np.any(in_tail):
            out[in_tail] = self._w_end + np.log(self._q / (1.0 - rho[in_tail])) / self._rate
        r = rho[~in_tail]
        idx = np.clip(np.searchsorted(self.F, r, side="right") - 1, 0, self.w.size - 2)
        lo = self.w[idx].copy()
        hi = self.w[idx + 1].copy()
        tol = self.rtol * self._w_end
        # bisection on the monotone interpolant within each bracketing segment
        for _ in range(200):
            if not np.any(hi - lo > tol):
                break
            mid = 0.5 * (lo + hi)
            below = np.asarray(self._F(mid), dtype=float) <= r
            lo = np.where(below, mid, lo)
            hi = np.where(below, hi, mid)
        out[~in_tail] = np.where(r == 0.0, 0.0, 0.5 * (lo + hi))
        return out

    def partial_mean(self, z):
        z_ = np.asarray(z, dtype=float)
        if np.any(z_ < 0):
            raise DomainError("partial mean requires z >= 0")
        zi = self._inner(z_)
        # int_0^z w f(w) dw = z F(z) - int_0^z F(w) dw
        out = zi * np.asarray(self._F(zi), dtype=float) - np.asarray(self._int_F(zi), dtype=float)
        if self._q > 0:
            t = np.maximum(z_ - self._w_end, 0.0)
            with np.errstate(invalid="ignore"):
                e = np.where(np.isinf(t), 0.0, np.exp(-self._rate * t))
                te = np.where(np.isinf(t), 0.0, t * e)
            tail = self._q * (self._w_end * (1.0 - e) + (1.0 - e - self._rate * te) / self._rate)
            out = out + np.where(z_ > self._w_end, tail, 0.0)
        return _scalar_or_array(out, z)

    def mean(self) -> float:
        tail = self._q * (self._w_end + 1.0 / self._rate) if self._q > 0 else 0.0
        return self._G_end + tail


def weibull_inv_cdf(k: float, lam: float, rho):
    """``lam * (ln(1/(1-rho)))^(1/k)``; raises :class:`DomainError` for rho outside [0, 1)."""
    return WeibullDistribution(k, lam).inv_cdf(rho)


def weibull_partial_mean(k: float, lam: float, z):
    return WeibullDistribution(k, lam).partial_mean(z)


def g_of_inv_cdf(dist: GenerationDistribution, rho):
    return dist.g_of_inv_cdf(rho)


def sample(dist: GenerationDistribution, rng: np.random.Generator, size=None):
    return dist.sample(rng, size)


def parse_distribution(text: str) -> GenerationDistribution:
    """Build a distribution from ``weibull:k=<f>,lambda=<f>`` or ``table:<path>``."""
    kind, sep, rest = text.partition(":")
    kind = kind.strip().lower()
    if not sep:
        raise ValueError(f"malformed distribution spec {text!r}")
    if kind == "weibull":
        params = {}
        for item in rest.split(","):
            key, eq, val = item.partition("=")
            if not eq:
                raise ValueError(f"malformed weibull parameter {item!r}")
            params[key.strip().lower()] = float(val)
        unknown = set(params) - {"k", "lambda"}
        if unknown or set(params) != {"k", "lambda"}:
            raise ValueError(f"weibull spec needs exactly k and lambda, got {sorted(params)}")
        return WeibullDistribution(params["k"], params["lambda"])
    if kind == "table":
        return TabulatedDistribution.from_csv(rest)
    raise ValueError(f"unknown distribution kind {kind!r}")

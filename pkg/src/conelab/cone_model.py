"""Exact-cone and Euclidean model kernels built from link eigenmodes.

Separation of variables on a metric cone C(Y) over a closed link Y turns the
shifted Laplacian into a family of modified Bessel operators indexed by the
link eigenvalues lambda_j, with orders

    nu_j = sqrt(((n-2)/2)^2 + lambda_j).

This module produces the mode table for the standard links (round sphere,
scaled round sphere, explicit spectra), the angular projection kernels on the
round sphere, the low-energy boundary-face model kernels assembled from
I_nu K_nu products, and the free-resolvent mode sum used to validate them
against closed forms.

Kernel conventions: values are reported as coefficients of b-half-densities
in the radial slots (the "b" convention); `kernel_convention_factor` converts
to plain function kernels, which differ by (r r')^{n/2}.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from scipy.special import eval_gegenbauer

from .errors import CapabilityError, DomainError, NumericError, ProximityError
from .specfun import bessel_i, bessel_k, log_bessel_i, log_bessel_k

KERNEL_CONVENTIONS = ("fn", "b")


def kernel_convention_factor(conv_from: str, conv_to: str, r: float, r_p: float,
                             n: int) -> float:
    """Multiplier converting a kernel value between density conventions.

    The "b" coefficient equals the function kernel times (r r')^{n/2}.
    """
    for c in (conv_from, conv_to):
        if c not in KERNEL_CONVENTIONS:
            raise DomainError(f"unknown kernel convention {c!r}")
    if conv_from == conv_to:
        return 1.0
    factor = (r * r_p) ** (n / 2.0)
    return factor if (conv_from, conv_to) == ("fn", "b") else 1.0 / factor


def sphere_volume(n: int) -> float:
    """Volume of the unit round S^{n-1}."""
    return 2.0 * math.pi ** (n / 2.0) / math.gamma(n / 2.0)


def sphere_multiplicity(j: int, n: int) -> int:
    """Dimension of the degree-j spherical-harmonic space on S^{n-1}.

    (2j+n-2)/(j+n-2) * binom(j+n-2, j), always an integer.
    """
    if j == 0:
        return 1
    num = (2 * j + n - 2) * math.comb(j + n - 2, j)
    den = j + n - 2
    assert num % den == 0
    return num // den


@dataclass(frozen=True)
class Mode:
    """One link eigenvalue with its Bessel order and eigenspace dimension."""

    j: int
    lam: float
    nu: float
    multiplicity: int
    n: int
    kind: str = "sphere"  # "sphere": degree-j harmonics; "explicit": opaque link

    def angular_weight(self, costheta: float) -> float:
        """Projection-kernel value for this mode's eigenspace.

        Sphere links use the degree-j projection kernel; explicit links have
        no angular model, so the weight is the eigenspace trace (the
        multiplicity), giving the radial-trace kernel convention.
        """
        if self.kind == "sphere":
            return projection_kernel(self.n, self.j, costheta)
        return float(self.multiplicity)


@dataclass(frozen=True)
class ConeGeometry:
    """Cone dimension plus the link: round/scaled sphere or explicit spectrum."""

    n: int
    link: str = "round_sphere"
    c: float = 1.0
    spectrum: tuple[tuple[float, int], ...] = ()

    def __post_init__(self):
        if self.n < 3:
            raise DomainError(f"cone dimension n >= 3 required, got {self.n}")
        if self.link not in ("round_sphere", "scaled_sphere", "explicit_spectrum"):
            raise DomainError(f"unknown link type {self.link!r}")
        if self.link == "scaled_sphere" and not self.c > 0:
            raise DomainError("scaled_sphere needs c > 0")
        if self.link == "explicit_spectrum":
            if not self.spectrum:
                raise DomainError("explicit_spectrum needs a nonempty spectrum")
            for lam, mult in self.spectrum:
                if lam < 0 or mult < 1:
                    raise DomainError("explicit eigenvalues need lam >= 0, mult >= 1")


def mode_table(geom: ConeGeometry, j_max: int) -> list[Mode]:
    """Modes 0..j_max of the link, sorted by Bessel order nu."""
    if j_max < 0:
        raise DomainError("j_max must be >= 0")
    half = (geom.n - 2) / 2.0
    modes = []
    if geom.link in ("round_sphere", "scaled_sphere"):
        scale = 1.0 if geom.link == "round_sphere" else geom.c ** 2
        for j in range(j_max + 1):
            lam = j * (j + geom.n - 2) / scale
            modes.append(Mode(j=j, lam=lam, nu=math.hypot(half, math.sqrt(lam)),
                              multiplicity=sphere_multiplicity(j, geom.n),
                              n=geom.n, kind="sphere"))
    else:
        if j_max >= len(geom.spectrum):
            raise DomainError(
                f"explicit spectrum has {len(geom.spectrum)} entries, "
                f"j_max={j_max} requested")
        pairs = sorted(geom.spectrum)[:j_max + 1]
        for j, (lam, mult) in enumerate(pairs):
            modes.append(Mode(j=j, lam=lam, nu=math.hypot(half, math.sqrt(lam)),
                              multiplicity=mult, n=geom.n, kind="explicit"))
    return sorted(modes, key=lambda m: m.nu)


def projection_kernel(n: int, j: int, costheta: float,
                      link: str = "round_sphere") -> float:
    """Kernel of the projection onto degree-j spherical harmonics on S^{n-1}.

    Gegenbauer addition theorem: Pi_j(y, y') depends only on cos(theta) and
    equals (2j+n-2)/((n-2) Vol(S^{n-1})) C_j^{(n-2)/2}(cos theta); the
    normalization is fixed by the reproducing property (tested) and gives
    Pi_j(y, y) = dim E_j / Vol(S^{n-1}). Metric scaling of the link leaves
    the eigenspaces alone, so scaled spheres share the round kernel; explicit
    spectra carry no angular model.
    """
    if link == "explicit_spectrum":
        raise CapabilityError(
            "explicit-spectrum links supply their own projection kernels")
    if link not in ("round_sphere", "scaled_sphere"):
        raise DomainError(f"unknown link type {link!r}")
    if n < 3:
        raise DomainError("projection_kernel needs n >= 3")
    if not -1.0 <= costheta <= 1.0:
        raise DomainError(f"costheta must lie in [-1, 1], got {costheta}")
    if j < 0:
        raise DomainError("mode index j must be >= 0")
    coeff = (2 * j + n - 2) / ((n - 2) * sphere_volume(n))
    return coeff * float(eval_gegenbauer(j, (n - 2) / 2.0, costheta))


def _angular_sup(mode: Mode) -> float:
    """Upper bound for |angular weight| over angles (attained at theta = 0)."""
    if mode.kind == "sphere":
        return mode.multiplicity / sphere_volume(mode.n)
    return float(mode.multiplicity)


def _ik_product_bound(nu: float, x: float, y: float) -> float:
    """Upper bound for I_nu(x) K_nu(y), valid for nu > max(1, x).

    Combines I_nu(x) <= (x/2)^nu/Gamma(nu+1) e^{x^2/(4(nu+1))} with
    K_nu(y) <= Gamma(nu)/2 (y/2)^{-nu} e^{y^2/(4(nu-1))}.
    """
    corr = x * x / (4 * (nu + 1)) + y * y / (4 * (nu - 1))
    return 0.5 / nu * (x / y) ** nu * math.exp(corr)


def _tail_bound(modes: list[Mode], ratio: float, x_small: float, x_large: float,
                tol: float) -> float:
    """Geometric bound for the dropped tail of a mode sum.

    `ratio` < 1 is the per-unit-of-nu decay factor (x_small/x_large for
    Bessel products, min(s,1/s) for the front-face kernel). Raises when the
    bound cannot be certified below `tol`.
    """
    last = modes[-1]
    if ratio >= 1.0:
        raise ProximityError("mode sum evaluated on the kernel diagonal")
    # nu spacing of the link; explicit spectra may be irregular, so use the
    # smallest gap among the last few modes as a conservative step
    if len(modes) >= 2:
        gaps = [modes[i + 1].nu - modes[i].nu for i in range(len(modes) - 1)]
        step = max(min(gaps[-3:]), 1e-6)
    else:
        step = 1.0
    nu1 = last.nu + step
    if nu1 <= max(1.0, x_small) + 0.5:
        raise NumericError(
            "mode list too short to certify the truncation tail", achieved=math.inf)
    first_term = _angular_sup(last) * 2.0 * _ik_product_bound(nu1, x_small, x_large)
    # angular dimensions grow polynomially; fold that into a comparison series
    total = 0.0
    grow = 1.0
    q = ratio ** step
    term = first_term
    for i in range(1, 4000):
        total += term
        grow = ((nu1 + i * step) / (nu1 + (i - 1) * step)) ** (last.n - 2)
        term *= q * grow
        if term < 1e-3 * tol and grow * q < 0.9:
            total += term / (1 - q * grow)
            break
    else:
        raise NumericError("truncation tail bound did not converge",
                           achieved=total)
    if total > tol:
        raise NumericError(
            f"mode-sum tail bound {total:.3e} exceeds tolerance {tol:.3e}; "
            "supply more modes or increase the separation", achieved=total)
    return total


def bf0_kernel(modes: list[Mode], kappa: float, kappa_p: float, costheta: float,
               resonance: tuple[float, float] | None = None,
               tol: float | None = 1e-10) -> float:
    """Low-energy boundary model kernel Q(kappa, kappa', y, y').

    Sum over link modes of Pi_j(cos theta) I_{nu_j}(kappa_<) K_{nu_j}(kappa_>)
    as a b-half-density coefficient, symmetric under swapping primed and
    unprimed variables. `resonance = (nu_r, c_coeff)` appends the rank-one
    threshold-resonance correction c K_{nu_r}(kappa) K_{nu_r}(kappa'); its
    angular factor is the projection onto the resonant eigenspace when a mode
    with matching nu is present, else 1 (profile absorbed into c_coeff).

    `tol=None` skips tail certification and returns the bare partial sum
    (needed on the diagonal kappa = kappa', where no tail bound exists).
    """
    if not modes:
        raise DomainError("empty mode list")
    if kappa <= 0 or kappa_p <= 0:
        raise DomainError("kappa and kappa' must be positive")
    lo, hi = min(kappa, kappa_p), max(kappa, kappa_p)
    total = 0.0
    for m in modes:
        total += m.angular_weight(costheta) * bessel_i(m.nu, lo) * bessel_k(m.nu, hi)
    if tol is not None:
        _tail_bound(modes, lo / hi, lo, hi, tol)
    if resonance is not None:
        nu_r, c_coeff = resonance
        weight = 1.0
        for m in modes:
            if abs(m.nu - nu_r) < 1e-9:
                weight = m.angular_weight(costheta)
                break
        total += c_coeff * weight * bessel_k(nu_r, kappa) * bessel_k(nu_r, kappa_p)
    return total


def ff_kernel(modes: list[Mode], s: float, costheta: float,
              tol: float | None = 1e-10) -> float:
    """Front-face normal-operator kernel: sum of Pi_j e^{-nu_j |log s|}/(2 nu_j).

    Symmetric under s <-> 1/s; decays like s^{-nu_0} as s -> infinity.
    `tol=None` skips tail certification (the sum diverges logarithmically at
    s = 1, so only partial sums are meaningful there).
    """
    if not modes:
        raise DomainError("empty mode list")
    if s <= 0:
        raise DomainError("s must be positive")
    t = abs(math.log(s))
    total = 0.0
    for m in modes:
        total += m.angular_weight(costheta) * math.exp(-m.nu * t) / (2 * m.nu)
    if tol is None:
        return total
    if t <= 0:
        raise ProximityError("front-face kernel evaluated at s = 1 needs the "
                             "full (divergent) mode sum")
    # tail: terms are bounded by angular_sup * e^{-nu t}/(2 nu), same geometric
    # structure as the Bessel products with ratio e^{-t}
    last = modes[-1]
    gaps = [modes[i + 1].nu - modes[i].nu for i in range(len(modes) - 1)]
    step = max(min(gaps[-3:]), 1e-6) if gaps else 1.0
    nu1 = last.nu + step
    term = _angular_sup(last) * math.exp(-nu1 * t) / (2 * nu1)
    total_tail = 0.0
    q = math.exp(-step * t)
    for i in range(1, 4000):
        total_tail += term
        grow = ((nu1 + i * step) / (nu1 + (i - 1) * step)) ** (last.n - 2)
        term *= q * grow
        if term < 1e-3 * tol and grow * q < 0.9:
            total_tail += term / (1 - q * grow)
            break
    else:
        raise NumericError("front-face tail bound did not converge",
                           achieved=total_tail)
    if total_tail > tol:
        raise NumericError(
            f"front-face tail bound {total_tail:.3e} exceeds {tol:.3e}",
            achieved=total_tail)
    return total


def free_resolvent_sum(n: int, k: float, r: float, r_p: float, costheta: float,
                       j_max: int = 400, min_separation: float = 0.02,
                       rtol: float = 1e-9) -> float:
    """Mode-sum reconstruction of the function kernel of (Delta + k^2)^{-1}.

    Sum over spherical harmonics of
        (r r')^{-(n-2)/2} I_{nu_j}(k r_<) K_{nu_j}(k r_>) Pi_j(cos theta),
    which for the flat metric reproduces the closed-form free Green function.
    The sum stops once the last few terms certify a relative tail below rtol;
    j_max caps the work. Radial ratios near 1 converge only through angular
    oscillation and are rejected rather than summed inaccurately.
    """
    if n < 3 or k <= 0 or r <= 0 or r_p <= 0:
        raise DomainError("need n >= 3 and positive k, r, r'")
    if not -1.0 <= costheta <= 1.0:
        raise DomainError("costheta must lie in [-1, 1]")
    dist2 = r * r + r_p * r_p - 2 * r * r_p * costheta
    if dist2 <= (min_separation * max(r, r_p)) ** 2:
        raise ProximityError(
            f"separation {math.sqrt(max(dist2, 0)):.3e} below the configured "
            f"minimum; the mode sum diverges at the diagonal")
    lo, hi = k * min(r, r_p), k * max(r, r_p)
    prefactor = (r * r_p) ** (-(n - 2) / 2.0)
    total = 0.0
    recent: list[float] = []
    for j in range(j_max + 1):
        nu = j + (n - 2) / 2.0
        # log-space product guards against overflow/underflow at extreme k r
        log_prod = log_bessel_i(nu, lo) + log_bessel_k(nu, hi)
        radial = math.exp(log_prod) if log_prod > -745.0 else 0.0
        term = projection_kernel(n, j, costheta) * radial
        total += term
        recent.append(abs(term))
        if j >= 8 and max(recent[-5:]) < 0.02 * rtol * abs(total):
            return prefactor * total
    tail = max(recent[-5:]) / max(abs(total), 1e-300)
    raise NumericError(
        f"mode sum not converged at j_max={j_max}: relative tail ~{tail:.2e}; "
        "radii too close or j_max too small", achieved=tail)

"""Numerical kernels, pure numpy implementation.

Mirrors the compiled extension ``trapent._core_cy``; :mod:`trapent.backend`
picks whichever is available at import time.  Everything here is written
against plain numpy so the package still works (more slowly) when the
extension has not been built.

The confluent hypergeometric function of the second kind with fixed second
parameter 3/2 is evaluated by one of four routes, chosen per point:

* terminating polynomial form when the first parameter (or itself minus 1/2)
  is a non-positive integer,
* the divergent large-argument expansion truncated at its smallest term,
* the connection formula through two regular confluent series,
* a real-line Laplace integral on a logarithmic grid (stable for first
  parameter > 1, any argument), with a downward three-term recurrence
  shifting smaller first parameters into that regime.

The last two routes exist because the first two lose precision in the
mid-argument band; every route carries an a-posteriori error estimate and
the dispatcher only accepts a value whose estimate clears 1e-10 relative.
"""

import math

import numpy as np

BACKEND_NAME = "python"

_EPS = float(np.finfo(float).eps)
_SQRT_PI = math.sqrt(math.pi)
_LN_SQRT_PI = 0.5 * math.log(math.pi)

_GL32_X, _GL32_W = np.polynomial.legendre.leggauss(32)

# dispatcher acceptance thresholds (relative error estimates)
_ASYM_TOL = 1e-11
_SERIES_TOL = 1e-10
# above this first parameter the unscaled function under/overflows in stages;
# callers switch to the Gamma(alpha)-scaled variant
SCALED_ALPHA_MIN = 1.25


# ---------------------------------------------------------------------------
# signed log-gamma


def lngamma_signed(x):
    """Return ``(ln|Gamma(x)|, sign)``; sign tracked through reflection."""
    x = float(x)
    if math.isnan(x) or math.isinf(x):
        raise ValueError(f"lngamma_signed: non-finite argument {x!r}")
    if x > 0.0:
        return math.lgamma(x), 1
    m = math.floor(x)
    if x == m:
        raise ValueError(f"lngamma_signed: pole at non-positive integer x={x:g}")
    # reflection Gamma(x) Gamma(1-x) = pi / sin(pi x); the fractional split
    # keeps sin(pi x) accurate for large negative x
    f = x - m
    mag = math.log(math.pi) - math.log(math.sin(math.pi * f)) - math.lgamma(1.0 - x)
    sign = 1 if int(m) % 2 == 0 else -1
    return mag, sign


def _inv_gamma_parts(a):
    """(ln|1/Gamma(a)| offset, sign); sign 0 at poles where 1/Gamma = 0."""
    m = math.floor(a)
    if a == m and a <= 0.0:
        return 0.0, 0
    mag, sign = lngamma_signed(a)
    return -mag, sign


# ---------------------------------------------------------------------------
# Kummer U(alpha, 3/2, x) building blocks (fixed alpha, vectorized over x)


def _terminating_count(alpha):
    """Number of terms if the large-x expansion terminates, else None."""
    for shift in (0.0, 0.5):
        v = alpha - shift
        r = round(v)
        if r <= 0 and abs(v - r) < 1e-12:
            return -r
    return None


def _u_2f0(alpha, x, n_terms):
    """Exact terminating form of the large-x expansion.

    Evaluated as x^(-alpha-n) * P(x) with P in Horner form, so no negative
    powers of x appear in intermediates (safe at tiny x).
    """
    coefs = [1.0]
    for k in range(n_terms):
        coefs.append(coefs[-1] * ((alpha + k) * (alpha - 0.5 + k)) / (-(k + 1.0)))
    p = np.full_like(x, coefs[n_terms])
    for k in range(n_terms - 1, -1, -1):
        p = p * x + coefs[k]
    return x ** (-alpha - n_terms) * p


def _u_asymptotic(alpha, x):
    """Large-x expansion truncated at the smallest term; (value, rel err est)."""
    t = np.ones_like(x)
    s = np.ones_like(x)
    peak = np.ones_like(x)
    err = np.full_like(x, np.inf)
    done = np.zeros(x.shape, dtype=bool)
    for k in range(120):
        t_next = t * ((alpha + k) * (alpha - 0.5 + k)) / (-(k + 1.0) * x)
        grew = np.abs(t_next) >= np.abs(t)
        newly = grew & ~done
        err[newly] = np.abs(t_next[newly])
        done |= newly
        t = np.where(done, 0.0, t_next)
        s = s + t
        np.maximum(peak, np.abs(s), out=peak)
        small = (~done) & (np.abs(t) <= _EPS * np.abs(s))
        err[small] = np.abs(t[small])
        done |= small
        if done.all():
            break
    err[~done] = np.abs(t[~done])
    denom = np.maximum(np.abs(s), 1e-300)
    rel = err / denom + 60.0 * _EPS * peak / denom
    return x ** (-alpha) * s, rel


def _kummer_m(a, b, x):
    """Regular confluent series with peak-term tracking; (sum, peak)."""
    c = np.ones_like(x)
    s = np.ones_like(x)
    peak = np.ones_like(x)
    for k in range(700):
        c = c * (a + k) * x / ((b + k) * (k + 1.0))
        s = s + c
        np.maximum(peak, np.abs(c), out=peak)
        np.maximum(peak, np.abs(s), out=peak)
        if k > 3 and np.all(np.abs(c) <= 0.25 * _EPS * np.abs(s)):
            break
    return s, peak


def _u_series(alpha, x):
    """Connection formula through two regular series; (value, rel err est)."""
    m1, peak1 = _kummer_m(alpha - 0.5, 0.5, x)
    m2, peak2 = _kummer_m(alpha, 1.5, x)
    lg1, s1 = _inv_gamma_parts(alpha)
    lg2, s2 = _inv_gamma_parts(alpha - 0.5)
    logx = np.log(x)
    c1 = np.exp(_LN_SQRT_PI + lg1 - 0.5 * logx) if s1 != 0 else np.zeros_like(x)
    c2 = math.exp(math.log(2.0) + _LN_SQRT_PI + lg2) if s2 != 0 else 0.0
    t1 = s1 * c1 * m1
    t2 = s2 * c2 * m2
    val = t1 - t2
    noise = _EPS * (c1 * peak1 + c2 * peak2)
    rel = noise / np.maximum(np.abs(val), 1e-300)
    return val, rel


def _u_laplace_log(alpha, x):
    """Gamma(alpha)*U via the Laplace integral on a log grid; alpha > 1.

    integrand exp(g(t)), g = (alpha-1) ln t - x t - (alpha-1/2) ln(1+t),
    integrated in y = ln t over panels wide enough for both the saddle and
    the exponential tail.
    """
    out = np.empty_like(x)
    npan = 16
    frac = np.linspace(0.0, 1.0, npan + 1)
    am1 = alpha - 1.0
    for c0 in range(0, x.shape[0], 8192):
        sl = slice(c0, min(c0 + 8192, x.shape[0]))
        xc = x[sl]
        b = 0.5 + xc
        tstar = 2.0 * am1 / (b + np.sqrt(b * b + 4.0 * xc * am1))
        kappa = am1 - (alpha - 0.5) * (tstar / (1.0 + tstar)) ** 2 + xc * tstar
        sigma = 1.0 / np.sqrt(np.maximum(kappa, 0.05))
        yc = np.log(tstar)
        half = np.maximum(9.0 * sigma, 3.0)
        ylo = yc - half
        yhi = np.maximum(yc + half, np.log(tstar + 45.0 / xc + 5.0))
        yhi = np.minimum(yhi, 700.0)
        edges = ylo[:, None] + (yhi - ylo)[:, None] * frac[None, :]
        lo = edges[:, :-1, None]
        hw = 0.5 * (edges[:, 1:, None] - edges[:, :-1, None])
        y = (lo + hw + hw * _GL32_X[None, None, :]).reshape(xc.shape[0], -1)
        w = (hw * _GL32_W[None, None, :]).reshape(xc.shape[0], -1)
        t = np.exp(y)
        g = am1 * y - xc[:, None] * t - (alpha - 0.5) * np.log1p(t)
        gmax = g.max(axis=1, keepdims=True)
        out[sl] = np.exp(gmax[:, 0]) * np.sum(np.exp(g - gmax + y) * w, axis=1)
    return out


def _u_dispatch(alpha, x):
    """Best-available U(alpha, 3/2, x) over an array; alpha fixed."""
    out = np.empty_like(x)
    todo = np.ones(x.shape, dtype=bool)

    sel = x >= 15.0
    if sel.any():
        val, rel = _u_asymptotic(alpha, x[sel])
        ok = rel <= _ASYM_TOL
        idx = np.flatnonzero(sel)[ok]
        out[idx] = val[ok]
        todo[idx] = False

    if todo.any():
        val, rel = _u_series(alpha, x[todo])
        ok = rel <= _SERIES_TOL
        idx = np.flatnonzero(todo)[ok]
        out[idx] = val[ok]
        todo[idx] = False

    if todo.any():
        xr = x[todo]
        if alpha >= SCALED_ALPHA_MIN:
            lg, _ = lngamma_signed(alpha)
            out[todo] = math.exp(-lg) * _u_laplace_log(alpha, xr)
        else:
            # shift into the Laplace-stable band, then recur downward in the
            # first parameter (the target grows in that direction: stable)
            m = int(math.ceil(2.0 - alpha))
            u_c = kummer_u_3half_array(alpha + m, xr)
            u_hi = kummer_u_3half_array(alpha + m + 1.0, xr)
            c = alpha + m
            for _ in range(m):
                u_lo = (2.0 * c - 1.5 + xr) * u_c - c * (c - 0.5) * u_hi
                u_hi = u_c
                u_c = u_lo
                c -= 1.0
            out[todo] = u_c
    return out


def kummer_u_3half_array(alpha, x, scaled=False):
    """U(alpha, 3/2, x) over an array of positive x (fixed alpha).

    With ``scaled=True`` returns Gamma(alpha)*U instead, which stays
    representable for large positive alpha where U itself underflows;
    requires alpha > 1.25.
    """
    x = np.asarray(x, dtype=float)
    flat = x.reshape(-1)
    if flat.size and not np.all(flat > 0.0):
        raise ValueError("kummer_u_3half: argument must be positive (singular limit at 0)")
    if scaled:
        if alpha <= SCALED_ALPHA_MIN:
            raise ValueError("scaled evaluation requires alpha > 1.25")
        return _u_laplace_log(alpha, flat).reshape(x.shape)
    n = _terminating_count(alpha)
    if n is not None:
        return _u_2f0(alpha, flat, n).reshape(x.shape)
    return _u_dispatch(alpha, flat).reshape(x.shape)


def kummer_u_3half(alpha, x):
    """Scalar U(alpha, 3/2, x)."""
    return float(kummer_u_3half_array(float(alpha), np.array([float(x)]))[0])


# ---------------------------------------------------------------------------
# Legendre polynomials


def legendre_all(l_max, x):
    """P_0(x) .. P_{l_max}(x) by the three-term recurrence."""
    x = float(x)
    out = np.empty(l_max + 1)
    out[0] = 1.0
    if l_max == 0:
        return out
    out[1] = x
    for l in range(2, l_max + 1):
        out[l] = ((2 * l - 1) * x * out[l - 1] - (l - 1) * out[l - 2]) / l
    return out


# ---------------------------------------------------------------------------
# channel kernels

# radial profile kinds: the pair amplitude factorizes as
#   r * Psi(r; s) = exp(-s) * G(r),   s = r_i^2 + r_j^2
# kind 0: trap eigenstate, G = coef * r * U(alpha, 3/2, r^2)
#         (coef folds the normalization; `scaled` selects Gamma-scaled U)
# kind 1..3: closed forms at infinite scattering length, G = coef * B_k(r^2)
KIND_TRAP = 0
KIND_UNITARITY_0 = 1
KIND_UNITARITY_1 = 2
KIND_UNITARITY_2 = 3


def _profile_values(kind, alpha, coef, scaled, rr):
    if kind == KIND_TRAP:
        return coef * rr * kummer_u_3half_array(alpha, rr * rr, scaled=scaled)
    x = rr * rr
    if kind == KIND_UNITARITY_0:
        return np.full_like(rr, coef)
    if kind == KIND_UNITARITY_1:
        return coef * (1.0 - 2.0 * x)
    if kind == KIND_UNITARITY_2:
        return coef * (1.0 - 4.0 * x + (4.0 / 3.0) * x * x)
    raise ValueError(f"unknown profile kind {kind}")


def pair_profile(kind, alpha, coef, scaled, r, glx, glw):
    """Per-pair quadrature data for the angular projection integrals.

    For every grid pair (i <= j) the projection integral runs over the
    relative distance on [|r_i - r_j|, r_i + r_j].  Returns ``(fw, xi)``
    with fw[p, q] = G(node) * weight * halfwidth * exp(-s) and xi[p, q]
    the Legendre argument at the node.
    """
    n = r.shape[0]
    iu, ju = np.triu_indices(n)
    ri = r[iu]
    rj = r[ju]
    npairs = ri.shape[0]
    q = glx.shape[0]
    fw = np.empty((npairs, q))
    xi = np.empty((npairs, q))
    chunk = max(1, 4_000_000 // max(q, 1))
    for c0 in range(0, npairs, chunk):
        sl = slice(c0, min(c0 + chunk, npairs))
        a = ri[sl]
        b = rj[sl]
        lo = np.abs(a - b)
        mid = 0.5 * (lo + (a + b))
        half = 0.5 * ((a + b) - lo)
        rr = mid[:, None] + half[:, None] * glx[None, :]
        s = (a * a + b * b)[:, None]
        xx = (s - rr * rr) / (2.0 * (a * b)[:, None])
        np.clip(xx, -1.0, 1.0, out=xi[sl])
        fw[sl] = _profile_values(kind, alpha, coef, scaled, rr) * np.exp(-s) * glw[None, :] * half[:, None]
    return fw, xi


def channel_kernels_from_profile(fw, xi, r, l_lo, l_hi):
    """Accumulate alpha_l matrices for l in [l_lo, l_hi] from pair data."""
    n = r.shape[0]
    iu, ju = np.triu_indices(n)
    pref = 1.0 / (2.0 * r[iu] * r[ju])
    out = np.zeros((l_hi - l_lo + 1, n, n))
    pm = np.ones_like(xi)
    pc = xi
    for l in range(l_hi + 1):
        if l == 0:
            pl = pm
        elif l == 1:
            pl = pc
        else:
            pl = ((2 * l - 1) * xi * pc - (l - 1) * pm) / l
            pm = pc
            pc = pl
        if l >= l_lo:
            vals = (2 * l + 1) * pref * np.sum(fw * pl, axis=1)
            out[l - l_lo][iu, ju] = vals
            out[l - l_lo][ju, iu] = vals
    return out


def build_channel_kernels(kind, alpha, coef, scaled, r, l_lo, l_hi, glx, glw):
    """alpha_l(r_i, r_j) matrices for l = l_lo .. l_hi (shape (nl, N, N))."""
    fw, xi = pair_profile(kind, alpha, coef, scaled, np.asarray(r, float), glx, glw)
    return channel_kernels_from_profile(fw, xi, np.asarray(r, float), l_lo, l_hi)


# ---------------------------------------------------------------------------
# shooting integrator: u'' = (r^2 - 2E) u


def _rk4_scan(r0, r1, u, v, e, nsteps, renorm=True):
    # renorm rescales (u, v) by a positive factor to dodge overflow for deep
    # bound states; it preserves log-derivatives and mismatch zeros but not
    # absolute profile values (profile callers disable it)
    h = (r1 - r0) / nsteps
    r = r0
    for i in range(nsteps):
        k1u = v
        k1v = (r * r - 2.0 * e) * u
        rh = r + 0.5 * h
        k2u = v + 0.5 * h * k1v
        k2v = (rh * rh - 2.0 * e) * (u + 0.5 * h * k1u)
        k3u = v + 0.5 * h * k2v
        k3v = (rh * rh - 2.0 * e) * (u + 0.5 * h * k2u)
        rn = r + h
        k4u = v + h * k3v
        k4v = (rn * rn - 2.0 * e) * (u + h * k3u)
        u = u + (h / 6.0) * (k1u + 2.0 * k2u + 2.0 * k3u + k4u)
        v = v + (h / 6.0) * (k1v + 2.0 * k2v + 2.0 * k3v + k4v)
        r = rn
        if renorm and (i + 1) % 1000 == 0:
            scale = np.maximum(np.abs(u), np.abs(v))
            np.maximum(scale, 1e-300, out=scale)
            u = u / scale
            v = v / scale
    return u, v


def _contact_start(e, inv_a, eps):
    # series of u = r*psi around the contact point: u ~ 1 - r/a - E r^2 + ...
    u0 = 1.0 - inv_a * eps - e * eps**2 + (e * inv_a / 3.0) * eps**3 + (1.0 + 2.0 * e * e) / 12.0 * eps**4
    v0 = -inv_a - 2.0 * e * eps + e * inv_a * eps**2 + (1.0 + 2.0 * e * e) / 3.0 * eps**3
    return u0, v0


def shooting_mismatch(e_values, inv_a, h, eps, r_match, r_far):
    """Wronskian-style mismatch of outward/inward log-derivatives at r_match.

    Zero exactly at the eigenvalues of the contact-interaction problem for the
    given inverse scattering length.  Vectorized over candidate energies.
    """
    e = np.atleast_1d(np.asarray(e_values, dtype=float))
    u0, v0 = _contact_start(e, inv_a, eps)
    n_out = max(1, int(round((r_match - eps) / h)))
    uo, vo = _rk4_scan(eps, r_match, u0, v0, e, n_out)
    ui = np.ones_like(e)
    vi = (-r_far + (e - 0.5) / r_far) * ui
    n_in = max(1, int(round((r_far - r_match) / h)))
    ui, vi = _rk4_scan(r_far, r_match, ui, vi, e, n_in)
    return vo * ui - vi * uo


def shooting_outward_profile(e, inv_a, h, eps, r_stops):
    """Outward u(r) samples at the requested radii (un-normalized).

    ``r_stops`` must be increasing; each stop is reached by whole RK4 steps
    from the previous one, so stops should be (near) multiples of h.
    """
    u, v = _contact_start(np.array([float(e)]), inv_a, eps)
    r0 = eps
    out = np.empty(len(r_stops))
    for i, r1 in enumerate(r_stops):
        n = max(1, int(round((r1 - r0) / h)))
        u, v = _rk4_scan(r0, r0 + n * h, u, v, np.array([float(e)]), n, renorm=False)
        r0 = r0 + n * h
        out[i] = u[0]
    return out

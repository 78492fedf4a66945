"""Numerical traces: heat traces, weighted traces, resolvent power traces.

Values come either from eigenvalue sums (spectral data, exact for the
frozen models via the Bessel oracle) or from contour quadrature against
resolvent solves on a discretization.  Every retained sample carries an
explicit truncation bound; samples whose bound exceeds the configured
fraction of the value are refused rather than silently kept.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import pencil
from .coneop import Discretization, SpectralData, _weyl_fit, eigenvalues
from .errors import (ConfigurationError, InsufficientSpectrumError,
                     NumericalError)


@dataclass
class TraceSeries:
    """Sampled trace values with truncation bounds and order bookkeeping."""

    params: np.ndarray
    values: np.ndarray
    tails: np.ndarray
    kind: str
    meta: dict = field(default_factory=dict)
    source: object = None

    def __len__(self):
        return len(self.params)

    def window(self, lo, hi):
        mask = (self.params >= lo) & (self.params <= hi)
        return TraceSeries(self.params[mask], self.values[mask],
                           self.tails[mask], self.kind, dict(self.meta),
                           self.source)

    def to_csv_rows(self):
        rows = [("param", "value_re", "value_im", "tail_bound")]
        for p, v, t in zip(self.params, self.values, self.tails):
            v = complex(v)
            rows.append((f"{p:.16e}", f"{v.real:.16e}", f"{v.imag:.16e}",
                         f"{t:.6e}"))
        return rows


class WeightOperator:
    """Weight x^(-beta) phi(x) times a per-mode multiplier of given order.

    phi is a smooth cutoff that is identically 1 near x = 0 (default) or
    identically 0 near x = 0, vanishing near x = 1 when it starts at 1.
    The tangential part acts per circle mode as (1 + m^2)^(mu_prime/2).
    """

    def __init__(self, beta=0.0, mu_prime=0.0, *, phi=None, one_near_zero=True,
                 phi_edges=(0.25, 0.5), label=None):
        self.beta = float(beta)
        self.mu_prime = float(mu_prime)
        self.one_near_zero = bool(one_near_zero)
        self.phi_edges = tuple(phi_edges)
        if phi is None:
            a, b = self.phi_edges
            from .symbols import smoothstep
            if one_near_zero:
                phi = lambda x: 1.0 - smoothstep((np.asarray(x) - a) / (b - a))
            else:
                phi = lambda x: smoothstep((np.asarray(x) - a) / (b - a))
        self.phi = phi
        self.label = label or f"x^(-{beta})*phi, mu'={mu_prime}"

    @property
    def is_identity(self):
        return self.beta == 0.0 and self.mu_prime == 0.0 and self._phi_is_one()

    def _phi_is_one(self):
        x = np.linspace(1e-4, 1.0, 17)
        return bool(np.max(np.abs(np.asarray(self.phi(x)) - 1.0)) < 1e-14)

    def mode_factor(self, m):
        return (1.0 + m * m) ** (self.mu_prime / 2.0)

    def multiplier(self, x):
        return np.asarray(self.phi(x)) * np.asarray(x, dtype=float) ** (-self.beta)


def identity_weight():
    return WeightOperator(0.0, 0.0, phi=lambda x: np.ones_like(np.asarray(x, dtype=float)),
                          label="identity")


def _require_trace_class(meta, N, B):
    mu = meta.get("mu", 2.0)
    n = meta.get("n", 2)
    if N * mu - B.mu_prime <= n:
        raise ConfigurationError(
            "trace does not converge: need N*mu - mu' > n",
            N=N, mu=mu, mu_prime=B.mu_prime, n=n)


# ---------------------------------------------------------------------------
# eigenvalue-sum traces


def heat_trace(sd: SpectralData, t_grid, *, rel_tail_tol=0.01):
    """Heat trace sum exp(-t lam) over the materialized spectrum.

    Refuses any sample whose truncation bound exceeds ``rel_tail_tol``
    times the value, reporting the eigenvalue range that would be needed.
    """
    t_grid = np.asarray(t_grid, dtype=float)
    if np.any(t_grid <= 0):
        raise ConfigurationError("heat trace needs positive times")
    vals = np.empty(len(t_grid))
    tails = np.empty(len(t_grid))
    for i, t in enumerate(t_grid):
        v, tl = sd.heat_sum(t)
        if tl > rel_tail_tol * max(v, 1e-300):
            need = 40.0 / float(np.min(t_grid))
            raise InsufficientSpectrumError(
                "heat trace tail bound too large at small t",
                t=float(t), tail=float(tl), value=float(v),
                lam_max_needed=need,
                count_needed=int(sd.count() * need / max(sd.lam_max, 1.0)))
        vals[i] = v
        tails[i] = tl
    meta = dict(sd.meta)
    meta.update({"N": 0, "mu_prime": 0.0, "beta": 0.0})
    return TraceSeries(t_grid, vals, tails, "heat", meta, sd)


def complex_power_sum(sd: SpectralData, z, *, rel_tail_tol=1e-6):
    """Sum of lam^z over the spectrum, for Re z well inside convergence.

    Requires Re z < -n/mu - 0.5 (margin on the convergence abscissa).
    Returns (value, tail_bound); raises if the tail bound is above
    ``rel_tail_tol`` times the value.
    """
    mu = sd.meta.get("mu", 2.0)
    n = sd.meta.get("n", 2)
    if complex(z).real >= -n / mu - 0.5:
        raise ConfigurationError("need Re z < -n/mu - 1/2",
                                 z=complex(z), n=n, mu=mu)
    val, tail = sd.power_sum(z)
    if tail > rel_tail_tol * max(abs(val), 1e-300):
        raise InsufficientSpectrumError("power sum tail above tolerance",
                                        z=complex(z), tail=tail, value=val)
    return val, tail


# ---------------------------------------------------------------------------
# weighted spectral data (eigenpairs plus matrix elements)


@dataclass
class WeightedSpectralData:
    """Per-mode (eigenvalue, matrix element) pairs for a weight operator.

    b entries are <B u, u> in the weighted inner product for W-normalized
    eigenfunctions u, including the per-mode tangential factor.
    ``extra_nus`` bound the lowest eigenvalue of the modes beyond the
    materialized range, for mode tail estimates.
    """

    pairs: dict           # mode -> (lams, bs)
    lam_max: float
    meta: dict
    weyl: dict
    bfit: dict            # mode -> (C, q): |b| <~ C * lam^q for the tail
    extra_nus: np.ndarray = None

    def modes(self):
        return sorted(self.pairs)

    def heat_value(self, t):
        val = 0.0
        tail = 0.0
        for m in self.modes():
            lams, bs = self.pairs[m]
            val += float(np.sum(bs * np.exp(-t * lams)))
            tail += self._tail(m, lambda L: math.exp(-t * L))
        tail += self._mode_tail(lambda L: math.exp(-t * L))
        return val, tail

    def resolvent_power_value(self, lam, N):
        val = 0.0 + 0.0j
        tail = 0.0
        for m in self.modes():
            lams, bs = self.pairs[m]
            val += np.sum(bs * (lams - lam) ** (-float(N)))
            tail += self._tail(m, lambda L: abs((L - lam)) ** (-float(N)))
        tail += self._mode_tail(lambda L: abs((L - lam)) ** (-float(N)))
        return val, tail

    def _b_cap(self):
        # matrix elements of boundary-concentrated weights fall off with the
        # mode number (the eigenfunctions retreat from the tip), so the
        # modes beyond the materialized range are capped by the envelope of
        # the top materialized quarter, with a safety factor
        per_mode = {m: float(np.max(np.abs(bs)))
                    for m, (_, bs) in self.pairs.items() if len(bs)}
        if not per_mode:
            return 1.0
        mmax = max(abs(m) for m in per_mode)
        top = [v for m, v in per_mode.items() if abs(m) >= 0.75 * mmax]
        return 4.0 * max(max(top), 1e-300)

    def _block_sum(self, f, k0, lam_of_k, coef):
        # left-endpoint block bound: the summand is decreasing past the edge
        acc = 0.0
        k = k0
        while True:
            stride = max(1, (k - k0) // 8)
            term = coef(lam_of_k(k)) * f(lam_of_k(k)) * stride
            acc += term
            if term < 1e-18 * max(acc, 1e-300) or k > k0 + 300000:
                break
            k += stride
        return acc

    def _tail(self, m, f):
        c1, c0 = self.weyl.get(m, (math.pi, 0.0))
        C, q = self.bfit.get(m, (1.0, 0.0))
        lams, _ = self.pairs[m]
        return self._block_sum(f, len(lams) + 1,
                               lambda k: (c1 * k + c0) ** 2,
                               lambda L: C * max(L, 1.0) ** q)

    def _mode_tail(self, f):
        if self.extra_nus is None or len(self.extra_nus) == 0:
            return 0.0
        cap = self._b_cap()
        total = 0.0
        for nu in self.extra_nus:
            first = cap * f(nu * nu)
            if first < 1e-18 * max(total, 1e-300):
                break
            total += self._block_sum(f, 0, lambda k: (math.pi * k + nu) ** 2,
                                     lambda L: cap)
        return total


def weighted_spectral_data(disc: Discretization, B: WeightOperator, lam_cap,
                           *, mode_cap=None):
    """Eigenpairs up to lam_cap with matrix elements of the weight operator."""
    op = disc.op
    mode_cap = op.modes[1] if mode_cap is None else int(mode_cap)
    mult = B.multiplier(disc.x)
    pairs = {}
    weyl = {}
    bfit = {}
    for m in disc.mode_list():
        if abs(m) > mode_cap:
            continue
        vals, vecs = eigenvalues(disc, m, lam_max=lam_cap, vectors=True)
        if len(vals) == 0:
            continue
        rho = B.mode_factor(m)
        bs = rho * disc.h * np.einsum("ij,i->j", np.abs(vecs) ** 2,
                                      mult * disc.w)
        pairs[m] = (vals, bs)
        weyl[m] = _weyl_fit(vals)
        # matrix-element growth fit on the top half for tail extrapolation;
        # the exponent is clamped to [0, 1.5] (bounded weights grow slower)
        half = max(1, len(vals) // 2)
        if len(vals) >= 6 and np.all(np.abs(bs[half:]) > 0):
            q, logc = np.polyfit(np.log(vals[half:]), np.log(np.abs(bs[half:])), 1)
            bfit[m] = (float(np.exp(logc)) * 2.0,
                       float(min(max(q, 0.0), 1.5)))
        else:
            bfit[m] = (float(np.max(np.abs(bs))) * 2.0 + 1e-300, 0.0)
    meta = {"mu": op.mu, "n": 2, "mu_prime": B.mu_prime, "beta": B.beta,
            "operator": op.label, "weight": B.label}
    from .coneop import _mode_nu_floor
    extra = np.asarray(sorted(_mode_nu_floor(op, m) for m in op.mode_list()
                              if m not in pairs))
    return WeightedSpectralData(pairs, float(lam_cap), meta, weyl, bfit, extra)


def weighted_heat_trace(source, B: WeightOperator, t_grid, *,
                        lam_cap=None, rel_tail_tol=0.01):
    """Trace of B e^(-tA) as an eigenvalue sum with matrix elements.

    ``source`` is either a WeightedSpectralData (preferred, reusable) or a
    Discretization, in which case eigenpairs up to ``lam_cap`` are computed
    here.  For the identity weight on plain SpectralData use heat_trace.
    """
    wsd = _as_weighted(source, B, lam_cap, t_grid=t_grid)
    t_grid = np.asarray(t_grid, dtype=float)
    vals = np.empty(len(t_grid))
    tails = np.empty(len(t_grid))
    for i, t in enumerate(t_grid):
        v, tl = wsd.heat_value(t)
        if tl > rel_tail_tol * max(abs(v), 1e-300):
            raise InsufficientSpectrumError(
                "weighted heat trace tail too large",
                t=float(t), tail=float(tl), value=float(v),
                lam_cap_needed=40.0 / float(np.min(t_grid)))
        vals[i] = v
        tails[i] = tl
    meta = dict(wsd.meta)
    meta["N"] = 0
    return TraceSeries(t_grid, vals, tails, "heat", meta, wsd)


def _as_weighted(source, B, lam_cap, *, t_grid=None, lam_grid=None):
    if isinstance(source, WeightedSpectralData):
        return source
    if isinstance(source, Discretization):
        if lam_cap is None:
            if t_grid is not None:
                lam_cap = 40.0 / float(np.min(np.asarray(t_grid)))
            else:
                lam_cap = 100.0 * float(np.max(np.abs(np.asarray(lam_grid))))
        return weighted_spectral_data(source, B, lam_cap)
    raise ConfigurationError("source must be WeightedSpectralData or Discretization",
                             got=type(source).__name__)


def resolvent_power_trace(source, B: WeightOperator, N, lam_grid, *,
                          lam_cap=None, rel_tail_tol=0.01):
    """Trace of B (A - lam)^(-N) on a grid of shifts.

    Enforces the trace-class condition N*mu - mu' > n before computing.
    With the identity weight the value reduces to sum (lam_j - lam)^(-N).
    """
    N = int(N)
    lam_grid = np.asarray(lam_grid, dtype=complex)
    wsd = _as_weighted(source, B, lam_cap, lam_grid=lam_grid)
    _require_trace_class(wsd.meta, N, B)
    vals = np.empty(len(lam_grid), dtype=complex)
    tails = np.empty(len(lam_grid))
    for i, lam in enumerate(lam_grid):
        v, tl = wsd.resolvent_power_value(lam, N)
        if tl > rel_tail_tol * max(abs(v), 1e-300):
            raise InsufficientSpectrumError(
                "resolvent power trace tail too large",
                lam=complex(lam), tail=float(tl), value=complex(v))
        vals[i] = v
        tails[i] = tl
    meta = dict(wsd.meta)
    meta["N"] = N
    return TraceSeries(lam_grid, vals, tails, "resolvent", meta, wsd)


def resolvent_power_trace_spectral(sd: SpectralData, N, lam_grid):
    """Identity-weight resolvent power trace from plain spectral data."""
    N = int(N)
    lam_grid = np.asarray(lam_grid, dtype=complex)
    _require_trace_class(sd.meta, N, identity_weight())
    lams = sd.all_eigs()
    vals = np.array([np.sum((lams - lam) ** (-float(N))) for lam in lam_grid])
    _, tail0 = sd.power_sum(-float(N))
    tails = []
    for lam in lam_grid:
        gap = float(np.min(np.abs(lams - lam)))
        if gap <= 0:
            raise NumericalError("shift on the spectrum", lam=complex(lam))
        if complex(lam).real <= 0:
            # |lam_j - lam| >= lam_j beyond the edge, so the z = -N tail applies
            tails.append(tail0)
        else:
            edge = sd.lam_max
            if abs(lam) > edge / 2:
                raise InsufficientSpectrumError(
                    "shift too close to the truncation edge", lam=complex(lam))
            tails.append(tail0 * (edge / (edge - abs(lam))) ** N)
    meta = dict(sd.meta)
    meta.update({"N": N, "mu_prime": 0.0, "beta": 0.0})
    return TraceSeries(lam_grid, vals, np.asarray(tails), "resolvent", meta, sd)


# ---------------------------------------------------------------------------
# contour realization of the heat operator


@dataclass
class ContourSpec:
    """Vertex plus two rays: lam = a + u exp(+-i delta), u >= 0."""

    a: float = -1.0
    delta: float = math.pi / 4

    def __post_init__(self):
        if not (0.0 < self.delta < math.pi / 2):
            raise ConfigurationError("contour angle must lie in (0, pi/2)",
                                     delta=self.delta)


def _gauss_panels(u_max, n_panels, n_gauss=24):
    edges = np.concatenate([[0.0], np.geomspace(u_max / 2 ** (n_panels - 1),
                                                u_max, n_panels)])
    xg, wg = np.polynomial.legendre.leggauss(n_gauss)
    nodes = []
    weights = []
    for a, b in zip(edges[:-1], edges[1:]):
        nodes.append(0.5 * (b - a) * xg + 0.5 * (a + b))
        weights.append(0.5 * (b - a) * wg)
    return np.concatenate(nodes), np.concatenate(weights)


def heat_trace_contour(disc: Discretization, t, *, N=3, contour=None,
                       rel_tol=1e-8, bdiag=None):
    """Heat trace by contour quadrature of the N-th resolvent power.

    Evaluates the Cauchy integral of exp(-t lam) against Tr (A - lam)^(-N)
    after N-1 integrations by parts; the trace of the resolvent power is
    obtained from the tridiagonal diagonal-of-inverse recursions plus a
    small Cauchy circle for the (N-1)-st derivative, so each quadrature
    node costs O(grid size) per mode.  The result must agree with the
    eigenvalue sum; a last-panel contribution above ``rel_tol`` raises.
    """
    N = int(N)
    if N < 2:
        raise ConfigurationError("need N >= 2 for an integrable contour", N=N)
    contour = contour or ContourSpec()
    t = float(t)
    u_max = 46.0 / (t * math.cos(contour.delta))
    nodes, weights = _gauss_panels(u_max, n_panels=14)
    e_dir = complex(math.cos(contour.delta), math.sin(contour.delta))
    lam_nodes = contour.a + nodes * e_dir

    # derivative circles around each node
    M = 8
    dist = np.abs(lam_nodes.imag)
    dist = np.where(lam_nodes.real > 0, dist, np.abs(lam_nodes))
    radius = 0.35 * np.maximum(dist, 1e-3)
    circle = np.exp(2j * math.pi * np.arange(M) / M)
    all_shifts = (lam_nodes[:, None] + radius[:, None] * circle[None, :]).ravel()

    tr1 = np.zeros(len(all_shifts), dtype=complex)
    for m in disc.mode_list():
        d, e = disc.matrix(m)
        tr1 += pencil.trace_weighted_resolvent(d, e, disc.w, all_shifts,
                                               bdiag=bdiag)
    tr1 = tr1.reshape(len(lam_nodes), M)
    # (N-1)-st Taylor coefficient of Tr(A - lam)^(-1) = Tr(A - lam)^(-N)
    phase = np.exp(-2j * math.pi * (N - 1) * np.arange(M) / M)
    tr_n = (tr1 * phase[None, :]).mean(axis=1) / radius ** (N - 1)

    integrand = np.exp(-t * lam_nodes) * tr_n * e_dir
    upper = np.sum(weights * integrand)
    # counterclockwise: upper ray traversed inward, lower ray (the complex
    # conjugate for a real pencil) outward
    total = np.conjugate(upper) - upper
    # last panel contribution check
    lastw = weights[-24:]
    lasti = integrand[-24:]
    last = abs(np.sum(lastw * lasti))
    # the constant is pinned by the one-eigenvalue residue computation
    value = (1j / (2 * math.pi)) * math.factorial(N - 1) * t ** (-(N - 1)) * total
    if last > rel_tol * max(abs(value), 1e-300):
        raise NumericalError("contour quadrature not converged",
                             last_panel=float(last), value=complex(value))
    if abs(value.imag) > 1e-6 * max(abs(value), 1.0):
        raise NumericalError("contour trace has a large imaginary part",
                             value=complex(value))
    return float(value.real)

"""Flat key-value parsing of operator definition and experiment config files.

Both formats are line based: ``key = value`` with '#' comments and no
nesting.  Operator files use the keys

    mu      = 2
    alpha   = 1
    modes   = -8..8
    bc      = dirichlet
    coeff[0] = m^2 + 2.25        # per power of the dilation generator,
    coeff[2] = 1                 # optionally with x dependence

x-dependent coefficient expressions are split into their value at x = 0
(the conormal data) and the remainder.
"""

import hashlib
import re
from pathlib import Path

import numpy as np

from .coneop import ConeOperator
from .errors import ConfigurationError
from .exprs import compile_expr

_COEFF_RE = re.compile(r"^coeff\[(\d+)\]$")


def read_kv(path):
    """Ordered key -> string value mapping from a flat config file."""
    out = {}
    text = Path(path).read_text()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigurationError("expected 'key = value'",
                                     file=str(path), line=lineno)
        key, value = line.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def config_digest(path):
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()[:16]


def _parse_modes(text):
    if ".." in text:
        lo, hi = text.split("..")
        return int(lo), int(hi)
    cap = int(text)
    return -cap, cap


def parse_operator(path):
    """Build a ConeOperator from a definition file."""
    kv = read_kv(path)
    try:
        mu = float(kv["mu"])
        modes = _parse_modes(kv["modes"])
    except KeyError as exc:
        raise ConfigurationError("operator file missing a required key",
                                 file=str(path), key=str(exc)) from None
    alpha = float(kv.get("alpha", 0.0))
    bc = kv.get("bc", "dirichlet").lower()
    if bc != "dirichlet":
        raise ConfigurationError("only dirichlet cuts are supported", bc=bc)
    coeff_exprs = {}
    for key, value in kv.items():
        match = _COEFF_RE.match(key)
        if match:
            coeff_exprs[int(match.group(1))] = compile_expr(value)
    if not coeff_exprs:
        raise ConfigurationError("operator file defines no coefficients",
                                 file=str(path))
    deg = max(coeff_exprs)

    def values(m, x):
        out = []
        for j in range(deg + 1):
            fn = coeff_exprs.get(j)
            if fn is None:
                out.append(np.zeros_like(np.asarray(x, dtype=float)) if
                           np.ndim(x) else 0.0)
            else:
                v = fn(m, x)
                out.append(np.broadcast_to(v, np.shape(x)).astype(complex)
                           if np.ndim(x) else complex(v))
        return out

    base0 = {}

    def indicial(m):
        # cached so the operator can be rematerialized on wider mode windows
        if m not in base0:
            base0[m] = values(m, 0.0)
        return base0[m]

    x_probe = np.linspace(0.0, 1.0, 7)
    x_dependent = False
    for m in (0, modes[1]):
        vals = values(m, x_probe)
        for j, col in enumerate(vals):
            if np.max(np.abs(col - indicial(m)[j])) > 1e-13:
                x_dependent = True

    x_correction = None
    if x_dependent:
        def x_correction(m, x):
            vals = values(m, np.asarray(x, dtype=float))
            return [v - indicial(m)[j] for j, v in enumerate(vals)]

    return ConeOperator(mu, modes, indicial,
                        x_correction=x_correction, alpha=alpha,
                        label=Path(path).stem)

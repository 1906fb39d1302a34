"""Identity checks run by ``ebm oracle-check`` against an enumerable model."""
from dataclasses import dataclass, asdict

import numpy as np
from scipy.special import logsumexp

from . import exact
from .model import BmParams, RbmParams, rng_stream
from .units import binary_cond_prob, hidden_pre_activation

MAX_PROBES = 64
MAX_FD_PARAMS = 64
FD_EPS = 1e-5
FD_TOL = 1e-6
THERMO_BITS = 20


@dataclass
class CheckResult:
    name: str
    passed: bool
    value: float | None
    tolerance: float | None
    detail: str = ""

    def __post_init__(self):
        self.passed = bool(self.passed)
        if self.value is not None:
            self.value = float(self.value)

    def as_dict(self):
        return asdict(self)

    def line(self):
        if self.value is None:
            status = "SKIP"
        else:
            status = "PASS" if self.passed else "FAIL"
        extra = "" if self.value is None else f" error={self.value:.3e} tol={self.tolerance:.1e}"
        return f"{status} {self.name}{extra} {self.detail}".rstrip()


def _probe_visibles(d, seed=0):
    if d <= 6:
        return exact.binary_configs(d)
    rng = rng_stream(seed, 11)
    return (rng.random((MAX_PROBES, d)) < 0.5).astype(np.float64)


def _normalization(params, cap):
    log_z = exact.log_partition(params, cap)
    total = sum(float(np.exp(grid - log_z).sum()) for _, _, grid in exact._visible_chunks(params))
    err = abs(total - 1.0)
    return CheckResult("normalization", err <= 1e-12, err, 1e-12, "sum of P(v, h) over all states")


def _marginal_consistency(params, probes, cap):
    log_z = exact.log_partition(params, cap)
    base = exact._base(params)
    H = exact.binary_configs(base.p)
    worst = 0.0
    for v in probes:
        joint = np.exp(exact._neg_energy_grid(params, v[None, :], H)[0] - log_z).sum()
        worst = max(worst, abs(joint - exact.exact_marginal_visible(params, v, cap)))
    return CheckResult("marginal_consistency", worst <= 1e-12, worst, 1e-12, "sum_h P(v, h) = P(v)")


def _factorization(params: RbmParams, probes, cap):
    H = exact.binary_configs(params.p)
    worst = 0.0
    for v in probes:
        table = exact.exact_cond_hidden(params, v, cap)
        q = binary_cond_prob(hidden_pre_activation(params, v))
        product = np.prod(np.where(H == 1.0, q, 1.0 - q), axis=1)
        worst = max(worst, float(np.max(np.abs(table - product))))
    return CheckResult("factorization", worst <= 1e-10, worst, 1e-10, "P(h | v) = prod_j P(h_j | v)")


def _partition_identity(params: RbmParams, cap):
    log_z = exact.log_partition(params, cap)
    V = exact.binary_configs(params.d)
    pre = V @ params.W + params.c
    factored = logsumexp(V @ params.b + np.logaddexp(0.0, pre).sum(axis=1))
    err = abs(log_z - factored) / max(1.0, abs(log_z))
    return CheckResult("partition_identity", err <= 1e-10, err, 1e-10,
                       "log Z by enumeration vs hidden units summed out")


def _thermodynamics(params, cap):
    base = exact._base(params)
    if base.d + base.p > THERMO_BITS:
        return CheckResult("thermodynamic_identity", True, None, None, f"skipped: more than {THERMO_BITS} units")
    grid = exact._neg_energy_grid(params, exact.binary_configs(base.d), exact.binary_configs(base.p))
    energies = -grid.ravel()
    worst = 0.0
    for beta in (0.5, 1.0, 2.0):
        rep = exact.boltzmann_quantities(energies, beta)
        worst = max(worst, abs(rep.H - (-beta * rep.F + beta * rep.U)) / max(1.0, abs(rep.log_Z)))
    return CheckResult("thermodynamic_identity", worst <= 1e-10, worst, 1e-10, "H = -beta F + beta U")


def _finite_difference(params, data, cap):
    n = data.shape[0]
    grad = exact.exact_loglik_grad(params, data, cap=cap)
    bm = isinstance(params, BmParams)
    base = exact._base(params)
    slots = [("W", idx) for idx in np.ndindex(base.W.shape)]
    slots += [("b", (i,)) for i in range(base.d)] + [("c", (j,)) for j in range(base.p)]
    if bm:
        slots += [("L", (i, j)) for i in range(base.d) for j in range(i + 1, base.d)]
        slots += [("J", (i, j)) for i in range(base.p) for j in range(i + 1, base.p)]
    if len(slots) > MAX_FD_PARAMS:
        pick = rng_stream(0, 12).choice(len(slots), MAX_FD_PARAMS, replace=False)
        slots = [slots[i] for i in sorted(pick)]

    def perturbed(name, idx, delta):
        arrays = {"W": base.W.copy(), "b": base.b.copy(), "c": base.c.copy()}
        if bm:
            arrays["L"], arrays["J"] = params.L.copy(), params.J.copy()
        arrays[name][idx] += delta
        if name in ("L", "J"):
            arrays[name][idx[::-1]] += delta
        new_base = base.with_arrays(arrays["W"], arrays["b"], arrays["c"])
        return BmParams(new_base, arrays["L"], arrays["J"]) if bm else new_base

    worst = 0.0
    for name, idx in slots:
        up = exact.exact_loglik(perturbed(name, idx, FD_EPS), data, cap=cap)
        down = exact.exact_loglik(perturbed(name, idx, -FD_EPS), data, cap=cap)
        numeric = (up - down) / (2 * FD_EPS) / n
        analytic = getattr(grad, "d" + name)[idx] / n
        if name in ("L", "J"):
            analytic *= 2.0
        worst = max(worst, abs(numeric - analytic))
    return CheckResult("gradient_finite_difference", worst <= FD_TOL, worst, FD_TOL,
                       f"{len(slots)} parameters, per-row log-likelihood")


def oracle_check(params, data=None, cap=exact.DEFAULT_CAP):
    """Run every applicable identity; raises CapacityError beyond ``cap``."""
    exact._check_enumerable(params, cap)
    base = exact._base(params)
    probes = _probe_visibles(base.d)
    if data is None or len(data) == 0:
        data = probes
    results = [_normalization(params, cap), _marginal_consistency(params, probes, cap)]
    if isinstance(params, RbmParams):
        results.append(_factorization(params, probes, cap))
        results.append(_partition_identity(params, cap))
    results.append(_thermodynamics(params, cap))
    results.append(_finite_difference(params, np.asarray(data, dtype=np.float64), cap))
    return results

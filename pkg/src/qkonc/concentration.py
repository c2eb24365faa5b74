"""Concentration statistics over kernel and cost samples.

Sample layout used throughout: a 2-D array whose row ``i`` holds draws of
``f(x_i, x'_j)`` for one anchor ``x_i`` and independent ``x'_j``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .circuits import AnsatzSpec, Circuit, build_encoder
from .kernel import GramMatrix, encode_states
from .sampling import VarianceEstimate, estimate, stream, uniform_angles
from .statevec import fidelity
from . import vqa

SE_MULTIPLIER = 3.0


# -- symmetric eigensolver -----------------------------------------------------


def jacobi_eigh(matrix, tol: float = 1e-12, max_sweeps: int = 100) -> tuple[np.ndarray, np.ndarray]:
    """Cyclic Jacobi eigen-decomposition of a real symmetric matrix.

    Returns ``(eigenvalues, eigenvectors)`` sorted by descending eigenvalue;
    column ``k`` of the second array is the eigenvector for value ``k``.
    Sweeps stop once the off-diagonal Frobenius norm is at most
    ``tol * max(1, ||A||_F)``.
    """
    A = np.array(matrix, dtype=np.float64, copy=True)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {A.shape}")
    n = A.shape[0]
    V = np.eye(n)
    scale = max(1.0, float(np.linalg.norm(A)))
    offdiag = ~np.eye(n, dtype=bool)
    for _ in range(max_sweeps):
        # summed directly: ||A||^2 - ||diag||^2 cancels down to ~sqrt(eps)
        off = float(np.linalg.norm(A[offdiag]))
        if off <= tol * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if apq == 0.0:
                    continue
                diff = A[q, q] - A[p, p]
                if abs(apq) * 1e150 < abs(diff):
                    t = apq / diff  # small-angle limit, avoids overflow in theta
                else:
                    theta = diff / (2.0 * apq)
                    t = (1.0 if theta >= 0 else -1.0) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                cp, cq = A[:, p].copy(), A[:, q].copy()
                A[:, p] = c * cp - s * cq
                A[:, q] = s * cp + c * cq
                rp, rq = A[p, :].copy(), A[q, :].copy()
                A[p, :] = c * rp - s * rq
                A[q, :] = s * rp + c * rq
                A[p, q] = A[q, p] = 0.0
                vp, vq = V[:, p].copy(), V[:, q].copy()
                V[:, p] = c * vp - s * vq
                V[:, q] = s * vp + c * vq
    else:
        raise RuntimeError(f"Jacobi iteration did not converge in {max_sweeps} sweeps")
    evals = np.diag(A).copy()
    order = np.argsort(-evals, kind="stable")
    return evals[order], V[:, order]


def check_symmetric(matrix: np.ndarray, tol: float = 1e-9) -> None:
    asym = float(np.max(np.abs(matrix - matrix.T))) if matrix.size else 0.0
    if asym > tol:
        raise ValueError(f"matrix is not symmetric (max |A - A^T| = {asym:.3e})")


@dataclass
class Spectrum:
    eigenvalues: np.ndarray
    flatness: float

    def to_dict(self) -> dict:
        return {"eigenvalues": self.eigenvalues.tolist(), "flatness": self.flatness}


def spectrum_flatness(gram: GramMatrix | np.ndarray) -> Spectrum:
    """Eigenvalues (descending) and the normalized effective rank exp(H(p)) / N."""
    K = gram.entries if isinstance(gram, GramMatrix) else np.asarray(gram, dtype=np.float64)
    check_symmetric(K)
    evals, _ = jacobi_eigh(K)
    lam = np.clip(evals, 0.0, None)
    total = lam.sum()
    if total <= 0:
        raise ValueError("spectrum has no positive weight")
    p = lam[lam > 0] / total
    entropy = -float(np.sum(p * np.log(p)))
    return Spectrum(evals, math.exp(entropy) / K.shape[0])


# -- concentration report ------------------------------------------------------


def _rows(samples) -> np.ndarray:
    S = np.asarray(samples, dtype=np.float64)
    if S.ndim != 2 or S.shape[0] < 2 or S.shape[1] < 2:
        raise ValueError(f"need >= 2 anchors with >= 2 draws each, got shape {S.shape}")
    return S


def _jackknife(stat: Callable[[np.ndarray], float], groups: int) -> float:
    """Delete-one-group jackknife standard error; ``stat`` receives the kept-group mask."""
    keep = np.ones(groups, dtype=bool)
    vals = np.empty(groups)
    for g in range(groups):
        keep[g] = False
        vals[g] = stat(keep)
        keep[g] = True
    return math.sqrt((groups - 1) / groups * float(np.sum((vals - vals.mean()) ** 2)))


@dataclass
class ConcentrationReport:
    n_qubits: int | None
    mu: float
    total: VarianceEstimate
    total_se: float
    conditional: list[VarianceEstimate] = field(repr=False)
    tails: list[vqa.TailCheck]
    max_abs_deviation: float
    n_anchors: int
    n_pairs: int

    @property
    def var_total(self) -> float:
        return self.total.variance

    @property
    def cond_variances(self) -> np.ndarray:
        return np.array([c.variance for c in self.conditional])

    @property
    def var_cond_min(self) -> float:
        return float(self.cond_variances.min())

    @property
    def var_cond_max(self) -> float:
        return float(self.cond_variances.max())

    def to_dict(self) -> dict:
        return {
            "n_qubits": self.n_qubits,
            "mu": self.mu,
            "var_total": self.var_total,
            "var_total_se": self.total_se,
            "var_cond_min": self.var_cond_min,
            "var_cond_max": self.var_cond_max,
            "var_cond_mean": float(self.cond_variances.mean()),
            "max_abs_deviation": self.max_abs_deviation,
            "tails": [t.to_dict() for t in self.tails],
            "n_anchors": self.n_anchors,
            "n_pairs": self.n_pairs,
        }


def concentration_report(
    samples, n_qubits: int | None = None, deltas: Sequence[float] = (0.01, 0.1)
) -> ConcentrationReport:
    """Mean, pooled variance, per-anchor conditional variances and Chebyshev tails.

    The SE of the pooled variance is a jackknife over anchors, so
    within-anchor correlation is accounted for.
    """
    S = _rows(samples)
    flat = S.reshape(-1)
    total = estimate(flat)

    def pooled_var(keep: np.ndarray) -> float:
        return float(np.var(S[keep], ddof=1))

    se = _jackknife(pooled_var, S.shape[0])
    return ConcentrationReport(
        n_qubits=n_qubits,
        mu=total.mean,
        total=total,
        total_se=se,
        conditional=[estimate(r) for r in S],
        tails=vqa.tail_checks(flat, total.mean, total.variance, deltas),
        max_abs_deviation=float(np.max(np.abs(flat - total.mean))),
        n_anchors=S.shape[0],
        n_pairs=flat.shape[0],
    )


def gram_report(gram: GramMatrix | np.ndarray, n_qubits: int | None = None, deltas=(0.01, 0.1)) -> ConcentrationReport:
    """Report over the off-diagonal entries of a kernel matrix.

    Each distinct pair counts once in the pooled statistics; row ``i``
    without its diagonal gives the conditional sample for anchor ``x_i``.
    The pooled-variance SE is a delete-one-point jackknife.
    """
    K = gram.entries if isinstance(gram, GramMatrix) else np.asarray(gram, dtype=np.float64)
    n = K.shape[0]
    if n < 3:
        raise ValueError("need at least 3 points for a kernel-matrix report")
    if n_qubits is None and isinstance(gram, GramMatrix):
        n_qubits = gram.meta.get("n_qubits")
    iu = np.triu_indices(n, k=1)
    pairs = K[iu]
    total = estimate(pairs)
    rows = [np.delete(K[i], i) for i in range(n)]

    def pooled_var(keep: np.ndarray) -> float:
        sub = K[np.ix_(keep, keep)]
        return float(np.var(sub[np.triu_indices(sub.shape[0], k=1)], ddof=1))

    return ConcentrationReport(
        n_qubits=n_qubits,
        mu=total.mean,
        total=total,
        total_se=_jackknife(pooled_var, n),
        conditional=[estimate(r) for r in rows],
        tails=vqa.tail_checks(pairs, total.mean, total.variance, deltas),
        max_abs_deviation=float(np.max(np.abs(pairs - total.mean))),
        n_anchors=n,
        n_pairs=pairs.shape[0],
    )


def total_variance_decomposition(samples) -> dict[str, float]:
    """Plug-in (ddof=0) pieces of Var = E[Var(.|x)] + Var(E[.|x]) for equal-size rows."""
    S = _rows(samples)
    return {
        "total": float(np.var(S)),
        "mean_conditional_variance": float(np.mean(np.var(S, axis=1))),
        "variance_of_conditional_mean": float(np.var(np.mean(S, axis=1))),
    }


# -- decay law fitting ---------------------------------------------------------


class DecayClass(str, enum.Enum):
    EXPONENTIAL = "exponential"
    POLYNOMIAL = "polynomial"
    INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True)
class DecayThresholds:
    exponential_b: float = 1.2
    min_r2: float = 0.9
    polynomial_b: float = 1.1


def _linfit(x: np.ndarray, y: np.ndarray) -> tuple[float, float, float, np.ndarray]:
    xm, ym = x.mean(), y.mean()
    sxx = float(np.sum((x - xm) ** 2))
    slope = float(np.sum((x - xm) * (y - ym))) / sxx
    intercept = ym - slope * xm
    resid = y - (intercept + slope * x)
    ss_tot = float(np.sum((y - ym) ** 2))
    ss_res = float(np.sum(resid**2))
    # a flat series is fitted perfectly by both models
    r2 = 1.0 if ss_tot <= 1e-300 else 1.0 - ss_res / ss_tot
    return slope, intercept, r2, resid


@dataclass
class DecayFit:
    qubits: list[int]
    variances: list[float]
    b: float
    log_linear_r2: float
    poly_exponent: float
    log_log_r2: float
    residuals: list[float]
    classification: DecayClass
    thresholds: DecayThresholds = field(default_factory=DecayThresholds)

    def to_dict(self) -> dict:
        return {
            "qubits": self.qubits,
            "variances": self.variances,
            "b": self.b,
            "log_linear_r2": self.log_linear_r2,
            "poly_exponent": self.poly_exponent,
            "log_log_r2": self.log_log_r2,
            "residuals": self.residuals,
            "classification": self.classification.value,
            "thresholds": {
                "exponential_b": self.thresholds.exponential_b,
                "min_r2": self.thresholds.min_r2,
                "polynomial_b": self.thresholds.polynomial_b,
            },
        }


def fit_decay(points: Sequence[tuple[int, float]], thresholds: DecayThresholds = DecayThresholds()) -> DecayFit:
    """Fit ln Var against n (base ``b = e^-slope``) and against ln n (power law).

    exponential: b >= exponential_b, log-linear R^2 >= min_r2 and the
    log-linear model fits at least as well as the power law.
    polynomial: b <= polynomial_b, or the power law fits strictly better.
    Anything else is inconclusive.
    """
    pts = sorted((int(n), float(v)) for n, v in points)
    ns = np.array([p[0] for p in pts], dtype=np.float64)
    vs = np.array([p[1] for p in pts], dtype=np.float64)
    if len(set(ns.tolist())) < 3:
        raise ValueError("need at least 3 distinct qubit counts")
    if np.any(vs <= 0) or not np.all(np.isfinite(vs)):
        raise ValueError("variances must be positive and finite to take logarithms")
    if np.any(ns <= 0):
        raise ValueError("qubit counts must be positive")
    logv = np.log(vs)
    slope, _, r2_lin, resid = _linfit(ns, logv)
    exponent, _, r2_log, _ = _linfit(np.log(ns), logv)
    b = math.exp(-slope)
    t = thresholds
    if b >= t.exponential_b and r2_lin >= t.min_r2 and r2_lin >= r2_log:
        cls = DecayClass.EXPONENTIAL
    elif b <= t.polynomial_b or r2_log > r2_lin:
        cls = DecayClass.POLYNOMIAL
    else:
        cls = DecayClass.INCONCLUSIVE
    return DecayFit(
        qubits=[int(n) for n in ns],
        variances=vs.tolist(),
        b=b,
        log_linear_r2=r2_lin,
        poly_exponent=exponent,
        log_log_r2=r2_log,
        residuals=resid.tolist(),
        classification=cls,
        thresholds=t,
    )


# -- Lemma and theorem harnesses ---------------------------------------------


@dataclass
class LemmaReport:
    total: VarianceEstimate
    total_se: float
    max_conditional: VarianceEstimate
    min_conditional: VarianceEstimate
    upper_margin: float
    lower_margin: float
    upper_tolerance: float
    lower_tolerance: float

    @property
    def upper_bound(self) -> float:
        return 2.0 * self.max_conditional.variance

    @property
    def upper_ok(self) -> bool:
        return self.total.variance <= self.upper_bound + self.upper_tolerance

    @property
    def lower_ok(self) -> bool:
        return self.total.variance >= self.min_conditional.variance - self.lower_tolerance

    @property
    def passed(self) -> bool:
        return self.upper_ok and self.lower_ok

    def failures(self) -> list[str]:
        out = []
        if not self.upper_ok:
            out.append("upper_bound")
        if not self.lower_ok:
            out.append("lower_bound")
        return out

    def to_dict(self) -> dict:
        return {
            "var_total": self.total.variance,
            "var_total_se": self.total_se,
            "two_max_conditional": self.upper_bound,
            "max_conditional": self.max_conditional.variance,
            "min_conditional": self.min_conditional.variance,
            "upper_tolerance": self.upper_tolerance,
            "lower_tolerance": self.lower_tolerance,
            "upper_bound_holds": self.upper_ok,
            "lower_bound_holds": self.lower_ok,
            "passed": self.passed,
        }


def lemma_check(samples, n_se: float = SE_MULTIPLIER) -> LemmaReport:
    """Check ``Var_total <= 2 max Var_cond`` and ``Var_total >= min Var_cond``.

    Each side gets ``n_se`` combined standard errors of slack: the
    jackknife SE of the pooled variance and the SE of the extreme
    conditional variance involved.
    """
    rep = concentration_report(samples)
    cond = rep.conditional
    imax = int(np.argmax([c.variance for c in cond]))
    imin = int(np.argmin([c.variance for c in cond]))
    se_t = rep.total_se
    up_tol = n_se * math.hypot(se_t, 2.0 * cond[imax].se_variance)
    lo_tol = n_se * math.hypot(se_t, cond[imin].se_variance)
    return LemmaReport(
        total=rep.total,
        total_se=se_t,
        max_conditional=cond[imax],
        min_conditional=cond[imin],
        upper_margin=2.0 * cond[imax].variance - rep.var_total,
        lower_margin=rep.var_total - cond[imin].variance,
        upper_tolerance=up_tol,
        lower_tolerance=lo_tol,
    )


def sample_function(
    f: Callable[[np.ndarray, np.ndarray], np.ndarray],
    anchors: int,
    draws: int,
    seed: int,
    low: float = -math.pi,
    high: float = math.pi,
) -> np.ndarray:
    """Conditional sample grid of a vectorized scalar function of two reals."""
    x = stream(seed, 0).uniform(low, high, size=(anchors, 1))
    y = stream(seed, 1).uniform(low, high, size=(anchors, draws))
    return np.asarray(f(x, y), dtype=np.float64)


def _anchor_seed(seed: int, i: int) -> int:
    return int(np.random.SeedSequence(seed, spawn_key=(1, i)).generate_state(1)[0])


UNIFORM_RANGE = (-math.pi, math.pi)


@dataclass
class TheoremReport:
    ansatz: dict | None
    n_qubits: int
    lemma: LemmaReport
    cost_variances: np.ndarray
    kernel_cond_variances: np.ndarray
    identity_bitwise: bool
    anchors: int
    draws: int
    seed: int

    @property
    def passed(self) -> bool:
        return self.lemma.passed and self.identity_bitwise

    def failures(self) -> list[str]:
        out = self.lemma.failures()
        if not self.identity_bitwise:
            out.append("cost_kernel_identity")
        return out

    def to_dict(self) -> dict:
        return {
            "ansatz": self.ansatz,
            "n_qubits": self.n_qubits,
            **self.lemma.to_dict(),
            "cost_variance_min": float(self.cost_variances.min()),
            "cost_variance_max": float(self.cost_variances.max()),
            "identity_bitwise": self.identity_bitwise,
            "anchors": self.anchors,
            "draws": self.draws,
            "seed": self.seed,
            "passed": self.passed,
        }


def theorem_check(
    ansatz: AnsatzSpec | Circuit,
    anchors: int = 20,
    draws: int = 100,
    seed: int = 0,
    threads: int = 1,
    data_range: tuple[float, float] = UNIFORM_RANGE,
    param_range: tuple[float, float] = UNIFORM_RANGE,
) -> TheoremReport:
    """Compare cost concentration of the kernel-construction cost with kernel concentration.

    Anchors ``x_i`` and draws ``x'`` are uniform on [-pi, pi]^d. For each
    anchor the draws double as the parameter samples of the cost
    ``C(theta, x_i)``, so the conditional kernel variance and the cost
    variance come from the same numbers and must agree bit for bit.
    """
    if tuple(data_range) != tuple(param_range):
        raise ValueError(
            f"distribution mismatch: data range {tuple(data_range)} vs parameter range {tuple(param_range)}"
        )
    if tuple(data_range) != UNIFORM_RANGE:
        raise ValueError("the theta <-> x identification is only wired for uniform [-pi, pi] draws")
    circuit = build_encoder(ansatz) if isinstance(ansatz, AnsatzSpec) else ansatz
    d = circuit.n_data_slots
    xs = uniform_angles(stream(seed, 0), anchors, d)
    spec = vqa.kernel_cost_spec(circuit)
    anchor_states = encode_states(circuit, xs, threads)
    rows = np.empty((anchors, draws))
    cost_vars = np.empty(anchors)
    for i in range(anchors):
        thetas = vqa.draw_parameters(_anchor_seed(seed, i), draws, d)
        states = encode_states(circuit, thetas, threads)
        rows[i] = [fidelity(anchor_states[i], s) for s in states]
        cost_vars[i] = vqa.cost_concentration(spec, xs[i], thetas=thetas, threads=threads).variance
    lem = lemma_check(rows)
    kernel_vars = np.array([estimate(r).variance for r in rows])
    return TheoremReport(
        ansatz=None if circuit.spec is None else circuit.spec.to_dict(),
        n_qubits=circuit.n_qubits,
        lemma=lem,
        cost_variances=cost_vars,
        kernel_cond_variances=kernel_vars,
        identity_bitwise=bool(np.array_equal(cost_vars, kernel_vars)),
        anchors=anchors,
        draws=draws,
        seed=seed,
    )

"""Variance floors for warm-started parameter searches.

When every new angle is drawn uniformly from a hypercube of half-width
``r`` around the previous optimum, the step cost stays a random variable
whose variance admits closed-form lower bounds.  A vanishing variance
would starve gradient- and sample-based optimizers, so a positive floor
certifies that the warm-started landscape is still trainable.

Two bounds are provided.  The sharper one (``prop2_bound``) keeps the
subspace overlap deficit ``delta_phibar`` exact and eliminates the
unknown interference sign by a closed-form interval projection.  The
coarser one (``thm2_bound``) replaces the deficit with an admissibility
window in the time step and hypercube radius, trading tightness for a
formula in elementary data only (spectral radius, overlap term, radii).
Both apply to the two-dimensional subspace setting with the three
training states; the derivation peels parameters off the circuit one at
a time and lands on the generator of the first parameterized gate.

``empirical_variance`` is the statistical companion: unbiased sample
variance over reproducible per-sample RNG streams, with a normal-theory
confidence half-width for one-sided checks against the floors.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .ansatz import AnsatzSpec, RotationSlot, ansatz_matrix, apply_ansatz
from .core import PauliString, StateVector
from .hamiltonians import IsingParams, exact_propagator, max_abs_energy
from .training import SubspaceBasis

# One-sided 99% normal quantile used for variance confidence half-widths.
_Z99 = 2.3263478740408408


@dataclass(frozen=True)
class TrigMoments:
    """Moments of cos/sin squared pairs under a uniform angle draw.

    For alpha uniform on [-r, r]: k_plus = E[cos^2], k_minus = E[sin^2],
    c_plus = E[cos^4], c_minus = E[sin^4], c_zero = E[sin^2 cos^2].
    """

    r: float
    c_plus: float
    c_minus: float
    c_zero: float
    k_plus: float
    k_minus: float

    def __post_init__(self):
        if self.r <= 0:
            raise ValueError("hypercube half-width r must be positive")
        if abs(self.k_plus + self.k_minus - 1.0) > 1e-9:
            raise ValueError("k_plus + k_minus must equal 1")

    @property
    def variance_factor(self) -> float:
        """Spread c_plus - k_plus^2, positive for every r > 0.

        Evaluated from r directly: the closed form loses all precision
        to cancellation as r -> 0, so small radii use the series
        4r^4/45 - 16r^6/315 + 64r^8/4725 (relative error < 4e-10 at the
        switch point r = 0.05).
        """
        r = self.r
        if r < 0.05:
            r2 = r * r
            return r2 * r2 * (4.0 / 45.0 + r2 * (-16.0 / 315.0 + r2 * (64.0 / 4725.0)))
        return (-1.0 + 4.0 * r * r + math.cos(4.0 * r) + r * math.sin(4.0 * r)) / (32.0 * r * r)


def trig_moments(r: float) -> TrigMoments:
    """Closed-form moments for a uniform draw on [-r, r]."""
    if r <= 0:
        raise ValueError("hypercube half-width r must be positive")
    s2 = math.sin(2.0 * r) / (4.0 * r)
    s4 = math.sin(4.0 * r) / (32.0 * r)
    return TrigMoments(
        r=r,
        c_plus=0.375 + s2 + s4,
        c_minus=0.375 - s2 + s4,
        c_zero=0.125 - s4,
        k_plus=0.5 + s2,
        k_minus=0.5 - s2,
    )


def _rotation_generator(ansatz: AnsatzSpec, gate_index: int) -> PauliString:
    axes = [entry.axis for entry in ansatz.template if isinstance(entry, RotationSlot)]
    if not axes:
        raise ValueError("ansatz has no parameterized gate")
    if not 0 <= gate_index < len(axes):
        raise ValueError(f"gate_index {gate_index} out of range [0, {len(axes)})")
    return axes[gate_index]


def sigma1_overlap(basis: SubspaceBasis, sigma: PauliString) -> float:
    """Average of Tr[sigma rho_j sigma rho_j] over the three training states.

    For pure rho_j this is the squared expectation <psi_j|sigma|psi_j>^2.
    """
    if basis.d != 2:
        raise ValueError("overlap term is defined for d = 2 subspaces only")
    mat = sigma.matrix()
    states, _ = basis.training_states("full")
    total = 0.0
    for psi in states:
        total += np.real(np.vdot(psi.amplitudes, mat @ psi.amplitudes)) ** 2
    return total / 3.0


def delta_phibar(basis: SubspaceBasis, ansatz: AnsatzSpec, params,
                 dt: float, hamiltonian: IsingParams,
                 gate_index: int = 0) -> float:
    """Overlap deficit of the evolved training states against sigma_1 flips.

    Computes (1/3) sum_j (|<psi_j|t_j>|^2 - |<psi_j sigma_1|t_j>|^2) with
    |t_j> = U(params)^dag T(dt) U(params) |psi_j> and T the exact
    propagator.  The default gate_index = 0 is the case the variance
    floor is proved for; other indices swap in later generators as an
    exploratory probe of the same trace expression.
    """
    if basis.d != 2:
        raise ValueError("deficit is defined for d = 2 subspaces only")
    if basis.n_qubits != ansatz.n_qubits:
        raise ValueError("basis and ansatz act on different register sizes")
    if dt < 0:
        raise ValueError("dt must be non-negative")
    sigma = _rotation_generator(ansatz, gate_index).matrix()
    unitary = ansatz_matrix(ansatz, params)
    walk = unitary.conj().T @ exact_propagator(hamiltonian, dt) @ unitary
    states, _ = basis.training_states("full")
    total = 0.0
    for psi in states:
        evolved = walk @ psi.amplitudes
        kept = np.vdot(psi.amplitudes, evolved)
        flipped = np.vdot(sigma @ psi.amplitudes, evolved)
        total += abs(kept) ** 2 - abs(flipped) ** 2
    return float(total / 3.0)


def prop2_bound(delta: float, moments: TrigMoments, M: int) -> float:
    """Variance floor with the overlap deficit kept exact.

    The unknown interference term ranges over [-1, 1]; its worst case is
    the squared distance from 0 to the interval
    [k^{M-1} delta - (1 - k^{M-1}), k^{M-1} delta + (1 - k^{M-1})],
    which is exactly 0 when the interval straddles the origin.
    """
    if M < 1:
        raise ValueError("parameter count M must be at least 1")
    shrink = moments.k_plus ** (M - 1)
    center = shrink * delta
    halfwidth = 1.0 - shrink
    if abs(center) <= halfwidth:
        return 0.0
    nearest = abs(center) - halfwidth
    return moments.variance_factor * nearest * nearest


def thm2_conditions(overlap_term: float, E_m: float, M: int, r0: float,
                    ) -> tuple[float, Callable[[float], float]]:
    """Admissibility windows for the coarse variance floor.

    Returns the largest admissible time step and a function mapping a
    time step to the largest admissible squared hypercube half-width.
    The overlap_term here is the (1/3)-averaged quantity from
    sigma1_overlap; the windows keep the deficit estimate positive, and
    an inadmissible configuration collapses to dt_max = 0 or r2_max = 0
    rather than producing an unsound floor.
    """
    if not -1.0 <= overlap_term <= 1.0:
        raise ValueError("overlap_term must lie in [-1, 1]")
    if not 0.0 < r0 < 1.0:
        raise ValueError("r0 must lie in (0, 1)")
    if M < 2:
        raise ValueError("parameter count M must be at least 2")
    abs_e = abs(E_m)
    discriminant = 3.0 - (2.0 / 3.0) * overlap_term
    if discriminant < 0.0:
        warnings.warn("overlap term leaves no admissible time step; "
                      "variance floor inapplicable", stacklevel=2)
        dt_max = 0.0
    elif abs_e == 0.0:
        dt_max = math.inf
    else:
        dt_max = (math.sqrt(discriminant) - 1.0) / (2.0 * abs_e)

    def r2_max_fn(dt: float) -> float:
        gap = 1.0 - overlap_term - 2.0 * abs_e * dt - 2.0 * E_m * E_m * dt * dt
        if gap <= 0.0:
            return 0.0
        return (3.0 * r0 * r0 / (M - 1)) * gap / (1.0 + gap)

    return dt_max, r2_max_fn


def thm2_bound(moments: TrigMoments, r0: float, overlap_term: float,
               E_m: float, dt: float, r: float,
               M: Optional[int] = None) -> float:
    """Coarse variance floor from the admissibility windows alone.

    Evaluates (4r^4/45)(1 - 4r^2/7)(1 - r0^2)^2 gap^2 with
    gap = 1 - overlap_term - 2|E_m| dt - 2 E_m^2 dt^2.  Returns 0.0
    (with a warning) whenever dt or r falls outside the windows of
    thm2_conditions; the r^2 window needs the parameter count, so it is
    only enforced when M is given.
    """
    if abs(moments.r - r) > 1e-12:
        raise ValueError("r disagrees with the radius the moments were built for")
    if M is None:
        dt_max, r2_max_fn = thm2_conditions(overlap_term, E_m, 2, r0)
        r2_max = math.inf
    else:
        dt_max, r2_max_fn = thm2_conditions(overlap_term, E_m, M, r0)
        r2_max = r2_max_fn(dt)
    if not dt < dt_max:
        warnings.warn("time step outside the admissible window; floor is 0",
                      stacklevel=2)
        return 0.0
    if r * r > r2_max:
        warnings.warn("hypercube radius outside the admissible window; floor is 0",
                      stacklevel=2)
        return 0.0
    gap = 1.0 - overlap_term - 2.0 * abs(E_m) * dt - 2.0 * E_m * E_m * dt * dt
    if gap <= 0.0:
        warnings.warn("overlap gap non-positive; floor is 0", stacklevel=2)
        return 0.0
    r2 = r * r
    prefactor = (4.0 * r2 * r2 / 45.0) * (1.0 - 4.0 * r2 / 7.0)
    shrink = 1.0 - r0 * r0
    return prefactor * shrink * shrink * gap * gap


def empirical_variance(cost_closure: Callable[[np.ndarray], float],
                       center, r: float, samples: int, seed: int,
                       ) -> tuple[float, float, float]:
    """Sample variance of the cost over the hypercube around center.

    Draws each sample from its own counter-derived RNG stream so the
    result is independent of evaluation order.  Returns (mean, unbiased
    variance, one-sided 99% confidence half-width for the variance).
    """
    if samples < 2:
        raise ValueError("variance estimation needs at least 2 samples")
    if r <= 0:
        raise ValueError("hypercube half-width r must be positive")
    center = np.asarray(center, dtype=np.float64).reshape(-1)
    values = np.empty(samples)
    for i in range(samples):
        rng = np.random.default_rng([seed, i])
        point = center + rng.uniform(-r, r, size=center.size)
        values[i] = float(cost_closure(point))
    mean = float(values.mean())
    variance = float(values.var(ddof=1))
    # Normal-theory standard error of s^2 via the fourth central moment.
    n = samples
    m4 = float(np.mean((values - mean) ** 4))
    se_sq = (m4 - variance * variance * (n - 3) / (n - 1)) / n
    ci = _Z99 * math.sqrt(max(se_sq, 0.0))
    return mean, variance, ci


@dataclass(frozen=True)
class WarmStartReport:
    """One evaluated warm-start configuration with both floors."""

    M: int
    r: float
    r0: float
    dt: float
    E_m: float
    sigma1: PauliString
    overlap_term: float
    delta: float
    dt_max: float
    r2_max: float
    prop2_bound: float
    thm2_bound: float
    empirical_variance: float
    empirical_ci: float
    sample_count: int

    def __post_init__(self):
        if self.prop2_bound < 0 or self.thm2_bound < 0:
            raise ValueError("variance floors must be non-negative")
        if self.thm2_bound > 0:
            if not (self.dt < self.dt_max and self.r * self.r <= self.r2_max):
                raise ValueError("positive coarse floor outside its admissibility window")


def evaluate_warmstart(basis: SubspaceBasis, ansatz: AnsatzSpec, params,
                       hamiltonian: IsingParams, dt: float, r: float,
                       r0: float, samples: int = 10_000, seed: int = 0,
                       ) -> WarmStartReport:
    """Evaluate both floors and the empirical variance at one configuration.

    The cost sampled over the hypercube is the single-step training cost
    around `params`, with targets built from the exact propagator: the
    same quantity the floors constrain.
    """
    params = np.asarray(params, dtype=np.float64).reshape(-1)
    sigma1 = _rotation_generator(ansatz, 0)
    overlap_term = sigma1_overlap(basis, sigma1)
    E_m = max_abs_energy(hamiltonian)
    delta = delta_phibar(basis, ansatz, params, dt, hamiltonian)
    moments = trig_moments(r)
    dt_max, r2_max_fn = thm2_conditions(overlap_term, E_m, ansatz.n_params, r0)
    r2_max = r2_max_fn(dt)
    prop2 = prop2_bound(delta, moments, ansatz.n_params)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        thm2 = thm2_bound(moments, r0, overlap_term, E_m, dt, r,
                          M=ansatz.n_params)

    propagator = exact_propagator(hamiltonian, dt)
    states, _ = basis.training_states("full")
    targets = [propagator @ apply_ansatz(psi, ansatz, params).amplitudes
               for psi in states]

    def cost(phi: np.ndarray) -> float:
        total = 0.0
        for psi, target in zip(states, targets):
            out = apply_ansatz(psi, ansatz, phi)
            total += abs(np.vdot(target, out.amplitudes)) ** 2
        return 1.0 - total / 3.0

    _, variance, ci = empirical_variance(cost, params, r, samples, seed)
    return WarmStartReport(
        M=ansatz.n_params, r=r, r0=r0, dt=dt, E_m=E_m, sigma1=sigma1,
        overlap_term=overlap_term, delta=delta, dt_max=dt_max,
        r2_max=r2_max, prop2_bound=prop2, thm2_bound=thm2,
        empirical_variance=variance, empirical_ci=ci, sample_count=samples)

"""Explicit sequences breaking the would-be stronger observability bounds.

Three families, indexed by k:

  concentrating   u_k = e^{-i|x|^2/4T} k^{n/2} g(k(x - x')): initial mass
                  collapses onto x', terminal mass spreads so the inside-ball
                  terminal energy decays like k^{-n};
  time_reversed   the state equal to g_k at time S1 (built with the backward
                  flow), whose outside-ball energy at S1 and time-integrated
                  inside-ball energy both vanish along k;
  modulated       u_k = e^{-i|x|^2/4T} e^{-i k x.v} g(x): the terminal bump
                  translates out of any fixed ball while every e^{a|x|}
                  weighted energy stays constant in k.

Terminal energies are evaluated on the chirp/rescale output lattice rather
than the periodic input box: the flowed states spread far beyond [-L, L]
for large k, where direct spectral propagation would wrap around.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Sequence

import numpy as np

from .field import Field, Grid, Region, Weight, ball, ball_complement, l2_norm, \
    masked_energy, weighted_energy_flagged
from .fitting import FitResult, loglog_fit
from .transform import dft, dual_solve, fresnel_map, propagate

FAMILIES = ("concentrating", "time_reversed", "modulated")
PROFILES = ("gaussian", "bump")


class ResolvabilityError(ValueError):
    """The requested index k is not representable on this grid."""


@dataclass(frozen=True)
class SequenceSpec:
    """One counterexample family instance (everything except the index k)."""

    family: str
    profile: str = "gaussian"
    x_prime: float = 0.0       # concentration center x'
    x_dprime: float = 0.0      # target ball center x'' (or x0 for modulated)
    r1: float = 1.0            # initial observation ball radius
    r2: float = 1.0            # terminal ball radius
    horizon: float = 1.0       # T, families concentrating / modulated
    s1: float = 0.5            # family time_reversed
    s2: float = 0.5
    direction: tuple = (1.0,)  # modulation direction v (normalized on use)
    weight_amplitude: float = 1.0  # a in the bounded e^{a|x|} clause

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}")
        if self.profile not in PROFILES:
            raise ValueError(f"unknown profile {self.profile!r}")


def _profile_values(profile: str, scaled_rsq: np.ndarray) -> np.ndarray:
    """Unit-scale smooth profile evaluated at |y|^2 = scaled_rsq."""
    if profile == "gaussian":
        return np.exp(-scaled_rsq / 2.0)
    # compactly supported bump exp(-1/(1-|y|^2)) on |y| < 1
    out = np.zeros_like(scaled_rsq)
    inside = scaled_rsq < 1.0
    out[inside] = np.exp(-1.0 / (1.0 - scaled_rsq[inside]))
    return out


def base_profile(grid: Grid, profile: str = "gaussian", center=0.0) -> Field:
    """The unit-norm profile g on the grid."""
    rsq = grid.radius_sq(center)
    values = _profile_values(profile, rsq)
    f = Field(grid, values.astype(np.complex128))
    return Field(grid, f.values / l2_norm(f))


def concentrated_profile(grid: Grid, spec: SequenceSpec, k: int) -> Field:
    """g_k = k^{n/2} g(k(x - x')), normalized on the lattice.

    Rejects k whose concentration width 1/k falls under four grid spacings.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    h = grid.spacing
    if 1.0 / k <= 4.0 * h:
        raise ResolvabilityError(
            f"concentration width 1/k = {1.0 / k:.4g} must exceed 4h = {4.0 * h:.4g}; "
            f"this grid resolves k <= {int(np.floor(1.0 / (4.0 * h)))}"
        )
    rsq = grid.radius_sq(spec.x_prime)
    values = float(k) ** (grid.dim / 2.0) * _profile_values(spec.profile, k * k * rsq)
    f = Field(grid, values.astype(np.complex128))
    return Field(grid, f.values / l2_norm(f))


def _chirp(grid: Grid, t: float) -> np.ndarray:
    return np.exp(-1j * grid.radius_sq() / (4.0 * t))


def _spread_radii(f: Field, mass_tol: float = 1e-12):
    """Spatial and spectral radii holding all but mass_tol of the energy."""
    def radius(values: np.ndarray, rsq: np.ndarray) -> float:
        energy = np.abs(values) ** 2
        order = np.argsort(rsq)
        cum = np.cumsum(energy[order])
        total = cum[-1]
        keep = np.searchsorted(cum, (1.0 - mass_tol) * total)
        return float(np.sqrt(rsq[order][min(keep, len(order) - 1)]))

    spatial = radius(f.values, f.grid.radius_sq())
    spec = dft(f)
    spectral = radius(spec.values, spec.grid.radius_sq())
    return spatial, spectral


def generate(spec: SequenceSpec, grid: Grid, k: int) -> Field:
    """The k-th member u_k of the family, unit L2 norm on the lattice."""
    if spec.family == "concentrating":
        g_k = concentrated_profile(grid, spec, k)
        return Field(grid, _chirp(grid, spec.horizon) * g_k.values)
    if spec.family == "modulated":
        if k < 0:
            raise ValueError("k must be >= 0 for the modulated family")
        if k >= grid.nyquist:
            raise ResolvabilityError(
                f"modulation frequency k = {k} must stay below the Nyquist "
                f"frequency {grid.nyquist:.4g}"
            )
        g = base_profile(grid, spec.profile)
        direction = np.atleast_1d(np.asarray(spec.direction, dtype=float))
        if direction.size != grid.dim or not np.linalg.norm(direction) > 0:
            raise ValueError("direction must be a nonzero vector matching the grid dim")
        direction = direction / np.linalg.norm(direction)
        x_dot_v = sum(axis * v for axis, v in zip(grid.coords(), direction))
        phase = np.exp(-1j * float(k) * x_dot_v)
        return Field(grid, _chirp(grid, spec.horizon) * phase * g.values)
    # time_reversed: the state whose value at time S1 is g_k
    g_k = concentrated_profile(grid, spec, k)
    spatial, spectral = _spread_radii(g_k)
    spread = spatial + 2.0 * spec.s1 * spectral
    if spread > 0.9 * grid.half_extent:
        raise ResolvabilityError(
            f"backward solve of g_k to time 0 spreads to ~{spread:.3g}, beyond "
            f"0.9L = {0.9 * grid.half_extent:.3g}; refine the box or lower k"
        )
    return dual_solve(g_k, spec.s1, 0.0)


def _ball_energy_at_time(g: Field, tau: float, region: Region) -> float:
    """Energy of the flow of g at time tau on `region`, routed to whichever of
    direct propagation (no box wrap) or the rescaled-lattice map (chirp
    resolvable) is valid; real g lets negative times reuse |tau| by time
    reversal."""
    if tau == 0.0:
        return masked_energy(g, region)
    if tau < 0.0:
        if np.abs(g.values.imag).max() > 1e-13 * np.abs(g.values).max():
            raise ValueError("negative-time shortcut needs a real profile")
        tau = -tau
    grid = g.grid
    spatial, spectral = _spread_radii(g)
    if spatial + 2.0 * tau * spectral <= 0.9 * grid.half_extent:
        return masked_energy(propagate(g, tau), region)
    center_reach = float(np.linalg.norm(np.atleast_1d(region.center))) + region.radius
    chirp_ok = spatial / (2.0 * tau) + spectral <= 0.95 * grid.nyquist
    covered = 2.0 * tau * grid.nyquist >= center_reach
    if not (chirp_ok and covered):
        raise ResolvabilityError(
            f"no valid route at time {tau:.4g}: direct flow would wrap and the "
            f"chirped transform is not resolvable (grid too coarse or box too small)"
        )
    return masked_energy(fresnel_map(g, tau), region)


@dataclass
class DecayStudy:
    family: str
    rows: List[Dict[str, float]]
    fits: Dict[str, FitResult]


def decay_study(spec: SequenceSpec, grid: Grid, k_values: Sequence[int],
                time_slices: int = 48) -> DecayStudy:
    """Per-k observables of the family plus log-log slope fits.

    concentrating: outside-ball energy of u_k at time 0 and inside-ball
        terminal energy (expected slope -n along k);
    time_reversed: outside-ball energy at S1 and the trapezoid time integral
        of the inside-ball energy over (0, S2) (>= 32 slices);
    modulated: inside-ball terminal energy and the e^{a|x|} weighted energy
        (constant in k).
    """
    rows: List[Dict[str, float]] = []
    dim = grid.dim
    if spec.family == "concentrating":
        outside = ball_complement(spec.x_prime, spec.r1, dim=dim)
        inside = ball(spec.x_dprime, spec.r2, dim=dim)
        for k in k_values:
            u_k = generate(spec, grid, k)
            terminal = fresnel_map(u_k, spec.horizon)
            rows.append({
                "k": float(k),
                "outside_initial": masked_energy(u_k, outside),
                "terminal_inside": masked_energy(terminal, inside),
            })
        fits = {"terminal_inside": loglog_fit(
            [r["k"] for r in rows], [r["terminal_inside"] for r in rows])}
    elif spec.family == "modulated":
        inside = ball(spec.x_dprime, spec.r2, dim=dim)
        weight = Weight(spec.weight_amplitude, 1.0, "grow")
        for k in k_values:
            u_k = generate(spec, grid, k)
            terminal = fresnel_map(u_k, spec.horizon)
            weighted, _ = weighted_energy_flagged(u_k, weight)
            rows.append({
                "k": float(k),
                "terminal_inside": masked_energy(terminal, inside),
                "weighted": weighted,
            })
        fits = {}
    else:  # time_reversed
        if time_slices < 32:
            raise ValueError("the time integral needs at least 32 slices")
        outside = ball_complement(spec.x_prime, spec.r1, dim=dim)
        inside = ball(spec.x_dprime, spec.r2, dim=dim)
        times = np.linspace(0.0, spec.s2, time_slices + 1)
        for k in k_values:
            g_k = concentrated_profile(grid, spec, k)
            energies = [_ball_energy_at_time(g_k, t - spec.s1, inside) for t in times]
            integral = float(np.trapezoid(energies, times))
            rows.append({
                "k": float(k),
                "outside_at_s1": masked_energy(g_k, outside),
                "time_integral_inside": integral,
            })
        fits = {}
    return DecayStudy(spec.family, rows, fits)

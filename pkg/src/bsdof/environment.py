"""Synthetic passive multiport environments for controlled experiments.

Environments are dense i.i.d. complex-Gaussian scattering matrices rescaled
to a target spectral norm eta < 1 (strictly passive), with the mutual
coupling between the loaded ports dialed separately through mc_strength.
A ladder of decreasing strengths emulates the transition from a rich
reverberant environment down to nearly free space.
"""

from dataclasses import dataclass, replace

import numpy as np

from .network import ScatteringSystem
from .streams import standard_complex_gaussian, substream


@dataclass(frozen=True)
class EnvironmentSpec:
    """Recipe for one synthetic environment.

    scattering_strength is the target spectral norm of the full matrix;
    mc_strength scales the mutual-coupling block of the loaded ports after
    the global scaling (0 removes coupling, 1 leaves it untouched).
    """

    n_t: int
    n_r: int
    n_s: int
    scattering_strength: float
    mc_strength: float = 1.0
    reciprocal: bool = False
    seed: int = 0

    def __post_init__(self):
        for name in ("n_t", "n_r", "n_s"):
            if int(getattr(self, name)) < 1:
                raise ValueError(f"{name} must be at least 1")
        if not 0.0 <= self.scattering_strength < 1.0:
            raise ValueError(
                f"scattering_strength {self.scattering_strength} outside [0, 1)"
            )
        if not 0.0 <= self.mc_strength <= 1.0:
            raise ValueError(f"mc_strength {self.mc_strength} outside [0, 1]")
        if int(self.seed) < 0:
            raise ValueError("seed must be nonnegative")

    @property
    def n_total(self) -> int:
        return self.n_t + self.n_r + self.n_s


def synth_environment(spec: EnvironmentSpec) -> ScatteringSystem:
    """Draw the environment described by spec; deterministic in spec.seed.

    Ports are assigned contiguously: tx first, then rx, then the loaded
    ports.  The Gaussian draw uses the package's fixed Box-Muller path, so
    the same spec reproduces the same matrix on any platform.
    """
    n = spec.n_total
    stream = substream(spec.seed)
    a = standard_complex_gaussian(stream, (n, n))
    if spec.reciprocal:
        a = 0.5 * (a + a.T)
    norm = float(np.linalg.norm(a, 2))
    a = a * (spec.scattering_strength / norm)
    bs = slice(spec.n_t + spec.n_r, n)
    a[bs, bs] = a[bs, bs] * spec.mc_strength
    norm_after = float(np.linalg.norm(a, 2))
    if norm_after > spec.scattering_strength and norm_after > 0.0:
        a = a * (spec.scattering_strength / norm_after)
    return ScatteringSystem(
        n_total=n,
        matrix=a,
        tx_ports=tuple(range(spec.n_t)),
        rx_ports=tuple(range(spec.n_t, spec.n_t + spec.n_r)),
        bs_ports=tuple(range(spec.n_t + spec.n_r, n)),
    )


def zero_mc(system: ScatteringSystem) -> ScatteringSystem:
    """Copy of the system with the loaded-port coupling block zeroed.

    Idempotent; the result is re-validated (zeroing a principal block keeps
    the matrix passive).
    """
    matrix = system.matrix.copy()
    matrix[np.ix_(list(system.bs_ports), list(system.bs_ports))] = 0.0
    return ScatteringSystem(
        n_total=system.n_total,
        matrix=matrix,
        tx_ports=system.tx_ports,
        rx_ports=system.rx_ports,
        bs_ports=system.bs_ports,
        reference_impedance=system.reference_impedance,
    )


def environment_ladder(base_spec: EnvironmentSpec, strengths) -> list[ScatteringSystem]:
    """Family of environments sharing base_spec's seed and geometry.

    strengths must be nonincreasing and inside [0, 1); rung k gets
    scattering_strength = strengths[k] and mc_strength scaled by
    strengths[k] / strengths[0], so coupling fades together with the
    overall scattering.
    """
    strengths = [float(s) for s in strengths]
    if not strengths:
        raise ValueError("strengths must be nonempty")
    if any(b > a for a, b in zip(strengths, strengths[1:])):
        raise ValueError(f"strengths must be nonincreasing, got {strengths}")
    if strengths[0] <= 0.0:
        raise ValueError("leading strength must be positive")
    systems = []
    for eta in strengths:
        rung = replace(
            base_spec,
            scattering_strength=eta,
            mc_strength=base_spec.mc_strength * eta / strengths[0],
        )
        systems.append(synth_environment(rung))
    return systems

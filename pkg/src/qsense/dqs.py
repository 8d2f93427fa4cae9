"""Distributed-sensing probe states and their closed-form sensitivity limits.

Two network layouts are supported.  With local phase references each of the d
sensors holds a mode pair (a_j, b_j) and the encoding generator is the
half-difference of the pair's particle numbers; modes are laid out
sensor-major as (a_1, b_1, a_2, b_2, ...).  With a global phase reference the
network has d + 1 modes, mode 0 being the shared reference, and the generator
of the j-th phase is the particle number of mode j.

Probe families (local reference unless noted):

  MSPS              product over sensors of N independent single-particle
                    superpositions; reaches the shot-noise limit 1/(m N_T).
  MSPE              product of per-sensor NOON states; d/(m N_T^2) for the
                    average phase.
  MEPS              N_T independent particles, each spread uniformly over all
                    sensor modes; mode-entangled but still shot-noise limited.
  MEPE              all-or-nothing superposition across the whole network;
                    1/(m N_T^2) for the average phase (rank-one information).
  GENERALIZED_NOON  global-reference state with one branch per sensing mode;
                    sum of phase variances d (sqrt(d)+1)^2 / (4 N_T^2 m).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .core import (
    FockBasis,
    SparseMultimodeState,
    ValidationError,
)
from .bounds import FisherMatrix, pseudo_inverse, qfim_pure

FAMILIES = ("MSPS", "MSPE", "MEPS", "MEPE", "GENERALIZED_NOON")
LOCAL = "local"
GLOBAL = "global"


@dataclass(frozen=True)
class SensorNetwork:
    """Layout of a d-sensor network: reference type and particle budget."""

    sensors: int
    reference: str
    particles: int  # per-sensor N for local reference, total N_T for global

    def __post_init__(self):
        if self.sensors < 1:
            raise ValidationError("need at least one sensor")
        if self.reference not in (LOCAL, GLOBAL):
            raise ValidationError(f"unknown reference type {self.reference!r}")
        if self.particles < 1:
            raise ValidationError("need at least one particle")

    @property
    def modes(self) -> int:
        return 2 * self.sensors if self.reference == LOCAL else self.sensors + 1

    @property
    def total_particles(self) -> int:
        return self.particles * self.sensors if self.reference == LOCAL else self.particles


def local_sensor_network(sensors: int, particles_per_sensor: int) -> SensorNetwork:
    return SensorNetwork(sensors, LOCAL, particles_per_sensor)


def local_network_from_total(sensors: int, total_particles: int) -> SensorNetwork:
    """Equal split N = N_T / d; non-integer splits are rejected, not rounded."""
    if total_particles % sensors != 0:
        raise ValidationError(
            f"total particle number {total_particles} does not split equally over "
            f"{sensors} sensors"
        )
    return SensorNetwork(sensors, LOCAL, total_particles // sensors)


def global_sensor_network(sensors: int, total_particles: int) -> SensorNetwork:
    return SensorNetwork(sensors, GLOBAL, total_particles)


@dataclass(frozen=True)
class ProbeSpec:
    """A probe family on a network; MEPE may carry a branch sign pattern."""

    family: str
    network: SensorNetwork
    signs: tuple[int, ...] | None = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValidationError(f"unknown probe family {self.family!r}")
        needs_global = self.family == "GENERALIZED_NOON"
        if needs_global != (self.network.reference == GLOBAL):
            raise ValidationError(
                f"family {self.family} is incompatible with a "
                f"{self.network.reference}-reference network"
            )
        if self.signs is not None:
            if self.family != "MEPE":
                raise ValidationError("sign patterns apply to MEPE probes only")
            signs = tuple(int(s) for s in self.signs)
            if len(signs) != self.network.sensors or any(s not in (-1, 1) for s in signs):
                raise ValidationError("signs must be one entry of +-1 per sensor")
            object.__setattr__(self, "signs", signs)


def phase_generators(network: SensorNetwork) -> list[Callable[[tuple[int, ...]], float]]:
    """Occupation-diagonal encoding generators, one per sensor."""
    if network.reference == LOCAL:
        return [
            (lambda n, j=j: 0.5 * (n[2 * j] - n[2 * j + 1]))
            for j in range(network.sensors)
        ]
    return [(lambda n, j=j: float(n[j])) for j in range(1, network.sensors + 1)]


def nu_average(d: int) -> np.ndarray:
    """The average-phase direction (1, ..., 1)/d."""
    return np.full(d, 1.0 / d)


def build_probe(spec: ProbeSpec) -> SparseMultimodeState:
    """Construct the probe state of a family on its network, exactly normalised."""
    net = spec.network
    d, n = net.sensors, net.particles
    basis = FockBasis(net.modes, net.total_particles)
    amps: dict[tuple[int, ...], complex] = {}

    if spec.family == "MSPS":
        # per sensor: N particles, each in (a + b)/sqrt(2); binomial amplitudes
        per_sensor = [
            ((k, n - k), math.sqrt(math.comb(n, k)) / 2 ** (n / 2.0)) for k in range(n + 1)
        ]
        for combo in itertools.product(per_sensor, repeat=d):
            occ = tuple(x for pair, _ in combo for x in pair)
            amp = math.prod(a for _, a in combo)
            amps[occ] = amp

    elif spec.family == "MSPE":
        branch = [((n, 0), 1.0 / math.sqrt(2.0)), ((0, n), 1.0 / math.sqrt(2.0))]
        for combo in itertools.product(branch, repeat=d):
            occ = tuple(x for pair, _ in combo for x in pair)
            amps[occ] = math.prod(a for _, a in combo)

    elif spec.family == "MEPS":
        # N_T particles, each in the uniform superposition over all 2d modes
        n_t = net.total_particles
        modes = net.modes
        for occ in basis.occupations:
            multinom = math.factorial(n_t)
            for k in occ:
                multinom //= math.factorial(k)
            amps[occ] = math.sqrt(multinom) / modes ** (n_t / 2.0)

    elif spec.family == "MEPE":
        signs = spec.signs or (1,) * d
        up = tuple(x for s in signs for x in ((n, 0) if s > 0 else (0, n)))
        down = tuple(x for s in signs for x in ((0, n) if s > 0 else (n, 0)))
        amps[up] = 1.0 / math.sqrt(2.0)
        amps[down] = 1.0 / math.sqrt(2.0)

    else:  # GENERALIZED_NOON
        n_t = net.total_particles
        head = 1.0 / math.sqrt(1.0 + math.sqrt(d))
        tail = 1.0 / math.sqrt(d + math.sqrt(d))
        occ0 = (n_t,) + (0,) * d
        amps[occ0] = head
        for j in range(1, d + 1):
            occ = tuple(n_t if i == j else 0 for i in range(d + 1))
            amps[occ] = tail

    return SparseMultimodeState(basis, amps)


def _matches(nu: np.ndarray, target: np.ndarray, atol: float = 1e-12) -> bool:
    return bool(np.abs(nu - target).max() <= atol or np.abs(nu + target).max() <= atol)


def closed_form_sensitivity(spec: ProbeSpec, nu, m: int = 1) -> float:
    """Best attainable variance of the requested combination for this family.

    Local-reference families support the average-phase direction (and, for
    MEPE, the sign pattern matching the probe's branches); the global
    generalized NOON branch returns the sum of single-phase variances and
    ignores nu.
    """
    if m < 1:
        raise ValidationError("repetition count m must be >= 1")
    net = spec.network
    d = net.sensors
    n_t = net.total_particles

    if spec.family == "GENERALIZED_NOON":
        return d * (math.sqrt(d) + 1.0) ** 2 / (4.0 * n_t**2 * m)

    nu = np.atleast_1d(np.asarray(nu, dtype=float))
    if len(nu) != d:
        raise ValidationError("direction length does not match the sensor count")

    if spec.family in ("MSPS", "MEPS"):
        if _matches(nu, nu_average(d)):
            return 1.0 / (m * n_t)
    elif spec.family == "MSPE":
        if _matches(nu, nu_average(d)):
            return d / (m * n_t**2)
    else:  # MEPE
        signs = np.array(spec.signs or (1,) * d, dtype=float)
        if _matches(nu, signs / d):
            return 1.0 / (m * n_t**2)
    raise ValidationError(
        f"no closed form for family {spec.family} with direction {nu.tolist()}"
    )


def probe_to_json(state: SparseMultimodeState) -> dict[str, list[float]]:
    """Serialise a probe as occupation string -> [re, im] amplitude pairs."""
    return {
        ",".join(str(k) for k in occ): [amp.real, amp.imag]
        for occ, amp in sorted(state.amplitudes.items())
    }


def probe_from_json(payload: dict, basis: FockBasis) -> SparseMultimodeState:
    """Inverse of probe_to_json on a given Fock basis."""
    amps = {}
    for key, (re, im) in payload.items():
        occ = tuple(int(x) for x in key.split(","))
        amps[occ] = complex(re, im)
    return SparseMultimodeState(basis, amps)


def gain(nu) -> float:
    """Entanglement gain of the all-or-nothing strategy over per-sensor NOON states.

    Equals (sum |nu_j|^(2/3))^3 / (sum |nu_j|)^2: one for a single-parameter
    direction, d for the average phase; invariant under rescaling of nu.
    """
    v = np.abs(np.atleast_1d(np.asarray(nu, dtype=float)))
    total = v.sum()
    if total == 0.0:
        raise ValidationError("direction vector must be nonzero")
    return float(np.power(v, 2.0 / 3.0).sum() ** 3 / total**2)


@dataclass(frozen=True)
class ProbeCheck:
    """Closed form vs first-principles QFIM evaluation of one probe."""

    closed_form: float | None
    qfim_value: float | None
    relative_deviation: float | None
    inestimable: bool
    qfim: FisherMatrix


def verify_probe(spec: ProbeSpec, nu, m: int = 1) -> ProbeCheck:
    """Cross-validate a closed-form sensitivity against the probe's QFIM.

    Directions outside the information support are reported as inestimable
    instead of producing a finite (meaningless) number.
    """
    probe = build_probe(spec)
    gens = phase_generators(spec.network)
    fisher = qfim_pure(probe, gens)
    fplus = pseudo_inverse(fisher).matrix

    if spec.family == "GENERALIZED_NOON":
        value = float(np.trace(fplus)) / m
        closed = closed_form_sensitivity(spec, None, m)
        return ProbeCheck(closed, value, abs(value - closed) / closed, False, fisher)

    v = np.atleast_1d(np.asarray(nu, dtype=float))
    leak = float(np.linalg.norm(v - fisher.support @ v)) / float(np.linalg.norm(v))
    if leak > 1e-8:
        return ProbeCheck(None, None, None, True, fisher)
    value = float(v @ fplus @ v) / m
    closed = closed_form_sensitivity(spec, v, m)
    return ProbeCheck(closed, value, abs(value - closed) / closed, False, fisher)

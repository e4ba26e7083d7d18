"""Shared configuration/state types for the samplers and oracles."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidBondConfig
from .lattice import MAG_EXPONENT, BoundaryCondition, LatticeDomain


@dataclass(frozen=True)
class SimParams:
    """Model and run parameters.

    h is the continuum field strength; the lattice field is H = h * a**(15/8).
    Negative h is unsupported (spin-flip symmetry is not wired in).
    """

    beta: float
    h: float = 0.0
    a: float = 1.0
    sweeps: int = 1000
    burn_in: int = 100
    seed: int = 0
    chain_id: int = 0

    def __post_init__(self):
        if self.beta < 0:
            raise ValueError("beta must be nonnegative")
        if self.h < 0:
            raise ValueError("negative h is unsupported; use spin-flip symmetry externally")
        if self.a <= 0:
            raise ValueError("a must be positive")
        if self.h > 0 and self.h > self.a ** (-MAG_EXPONENT) * (1 + 1e-12):
            # outside the near-critical decay hypothesis h <= a^(-15/8)
            # (equivalently lattice field H <= 1); still a valid Ising model
            import warnings
            warnings.warn("h exceeds a**(-15/8): outside the near-critical "
                          "window, scaling-law estimates do not apply",
                          stacklevel=2)
        if self.sweeps <= 0 or self.burn_in < 0:
            raise ValueError("sweeps must be positive, burn_in nonnegative")

    @property
    def H(self) -> float:
        """Lattice external field."""
        return self.h * self.a ** MAG_EXPONENT

    @property
    def p(self) -> float:
        """FK open-edge probability 1 - exp(-2*beta)."""
        return -np.expm1(-2.0 * self.beta)

    def rng(self) -> np.random.Generator:
        """Stream derived from (seed, chain_id); independent across chains."""
        return np.random.default_rng(np.random.SeedSequence([self.seed, self.chain_id]))


@dataclass
class SpinConfig:
    """Per-site spins in {-1, +1}, indexed like domain sites."""

    domain: LatticeDomain
    values: np.ndarray

    def __post_init__(self):
        self.values = np.ascontiguousarray(self.values, dtype=np.int8)
        if self.values.shape != (self.domain.n_sites,):
            raise ValueError("spin array shape does not match domain")

    @classmethod
    def all_plus(cls, domain: LatticeDomain) -> "SpinConfig":
        return cls(domain, np.ones(domain.n_sites, dtype=np.int8))

    @classmethod
    def random(cls, domain: LatticeDomain, rng: np.random.Generator) -> "SpinConfig":
        vals = rng.integers(0, 2, size=domain.n_sites).astype(np.int8) * 2 - 1
        return cls(domain, vals)

    def bare_magnetization(self) -> int:
        return int(self.values.sum())


@dataclass
class BondConfig:
    """Per-edge occupation in {0, 1} over internal-then-external edges."""

    domain: LatticeDomain
    values: np.ndarray

    def __post_init__(self):
        self.values = np.ascontiguousarray(self.values, dtype=np.uint8)
        if self.values.shape != (self.domain.n_edges,):
            raise ValueError("bond array shape does not match domain")

    @classmethod
    def all_closed(cls, domain: LatticeDomain) -> "BondConfig":
        return cls(domain, np.zeros(domain.n_edges, dtype=np.uint8))

    @property
    def internal(self) -> np.ndarray:
        return self.values[: self.domain.n_internal]

    @property
    def external(self) -> np.ndarray:
        return self.values[self.domain.n_internal:]

    def n_open(self) -> int:
        return int(self.values.sum())

    def check_bc(self, bc: BoundaryCondition):
        if bc is BoundaryCondition.FREE and self.external.any():
            raise InvalidBondConfig("free boundary condition requires closed external edges")

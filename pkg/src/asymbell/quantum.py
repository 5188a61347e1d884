"""Two-qubit states and Born-rule click probabilities for qubit observables.

Basis order is |00>, |01>, |10>, |11>. A setting is a unit Bloch vector
``(sin a cos phi, sin a sin phi, cos a)``; with ``phi = 0`` the observable is
``cos(a) sz + sin(a) sx``, i.e. a direction in the (x, z) plane. Outcome "0"
is the +1 eigenvalue, with projector ``(1 + O) / 2``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-12
PSD_TOL = 1e-10

I2 = np.eye(2, dtype=complex)
SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
SZ = np.array([[1, 0], [0, -1]], dtype=complex)
PAULIS = (SX, SY, SZ)


class DomainError(ValueError):
    """An input lies outside the domain an operation is defined on."""


def _check_probability(name: str, value: float) -> float:
    value = float(value)
    if not 0.0 <= value <= 1.0 or np.isnan(value):
        raise DomainError(f"{name} must lie in [0, 1], got {value!r}")
    return value


def _check_theta(theta: float) -> float:
    theta = float(theta)
    if not 0.0 <= theta <= np.pi / 4 + 1e-15:
        raise DomainError(f"theta must lie in [0, pi/4], got {theta!r}")
    return theta


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """A validated, immutable 4x4 two-qubit density matrix.

    The input is symmetrized to ``(rho + rho^dag) / 2`` before the trace and
    positivity checks, so tiny asymmetries from floating point arithmetic
    never leak into probabilities.
    """

    entries: np.ndarray

    def __post_init__(self):
        m = np.array(self.entries, dtype=complex)
        if m.shape != (4, 4):
            raise DomainError(f"density matrix must be 4x4, got shape {m.shape}")
        if np.max(np.abs(m - m.conj().T)) > 1e-9:
            raise DomainError("density matrix is not Hermitian")
        m = (m + m.conj().T) / 2
        if abs(np.trace(m).real - 1.0) > TRACE_TOL:
            raise DomainError(f"density matrix has trace {np.trace(m).real!r}")
        if np.linalg.eigvalsh(m).min() < -PSD_TOL:
            raise DomainError("density matrix is not positive semidefinite")
        m.setflags(write=False)
        object.__setattr__(self, "entries", m)

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.entries, dtype=dtype)

    def expectation(self, op: np.ndarray) -> float:
        return float(np.trace(op @ self.entries).real)

    def correlators(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Return local Bloch vectors and the 3x3 correlation tensor.

        ``a[k] = Tr[rho (s_k x 1)]``, ``b[l] = Tr[rho (1 x s_l)]`` and
        ``T[k, l] = Tr[rho (s_k x s_l)]`` with ``s = (sx, sy, sz)``.
        """
        a = np.array([self.expectation(np.kron(s, I2)) for s in PAULIS])
        b = np.array([self.expectation(np.kron(I2, s)) for s in PAULIS])
        t = np.array([[self.expectation(np.kron(s, r)) for r in PAULIS] for s in PAULIS])
        return a, b, t

    def allclose(self, other, atol: float = 1e-12) -> bool:
        return bool(np.allclose(self.entries, np.asarray(other), atol=atol, rtol=0))


@dataclass(frozen=True)
class Setting:
    """A dichotomic qubit measurement given by Bloch angles (radians).

    ``angle`` is the polar angle measured from +z; ``azimuth`` rotates out of
    the (x, z) plane and is zero for planar settings.
    """

    angle: float
    azimuth: float = 0.0

    @property
    def direction(self) -> np.ndarray:
        a, phi = self.angle, self.azimuth
        return np.array([np.sin(a) * np.cos(phi), np.sin(a) * np.sin(phi), np.cos(a)])

    def observable(self) -> np.ndarray:
        n = self.direction
        return n[0] * SX + n[1] * SY + n[2] * SZ

    def projector(self, outcome: int = 0) -> np.ndarray:
        sign = 1.0 if outcome == 0 else -1.0
        return (I2 + sign * self.observable()) / 2


def wrap_angle(angle):
    """Map angles into (-pi, pi]."""
    wrapped = np.pi - np.mod(np.pi - np.asarray(angle, dtype=float), 2 * np.pi)
    return wrapped if np.ndim(wrapped) else float(wrapped)


@dataclass(frozen=True)
class MeasurementSettings:
    alice: tuple[Setting, ...]
    bob: tuple[Setting, ...]

    def __post_init__(self):
        object.__setattr__(self, "alice", tuple(self.alice))
        object.__setattr__(self, "bob", tuple(self.bob))
        if not self.alice or not self.bob:
            raise DomainError("each party needs at least one setting")

    @classmethod
    def planar(cls, alpha: Sequence[float], beta: Sequence[float], *, in_pi: bool = False):
        """Build (x, z)-plane settings from angle lists.

        With ``in_pi=True`` angles are read as multiples of pi, e.g. ``-0.0012``
        means ``-0.0012 * pi``.
        """
        scale = np.pi if in_pi else 1.0
        return cls(tuple(Setting(scale * float(a)) for a in alpha),
                   tuple(Setting(scale * float(b)) for b in beta))

    @classmethod
    def from_vector(cls, x: np.ndarray, na: int, nb: int, *, full_bloch: bool = False):
        """Inverse of :meth:`to_vector`."""
        x = np.asarray(x, dtype=float)
        if full_bloch:
            pol, az = x[: na + nb], x[na + nb:]
            al = [Setting(float(pol[i]), float(az[i])) for i in range(na)]
            bo = [Setting(float(pol[na + j]), float(az[na + j])) for j in range(nb)]
            return cls(tuple(al), tuple(bo))
        return cls(tuple(Setting(float(a)) for a in x[:na]),
                   tuple(Setting(float(b)) for b in x[na:na + nb]))

    def to_vector(self, *, full_bloch: bool = False) -> np.ndarray:
        pol = [s.angle for s in self.alice + self.bob]
        if not full_bloch:
            return np.array(pol)
        return np.array(pol + [s.azimuth for s in self.alice + self.bob])

    @property
    def shape(self) -> tuple[int, int]:
        return len(self.alice), len(self.bob)

    def in_units_of_pi(self) -> tuple[list[float], list[float]]:
        return ([wrap_angle(s.angle) / np.pi for s in self.alice],
                [wrap_angle(s.angle) / np.pi for s in self.bob])


@dataclass(frozen=True)
class NoiseParams:
    """Parameters of the noisy state families."""

    theta: float = np.pi / 4
    background_p: float = 0.0
    dark_a: float = 0.0
    dark_b: float = 0.0

    def __post_init__(self):
        _check_theta(self.theta)
        _check_probability("background_p", self.background_p)
        _check_probability("dark_a", self.dark_a)
        _check_probability("dark_b", self.dark_b)


@dataclass(frozen=True)
class ProbabilityTable:
    """Click probabilities p(00|A_i B_j), p(0|A_i) and p(0|B_j)."""

    joint: np.ndarray
    alice_marginals: np.ndarray
    bob_marginals: np.ndarray

    def __post_init__(self):
        joint = np.atleast_2d(np.array(self.joint, dtype=float))
        pa = np.atleast_1d(np.array(self.alice_marginals, dtype=float))
        pb = np.atleast_1d(np.array(self.bob_marginals, dtype=float))
        if joint.shape != (pa.size, pb.size):
            raise ValueError(f"joint table {joint.shape} does not match marginals "
                             f"({pa.size}, {pb.size})")
        for arr in (joint, pa, pb):
            arr.setflags(write=False)
        object.__setattr__(self, "joint", joint)
        object.__setattr__(self, "alice_marginals", pa)
        object.__setattr__(self, "bob_marginals", pb)

    @property
    def shape(self) -> tuple[int, int]:
        return self.joint.shape

    def is_valid(self, tol: float = 1e-10) -> bool:
        """Entries in [0, 1] and each joint bounded by both of its marginals."""
        arrays = (self.joint, self.alice_marginals, self.bob_marginals)
        if any(np.any(x < -tol) or np.any(x > 1 + tol) for x in arrays):
            return False
        cap = np.minimum(self.alice_marginals[:, None], self.bob_marginals[None, :])
        return bool(np.all(self.joint <= cap + tol))

    @classmethod
    def zeros(cls, na: int, nb: int) -> "ProbabilityTable":
        return cls(np.zeros((na, nb)), np.zeros(na), np.zeros(nb))


def pure_entangled_state(theta: float) -> DensityMatrix:
    """Projector onto ``cos(theta)|00> + sin(theta)|11>``, theta in [0, pi/4]."""
    theta = _check_theta(theta)
    psi = np.zeros(4)
    psi[0], psi[3] = np.cos(theta), np.sin(theta)
    return DensityMatrix(np.outer(psi, psi))


def background_noise_state(theta: float, p: float) -> DensityMatrix:
    """Mixture ``(1 - p)|psi_theta><psi_theta| + p * 1/4``."""
    p = _check_probability("p", p)
    pure = pure_entangled_state(theta).entries
    return DensityMatrix((1 - p) * pure + p * np.eye(4) / 4)


def dark_count_state(theta: float, eps_a: float, eps_b: float) -> DensityMatrix:
    """State seen through detectors that err with probabilities eps_a, eps_b.

    An error replaces that party's qubit by the maximally mixed state. The
    four branches are weighted ``(1-ea)(1-eb)``, ``ea(1-eb)``, ``(1-ea)eb`` and
    ``ea*eb`` so that the result has unit trace.
    """
    ea = _check_probability("eps_a", eps_a)
    eb = _check_probability("eps_b", eps_b)
    pure = pure_entangled_state(theta)
    rho_a = partial_trace(pure, "A")
    rho_b = partial_trace(pure, "B")
    m = ((1 - ea) * (1 - eb) * pure.entries
         + ea * (1 - eb) * np.kron(I2 / 2, rho_b)
         + (1 - ea) * eb * np.kron(rho_a, I2 / 2)
         + ea * eb * np.eye(4) / 4)
    rho = DensityMatrix(m)
    assert abs(np.trace(rho.entries).real - 1) <= TRACE_TOL
    return rho


def partial_trace(rho: DensityMatrix, party: str) -> np.ndarray:
    """Reduced 2x2 state of ``party`` ("A" or "B")."""
    m = np.asarray(rho, dtype=complex).reshape(2, 2, 2, 2)
    if party.upper() == "A":
        out = np.einsum("ijkj->ik", m)
    elif party.upper() == "B":
        out = np.einsum("jijk->ik", m)
    else:
        raise DomainError(f"party must be 'A' or 'B', got {party!r}")
    return (out + out.conj().T) / 2


def click_probabilities(rho: DensityMatrix, settings: MeasurementSettings) -> ProbabilityTable:
    """Born-rule probabilities of outcome "0" for every setting and setting pair."""
    m = np.asarray(rho, dtype=complex)
    pa_ops = [s.projector(0) for s in settings.alice]
    pb_ops = [s.projector(0) for s in settings.bob]
    joint = np.array([[np.trace(np.kron(pa, pb) @ m).real for pb in pb_ops] for pa in pa_ops])
    alice = np.array([np.trace(np.kron(pa, I2) @ m).real for pa in pa_ops])
    bob = np.array([np.trace(np.kron(I2, pb) @ m).real for pb in pb_ops])
    clip = lambda v: np.clip(v, 0.0, 1.0)
    return ProbabilityTable(clip(joint), clip(alice), clip(bob))


def outcome_distribution(rho: DensityMatrix, settings: MeasurementSettings) -> np.ndarray:
    """Full distribution ``p[i, j, a, b] = p(a, b | A_i, B_j)``."""
    m = np.asarray(rho, dtype=complex)
    na, nb = settings.shape
    out = np.empty((na, nb, 2, 2))
    for i, sa in enumerate(settings.alice):
        for j, sb in enumerate(settings.bob):
            for a in (0, 1):
                for b in (0, 1):
                    op = np.kron(sa.projector(a), sb.projector(b))
                    out[i, j, a, b] = np.trace(op @ m).real
    out = np.clip(out, 0.0, None)
    return out / out.sum(axis=(2, 3), keepdims=True)


def bloch_directions(polar: np.ndarray, azimuth: np.ndarray | None = None) -> np.ndarray:
    """Unit vectors for arrays of angles; output has a trailing axis of size 3."""
    polar = np.asarray(polar, dtype=float)
    if azimuth is None:
        zeros = np.zeros_like(polar)
        return np.stack([np.sin(polar), zeros, np.cos(polar)], axis=-1)
    s = np.sin(polar)
    return np.stack([s * np.cos(azimuth), s * np.sin(azimuth), np.cos(polar)], axis=-1)


def click_tables_from_correlators(a, b, t, u, v):
    """Batched click probabilities from correlators.

    ``u`` has shape (..., na, 3) and ``v`` (..., nb, 3). Returns
    ``(joint, pa, pb)`` with shapes (..., na, nb), (..., na), (..., nb).
    Used by the optimizer; :func:`click_probabilities` is the reference.
    """
    ua = u @ a
    vb = v @ b
    corr = np.einsum("...ik,kl,...jl->...ij", u, t, v)
    joint = (1 + ua[..., :, None] + vb[..., None, :] + corr) / 4
    return joint, (1 + ua) / 2, (1 + vb) / 2

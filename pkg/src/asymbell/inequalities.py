"""Bell polynomials in Clauser-Horne (probability) form."""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .quantum import ProbabilityTable

MAX_BRUTEFORCE_SETTINGS = 8


class PolynomialError(ValueError):
    """A polynomial file could not be parsed or failed validation."""


@dataclass(frozen=True, eq=False)
class BellPolynomial:
    """Coefficients of ``sum c_ij P(00|A_i B_j) + sum d_i P(0|A_i) + sum e_j P(0|B_j)``.

    ``local_bound`` is the maximum over local hidden variable models.
    """

    joint_coeffs: np.ndarray
    alice_coeffs: np.ndarray
    bob_coeffs: np.ndarray
    local_bound: float = 0.0
    name: str = "custom"

    def __post_init__(self):
        joint = np.atleast_2d(np.array(self.joint_coeffs, dtype=float))
        alice = np.atleast_1d(np.array(self.alice_coeffs, dtype=float))
        bob = np.atleast_1d(np.array(self.bob_coeffs, dtype=float))
        if joint.ndim != 2 or joint.shape != (alice.size, bob.size):
            raise PolynomialError(f"coefficient shapes disagree: joint {joint.shape}, "
                                  f"alice {alice.shape}, bob {bob.shape}")
        if min(joint.shape) < 1:
            raise PolynomialError("need at least one setting per party")
        for arr in (joint, alice, bob):
            arr.setflags(write=False)
        object.__setattr__(self, "joint_coeffs", joint)
        object.__setattr__(self, "alice_coeffs", alice)
        object.__setattr__(self, "bob_coeffs", bob)
        object.__setattr__(self, "local_bound", float(self.local_bound))

    @property
    def shape(self) -> tuple[int, int]:
        return self.joint_coeffs.shape

    def __eq__(self, other):
        if not isinstance(other, BellPolynomial):
            return NotImplemented
        return (self.shape == other.shape
                and np.array_equal(self.joint_coeffs, other.joint_coeffs)
                and np.array_equal(self.alice_coeffs, other.alice_coeffs)
                and np.array_equal(self.bob_coeffs, other.bob_coeffs)
                and self.local_bound == other.local_bound)

    def __hash__(self):
        return hash((self.name, self.joint_coeffs.tobytes(), self.local_bound))

    def swap_parties(self) -> "BellPolynomial":
        return BellPolynomial(self.joint_coeffs.T, self.bob_coeffs, self.alice_coeffs,
                              self.local_bound, f"{self.name}^T")


def chsh() -> BellPolynomial:
    """CHSH in Clauser-Horne form; local bound 0, quantum maximum 1/sqrt(2) - 1/2."""
    return BellPolynomial([[1, 1], [1, -1]], [-1, 0], [-1, 0], 0.0, "chsh")


def i3322() -> BellPolynomial:
    """The three-setting inequality I3322; local bound 0, quantum maximum 1/4."""
    return BellPolynomial([[1, 1, 1], [1, 1, -1], [1, -1, 0]], [-2, -1, 0], [-1, 0, 0],
                          0.0, "i3322")


BUILTIN = {"chsh": chsh, "i3322": i3322}


def evaluate(poly: BellPolynomial, probs: ProbabilityTable) -> float:
    if probs.shape != poly.shape:
        raise ValueError(f"probability table {probs.shape} does not match "
                         f"polynomial {poly.shape}")
    return float(np.sum(poly.joint_coeffs * probs.joint)
                 + poly.alice_coeffs @ probs.alice_marginals
                 + poly.bob_coeffs @ probs.bob_marginals)


def deterministic_table(alice_outputs, bob_outputs) -> ProbabilityTable:
    """Probability table of a local deterministic strategy."""
    za = (np.asarray(alice_outputs) == 0).astype(float)
    zb = (np.asarray(bob_outputs) == 0).astype(float)
    return ProbabilityTable(np.outer(za, zb), za, zb)


def all_outputs(n: int) -> np.ndarray:
    """Every deterministic output map on ``n`` settings, shape (2**n, n).

    Row order is lexicographic, so row 0 is "always output 0".
    """
    return np.array(list(itertools.product((0, 1), repeat=n)), dtype=int).reshape(-1, n)


def strategy_values(poly: BellPolynomial) -> np.ndarray:
    """Polynomial value for every pair of deterministic strategies.

    Entry ``[s, t]`` pairs Alice's ``all_outputs(na)[s]`` with Bob's
    ``all_outputs(nb)[t]``.
    """
    na, nb = poly.shape
    za = (all_outputs(na) == 0).astype(float)
    zb = (all_outputs(nb) == 0).astype(float)
    return (za @ poly.joint_coeffs @ zb.T
            + (za @ poly.alice_coeffs)[:, None]
            + (zb @ poly.bob_coeffs)[None, :])


def lhv_bound_bruteforce(poly: BellPolynomial) -> float:
    """Maximum over all deterministic local strategies.

    Deterministic strategies are the vertices of the local polytope, so this
    is the exact local bound. Refuses more than 8 settings per party.
    """
    if max(poly.shape) > MAX_BRUTEFORCE_SETTINGS:
        raise ValueError(f"brute force limited to {MAX_BRUTEFORCE_SETTINGS} settings "
                         f"per party, got {poly.shape}")
    return float(strategy_values(poly).max())


_LINE = re.compile(r"^\s*([A-Za-z_]+)((?:\s+\d+)*)\s*=\s*(.*?)\s*$")


def parse_polynomial(text: str) -> BellPolynomial:
    """Parse the plain-text polynomial format; see :func:`load_polynomial`."""
    name = "custom"
    na = nb = None
    bound = None
    entries: list[tuple[str, tuple[int, ...], float, int]] = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        m = _LINE.match(line)
        if m is None:
            raise PolynomialError(f"line {lineno}: cannot parse {raw!r}")
        key, idx, value = m.group(1).lower(), tuple(int(t) for t in m.group(2).split()), m.group(3)
        try:
            if key == "name" and not idx:
                name = value
            elif key in ("na", "nb") and not idx:
                n = int(value)
                if n < 1:
                    raise PolynomialError(f"line {lineno}: {key} must be >= 1")
                na, nb = (n, nb) if key == "na" else (na, n)
            elif key == "bound" and not idx:
                bound = float(value)
            elif (key == "joint" and len(idx) == 2) or (key in ("alice", "bob") and len(idx) == 1):
                entries.append((key, idx, float(value), lineno))
            else:
                raise PolynomialError(f"line {lineno}: unexpected entry {raw!r}")
        except ValueError as exc:
            if isinstance(exc, PolynomialError):
                raise
            raise PolynomialError(f"line {lineno}: bad value in {raw!r}") from exc
    if na is None or nb is None:
        raise PolynomialError("file must declare both na and nb")

    joint, alice, bob = np.zeros((na, nb)), np.zeros(na), np.zeros(nb)
    for key, idx, value, lineno in entries:
        limits = {"joint": (na, nb), "alice": (na,), "bob": (nb,)}[key]
        if any(not 1 <= k <= lim for k, lim in zip(idx, limits)):
            raise PolynomialError(f"line {lineno}: index {idx} out of range for {key}")
        target = {"joint": joint, "alice": alice, "bob": bob}[key]
        target[tuple(k - 1 for k in idx)] = value

    poly = BellPolynomial(joint, alice, bob, 0.0 if bound is None else bound, name)
    if max(na, nb) <= MAX_BRUTEFORCE_SETTINGS:
        actual = lhv_bound_bruteforce(poly)
        if bound is None:
            poly = BellPolynomial(joint, alice, bob, actual, name)
        elif not np.isclose(actual, bound, rtol=0, atol=1e-9):
            raise PolynomialError(f"declared bound {bound} differs from brute-force "
                                  f"local bound {actual}")
    elif bound is None:
        raise PolynomialError("polynomials with more than 8 settings must declare a bound")
    return poly


def load_polynomial(path) -> BellPolynomial:
    """Read a polynomial file.

    Format (UTF-8, ``#`` starts a comment line)::

        name = chsh
        na = 2
        nb = 2
        joint 1 1 = 1
        alice 1 = -1
        bob 1 = -1
        bound = 0

    Indices are 1-based and absent coefficients are zero. A declared bound is
    checked against brute-force enumeration when both parties have at most
    8 settings; without a declaration the brute-force bound is used.
    """
    return parse_polynomial(Path(path).read_text(encoding="utf-8"))


def format_polynomial(poly: BellPolynomial) -> str:
    na, nb = poly.shape
    lines = [f"name = {poly.name}", f"na = {na}", f"nb = {nb}"]
    for i in range(na):
        for j in range(nb):
            if poly.joint_coeffs[i, j]:
                lines.append(f"joint {i + 1} {j + 1} = {poly.joint_coeffs[i, j]:.17g}")
    lines += [f"alice {i + 1} = {c:.17g}" for i, c in enumerate(poly.alice_coeffs) if c]
    lines += [f"bob {j + 1} = {c:.17g}" for j, c in enumerate(poly.bob_coeffs) if c]
    lines.append(f"bound = {poly.local_bound:.17g}")
    return "\n".join(lines) + "\n"


def resolve_polynomial(spec: str) -> BellPolynomial:
    """Built-in name (``chsh``, ``i3322``) or path to a polynomial file."""
    if spec.lower() in BUILTIN:
        return BUILTIN[spec.lower()]()
    return load_polynomial(spec)

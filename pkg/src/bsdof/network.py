"""Multiport scattering model of a load-modulated backscatter link.

An N-port scattering matrix is partitioned into transmitter (T), receiver (R)
and backscatter (S) port groups.  Terminating the S ports with reflective
loads r turns the network into an end-to-end channel

    H(r) = S_RT + S_RS G(r) diag(r) S_ST,   G(r) = (I - diag(r) S_SS)^-1,

where the coupling resolvent G captures multiple scattering between the
loaded ports.  The map r -> H(r) x is holomorphic and its Jacobian has the
closed form

    J(r0, x) = S_RS G(r0) diag(W(r0) x),
    W(r)     = S_SS G(r) diag(r) S_ST + S_ST,

with W x the wave incident on the loads under illumination x.  Single-load
changes update G and H at O(N_S^2) cost through a rank-1 Sherman-Morrison
step instead of a fresh O(N_S^3) factorization.
"""

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import PartitionError, PassivityError, SingularityError

# Spectral-norm slack when validating passivity of a loaded matrix.
PASSIVITY_TOL = 1e-9

# Resolvent solves below this reciprocal condition number are rejected.
RCOND_MIN = 1e-12

# Unit-norm slack for illumination vectors.
UNIT_NORM_TOL = 1e-12


def validate_loads(r: np.ndarray, n_s: int | None = None) -> np.ndarray:
    """Coerce and validate a load reflection-coefficient vector.

    Entries must have magnitude <= 1 (unit modulus allowed).  Returns the
    coerced complex array.
    """
    r = np.atleast_1d(np.asarray(r, dtype=complex))
    if r.ndim != 1:
        raise ValueError(f"load vector must be 1-d, got shape {r.shape}")
    if n_s is not None and r.size != n_s:
        raise ValueError(f"expected {n_s} load entries, got {r.size}")
    if not np.all(np.isfinite(r)):
        raise ValueError("load vector contains non-finite entries")
    mags = np.abs(r)
    if np.any(mags > 1.0 + 1e-4):  # slack for rounded measured coefficients
        worst = int(np.argmax(mags))
        raise ValueError(
            f"load magnitude {mags[worst]:.6g} at index {worst} exceeds 1"
        )
    return r


def validate_illumination(x: np.ndarray, n_t: int | None = None) -> np.ndarray:
    """Coerce and validate a unit-norm illumination vector."""
    x = np.atleast_1d(np.asarray(x, dtype=complex))
    if x.ndim != 1:
        raise ValueError(f"illumination must be 1-d, got shape {x.shape}")
    if n_t is not None and x.size != n_t:
        raise ValueError(f"expected {n_t} illumination entries, got {x.size}")
    norm = np.linalg.norm(x)
    if abs(norm - 1.0) > UNIT_NORM_TOL:
        raise ValueError(f"illumination norm {norm!r} is not 1 within {UNIT_NORM_TOL}")
    return x


def _validate_port_group(name: str, ports, n_total: int) -> tuple:
    ports = tuple(int(p) for p in ports)
    if len(ports) == 0:
        raise PartitionError(f"{name} is empty")
    if len(set(ports)) != len(ports):
        raise PartitionError(f"{name} contains duplicate indices: {ports}")
    for p in ports:
        if p < 0 or p >= n_total:
            raise PartitionError(f"{name} index {p} out of range for {n_total} ports")
    return ports


@dataclass
class ScatteringSystem:
    """An N-port scattering matrix with a declared role for each used port.

    Port index lists are 0-based and ordered; their order fixes the row and
    column order of every extracted block.  The reference impedance is
    metadata only and never enters any computation.
    """

    n_total: int
    matrix: np.ndarray
    tx_ports: tuple
    rx_ports: tuple
    bs_ports: tuple
    reference_impedance: float = 50.0

    def __post_init__(self):
        self.n_total = int(self.n_total)
        self.matrix = np.asarray(self.matrix, dtype=complex)
        if self.matrix.shape != (self.n_total, self.n_total):
            raise ValueError(
                f"matrix shape {self.matrix.shape} does not match n_total={self.n_total}"
            )
        if not np.all(np.isfinite(self.matrix)):
            raise ValueError("scattering matrix contains non-finite entries")
        self.tx_ports = _validate_port_group("tx_ports", self.tx_ports, self.n_total)
        self.rx_ports = _validate_port_group("rx_ports", self.rx_ports, self.n_total)
        self.bs_ports = _validate_port_group("bs_ports", self.bs_ports, self.n_total)
        groups = self.tx_ports + self.rx_ports + self.bs_ports
        if len(set(groups)) != len(groups):
            raise PartitionError("port groups overlap")
        norm = float(np.linalg.norm(self.matrix, 2))
        if norm > 1.0 + PASSIVITY_TOL:
            raise PassivityError(f"spectral norm {norm:.12g} exceeds 1 (not passive)")
        self.reference_impedance = float(self.reference_impedance)

    @property
    def n_tx(self) -> int:
        return len(self.tx_ports)

    @property
    def n_rx(self) -> int:
        return len(self.rx_ports)

    @property
    def n_bs(self) -> int:
        return len(self.bs_ports)


@dataclass
class ScatteringBlocks:
    """The four sub-blocks of a partitioned scattering matrix.

    s_rt: rx-by-tx direct link, s_rs: rx-by-bs, s_ss: bs-by-bs mutual
    coupling, s_st: bs-by-tx.
    """

    s_rt: np.ndarray
    s_rs: np.ndarray
    s_ss: np.ndarray
    s_st: np.ndarray

    def __post_init__(self):
        self.s_rt = np.asarray(self.s_rt, dtype=complex)
        self.s_rs = np.asarray(self.s_rs, dtype=complex)
        self.s_ss = np.asarray(self.s_ss, dtype=complex)
        self.s_st = np.asarray(self.s_st, dtype=complex)
        n_r, n_t = self.s_rt.shape
        n_s = self.s_ss.shape[0]
        if self.s_ss.shape != (n_s, n_s):
            raise ValueError(f"s_ss must be square, got {self.s_ss.shape}")
        if self.s_rs.shape != (n_r, n_s):
            raise ValueError(f"s_rs shape {self.s_rs.shape} inconsistent with ({n_r}, {n_s})")
        if self.s_st.shape != (n_s, n_t):
            raise ValueError(f"s_st shape {self.s_st.shape} inconsistent with ({n_s}, {n_t})")

    @property
    def n_tx(self) -> int:
        return self.s_rt.shape[1]

    @property
    def n_rx(self) -> int:
        return self.s_rt.shape[0]

    @property
    def n_bs(self) -> int:
        return self.s_ss.shape[0]


@dataclass
class Jacobian:
    """A load-to-output Jacobian together with its singular spectrum."""

    matrix: np.ndarray
    singular_values: np.ndarray

    def __post_init__(self):
        self.matrix = np.asarray(self.matrix, dtype=complex)
        self.singular_values = np.asarray(self.singular_values, dtype=float)
        if np.any(np.diff(self.singular_values) > 0):
            raise ValueError("singular values must be nonincreasing")


def extract_blocks(system: ScatteringSystem) -> ScatteringBlocks:
    """Slice the four channel blocks out of a partitioned system.

    Row and column order follow the declared port lists.
    """
    s = system.matrix
    rx = list(system.rx_ports)
    tx = list(system.tx_ports)
    bs = list(system.bs_ports)
    return ScatteringBlocks(
        s_rt=s[np.ix_(rx, tx)],
        s_rs=s[np.ix_(rx, bs)],
        s_ss=s[np.ix_(bs, bs)],
        s_st=s[np.ix_(bs, tx)],
    )


def coupling_resolvent(s_ss: np.ndarray, r: np.ndarray) -> np.ndarray:
    """G(r) = (I - diag(r) S_SS)^-1 via LU with partial pivoting.

    Raises SingularityError when the system matrix is singular or its
    reciprocal condition number falls below RCOND_MIN.  The reciprocal
    condition number is the exact 1-norm value 1 / (||A||_1 ||A^-1||_1),
    which is free once the dense inverse is in hand.
    """
    s_ss = np.asarray(s_ss, dtype=complex)
    r = np.asarray(r, dtype=complex)
    n = s_ss.shape[0]
    eye = np.eye(n, dtype=complex)
    a = eye - r[:, None] * s_ss
    try:
        g = np.linalg.solve(a, eye)
    except np.linalg.LinAlgError as exc:
        raise SingularityError("coupling resolvent is exactly singular", rcond=0.0) from exc
    rcond = 1.0 / (np.linalg.norm(a, 1) * np.linalg.norm(g, 1))
    if rcond < RCOND_MIN:
        raise SingularityError(
            f"coupling resolvent ill-conditioned: rcond {rcond:.3e} < {RCOND_MIN:.0e}",
            rcond=rcond,
        )
    return g


def _channel_from_resolvent(blocks: ScatteringBlocks, g: np.ndarray, r: np.ndarray) -> np.ndarray:
    return blocks.s_rt + blocks.s_rs @ (g * r[None, :]) @ blocks.s_st


def end_to_end_channel(blocks: ScatteringBlocks, r: np.ndarray) -> np.ndarray:
    """H(r) = S_RT + S_RS G(r) diag(r) S_ST.

    At r = 0 the loaded term vanishes identically and H equals S_RT.
    """
    r = np.asarray(r, dtype=complex)
    g = coupling_resolvent(blocks.s_ss, r)
    return _channel_from_resolvent(blocks, g, r)


def output_wavefront(h: np.ndarray, x: np.ndarray) -> np.ndarray:
    """y = H x for a unit-norm illumination x."""
    x = validate_illumination(x, n_t=np.asarray(h).shape[1])
    return np.asarray(h, dtype=complex) @ x


def illumination_matrix(blocks: ScatteringBlocks, r: np.ndarray) -> np.ndarray:
    """W(r) = S_SS G(r) diag(r) S_ST + S_ST.

    W(r) x is the wave incident on the loads, including all re-scattering.
    """
    r = np.asarray(r, dtype=complex)
    g = coupling_resolvent(blocks.s_ss, r)
    return blocks.s_ss @ (g * r[None, :]) @ blocks.s_st + blocks.s_st


def closed_form_jacobian(blocks: ScatteringBlocks, r0: np.ndarray, x: np.ndarray) -> Jacobian:
    """Derivative of r -> H(r) x at r0: J = S_RS G(r0) diag(W(r0) x).

    The illumination must be unit-norm.  Column j is the sensitivity of the
    received wavefront to load j; all columns live in the column space of
    S_RS, so the load count never raises the wavefront diversity above what
    the receive coupling supports.
    """
    r0 = np.asarray(r0, dtype=complex)
    x = validate_illumination(x, n_t=blocks.n_tx)
    g = coupling_resolvent(blocks.s_ss, r0)
    w = blocks.s_ss @ (g * r0[None, :]) @ blocks.s_st + blocks.s_st
    drive = w @ x
    jac = (blocks.s_rs @ g) * drive[None, :]
    sv = np.linalg.svd(jac, compute_uv=False)
    return Jacobian(matrix=jac, singular_values=sv)


def b_factor(blocks: ScatteringBlocks, r0: np.ndarray, x: np.ndarray) -> np.ndarray:
    """The load-side factor B = G(r0) diag(W(r0) x), so that J = S_RS B."""
    r0 = np.asarray(r0, dtype=complex)
    x = validate_illumination(x, n_t=blocks.n_tx)
    g = coupling_resolvent(blocks.s_ss, r0)
    w = blocks.s_ss @ (g * r0[None, :]) @ blocks.s_st + blocks.s_st
    return g * (w @ x)[None, :]


def woodbury_channel_update(
    blocks: ScatteringBlocks,
    base_resolvent: np.ndarray,
    base_r: np.ndarray,
    changed_index: int,
    new_value: complex,
) -> tuple[np.ndarray, np.ndarray]:
    """Rank-1 update of (G, H) when a single load changes value.

    Changing load k from r_k to r_k + delta perturbs A = I - diag(r) S_SS by
    -delta e_k S_SS[k, :], so Sherman-Morrison gives

        G' = G + (delta / (1 - delta t_k)) G[:, k] (S_SS[k, :] G),

    with t_k = (S_SS G)[k, k].  Returns (G', H') at O(N_S^2) cost.  Raises
    SingularityError when |1 - delta t_k| < RCOND_MIN.
    """
    g = np.asarray(base_resolvent, dtype=complex)
    r = np.asarray(base_r, dtype=complex)
    n_s = g.shape[0]
    k = int(changed_index)
    if k < 0 or k >= n_s:
        raise IndexError(f"changed_index {k} out of range for {n_s} loads")
    delta = complex(new_value) - r[k]
    r_new = r.copy()
    r_new[k] = new_value
    if delta == 0:
        return g.copy(), _channel_from_resolvent(blocks, g, r_new)
    t_row = blocks.s_ss[k, :] @ g
    denom = 1.0 - delta * t_row[k]
    if abs(denom) < RCOND_MIN:
        raise SingularityError(
            f"rank-1 update denominator {abs(denom):.3e} below {RCOND_MIN:.0e}",
            rcond=abs(denom),
        )
    g_new = g + (delta / denom) * np.outer(g[:, k], t_row)
    return g_new, _channel_from_resolvent(blocks, g_new, r_new)


def system_to_dict(system: ScatteringSystem) -> dict:
    """JSON-ready dict; complex entries as [re, im] pairs, row-major."""
    flat = system.matrix.ravel(order="C")
    return {
        "n_total": system.n_total,
        "tx_ports": list(system.tx_ports),
        "rx_ports": list(system.rx_ports),
        "bs_ports": list(system.bs_ports),
        "reference_impedance_ohms": system.reference_impedance,
        "matrix": [[float(z.real), float(z.imag)] for z in flat],
    }


def system_from_dict(payload: dict) -> ScatteringSystem:
    n = int(payload["n_total"])
    entries = payload["matrix"]
    if len(entries) != n * n:
        raise ValueError(f"matrix has {len(entries)} entries, expected {n * n}")
    flat = np.array([complex(re, im) for re, im in entries], dtype=complex)
    return ScatteringSystem(
        n_total=n,
        matrix=flat.reshape(n, n),
        tx_ports=payload["tx_ports"],
        rx_ports=payload["rx_ports"],
        bs_ports=payload["bs_ports"],
        reference_impedance=payload.get("reference_impedance_ohms", 50.0),
    )


def save_system(system: ScatteringSystem, path) -> None:
    Path(path).write_text(json.dumps(system_to_dict(system)))


def load_system(path) -> ScatteringSystem:
    """Read a system file; validation (partition, passivity) runs on load."""
    return system_from_dict(json.loads(Path(path).read_text()))

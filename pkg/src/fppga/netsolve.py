"""Frequency-domain scattering solver for programmed meshes.

Unknowns are the fields leaving every internal port. With ``S_blk`` the
block-diagonal TBU scattering matrix and ``P`` the connection permutation,

    x = S_ii P x + S_ie e          (I - A) x = b,  A = S_ii P
    y = S_ei P x + S_ee e

where ``i``/``e`` index internal/external ports. Each TBU maps its A-end
ports to its B-end ports with ``T`` and back with ``T.T``; off TBUs map
everything to zero.
"""

from __future__ import annotations

import csv
import io
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
import scipy.linalg
import scipy.linalg.lapack
import scipy.sparse
import scipy.sparse.linalg

from .errors import SingularSystemError
from .mesh import Mesh, Program, port_name
from .tbu import DEFAULT_LENGTH_M, DEFAULT_LOSS_DB, mode_settings, tbu_transfer

C0 = 299_792_458.0
DENSE_LIMIT = 2000
# Lossless loops exactly on resonance are singular in exact arithmetic but only
# nearly so in floating point; below this reciprocal condition number the
# system is reported as singular.
RCOND_LIMIT = 1e-10


@dataclass(frozen=True)
class WaveguideParams:
    """Waveguide constants shared by every TBU.

    The propagation phase over one TBU is linearized around ``f_ref_hz``:
    ``beta L = 2 pi L / c * (n_eff f_ref + n_g (f - f_ref))``. ``n_eff``
    therefore sets the absolute phase and ``n_g`` the delay, so ring
    resonances repeat every ``c / (n_g L_loop)``.
    """

    n_eff: float = 2.44
    n_g: float = 4.18
    propagation_loss_db_per_cm: float = 0.0
    tbu_length_m: float = DEFAULT_LENGTH_M
    tbu_loss_db: float = DEFAULT_LOSS_DB
    f_ref_hz: float = 193.1e12

    def __post_init__(self):
        if not (self.n_eff > 0 and self.n_g > 0):
            raise ValueError("indices must be positive")
        if not self.propagation_loss_db_per_cm >= 0 or not self.tbu_loss_db >= 0:
            raise ValueError("losses must be non-negative")
        if not self.tbu_length_m > 0:
            raise ValueError("TBU length must be positive")

    @classmethod
    def lossless(cls, **kw) -> "WaveguideParams":
        return cls(propagation_loss_db_per_cm=0.0, tbu_loss_db=0.0, **kw)

    def phase(self, f_hz):
        """Propagation phase (radians) accumulated over one TBU."""
        f = np.asarray(f_hz, dtype=float)
        return 2 * math.pi * self.tbu_length_m / C0 * (self.n_eff * self.f_ref_hz + self.n_g * (f - self.f_ref_hz))

    def propagation(self, f_hz) -> complex:
        """Complex field factor of one TBU length, excluding insertion loss."""
        amp = 10.0 ** (-self.propagation_loss_db_per_cm * self.tbu_length_m * 100.0 / 20.0)
        return amp * np.exp(-1j * self.phase(f_hz))

    def fsr(self, loop_tbus: int) -> float:
        return C0 / (self.n_g * loop_tbus * self.tbu_length_m)


@dataclass(frozen=True)
class FrequencyGrid:
    start_hz: float
    stop_hz: float
    points: int = 1

    def __post_init__(self):
        if self.points < 1:
            raise ValueError("a frequency grid needs at least one point")
        if self.points > 1 and not self.start_hz < self.stop_hz:
            raise ValueError("start must be below stop for multi-point grids")

    def frequencies(self) -> np.ndarray:
        if self.points == 1:
            return np.array([float(self.start_hz)])
        return np.linspace(self.start_hz, self.stop_hz, self.points)


@dataclass(frozen=True)
class SParams:
    """Scattering matrices over a grid: ``s[k, i, j]`` is input j -> output i."""

    frequencies: np.ndarray
    s: np.ndarray
    ports: tuple

    def port_names(self, mesh: Mesh):
        return [mesh.external_name(p) for p in self.ports]

    def transfer(self, mesh: Mesh, out_port, in_port) -> np.ndarray:
        i = self.ports.index(mesh.resolve_port(out_port))
        j = self.ports.index(mesh.resolve_port(in_port))
        return self.s[:, i, j]


def tbu_matrices(mesh: Mesh, program: Program, params: WaveguideParams):
    """Static per-TBU transfers (insertion loss included, propagation not)."""
    program.validate(mesh)
    mats = {}
    for t, mode in program.modes.items():
        mats[t] = tbu_transfer(mode_settings(mode), params.tbu_loss_db)
    return mats


@dataclass
class LinearSystem:
    """``(I - A) x = B e`` with outputs ``y = C x + D e`` at one frequency."""

    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    d: np.ndarray
    internal_ports: tuple
    external_ports: tuple

    @property
    def size(self) -> int:
        return self.a.shape[0]


class _Network:
    """Frequency-independent part of the assembly, reused across a sweep."""

    def __init__(self, mesh: Mesh, program: Program, params: WaveguideParams):
        self.mesh = mesh
        self.params = params
        n_ports = 4 * mesh.tbu_count
        s_blk = np.zeros((n_ports, n_ports), dtype=complex)
        for t, T in tbu_matrices(mesh, program, params).items():
            a_idx = [4 * t, 4 * t + 1]
            b_idx = [4 * t + 2, 4 * t + 3]
            s_blk[np.ix_(b_idx, a_idx)] = T
            s_blk[np.ix_(a_idx, b_idx)] = T.T
        internal = sorted(p for c in mesh.connections for p in c)
        external = list(mesh.external_ports)
        pos = {p: k for k, p in enumerate(internal)}
        perm = np.zeros((len(internal), len(internal)))
        for p, q in mesh.connections:
            # field leaving p enters q and vice versa
            perm[pos[q], pos[p]] = 1.0
            perm[pos[p], pos[q]] = 1.0
        s_ii = s_blk[np.ix_(internal, internal)]
        self.a0 = s_ii @ perm
        self.b0 = s_blk[np.ix_(internal, external)]
        self.c0 = s_blk[np.ix_(external, internal)] @ perm
        self.d0 = s_blk[np.ix_(external, external)]
        self.internal = tuple(internal)
        self.external = tuple(external)

    def system(self, f_hz: float) -> LinearSystem:
        # Every TBU has the same length, so propagation is a common scalar.
        p = complex(self.params.propagation(f_hz))
        return LinearSystem(p * self.a0, p * self.b0, p * self.c0, p * self.d0,
                            self.internal, self.external)

    def solve(self, f_hz: float, index: Optional[int] = None) -> np.ndarray:
        sys = self.system(f_hz)
        n = sys.size
        if n == 0:
            return sys.d
        m = np.eye(n) - sys.a
        try:
            if n <= DENSE_LIMIT:
                with warnings.catch_warnings():
                    warnings.simplefilter("error", scipy.linalg.LinAlgWarning)
                    lu, piv = scipy.linalg.lu_factor(m, check_finite=False)
                    gecon, = scipy.linalg.lapack.get_lapack_funcs(("gecon",), (lu,))
                    rcond, _ = gecon(lu, np.linalg.norm(m, 1))
                    if not rcond >= RCOND_LIMIT:
                        raise np.linalg.LinAlgError
                    x = scipy.linalg.lu_solve((lu, piv), sys.b, check_finite=False)
            else:
                x = scipy.sparse.linalg.splu(scipy.sparse.csc_matrix(m)).solve(sys.b)
            if not np.all(np.isfinite(x)):
                raise np.linalg.LinAlgError
        except (np.linalg.LinAlgError, scipy.linalg.LinAlgWarning, RuntimeError):
            raise SingularSystemError(f_hz, index) from None
        return sys.c @ x + sys.d


def assemble(mesh: Mesh, program: Program, params: WaveguideParams, f_hz: float) -> LinearSystem:
    return _Network(mesh, program, params).system(f_hz)


def solve(mesh: Mesh, program: Program, params: WaveguideParams, f_hz: float) -> np.ndarray:
    """External-port scattering matrix, ordered like ``mesh.external_ports``."""
    return _Network(mesh, program, params).solve(f_hz)


def sweep(mesh: Mesh, program: Program, params: WaveguideParams, grid: FrequencyGrid,
          workers: int = 1) -> SParams:
    net = _Network(mesh, program, params)
    freqs = grid.frequencies()
    if workers > 1 and len(freqs) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            mats = list(pool.map(net.solve, freqs, range(len(freqs))))
    else:
        mats = [net.solve(f, k) for k, f in enumerate(freqs)]
    return SParams(freqs, np.array(mats), net.external)


CSV_HEADER = ("frequency_hz", "out_port", "in_port", "re", "im", "mag_db", "phase_rad")


def spectrum_csv(mesh: Mesh, sp: SParams, out_ports: Optional[Sequence[int]] = None,
                 in_ports: Optional[Sequence[int]] = None) -> str:
    """One row per (frequency, output, input); ports named ``P<k>``."""
    outs = list(sp.ports) if out_ports is None else list(out_ports)
    ins = list(sp.ports) if in_ports is None else list(in_ports)
    col = {p: k for k, p in enumerate(sp.ports)}
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for k, f in enumerate(sp.frequencies):
        for po in outs:
            for pi in ins:
                z = complex(sp.s[k, col[po], col[pi]])
                mag = abs(z)
                mag_db = 20.0 * math.log10(mag) if mag > 0 else float("-inf")
                w.writerow((repr(float(f)), mesh.external_name(po), mesh.external_name(pi),
                            repr(z.real), repr(z.imag), repr(mag_db), repr(math.atan2(z.imag, z.real))))
    return buf.getvalue()


__all__ = [
    "C0", "WaveguideParams", "FrequencyGrid", "SParams", "LinearSystem",
    "assemble", "solve", "sweep", "spectrum_csv", "tbu_matrices", "port_name",
]

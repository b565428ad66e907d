"""Derivative-free search for illuminations that shape the mean DOF metric.

The objective is the mean participation number over a frozen set of load
realizations (common random numbers), so every candidate illumination sees
the same Monte-Carlo noise and the landscape is deterministic.  Candidates
live on the complex unit sphere; the search runs in the real embedding
R^{2 n_t} and projects back inside the objective wrapper, which also makes
the objective invariant to the global phase and scale of the raw iterate.

Maximization and minimization share one code path: MAX minimizes the
negated objective.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .errors import DegenerateInputError, OptimizationFailedError, SingularityError
from .loads import LOAD_MAG_TOL, LoadConstraint, sample_loads
from .network import ScatteringSystem, coupling_resolvent, extract_blocks
from .sampling import sample_random_illumination
from .streams import substream

# Substream key namespaces under the optimization seed.
_LOADSET_KEY = 0
_START_KEY = 1
_REDRAW_KEY = 2

# Raw iterates shorter than this cannot be projected onto the sphere.
DEGENERATE_NORM = 1e-30

_DIRECTIONS = ("MAX", "MIN")


@dataclass(frozen=True)
class OptimizationConfig:
    direction: str = "MAX"
    n_objective_samples: int = 1500
    n_starts: int = 3
    max_iterations: int = 2000
    x_tolerance: float = 1e-6
    f_tolerance: float = 1e-8
    seed: int = 0
    redraw_per_evaluation: bool = False

    def __post_init__(self):
        if self.direction not in _DIRECTIONS:
            raise ValueError(f"direction must be MAX or MIN, got {self.direction!r}")
        if self.n_objective_samples < 1 or self.n_starts < 1 or self.max_iterations < 1:
            raise ValueError("sample, start and iteration counts must be positive")
        if self.x_tolerance <= 0 or self.f_tolerance <= 0:
            raise ValueError("tolerances must be positive")
        if int(self.seed) < 0:
            raise ValueError("seed must be nonnegative")


@dataclass
class OptimizationResult:
    best_x: np.ndarray
    best_objective: float
    per_start_trace: list = field(default_factory=list)
    objective_evaluations: int = 0


def embed(x: np.ndarray) -> np.ndarray:
    """Complex illumination -> stacked real vector [Re(x); Im(x)]."""
    x = np.atleast_1d(np.asarray(x, dtype=complex))
    return np.concatenate([x.real, x.imag])


def project(v: np.ndarray) -> np.ndarray:
    """Real vector -> unit-norm complex illumination.

    Raises DegenerateInputError below the projectable-norm floor.
    """
    v = np.atleast_1d(np.asarray(v, dtype=float))
    if v.size % 2 != 0:
        raise ValueError(f"embedded vector length {v.size} is odd")
    half = v.size // 2
    x = v[:half] + 1j * v[half:]
    norm = np.linalg.norm(x)
    if norm < DEGENERATE_NORM:
        raise DegenerateInputError(f"cannot project vector of norm {norm!r} onto the sphere")
    return x / norm


def _resolvent_ok(s_ss: np.ndarray | None, r: np.ndarray) -> bool:
    if s_ss is None:
        return True
    try:
        coupling_resolvent(s_ss, r)
    except SingularityError:
        return False
    return True


def _draw_members(
    gen: np.random.Generator,
    constraint: LoadConstraint,
    n_s: int,
    n_members: int,
    s_ss: np.ndarray | None,
    first: int = 0,
) -> np.ndarray:
    members = np.empty((n_members, n_s), dtype=complex)
    for i in range(n_members):
        for _ in range(1001):
            r = sample_loads(constraint, n_s, gen)
            if _resolvent_ok(s_ss, r):
                members[i] = r
                break
        else:
            raise SingularityError(
                f"load-set member {first + i} kept drawing singular configurations"
            )
    return members


def sample_load_set(
    constraint: LoadConstraint,
    n_s: int,
    n_members: int,
    seed: int,
    s_ss: np.ndarray | None = None,
) -> np.ndarray:
    """Frozen stack of load realizations, one substream per member.

    When s_ss is given, members whose coupling resolvent is singular are
    redrawn from their own stream at construction time, so downstream
    evaluation never trips on them.
    """
    members = np.empty((int(n_members), int(n_s)), dtype=complex)
    for i in range(int(n_members)):
        gen = substream(seed, _LOADSET_KEY, i)
        members[i] = _draw_members(gen, constraint, int(n_s), 1, s_ss, first=i)[0]
    return members


class _FrozenObjective:
    """Mean participation number over a fixed load set, batch-evaluated.

    Per member the resolvent-dependent factors are precomputed once; each
    call only forms the Jacobian stack for the candidate illumination and
    reduces it through the Gram-trace identity
    M = ||J||_F^4 / ||J J^H||_F^2.
    """

    def __init__(self, blocks, load_set: np.ndarray):
        r = np.asarray(load_set, dtype=complex)
        eye = np.eye(blocks.n_bs, dtype=complex)
        a = eye[None, :, :] - r[:, :, None] * blocks.s_ss[None, :, :]
        g = np.linalg.solve(a, np.broadcast_to(eye, a.shape))
        self.rx_factor = blocks.s_rs @ g
        self.incident = blocks.s_ss @ (g * r[:, None, :]) @ blocks.s_st + blocks.s_st
        self.n_tx = blocks.n_tx

    def __call__(self, x: np.ndarray) -> float:
        drive = self.incident @ x
        jac = self.rx_factor * drive[:, None, :]
        trace = (np.abs(jac) ** 2).sum(axis=(1, 2))
        if np.any(trace == 0.0):
            raise DegenerateInputError("zero Jacobian for a load-set member")
        gram = jac @ jac.conj().swapaxes(1, 2)
        fro2 = (np.abs(gram) ** 2).sum(axis=(1, 2))
        return float(np.mean(trace * trace / fro2))


def mean_dof_objective(
    system, x: np.ndarray, constraint: LoadConstraint, load_set: np.ndarray
) -> float:
    """Mean DOF metric of illumination x over an explicit frozen load set."""
    blocks = extract_blocks(system) if isinstance(system, ScatteringSystem) else system
    load_set = np.asarray(load_set, dtype=complex)
    if np.any(np.abs(load_set) > 1.0 + LOAD_MAG_TOL):
        raise ValueError("load set contains entries with magnitude above 1")
    x = np.asarray(x, dtype=complex)
    return _FrozenObjective(blocks, load_set)(x / np.linalg.norm(x))


def optimize_illumination(
    system, constraint: LoadConstraint, config: OptimizationConfig
) -> OptimizationResult:
    """Multistart Nelder-Mead over the illumination sphere.

    Standard simplex coefficients (reflection 1, expansion 2, contraction
    0.5, shrink 0.5); the initial simplex at each start is the start point
    plus one vertex per embedded coordinate perturbed by 0.1.  Starts are
    sphere-uniform from per-start substreams; the winner is the best final
    objective, ties going to the lowest start index.
    """
    blocks = extract_blocks(system) if isinstance(system, ScatteringSystem) else system
    n_t = blocks.n_tx
    sign = -1.0 if config.direction == "MAX" else 1.0

    eval_count = 0
    if config.redraw_per_evaluation:
        draw_counter = iter(range(10**12))

        def objective(x):
            # fresh load set per evaluation, keyed by the running counter
            gen = substream(config.seed, _REDRAW_KEY, next(draw_counter))
            members = _draw_members(
                gen, constraint, blocks.n_bs, config.n_objective_samples, blocks.s_ss
            )
            return _FrozenObjective(blocks, members)(x)
    else:
        load_set = sample_load_set(
            constraint, blocks.n_bs, config.n_objective_samples, config.seed,
            s_ss=blocks.s_ss,
        )
        objective = _FrozenObjective(blocks, load_set)

    def wrapped(v):
        nonlocal eval_count
        eval_count += 1
        norm = np.linalg.norm(v)
        if norm < DEGENERATE_NORM:
            return np.inf  # worst case in minimize-space; never the winner
        half = v.size // 2
        x = (v[:half] + 1j * v[half:]) / norm
        return sign * objective(x)

    dim = 2 * n_t
    traces = []
    best_fun = np.inf
    best_v = None
    for start in range(config.n_starts):
        x0 = sample_random_illumination(n_t, substream(config.seed, _START_KEY, start))
        v0 = embed(x0)
        simplex = np.vstack([v0, v0 + 0.1 * np.eye(dim)])
        result = minimize(
            wrapped,
            v0,
            method="Nelder-Mead",
            options={
                "maxiter": config.max_iterations,
                "xatol": config.x_tolerance,
                "fatol": config.f_tolerance,
                "initial_simplex": simplex,
                "adaptive": False,
            },
        )
        final = sign * result.fun if np.isfinite(result.fun) else np.nan
        traces.append((start, float(final), int(result.nit)))
        if np.isfinite(result.fun) and result.fun < best_fun:
            best_fun = result.fun
            best_v = result.x
    if best_v is None:
        raise OptimizationFailedError("no start produced a finite objective", traces=traces)

    best_x = project(best_v)
    best_objective = objective(best_x)
    eval_count += 1
    return OptimizationResult(
        best_x=best_x,
        best_objective=float(best_objective),
        per_start_trace=traces,
        objective_evaluations=eval_count,
    )

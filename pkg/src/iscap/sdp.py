"""Self-contained solver for small dense SDPs with Hermitian PSD blocks.

Problem form: maximize  sum_k Re tr(C_k W_k)
              subject to sum_k Re tr(A_{m,k} W_k)  {<=, >=}  b_m,   m = 1..M
                         W_k >= 0 (PSD), k = 1..K

The solver is a first-order operator-splitting method: it alternates a
linearly-constrained least-squares step (solved exactly through a Woodbury
identity, since there are far fewer constraints than variables) with a
projection onto the PSD cone, using over-relaxation and residual-balancing
penalty adaptation. Inequalities are handled via nonnegative slacks.
Instances here are tiny (blocks up to ~10x10, a few dozen constraints), so
the eigendecomposition inside the cone projection dominates the cost.
"""

import enum
import io
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, NotHermitian
from .numerics import HERMITIAN_RTOL, project_psd_stack

OVER_RELAXATION = 1.6
RESIDUAL_CHECK_EVERY = 5
PENALTY_ADAPT_EVERY = 50
PENALTY_RATIO = 10.0
STALL_WINDOW = 5000           # iterations of stalled residual before the
STALL_GROWTH = 10.0           # divergence test may declare infeasibility
STALL_LEVEL = 10.0            # "stalled" means residual > STALL_LEVEL * tol


class SdpStatus(enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    MAX_ITERS = "max_iters"


@dataclass
class TraceConstraint:
    """sum_k Re tr(coeffs[k] @ W_k)  sense  rhs, with sense '<=' or '>='."""

    coeffs: np.ndarray            # (K, n, n) Hermitian
    sense: str
    rhs: float


@dataclass
class SdpProblem:
    """Block trace-objective SDP data. ``objective`` is (K, n, n) Hermitian."""

    block_dim: int
    n_blocks: int
    objective: np.ndarray
    constraints: list[TraceConstraint]

    def validate(self):
        k, n = self.n_blocks, self.block_dim
        if self.objective.shape != (k, n, n):
            raise DimensionMismatch(f"objective shape {self.objective.shape} != ({k},{n},{n})")
        _require_hermitian_stack(self.objective, "objective")
        for i, con in enumerate(self.constraints):
            if con.coeffs.shape != (k, n, n):
                raise DimensionMismatch(f"constraint {i} shape {con.coeffs.shape}")
            if con.sense not in ("<=", ">="):
                raise ValueError(f"constraint {i}: bad sense {con.sense!r}")
            if not np.isfinite(con.rhs):
                raise ValueError(f"constraint {i}: rhs not finite")
            _require_hermitian_stack(con.coeffs, f"constraint {i}")


def _require_hermitian_stack(stack: np.ndarray, what: str):
    ah = np.conj(np.swapaxes(stack, -2, -1))
    nrm = np.linalg.norm(stack)
    if np.linalg.norm(stack - ah) > HERMITIAN_RTOL * max(nrm, 1e-300):
        raise NotHermitian(f"{what}: coefficient matrices not Hermitian")


@dataclass
class SdpState:
    """Internal splitting iterate, reusable as a warm start."""

    v: np.ndarray
    z: np.ndarray
    s: np.ndarray
    y: np.ndarray
    lam: np.ndarray
    mu: float = 1.0


@dataclass
class SdpSolution:
    blocks: np.ndarray            # (K, n, n) Hermitian PSD
    objective_value: float
    primal_residual: float        # max constraint violation, original units
    status: SdpStatus
    iterations: int = 0
    state: SdpState | None = None


def _flatten(mats: np.ndarray) -> np.ndarray:
    return np.concatenate([mats.real.ravel(), mats.imag.ravel()])


def _unflatten(vec: np.ndarray, k: int, n: int) -> np.ndarray:
    half = k * n * n
    return vec[:half].reshape(k, n, n) + 1j * vec[half:].reshape(k, n, n)


def _trace_inner(stack_a: np.ndarray, stack_b: np.ndarray) -> float:
    """sum_k Re tr(A_k B_k) for Hermitian stacks."""
    return float(np.sum(stack_a.real * stack_b.real + stack_a.imag * stack_b.imag))


def solve_sdp(problem: SdpProblem, tol: float = 1e-7, max_iters: int = 50_000,
              warm_start: SdpState | None = None) -> SdpSolution:
    """Solve the block SDP to the given normalized-residual tolerance.

    Deterministic: identical problem data, tolerance, and warm start always
    produce the identical iterate sequence. ``warm_start`` may carry the
    final state of a previous solve of a nearby problem with the same shape.

    Status is INFEASIBLE when the residual stalls above 10*tol for a full
    window while the iterate (including the scaled multipliers) diverges,
    MAX_ITERS when neither that test nor convergence is reached.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    problem.validate()
    k, n = problem.n_blocks, problem.block_dim
    dim = 2 * k * n * n
    m = len(problem.constraints)

    # Canonical form: minimize q.v  s.t.  G v + s = b, s >= 0, v in PSD cone.
    rows = np.empty((m, dim))
    b = np.empty(m)
    for i, con in enumerate(problem.constraints):
        sign = 1.0 if con.sense == "<=" else -1.0
        rows[i] = sign * _flatten(con.coeffs)
        b[i] = sign * con.rhs
    row_norms = np.maximum(np.linalg.norm(rows, axis=1), 1e-300)
    g_mat = rows / row_norms[:, None]
    b_hat = b / row_norms

    q = -_flatten(problem.objective)
    q_norm = np.linalg.norm(q)
    q_hat = q / q_norm if q_norm > 0 else q

    gt = g_mat.T
    lhs = np.eye(m) + g_mat @ gt
    lhs_inv = np.linalg.inv(lhs)

    if warm_start is not None and warm_start.v.shape == (dim,):
        v = warm_start.v.copy()
        z = warm_start.z.copy()
        s = warm_start.s.copy()
        y = warm_start.y.copy()
        lam = warm_start.lam.copy()
        mu = warm_start.mu
        if s.shape != (m,):
            s = np.maximum(b_hat, 0.0)
            lam = np.zeros(m)
    else:
        v = np.zeros(dim)
        z = np.zeros(dim)
        s = np.maximum(b_hat, 0.0)
        y = np.zeros(dim)
        lam = np.zeros(m)
        mu = 1.0

    b_scale = max(1.0, float(np.linalg.norm(b_hat)))
    alpha = OVER_RELAXATION
    status = SdpStatus.MAX_ITERS
    it = 0
    last_good_iter = 0
    last_good_norm = None
    rel_p = rel_d = np.inf

    def _state_norm():
        return float(np.linalg.norm(v) + mu * (np.linalg.norm(y) + np.linalg.norm(lam)))

    for it in range(1, max_iters + 1):
        r = (z - y) + gt @ (b_hat - s - lam) - q_hat / mu
        v = r - gt @ (lhs_inv @ (g_mat @ r))
        gv = g_mat @ v

        v_hat = alpha * v + (1.0 - alpha) * z
        gv_hat = alpha * gv + (1.0 - alpha) * (b_hat - s)

        z_prev = z
        s_prev = s
        z = _flatten(project_psd_stack(_unflatten(v_hat + y, k, n)))
        s = np.maximum(0.0, b_hat - gv_hat - lam)
        y = y + v_hat - z
        lam = lam + gv_hat + s - b_hat

        if it % RESIDUAL_CHECK_EVERY:
            continue

        rp = np.hypot(np.linalg.norm(v - z), np.linalg.norm(gv + s - b_hat))
        rd = mu * np.linalg.norm(-(z - z_prev) + gt @ (s - s_prev))
        scale_p = max(1.0, float(np.linalg.norm(v)), float(np.linalg.norm(z)), b_scale)
        scale_d = max(1.0, mu * float(np.linalg.norm(y)), mu * float(np.linalg.norm(lam)))
        rel_p = rp / scale_p
        rel_d = rd / scale_d

        if rel_p <= tol and rel_d <= tol:
            status = SdpStatus.OPTIMAL
            break

        if rel_p <= STALL_LEVEL * tol:
            last_good_iter = it
            last_good_norm = None
        else:
            if last_good_norm is None:
                last_good_norm = max(_state_norm(), 1e-12)
                last_good_iter = it
            elif (it - last_good_iter >= STALL_WINDOW
                  and _state_norm() > STALL_GROWTH * last_good_norm):
                status = SdpStatus.INFEASIBLE
                break

        if it % PENALTY_ADAPT_EVERY == 0 and rel_d > 0:
            ratio = rel_p / rel_d
            if ratio > PENALTY_RATIO and mu < 1e8:
                mu *= 2.0
                y *= 0.5
                lam *= 0.5
            elif ratio < 1.0 / PENALTY_RATIO and mu > 1e-8:
                mu *= 0.5
                y *= 2.0
                lam *= 2.0

    blocks = _unflatten(z, k, n)
    blocks = 0.5 * (blocks + np.conj(np.swapaxes(blocks, -2, -1)))
    objective_value = _trace_inner(problem.objective, blocks)

    worst = 0.0
    for con in problem.constraints:
        val = _trace_inner(con.coeffs, blocks)
        viol = val - con.rhs if con.sense == "<=" else con.rhs - val
        worst = max(worst, viol)

    return SdpSolution(
        blocks=blocks,
        objective_value=objective_value,
        primal_residual=worst,
        status=status,
        iterations=it,
        state=SdpState(v=v, z=z, s=s, y=y, lam=lam, mu=mu),
    )


# ---------------------------------------------------------------------------
# Real-symmetric embedding
# ---------------------------------------------------------------------------

def embed_matrix(x: np.ndarray) -> np.ndarray:
    """Map a Hermitian n x n matrix to its real-symmetric 2n x 2n image
    [[Re X, -Im X], [Im X, Re X]]; PSD is preserved in both directions."""
    return np.block([[x.real, -x.imag], [x.imag, x.real]]).astype(np.complex128)


def unembed_matrix(t: np.ndarray) -> np.ndarray:
    """Inverse of :func:`embed_matrix` (exact on embedded matrices; averages
    the redundant blocks otherwise)."""
    n2 = t.shape[0]
    if n2 % 2:
        raise DimensionMismatch("embedded matrix must have even dimension")
    n = n2 // 2
    re = 0.5 * (t[:n, :n].real + t[n:, n:].real)
    im = 0.5 * (t[n:, :n].real - t[:n, n:].real)
    return re + 1j * im


def embed_hermitian(problem: SdpProblem) -> SdpProblem:
    """Real-symmetric equivalent of a complex Hermitian block SDP.

    Trace inner products double under the embedding, so all coefficient
    matrices are halved; optimal values then match the original problem
    exactly.
    """
    def embed_stack(stack):
        return np.stack([0.5 * embed_matrix(x) for x in stack])

    return SdpProblem(
        block_dim=2 * problem.block_dim,
        n_blocks=problem.n_blocks,
        objective=embed_stack(problem.objective),
        constraints=[
            TraceConstraint(coeffs=embed_stack(c.coeffs), sense=c.sense, rhs=c.rhs)
            for c in problem.constraints
        ],
    )


# ---------------------------------------------------------------------------
# Debug dump (for cross-solver validation)
# ---------------------------------------------------------------------------

def _write_matrix(fh, mat: np.ndarray):
    for row in mat:
        fh.write(" ".join(f"{v.real:.17g} {v.imag:.17g}" for v in row) + "\n")


def dump_problem(problem: SdpProblem, fh) -> None:
    """Write a problem instance as plain text: dimensions, objective blocks
    row-major (re im pairs), then one sense/rhs line plus blocks per
    constraint."""
    if isinstance(fh, (str, bytes)):
        with open(fh, "w", encoding="utf-8") as real_fh:
            dump_problem(problem, real_fh)
            return
    fh.write(f"{problem.n_blocks} {problem.block_dim} {len(problem.constraints)}\n")
    for blk in problem.objective:
        _write_matrix(fh, blk)
    for con in problem.constraints:
        fh.write(f"{con.sense} {con.rhs:.17g}\n")
        for blk in con.coeffs:
            _write_matrix(fh, blk)


def _read_matrix(lines, n: int) -> np.ndarray:
    mat = np.empty((n, n), dtype=np.complex128)
    for i in range(n):
        parts = [float(t) for t in next(lines).split()]
        mat[i] = [complex(parts[2 * j], parts[2 * j + 1]) for j in range(n)]
    return mat


def load_problem(fh) -> SdpProblem:
    """Read back a :func:`dump_problem` file."""
    if isinstance(fh, (str, bytes)):
        with open(fh, "r", encoding="utf-8") as real_fh:
            return load_problem(real_fh)
    if isinstance(fh, str):
        fh = io.StringIO(fh)
    lines = iter(fh.read().splitlines())
    k, n, m = (int(t) for t in next(lines).split())
    objective = np.stack([_read_matrix(lines, n) for _ in range(k)])
    constraints = []
    for _ in range(m):
        sense, rhs = next(lines).split()
        coeffs = np.stack([_read_matrix(lines, n) for _ in range(k)])
        constraints.append(TraceConstraint(coeffs=coeffs, sense=sense, rhs=float(rhs)))
    return SdpProblem(block_dim=n, n_blocks=k, objective=objective, constraints=constraints)

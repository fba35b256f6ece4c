"""Metropolis exploration of 4-local coupling space toward clustered spectra.

The chain walks the coupling vector, rescaling every proposal so tr(H^2)
stays exactly at the initial draw's value, and accepts with probability
min(e^{f_new - f_old}, 1) for f(H, beta_D) = -beta_D sum_{i<j} ln|l_i - l_j|.
Raising f rewards eigenvalue clustering; beta_D anneals upward over stages.

Determinism: given the same params, schedule, and generator state the
trajectory replays bit-identically. Each step consumes, in order, one
uniform (step length), C(N,4) integers (direction), and one uniform
(acceptance) -- the acceptance uniform is drawn even when the move is an
automatic accept, so stream positions never depend on outcomes.
"""

from dataclasses import dataclass, replace

import numpy as np

from .ensemble import (
    CouplingTensor,
    EnsembleParams,
    build_hamiltonian,
    gaussian,
    rescale_to_trace,
    sample_couplings,
    trace_h_squared,
)
from .pauli import DenseOperator
from .spectral import diagonalize

# pair distances are floored at this fraction of the spectral bandwidth
# inside the logarithm, so exact degeneracies contribute a large finite
# penalty instead of an infinity
LOG_CLAMP_FACTOR = 1e-13


@dataclass(frozen=True)
class Schedule:
    """Annealing stages plus the step-size adaptation rule."""

    stages: tuple = ((0.5, 20000), (1.0, 20000), (1.5, 20000), (2.0, 20000))
    window: int = 100
    raise_threshold: int = 50
    lower_threshold: int = 5
    factor: float = 1.1


@dataclass(frozen=True)
class ChainState:
    """Chain snapshot; accept_count/step_count live within one window."""

    couplings: CouplingTensor
    objective: float
    sigma: float
    accept_count: int
    step_count: int
    stage: float
    rng: np.random.Generator


@dataclass(frozen=True)
class TrajectoryRow:
    step: int
    beta_d: float
    objective: float
    sigma: float
    accept_rate: float


@dataclass(frozen=True)
class MetropolisResult:
    couplings: CouplingTensor
    trajectory: tuple
    state: ChainState
    target_trace: float


def objective_from_eigenvalues(eigenvalues: np.ndarray, beta_d: float) -> float:
    """-beta_d sum_{i<j} ln|l_i - l_j| with degenerate pairs clamped."""
    ev = np.asarray(eigenvalues, dtype=np.float64)
    if ev.size < 2:
        return 0.0
    bandwidth = float(ev.max() - ev.min())
    floor = LOG_CLAMP_FACTOR * bandwidth
    if floor == 0.0:
        floor = np.finfo(np.float64).tiny
    i, j = np.triu_indices(ev.size, k=1)
    gaps = np.abs(ev[i] - ev[j])
    return float(-beta_d * np.sum(np.log(np.maximum(gaps, floor))))


def objective(h: DenseOperator, beta_d: float, per_sector: bool = False) -> float:
    """f(H, beta_D) from the full spectrum, or summed per parity sector.

    The default mixes the sectors, the literal reading of the algorithm;
    per_sector=True drops the physically unconstrained cross-sector pairs.
    """
    if per_sector:
        spectra = diagonalize(np.asarray(h, dtype=complex), need_vectors=False)
        return sum(objective_from_eigenvalues(s.eigenvalues, beta_d) for s in spectra)
    return objective_from_eigenvalues(np.linalg.eigvalsh(h), beta_d)


def step_length(sigma: float, x: float) -> float:
    """l = (sigma/2)(sqrt(1 + 4x^2/(1-x^2)) - 1) for x in [0, 1)."""
    return 0.5 * sigma * (np.sqrt(1.0 + 4.0 * x * x / (1.0 - x * x)) - 1.0)


def propose(couplings: CouplingTensor, sigma: float, rng: np.random.Generator) -> CouplingTensor:
    """Move the coupling vector a random length l in a uniform direction.

    Draws one uniform for the length law, then a standard Gaussian
    direction rescaled to Euclidean length l.
    """
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    x = rng.random()
    length = step_length(sigma, x)
    direction = gaussian(rng, couplings.values.size)
    norm = float(np.linalg.norm(direction))
    if norm == 0.0 or length == 0.0:
        return CouplingTensor(couplings.n, couplings.values.copy())
    return CouplingTensor(couplings.n, couplings.values + (length / norm) * direction)


def acceptance_probability(delta_f: float) -> float:
    """min(e^{delta_f}, 1) without overflow."""
    return float(np.exp(min(delta_f, 0.0)))


def metropolis_step(state: ChainState, target_trace: float, per_sector: bool = False) -> ChainState:
    """One propose/rescale/accept update; always consumes one acceptance draw."""
    candidate = rescale_to_trace(propose(state.couplings, state.sigma, state.rng), target_trace)
    f_new = objective(build_hamiltonian(candidate), state.stage, per_sector)
    u = state.rng.random()
    accepted = u < acceptance_probability(f_new - state.objective)
    return replace(
        state,
        couplings=candidate if accepted else state.couplings,
        objective=f_new if accepted else state.objective,
        accept_count=state.accept_count + int(accepted),
        step_count=state.step_count + 1,
    )


def adapt_sigma(state: ChainState, schedule: Schedule = Schedule()) -> ChainState:
    """Window-boundary step-size update; resets the window counters."""
    if state.step_count == 0 or state.step_count % schedule.window != 0:
        raise ValueError(f"adapt_sigma needs a full window, got {state.step_count} steps")
    sigma = state.sigma
    if state.accept_count > schedule.raise_threshold:
        sigma *= schedule.factor
    elif state.accept_count < schedule.lower_threshold:
        sigma /= schedule.factor
    return replace(state, sigma=sigma, accept_count=0, step_count=0)


def checkpoint_payload(
    params: EnsembleParams,
    schedule: Schedule,
    state: ChainState,
    member: int,
    per_sector: bool,
    target_trace: float,
    global_step: int,
    stage_index: int,
    stage_step: int,
) -> dict:
    """Self-describing JSON-ready snapshot sufficient for bit-exact resume."""
    return {
        "version": 1,
        "n": params.n,
        "seed": params.seed,
        "j_scale": params.j_scale,
        "member": member,
        "stages": [[float(b), int(s)] for b, s in schedule.stages],
        "per_sector": per_sector,
        "global_step": global_step,
        "stage_index": stage_index,
        "stage_step": stage_step,
        "sigma": state.sigma,
        "accept_count": state.accept_count,
        "window_step": state.step_count,
        "objective": state.objective,
        "target_trace": target_trace,
        "couplings": state.couplings.values.tolist(),
        "rng_state": state.rng.bit_generator.state,
    }


def run_schedule(
    params: EnsembleParams,
    schedule: Schedule,
    rng: np.random.Generator,
    checkpoint_sink=None,
    *,
    member: int = 0,
    sigma0: float = 0.001,
    per_sector: bool = False,
    checkpoint_every: int = 1000,
    resume: dict | None = None,
) -> MetropolisResult:
    """Run all annealing stages from a fresh disorder draw (or a checkpoint).

    Logs one trajectory row per window (objective, sigma, window acceptance
    rate) and hands a checkpoint payload to checkpoint_sink every
    checkpoint_every steps. On resume the returned trajectory holds only
    the rows produced after the checkpoint.
    """
    if resume is not None:
        if (resume["n"], resume["seed"]) != (params.n, params.seed):
            raise ValueError("checkpoint was recorded for different ensemble parameters")
        target = float(resume["target_trace"])
        rng.bit_generator.state = resume["rng_state"]
        state = ChainState(
            couplings=CouplingTensor(params.n, np.asarray(resume["couplings"])),
            objective=float(resume["objective"]),
            sigma=float(resume["sigma"]),
            accept_count=int(resume["accept_count"]),
            step_count=int(resume["window_step"]),
            stage=0.0,
            rng=rng,
        )
        global_step = int(resume["global_step"])
        start_stage = int(resume["stage_index"])
        start_stage_step = int(resume["stage_step"])
    else:
        couplings = sample_couplings(params, member)
        target = trace_h_squared(couplings)
        state = ChainState(
            couplings=couplings,
            objective=0.0,
            sigma=sigma0,
            accept_count=0,
            step_count=0,
            stage=0.0,
            rng=rng,
        )
        global_step = 0
        start_stage = 0
        start_stage_step = 0

    trajectory = []
    last_durable = global_step if resume is not None else None
    for stage_index in range(start_stage, len(schedule.stages)):
        beta_d, steps = schedule.stages[stage_index]
        state = replace(state, stage=float(beta_d))
        first = start_stage_step if stage_index == start_stage else 0
        resuming_mid_stage = resume is not None and stage_index == start_stage and first > 0
        if not resuming_mid_stage:
            # entering a stage re-evaluates f at the new beta_D; a mid-stage
            # resume restores the stored value instead, keeping bit parity
            state = replace(
                state,
                objective=objective(build_hamiltonian(state.couplings), float(beta_d), per_sector),
            )
        for stage_step in range(first, int(steps)):
            state = metropolis_step(state, target, per_sector)
            global_step += 1
            if state.step_count == schedule.window:
                trajectory.append(
                    TrajectoryRow(
                        step=global_step,
                        beta_d=float(beta_d),
                        objective=state.objective,
                        sigma=state.sigma,
                        accept_rate=state.accept_count / schedule.window,
                    )
                )
                state = adapt_sigma(state, schedule)
            if checkpoint_sink is not None and global_step % checkpoint_every == 0:
                payload = checkpoint_payload(
                    params, schedule, state, member, per_sector, target,
                    global_step, stage_index, stage_step + 1,
                )
                try:
                    checkpoint_sink(payload)
                except Exception as exc:
                    at = "none" if last_durable is None else f"step {last_durable}"
                    raise RuntimeError(
                        f"checkpoint write failed at step {global_step}; last durable checkpoint: {at}"
                    ) from exc
                last_durable = global_step
    return MetropolisResult(
        couplings=state.couplings,
        trajectory=tuple(trajectory),
        state=state,
        target_trace=target,
    )

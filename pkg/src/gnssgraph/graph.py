"""Trajectory factor graph and sparse Dogleg optimizer.

Each epoch contributes one 7-dimensional node: the 3D position offset
from the reference (start) position plus four receiver clock terms in
meters -- the GPS clock and three inter-system biases. Velocity factors
chain consecutive nodes, time-relative baseline factors close loops,
and pseudorange factors anchor the absolute position and clocks.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .atmosphere import KlobucharParams, TropoModel, klobuchar_delay, saastamoinen_delay
from .constants import CLIGHT
from .coords import ecef_to_geodetic, elevation_azimuth, line_of_sight
from .errors import EmptyInput, MissingVelocity, SingularNormalEquations
from .pointpos import CONSTELLATION_SLOT, SolverConfig, pseudorange_variance
from .trrtk import BaselineStatus
from .types import Constellation

STATE_DIM = 7


@dataclass(frozen=True)
class StateVector:
    """One node: position offset from the reference plus clock terms."""

    position_offset: np.ndarray        # [m], relative to the reference
    clock_bias: np.ndarray             # [m], GPS clock + 3 inter-system biases

    def __array__(self, dtype=None, copy=None):
        out = np.concatenate([self.position_offset, self.clock_bias])
        return out.astype(dtype) if dtype is not None else out

    @classmethod
    def from_array(cls, x) -> "StateVector":
        x = np.asarray(x, dtype=float)
        return cls(x[:3].copy(), x[3:].copy())


@dataclass
class VelocityFactor:
    node_i: int
    node_j: int                        # j = i + 1
    measured_velocity: np.ndarray      # [m/s]
    dt: float                          # [s]
    information: np.ndarray            # 3x3 [1/m^2]


@dataclass
class TrRtkFactor:
    node_past: int
    node_current: int
    baseline: np.ndarray               # past -> current [m]
    information: np.ndarray            # 3x3
    time_difference: float             # [s]


@dataclass
class PseudorangeFactor:
    """Linearized pseudorange row; relinearizable around a new offset."""

    node: int
    sat: object
    row: np.ndarray                    # 7-vector H
    corrected_measurement: float       # [m], consistent with `row`
    information: float                 # scalar 1/m^2
    sat_state: object = None
    measured_corr: float = 0.0         # rho + c*dT_sat - iono - tropo
    lin_offset: np.ndarray | None = None

    def relinearize(self, offset: np.ndarray, reference: np.ndarray) -> None:
        """Rebuild the row and constant around a new position offset."""
        unit, r0 = line_of_sight(reference + offset, self.sat_state)
        row = np.zeros(STATE_DIM)
        row[:3] = -unit
        row[3] = 1.0
        slot = CONSTELLATION_SLOT[self.sat.constellation]
        if slot:
            row[3 + slot] = 1.0
        self.row = row
        self.corrected_measurement = (self.measured_corr - r0
                                      - unit @ offset)
        self.lin_offset = np.asarray(offset, dtype=float).copy()


@dataclass
class PriorFactor:
    node: int
    indices: np.ndarray                # state components constrained
    values: np.ndarray                 # [m]
    information: np.ndarray            # diagonal entries [1/m^2]


@dataclass
class Graph:
    reference_position: np.ndarray
    initial_states: np.ndarray         # (n, 7)
    velocity_factors: list
    trrtk_factors: list
    pseudorange_factors: list
    priors: list


@dataclass
class OptimizerReport:
    initial_cost: float
    final_cost: float
    iterations: int
    converged: bool
    costs: list = field(default_factory=list)   # accepted-iteration costs


@dataclass
class GraphConfig:
    use_pseudorange: bool = True
    node0_prior_sigma: float = 2.0     # [m]
    clock_prior_sigma: float = 100.0   # [m]
    relinearize_threshold: float = 10.0  # [m]
    max_iterations: int = 100
    cost_tolerance: float = 1e-8       # relative cost change
    gradient_tolerance: float = 1e-6   # infinity norm
    initial_radius: float = 100.0      # trust region [m]
    iono: KlobucharParams | None = None
    tropo: TropoModel | None = None
    solver: SolverConfig = field(default_factory=SolverConfig)


def build_graph(epochs, sat_states, velocities, spp_solutions, trrtk_results,
                config: GraphConfig | None = None) -> Graph:
    """Assemble the trajectory graph.

    `velocities` holds one VelocitySolution per consecutive pair,
    `trrtk_results` holds (past_index, current_index, TrRtkResult)
    triples; only Fixed results become factors. Node positions start at
    the epoch-0 point solution plus accumulated velocity increments.
    """
    config = config or GraphConfig()
    n = len(epochs)
    if n == 0:
        raise EmptyInput("no epochs")
    if len(velocities) < n - 1:
        raise MissingVelocity(
            f"{len(velocities)} velocity solutions for {n} epochs")

    reference = np.asarray(spp_solutions[0].position, dtype=float)
    states = np.zeros((n, STATE_DIM))
    for k in range(1, n):
        dt = epochs[k].time - epochs[k - 1].time
        states[k, :3] = states[k - 1, :3] + velocities[k - 1].velocity * dt
    for k, spp in enumerate(spp_solutions):
        biases = spp.clock_biases
        gps = biases.get(Constellation.GPS, 0.0)
        states[k, 3] = gps
        for const, bias in biases.items():
            slot = CONSTELLATION_SLOT[const]
            if slot:
                states[k, 3 + slot] = bias - gps

    velocity_factors = []
    for k in range(n - 1):
        dt = epochs[k + 1].time - epochs[k].time
        cov = velocities[k].covariance * dt * dt
        # V_k*dt is a left-endpoint rule; inflate by the acceleration term
        # it drops so corners do not bias the solution
        nxt = velocities[min(k + 1, n - 2)].velocity
        disc = 0.5 * np.linalg.norm(nxt - velocities[k].velocity) * dt
        cov = cov + disc * disc * np.eye(3)
        velocity_factors.append(VelocityFactor(
            k, k + 1, velocities[k].velocity.copy(), dt, np.linalg.inv(cov)))

    trrtk_factors = []
    for past, current, result in trrtk_results:
        if result.status is not BaselineStatus.FIXED:
            continue
        trrtk_factors.append(TrRtkFactor(
            past, current, result.baseline.copy(),
            np.linalg.inv(result.covariance), result.time_difference))

    pseudorange_factors = []
    observed = np.zeros((n, 4), dtype=bool)
    if config.use_pseudorange:
        for k, epoch in enumerate(epochs):
            position = reference + states[k, :3]
            geo = ecef_to_geodetic(position)
            for obs in epoch.observations:
                state = sat_states[k].get(obs.sat)
                if state is None:
                    continue
                el, az = elevation_azimuth(geo, state.position)
                if el < config.solver.elevation_mask:
                    continue
                iono = (klobuchar_delay(config.iono, epoch.time, geo, el, az)
                        if config.iono else 0.0)
                tropo = (saastamoinen_delay(config.tropo, geo, el)
                         if config.tropo else 0.0)
                factor = PseudorangeFactor(
                    node=k, sat=obs.sat, row=np.zeros(STATE_DIM),
                    corrected_measurement=0.0,
                    information=1.0 / pseudorange_variance(el, obs.snr,
                                                           config.solver),
                    sat_state=state,
                    measured_corr=(obs.pseudorange
                                   + CLIGHT * state.clock_bias - iono - tropo))
                factor.relinearize(states[k, :3], reference)
                pseudorange_factors.append(factor)
                observed[k, 0] = True
                observed[k, CONSTELLATION_SLOT[obs.sat.constellation]] = True

    priors = [PriorFactor(
        node=0, indices=np.arange(3), values=states[0, :3].copy(),
        information=np.full(3, 1.0 / config.node0_prior_sigma ** 2))]
    info_clock = 1.0 / config.clock_prior_sigma ** 2
    for k in range(n):
        free = [3 + slot for slot in range(4) if not observed[k, slot]]
        if free:
            priors.append(PriorFactor(
                node=k, indices=np.array(free),
                values=states[k, free].copy(),
                information=np.full(len(free), info_clock)))

    return Graph(reference, states, velocity_factors, trrtk_factors,
                 pseudorange_factors, priors)


def residual_velocity(f: VelocityFactor, xi, xj) -> np.ndarray:
    xi = np.asarray(xi)
    xj = np.asarray(xj)
    return (xj[:3] - xi[:3]) - f.measured_velocity * f.dt


def residual_trrtk(f: TrRtkFactor, x_past, x_cur) -> np.ndarray:
    x_past = np.asarray(x_past)
    x_cur = np.asarray(x_cur)
    return (x_cur[:3] - x_past[:3]) - f.baseline


def residual_pseudorange(f: PseudorangeFactor, x) -> float:
    return float(f.row @ np.asarray(x) - f.corrected_measurement)


def residual_prior(f: PriorFactor, x) -> np.ndarray:
    return np.asarray(x)[f.indices] - f.values


def evaluate_cost(graph: Graph, states) -> float:
    """Sum of e^T Omega e over all factors and priors."""
    states = np.asarray(states)
    cost = 0.0
    for f in graph.velocity_factors:
        e = residual_velocity(f, states[f.node_i], states[f.node_j])
        cost += e @ f.information @ e
    for f in graph.trrtk_factors:
        e = residual_trrtk(f, states[f.node_past], states[f.node_current])
        cost += e @ f.information @ e
    for f in graph.pseudorange_factors:
        e = residual_pseudorange(f, states[f.node])
        cost += f.information * e * e
    for f in graph.priors:
        e = residual_prior(f, states[f.node])
        cost += e @ (f.information * e)
    return float(cost)


def _whitened_system(graph: Graph, states: np.ndarray):
    """Whitened residual vector and sparse Jacobian of the full problem."""
    n = states.shape[0]
    rows_r = []
    data = []
    row_idx = []
    col_idx = []
    row = 0

    def add_block(residual, jacobians, sqrt_info):
        nonlocal row
        white = sqrt_info @ residual
        rows_r.extend(white)
        for node, jac in jacobians:
            block = sqrt_info @ jac
            r_ids, c_ids = np.nonzero(block)
            row_idx.extend(row + r_ids)
            col_idx.extend(node * STATE_DIM + c_ids)
            data.extend(block[r_ids, c_ids])
        row += len(residual)

    jac_pos = np.zeros((3, STATE_DIM))
    jac_pos[:, :3] = np.eye(3)
    for f in graph.velocity_factors:
        sqrt_info = np.linalg.cholesky(f.information).T
        e = residual_velocity(f, states[f.node_i], states[f.node_j])
        add_block(e, [(f.node_i, -jac_pos), (f.node_j, jac_pos)], sqrt_info)
    for f in graph.trrtk_factors:
        sqrt_info = np.linalg.cholesky(f.information).T
        e = residual_trrtk(f, states[f.node_past], states[f.node_current])
        add_block(e, [(f.node_past, -jac_pos), (f.node_current, jac_pos)],
                  sqrt_info)
    for f in graph.pseudorange_factors:
        w = np.sqrt(f.information)
        e = residual_pseudorange(f, states[f.node])
        add_block(np.array([e]), [(f.node, f.row[None, :])],
                  np.array([[w]]))
    for f in graph.priors:
        jac = np.zeros((len(f.indices), STATE_DIM))
        jac[np.arange(len(f.indices)), f.indices] = 1.0
        sqrt_info = np.diag(np.sqrt(f.information))
        add_block(residual_prior(f, states[f.node]), [(f.node, jac)],
                  sqrt_info)

    jacobian = sp.csr_matrix(
        (data, (row_idx, col_idx)), shape=(row, n * STATE_DIM))
    return np.array(rows_r), jacobian


def _relinearize(graph: Graph, states: np.ndarray, threshold: float) -> bool:
    changed = False
    for f in graph.pseudorange_factors:
        moved = np.linalg.norm(states[f.node, :3] - f.lin_offset)
        if moved > threshold:
            f.relinearize(states[f.node, :3], graph.reference_position)
            changed = True
    return changed


def optimize(graph: Graph, config: GraphConfig | None = None):
    """Powell's Dogleg trust region on the sparse whitened normal equations.

    Returns (states, OptimizerReport); states is an (n, 7) array.
    Deterministic: fixed factor order, direct sparse solve.
    """
    config = config or GraphConfig()
    states = graph.initial_states.copy()
    n_var = states.size

    cost = evaluate_cost(graph, states)
    report = OptimizerReport(initial_cost=cost, final_cost=cost,
                             iterations=0, converged=False, costs=[cost])
    radius = config.initial_radius

    for iteration in range(1, config.max_iterations + 1):
        residual, jacobian = _whitened_system(graph, states)
        gradient = jacobian.T @ residual
        if np.linalg.norm(gradient, np.inf) < config.gradient_tolerance:
            report.converged = True
            break

        normal = (jacobian.T @ jacobian).tocsc()
        try:
            gn_step = spla.spsolve(normal, -gradient)
        except Exception as exc:
            raise SingularNormalEquations(str(exc)) from exc
        if not np.all(np.isfinite(gn_step)):
            raise SingularNormalEquations("non-finite Gauss-Newton step")

        jg = jacobian @ gradient
        sd_scale = (gradient @ gradient) / (jg @ jg)
        sd_step = -sd_scale * gradient

        accepted = False
        while radius > 1e-12:
            step = _dogleg_step(gn_step, sd_step, radius)
            trial = states + step.reshape(states.shape)
            new_cost = evaluate_cost(graph, trial)
            # predicted reduction of the quadratic model
            predicted = -(2.0 * residual @ (jacobian @ step)
                          + step @ (normal @ step))
            gain = (cost - new_cost) / predicted if predicted > 0 else -1.0
            if new_cost <= cost and gain > 0:
                states = trial
                previous = cost
                cost = new_cost
                report.costs.append(cost)
                if gain > 0.75:
                    radius = min(max(radius, 2.0 * np.linalg.norm(step)), 1e7)
                accepted = True
                break
            radius *= 0.25
        report.iterations = iteration
        if not accepted:
            break
        converged = (previous > 0
                     and (previous - cost) / max(previous, 1e-30)
                     < config.cost_tolerance)
        if _relinearize(graph, states, config.relinearize_threshold):
            cost = evaluate_cost(graph, states)
        if converged:
            report.converged = True
            break

    report.final_cost = cost
    return states, report


def _dogleg_step(gn_step: np.ndarray, sd_step: np.ndarray,
                 radius: float) -> np.ndarray:
    """Classic dogleg path: GN inside the region, else blend with descent."""
    if np.linalg.norm(gn_step) <= radius:
        return gn_step
    norm_sd = np.linalg.norm(sd_step)
    if norm_sd >= radius:
        return sd_step * (radius / norm_sd)
    diff = gn_step - sd_step
    a = diff @ diff
    b = 2.0 * sd_step @ diff
    c = sd_step @ sd_step - radius * radius
    beta = (-b + np.sqrt(b * b - 4 * a * c)) / (2 * a)
    return sd_step + beta * diff

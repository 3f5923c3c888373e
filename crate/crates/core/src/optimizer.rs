//! Joint AP association and PCS threshold selection.
//!
//! Association is solved through its Lagrangian dual: per-STA argmax over
//! APs, projected subgradient steps on the two multipliers, and ergodic
//! averaging of the argmax vertices as the relaxed primal. The threshold is
//! then tuned by a safeguarded Newton ascent on the throughput density.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::NetworkConfig;
use crate::contention::{fd_active_density, hd_active_densities, pcs_upper_bound};
use crate::geometry::{derive_seed, dist2, paper_mean_nn, sample_ppp, PointSet};
use crate::link::Direction;
use crate::quad::QuadError;
use crate::throughput::{fd_stp, sdt_fd, sdt_hd_with};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OptimizerError {
    #[error(transparent)]
    Numeric(#[from] QuadError),
    #[error("objective is not finite at PCS threshold {0:e}")]
    NonFinite(f64),
    #[error("network has {aps} APs and {stas} STAs; both must be non-empty")]
    EmptyNetwork { aps: usize, stas: usize },
    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        source: Box<OptimizerError>,
    },
}

impl OptimizerError {
    fn at(stage: &'static str) -> impl FnOnce(OptimizerError) -> OptimizerError {
        move |e| OptimizerError::Stage {
            stage,
            source: Box::new(e),
        }
    }
}

/// Per-pair utilities and the shared constraint level of one realization.
#[derive(Debug, Clone, PartialEq)]
pub struct AssociationInstance {
    pub n_ap: usize,
    pub n_sta: usize,
    /// Row-major `(ap, sta)` utilities.
    pub utility: Vec<f64>,
    /// Γ-dependent left side of the PCS constraint, `Γ / bound(ξ=1)`.
    pub constraint: f64,
}

impl AssociationInstance {
    pub fn from_utilities(n_ap: usize, n_sta: usize, utility: Vec<f64>, constraint: f64) -> Self {
        assert_eq!(utility.len(), n_ap * n_sta, "utility matrix shape");
        Self {
            n_ap,
            n_sta,
            utility,
            constraint,
        }
    }

    /// Utility of STA j at AP i is the FD throughput density at the
    /// pair's realized path loss.
    pub fn from_network(cfg: &NetworkConfig, aps: &PointSet, stas: &PointSet) -> Result<Self, OptimizerError> {
        if aps.is_empty() || stas.is_empty() {
            return Err(OptimizerError::EmptyNetwork {
                aps: aps.len(),
                stas: stas.len(),
            });
        }
        let (lt_s, lt_a) = hd_active_densities(cfg)?;
        let rate = fd_active_density(cfg)? * cfg.gamma.ln_1p();
        let utility = aps
            .points
            .iter()
            .flat_map(|a| {
                stas.points.iter().map(move |s| {
                    let ell = dist2(*a, *s).sqrt().powf(-cfg.alpha);
                    rate * fd_stp(cfg, 1.0, ell, lt_s, lt_a).0
                })
            })
            .collect();
        let bound = pcs_upper_bound(1.0, paper_mean_nn(cfg.lambda_fd()), cfg);
        Ok(Self::from_utilities(aps.len(), stas.len(), utility, cfg.pcs / bound))
    }

    fn u(&self, ap: usize, sta: usize) -> f64 {
        self.utility[ap * self.n_sta + sta]
    }

    /// Mean over STAs of `Σ_i ξ_ij u_ij`.
    pub fn objective(&self, xi: &[f64]) -> f64 {
        let total: f64 = xi.iter().zip(&self.utility).map(|(x, u)| x * u).sum();
        total / self.n_sta as f64
    }
}

/// Relaxed weights, multipliers and iteration bookkeeping.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssociationState {
    /// Row-major `(ap, sta)` weights in [0, 1].
    pub xi: Vec<f64>,
    pub n_ap: usize,
    pub n_sta: usize,
    pub delta: f64,
    pub eta: f64,
    pub step0: f64,
    pub iter: usize,
    pub objective: f64,
    pub converged: bool,
    /// `(delta, eta, objective)` after each iteration.
    pub history: Vec<(f64, f64, f64)>,
}

impl AssociationState {
    /// Uniform weights `1/n_ap`, zero multipliers.
    pub fn initial(inst: &AssociationInstance, step0: f64) -> Self {
        let xi = vec![1.0 / inst.n_ap as f64; inst.n_ap * inst.n_sta];
        Self {
            objective: inst.objective(&xi),
            xi,
            n_ap: inst.n_ap,
            n_sta: inst.n_sta,
            delta: 0.0,
            eta: 0.0,
            step0,
            iter: 0,
            converged: false,
            history: Vec::new(),
        }
    }

    fn column_sum(&self, sta: usize) -> f64 {
        (0..self.n_ap).map(|i| self.xi[i * self.n_sta + sta]).sum()
    }

    /// AP index per STA with the largest weight (lowest index on ties).
    pub fn rounded(&self) -> Vec<usize> {
        (0..self.n_sta)
            .map(|j| {
                (0..self.n_ap).fold(0, |best, i| {
                    if self.xi[i * self.n_sta + j] > self.xi[best * self.n_sta + j] {
                        i
                    } else {
                        best
                    }
                })
            })
            .collect()
    }
}

/// Binary weights from a per-STA AP choice.
pub fn assignment_matrix(n_ap: usize, assignment: &[usize]) -> Vec<f64> {
    let n_sta = assignment.len();
    let mut xi = vec![0.0; n_ap * n_sta];
    for (j, &i) in assignment.iter().enumerate() {
        xi[i * n_sta + j] = 1.0;
    }
    xi
}

/// `Υ(ξ) + δ·mean(Σξ - 1) + η·mean(c - Σξ)`, averaged over STAs like the
/// objective.
pub fn lagrangian(xi: &[f64], delta: f64, eta: f64, inst: &AssociationInstance) -> f64 {
    let mut sums = vec![0.0; inst.n_sta];
    for i in 0..inst.n_ap {
        for (j, s) in sums.iter_mut().enumerate() {
            *s += xi[i * inst.n_sta + j];
        }
    }
    let m = inst.n_sta as f64;
    let assoc: f64 = sums.iter().map(|s| s - 1.0).sum::<f64>() / m;
    let slack: f64 = sums.iter().map(|s| inst.constraint - s).sum::<f64>() / m;
    inst.objective(xi) + delta * assoc + eta * slack
}

/// Per-STA argmax of the pair contribution `u_ij + δ - η`; lowest AP index
/// wins ties. Returns binary weights.
pub fn association_argmax(state: &AssociationState, inst: &AssociationInstance) -> Vec<f64> {
    let assignment: Vec<usize> = (0..inst.n_sta)
        .map(|j| {
            let score = |i: usize| inst.u(i, j) + state.delta - state.eta;
            (1..inst.n_ap).fold(0, |best, i| if score(i) > score(best) { i } else { best })
        })
        .collect();
    assignment_matrix(inst.n_ap, &assignment)
}

/// Step size `φ₀ / √(k+1)`.
pub fn step_size(step0: f64, k: usize) -> f64 {
    step0 / ((k + 1) as f64).sqrt()
}

/// Projected subgradient step on `(δ, η)` at the state's weights.
pub fn update_multipliers(state: &AssociationState, inst: &AssociationInstance) -> (f64, f64) {
    let phi = step_size(state.step0, state.iter);
    let m = inst.n_sta as f64;
    let sums: Vec<f64> = (0..inst.n_sta).map(|j| state.column_sum(j)).collect();
    let g_delta = sums.iter().map(|s| s - 1.0).sum::<f64>() / m;
    let g_eta = sums.iter().map(|s| inst.constraint - s).sum::<f64>() / m;
    (
        (state.delta - phi * g_delta).max(0.0),
        (state.eta - phi * g_eta).max(0.0),
    )
}

/// Dual iterations until the weights or the objective stop moving.
pub fn solve_association(inst: &AssociationInstance, tol: f64, max_iter: usize) -> AssociationState {
    solve_association_with_step(inst, tol, max_iter, 1.0)
}

pub fn solve_association_with_step(
    inst: &AssociationInstance,
    tol: f64,
    max_iter: usize,
    step0: f64,
) -> AssociationState {
    let mut state = AssociationState::initial(inst, step0);
    for k in 0..max_iter {
        let vertex = association_argmax(&state, inst);
        let w = 1.0 / (k + 1) as f64;
        let next: Vec<f64> = state.xi.iter().zip(&vertex).map(|(x, v)| x + w * (v - x)).collect();
        let change = next
            .iter()
            .zip(&state.xi)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        let objective = inst.objective(&next);
        let improvement = objective - state.objective;
        state.xi = next;
        let (delta, eta) = update_multipliers(&state, inst);
        state.delta = delta;
        state.eta = eta;
        state.objective = objective;
        state.iter = k + 1;
        state.history.push((delta, eta, objective));
        if change < tol || improvement.abs() < tol * objective.abs().max(f64::MIN_POSITIVE) {
            state.converged = true;
            break;
        }
    }
    for j in 0..state.n_sta {
        let s = state.column_sum(j);
        if s > 0.0 {
            for i in 0..state.n_ap {
                state.xi[i * state.n_sta + j] /= s;
            }
        }
    }
    state.objective = inst.objective(&state.xi);
    state
}

/// Which throughput density the threshold search maximizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PcsObjective {
    /// Bidirectional FD.
    Fd,
    /// Half-duplex, UL and DL time-shared 50/50.
    HdTimeShared,
}

impl PcsObjective {
    pub fn value(self, cfg: &NetworkConfig, xi: f64, pcs: f64) -> Result<f64, OptimizerError> {
        let at = NetworkConfig { pcs, ..cfg.clone() };
        let v = match self {
            Self::Fd => sdt_fd(&at, xi)?.sdt,
            Self::HdTimeShared => {
                0.5 * (sdt_hd_with(&at, Direction::Ul, xi)?.sdt + sdt_hd_with(&at, Direction::Dl, xi)?.sdt)
            }
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(OptimizerError::NonFinite(pcs))
        }
    }
}

/// Lower end of the threshold search domain, mW.
pub const PCS_FLOOR: f64 = 1e-12;

/// Central-difference gradient (one Richardson step) and second
/// difference of `f` at `x > 0`.
pub fn derivatives<F>(f: F, x: f64) -> Result<(f64, f64), OptimizerError>
where
    F: Fn(f64) -> Result<f64, OptimizerError>,
{
    let h = (1e-6 * x).max(1e-12).min(0.5 * x);
    let d = |h: f64| -> Result<f64, OptimizerError> { Ok((f(x + h)? - f(x - h)?) / (2.0 * h)) };
    let grad = (4.0 * d(0.5 * h)? - d(h)?) / 3.0;
    let h2 = 1e-3 * x;
    let hess = (f(x + h2)? - 2.0 * f(x)? + f(x - h2)?) / (h2 * h2);
    if grad.is_finite() && hess.is_finite() {
        Ok((grad, hess))
    } else {
        Err(OptimizerError::NonFinite(x))
    }
}

/// Gradient and curvature of the FD throughput density in Γ.
pub fn sdt_derivatives(gamma_pcs: f64, xi_star: f64, cfg: &NetworkConfig) -> Result<(f64, f64), OptimizerError> {
    derivatives(|g| PcsObjective::Fd.value(cfg, xi_star, g), gamma_pcs)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NewtonStop {
    /// Scaled gradient below tolerance.
    Stationary,
    /// Reached the PCS upper bound.
    Bound,
    /// Accepted step too small to move Γ.
    Stagnated,
    /// No backtracking step satisfied the sufficient-increase test.
    LineSearchFailed,
    IterationCap,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NewtonState {
    pub gamma_pcs: f64,
    pub value: f64,
    pub grad: f64,
    pub hess: f64,
    pub direction: f64,
    pub step: f64,
    /// Forcing term `min(0.5, √|grad|)`.
    pub forcing: f64,
    /// Whether `|hess·dir + grad| ≤ forcing·|grad|` held for the last direction.
    pub residual_ok: bool,
    pub iter: usize,
    pub bound: f64,
    pub stop: NewtonStop,
    /// `(Γ_k, Υ(Γ_k))` for each accepted iterate, starting with Γ₀.
    pub trace: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonOptions {
    pub max_iter: usize,
    /// Stop when `|grad|·Γ/|Υ|` falls below this.
    pub stationary_tol: f64,
    pub armijo: f64,
    pub max_backtracks: usize,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self {
            max_iter: 100,
            stationary_tol: 1e-7,
            armijo: 1e-4,
            max_backtracks: 60,
        }
    }
}

/// Safeguarded Newton ascent of `f` over `[PCS_FLOOR, bound]`.
pub fn newton_maximize<F>(f: F, bound: f64, gamma0: f64, opts: NewtonOptions) -> Result<NewtonState, OptimizerError>
where
    F: Fn(f64) -> Result<f64, OptimizerError>,
{
    let clamp = |g: f64| g.max(PCS_FLOOR).min(bound);
    let mut g = clamp(gamma0);
    let mut value = f(g)?;
    let mut st = NewtonState {
        gamma_pcs: g,
        value,
        grad: 0.0,
        hess: 0.0,
        direction: 0.0,
        step: 0.0,
        forcing: 0.0,
        residual_ok: false,
        iter: 0,
        bound,
        stop: NewtonStop::IterationCap,
        trace: vec![(g, value)],
    };
    for k in 0..opts.max_iter {
        let (grad, hess) = derivatives(&f, g)?;
        let direction = if hess != 0.0 {
            grad / hess.abs()
        } else {
            grad.signum() * g
        };
        st.grad = grad;
        st.hess = hess;
        st.direction = direction;
        st.forcing = grad.abs().sqrt().min(0.5);
        st.residual_ok = (hess * direction + grad).abs() <= st.forcing * grad.abs();
        st.iter = k;
        if grad.abs() * g <= opts.stationary_tol * value.abs().max(f64::MIN_POSITIVE) {
            st.stop = NewtonStop::Stationary;
            return Ok(st);
        }
        if bound - g <= 1e-12 && grad > 0.0 {
            st.stop = NewtonStop::Bound;
            return Ok(st);
        }
        let mut eps = 1.0;
        let mut accepted = None;
        for _ in 0..opts.max_backtracks {
            let trial = clamp(g + eps * direction);
            let ft = f(trial)?;
            if ft >= value + opts.armijo * grad * (trial - g) {
                accepted = Some((trial, ft));
                break;
            }
            eps *= 0.5;
        }
        let Some((trial, ft)) = accepted else {
            st.stop = NewtonStop::LineSearchFailed;
            return Ok(st);
        };
        let moved = (trial - g).abs();
        st.step = eps;
        g = trial;
        value = ft;
        st.gamma_pcs = g;
        st.value = value;
        st.iter = k + 1;
        st.trace.push((g, value));
        if (g - bound).abs() <= 1e-12 {
            st.stop = NewtonStop::Bound;
            return Ok(st);
        }
        if moved <= 1e-12 * g {
            st.stop = NewtonStop::Stagnated;
            return Ok(st);
        }
    }
    st.stop = NewtonStop::IterationCap;
    Ok(st)
}

/// PCS upper bound for association weight `xi` at the representative
/// pair distance `1/(λ_FD π)`.
pub fn pcs_bound(cfg: &NetworkConfig, xi: f64) -> f64 {
    pcs_upper_bound(xi, paper_mean_nn(cfg.lambda_fd()), cfg)
}

/// Default warm start: the configured threshold, capped by the bound.
pub fn default_gamma0(cfg: &NetworkConfig, xi: f64) -> f64 {
    cfg.pcs.min(pcs_bound(cfg, xi))
}

/// Newton search for the PCS threshold maximizing the FD throughput
/// density at association weight `xi_star`.
pub fn newton_pcs(xi_star: f64, cfg: &NetworkConfig, gamma0: f64) -> Result<NewtonState, OptimizerError> {
    newton_pcs_for(PcsObjective::Fd, xi_star, cfg, gamma0)
}

pub fn newton_pcs_for(
    objective: PcsObjective,
    xi_star: f64,
    cfg: &NetworkConfig,
    gamma0: f64,
) -> Result<NewtonState, OptimizerError> {
    let bound = pcs_bound(cfg, xi_star);
    newton_maximize(
        |g| objective.value(cfg, xi_star, g),
        bound,
        gamma0,
        NewtonOptions::default(),
    )
}

/// AP and STA locations of one realization.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    pub aps: PointSet,
    pub stas: PointSet,
}

impl Network {
    /// Independent AP and STA processes on the config window.
    pub fn sample(cfg: &NetworkConfig, seed: u64) -> Self {
        Self {
            aps: sample_ppp(cfg.lambda_a, cfg.window, derive_seed(seed, 0xA9)),
            stas: sample_ppp(cfg.lambda_s, cfg.window, derive_seed(seed, 0x57)),
        }
    }

    /// `cfg` with densities replaced by this realization's counts per area.
    pub fn empirical_config(&self, cfg: &NetworkConfig) -> NetworkConfig {
        NetworkConfig {
            lambda_s: self.stas.empirical_density(),
            lambda_a: self.aps.empirical_density(),
            ..cfg.clone()
        }
    }
}

pub const ASSOCIATION_TOL: f64 = 1e-9;
pub const ASSOCIATION_MAX_ITER: usize = 500;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JapoResult {
    pub association: AssociationState,
    /// Chosen AP per STA.
    pub assignment: Vec<usize>,
    /// Mean relaxed weight of the chosen pairs.
    pub xi_star: f64,
    pub gamma_star: f64,
    pub sdt_star: f64,
    /// Objective at `xi_star` and the configured fixed threshold.
    pub sdt_fixed: f64,
    pub newton: NewtonState,
}

/// Association at the configured threshold, then the threshold search,
/// on a given network. Densities come from the network's counts.
pub fn japo_on(cfg: &NetworkConfig, net: &Network, objective: PcsObjective) -> Result<JapoResult, OptimizerError> {
    let emp = net.empirical_config(cfg);
    let inst =
        AssociationInstance::from_network(&emp, &net.aps, &net.stas).map_err(OptimizerError::at("association"))?;
    let association = solve_association(&inst, ASSOCIATION_TOL, ASSOCIATION_MAX_ITER);
    let assignment = association.rounded();
    let xi_star = assignment
        .iter()
        .enumerate()
        .map(|(j, &i)| association.xi[i * association.n_sta + j])
        .sum::<f64>()
        / assignment.len() as f64;
    let sdt_fixed = objective
        .value(&emp, xi_star, emp.pcs)
        .map_err(OptimizerError::at("fixed threshold"))?;
    let newton = newton_pcs_for(objective, xi_star, &emp, default_gamma0(&emp, xi_star))
        .map_err(OptimizerError::at("threshold search"))?;
    Ok(JapoResult {
        assignment,
        xi_star,
        gamma_star: newton.gamma_pcs,
        sdt_star: newton.value,
        sdt_fixed,
        newton,
        association,
    })
}

/// JAPO on the network sampled from `cfg.seed`.
pub fn japo(cfg: &NetworkConfig) -> Result<JapoResult, OptimizerError> {
    japo_on(cfg, &Network::sample(cfg, cfg.seed), PcsObjective::Fd)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::throughput::ssf_mean_rate;

    fn small_instance(seed: u64, n_ap: usize, n_sta: usize) -> (NetworkConfig, AssociationInstance) {
        let cfg = NetworkConfig {
            lambda_s: 0.9,
            window: (4.0, 4.0),
            ..Default::default()
        };
        let mut rng = crate::geometry::rng_from_seed(seed);
        use rand::Rng;
        let mut pts = |n: usize| PointSet {
            points: (0..n)
                .map(|_| [rng.random::<f64>() * 4.0, rng.random::<f64>() * 4.0])
                .collect(),
            density: 0.0,
            window: (4.0, 4.0),
            seed,
        };
        let aps = pts(n_ap);
        let stas = pts(n_sta);
        let inst = AssociationInstance::from_network(&cfg, &aps, &stas).unwrap();
        (cfg, inst)
    }

    #[test]
    fn lagrangian_reduces_to_objective() {
        let (_, inst) = small_instance(1, 2, 3);
        let xi = vec![0.3, 1.0, 0.0, 0.7, 0.0, 1.0];
        assert_eq!(lagrangian(&xi, 0.0, 0.0, &inst), inst.objective(&xi));
        assert!((lagrangian(&xi, 2.5, 0.0, &inst) - inst.objective(&xi)).abs() < 1e-18);
    }

    #[test]
    fn lagrangian_hand_evaluation() {
        // 2 APs × 3 STAs with round numbers.
        let inst = AssociationInstance::from_utilities(2, 3, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0], 0.25);
        let xi = vec![1.0, 0.5, 0.0, 0.0, 0.25, 1.0];
        // Objective (1 + 1 + 0 + 0 + 1.25 + 6)/3; column sums 1, 0.75, 1.
        let obj = 9.25 / 3.0;
        let assoc = (0.0 - 0.25 + 0.0) / 3.0;
        let slack = ((0.25 - 1.0) + (0.25 - 0.75) + (0.25 - 1.0)) / 3.0;
        let expect = obj + 0.4 * assoc + 0.2 * slack;
        assert!((lagrangian(&xi, 0.4, 0.2, &inst) - expect).abs() < 1e-15);
    }

    #[test]
    fn single_ap_converges_immediately() {
        let (_, inst) = small_instance(2, 1, 4);
        let st = solve_association(&inst, 1e-9, 50);
        assert!(st.converged);
        assert_eq!(st.iter, 1);
        assert!(st.xi.iter().all(|&x| x == 1.0));
    }

    #[test]
    fn ties_pick_lowest_index() {
        let inst = AssociationInstance::from_utilities(2, 1, vec![0.5, 0.5], 0.1);
        let st = AssociationState::initial(&inst, 1.0);
        assert_eq!(association_argmax(&st, &inst), vec![1.0, 0.0]);
    }

    #[test]
    fn argmax_matches_enumeration() {
        let (_, inst) = small_instance(3, 3, 5);
        let st = AssociationState {
            delta: 0.2,
            eta: 0.7,
            ..AssociationState::initial(&inst, 1.0)
        };
        let x = association_argmax(&st, &inst);
        let best = (0..243usize)
            .map(|code| {
                let a: Vec<usize> = (0..5).map(|j| (code / 3usize.pow(j)) % 3).collect();
                lagrangian(&assignment_matrix(3, &a), st.delta, st.eta, &inst)
            })
            .fold(f64::NEG_INFINITY, f64::max);
        assert!((lagrangian(&x, st.delta, st.eta, &inst) - best).abs() <= 1e-15);
    }

    #[test]
    fn multiplier_update_by_hand() {
        let inst = AssociationInstance::from_utilities(2, 2, vec![1.0, 2.0, 3.0, 4.0], 0.1);
        let st = AssociationState {
            xi: vec![0.5, 0.2, 0.2, 0.2],
            delta: 0.05,
            eta: 0.3,
            ..AssociationState::initial(&inst, 1.0)
        };
        // Column sums 0.7, 0.4: g_δ = -0.45, g_η = 0.1 - 0.55 = -0.45.
        let (d, e) = update_multipliers(&st, &inst);
        assert!((d - 0.5).abs() < 1e-15 && (e - 0.75).abs() < 1e-15);
        let feasible = AssociationState {
            xi: vec![1.0, 0.0, 0.0, 1.0],
            delta: 0.4,
            ..AssociationState::initial(&AssociationInstance::from_utilities(2, 2, vec![0.0; 4], 1.0), 1.0)
        };
        let inst1 = AssociationInstance::from_utilities(2, 2, vec![0.0; 4], 1.0);
        assert_eq!(update_multipliers(&feasible, &inst1), (0.4, 0.0));
        let push_down = AssociationState {
            xi: vec![1.0, 1.0, 1.0, 1.0],
            delta: 0.1,
            ..feasible
        };
        assert_eq!(update_multipliers(&push_down, &inst1).0, 0.0);
    }

    #[test]
    fn association_reaches_baseline_and_is_monotone() {
        let (cfg, inst) = small_instance(4, 3, 5);
        let st = solve_association(&inst, 1e-9, 500);
        assert!(st.converged);
        for j in 0..5 {
            let s: f64 = (0..3).map(|i| st.xi[i * 5 + j]).sum();
            assert!((s - 1.0).abs() < 1e-12);
        }
        let objs: Vec<f64> = st.history.iter().map(|h| h.2).collect();
        assert!(objs.windows(2).all(|w| w[1] >= w[0] - 1e-15));
        // Nearest-AP choice on the same realization.
        let ssf: Vec<usize> = (0..5)
            .map(|j| (1..3).fold(0, |b, i| if inst.u(i, j) > inst.u(b, j) { i } else { b }))
            .collect();
        let ssf_obj = inst.objective(&assignment_matrix(3, &ssf));
        assert!(st.objective >= ssf_obj - 1e-15);
        assert!(ssf_mean_rate(&cfg).is_ok());
    }

    #[test]
    fn quadratic_seam_derivatives() {
        let f = |x: f64| Ok(3.0 * (x - 2.0) * (x - 2.0) + 1.0);
        let (g, h) = derivatives(f, 1.5).unwrap();
        assert!((g - (-3.0)).abs() < 1e-8, "{g}");
        assert!((h - 6.0).abs() < 1e-6, "{h}");
    }

    #[test]
    fn newton_climbs_to_bound_at_evaluation_setup() {
        let cfg = NetworkConfig {
            lambda_s: 0.9,
            ..Default::default()
        };
        let st = newton_pcs(1.0, &cfg, default_gamma0(&cfg, 1.0)).unwrap();
        assert_eq!(st.stop, NewtonStop::Bound);
        assert!(st.gamma_pcs <= st.bound);
        assert!(st.trace.windows(2).all(|w| w[1].1 >= w[0].1));
        let fixed = PcsObjective::Fd.value(&cfg, 1.0, 1e-7).unwrap();
        assert!(st.value >= fixed - 1e-9);
    }

    #[test]
    fn newton_at_bound_stops_by_bound() {
        let cfg = NetworkConfig::default();
        let b = pcs_bound(&cfg, 1.0);
        let st = newton_pcs(1.0, &cfg, b).unwrap();
        assert_eq!(st.stop, NewtonStop::Bound);
        assert_eq!(st.iter, 0);
    }

    #[test]
    fn newton_stationary_start_stops_immediately() {
        // Negligible transmit power lifts the bound above the interior peak.
        let cfg = NetworkConfig {
            lambda_s: 0.9,
            p_tx: 1e-9,
            gamma: 10.0,
            ..Default::default()
        };
        let f = |g: f64| PcsObjective::Fd.value(&cfg, 1.0, g).unwrap();
        // Golden-section refinement in log Γ.
        let (mut a, mut b) = ((1e-6f64).ln(), pcs_bound(&cfg, 1.0).ln());
        let r = 0.5 * (5f64.sqrt() - 1.0);
        for _ in 0..200 {
            let c = b - r * (b - a);
            let d = a + r * (b - a);
            if f(c.exp()) >= f(d.exp()) {
                b = d;
            } else {
                a = c;
            }
        }
        let peak = (0.5 * (a + b)).exp();
        assert!(peak < 0.9 * pcs_bound(&cfg, 1.0));
        let (g, _) = sdt_derivatives(peak, 1.0, &cfg).unwrap();
        assert!(g.abs() < 1e-4 * f(peak), "{g}");
        let st = newton_pcs(1.0, &cfg, peak).unwrap();
        assert_eq!(st.stop, NewtonStop::Stationary);
        assert_eq!(st.iter, 0);
        // From the fixed threshold it climbs to the same peak.
        let climb = newton_pcs(1.0, &cfg, 1e-7).unwrap();
        assert_eq!(climb.stop, NewtonStop::Stationary);
        assert!((climb.gamma_pcs / peak - 1.0).abs() < 1e-3);
    }

    #[test]
    fn japo_degenerate_and_deterministic() {
        let cfg = NetworkConfig::default();
        let net = Network {
            aps: PointSet {
                points: vec![[5.0, 5.0]],
                density: 0.3,
                window: cfg.window,
                seed: 0,
            },
            stas: PointSet {
                points: vec![[5.5, 5.0]],
                density: 0.5,
                window: cfg.window,
                seed: 0,
            },
        };
        let r = japo_on(&cfg, &net, PcsObjective::Fd).unwrap();
        assert_eq!(r.assignment, vec![0]);
        assert_eq!(r.xi_star, 1.0);
        assert!(r.gamma_star <= r.newton.bound && r.sdt_star > 0.0);
        let a = japo(&cfg).unwrap();
        let b = japo(&cfg).unwrap();
        assert_eq!(a, b);
        assert!(a.sdt_star >= a.sdt_fixed);
    }

    #[test]
    fn empty_network_reports_stage() {
        let cfg = NetworkConfig::default();
        let empty = PointSet {
            points: vec![],
            density: 0.3,
            window: cfg.window,
            seed: 0,
        };
        let net = Network {
            aps: empty.clone(),
            stas: empty,
        };
        let err = japo_on(&cfg, &net, PcsObjective::Fd).unwrap_err();
        assert!(err.to_string().starts_with("association:"));
    }
}

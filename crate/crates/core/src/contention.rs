//! Matérn type-II model of CSMA/CA contention.
//!
//! A node transmits when its backoff mark is the lowest inside its carrier
//! sense disc. The analytic side reduces that rule to a contention area Θ;
//! the simulation side applies it exactly to sampled points.

use std::f64::consts::PI;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erf;
use thiserror::Error;

use crate::config::{NetworkConfig, ThetaModel};
use crate::geometry::{dist2, mean_path_loss, Grid, PointSet};
use crate::quad::{integrate, QuadError, Tolerance};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ContentionError {
    #[error("{marks} marks for {points} points")]
    MarkCountMismatch { marks: usize, points: usize },
    #[error("carrier sense range must be positive (got {0})")]
    NonPositiveRange(f64),
    #[error(transparent)]
    Quadrature(#[from] QuadError),
}

/// Points, their backoff marks and the carrier-sense radius.
#[derive(Debug, Clone, PartialEq)]
pub struct ThinningInput {
    pub points: PointSet,
    pub marks: Vec<f64>,
    pub cs_range: f64,
}

impl ThinningInput {
    pub fn new(points: PointSet, marks: Vec<f64>, cs_range: f64) -> Result<Self, ContentionError> {
        if marks.len() != points.len() {
            return Err(ContentionError::MarkCountMismatch {
                marks: marks.len(),
                points: points.len(),
            });
        }
        if cs_range.is_nan() || cs_range <= 0.0 {
            return Err(ContentionError::NonPositiveRange(cs_range));
        }
        Ok(Self {
            points,
            marks,
            cs_range,
        })
    }

    /// Draws U[0,1] marks from `rng`.
    pub fn with_uniform_marks<R: Rng>(points: PointSet, cs_range: f64, rng: &mut R) -> Result<Self, ContentionError> {
        let marks = (0..points.len()).map(|_| rng.random::<f64>()).collect();
        Self::new(points, marks, cs_range)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThinningResult {
    /// Indices of retained points, ascending.
    pub retained: Vec<usize>,
    /// Retained fraction; 0 for an empty input.
    pub empirical_p: f64,
}

/// Retention probability, active density and the area they come from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContentionSummary {
    pub theta: f64,
    pub access_p: f64,
    pub active_density: f64,
}

impl ContentionSummary {
    pub fn new(lambda: f64, theta: f64) -> Self {
        let access_p = access_probability(lambda, theta);
        Self {
            theta,
            access_p,
            active_density: access_p * lambda,
        }
    }
}

/// Indices of points whose mark is below every other mark within `radius`.
pub(crate) fn matern_retained(points: &[[f64; 2]], marks: &[f64], radius: f64) -> Vec<usize> {
    let grid = Grid::new(points, radius);
    let r2 = radius * radius;
    (0..points.len())
        .filter(|&i| {
            let mut keep = true;
            grid.for_each_near(points[i], radius, |j| {
                if j != i && marks[j] <= marks[i] && dist2(points[i], points[j]) <= r2 {
                    // Ties go to the lower index so exactly one survives.
                    if marks[j] < marks[i] || j < i {
                        keep = false;
                    }
                }
                keep
            });
            keep
        })
        .collect()
}

/// Exact Matérn type-II thinning.
pub fn simulate_matern_thinning(input: &ThinningInput) -> ThinningResult {
    let retained = matern_retained(&input.points.points, &input.marks, input.cs_range);
    let n = input.points.len();
    let empirical_p = if n == 0 { 0.0 } else { retained.len() as f64 / n as f64 };
    ThinningResult { retained, empirical_p }
}

/// Analytic vs simulated retention for a PPP of density `lambda` thinned
/// with radius `radius`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThinningOracle {
    pub lambda: f64,
    pub radius: f64,
    pub realizations: usize,
    pub analytic: f64,
    /// Pooled retained fraction over points at least `radius` from the
    /// window edge, whose contention discs are fully observed.
    pub empirical: f64,
    /// Linearized standard error of the pooled ratio.
    pub stderr: f64,
    pub rel_error: f64,
    /// Pairs of retained points closer than `radius`, checked exhaustively.
    pub hard_core_violations: usize,
    pub points: usize,
}

impl ThinningOracle {
    /// `|empirical - analytic|` in standard errors.
    pub fn z(&self) -> f64 {
        (self.empirical - self.analytic).abs() / self.stderr
    }
}

/// Runs `n` independent thinning realizations on a window whose interior
/// (edge distance ≥ `radius`) holds about 60 points.
pub fn thinning_oracle(lambda: f64, radius: f64, n: usize, seed: u64) -> Result<ThinningOracle, ContentionError> {
    if radius.is_nan() || radius <= 0.0 {
        return Err(ContentionError::NonPositiveRange(radius));
    }
    let inner = (60.0 / lambda).sqrt().max(2.0 * radius);
    let side = inner + 2.0 * radius;
    let r2 = radius * radius;
    let per: Vec<(f64, f64, usize)> = (0..n as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = crate::geometry::rng_from_seed(crate::geometry::derive_seed(seed, i));
            let pts = crate::geometry::sample_ppp_points(&mut rng, lambda, (side, side));
            let marks: Vec<f64> = (0..pts.len()).map(|_| rng.random::<f64>()).collect();
            let kept = matern_retained(&pts, &marks, radius);
            let interior = |p: [f64; 2]| p[0].min(p[1]).min(side - p[0]).min(side - p[1]) >= radius;
            let total = pts.iter().filter(|&&p| interior(p)).count() as f64;
            let hits = kept.iter().filter(|&&k| interior(pts[k])).count() as f64;
            let mut violations = 0;
            for (a, &ka) in kept.iter().enumerate() {
                for &kb in &kept[a + 1..] {
                    if dist2(pts[ka], pts[kb]) < r2 {
                        violations += 1;
                    }
                }
            }
            (hits, total, violations)
        })
        .collect();
    let hits: f64 = per.iter().map(|x| x.0).sum();
    let total: f64 = per.iter().map(|x| x.1).sum();
    let ratio = hits / total;
    let mean_total = total / n as f64;
    let resid: f64 = per.iter().map(|&(y, x, _)| (y - ratio * x).powi(2)).sum();
    let stderr = (resid / (n as f64 * (n as f64 - 1.0).max(1.0))).sqrt() / mean_total;
    let analytic = access_probability(lambda, PI * r2);
    Ok(ThinningOracle {
        lambda,
        radius,
        realizations: n,
        analytic,
        empirical: ratio,
        stderr,
        rel_error: (ratio - analytic).abs() / analytic,
        hard_core_violations: per.iter().map(|x| x.2).sum(),
        points: total as usize,
    })
}

/// Carrier-sense radius `Γ^(-1/α)`.
pub fn carrier_sense_range(pcs: f64, alpha: f64) -> f64 {
    pcs.powf(-1.0 / alpha)
}

const THETA_TOL: f64 = 1e-8;

/// `2π ∫₀^∞ exp(-Γ (r/d₀)^α) r dr` by adaptive quadrature, where `d₀` is the
/// distance unit (`dist_scale`).
pub fn theta_numeric(pcs: f64, alpha: f64, dist_scale: f64) -> Result<f64, QuadError> {
    // r = d₀ Γ^(-1/α) u maps the kernel to exp(-u^α).
    let scale = dist_scale * carrier_sense_range(pcs, alpha);
    // exp(-u^α) < 1e-30 beyond this point.
    let upper = 70f64.powf(1.0 / alpha);
    let unit = integrate(
        |u| (-u.powf(alpha)).exp() * u,
        0.0,
        upper,
        Tolerance::relative(THETA_TOL * 0.1),
    )?;
    Ok(2.0 * PI * scale * scale * unit)
}

/// `2π Γ(2/α) Γ^(-2/α) / α`, the closed form of [`theta_numeric`].
pub fn theta_gamma_function(pcs: f64, alpha: f64) -> f64 {
    2.0 * PI * statrs::function::gamma::gamma(2.0 / alpha) * pcs.powf(-2.0 / alpha) / alpha
}

/// `π √(π/Γ) erf(√Γ ℓ)` with the path loss `ℓ` as erf argument.
pub fn theta_closed_form(pcs: f64, path_loss: f64) -> f64 {
    PI * (PI / pcs).sqrt() * erf(pcs.sqrt() * path_loss)
}

/// `(1 - e^{-x}) / x` with a series below `x = 1e-8`.
pub fn one_minus_exp_over_x(x: f64) -> f64 {
    if x < 1e-8 {
        1.0 - x / 2.0 + x * x / 6.0
    } else {
        -(-x).exp_m1() / x
    }
}

/// Retention probability `(1 - e^{-λΘ}) / (λΘ)`.
pub fn access_probability(lambda: f64, theta: f64) -> f64 {
    one_minus_exp_over_x(lambda * theta)
}

/// `λ · access_probability = (1 - e^{-λΘ}) / Θ`.
pub fn active_density(lambda: f64, theta: f64) -> f64 {
    lambda * access_probability(lambda, theta)
}

/// Θ for a population of density `lambda` under the configured model.
pub fn contention_theta(cfg: &NetworkConfig, lambda: f64) -> Result<f64, QuadError> {
    match cfg.theta_model {
        ThetaModel::Numeric => theta_numeric(cfg.pcs, cfg.alpha, 1.0),
        ThetaModel::ClosedForm => Ok(theta_closed_form(cfg.pcs, mean_path_loss(lambda, cfg.alpha))),
    }
}

pub fn contention_summary(cfg: &NetworkConfig, lambda: f64) -> Result<ContentionSummary, QuadError> {
    Ok(ContentionSummary::new(lambda, contention_theta(cfg, lambda)?))
}

/// Active STA and AP densities `(λ̃_s, λ̃_a)` for half-duplex contention.
pub fn hd_active_densities(cfg: &NetworkConfig) -> Result<(f64, f64), QuadError> {
    Ok((
        contention_summary(cfg, cfg.lambda_s)?.active_density,
        contention_summary(cfg, cfg.lambda_a)?.active_density,
    ))
}

/// Probability that an AP and its STA win contention together, from the
/// superposed density `λ_FD = λ_s + λ_a`.
pub fn fd_access_probability(cfg: &NetworkConfig) -> Result<f64, QuadError> {
    Ok(contention_summary(cfg, cfg.lambda_fd())?.access_p)
}

/// `λ̃_FD = fd_access_probability · λ_FD`.
pub fn fd_active_density(cfg: &NetworkConfig) -> Result<f64, QuadError> {
    Ok(fd_access_probability(cfg)? * cfg.lambda_fd())
}

/// Largest PCS threshold that still lets the pair meet the SINR target:
/// `ξ · dist^(-α) / (1 + P_t γ^(1/α))^α`.
pub fn pcs_upper_bound(xi: f64, dist: f64, cfg: &NetworkConfig) -> f64 {
    let guard = 1.0 + cfg.p_tx * cfg.gamma.powf(1.0 / cfg.alpha);
    xi * dist.powf(-cfg.alpha) / guard.powf(cfg.alpha)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{paper_mean_nn, rng_from_seed, sample_ppp};
    use proptest::prelude::*;

    fn thin(points: Vec<[f64; 2]>, marks: Vec<f64>, r: f64) -> ThinningResult {
        let set = PointSet {
            points,
            density: 1.0,
            window: (10.0, 10.0),
            seed: 0,
        };
        simulate_matern_thinning(&ThinningInput::new(set, marks, r).unwrap())
    }

    #[test]
    fn lone_point_survives() {
        let r = thin(vec![[1.0, 1.0]], vec![0.9], 3.0);
        assert_eq!(r.retained, vec![0]);
        assert_eq!(r.empirical_p, 1.0);
    }

    #[test]
    fn separated_points_both_survive() {
        let r = thin(vec![[1.0, 1.0], [5.0, 1.0]], vec![0.9, 0.1], 3.0);
        assert_eq!(r.retained, vec![0, 1]);
    }

    #[test]
    fn contender_with_lower_mark_wins() {
        let r = thin(vec![[1.0, 1.0], [2.0, 1.0], [3.5, 1.0]], vec![0.5, 0.2, 0.7], 1.6);
        // 1 beats 0 and 2; 2 is only in range of 1.
        assert_eq!(r.retained, vec![1]);
    }

    #[test]
    fn input_validation() {
        let set = sample_ppp(0.5, (4.0, 4.0), 1);
        let n = set.len();
        assert!(matches!(
            ThinningInput::new(set.clone(), vec![0.5; n + 1], 1.0),
            Err(ContentionError::MarkCountMismatch { .. })
        ));
        assert!(matches!(
            ThinningInput::new(set, vec![0.5; n], 0.0),
            Err(ContentionError::NonPositiveRange(_))
        ));
    }

    #[test]
    fn theta_alpha_two_is_gaussian() {
        for pcs in [1e-3, 0.5, 4.0] {
            let t = theta_numeric(pcs, 2.0, 1.0).unwrap();
            assert!((t / (PI / pcs) - 1.0).abs() < 1e-9, "{pcs}: {t}");
        }
    }

    #[test]
    fn theta_matches_gamma_function_form() {
        for &(pcs, alpha) in &[(1e-7, 3.4), (1e-3, 3.4), (1.0, 2.5), (10.0, 4.0)] {
            let q = theta_numeric(pcs, alpha, 1.0).unwrap();
            let c = theta_gamma_function(pcs, alpha);
            assert!((q / c - 1.0).abs() < 1e-8, "{pcs} {alpha}: {q} vs {c}");
        }
    }

    #[test]
    fn theta_at_fixed_threshold_snapshot() {
        // 2π Γ(2/3.4) (1e-7)^(-2/3.4) / 3.4, evaluated with mpmath.
        let t = theta_numeric(1e-7, 3.4, 1.0).unwrap();
        assert!((t / 36_751.985_988_560_11 - 1.0).abs() < 1e-8, "{t}");
    }

    #[test]
    fn theta_scales_with_distance_unit() {
        let a = theta_numeric(0.3, 3.4, 1.0).unwrap();
        let b = theta_numeric(0.3, 3.4, 2.0).unwrap();
        assert!((b / a - 4.0).abs() < 1e-9);
    }

    #[test]
    fn closed_form_limits() {
        assert!((theta_closed_form(1.0, 1e6) - PI.powf(1.5)).abs() < 1e-12);
        assert!(theta_closed_form(1e12, 1.0) < 1e-5);
    }

    #[test]
    fn access_probability_limits() {
        assert_eq!(access_probability(1.0, 0.0), 1.0);
        assert!((access_probability(1.0, 1.0) - (1.0 - (-1f64).exp())).abs() < 1e-15);
        assert!((active_density(3.0, 1e-14) - 3.0).abs() < 1e-12);
        assert!((active_density(1e6, 2.0) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn series_branch_matches_direct_evaluation() {
        let x: f64 = 1e-8;
        let direct = -(-x).exp_m1() / x;
        assert!((one_minus_exp_over_x(x * 0.999_999) - direct).abs() < 1e-12);
        assert!((one_minus_exp_over_x(x) - direct).abs() < 1e-15);
    }

    #[test]
    fn hd_densities_regression() {
        let cfg = NetworkConfig::default();
        let (s, a) = hd_active_densities(&cfg).unwrap();
        assert!(s > 0.0 && s <= 0.5 && a > 0.0 && a <= 0.3);
        // Saturated: both close to 1/Θ.
        let theta = theta_numeric(1e-7, 3.4, 1.0).unwrap();
        assert!((s * theta - 1.0).abs() < 1e-6);
        let sym = NetworkConfig {
            lambda_s: 0.3,
            ..cfg.clone()
        };
        let (s2, a2) = hd_active_densities(&sym).unwrap();
        assert_eq!(s2, a2);
        let open = NetworkConfig { pcs: 1e12, ..cfg };
        let (s3, a3) = hd_active_densities(&open).unwrap();
        assert!((s3 / 0.5 - 1.0).abs() < 1e-4 && (a3 / 0.3 - 1.0).abs() < 1e-4);
    }

    #[test]
    fn closed_form_theta_densities() {
        let cfg = NetworkConfig {
            theta_model: ThetaModel::ClosedForm,
            ..Default::default()
        };
        let (s, a) = hd_active_densities(&cfg).unwrap();
        assert!(s > 0.0 && s <= 0.5 && a > 0.0 && a <= 0.3);
        // Closed form with argument √Γ (λ_FD π)^α.
        let lfd = cfg.lambda_fd();
        let theta = PI * (PI / cfg.pcs).sqrt() * erf(cfg.pcs.sqrt() * (lfd * PI).powf(cfg.alpha));
        let expect = (1.0 - (-lfd * theta).exp()) / (lfd * theta);
        assert!((fd_access_probability(&cfg).unwrap() - expect).abs() < 1e-15);
    }

    #[test]
    fn fd_access_limits_and_ordering() {
        let base = NetworkConfig::default();
        let open = NetworkConfig {
            pcs: 1e12,
            ..base.clone()
        };
        assert!((fd_access_probability(&open).unwrap() - 1.0).abs() < 1e-4);
        let loose = NetworkConfig {
            pcs: 1e-3,
            ..base.clone()
        };
        assert!(fd_access_probability(&loose).unwrap() > fd_access_probability(&base).unwrap());
        let d = fd_active_density(&base).unwrap();
        assert!(d > 0.0 && d <= base.lambda_fd());
        let mut prev = f64::INFINITY;
        for k in 1..=20 {
            let cfg = NetworkConfig {
                lambda_s: 0.1 * k as f64 - 0.05,
                lambda_a: 0.05,
                ..base.clone()
            };
            let p = fd_access_probability(&cfg).unwrap();
            assert!(p <= prev);
            prev = p;
        }
    }

    #[test]
    fn pcs_bound_two_paths() {
        let cfg = NetworkConfig {
            gamma: 10.0,
            ..Default::default()
        };
        let dist = paper_mean_nn(0.8);
        assert_eq!(pcs_upper_bound(0.0, dist, &cfg), 0.0);
        // Enlarged range d(1 + P γ^(1/α)), then Γ = range^(-α).
        let csr = dist * (1.0 + cfg.p_tx * cfg.gamma.powf(1.0 / cfg.alpha));
        let via_range = csr.powf(-cfg.alpha);
        assert!((pcs_upper_bound(1.0, dist, &cfg) / via_range - 1.0).abs() < 1e-13);
        let quiet = NetworkConfig {
            p_tx: 1e-300,
            ..cfg.clone()
        };
        assert!((pcs_upper_bound(0.4, dist, &quiet) / (0.4 * dist.powf(-cfg.alpha)) - 1.0).abs() < 1e-13);
    }

    #[test]
    fn fixed_threshold_bound_snapshot() {
        let cfg = NetworkConfig {
            lambda_s: 0.9,
            ..Default::default()
        };
        let b = pcs_upper_bound(1.0, paper_mean_nn(cfg.lambda_fd()), &cfg);
        assert!((b / 1.395_831_943_383_120_9e-5 - 1.0).abs() < 1e-12, "{b}");
    }

    #[test]
    fn access_matches_thinning_for_unit_load() {
        // λπR² = 1: (1 - e^-1) ≈ 0.632 within 2%.
        let lambda = 1.0;
        let r = (1.0 / PI).sqrt();
        let (mut kept, mut total) = (0usize, 0usize);
        let mut rng = rng_from_seed(5);
        for seed in 0..2000u64 {
            let set = sample_ppp(lambda, (8.0, 8.0), seed);
            let input = ThinningInput::with_uniform_marks(set.clone(), r, &mut rng).unwrap();
            let res = simulate_matern_thinning(&input);
            let inner: Vec<usize> = (0..set.len())
                .filter(|&i| set.edge_distance(set.points[i]) > r)
                .collect();
            total += inner.len();
            kept += inner.iter().filter(|i| res.retained.binary_search(i).is_ok()).count();
        }
        let p = kept as f64 / total as f64;
        assert!((p / (1.0 - (-1f64).exp()) - 1.0).abs() < 0.02, "{p}");
    }

    proptest! {
        #[test]
        fn retained_points_are_hard_core(seed in any::<u64>(), lambda in 0.1f64..3.0, r in 0.05f64..2.0) {
            let set = sample_ppp(lambda, (6.0, 6.0), seed);
            let mut rng = rng_from_seed(seed ^ 1);
            let input = ThinningInput::with_uniform_marks(set, r, &mut rng).unwrap();
            let res = simulate_matern_thinning(&input);
            let pts = &input.points.points;
            for (a, &i) in res.retained.iter().enumerate() {
                for &j in &res.retained[a + 1..] {
                    prop_assert!(dist2(pts[i], pts[j]) > r * r);
                }
            }
            // Every discarded point has a lower-marked contender in range.
            for i in 0..pts.len() {
                if res.retained.binary_search(&i).is_err() {
                    prop_assert!((0..pts.len()).any(|j| j != i
                        && input.marks[j] < input.marks[i]
                        && dist2(pts[i], pts[j]) <= r * r));
                }
            }
        }

        #[test]
        fn access_bounds_and_monotone_in_threshold(lambda in 0.01f64..5.0, e1 in -9.0f64..2.0, de in 0.01f64..3.0) {
            let cfg = |pcs: f64| NetworkConfig { lambda_s: lambda, pcs, ..Default::default() };
            let lo = contention_summary(&cfg(10f64.powf(e1)), lambda).unwrap();
            let hi = contention_summary(&cfg(10f64.powf(e1 + de)), lambda).unwrap();
            prop_assert!(lo.access_p > 0.0 && lo.access_p <= 1.0);
            prop_assert!(lo.active_density <= lambda);
            prop_assert!(hi.access_p >= lo.access_p);
            prop_assert!(hi.theta < lo.theta);
        }

        #[test]
        fn theta_increases_with_inverse_alpha(pcs_exp in -8.0f64..-1.0, a in 2.2f64..5.0) {
            let pcs = 10f64.powf(pcs_exp);
            let t1 = theta_numeric(pcs, a + 0.2, 1.0).unwrap();
            let t0 = theta_numeric(pcs, a, 1.0).unwrap();
            prop_assert!(t0 > t1);
        }
    }
}

//! Spatial density of throughput (nats/s/Hz per unit area) for half-duplex
//! UL/DL, bidirectional FD, and the nearest-AP baseline.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::config::{NetworkConfig, StpModel};
use crate::contention::{fd_active_density, hd_active_densities};
use crate::geometry::mean_path_loss;
use crate::link::{stp_fd_analytic, stp_fd_laplace, stp_laplace, Direction};
use crate::quad::{integrate, QuadError, Tolerance};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum SdtMode {
    HdUl,
    HdDl,
    Fd,
    SsfFd,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SdtReport {
    pub mode: SdtMode,
    pub active_density: f64,
    pub stp: f64,
    /// `active_density · ln(1+γ) · stp`.
    pub sdt: f64,
    /// Set when the closed-form STP expression left [0, 1] and was clamped.
    pub flagged: bool,
    pub inputs: NetworkConfig,
}

impl SdtReport {
    fn new(mode: SdtMode, cfg: &NetworkConfig, active_density: f64, stp: f64, flagged: bool) -> Self {
        Self {
            mode,
            active_density,
            stp,
            sdt: active_density * cfg.gamma.ln_1p() * stp,
            flagged,
            inputs: cfg.clone(),
        }
    }
}

/// Path loss the closed-form model assigns to an associated pair,
/// `(λ_FD π)^α`.
pub fn representative_path_loss(cfg: &NetworkConfig) -> f64 {
    mean_path_loss(cfg.lambda_fd(), cfg.alpha)
}

/// Bidirectional STP under the configured model, with its clamp flag.
pub fn fd_stp(cfg: &NetworkConfig, xi: f64, ell_des: f64, lt_s: f64, lt_a: f64) -> (f64, bool) {
    match cfg.stp_model {
        StpModel::Laplace => (stp_fd_laplace(cfg, xi, ell_des, lt_s, lt_a), false),
        StpModel::ClosedForm => {
            let p = stp_fd_analytic(cfg, xi, ell_des, lt_s, lt_a);
            (p.value, p.out_of_range)
        }
    }
}

/// Half-duplex SDT with association weight `xi`. UL hears active STAs, DL
/// hears active APs.
pub fn sdt_hd_with(cfg: &NetworkConfig, direction: Direction, xi: f64) -> Result<SdtReport, QuadError> {
    let (lt_s, lt_a) = hd_active_densities(cfg)?;
    let ell = representative_path_loss(cfg);
    let (mode, density, interferers) = match direction {
        Direction::Dl => (SdtMode::HdDl, lt_a, lt_a),
        _ => (SdtMode::HdUl, lt_s, lt_s),
    };
    let stp = stp_laplace(cfg, xi, ell, interferers);
    Ok(SdtReport::new(mode, cfg, density, stp, false))
}

/// Half-duplex SDT of a fully associated link. `Direction::Fd` is read as UL.
pub fn sdt_hd(cfg: &NetworkConfig, direction: Direction) -> Result<SdtReport, QuadError> {
    sdt_hd_with(cfg, direction, 1.0)
}

/// FD SDT for a pair with desired path loss `ell_des`.
pub fn sdt_fd_at(cfg: &NetworkConfig, xi: f64, ell_des: f64) -> Result<SdtReport, QuadError> {
    let (lt_s, lt_a) = hd_active_densities(cfg)?;
    let (stp, flagged) = fd_stp(cfg, xi, ell_des, lt_s, lt_a);
    Ok(SdtReport::new(SdtMode::Fd, cfg, fd_active_density(cfg)?, stp, flagged))
}

/// `λ̃_FD ln(1+γ) P_FD` at the representative pair path loss.
pub fn sdt_fd(cfg: &NetworkConfig, xi: f64) -> Result<SdtReport, QuadError> {
    sdt_fd_at(cfg, xi, representative_path_loss(cfg))
}

/// Default relative tolerance of the baseline integral.
pub const SSF_TOL: f64 = 1e-10;

/// Baseline mean rate with an explicit quadrature tolerance.
pub fn ssf_mean_rate_with_tol(cfg: &NetworkConfig, rel_tol: f64) -> Result<SdtReport, QuadError> {
    let (lt_s, lt_a) = hd_active_densities(cfg)?;
    let lfd = cfg.lambda_fd();
    // Tail mass exp(-λπ r²) below 1e-12.
    let r_max = (-(1e-12f64).ln() / (lfd * PI)).sqrt();
    let mut flagged = false;
    let stp = integrate(
        |r| {
            if r == 0.0 {
                return 0.0;
            }
            let pdf = 2.0 * PI * lfd * r * (-lfd * PI * r * r).exp();
            let (p, f) = fd_stp(cfg, 1.0, r.powf(-cfg.alpha), lt_s, lt_a);
            flagged |= f;
            p * pdf
        },
        0.0,
        r_max,
        Tolerance {
            rel: rel_tol,
            abs: 1e-300,
            max_intervals: 4000,
        },
    )?;
    Ok(SdtReport::new(
        SdtMode::SsfFd,
        cfg,
        fd_active_density(cfg)?,
        stp,
        flagged,
    ))
}

/// Mean FD rate when every STA joins its nearest AP: the pair STP averaged
/// over the nearest-neighbour distance law of the superposed process.
pub fn ssf_mean_rate(cfg: &NetworkConfig) -> Result<SdtReport, QuadError> {
    ssf_mean_rate_with_tol(cfg, SSF_TOL)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fig4() -> NetworkConfig {
        NetworkConfig {
            lambda_s: 0.9,
            m_tx: 2,
            n_rx: 2,
            ..Default::default()
        }
    }

    #[test]
    fn factorization_is_exact() {
        let cfg = NetworkConfig {
            gamma: 10.0,
            ..Default::default()
        };
        for r in [
            sdt_hd(&cfg, Direction::Ul).unwrap(),
            sdt_hd(&cfg, Direction::Dl).unwrap(),
            sdt_fd(&cfg, 1.0).unwrap(),
            ssf_mean_rate(&cfg).unwrap(),
        ] {
            assert_eq!(r.sdt, r.active_density * cfg.gamma.ln_1p() * r.stp);
            assert!(r.sdt > 0.0 && r.sdt < r.active_density * cfg.gamma.ln_1p());
        }
    }

    #[test]
    fn zero_threshold_and_zero_weight_give_zero() {
        let cfg = NetworkConfig {
            gamma: 1e-300,
            ..Default::default()
        };
        assert!(sdt_hd(&cfg, Direction::Dl).unwrap().sdt < 1e-290);
        assert_eq!(sdt_fd(&NetworkConfig::default(), 0.0).unwrap().sdt, 0.0);
    }

    #[test]
    fn open_channel_limit() {
        let cfg = NetworkConfig {
            pcs: 1e15,
            ..Default::default()
        };
        let r = sdt_fd(&cfg, 1.0).unwrap();
        assert!((r.active_density / cfg.lambda_fd() - 1.0).abs() < 1e-4);
    }

    #[test]
    fn baseline_below_optimized_threshold() {
        use crate::contention::pcs_upper_bound;
        use crate::geometry::paper_mean_nn;
        let cfg = fig4();
        let ssf = ssf_mean_rate(&cfg).unwrap().sdt;
        let fixed = sdt_fd(&cfg, 1.0).unwrap().sdt;
        let bound = pcs_upper_bound(1.0, paper_mean_nn(cfg.lambda_fd()), &cfg);
        let best = sdt_fd(&NetworkConfig { pcs: bound, ..cfg }, 1.0).unwrap().sdt;
        assert!(ssf < fixed && fixed < best, "{ssf} {fixed} {best}");
    }

    #[test]
    fn sweep_has_interior_maximum() {
        let cfg = NetworkConfig { gamma: 10.0, ..fig4() };
        let vals: Vec<f64> = (0..=60)
            .map(|k| {
                let pcs = 10f64.powf(-10.0 + 0.2 * k as f64);
                sdt_fd(&NetworkConfig { pcs, ..cfg.clone() }, 1.0).unwrap().sdt
            })
            .collect();
        let (imax, _) = vals.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap();
        assert!(imax > 0 && imax < vals.len() - 1, "argmax at {imax}");
    }

    #[test]
    fn baseline_quadrature_is_stable() {
        let cfg = fig4();
        let a = ssf_mean_rate_with_tol(&cfg, 1e-9).unwrap().sdt;
        let b = ssf_mean_rate_with_tol(&cfg, 5e-10).unwrap().sdt;
        assert!((a / b - 1.0).abs() < 1e-6);
    }

    #[test]
    fn baseline_mass_concentrates_for_dense_networks() {
        let lfd = 400.0;
        let eps = 0.1;
        let mass = 1.0 - (-lfd * PI * eps * eps).exp();
        assert!(mass > 0.99);
        let cfg = NetworkConfig {
            lambda_s: lfd - 0.3,
            ..Default::default()
        };
        let r = ssf_mean_rate(&cfg).unwrap();
        let (lt_s, lt_a) = hd_active_densities(&cfg).unwrap();
        let near = fd_stp(&cfg, 1.0, eps.powf(-cfg.alpha), lt_s, lt_a).0;
        assert!(r.stp >= 0.99 * near);
    }

    #[test]
    fn closed_form_model_is_selectable() {
        let cfg = NetworkConfig {
            stp_model: StpModel::ClosedForm,
            ..fig4()
        };
        assert_eq!(sdt_fd(&cfg, 1.0).unwrap().stp, 0.0);
    }
}

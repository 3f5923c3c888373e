//! Self-interference statistics, per-link SINR and successful transmission
//! probability, both closed form and simulated.

use std::f64::consts::PI;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, Gamma};
use serde::{Deserialize, Serialize};

use crate::config::NetworkConfig;
use crate::contention::{carrier_sense_range, matern_retained};
use crate::geometry::{derive_seed, dist2, rng_from_seed};

/// Residual self-interference power law: Gamma(shape, scale) built from the
/// Rician SI channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SiGammaParams {
    pub mu: f64,
    pub psi2: f64,
    /// Antenna-array factor `(4MN - (N+1)(M+1)) / ((N+1)(M+1))`.
    pub xi_factor: f64,
    pub shape: f64,
    pub scale: f64,
}

impl SiGammaParams {
    pub fn mean(&self) -> f64 {
        self.shape * self.scale
    }

    pub fn variance(&self) -> f64 {
        self.shape * self.scale * self.scale
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        Gamma::new(self.shape, self.scale)
            .expect("shape and scale are positive")
            .sample(rng)
    }
}

/// Gamma SI parameters. `psi2` keeps the square-root form of the variance
/// term as the model defines it.
pub fn si_gamma_params(k_factor: f64, si_atten: f64, m_tx: u32, n_rx: u32) -> SiGammaParams {
    let mu = (k_factor * si_atten / (k_factor + 1.0)).sqrt();
    let psi2 = (si_atten / (k_factor + 1.0)).sqrt();
    let (m, n) = (m_tx as f64, n_rx as f64);
    let xi_factor = (4.0 * m * n - (n + 1.0) * (m + 1.0)) / ((n + 1.0) * (m + 1.0));
    let mu2 = mu * mu;
    let spread = xi_factor * mu2 * mu2 + 2.0 * mu2 * psi2 + psi2 * psi2;
    let total = mu2 + psi2;
    SiGammaParams {
        mu,
        psi2,
        xi_factor,
        shape: total * total / spread,
        scale: spread / total,
    }
}

pub fn si_params(cfg: &NetworkConfig) -> SiGammaParams {
    si_gamma_params(cfg.k_factor, cfg.si_atten, cfg.m_tx, cfg.n_rx)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Direction {
    Ul,
    Dl,
    Fd,
}

/// Drawn powers for one receiver.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LinkRealization {
    pub desired_gain: f64,
    pub si_power: f64,
    pub interferer_gains: Vec<f64>,
    pub interferer_path_losses: Vec<f64>,
    pub desired_path_loss: f64,
    pub noise: f64,
}

impl LinkRealization {
    fn sinr(&self, xi: f64) -> f64 {
        let interference: f64 = self
            .interferer_gains
            .iter()
            .zip(&self.interferer_path_losses)
            .map(|(g, l)| g * l)
            .sum();
        let signal = xi * self.desired_path_loss * self.desired_gain;
        if signal == 0.0 {
            return 0.0;
        }
        signal / (self.noise + self.si_power + interference)
    }
}

/// SINR at the AP. The SI path gain is 1, so `si_power` enters directly.
pub fn sinr_uplink(r: &LinkRealization, xi: f64) -> f64 {
    r.sinr(xi)
}

/// SINR at the STA; same form with the AP-side interferer set.
pub fn sinr_downlink(r: &LinkRealization, xi: f64) -> f64 {
    r.sinr(xi)
}

/// Value of the bidirectional closed-form STP expression.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClosedFormStp {
    /// Clamped to [0, 1].
    pub value: f64,
    pub raw: f64,
    pub out_of_range: bool,
}

/// The closed form for a bidirectional link, term for term: the
/// minus sign between the logarithms, the `1/π` factor and the absence of
/// SI terms are kept. Clamped to [0, 1] with a flag.
pub fn stp_fd_analytic(cfg: &NetworkConfig, xi: f64, ell_des: f64, lt_s: f64, lt_a: f64) -> ClosedFormStp {
    if xi <= 0.0 {
        return ClosedFormStp {
            value: 0.0,
            raw: 0.0,
            out_of_range: false,
        };
    }
    let g = cfg.gamma;
    let a = cfg.alpha;
    let q = xi * ell_des;
    let ds = 1.0 / (lt_s * PI);
    let da = 1.0 / (lt_a * PI);
    let log_term = (g * ds.powf(-a) / q).ln_1p() - (g * da.powf(-a) / q).ln_1p();
    let first = -2.0 * g * cfg.noise / q - log_term / PI;
    let arc = |d: f64| {
        let c = (g * d.powf(1.0 - a) / q).powi(2);
        c * (d / c).atan()
    };
    let second = -2.0 * (ds + da) + 2.0 * (arc(ds) + arc(da));
    let raw = (first + second).exp();
    ClosedFormStp {
        value: raw.clamp(0.0, 1.0),
        raw,
        out_of_range: !(0.0..=1.0).contains(&raw),
    }
}

/// `Γ(1+δ)Γ(1-δ) = πδ / sin(πδ)` with `δ = 2/α`.
fn interference_constant(alpha: f64) -> f64 {
    let d = 2.0 / alpha;
    PI * d / (PI * d).sin()
}

/// One-direction STP for a receiver with exponential desired gain, Gamma
/// SI and a PPP of active interferers of density `active`:
/// `exp(-sσ²) (1+sρ)^(-κ) exp(-π active C s^(2/α))` with `s = γ/(ξℓ)`.
pub fn stp_laplace(cfg: &NetworkConfig, xi: f64, ell_des: f64, active: f64) -> f64 {
    if xi <= 0.0 {
        return 0.0;
    }
    let si = si_params(cfg);
    let s = cfg.gamma / (xi * ell_des);
    let log_p = -s * cfg.noise
        - si.shape * (s * si.scale).ln_1p()
        - PI * active * interference_constant(cfg.alpha) * s.powf(2.0 / cfg.alpha);
    log_p.exp()
}

/// Bidirectional STP: product of the UL (STA interferers) and DL (AP
/// interferers) probabilities.
pub fn stp_fd_laplace(cfg: &NetworkConfig, xi: f64, ell_des: f64, lt_s: f64, lt_a: f64) -> f64 {
    stp_laplace(cfg, xi, ell_des, lt_s) * stp_laplace(cfg, xi, ell_des, lt_a)
}

/// Where the desired transmitter sits in a simulated link.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum LinkGeometry {
    /// The STA's nearest AP.
    NearestAp,
    /// A fixed link distance.
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McOptions {
    pub geometry: LinkGeometry,
    pub interference: bool,
    pub self_interference: bool,
    pub xi: f64,
    pub seed: u64,
}

impl McOptions {
    pub fn for_config(cfg: &NetworkConfig) -> Self {
        Self {
            geometry: LinkGeometry::NearestAp,
            interference: true,
            self_interference: true,
            xi: 1.0,
            seed: cfg.seed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub estimate: f64,
    pub stderr: f64,
    pub n: usize,
}

impl McEstimate {
    pub fn from_hits(hits: usize, n: usize) -> Self {
        let p = hits as f64 / n as f64;
        let stderr = if n > 1 {
            (p * (1.0 - p) * n as f64 / (n as f64 - 1.0) / n as f64).sqrt()
        } else {
            f64::NAN
        };
        Self { estimate: p, stderr, n }
    }
}

/// Retained marks above this load are below `e^-30` and are not simulated.
const MARK_LOAD_CUTOFF: f64 = 30.0;

/// Active transmitters of a Matérn-thinned PPP of intensity `lambda`,
/// conditioned on a transmitter at `tx` being active. Only interferers
/// within `reach` of `rx` are returned. Points inside `empty` (a disc) are
/// removed first.
///
/// Retention depends only on lower marks, so points with marks above
/// `m*`, where `λπR²m* = 30`, are never drawn.
fn palm_interferers(
    rng: &mut ChaCha8Rng,
    lambda: f64,
    radius: f64,
    tx: [f64; 2],
    rx: [f64; 2],
    empty: Option<([f64; 2], f64)>,
) -> Vec<[f64; 2]> {
    let load = lambda * PI * radius * radius;
    let m_cut = (MARK_LOAD_CUTOFF / load).min(1.0);
    // Mark of a retained point has density ∝ exp(-load·m).
    let u: f64 = rng.random();
    let m0 = if load * m_cut < 1e-12 {
        u * m_cut
    } else {
        -(u * (-load * m_cut).exp_m1()).ln_1p() / load
    };
    let reach = 6.0 * radius.max(1.0 / lambda.sqrt());
    let half = reach + radius + dist2(tx, rx).sqrt();
    let mut pts = vec![tx];
    let mut marks = vec![m0];
    let window = (2.0 * half, 2.0 * half);
    for p in crate::geometry::sample_ppp_points(rng, lambda * m_cut, window) {
        let p = [p[0] - half + tx[0], p[1] - half + tx[1]];
        let m = rng.random::<f64>() * m_cut;
        if m < m0 && dist2(p, tx) <= radius * radius {
            continue;
        }
        if let Some((c, r)) = empty {
            if dist2(p, c) < r * r {
                continue;
            }
        }
        pts.push(p);
        marks.push(m);
    }
    let reach2 = reach * reach;
    matern_retained(&pts, &marks, radius)
        .into_iter()
        .filter(|&i| i != 0 && dist2(pts[i], rx) <= reach2)
        .map(|i| pts[i])
        .collect()
}

/// Draws one receiver's powers. `stream` selects independent generators
/// for geometry and each fading component so changes in one parameter do
/// not shift the others' draws.
fn draw_link(cfg: &NetworkConfig, opts: &McOptions, uplink: bool, seed: u64) -> LinkRealization {
    let mut geo = rng_from_seed(derive_seed(seed, 0));
    let mut fade_des = rng_from_seed(derive_seed(seed, 1));
    let mut fade_si = rng_from_seed(derive_seed(seed, 2));
    let mut fade_int = rng_from_seed(derive_seed(seed, 3));

    // STA at the origin, AP at distance r.
    let r = match opts.geometry {
        LinkGeometry::Fixed(d) => d,
        LinkGeometry::NearestAp => {
            let u: f64 = geo.random();
            (-(1.0 - u).ln() / (cfg.lambda_a * PI)).sqrt()
        }
    };
    let angle = geo.random::<f64>() * 2.0 * PI;
    let sta = [0.0, 0.0];
    let ap = [r * angle.cos(), r * angle.sin()];
    let radius = carrier_sense_range(cfg.pcs, cfg.alpha);

    let interferers = if !opts.interference {
        Vec::new()
    } else if uplink {
        palm_interferers(&mut geo, cfg.lambda_s, radius, sta, ap, None)
    } else {
        let empty = matches!(opts.geometry, LinkGeometry::NearestAp).then_some((sta, r));
        palm_interferers(&mut geo, cfg.lambda_a, radius, ap, sta, empty)
    };
    let rx = if uplink { ap } else { sta };
    let interferer_path_losses: Vec<f64> = interferers
        .iter()
        .map(|&p| dist2(p, rx).sqrt().powf(-cfg.alpha))
        .collect();
    let interferer_gains = interferers.iter().map(|_| Exp1.sample(&mut fade_int)).collect();
    let desired_gain = (0..cfg.m_tx).map(|_| -> f64 { Exp1.sample(&mut fade_des) }).sum();
    let si_power = if opts.self_interference {
        si_params(cfg).sample(&mut fade_si)
    } else {
        0.0
    };
    LinkRealization {
        desired_gain,
        si_power,
        interferer_gains,
        interferer_path_losses,
        desired_path_loss: r.powf(-cfg.alpha),
        noise: cfg.noise,
    }
}

/// Whether the sampled link `index` meets the SINR target.
pub fn link_success(cfg: &NetworkConfig, direction: Direction, opts: &McOptions, index: u64) -> bool {
    let seed = derive_seed(opts.seed, index);
    let ul = || sinr_uplink(&draw_link(cfg, opts, true, derive_seed(seed, 10)), opts.xi) >= cfg.gamma;
    let dl = || sinr_downlink(&draw_link(cfg, opts, false, derive_seed(seed, 11)), opts.xi) >= cfg.gamma;
    match direction {
        Direction::Ul => ul(),
        Direction::Dl => dl(),
        // Independent UL and DL draws; both must succeed.
        Direction::Fd => {
            let (u, d) = (ul(), dl());
            u && d
        }
    }
}

/// Monte-Carlo STP with explicit options.
pub fn stp_monte_carlo_with(
    cfg: &NetworkConfig,
    direction: Direction,
    n_realizations: usize,
    opts: &McOptions,
) -> McEstimate {
    use rayon::prelude::*;
    let hits = (0..n_realizations as u64)
        .into_par_iter()
        .filter(|&i| link_success(cfg, direction, opts, i))
        .count();
    McEstimate::from_hits(hits, n_realizations)
}

/// Monte-Carlo STP of the typical link (nearest AP, thinned interferers,
/// Gamma SI) seeded from `cfg.seed`.
pub fn stp_monte_carlo(cfg: &NetworkConfig, direction: Direction, n_realizations: usize) -> McEstimate {
    stp_monte_carlo_with(cfg, direction, n_realizations, &McOptions::for_config(cfg))
}

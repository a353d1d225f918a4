//! Synthetic longitudinal data generators: a factorial random design and
//! a deterministic lattice.
//!
//! The random design draws, per subject, a latent center μ_i with spread
//! σ_b, then within-subject latent features X̃_ij around μ_i with spread
//! σ_w, embeds them in D dimensions through a fixed random projection P,
//! and builds outcomes
//!
//! ```text
//! Y_ij = f_Y(X̃_ij, μ_i; σ_w) − f_Y(μ_i, 0; σ_b) + ε_ij
//! ```
//!
//! so the within-subject and between-subject parts of the outcome pull in
//! opposite directions. The `Linear` family uses uniform draws (matched
//! mean and variance) and f_Y(x, μ; σ) = Σ_r (x_r − μ_r); the `Radial`
//! family uses Gaussian draws and f_Y(x, μ; σ) = exp(−‖x−μ‖²/(2σ²)).
//!
//! The lattice is fully deterministic: with 1-based indices,
//! μ_i = σ_b(i/m − 1/2), X̃_ij = σ_w(j/n_i − 1/2) + μ_i, and
//! Ỹ_ij = σ_w(j/n_i − 1/2) − μ_i, plus optional observation noise. Its
//! within-subject slope is +1 while the subject means slope is −1, so a
//! pooled i.i.d. fit sees almost no relationship at σ_b = σ_w.
//!
//! All generators consume a single counter-based stream
//! (`ChaCha8Rng::seed_from_u64(seed)`) in a fixed, documented order:
//! projection entries row by row, then subject centers in subject order,
//! then latent features row by row, then noise row by row. Replication
//! harnesses derive independent per-replication seeds before calling in.

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::dataset::LongitudinalDataset;
use crate::error::{Error, Result};
use crate::hsic::GroupIndex;

/// Outcome/feature law family of the random design.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum SimFamily {
    /// Uniform latent draws, additive outcome f_Y(x, μ; σ) = Σ_r (x_r − μ_r).
    Linear,
    /// Gaussian latent draws, outcome f_Y(x, μ; σ) = exp(−‖x−μ‖²/(2σ²)).
    Radial,
}

impl SimFamily {
    /// Canonical lowercase name used in CSV cells and CLI flags.
    pub fn name(&self) -> &'static str {
        match self {
            SimFamily::Linear => "linear",
            SimFamily::Radial => "radial",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "linear" => Ok(SimFamily::Linear),
            "radial" => Ok(SimFamily::Radial),
            other => Err(Error::InvalidConfig(format!(
                "unknown simulation family {:?}; expected linear or radial",
                other
            ))),
        }
    }
}

/// Parameters of the factorial random design.
#[derive(Clone, Debug, serde::Serialize, serde::Deserialize)]
pub struct SimConfig {
    /// Number of subjects m (≥ 2).
    pub m: usize,
    /// Observations per subject n_i (≥ 2, equal across subjects).
    pub n_per_subject: usize,
    /// Latent rank R (1 ≤ R ≤ D).
    pub latent_rank: usize,
    /// Ambient feature dimension D.
    pub ambient_dim: usize,
    /// Between-subject spread σ_b (> 0).
    pub sigma_b: f64,
    /// Within-subject spread σ_w (> 0).
    pub sigma_w: f64,
    /// Observation noise σ_ε (> 0).
    pub sigma_eps: f64,
    pub family: SimFamily,
    pub seed: u64,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.m < 2 || self.n_per_subject < 2 {
            return Err(Error::InvalidConfig(format!(
                "need m ≥ 2 and n_per_subject ≥ 2, got m = {}, n = {}",
                self.m, self.n_per_subject
            )));
        }
        if self.latent_rank == 0 || self.latent_rank > self.ambient_dim {
            return Err(Error::InvalidConfig(format!(
                "need 1 ≤ R ≤ D, got R = {}, D = {}",
                self.latent_rank, self.ambient_dim
            )));
        }
        for (name, v) in [
            ("sigma_b", self.sigma_b),
            ("sigma_w", self.sigma_w),
            ("sigma_eps", self.sigma_eps),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidConfig(format!(
                    "{} must be a positive real, got {}",
                    name, v
                )));
            }
        }
        Ok(())
    }
}

/// Parameters of the deterministic lattice design.
///
/// Unlike [`SimConfig`], zero spreads are meaningful here (σ_b = 0
/// collapses all subjects onto one trajectory, σ_ε = 0 yields the exact
/// lattice), so the sigmas only need to be non-negative.
#[derive(Clone, Debug, serde::Serialize, serde::Deserialize)]
pub struct LatticeConfig {
    pub m: usize,
    pub n_per_subject: usize,
    pub sigma_b: f64,
    pub sigma_w: f64,
    /// Observation noise σ_ε (≥ 0; 0 means the exact lattice).
    pub sigma_eps: f64,
    pub seed: u64,
}

impl LatticeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.m < 2 || self.n_per_subject < 2 {
            return Err(Error::InvalidConfig(format!(
                "need m ≥ 2 and n_per_subject ≥ 2, got m = {}, n = {}",
                self.m, self.n_per_subject
            )));
        }
        for (name, v) in [
            ("sigma_b", self.sigma_b),
            ("sigma_w", self.sigma_w),
            ("sigma_eps", self.sigma_eps),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::InvalidConfig(format!(
                    "{} must be a non-negative real, got {}",
                    name, v
                )));
            }
        }
        Ok(())
    }
}

/// A generated random-design dataset together with the latent quantities
/// tests and diagnostics need.
#[derive(Clone, Debug)]
pub struct SimOutput {
    pub dataset: LongitudinalDataset,
    /// Latent features X̃, n×R, in dataset row order.
    pub latent: Array2<f64>,
    /// Projection P, R×D; observed features are X = X̃ P.
    pub projection: Array2<f64>,
    /// Subject centers μ_i, m×R.
    pub subject_means: Array2<f64>,
    /// Noiseless outcomes Ỹ_ij = f_Y(X̃_ij, μ_i; σ_w) − f_Y(μ_i, 0; σ_b).
    pub latent_outcomes: Vec<f64>,
}

/// A generated lattice dataset with its latent outcomes.
#[derive(Clone, Debug)]
pub struct LatticeOutput {
    pub dataset: LongitudinalDataset,
    /// Noiseless lattice outcomes Ỹ_ij.
    pub latent_outcomes: Vec<f64>,
    /// Subject centers μ_i.
    pub subject_means: Vec<f64>,
}

/// Zero-padded subject label so lexicographic order equals generation
/// order ("s01", "s02", …).
fn subject_label(index: usize, m: usize) -> String {
    let width = m.to_string().len();
    format!("s{:0width$}", index + 1)
}

/// One latent coordinate draw with mean `mu` and standard deviation
/// `sigma` under the family's law: uniform on [μ − √3σ, μ + √3σ] for
/// `Linear` (matching mean and variance), Gaussian for `Radial`.
fn draw_coord(rng: &mut ChaCha8Rng, family: SimFamily, mu: f64, sigma: f64) -> f64 {
    match family {
        SimFamily::Linear => {
            let u: f64 = rng.gen();
            mu + 3.0_f64.sqrt() * sigma * (2.0 * u - 1.0)
        }
        SimFamily::Radial => {
            let normal = Normal::new(mu, sigma).expect("validated sigma");
            normal.sample(rng)
        }
    }
}

/// f_Y(x, μ; σ) for the family.
fn outcome_link(family: SimFamily, x: &[f64], mu: &[f64], sigma: f64) -> f64 {
    match family {
        SimFamily::Linear => x.iter().zip(mu).map(|(a, b)| a - b).sum(),
        SimFamily::Radial => {
            let sq: f64 = x.iter().zip(mu).map(|(a, b)| (a - b) * (a - b)).sum();
            (-sq / (2.0 * sigma * sigma)).exp()
        }
    }
}

/// Generates one dataset from the factorial random design.
///
/// Draw order from the seeded stream: the R×D projection row by row,
/// then the m subject centers, then the latent features row by row, then
/// the per-row noise. Identical configs therefore produce bit-identical
/// output.
pub fn simulate(config: &SimConfig) -> Result<SimOutput> {
    config.validate()?;
    let m = config.m;
    let n_i = config.n_per_subject;
    let r = config.latent_rank;
    let d = config.ambient_dim;
    let n = m * n_i;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    let std_normal = Normal::new(0.0, 1.0).expect("unit normal");
    let projection = Array2::from_shape_fn((r, d), |_| std_normal.sample(&mut rng));

    let mut subject_means = Array2::<f64>::zeros((m, r));
    for i in 0..m {
        for k in 0..r {
            subject_means[(i, k)] = draw_coord(&mut rng, config.family, 0.0, config.sigma_b);
        }
    }

    let mut latent = Array2::<f64>::zeros((n, r));
    for i in 0..m {
        for j in 0..n_i {
            for k in 0..r {
                latent[(i * n_i + j, k)] =
                    draw_coord(&mut rng, config.family, subject_means[(i, k)], config.sigma_w);
            }
        }
    }

    let noise_dist = Normal::new(0.0, config.sigma_eps).expect("validated sigma");
    let zeros = vec![0.0; r];
    let mut latent_outcomes = Vec::with_capacity(n);
    let mut outcomes = Vec::with_capacity(n);
    for i in 0..m {
        let mu: Vec<f64> = (0..r).map(|k| subject_means[(i, k)]).collect();
        let between = outcome_link(config.family, &mu, &zeros, config.sigma_b);
        for j in 0..n_i {
            let row = i * n_i + j;
            let x: Vec<f64> = (0..r).map(|k| latent[(row, k)]).collect();
            let within = outcome_link(config.family, &x, &mu, config.sigma_w);
            let clean = within - between;
            latent_outcomes.push(clean);
            outcomes.push(clean + noise_dist.sample(&mut rng));
        }
    }

    let features = latent.dot(&projection);
    let groups = GroupIndex::from_counts(
        (0..m)
            .map(|i| (subject_label(i, m), n_i))
            .collect::<Vec<_>>(),
    )?;
    let time: Vec<f64> = (0..n).map(|row| (row % n_i + 1) as f64).collect();
    let dataset = LongitudinalDataset::new(groups, features, outcomes, time)?;

    Ok(SimOutput {
        dataset,
        latent,
        projection,
        subject_means,
        latent_outcomes,
    })
}

/// Generates the deterministic lattice (1-based i, j in the formulas),
/// adding Gaussian observation noise only when σ_ε > 0.
pub fn simulate_lattice(config: &LatticeConfig) -> Result<LatticeOutput> {
    config.validate()?;
    let m = config.m;
    let n_i = config.n_per_subject;
    let n = m * n_i;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    let mut subject_means = Vec::with_capacity(m);
    for i in 1..=m {
        subject_means.push(config.sigma_b * (i as f64 / m as f64 - 0.5));
    }

    let mut features = Array2::<f64>::zeros((n, 1));
    let mut latent_outcomes = Vec::with_capacity(n);
    let mut outcomes = Vec::with_capacity(n);
    let noise = if config.sigma_eps > 0.0 {
        Some(Normal::new(0.0, config.sigma_eps).expect("validated sigma"))
    } else {
        None
    };
    for i in 0..m {
        for j in 1..=n_i {
            let row = i * n_i + (j - 1);
            let step = config.sigma_w * (j as f64 / n_i as f64 - 0.5);
            features[(row, 0)] = step + subject_means[i];
            let clean = step - subject_means[i];
            latent_outcomes.push(clean);
            let eps = noise.as_ref().map_or(0.0, |d| d.sample(&mut rng));
            outcomes.push(clean + eps);
        }
    }

    let groups = GroupIndex::from_counts(
        (0..m)
            .map(|i| (subject_label(i, m), n_i))
            .collect::<Vec<_>>(),
    )?;
    let time: Vec<f64> = (0..n).map(|row| (row % n_i + 1) as f64).collect();
    let dataset = LongitudinalDataset::new(groups, features, outcomes, time)?;

    Ok(LatticeOutput {
        dataset,
        latent_outcomes,
        subject_means,
    })
}

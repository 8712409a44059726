use serde::{Deserialize, Serialize};

use crate::analysis::StripGrid;
use crate::conjugacy::ConjugacyConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    /// `r` and `v` from the sufficient bounds; a stage whose bound cannot be
    /// materialized is refused.
    PaperSafe,
    /// `r` and `v` from the schedule; the closeness hypothesis between
    /// consecutive stages is only measured.
    #[default]
    Practical,
}

impl Mode {
    pub fn certified(self) -> bool {
        self == Mode::PaperSafe
    }
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Mode::PaperSafe => "paper-safe",
            Mode::Practical => "practical",
        })
    }
}

impl std::str::FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "paper-safe" => Ok(Mode::PaperSafe),
            "practical" => Ok(Mode::Practical),
            _ => Err(format!("unknown mode {s:?} (expected paper-safe or practical)")),
        }
    }
}

/// Values for one advance `n -> n+1`; unset fields fall back to the schedule defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StageOverride {
    /// The stage being built (`n + 1`).
    pub stage: u32,
    pub r: Option<u64>,
    pub v: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StageSchedule {
    pub mode: Mode,
    pub seed: u64,
    /// Strip half-width for the analytic closeness measurements.
    pub rho: f64,
    pub overrides: Vec<StageOverride>,
    /// Practical-mode `r` when no override is given.
    pub default_r: u64,
    /// Inflate `r` until `q_(n+1) > 10^(n+1)`.
    pub enforce_q_growth: bool,
    /// Paper-safe stages needing `r` above `10^max_log10_r` are refused.
    pub max_log10_r: f64,
    /// Largest `v` tried when it has to be tuned.
    pub v_max: u64,
    /// Distance of the first witness pair.
    pub witness_distance: f64,
    pub witness_draws: u32,
    pub eps_start: f64,
    pub eps_budget: u32,
    pub eps_perturbations: usize,
    pub eps_test_points: usize,
    pub bmm_samples: usize,
    pub bmm_steps: u64,
    /// `(a4)` orbits have `orbit_factor * 2^n * q_n` points, capped at `orbit_cap`.
    pub orbit_factor: u64,
    pub orbit_cap: u64,
    /// Orbits up to this length are kept for the exact covering-radius search.
    pub exact_density_limit: usize,
    /// Longest direct iteration attempted.
    pub direct_cap: u64,
    pub grid: usize,
    pub derivative_step: f64,
    pub margin_directions: usize,
    pub margin_bisections: u32,
    pub kappa_directions: usize,
    pub kappa_max_j: u32,
    pub area_tol: f64,
    pub strip: StripGrid,
    pub boundary_samples: usize,
    pub conjugacy: ConjugacyConfig,
}

impl Default for StageSchedule {
    fn default() -> Self {
        Self {
            mode: Mode::Practical,
            seed: 0x5EED,
            rho: 0.05,
            overrides: Vec::new(),
            default_r: 10_000,
            enforce_q_growth: true,
            max_log10_r: 15.0,
            v_max: 1_000_000,
            witness_distance: 2e-3,
            witness_draws: 1000,
            eps_start: 1e-2,
            eps_budget: 60,
            eps_perturbations: 8,
            eps_test_points: 128,
            bmm_samples: 128,
            bmm_steps: 1000,
            orbit_factor: 50,
            orbit_cap: 10_000_000,
            exact_density_limit: 2_000_000,
            direct_cap: 100_000_000,
            grid: 64,
            derivative_step: 1e-5,
            margin_directions: 8,
            margin_bisections: 50,
            kappa_directions: 16,
            kappa_max_j: 40,
            area_tol: 1e-6,
            strip: StripGrid { per_period: 32, im_levels: 5 },
            boundary_samples: 256,
            conjugacy: ConjugacyConfig::default(),
        }
    }
}

impl StageSchedule {
    pub fn override_for(&self, stage: u32) -> StageOverride {
        self.overrides.iter().find(|o| o.stage == stage).cloned().unwrap_or(StageOverride { stage, r: None, v: None })
    }
}

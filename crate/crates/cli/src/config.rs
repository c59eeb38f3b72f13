//! Run configuration: one TOML file describes the potential, the model
//! geometry, the chain parameters and the experiment grids. No environment
//! variables enter anywhere, so a run is reproducible from the file plus the
//! command line alone.

use gibbs_perc::bounds::ContourParams;
use gibbs_perc::potential::PotentialSpec;
use gibbs_perc::sampler::{McParams, MoveMix};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub potential: PotentialConfig,
    pub model: ModelConfig,
    #[serde(default)]
    pub contour: ContourConfig,
    pub mc: McConfig,
    #[serde(default)]
    pub sweep: SweepConfig,
    #[serde(default)]
    pub gw: GwConfig,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialConfig {
    /// "square_well" or "power_tail".
    pub family: String,
    pub f: f64,
    pub d: f64,
    pub g: f64,
    #[serde(default)]
    pub u0: f64,
    pub well_depth: f64,
    /// square_well only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub well_end: Option<f64>,
    /// power_tail only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub amplitude: Option<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub nu: u32,
    pub ell: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContourConfig {
    /// Cell side is 2 d + delta; the attraction window width is capped by it.
    pub delta: f64,
    /// Attraction level m in (0, M).
    pub m: f64,
    /// Fine-lattice step for the b-contour test; 0 picks ell / 8.
    #[serde(default)]
    pub fine_step: f64,
}

impl Default for ContourConfig {
    fn default() -> Self {
        ContourConfig { delta: 5.5, m: 0.5, fine_step: 0.0 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McConfig {
    pub lambda: f64,
    pub beta: f64,
    pub box_len: f64,
    pub seed: u64,
    pub sweeps: u64,
    pub burn_in: u64,
    pub thin: u64,
    #[serde(default = "default_birth")]
    pub move_birth: f64,
    #[serde(default = "default_death")]
    pub move_death: f64,
    #[serde(default = "default_translate")]
    pub move_translate: f64,
    /// 0 = one move per expected particle, round(lambda V).
    #[serde(default)]
    pub moves_per_sweep: u64,
    /// 0 = automatic truncation radius.
    #[serde(default)]
    pub r_cut: f64,
}

fn default_birth() -> f64 {
    0.35
}
fn default_death() -> f64 {
    0.35
}
fn default_translate() -> f64 {
    0.30
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub lambda_grid: Vec<f64>,
    pub beta_grid: Vec<f64>,
    pub replicas: u64,
    /// Infinite-cluster stand-in: "crossing" (default) or "center".
    #[serde(default = "default_proxy")]
    pub proxy: String,
}

fn default_proxy() -> String {
    "crossing".into()
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            lambda_grid: vec![0.002, 0.005, 0.01, 0.02, 0.05, 0.1, 0.2, 0.5, 1.0],
            beta_grid: vec![0.0],
            replicas: 50,
            proxy: default_proxy(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GwConfig {
    pub replicas: u64,
    pub max_generations: u64,
}

impl Default for GwConfig {
    fn default() -> Self {
        GwConfig { replicas: 100_000, max_generations: 10_000 }
    }
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            potential: PotentialConfig {
                family: "square_well".into(),
                f: 0.25,
                d: 0.5,
                g: 6.0,
                u0: 0.0,
                well_depth: 1.0,
                well_end: Some(6.0),
                s: None,
                amplitude: None,
            },
            model: ModelConfig { nu: 2, ell: 1.5 },
            contour: ContourConfig::default(),
            mc: McConfig {
                lambda: 1.0,
                beta: 0.0,
                box_len: 45.0,
                seed: 42,
                sweeps: 5,
                burn_in: 25,
                thin: 5,
                move_birth: default_birth(),
                move_death: default_death(),
                move_translate: default_translate(),
                moves_per_sweep: 0,
                r_cut: 0.0,
            },
            sweep: SweepConfig::default(),
            gw: GwConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<RunConfig, String> {
        toml::from_str(text).map_err(|e| format!("config parse error: {e}"))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn potential(&self) -> Result<PotentialSpec, String> {
        let p = &self.potential;
        match p.family.as_str() {
            "square_well" => {
                let well_end =
                    p.well_end.ok_or("square_well needs well_end".to_string())?;
                PotentialSpec::square_well(p.f, p.d, p.g, p.u0, p.well_depth, well_end)
                    .map_err(|e| e.to_string())
            }
            "power_tail" => {
                let s = p.s.ok_or("power_tail needs s".to_string())?;
                let amplitude = p.amplitude.ok_or("power_tail needs amplitude".to_string())?;
                PotentialSpec::power_tail(p.f, p.d, p.g, p.u0, p.well_depth, s, amplitude)
                    .map_err(|e| e.to_string())
            }
            other => Err(format!("unknown potential family {other:?}")),
        }
    }

    pub fn contour_params(&self) -> ContourParams {
        ContourParams { delta: self.contour.delta, m: self.contour.m }
    }

    pub fn mc_params(&self) -> McParams {
        let mc = &self.mc;
        McParams {
            lambda: mc.lambda,
            beta: mc.beta,
            dim: self.model.nu as usize,
            box_len: mc.box_len,
            seed: mc.seed,
            sweeps: mc.sweeps,
            burn_in: mc.burn_in,
            thin: mc.thin,
            moves_per_sweep: (mc.moves_per_sweep > 0).then_some(mc.moves_per_sweep),
            move_mix: MoveMix {
                birth: mc.move_birth,
                death: mc.move_death,
                translate: mc.move_translate,
            },
            r_cut: (mc.r_cut > 0.0).then_some(mc.r_cut),
        }
    }

    /// Cross-field checks shared by every subcommand.
    pub fn validate_common(&self) -> Result<(), String> {
        self.potential()?;
        if self.model.nu == 0 {
            return Err("nu must be >= 1".into());
        }
        if !(self.model.ell > 0.0) {
            return Err("ell must be positive".into());
        }
        let mix_total = self.mc.move_birth + self.mc.move_death + self.mc.move_translate;
        if (mix_total - 1.0).abs() > 1e-9 {
            return Err(format!("move mix must sum to 1, got {mix_total}"));
        }
        Ok(())
    }

    /// Percolation and simulation runs connect at radius ell, which must
    /// exceed the hard core.
    pub fn validate_percolation(&self) -> Result<(), String> {
        let p = self.potential()?;
        if self.model.ell <= p.hard_core() {
            return Err(format!(
                "percolation needs ell > f, got ell = {}, f = {}",
                self.model.ell,
                p.hard_core()
            ));
        }
        self.proxy()?;
        Ok(())
    }

    pub fn proxy(&self) -> Result<gibbs_perc::percolation::InfiniteClusterProxy, String> {
        match self.sweep.proxy.as_str() {
            "crossing" => Ok(gibbs_perc::percolation::InfiniteClusterProxy::BoxCrossing),
            "center" => Ok(gibbs_perc::percolation::InfiniteClusterProxy::CenterToBoundary),
            other => Err(format!("unknown proxy {other:?}; use \"crossing\" or \"center\"")),
        }
    }

    /// Contour analysis is proved for nu = 2 with ell > 2 sqrt(2) d.
    pub fn validate_contour(&self) -> Result<(), String> {
        let p = self.potential()?;
        if self.model.nu != 2 {
            return Err(format!(
                "the percolation-region certificate needs nu = 2, got nu = {}",
                self.model.nu
            ));
        }
        let threshold = 2.0 * std::f64::consts::SQRT_2 * p.crossover();
        if self.model.ell <= threshold {
            return Err(format!(
                "the percolation-region certificate needs ell > 2*sqrt(2)*d = {threshold:.6}, got ell = {}",
                self.model.ell
            ));
        }
        if !(self.contour.m > 0.0 && self.contour.m < p.depth()) {
            return Err(format!(
                "attraction level m must lie in (0, M) = (0, {}), got {}",
                p.depth(),
                self.contour.m
            ));
        }
        Ok(())
    }
}

/// FNV-1a hash of the resolved config text; stamped into output headers so
/// files from different configs cannot be confused.
pub fn config_hash(text: &str) -> String {
    let mut hash = 0xcbf2_9ce4_8422_2325_u64;
    for b in text.as_bytes() {
        hash ^= u64::from(*b);
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    format!("{hash:016x}")
}

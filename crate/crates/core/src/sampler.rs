//! Grand-canonical Metropolis sampler targeting the finite-volume Gibbs
//! density over a box [0, L]^nu with empty boundary condition.
//!
//! Moves are single-particle births, deaths and translations with the
//! standard acceptance ratios; a uniform cell index keeps the local-energy
//! cost proportional to the neighbor count. Chains are strictly sequential
//! and fully determined by their seed; independent chains parallelize freely.

use crate::potential::{Energy, PotentialSpec};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

/// Positions support up to this many coordinates; proposal scratch lives on
/// the stack.
pub const MAX_DIM: usize = 4;

#[derive(Debug, Error)]
pub enum SamplerError {
    #[error("invalid run parameters: {0}")]
    Config(String),
}

/// A finite point configuration in a box, with a uniform cell index whose
/// cell side is at least the interaction truncation radius.
#[derive(Clone, Debug)]
pub struct Configuration {
    dim: usize,
    box_len: f64,
    coords: Vec<f64>,
    cells: CellIndex,
}

#[derive(Clone, Debug)]
struct CellIndex {
    per_axis: usize,
    side: f64,
    buckets: Vec<Vec<u32>>,
    cell_of: Vec<u32>,
}

impl CellIndex {
    fn new(dim: usize, box_len: f64, min_side: f64) -> CellIndex {
        let per_axis = ((box_len / min_side).floor() as usize).max(1);
        CellIndex {
            per_axis,
            side: box_len / per_axis as f64,
            buckets: vec![Vec::new(); per_axis.pow(dim as u32)],
            cell_of: Vec::new(),
        }
    }

    fn axis_index(&self, x: f64) -> usize {
        ((x / self.side) as usize).min(self.per_axis - 1)
    }

    fn cell_for(&self, dim: usize, x: &[f64]) -> usize {
        let mut idx = 0;
        for a in 0..dim {
            idx = idx * self.per_axis + self.axis_index(x[a]);
        }
        idx
    }
}

impl Configuration {
    /// Empty configuration. `min_cell_side` is normally the truncation radius.
    pub fn new(dim: usize, box_len: f64, min_cell_side: f64) -> Configuration {
        assert!((1..=MAX_DIM).contains(&dim), "dimension {dim} out of range");
        assert!(box_len > 0.0 && min_cell_side > 0.0);
        Configuration { dim, box_len, coords: Vec::new(), cells: CellIndex::new(dim, box_len, min_cell_side) }
    }

    pub fn from_points(
        dim: usize,
        box_len: f64,
        min_cell_side: f64,
        points: &[f64],
    ) -> Configuration {
        assert_eq!(points.len() % dim, 0);
        let mut cfg = Configuration::new(dim, box_len, min_cell_side);
        for chunk in points.chunks_exact(dim) {
            cfg.insert(chunk);
        }
        cfg
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn box_len(&self) -> f64 {
        self.box_len
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn position(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn iter_points(&self) -> impl Iterator<Item = &[f64]> {
        self.coords.chunks_exact(self.dim)
    }

    pub fn insert(&mut self, x: &[f64]) -> usize {
        debug_assert_eq!(x.len(), self.dim);
        debug_assert!(x.iter().all(|&c| (0.0..=self.box_len).contains(&c)));
        let id = self.len() as u32;
        let cell = self.cells.cell_for(self.dim, x);
        self.coords.extend_from_slice(x);
        self.cells.buckets[cell].push(id);
        self.cells.cell_of.push(cell as u32);
        id as usize
    }

    /// Removes point i; the last point takes its id.
    pub fn remove(&mut self, i: usize) {
        let last = self.len() - 1;
        let cell_i = self.cells.cell_of[i] as usize;
        let bucket = &mut self.cells.buckets[cell_i];
        let pos = bucket.iter().position(|&p| p == i as u32).expect("point in its bucket");
        bucket.swap_remove(pos);
        if i != last {
            let cell_last = self.cells.cell_of[last] as usize;
            let bucket = &mut self.cells.buckets[cell_last];
            let pos = bucket.iter().position(|&p| p == last as u32).expect("point in its bucket");
            bucket[pos] = i as u32;
            self.cells.cell_of[i] = self.cells.cell_of[last];
            let (dst, src) = (i * self.dim, last * self.dim);
            for a in 0..self.dim {
                self.coords[dst + a] = self.coords[src + a];
            }
        }
        self.cells.cell_of.pop();
        self.coords.truncate(last * self.dim);
    }

    pub fn move_point(&mut self, i: usize, x: &[f64]) {
        debug_assert_eq!(x.len(), self.dim);
        let old_cell = self.cells.cell_of[i] as usize;
        let new_cell = self.cells.cell_for(self.dim, x);
        self.coords[i * self.dim..(i + 1) * self.dim].copy_from_slice(x);
        if old_cell != new_cell {
            let bucket = &mut self.cells.buckets[old_cell];
            let pos = bucket.iter().position(|&p| p == i as u32).expect("point in its bucket");
            bucket.swap_remove(pos);
            self.cells.buckets[new_cell].push(i as u32);
            self.cells.cell_of[i] = new_cell as u32;
        }
    }

    fn distance(&self, x: &[f64], j: usize) -> f64 {
        let y = self.position(j);
        let mut d2 = 0.0;
        for a in 0..self.dim {
            let d = x[a] - y[a];
            d2 += d * d;
        }
        d2.sqrt()
    }

    /// Calls `visit` for every point id in the 3^dim cell neighborhood of x.
    fn for_each_neighbor_candidate(&self, x: &[f64], mut visit: impl FnMut(usize)) {
        let dim = self.dim;
        let per = self.cells.per_axis as i64;
        let mut base = [0_i64; MAX_DIM];
        for a in 0..dim {
            base[a] = self.cells.axis_index(x[a]) as i64;
        }
        let combos = 3_usize.pow(dim as u32);
        'combo: for c in 0..combos {
            let mut idx = 0_usize;
            let mut rem = c;
            for a in 0..dim {
                let off = (rem % 3) as i64 - 1;
                rem /= 3;
                let v = base[a] + off;
                if v < 0 || v >= per {
                    continue 'combo;
                }
                idx = idx * self.cells.per_axis + v as usize;
            }
            for &p in &self.cells.buckets[idx] {
                visit(p as usize);
            }
        }
    }

    /// Interaction energy of a (possibly external) point x with the
    /// configuration, truncated at r_cut; `exclude` skips one point id.
    /// Hard-core hits short-circuit.
    pub fn local_energy(
        &self,
        x: &[f64],
        exclude: Option<usize>,
        p: &PotentialSpec,
        r_cut: f64,
    ) -> Energy {
        debug_assert!(r_cut <= self.cells.side * (1.0 + 1e-12), "cell side below r_cut");
        let mut total = 0.0;
        let mut hard = false;
        self.for_each_neighbor_candidate(x, |j| {
            if hard || Some(j) == exclude {
                return;
            }
            let r = self.distance(x, j);
            if r <= r_cut {
                match p.evaluate(r) {
                    Energy::Finite(v) => total += v,
                    Energy::HardCore => hard = true,
                }
            }
        });
        if hard {
            Energy::HardCore
        } else {
            Energy::Finite(total)
        }
    }

    /// Total energy with each unordered pair counted once.
    pub fn total_energy(&self, p: &PotentialSpec, r_cut: f64) -> Energy {
        let mut total = 0.0;
        for i in 0..self.len() {
            match self.local_energy(self.position(i), Some(i), p, r_cut) {
                Energy::Finite(v) => total += v,
                Energy::HardCore => return Energy::HardCore,
            }
        }
        Energy::Finite(total / 2.0)
    }

    /// True when no pair sits at distance <= f. Uses the cell index, so it
    /// requires f <= cell side.
    pub fn respects_hard_core(&self, f: f64) -> bool {
        if f <= 0.0 {
            return true;
        }
        assert!(f <= self.cells.side, "hard core exceeds cell side");
        for i in 0..self.len() {
            let mut ok = true;
            self.for_each_neighbor_candidate(self.position(i), |j| {
                if j != i && self.distance(self.position(i), j) <= f {
                    ok = false;
                }
            });
            if !ok {
                return false;
            }
        }
        true
    }

    /// Rebuilds the cell index from scratch and reports whether it matches
    /// the incrementally maintained one.
    pub fn cell_index_consistent(&self) -> bool {
        let mut fresh = CellIndex::new(self.dim, self.box_len, self.cells.side);
        for (i, pt) in self.iter_points().enumerate() {
            let cell = fresh.cell_for(self.dim, pt);
            fresh.buckets[cell].push(i as u32);
            fresh.cell_of.push(cell as u32);
        }
        if fresh.cell_of != self.cells.cell_of {
            return false;
        }
        fresh
            .buckets
            .iter()
            .zip(&self.cells.buckets)
            .all(|(a, b)| {
                let mut a = a.clone();
                let mut b = b.clone();
                a.sort_unstable();
                b.sort_unstable();
                a == b
            })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MoveKind {
    Birth,
    Death,
    Translate,
}

#[derive(Clone, Copy, Debug)]
pub struct MoveMix {
    pub birth: f64,
    pub death: f64,
    pub translate: f64,
}

impl Default for MoveMix {
    fn default() -> Self {
        MoveMix { birth: 0.35, death: 0.35, translate: 0.30 }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct StepOutcome {
    pub kind: MoveKind,
    pub accepted: bool,
    /// Energy change of the proposal; `HardCore` marks a core-overlap
    /// rejection, aborted proposals (empty death, out-of-box translate)
    /// report zero.
    pub delta_h: Energy,
}

/// Chain parameters. A sweep is a fixed number of single-particle moves
/// (`moves_per_sweep`, default round(lambda V)), so chain length never
/// depends on the running particle count.
#[derive(Clone, Debug)]
pub struct McParams {
    pub lambda: f64,
    pub beta: f64,
    pub dim: usize,
    pub box_len: f64,
    pub seed: u64,
    pub sweeps: u64,
    pub burn_in: u64,
    /// Snapshot every `thin` production sweeps.
    pub thin: u64,
    pub moves_per_sweep: Option<u64>,
    pub move_mix: MoveMix,
    /// Interaction truncation radius; None picks the radius where the tail
    /// majorant falls below 1e-6 M, capped at L/2.
    pub r_cut: Option<f64>,
}

impl McParams {
    pub fn new(lambda: f64, beta: f64, dim: usize, box_len: f64, seed: u64) -> McParams {
        McParams {
            lambda,
            beta,
            dim,
            box_len,
            seed,
            sweeps: 100,
            burn_in: 100,
            thin: 10,
            moves_per_sweep: None,
            move_mix: MoveMix::default(),
            r_cut: None,
        }
    }

    pub fn volume(&self) -> f64 {
        self.box_len.powi(self.dim as i32)
    }

    pub fn effective_moves_per_sweep(&self) -> u64 {
        self.moves_per_sweep.unwrap_or(((self.lambda * self.volume()).round() as u64).max(1))
    }

    /// Truncation radius actually used.
    pub fn effective_r_cut(&self, p: &PotentialSpec) -> f64 {
        match self.r_cut {
            Some(r) => r,
            None => {
                let tol = 1e-6 * p.depth();
                let mut r = p.tail_onset();
                // tail majorant is nonincreasing: march outward in small steps
                let step = p.default_grid_step().max(1e-6);
                while p.tail_majorant(r) >= tol && r < 0.5 * self.box_len {
                    r += step;
                }
                r.min(0.5 * self.box_len).max(p.tail_onset().min(0.5 * self.box_len))
            }
        }
    }

    pub fn validate(&self, p: &PotentialSpec) -> Result<(), SamplerError> {
        if !(self.lambda > 0.0) {
            return Err(SamplerError::Config(format!("lambda must be positive, got {}", self.lambda)));
        }
        if !(self.beta >= 0.0) {
            return Err(SamplerError::Config(format!("beta must be >= 0, got {}", self.beta)));
        }
        if !(1..=MAX_DIM).contains(&self.dim) {
            return Err(SamplerError::Config(format!("dimension {} out of range", self.dim)));
        }
        if !(self.box_len > 0.0) {
            return Err(SamplerError::Config("box length must be positive".into()));
        }
        if self.thin == 0 {
            return Err(SamplerError::Config("thin interval must be >= 1".into()));
        }
        let mix = self.move_mix;
        if mix.birth < 0.0 || mix.death < 0.0 || mix.translate < 0.0 {
            return Err(SamplerError::Config("move mix probabilities must be nonnegative".into()));
        }
        if (mix.birth + mix.death + mix.translate - 1.0).abs() > 1e-9 {
            return Err(SamplerError::Config("move mix must sum to 1".into()));
        }
        if let Some(r) = self.r_cut {
            if r < p.tail_onset() {
                return Err(SamplerError::Config(format!(
                    "r_cut = {r} below the tail onset g = {}",
                    p.tail_onset()
                )));
            }
        }
        Ok(())
    }
}

/// Raw (un-clamped) log acceptance ratio of a birth at x.
pub fn birth_log_ratio(
    cfg: &Configuration,
    x: &[f64],
    params: &McParams,
    p: &PotentialSpec,
    r_cut: f64,
) -> Option<f64> {
    let delta = cfg.local_energy(x, None, p, r_cut).finite()?;
    let n = cfg.len() as f64;
    Some((params.lambda * params.volume() / (n + 1.0)).ln() - params.beta * delta)
}

/// Raw (un-clamped) log acceptance ratio of the death of point i.
pub fn death_log_ratio(
    cfg: &Configuration,
    i: usize,
    params: &McParams,
    p: &PotentialSpec,
    r_cut: f64,
) -> f64 {
    let e_i = cfg
        .local_energy(cfg.position(i), Some(i), p, r_cut)
        .expect_finite("live point has finite energy");
    let n = cfg.len() as f64;
    (n / (params.lambda * params.volume())).ln() + params.beta * e_i
}

fn draw_in_ball(rng: &mut ChaCha8Rng, dim: usize, radius: f64, out: &mut [f64; MAX_DIM]) {
    loop {
        let mut norm2 = 0.0;
        for item in out.iter_mut().take(dim) {
            let v = rng.random::<f64>() * 2.0 - 1.0;
            *item = v;
            norm2 += v * v;
        }
        if norm2 <= 1.0 {
            for item in out.iter_mut().take(dim) {
                *item *= radius;
            }
            return;
        }
    }
}

/// One Metropolis move. Hard-core hits are always rejected.
pub fn mcmc_step(
    cfg: &mut Configuration,
    params: &McParams,
    p: &PotentialSpec,
    r_cut: f64,
    rng: &mut ChaCha8Rng,
) -> StepOutcome {
    let u = rng.random::<f64>();
    let mix = params.move_mix;
    if u < mix.birth {
        let mut x = [0.0_f64; MAX_DIM];
        for item in x.iter_mut().take(cfg.dim) {
            *item = rng.random::<f64>() * params.box_len;
        }
        let x = &x[..cfg.dim];
        match cfg.local_energy(x, None, p, r_cut) {
            Energy::HardCore => StepOutcome { kind: MoveKind::Birth, accepted: false, delta_h: Energy::HardCore },
            Energy::Finite(delta) => {
                let ln_acc =
                    (params.lambda * params.volume() / (cfg.len() as f64 + 1.0)).ln() - params.beta * delta;
                let accepted = ln_acc >= 0.0 || rng.random::<f64>().ln() < ln_acc;
                if accepted {
                    cfg.insert(x);
                }
                StepOutcome { kind: MoveKind::Birth, accepted, delta_h: Energy::Finite(delta) }
            }
        }
    } else if u < mix.birth + mix.death {
        if cfg.is_empty() {
            return StepOutcome { kind: MoveKind::Death, accepted: false, delta_h: Energy::Finite(0.0) };
        }
        let i = rng.random_range(0..cfg.len());
        let e_i = cfg
            .local_energy(cfg.position(i), Some(i), p, r_cut)
            .expect_finite("live point has finite energy");
        let delta = -e_i;
        let ln_acc = (cfg.len() as f64 / (params.lambda * params.volume())).ln() - params.beta * delta;
        let accepted = ln_acc >= 0.0 || rng.random::<f64>().ln() < ln_acc;
        if accepted {
            cfg.remove(i);
        }
        StepOutcome { kind: MoveKind::Death, accepted, delta_h: Energy::Finite(delta) }
    } else {
        if cfg.is_empty() {
            return StepOutcome { kind: MoveKind::Translate, accepted: false, delta_h: Energy::Finite(0.0) };
        }
        let i = rng.random_range(0..cfg.len());
        let step_r = if p.hard_core() > 0.0 { p.hard_core() } else { p.crossover() / 2.0 };
        let mut disp = [0.0_f64; MAX_DIM];
        draw_in_ball(rng, cfg.dim, step_r, &mut disp);
        let mut x_new = [0.0_f64; MAX_DIM];
        let x_old = cfg.position(i);
        let mut inside = true;
        for a in 0..cfg.dim {
            x_new[a] = x_old[a] + disp[a];
            inside &= (0.0..=params.box_len).contains(&x_new[a]);
        }
        if !inside {
            // zero target density outside the box
            return StepOutcome { kind: MoveKind::Translate, accepted: false, delta_h: Energy::Finite(0.0) };
        }
        let x_new = &x_new[..cfg.dim];
        let e_old = cfg
            .local_energy(cfg.position(i), Some(i), p, r_cut)
            .expect_finite("live point has finite energy");
        match cfg.local_energy(x_new, Some(i), p, r_cut) {
            Energy::HardCore => {
                StepOutcome { kind: MoveKind::Translate, accepted: false, delta_h: Energy::HardCore }
            }
            Energy::Finite(e_new) => {
                let delta = e_new - e_old;
                let ln_acc = -params.beta * delta;
                let accepted = ln_acc >= 0.0 || rng.random::<f64>().ln() < ln_acc;
                if accepted {
                    cfg.move_point(i, x_new);
                }
                StepOutcome { kind: MoveKind::Translate, accepted, delta_h: Energy::Finite(delta) }
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct Snapshot {
    pub sweep: u64,
    pub config: Configuration,
}

#[derive(Clone, Debug, Default)]
pub struct Diagnostics {
    pub attempts: [u64; 3],
    pub accepts: [u64; 3],
    /// Particle count per sweep, burn-in included.
    pub count_trace: Vec<u64>,
    /// Running (incrementally accumulated) energy per sweep.
    pub energy_trace: Vec<f64>,
    pub r_cut: f64,
    /// Upper bound on the neglected tail energy per particle,
    /// lambda nu kappa Int_{r_cut}^inf r^(nu-1) psi(r) dr.
    pub truncation_bound_per_particle: f64,
    pub moves_per_sweep: u64,
    pub rng_name: &'static str,
    pub final_energy: f64,
}

impl Diagnostics {
    pub fn acceptance_rate(&self, kind: MoveKind) -> f64 {
        let k = kind as usize;
        if self.attempts[k] == 0 {
            0.0
        } else {
            self.accepts[k] as f64 / self.attempts[k] as f64
        }
    }
}

pub struct ChainRun {
    pub snapshots: Vec<Snapshot>,
    pub diagnostics: Diagnostics,
}

/// Runs one chain from the empty configuration: `burn_in` sweeps discarded,
/// then `sweeps` production sweeps with a snapshot every `thin`. Output is a
/// pure function of the parameters (the rng is seeded from `params.seed`).
pub fn run_chain(params: &McParams, p: &PotentialSpec) -> Result<ChainRun, SamplerError> {
    params.validate(p)?;
    let r_cut = params.effective_r_cut(p);
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut cfg = Configuration::new(params.dim, params.box_len, r_cut);
    let moves = params.effective_moves_per_sweep();
    let total_sweeps = params.burn_in + params.sweeps;

    let nu = params.dim as u32;
    let kappa = crate::bounds::unit_ball_volume(nu);
    let trunc = params.lambda * f64::from(nu) * kappa * tail_integral_from(p, nu, r_cut);

    let mut diagnostics = Diagnostics {
        r_cut,
        truncation_bound_per_particle: trunc,
        moves_per_sweep: moves,
        rng_name: "chacha8 (rand_chacha 0.9)",
        ..Diagnostics::default()
    };
    let mut energy = 0.0_f64;
    let mut snapshots = Vec::new();

    for sweep in 1..=total_sweeps {
        for _ in 0..moves {
            let outcome = mcmc_step(&mut cfg, params, p, r_cut, &mut rng);
            diagnostics.attempts[outcome.kind as usize] += 1;
            if outcome.accepted {
                diagnostics.accepts[outcome.kind as usize] += 1;
                energy += outcome.delta_h.expect_finite("accepted move");
            }
        }
        diagnostics.count_trace.push(cfg.len() as u64);
        diagnostics.energy_trace.push(energy);
        if sweep > params.burn_in {
            let production = sweep - params.burn_in;
            if production % params.thin == 0 {
                snapshots.push(Snapshot { sweep, config: cfg.clone() });
            }
        }
    }
    diagnostics.final_energy = energy;
    Ok(ChainRun { snapshots, diagnostics })
}

/// Int_{r0}^inf r^(nu-1) psi(r) dr in closed form (the truncation-error tail).
pub fn tail_integral_from(p: &PotentialSpec, nu: u32, r0: f64) -> f64 {
    use crate::potential::Family;
    let nu_f = f64::from(nu);
    let r0 = r0.max(p.tail_onset());
    match p.family() {
        Family::SquareWell { well_depth, well_end, .. } => {
            if r0 >= well_end {
                0.0
            } else {
                well_depth * (well_end.powf(nu_f) - r0.powf(nu_f)) / nu_f
            }
        }
        Family::PowerTail { s, amplitude, .. } => {
            if s <= nu_f {
                f64::INFINITY
            } else {
                amplitude * r0.powf(nu_f - s) / (s - nu_f)
            }
        }
    }
}

/// Stable per-task seed derivation (splitmix64 over seed and stream index).
pub fn derive_seed(base: u64, stream: u64) -> u64 {
    let mut z = base ^ stream.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::PotentialSpec;
    use crate::stats;

    fn softcore_well() -> PotentialSpec {
        // no hard core: exact Poisson reference at beta = 0
        PotentialSpec::square_well(0.0, 0.5, 1.0, 0.0, 1.0, 1.0).unwrap()
    }

    fn hardcore_well() -> PotentialSpec {
        PotentialSpec::square_well(0.4, 0.5, 1.5, 0.2, 1.0, 1.5).unwrap()
    }

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn local_energy_matches_brute_force() {
        let p = hardcore_well();
        let mut r = rng(7);
        let box_len = 6.0;
        // scatter 50 points ignoring the hard core; brute force must agree
        // including on hard-core detection
        for trial in 0..20 {
            let pts: Vec<f64> = (0..100).map(|_| r.random::<f64>() * box_len).collect();
            let cfg = Configuration::from_points(2, box_len, 1.5, &pts);
            let x = [r.random::<f64>() * box_len, r.random::<f64>() * box_len];
            let fast = cfg.local_energy(&x, None, &p, 1.5);
            let mut brute = Energy::Finite(0.0);
            for pt in cfg.iter_points() {
                let d = ((x[0] - pt[0]).powi(2) + (x[1] - pt[1]).powi(2)).sqrt();
                if d <= 1.5 {
                    brute = brute + p.evaluate(d);
                }
            }
            match (fast, brute) {
                (Energy::Finite(a), Energy::Finite(b)) => {
                    assert!((a - b).abs() < 1e-12, "trial {trial}: {a} vs {b}")
                }
                (a, b) => assert_eq!(a, b, "trial {trial}"),
            }
        }
    }

    #[test]
    fn empty_configuration_has_zero_energy() {
        let p = softcore_well();
        let cfg = Configuration::new(2, 5.0, 1.0);
        assert_eq!(cfg.local_energy(&[1.0, 1.0], None, &p, 1.0), Energy::Finite(0.0));
        assert_eq!(cfg.total_energy(&p, 1.0), Energy::Finite(0.0));
    }

    #[test]
    fn single_neighbor_in_well() {
        let p = softcore_well();
        let mut cfg = Configuration::new(2, 5.0, 1.0);
        cfg.insert(&[2.0, 2.0]);
        // distance 0.75 is inside the well
        let e = cfg.local_energy(&[2.75, 2.0], None, &p, 1.0);
        assert_eq!(e, Energy::Finite(-1.0));
    }

    #[test]
    fn birth_into_hard_core_is_rejected() {
        let p = hardcore_well();
        let params = McParams::new(5.0, 1.0, 2, 3.0, 1);
        let r_cut = params.effective_r_cut(&p);
        let mut cfg = Configuration::new(2, 3.0, r_cut);
        cfg.insert(&[1.5, 1.5]);
        // force birth proposals: mix = (1, 0, 0), scan for one landing in the core
        let mut params = params;
        params.move_mix = MoveMix { birth: 1.0, death: 0.0, translate: 0.0 };
        let mut r = rng(3);
        let mut saw_core_reject = false;
        for _ in 0..2000 {
            let before = cfg.len();
            let out = mcmc_step(&mut cfg, &params, &p, r_cut, &mut r);
            if out.delta_h.is_hard_core() {
                assert!(!out.accepted);
                assert_eq!(cfg.len(), before);
                saw_core_reject = true;
            }
        }
        assert!(saw_core_reject, "no birth ever proposed inside the core");
        assert!(cfg.respects_hard_core(p.hard_core()));
    }

    #[test]
    fn birth_death_ratios_cancel() {
        let p = hardcore_well();
        let params = McParams::new(0.8, 0.7, 2, 6.0, 5);
        let r_cut = params.effective_r_cut(&p);
        let mut cfg = Configuration::new(2, 6.0, r_cut);
        let mut r = rng(11);
        for _ in 0..40 {
            let x = [r.random::<f64>() * 6.0, r.random::<f64>() * 6.0];
            if !cfg.local_energy(&x, None, &p, r_cut).is_hard_core() {
                cfg.insert(&x);
            }
        }
        let x = [3.3, 2.9];
        if let Some(b) = birth_log_ratio(&cfg, &x, &params, &p, r_cut) {
            let i = cfg.insert(&x);
            let d = death_log_ratio(&cfg, i, &params, &p, r_cut);
            assert!((b + d).abs() < 1e-12, "birth {b} + death {d} should cancel");
            cfg.remove(i);
        } else {
            panic!("probe point landed in the hard core");
        }
    }

    #[test]
    fn chain_is_deterministic_in_the_seed() {
        let p = hardcore_well();
        let mut params = McParams::new(0.4, 0.5, 2, 8.0, 99);
        params.sweeps = 30;
        params.burn_in = 10;
        params.thin = 5;
        let a = run_chain(&params, &p).unwrap();
        let b = run_chain(&params, &p).unwrap();
        assert_eq!(a.snapshots.len(), b.snapshots.len());
        for (sa, sb) in a.snapshots.iter().zip(&b.snapshots) {
            assert_eq!(sa.sweep, sb.sweep);
            assert_eq!(sa.config.coords(), sb.config.coords());
        }
        let c = run_chain(&McParams { seed: 100, ..params }, &p).unwrap();
        let same = a
            .snapshots
            .iter()
            .zip(&c.snapshots)
            .all(|(x, y)| x.config.coords() == y.config.coords());
        assert!(!same, "different seeds produced identical chains");
    }

    #[test]
    fn incremental_energy_matches_recomputation() {
        let p = hardcore_well();
        let mut params = McParams::new(0.5, 0.8, 2, 8.0, 4242);
        params.sweeps = 300;
        params.burn_in = 0;
        params.thin = 300;
        let run = run_chain(&params, &p).unwrap();
        let last = run.snapshots.last().unwrap();
        let recomputed = last
            .config
            .total_energy(&p, run.diagnostics.r_cut)
            .expect_finite("sampled state");
        assert!(
            (recomputed - run.diagnostics.final_energy).abs() < 1e-8,
            "incremental {} vs recomputed {recomputed}",
            run.diagnostics.final_energy
        );
        assert!(last.config.cell_index_consistent());
        assert!(last.config.respects_hard_core(p.hard_core()));
    }

    #[test]
    fn acceptance_rates_are_recorded() {
        let p = softcore_well();
        let mut params = McParams::new(0.3, 0.0, 2, 6.0, 8);
        params.sweeps = 50;
        params.burn_in = 10;
        let run = run_chain(&params, &p).unwrap();
        for kind in [MoveKind::Birth, MoveKind::Death, MoveKind::Translate] {
            let rate = run.diagnostics.acceptance_rate(kind);
            assert!((0.0..=1.0).contains(&rate));
            assert!(run.diagnostics.attempts[kind as usize] > 0);
        }
        // square well truncated at its end has no neglected tail
        assert_eq!(run.diagnostics.truncation_bound_per_particle, 0.0);
    }

    #[test]
    fn zero_beta_counts_are_poissonian() {
        let p = softcore_well();
        let mut params = McParams::new(0.25, 0.0, 2, 8.0, 2024);
        // lambda V = 16
        params.sweeps = 4000;
        params.burn_in = 200;
        params.thin = 4;
        let run = run_chain(&params, &p).unwrap();
        let counts: Vec<f64> = run.snapshots.iter().map(|s| s.config.len() as f64).collect();
        assert_eq!(counts.len(), 1000);
        let mean = stats::mean(&counts);
        let var = stats::variance(&counts);
        let target = 16.0;
        // mean within 5 sigma of lambda V (sd of the mean ~ 4/sqrt(1000) with
        // some autocorrelation slack)
        assert!((mean - target).abs() < 0.8, "mean {mean} far from {target}");
        let ratio = var / mean;
        assert!((0.85..1.15).contains(&ratio), "variance/mean {ratio} far from 1");
    }

    #[test]
    fn attraction_raises_density() {
        let p = hardcore_well();
        let mut cold = McParams::new(0.25, 1.5, 2, 7.0, 31);
        cold.sweeps = 600;
        cold.burn_in = 300;
        cold.thin = 10;
        let hot = McParams { beta: 0.0, ..cold.clone() };
        let run_cold = run_chain(&cold, &p).unwrap();
        let run_hot = run_chain(&hot, &p).unwrap();
        let mean_n = |r: &ChainRun| {
            stats::mean(&r.snapshots.iter().map(|s| s.config.len() as f64).collect::<Vec<_>>())
        };
        let (nc, nh) = (mean_n(&run_cold), mean_n(&run_hot));
        assert!(nc > nh * 1.05, "attractive run {nc} not denser than ideal run {nh}");
    }

    #[test]
    fn sub_box_counts_are_independent_poisson() {
        // beta = 0: counts in disjoint quadrants have variance/mean near 1
        // and vanishing correlation
        let p = softcore_well();
        let mut params = McParams::new(0.5, 0.0, 2, 8.0, 77);
        params.sweeps = 3000;
        params.burn_in = 200;
        params.thin = 3;
        let run = run_chain(&params, &p).unwrap();
        let half = 4.0;
        let mut q00 = Vec::new();
        let mut q11 = Vec::new();
        for s in &run.snapshots {
            let mut c00 = 0.0;
            let mut c11 = 0.0;
            for pt in s.config.iter_points() {
                if pt[0] < half && pt[1] < half {
                    c00 += 1.0;
                }
                if pt[0] >= half && pt[1] >= half {
                    c11 += 1.0;
                }
            }
            q00.push(c00);
            q11.push(c11);
        }
        let ratio = stats::variance(&q00) / stats::mean(&q00);
        assert!((0.85..1.15).contains(&ratio), "quadrant variance/mean {ratio}");
        let m0 = stats::mean(&q00);
        let m1 = stats::mean(&q11);
        let cov: f64 = q00
            .iter()
            .zip(&q11)
            .map(|(a, b)| (a - m0) * (b - m1))
            .sum::<f64>()
            / (q00.len() as f64 - 1.0);
        let corr = cov / (stats::variance(&q00) * stats::variance(&q11)).sqrt();
        assert!(corr.abs() < 0.1, "quadrant correlation {corr}");
    }

    #[test]
    fn cell_index_survives_long_runs() {
        let p = hardcore_well();
        let mut params = McParams::new(0.6, 0.9, 2, 6.0, 13);
        params.sweeps = 250; // ~ 5.4k moves at 21.6 moves per sweep
        params.burn_in = 0;
        params.thin = 250;
        let run = run_chain(&params, &p).unwrap();
        assert!(run.snapshots.last().unwrap().config.cell_index_consistent());
    }

    #[test]
    fn invalid_parameters_are_rejected() {
        let p = hardcore_well();
        let ok = McParams::new(0.5, 1.0, 2, 8.0, 1);
        assert!(ok.validate(&p).is_ok());

        let bad = McParams { lambda: 0.0, ..ok.clone() };
        assert!(matches!(bad.validate(&p), Err(SamplerError::Config(_))));
        let bad = McParams { thin: 0, ..ok.clone() };
        assert!(bad.validate(&p).is_err());
        let bad = McParams {
            move_mix: MoveMix { birth: 0.5, death: 0.5, translate: 0.5 },
            ..ok.clone()
        };
        assert!(bad.validate(&p).is_err());
        // truncating inside the tail onset discards real interactions
        let bad = McParams { r_cut: Some(p.tail_onset() * 0.5), ..ok };
        assert!(bad.validate(&p).is_err());
    }

    #[test]
    fn derive_seed_is_stable_and_spread() {
        assert_eq!(derive_seed(42, 0), derive_seed(42, 0));
        assert_ne!(derive_seed(42, 0), derive_seed(42, 1));
        assert_ne!(derive_seed(42, 1), derive_seed(43, 1));
    }
}

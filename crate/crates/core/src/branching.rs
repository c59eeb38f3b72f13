//! The dominating Galton-Watson process behind the non-percolation region.
//!
//! The true offspring mechanism of the cluster growth process conditions on
//! the whole environment through intractable normalizers; its law is only
//! ever used through a uniform upper bound on P(#offspring = K). This module
//! simulates the independent law built from those caps: leftover mass goes to
//! K = 0, which makes the law stochastically largest among laws consistent
//! with the caps, so its extinction implies extinction of anything the caps
//! dominate. Subcriticality of this law is exactly what the region
//! classification certifies.

use crate::bounds::BoundConstants;
use crate::sampler::derive_seed;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// Offspring distribution on {0, 1, ..., floor(n_b)}.
#[derive(Clone, Debug)]
pub struct OffspringLaw {
    /// masses[k] = P(#offspring = k).
    pub masses: Vec<f64>,
    pub mean: f64,
    /// Set when the per-count caps already sum to >= 1: the law was scaled to
    /// total mass 1 and no longer dominates, so extinction conclusions are
    /// void for it.
    pub supercritical_by_bound: bool,
    pub lambda: f64,
    pub beta: f64,
    cumulative: Vec<f64>,
}

impl OffspringLaw {
    pub fn from_masses(masses: Vec<f64>, lambda: f64, beta: f64) -> OffspringLaw {
        let total: f64 = masses.iter().sum();
        assert!((total - 1.0).abs() < 1e-9, "masses must sum to 1, got {total}");
        assert!(masses.iter().all(|&m| m >= 0.0));
        let mean = masses.iter().enumerate().map(|(k, &m)| k as f64 * m).sum();
        let mut cumulative = Vec::with_capacity(masses.len());
        let mut acc = 0.0;
        for &m in &masses {
            acc += m;
            cumulative.push(acc);
        }
        OffspringLaw { masses, mean, supercritical_by_bound: false, lambda, beta, cumulative }
    }

    pub fn support_max(&self) -> usize {
        self.masses.len() - 1
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> usize {
        let u = rng.random::<f64>();
        self.cumulative.partition_point(|&c| c <= u).min(self.support_max())
    }
}

/// The law p_K = min(1, count_bound(K)) for K >= 1, leftover mass on K = 0.
/// When the caps alone reach total mass 1 the result is flagged
/// `supercritical_by_bound` and rescaled instead.
pub fn dominating_offspring_law(lambda: f64, beta: f64, c: &BoundConstants) -> OffspringLaw {
    let k_max = c.n_b.floor() as usize;
    let mut masses = vec![0.0; k_max + 1];
    let mut tail_total = 0.0;
    for (k, mass) in masses.iter_mut().enumerate().skip(1) {
        *mass = c.offspring_count_bound(k as u64, lambda, beta).min(1.0);
        tail_total += *mass;
    }
    let supercritical = tail_total >= 1.0;
    if supercritical {
        for mass in &mut masses {
            *mass /= tail_total;
        }
    } else {
        masses[0] = 1.0 - tail_total;
    }
    let mut law = OffspringLaw::from_masses(masses, lambda, beta);
    law.supercritical_by_bound = supercritical;
    law
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GwOutcome {
    pub extinct: bool,
    /// Total progeny including the ancestor.
    pub total_size: u64,
    /// Generations simulated until extinction or truncation.
    pub generations: u64,
}

/// Population guard: a line that grows past this size counts as surviving.
const POPULATION_CAP: u64 = 1_000_000;

/// Standard Galton-Watson from one ancestor, truncated at `max_generations`
/// (a line still alive there counts as surviving, which is conservative for
/// extinction rates).
pub fn simulate_gw(law: &OffspringLaw, max_generations: u64, rng: &mut ChaCha8Rng) -> GwOutcome {
    let mut alive = 1_u64;
    let mut total = 1_u64;
    let mut generation = 0_u64;
    while alive > 0 && generation < max_generations {
        let mut next = 0_u64;
        for _ in 0..alive {
            next += law.sample(rng) as u64;
        }
        total += next;
        alive = next;
        generation += 1;
        if alive > POPULATION_CAP {
            return GwOutcome { extinct: false, total_size: total, generations: generation };
        }
    }
    GwOutcome { extinct: alive == 0, total_size: total, generations: generation }
}

#[derive(Clone, Debug)]
pub struct ExtinctionReport {
    pub law_mean: f64,
    pub mean_bound: f64,
    pub extinction_rate: f64,
    pub mean_total_size: f64,
    /// Standard error of the mean total size.
    pub se_total_size: f64,
    /// Geometric-series bound 1 / (1 - mean) on the mean total progeny.
    pub bound_one_over_eps: f64,
    /// mean_total_size <= bound + 3 standard errors.
    pub size_bound_ok: bool,
    /// Set when the law is flagged or not subcritical; the Monte-Carlo fields
    /// are then not meaningful.
    pub skipped: bool,
    pub replicas: u64,
}

/// Monte-Carlo extinction rate and total progeny of the dominating law at
/// (lambda, beta). Replicas run in parallel on derived seeds, so the result
/// is independent of thread scheduling.
pub fn extinction_and_size(
    lambda: f64,
    beta: f64,
    c: &BoundConstants,
    replicas: u64,
    max_generations: u64,
    seed: u64,
) -> ExtinctionReport {
    let law = dominating_offspring_law(lambda, beta, c);
    let mean_bound = c.offspring_mean_bound(lambda, beta);
    if law.supercritical_by_bound || law.mean >= 1.0 {
        return ExtinctionReport {
            law_mean: law.mean,
            mean_bound,
            extinction_rate: f64::NAN,
            mean_total_size: f64::NAN,
            se_total_size: f64::NAN,
            bound_one_over_eps: f64::NAN,
            size_bound_ok: false,
            skipped: true,
            replicas: 0,
        };
    }
    let (extinct, sum, sum_sq) = (0..replicas)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, r));
            let out = simulate_gw(&law, max_generations, &mut rng);
            (u64::from(out.extinct), out.total_size, out.total_size * out.total_size)
        })
        .reduce(|| (0, 0, 0), |a, b| (a.0 + b.0, a.1 + b.1, a.2 + b.2));
    let n = replicas as f64;
    let mean_total = sum as f64 / n;
    let var = (sum_sq as f64 / n - mean_total * mean_total).max(0.0) * n / (n - 1.0).max(1.0);
    let se = (var / n).sqrt();
    let bound = 1.0 / (1.0 - law.mean);
    ExtinctionReport {
        law_mean: law.mean,
        mean_bound,
        extinction_rate: extinct as f64 / n,
        mean_total_size: mean_total,
        se_total_size: se,
        bound_one_over_eps: bound,
        size_bound_ok: mean_total <= bound + 3.0 * se,
        skipped: false,
        replicas,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::PotentialSpec;

    fn constants() -> BoundConstants {
        let p = PotentialSpec::square_well(1.0, 2.0, 3.0, 0.5, 1.0, 3.0).unwrap();
        BoundConstants::from_potential(&p, 2, 2.0).unwrap()
    }

    #[test]
    fn law_deep_in_the_subcritical_region() {
        let c = constants();
        let lambda = 0.2 * c.lambda_minus();
        let beta = 0.5 * c.beta_minus(lambda).unwrap();
        let law = dominating_offspring_law(lambda, beta, &c);
        assert!(!law.supercritical_by_bound);
        assert!(law.mean < 1.0, "law mean {}", law.mean);
        assert!(law.mean <= c.offspring_mean_bound(lambda, beta) + 1e-12);
        // each mass honors its cap
        for (k, &m) in law.masses.iter().enumerate().skip(1) {
            assert!(m <= c.offspring_count_bound(k as u64, lambda, beta) + 1e-15);
        }
        assert_eq!(law.support_max(), c.n_b.floor() as usize);
        assert!((law.masses.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn law_at_zero_beta_matches_capped_poisson_bound() {
        let c = constants();
        let lambda = 0.005;
        let law = dominating_offspring_law(lambda, 0.0, &c);
        let x = lambda * c.ball_volume;
        for (k, &m) in law.masses.iter().enumerate().skip(1) {
            let expect = (crate::stats::poisson_pmf(k as u64, x) * x.exp()).min(1.0);
            assert!((m - expect).abs() < 1e-12, "k = {k}");
        }
    }

    #[test]
    fn law_is_flagged_when_caps_are_too_heavy() {
        let c = constants();
        let law = dominating_offspring_law(1.0, 1.0, &c);
        assert!(law.supercritical_by_bound);
        assert!((law.masses.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn certain_death_and_certain_survival() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let die = OffspringLaw::from_masses(vec![1.0], 0.1, 0.0);
        let out = simulate_gw(&die, 100, &mut rng);
        assert_eq!(out, GwOutcome { extinct: true, total_size: 1, generations: 1 });

        let immortal = OffspringLaw::from_masses(vec![0.0, 1.0], 0.1, 0.0);
        let out = simulate_gw(&immortal, 50, &mut rng);
        assert!(!out.extinct);
        assert_eq!(out.generations, 50);
        assert_eq!(out.total_size, 51);
    }

    #[test]
    fn subcritical_law_dies_out() {
        // binary law with mean 0.5: expected total progeny 2
        let law = OffspringLaw::from_masses(vec![0.75, 0.0, 0.25], 0.1, 0.0);
        let mut extinct = 0_u64;
        let mut total = 0_u64;
        let replicas = 20_000_u64;
        for r in 0..replicas {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(7, r));
            let out = simulate_gw(&law, 10_000, &mut rng);
            extinct += u64::from(out.extinct);
            total += out.total_size;
        }
        assert!(extinct as f64 / replicas as f64 >= 0.999);
        let mean_total = total as f64 / replicas as f64;
        // total progeny mean 1 / (1 - 0.5) = 2 within a generous band
        assert!((mean_total - 2.0).abs() < 0.1, "mean total {mean_total}");
    }

    #[test]
    fn extinction_report_subcritical() {
        let c = constants();
        let lambda = 0.3 * c.lambda_minus();
        let beta = 0.5 * c.beta_minus(lambda).unwrap();
        let report = extinction_and_size(lambda, beta, &c, 10_000, 10_000, 99);
        assert!(!report.skipped);
        assert!(report.law_mean < 1.0);
        assert!(report.extinction_rate >= 0.999);
        assert!(report.size_bound_ok, "mean {} bound {}", report.mean_total_size, report.bound_one_over_eps);

        // deterministic in the seed
        let again = extinction_and_size(lambda, beta, &c, 10_000, 10_000, 99);
        assert_eq!(report.extinction_rate, again.extinction_rate);
        assert_eq!(report.mean_total_size, again.mean_total_size);
    }

    #[test]
    fn extinction_report_skips_supercritical_laws() {
        let c = constants();
        let report = extinction_and_size(1.0, 1.0, &c, 100, 100, 1);
        assert!(report.skipped);
        assert_eq!(report.replicas, 0);
    }
}

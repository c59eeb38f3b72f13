//! Radial pair potentials: hard core, repulsive shell, attractive tail.
//!
//! A potential is described by four radii/scales: the hard-core radius `f`
//! (infinite for `r <= f`), the sign-change radius `d` (repulsive on `(f, d)`,
//! attractive beyond), the tail onset `g >= d` past which the attraction is
//! dominated by a positive decreasing majorant `psi`, and the depth
//! `M = -min(phi)`. Only concrete families are supported so that the tail
//! integral has a closed form and shape validation is decidable.

use thiserror::Error;

/// A pair energy. The hard core is a distinguished value rather than an IEEE
/// infinity so it cannot leak through arithmetic unnoticed; sums short-circuit
/// on it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Energy {
    Finite(f64),
    HardCore,
}

impl Energy {
    pub fn is_hard_core(self) -> bool {
        matches!(self, Energy::HardCore)
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            Energy::Finite(v) => Some(v),
            Energy::HardCore => None,
        }
    }

    /// Unwraps a finite value; panics on a hard-core hit.
    pub fn expect_finite(self, what: &str) -> f64 {
        match self {
            Energy::Finite(v) => v,
            Energy::HardCore => panic!("hard-core energy where finite expected: {what}"),
        }
    }
}

impl std::ops::Add for Energy {
    type Output = Energy;
    fn add(self, rhs: Energy) -> Energy {
        match (self, rhs) {
            (Energy::Finite(a), Energy::Finite(b)) => Energy::Finite(a + b),
            _ => Energy::HardCore,
        }
    }
}

impl std::ops::AddAssign for Energy {
    fn add_assign(&mut self, rhs: Energy) {
        *self = *self + rhs;
    }
}

#[derive(Debug, Error)]
pub enum PotentialError {
    #[error("invalid potential spec: {0}")]
    InvalidSpec(String),
    #[error("tail integral diverges: exponent s = {s} <= dimension nu = {nu}")]
    DivergentTail { s: f64, nu: u32 },
    #[error("no attraction window at level m = {m}")]
    NoWindow { m: f64 },
}

/// Concrete radial profiles.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Family {
    /// u0 on the repulsive shell, -well_depth on [d, well_end], 0 past well_end.
    SquareWell { u0: f64, well_depth: f64, well_end: f64 },
    /// u0 on the repulsive shell, -well_depth on [d, g), -amplitude * r^-s past g.
    PowerTail { u0: f64, well_depth: f64, s: f64, amplitude: f64 },
}

/// An isotropic, translation-invariant pair potential. Immutable after
/// construction, safe to share across workers.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PotentialSpec {
    f: f64,
    d: f64,
    g: f64,
    depth: f64,
    family: Family,
}

/// An interval [a, a + eps] on which the potential is at or below -m.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AttractionWindow {
    pub a: f64,
    pub eps: f64,
}

#[derive(Clone, Debug)]
pub struct ShapeViolation {
    pub r: f64,
    pub value: Energy,
    pub expected: &'static str,
}

#[derive(Clone, Debug, Default)]
pub struct ValidationReport {
    pub ok: bool,
    pub violations: Vec<ShapeViolation>,
    /// True when more violations occurred than were recorded.
    pub truncated: bool,
}

const MAX_RECORDED_VIOLATIONS: usize = 100;

impl PotentialSpec {
    pub fn square_well(
        f: f64,
        d: f64,
        g: f64,
        u0: f64,
        well_depth: f64,
        well_end: f64,
    ) -> Result<Self, PotentialError> {
        let spec = PotentialSpec {
            f,
            d,
            g,
            depth: well_depth,
            family: Family::SquareWell { u0, well_depth, well_end },
        };
        spec.check_common()?;
        if !(well_end > d) {
            return Err(PotentialError::InvalidSpec(format!(
                "well_end = {well_end} must exceed d = {d}"
            )));
        }
        Ok(spec)
    }

    pub fn power_tail(
        f: f64,
        d: f64,
        g: f64,
        u0: f64,
        well_depth: f64,
        s: f64,
        amplitude: f64,
    ) -> Result<Self, PotentialError> {
        let spec = PotentialSpec {
            f,
            d,
            g,
            depth: well_depth,
            family: Family::PowerTail { u0, well_depth, s, amplitude },
        };
        spec.check_common()?;
        if !(s > 0.0) || !(amplitude >= 0.0) {
            return Err(PotentialError::InvalidSpec(format!(
                "power tail needs s > 0 and amplitude >= 0, got s = {s}, amplitude = {amplitude}"
            )));
        }
        Ok(spec)
    }

    fn check_common(&self) -> Result<(), PotentialError> {
        let (f, d, g, depth) = (self.f, self.d, self.g, self.depth);
        if !(f >= 0.0 && d > 0.0 && d >= f) {
            return Err(PotentialError::InvalidSpec(format!(
                "need 0 <= f <= d with d > 0, got f = {f}, d = {d}"
            )));
        }
        if !(g > d) {
            return Err(PotentialError::InvalidSpec(format!(
                "tail onset g = {g} must exceed d = {d}"
            )));
        }
        if !(depth > 0.0) {
            return Err(PotentialError::InvalidSpec(format!("depth must be positive, got {depth}")));
        }
        let u0 = match self.family {
            Family::SquareWell { u0, .. } | Family::PowerTail { u0, .. } => u0,
        };
        if !(u0 >= 0.0) {
            return Err(PotentialError::InvalidSpec(format!("u0 must be >= 0, got {u0}")));
        }
        Ok(())
    }

    /// Hard-core radius f.
    pub fn hard_core(&self) -> f64 {
        self.f
    }

    /// Sign-change radius d.
    pub fn crossover(&self) -> f64 {
        self.d
    }

    /// Tail-bound onset g.
    pub fn tail_onset(&self) -> f64 {
        self.g
    }

    /// Depth M = -min(phi).
    pub fn depth(&self) -> f64 {
        self.depth
    }

    pub fn family(&self) -> Family {
        self.family
    }

    /// Radial value phi(r). The repulsive shell is taken half-open, `[f, d)`,
    /// so the attractive branch owns r = d and the well is closed on the left.
    pub fn evaluate(&self, r: f64) -> Energy {
        debug_assert!(r >= 0.0, "negative radius {r}");
        if r <= self.f {
            return Energy::HardCore;
        }
        match self.family {
            Family::SquareWell { u0, well_depth, well_end } => {
                if r < self.d {
                    Energy::Finite(u0)
                } else if r < well_end {
                    Energy::Finite(-well_depth)
                } else {
                    Energy::Finite(0.0)
                }
            }
            Family::PowerTail { u0, well_depth, s, amplitude } => {
                if r < self.d {
                    Energy::Finite(u0)
                } else if r < self.g {
                    Energy::Finite(-well_depth)
                } else {
                    Energy::Finite(-amplitude * r.powf(-s))
                }
            }
        }
    }

    /// Tail majorant psi(r), positive and nonincreasing, with -phi(r) <= psi(r)
    /// for r >= g. Only meaningful from the tail onset on.
    pub fn tail_majorant(&self, r: f64) -> f64 {
        match self.family {
            Family::SquareWell { well_depth, well_end, .. } => {
                if r < well_end {
                    well_depth
                } else {
                    0.0
                }
            }
            Family::PowerTail { s, amplitude, .. } => amplitude * r.powf(-s),
        }
    }

    /// I = int_g^inf r^(nu-1) psi(r) dr, in closed form.
    pub fn tail_integral(&self, nu: u32) -> Result<f64, PotentialError> {
        let nu_f = f64::from(nu);
        match self.family {
            Family::SquareWell { well_depth, well_end, .. } => {
                if self.g >= well_end {
                    Ok(0.0)
                } else {
                    Ok(well_depth * (well_end.powf(nu_f) - self.g.powf(nu_f)) / nu_f)
                }
            }
            Family::PowerTail { s, amplitude, .. } => {
                if s <= nu_f {
                    Err(PotentialError::DivergentTail { s, nu })
                } else {
                    Ok(amplitude * self.g.powf(nu_f - s) / (s - nu_f))
                }
            }
        }
    }

    pub fn default_grid_step(&self) -> f64 {
        (self.g - self.f) / 1e4
    }

    pub fn default_horizon(&self) -> f64 {
        10.0 * self.g
    }

    /// Scans the profile on a grid and reports every shape violation: wrong
    /// sign on an interval, a value below -M, or an attractive tail escaping
    /// the majorant past g.
    pub fn validate_shape(&self) -> ValidationReport {
        self.validate_shape_on(self.default_grid_step(), self.default_horizon())
    }

    pub fn validate_shape_on(&self, grid_step: f64, horizon: f64) -> ValidationReport {
        assert!(grid_step > 0.0, "grid_step must be positive");
        let mut report = ValidationReport { ok: true, violations: Vec::new(), truncated: false };
        let record = |r: f64, value: Energy, expected: &'static str, report: &mut ValidationReport| {
            report.ok = false;
            if report.violations.len() < MAX_RECORDED_VIOLATIONS {
                report.violations.push(ShapeViolation { r, value, expected });
            } else {
                report.truncated = true;
            }
        };
        let n = (horizon / grid_step).ceil() as u64;
        let mut prev_psi = f64::INFINITY;
        for i in 0..=n {
            let r = i as f64 * grid_step;
            let e = self.evaluate(r);
            if r <= self.f {
                if !e.is_hard_core() {
                    record(r, e, "hard core (+inf)", &mut report);
                }
                continue;
            }
            let v = match e {
                Energy::Finite(v) => v,
                Energy::HardCore => {
                    record(r, e, "finite beyond the hard core", &mut report);
                    continue;
                }
            };
            if v < -self.depth {
                record(r, e, "bounded below by -M", &mut report);
            }
            if r < self.d {
                if v < 0.0 {
                    record(r, e, ">= 0 on the repulsive shell", &mut report);
                }
            } else if v > 0.0 {
                record(r, e, "<= 0 on the attractive branch", &mut report);
            }
            if r >= self.g {
                let psi = self.tail_majorant(r);
                if psi < 0.0 || psi > prev_psi {
                    record(r, e, "majorant positive and nonincreasing", &mut report);
                }
                if -v > psi + 1e-12 * psi.abs().max(1.0) {
                    record(r, e, "dominated by the tail majorant", &mut report);
                }
                prev_psi = psi;
            }
        }
        report
    }

    /// Finds an interval [a, a + eps] with phi <= -m throughout, eps capped by
    /// the caller (the grid slack delta in contour runs). The scan starts at d
    /// and the returned endpoints are re-checked exactly.
    pub fn attraction_window(&self, m: f64, cap: f64) -> Result<AttractionWindow, PotentialError> {
        if !(m > 0.0 && m < self.depth) {
            return Err(PotentialError::NoWindow { m });
        }
        if !(cap > 0.0) {
            return Err(PotentialError::NoWindow { m });
        }
        let step = self.default_grid_step();
        let horizon = self.default_horizon();
        let below = |r: f64| match self.evaluate(r) {
            Energy::Finite(v) => v <= -m,
            Energy::HardCore => false,
        };
        // Locate the first grid point at or past d where phi <= -m.
        let mut a = None;
        let start = (self.d / step).floor() as u64;
        let n = (horizon / step).ceil() as u64;
        for i in start..=n {
            let r = (i as f64 * step).max(self.d);
            if below(r) {
                a = Some(r);
                break;
            }
        }
        let a = a.ok_or(PotentialError::NoWindow { m })?;
        // Extend the run while the level holds.
        let mut end = a;
        while end + step <= horizon && below(end + step) {
            end += step;
        }
        let mut eps = (end - a).min(cap);
        while eps > 0.0 && !below(a + eps) {
            eps -= step;
        }
        if eps <= 0.0 {
            return Err(PotentialError::NoWindow { m });
        }
        Ok(AttractionWindow { a, eps })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn well() -> PotentialSpec {
        PotentialSpec::square_well(1.0, 2.0, 3.0, 0.5, 1.0, 3.0).unwrap()
    }

    #[test]
    fn square_well_values() {
        let p = well();
        assert_eq!(p.evaluate(0.5), Energy::HardCore);
        assert_eq!(p.evaluate(1.5), Energy::Finite(0.5));
        assert_eq!(p.evaluate(2.5), Energy::Finite(-1.0));
        assert_eq!(p.evaluate(10.0), Energy::Finite(0.0));
    }

    #[test]
    fn valid_square_well_passes_shape_scan() {
        let report = well().validate_shape();
        assert!(report.ok, "unexpected violations: {:?}", report.violations);
    }

    #[test]
    fn flipped_well_fails_shape_scan() {
        // well_depth = -1 puts a positive plateau beyond d
        let p = PotentialSpec {
            f: 1.0,
            d: 2.0,
            g: 3.0,
            depth: 1.0,
            family: Family::SquareWell { u0: 0.5, well_depth: -1.0, well_end: 3.0 },
        };
        let report = p.validate_shape();
        assert!(!report.ok);
        assert!(report.violations.iter().any(|v| v.r > 2.0));
    }

    #[test]
    fn overdeep_tail_fails_shape_scan() {
        // amplitude > M * g^s makes phi(g) < -M
        let g: f64 = 2.0;
        let s = 4.0;
        let amplitude = 1.5 * g.powf(s);
        let p = PotentialSpec::power_tail(0.5, 1.0, g, 0.0, 1.0, s, amplitude).unwrap();
        let report = p.validate_shape();
        assert!(!report.ok);
        assert!(report.violations.iter().any(|v| v.expected.contains("-M")));
    }

    #[test]
    fn tail_integral_closed_forms() {
        // psi(r) = r^-4, nu = 2, g = 1: I = int_1^inf r^-3 dr = 1/2
        let p = PotentialSpec::power_tail(0.2, 0.5, 1.0, 0.0, 1.0, 4.0, 1.0).unwrap();
        let i = p.tail_integral(2).unwrap();
        assert!((i - 0.5).abs() < 1e-10 * 0.5);

        // square well ending at g: psi vanishes past g
        assert_eq!(well().tail_integral(2).unwrap(), 0.0);

        // s = nu diverges logarithmically
        let p = PotentialSpec::power_tail(0.2, 0.5, 1.0, 0.0, 1.0, 2.0, 1.0).unwrap();
        assert!(matches!(p.tail_integral(2), Err(PotentialError::DivergentTail { .. })));
    }

    #[test]
    fn tail_integral_square_well_with_early_onset() {
        // g < well_end leaves a finite-support piece
        let p = PotentialSpec::square_well(1.0, 2.0, 2.5, 0.0, 2.0, 4.0).unwrap();
        let i = p.tail_integral(2).unwrap();
        let expect = 2.0 * (16.0 - 2.5f64.powi(2)) / 2.0;
        assert!((i - expect).abs() < 1e-12 * expect);
    }

    #[test]
    fn attraction_window_square_well() {
        let p = well();
        let w = p.attraction_window(0.5, 0.4).unwrap();
        assert_eq!(w.a, 2.0);
        assert!((w.eps - 0.4).abs() < 1e-12);
        // window level violated at boundary m = M
        assert!(matches!(p.attraction_window(1.0, 0.4), Err(PotentialError::NoWindow { .. })));
        assert!(matches!(p.attraction_window(0.0, 0.4), Err(PotentialError::NoWindow { .. })));
    }

    #[test]
    fn attraction_window_holds_at_10x_resolution() {
        let p = PotentialSpec::power_tail(0.5, 1.0, 2.0, 0.3, 1.0, 4.0, 8.0).unwrap();
        let m = 0.4;
        let w = p.attraction_window(m, 1.5).unwrap();
        let fine = p.default_grid_step() / 10.0;
        let mut r = w.a;
        while r <= w.a + w.eps {
            let v = p.evaluate(r).expect_finite("window scan");
            assert!(v <= -m, "phi({r}) = {v} above -m inside the window");
            r += fine;
        }
        assert!(p.evaluate(w.a + w.eps).expect_finite("window end") <= -m);
    }

    #[test]
    fn energy_sum_short_circuits() {
        let e = Energy::Finite(1.0) + Energy::HardCore + Energy::Finite(-3.0);
        assert!(e.is_hard_core());
        let e = Energy::Finite(1.0) + Energy::Finite(-3.0);
        assert_eq!(e, Energy::Finite(-2.0));
    }
}

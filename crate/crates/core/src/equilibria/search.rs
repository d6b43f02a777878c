use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use nalgebra::{DMatrix, DVector};
#[allow(unused_imports)]
use num_traits::Float;
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use serde::{Deserialize, Serialize};

use super::classify::{classify_with, EquilibriumClass, CERTIFY_TOL};
use crate::config::{MassVector, PlanarConfiguration};
use crate::error::{Error, Result};
use crate::linalg::solve;
use crate::potential::{gradient, hessian, potential};
use crate::rotation::{canonicalize, config_distance_mod_rotation, farthest_point};

/// Identifier of the pseudo-random generator used to sample starts.
pub const RNG_ALGORITHM: &str = "ChaCha8";

/// Function minimized by the descent stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DescentObjective {
    /// `½|∇V_m|²` by Levenberg–Marquardt; reaches saddles as well as minima.
    Residual,
    /// `V_m` itself by steepest descent; reaches minima only.
    Potential,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchOptions {
    pub annulus: (f64, f64),
    pub objective: DescentObjective,
    pub descent_tol: f64,
    pub max_descent_iters: usize,
    pub polish_tol: f64,
    pub max_polish_iters: usize,
    pub certify_tol: f64,
    /// Classes closer than `dedupe_rtol · scale` modulo rotation are merged.
    pub dedupe_rtol: f64,
    /// Steps bringing two points closer than this are rejected.
    pub min_pair_distance: f64,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            annulus: (0.2, 2.0),
            objective: DescentObjective::Residual,
            descent_tol: 1e-3,
            max_descent_iters: 2000,
            polish_tol: 1e-11,
            max_polish_iters: 50,
            certify_tol: CERTIFY_TOL,
            dedupe_rtol: 1e-6,
            min_pair_distance: 1e-6,
        }
    }
}

/// Fate of a single start.
#[derive(Debug, Clone, PartialEq)]
pub enum StartOutcome {
    Converged { config: PlanarConfiguration, descent_iterations: usize, polish_iterations: usize },
    Collision,
    Diverged,
    Stalled,
    PolishFailed,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchDiagnostics {
    pub starts: usize,
    pub converged: usize,
    pub collisions: usize,
    pub diverged: usize,
    pub stalled: usize,
    pub polish_failures: usize,
    pub max_polish_iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    pub classes: Vec<EquilibriumClass>,
    pub diagnostics: SearchDiagnostics,
    pub seed: u64,
    pub rng: String,
}

fn uniform(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Starts with points uniform in the annulus `a ≤ |ζ| ≤ b`, then shifted so
/// the center of mass is at the origin.
pub fn sample_starts(
    masses: &MassVector,
    num_starts: usize,
    seed: u64,
    options: &SearchOptions,
) -> Result<Vec<PlanarConfiguration>> {
    let (a, b) = options.annulus;
    if !(0.0 <= a && a < b) {
        return Err(Error::domain("annulus bounds must satisfy 0 <= inner < outer"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..num_starts)
        .map(|_| {
            let points = (0..masses.len())
                .map(|_| {
                    let r = (a * a + (b * b - a * a) * uniform(&mut rng)).sqrt();
                    let t = 2.0 * PI * uniform(&mut rng);
                    [r * t.cos(), r * t.sin()]
                })
                .collect();
            let c = PlanarConfiguration::new(masses.clone(), points)?;
            let com = c.center_of_mass();
            Ok(c.map_points(|p| [p[0] - com[0], p[1] - com[1]]))
        })
        .collect()
}

fn flat_gradient(c: &PlanarConfiguration) -> Result<DVector<f64>> {
    Ok(DVector::from_iterator(2 * c.len(), gradient(c)?.into_iter().flatten()))
}

enum Descent {
    Done(PlanarConfiguration, usize),
    Failed(StartOutcome),
}

fn admissible(c: &PlanarConfiguration, opts: &SearchOptions) -> bool {
    c.min_pair_distance() >= opts.min_pair_distance
}

fn descend(start: &PlanarConfiguration, opts: &SearchOptions) -> Result<Descent> {
    let masses = start.masses().clone();
    let mut x = DVector::from_vec(start.flat());
    let mut config = start.clone();
    let mut mu = f64::NAN;
    for it in 0..opts.max_descent_iters {
        if config.max_radius() > 1e3 * opts.annulus.1.max(1.0) {
            return Ok(Descent::Failed(StartOutcome::Diverged));
        }
        let g = flat_gradient(&config)?;
        let gnorm = g.norm();
        if gnorm <= opts.descent_tol {
            return Ok(Descent::Done(config, it));
        }
        let trial_at = |y: &DVector<f64>| -> Result<Option<PlanarConfiguration>> {
            let c = PlanarConfiguration::from_flat(masses.clone(), y.as_slice())?;
            Ok(admissible(&c, opts).then_some(c))
        };
        match opts.objective {
            DescentObjective::Potential => {
                let f0 = potential(&config)?;
                let mut t = 1.0;
                let mut moved = false;
                while t > 1e-14 {
                    let y = &x - &g * t;
                    if let Some(c) = trial_at(&y)? {
                        if potential(&c)? <= f0 - 1e-4 * t * gnorm * gnorm {
                            x = y;
                            config = c;
                            moved = true;
                            break;
                        }
                    }
                    t *= 0.5;
                }
                if !moved {
                    return Ok(Descent::Failed(StartOutcome::Stalled));
                }
            }
            DescentObjective::Residual => {
                let h = hessian(&config)?;
                let hg = &h * &g;
                let h2 = &h * &h;
                if mu.is_nan() {
                    mu = 1e-3 * h2.norm();
                }
                let phi0 = 0.5 * gnorm * gnorm;
                let mut moved = false;
                for _ in 0..30 {
                    let a = &h2 + DMatrix::identity(h.nrows(), h.ncols()) * mu;
                    let Some(d) = solve(&a, &(-&hg)) else {
                        mu *= 10.0;
                        continue;
                    };
                    let slope = hg.dot(&d);
                    let mut t = 1.0;
                    while t > 1e-4 {
                        let y = &x + &d * t;
                        if let Some(c) = trial_at(&y)? {
                            let gy = flat_gradient(&c)?;
                            if 0.5 * gy.norm_squared() <= phi0 + 1e-4 * t * slope {
                                x = y;
                                config = c;
                                moved = true;
                                break;
                            }
                        }
                        t *= 0.5;
                    }
                    if moved {
                        if t == 1.0 {
                            mu = (mu / 3.0).max(1e-300);
                        }
                        break;
                    }
                    mu *= 10.0;
                }
                if !moved {
                    return Ok(Descent::Failed(StartOutcome::Stalled));
                }
            }
        }
        if config.min_pair_distance() < 10.0 * opts.min_pair_distance {
            return Ok(Descent::Failed(StartOutcome::Collision));
        }
    }
    Ok(Descent::Failed(StartOutcome::Stalled))
}

/// Newton on the `2N − 1` coordinates left after freezing the second
/// coordinate of the farthest point (placed on the positive first axis).
/// Returns the polished configuration and the iteration count.
pub fn polish(config: &PlanarConfiguration, opts: &SearchOptions) -> Result<(PlanarConfiguration, usize)> {
    let n = config.len();
    if n == 1 {
        return Ok((config.map_points(|_| [0.0, 0.0]), 1));
    }
    let pivot = farthest_point(config);
    let mut c = canonicalize(config, pivot)?;
    let frozen = 2 * pivot + 1;
    let keep: Vec<usize> = (0..2 * n).filter(|&k| k != frozen).collect();
    let mut residual = f64::INFINITY;
    for it in 0..opts.max_polish_iters {
        let g = flat_gradient(&c)?;
        residual = g.norm();
        if residual <= opts.polish_tol {
            return Ok((c, it));
        }
        let h = hessian(&c)?;
        let hr = h.select_rows(&keep).select_columns(&keep);
        let gr = g.select_rows(&keep);
        let step = solve(&hr, &(-gr)).ok_or(Error::Convergence {
            what: "Newton polish (singular Hessian)",
            iterations: it,
            residual,
        })?;
        let mut full = vec![0.0; 2 * n];
        for (k, &idx) in keep.iter().enumerate() {
            full[idx] = step[k];
        }
        let base = c.flat();
        let mut t = 1.0;
        let mut next = None;
        while t > 1e-3 {
            let y: Vec<f64> = base.iter().zip(&full).map(|(a, b)| a + t * b).collect();
            let trial = PlanarConfiguration::from_flat(c.masses().clone(), &y)?;
            if admissible(&trial, opts) && flat_gradient(&trial)?.norm() < residual {
                next = Some(trial);
                break;
            }
            t *= 0.5;
        }
        match next {
            Some(t) => c = t,
            None => break,
        }
    }
    let g = flat_gradient(&c)?.norm();
    if g <= opts.polish_tol {
        return Ok((c, opts.max_polish_iters));
    }
    Err(Error::Convergence { what: "Newton polish", iterations: opts.max_polish_iters, residual: g.min(residual) })
}

/// Descent followed by Newton polish from one start.
pub fn run_start(start: &PlanarConfiguration, opts: &SearchOptions) -> Result<StartOutcome> {
    let (coarse, descent_iterations) = match descend(start, opts)? {
        Descent::Done(c, it) => (c, it),
        Descent::Failed(outcome) => return Ok(outcome),
    };
    match polish(&coarse, opts) {
        Ok((config, polish_iterations)) => {
            Ok(StartOutcome::Converged { config, descent_iterations, polish_iterations })
        }
        Err(e) if e.is_numerical() => Ok(StartOutcome::PolishFailed),
        Err(Error::Coincident { .. }) => Ok(StartOutcome::Collision),
        Err(e) => Err(e),
    }
}

fn sort_key(c: &EquilibriumClass) -> (i64, Vec<i64>) {
    let q = |v: f64| (v * 1e9).round() as i64;
    (q(c.potential_value), c.representative.flat().into_iter().map(q).collect())
}

/// Certifies, deduplicates and canonically orders the converged outcomes.
/// The result does not depend on the order of `outcomes`.
pub fn reduce_outcomes(
    outcomes: &[StartOutcome],
    opts: &SearchOptions,
) -> Result<(Vec<EquilibriumClass>, SearchDiagnostics)> {
    let mut diag = SearchDiagnostics { starts: outcomes.len(), ..Default::default() };
    let mut candidates = Vec::new();
    for o in outcomes {
        match o {
            StartOutcome::Converged { config, polish_iterations, .. } => {
                diag.max_polish_iterations = diag.max_polish_iterations.max(*polish_iterations);
                match classify_with(config, opts.certify_tol) {
                    Ok(c) => {
                        diag.converged += 1;
                        candidates.push(c);
                    }
                    Err(Error::NotCritical { .. }) => diag.polish_failures += 1,
                    Err(e) => return Err(e),
                }
            }
            StartOutcome::Collision => diag.collisions += 1,
            StartOutcome::Diverged => diag.diverged += 1,
            StartOutcome::Stalled => diag.stalled += 1,
            StartOutcome::PolishFailed => diag.polish_failures += 1,
        }
    }
    candidates.sort_by(|a, b| {
        sort_key(a).cmp(&sort_key(b)).then_with(|| {
            let exact = |c: &EquilibriumClass| {
                let mut v = alloc::vec![c.potential_value];
                v.extend(c.representative.flat());
                v
            };
            exact(a)
                .iter()
                .zip(exact(b).iter())
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| o.is_ne())
                .unwrap_or(core::cmp::Ordering::Equal)
        })
    });
    let mut classes: Vec<EquilibriumClass> = Vec::new();
    for c in candidates {
        let rep = &c.representative;
        let tol = opts.dedupe_rtol * rep.scale() * rep.masses().total().sqrt();
        let mut duplicate = false;
        for kept in &classes {
            if config_distance_mod_rotation(&kept.representative, rep)? <= tol {
                duplicate = true;
                break;
            }
        }
        if !duplicate {
            classes.push(c);
        }
    }
    Ok((classes, diag))
}

/// Multistart search for relative equilibria.
pub fn find_equilibria(
    masses: &MassVector,
    num_starts: usize,
    seed: u64,
    opts: &SearchOptions,
) -> Result<SearchResult> {
    if num_starts == 0 {
        return Err(Error::domain("at least one start is required"));
    }
    let starts = sample_starts(masses, num_starts, seed, opts)?;
    let outcomes = starts.iter().map(|s| run_start(s, opts)).collect::<Result<Vec<_>>>()?;
    let (classes, diagnostics) = reduce_outcomes(&outcomes, opts)?;
    Ok(SearchResult { classes, diagnostics, seed, rng: RNG_ALGORITHM.into() })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexBin {
    pub negative: usize,
    pub positive: usize,
    pub zero: usize,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CensusReport {
    pub classes_found: usize,
    pub lower_bound: u64,
    pub satisfied: bool,
    pub index_histogram: Vec<IndexBin>,
    pub search: SearchResult,
}

/// `[2^{N−1}(N−2) + 1](N−2)!`, the lower bound on the number of classes for
/// generic masses.
pub fn palmore_lower_bound(n: usize) -> Result<u64> {
    if n < 3 {
        return Err(Error::domain("the census needs at least 3 bodies"));
    }
    let k = (n - 2) as u64;
    let fact: u64 = (1..=k).product();
    Ok(((1u64 << (n - 1)) * k + 1) * fact)
}

pub fn census_from(search: SearchResult) -> Result<CensusReport> {
    let n = search.classes.first().map(|c| c.representative.len()).unwrap_or(3);
    let lower_bound = palmore_lower_bound(n)?;
    let mut hist: Vec<IndexBin> = Vec::new();
    for c in &search.classes {
        let r = &c.index_report;
        match hist
            .iter_mut()
            .find(|b| (b.negative, b.positive, b.zero) == (r.negative_count, r.positive_count, r.zero_count))
        {
            Some(b) => b.count += 1,
            None => hist.push(IndexBin {
                negative: r.negative_count,
                positive: r.positive_count,
                zero: r.zero_count,
                count: 1,
            }),
        }
    }
    hist.sort_by_key(|b| (b.negative, b.zero, b.positive));
    let classes_found = search.classes.len();
    Ok(CensusReport {
        classes_found,
        lower_bound,
        satisfied: classes_found as u64 >= lower_bound,
        index_histogram: hist,
        search,
    })
}

pub fn palmore_census(masses: &MassVector, num_starts: usize, seed: u64, opts: &SearchOptions) -> Result<CensusReport> {
    palmore_lower_bound(masses.len())?;
    census_from(find_equilibria(masses, num_starts, seed, opts)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equilibria::{lagrange_triangle, moulton, two_body, ShapeTag};

    #[test]
    fn lower_bounds() {
        assert_eq!(palmore_lower_bound(3).unwrap(), 5);
        assert_eq!(palmore_lower_bound(4).unwrap(), 34);
        assert_eq!(palmore_lower_bound(5).unwrap(), 294);
        assert!(palmore_lower_bound(2).is_err());
    }

    #[test]
    fn starts_lie_in_shifted_annulus_and_are_reproducible() {
        let m = MassVector::new(vec![1.0, 2.0, 3.0]).unwrap();
        let opts = SearchOptions::default();
        let a = sample_starts(&m, 20, 9, &opts).unwrap();
        let b = sample_starts(&m, 20, 9, &opts).unwrap();
        assert_eq!(a, b);
        for s in &a {
            let c = s.center_of_mass();
            assert!(c[0].abs() < 1e-14 && c[1].abs() < 1e-14);
            assert!(s.max_radius() <= 4.0);
        }
    }

    #[test]
    fn two_equal_masses_give_one_class() {
        let m = MassVector::uniform(2, 1.0).unwrap();
        let r = find_equilibria(&m, 50, 1, &SearchOptions::default()).unwrap();
        assert_eq!(r.classes.len(), 1);
        let t = two_body(1.0, 1.0).unwrap();
        assert!(config_distance_mod_rotation(&r.classes[0].representative, &t).unwrap() < 1e-9);
    }

    #[test]
    fn three_bodies_five_classes() {
        let m = MassVector::new(vec![1.0, 2.0, 3.0]).unwrap();
        let r = find_equilibria(&m, 150, 42, &SearchOptions::default()).unwrap();
        assert_eq!(r.classes.len(), 5, "{:?}", r.diagnostics);
        assert!(r.diagnostics.max_polish_iterations <= 25);
        let mut oracles =
            vec![lagrange_triangle(1.0, 2.0, 3.0, false).unwrap(), lagrange_triangle(1.0, 2.0, 3.0, true).unwrap()];
        for order in [[1, 0, 2], [0, 1, 2], [0, 2, 1]] {
            oracles.push(moulton(&m, &order).unwrap());
        }
        for o in &oracles {
            assert!(r.classes.iter().any(|c| config_distance_mod_rotation(&c.representative, o).unwrap() < 1e-8));
        }
        let collinear = r.classes.iter().filter(|c| c.shape_tag == ShapeTag::Collinear).count();
        assert_eq!(collinear, 3);
    }

    #[test]
    fn potential_descent_only_reaches_minima() {
        let m = MassVector::new(vec![1.0, 2.0, 3.0]).unwrap();
        let opts = SearchOptions { objective: DescentObjective::Potential, ..Default::default() };
        let r = find_equilibria(&m, 40, 3, &opts).unwrap();
        assert!(!r.classes.is_empty());
        assert!(r.classes.iter().all(|c| c.shape_tag == ShapeTag::LagrangeTriangle));
    }

    #[test]
    fn permuting_starts_does_not_change_the_result() {
        let m = MassVector::new(vec![1.0, 2.0, 3.0]).unwrap();
        let opts = SearchOptions::default();
        let starts = sample_starts(&m, 40, 5, &opts).unwrap();
        let forward: Vec<_> = starts.iter().map(|s| run_start(s, &opts).unwrap()).collect();
        let mut backward = forward.clone();
        backward.reverse();
        let (a, _) = reduce_outcomes(&forward, &opts).unwrap();
        let (b, _) = reduce_outcomes(&backward, &opts).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn census_histogram() {
        let m = MassVector::new(vec![1.0, 2.0, 3.0]).unwrap();
        let c = palmore_census(&m, 150, 42, &SearchOptions::default()).unwrap();
        assert_eq!(c.lower_bound, 5);
        assert!(c.satisfied);
        let saddle = c.index_histogram.iter().find(|b| (b.negative, b.positive) == (1, 1)).unwrap();
        assert_eq!(saddle.count, 3);
    }

    #[test]
    fn zero_starts_is_an_error() {
        let m = MassVector::uniform(2, 1.0).unwrap();
        assert!(find_equilibria(&m, 0, 0, &SearchOptions::default()).is_err());
    }
}

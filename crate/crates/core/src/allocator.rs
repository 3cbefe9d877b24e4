//! Variance-constrained water-filling power allocation.
//!
//! Problem: maximize `alpha zeta C(X) + (1 - alpha) sum w_n^2 X_n` subject to
//! `sum X_n = N P`, `X_n >= 0` and `sum (X_n - P)^2 <= V0`, where
//! `C(X) = sum log2(1 + gamma_n X_n)` and `gamma_n = |h_n|^2 N / (N0 B)`.

use std::f64::consts::{LN_2, PI};

use serde::Serialize;

use crate::channel::{make_notched_profile, FastFading, DEFAULT_NOTCH_DEPTH_DB, DEFAULT_NOTCH_WIDTH};
use crate::comm::{gaussian_se, subcarrier_gamma};
use crate::error::{Error, Result};
use crate::ofdm::{variance_sum, PowerAllocation};
use crate::par::map_indexed;

/// Relative slack on the variance budget.
pub const VARIANCE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct AllocProblem {
    /// `|h_n|^2`.
    pub gains: Vec<f64>,
    /// `w_n^2` in (rad/s)^2.
    pub weights: Vec<f64>,
    pub alpha: f64,
    /// Mean power per subcarrier, W.
    pub mean_power: f64,
    /// Variance budget, W^2.
    pub v0: f64,
    /// W/Hz.
    pub noise_psd: f64,
    /// Hz.
    pub bandwidth: f64,
}

/// `w_n^2` for subcarrier offsets `w_n = 2 pi (n - (N-1)/2) B / N` from the
/// band centre.
pub fn baseband_weights(n: usize, bandwidth: f64) -> Vec<f64> {
    let c = (n as f64 - 1.0) / 2.0;
    (0..n)
        .map(|k| (2.0 * PI * (k as f64 - c) * bandwidth / n as f64).powi(2))
        .collect()
}

/// `w_n^2` for absolute subcarrier frequencies `f_c + (n - (N-1)/2) B / N`.
pub fn absolute_weights(n: usize, bandwidth: f64, carrier_hz: f64) -> Vec<f64> {
    let c = (n as f64 - 1.0) / 2.0;
    (0..n)
        .map(|k| (2.0 * PI * (carrier_hz + (k as f64 - c) * bandwidth / n as f64)).powi(2))
        .collect()
}

impl AllocProblem {
    pub fn validate(&self) -> Result<()> {
        let n = self.gains.len();
        if n == 0 {
            return Err(Error::Empty);
        }
        if self.weights.len() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                got: self.weights.len(),
            });
        }
        if self.gains.iter().any(|g| !(*g > 0.0) || !g.is_finite()) {
            return Err(Error::param("gains", "must be positive and finite"));
        }
        if self.weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
            return Err(Error::param("weights", "must be nonnegative and finite"));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::param("alpha", format!("must lie in [0, 1], got {}", self.alpha)));
        }
        if !(self.mean_power > 0.0) {
            return Err(Error::param("mean_power", "must be positive"));
        }
        if !(self.v0 >= 0.0) {
            return Err(Error::param("v0", "must be nonnegative"));
        }
        if !(self.noise_psd > 0.0) || !(self.bandwidth > 0.0) {
            return Err(Error::param("noise", "noise_psd and bandwidth must be positive"));
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.gains.len()
    }

    pub fn total_power(&self) -> f64 {
        self.n() as f64 * self.mean_power
    }

    pub fn gamma(&self) -> Vec<f64> {
        subcarrier_gamma(&self.gains, self.noise_psd, self.bandwidth)
    }

    /// `C(X)` in bits per channel use.
    pub fn capacity(&self, x: &[f64]) -> f64 {
        self.gamma().iter().zip(x).map(|(g, x)| gaussian_se(g * x)).sum()
    }

    /// `sum w_n^2 X_n`.
    pub fn sensing(&self, x: &[f64]) -> f64 {
        self.weights.iter().zip(x).map(|(w, x)| w * x).sum()
    }

    /// `S_max / C_max`.
    pub fn zeta(&self) -> f64 {
        let wf = waterfill_levels(&self.gamma(), self.total_power());
        let c_max = self.capacity(&wf);
        let s_max = self.total_power() * self.weights.iter().copied().fold(0.0, f64::max);
        if c_max > 0.0 {
            s_max / c_max
        } else {
            1.0
        }
    }

    pub fn objective(&self, x: &[f64]) -> f64 {
        self.objective_with(x, self.zeta())
    }

    pub fn objective_with(&self, x: &[f64], zeta: f64) -> f64 {
        self.alpha * zeta * self.capacity(x) + (1.0 - self.alpha) * self.sensing(x)
    }

    fn gradient(&self, x: &[f64], gamma: &[f64], zeta: f64) -> Vec<f64> {
        gamma
            .iter()
            .zip(x)
            .zip(&self.weights)
            .map(|((g, x), w)| self.alpha * zeta * g / ((1.0 + g * x) * LN_2) + (1.0 - self.alpha) * w)
            .collect()
    }

    /// True when `x` meets every constraint.
    pub fn is_feasible(&self, x: &[f64]) -> bool {
        let target = self.total_power();
        let sum: f64 = x.iter().sum();
        x.iter().all(|v| *v >= 0.0)
            && (sum - target).abs() <= PowerAllocation::POWER_TOL * target
            && variance_sum(x, self.mean_power) <= self.v0 * (1.0 + VARIANCE_TOL)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AllocSolution {
    pub x: PowerAllocation,
    pub objective: f64,
    pub stage1_x: PowerAllocation,
    pub projected: bool,
    pub lambda: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Stage1 {
    pub x: PowerAllocation,
    pub lambda: f64,
    pub iterations: usize,
    /// Bracket width at the start of the bisection.
    pub bracket: f64,
}

const MAX_BRACKET_DOUBLINGS: usize = 200;

fn stage1_levels(alpha: f64, zeta: f64, weights: &[f64], wmax: f64, gamma: &[f64], lambda: f64) -> Vec<f64> {
    weights
        .iter()
        .zip(gamma)
        .map(|(w, g)| (alpha * zeta / (LN_2 * ((1.0 - alpha) * (wmax - w) + lambda)) - 1.0 / g).max(0.0))
        .collect()
}

/// Shifts the active entries of `x` so the total hits `target`; falls back to
/// proportional scaling if the shift would drive an entry negative.
fn fix_total(x: &mut [f64], target: f64) {
    let sum: f64 = x.iter().sum();
    let active = x.iter().filter(|v| **v > 0.0).count();
    if active == 0 {
        let n = x.len() as f64;
        x.iter_mut().for_each(|v| *v = target / n);
        return;
    }
    let shift = (target - sum) / active as f64;
    if x.iter().all(|v| *v <= 0.0 || *v + shift >= 0.0) {
        x.iter_mut().filter(|v| **v > 0.0).for_each(|v| *v += shift);
    } else {
        x.iter_mut().for_each(|v| *v *= target / sum);
    }
}

/// Stage 1: the unconstrained-variance KKT point
/// `X_n = [alpha zeta / (ln2 ((1 - alpha)(w_max^2 - w_n^2) + lambda)) - 1/gamma_n]_+`,
/// with `lambda > 0` found by bisection on the total power. The bisection stops
/// once the bracket has shrunk by the factor `eps`.
pub fn stage1_waterfill(p: &AllocProblem, eps: f64) -> Result<Stage1> {
    p.validate()?;
    stage1_with_zeta(p, p.zeta(), eps)
}

pub fn stage1_with_zeta(p: &AllocProblem, zeta: f64, eps: f64) -> Result<Stage1> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::param("eps", "must lie in (0, 1)"));
    }
    let target = p.total_power();
    let wmax = p.weights.iter().copied().fold(0.0, f64::max);
    if p.alpha == 0.0 {
        let tied: Vec<bool> = p.weights.iter().map(|w| *w >= wmax * (1.0 - 1e-12)).collect();
        let k = tied.iter().filter(|t| **t).count() as f64;
        let x = tied.iter().map(|t| if *t { target / k } else { 0.0 }).collect();
        return Ok(Stage1 {
            x: PowerAllocation::new(x, p.mean_power)?,
            lambda: 0.0,
            iterations: 0,
            bracket: 0.0,
        });
    }
    let gamma = p.gamma();
    let total = |lam: f64| -> f64 { stage1_levels(p.alpha, zeta, &p.weights, wmax, &gamma, lam).iter().sum() };
    let gmax = gamma.iter().copied().fold(0.0, f64::max);
    let mut lo = 0.0;
    let mut hi = p.alpha * zeta * gmax / LN_2;
    let mut doublings = 0;
    while total(hi) > target {
        lo = hi;
        hi *= 2.0;
        doublings += 1;
        if doublings > MAX_BRACKET_DOUBLINGS || !hi.is_finite() {
            return Err(Error::InfeasibleBracket);
        }
    }
    let bracket = hi - lo;
    let tol = eps * bracket;
    let max_iter = (1.0 / eps).log2().ceil() as usize + 2;
    let mut iterations = 0;
    while hi - lo > tol {
        if iterations >= max_iter {
            return Err(Error::NoConvergence { iterations });
        }
        let mid = 0.5 * (lo + hi);
        if total(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
        iterations += 1;
    }
    let mut lambda = 0.5 * (lo + hi);
    let mut x = stage1_levels(p.alpha, zeta, &p.weights, wmax, &gamma, lambda);
    if x.iter().all(|v| *v == 0.0) {
        lambda = lo;
        x = stage1_levels(p.alpha, zeta, &p.weights, wmax, &gamma, lo);
    }
    fix_total(&mut x, target);
    Ok(Stage1 {
        x: PowerAllocation::new(x, p.mean_power)?,
        lambda,
        iterations,
        bracket,
    })
}

/// Upper bound on stage-1 bisection steps for a relative tolerance `eps`.
pub fn bisection_bound(eps: f64) -> usize {
    (1.0 / eps).log2().ceil() as usize
}

const DYKSTRA_SWEEPS: usize = 200;
const DYKSTRA_TOL: f64 = 1e-10;

/// Projection onto `{sum = N P} ∩ {||x - P||^2 <= V0}`: remove the mean
/// offset, then shrink radially toward `P 1`.
fn project_plane_ball(x: &[f64], mean_power: f64, v0: f64) -> Vec<f64> {
    let n = x.len() as f64;
    let off = x.iter().sum::<f64>() / n - mean_power;
    let mut y: Vec<f64> = x.iter().map(|v| v - off).collect();
    let d = variance_sum(&y, mean_power);
    if d > v0 {
        let s = (v0 / d).sqrt();
        y.iter_mut().for_each(|v| *v = mean_power + s * (*v - mean_power));
    }
    y
}

/// Stage 2: returns `x_star` untouched when it already meets the variance
/// budget; otherwise shrinks it radially toward `P 1`, falling back to
/// Dykstra's alternating projection when the shrink leaves the orthant.
pub fn stage2_project(x_star: &PowerAllocation, v0: f64) -> Result<(PowerAllocation, bool)> {
    let p = x_star.mean_power();
    let x = x_star.levels();
    let d = variance_sum(x, p);
    if d <= v0 * (1.0 + VARIANCE_TOL) {
        return Ok((x_star.clone(), false));
    }
    let s = (v0 / d).sqrt();
    let radial: Vec<f64> = x.iter().map(|v| p + s * (v - p)).collect();
    if radial.iter().all(|v| *v >= 0.0) {
        return Ok((PowerAllocation::with_tolerance(radial, p, 1e-9)?, true));
    }
    let out = dykstra_project(&radial, p, v0);
    Ok((PowerAllocation::new(out, p)?, true))
}

/// Dykstra's alternating projection between `{sum = N P} ∩ ball(P 1, sqrt V0)`
/// and the nonnegative orthant, followed by a feasibility repair.
///
/// The radial shrink in [`stage2_project`] is a convex combination of a
/// nonnegative vector and `P 1`, so this path only runs on inputs that already
/// contain negative entries.
pub fn dykstra_project(x: &[f64], p: f64, v0: f64) -> Vec<f64> {
    let n = x.len();
    let mut cur = x.to_vec();
    let mut pa = vec![0.0; n];
    let mut qa = vec![0.0; n];
    for _ in 0..DYKSTRA_SWEEPS {
        let a_in: Vec<f64> = cur.iter().zip(&pa).map(|(c, p)| c + p).collect();
        let y = project_plane_ball(&a_in, p, v0);
        pa = a_in.iter().zip(&y).map(|(a, y)| a - y).collect();
        let b_in: Vec<f64> = y.iter().zip(&qa).map(|(y, q)| y + q).collect();
        let next: Vec<f64> = b_in.iter().map(|v| v.max(0.0)).collect();
        qa = b_in.iter().zip(&next).map(|(b, n)| b - n).collect();
        let change = next.iter().zip(&cur).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        cur = next;
        let sum_res = (cur.iter().sum::<f64>() - n as f64 * p).abs() / (n as f64 * p);
        let var_res = (variance_sum(&cur, p) - v0).max(0.0) / v0.max(f64::MIN_POSITIVE);
        if change < DYKSTRA_TOL * p && sum_res < DYKSTRA_TOL && var_res < DYKSTRA_TOL {
            break;
        }
    }
    let mut out = project_simplex(&cur, n as f64 * p);
    let d = variance_sum(&out, p);
    if d > v0 {
        let s = (v0 / d).sqrt();
        out.iter_mut().for_each(|v| *v = p + s * (*v - p));
    }
    out
}

/// Algorithm 1: stage 1 followed by the variance projection.
pub fn two_stage(p: &AllocProblem, eps: f64) -> Result<AllocSolution> {
    p.validate()?;
    let zeta = p.zeta();
    let s1 = stage1_with_zeta(p, zeta, eps)?;
    let (x, projected) = stage2_project(&s1.x, p.v0)?;
    Ok(AllocSolution {
        objective: p.objective_with(x.levels(), zeta),
        x,
        stage1_x: s1.x,
        projected,
        lambda: s1.lambda,
        iterations: s1.iterations,
    })
}

/// Classical water-filling levels `[mu - 1/gamma_n]_+` summing to `total`,
/// with the water level found exactly by sorting.
pub fn waterfill_levels(gamma: &[f64], total: f64) -> Vec<f64> {
    let mut inv: Vec<f64> = gamma.iter().map(|g| 1.0 / g).collect();
    inv.sort_by(f64::total_cmp);
    let mut cum = 0.0;
    let mut mu = 0.0;
    for (k, v) in inv.iter().enumerate() {
        cum += v;
        let level = (total + cum) / (k + 1) as f64;
        if level > *v {
            mu = level;
        } else {
            break;
        }
    }
    gamma.iter().map(|g| (mu - 1.0 / g).max(0.0)).collect()
}

/// Capacity-optimal allocation of `N P` over subcarriers with gains `|h_n|^2`.
pub fn classical_waterfill(gains: &[f64], noise_psd: f64, bandwidth: f64, mean_power: f64) -> Result<PowerAllocation> {
    if gains.is_empty() {
        return Err(Error::Empty);
    }
    if gains.iter().any(|g| !(*g > 0.0)) {
        return Err(Error::param("gains", "must be positive"));
    }
    let gamma = subcarrier_gamma(gains, noise_psd, bandwidth);
    let mut x = waterfill_levels(&gamma, gains.len() as f64 * mean_power);
    fix_total(&mut x, gains.len() as f64 * mean_power);
    PowerAllocation::new(x, mean_power)
}

/// Euclidean projection onto `{x >= 0, sum x = z}`.
pub fn project_simplex(v: &[f64], z: f64) -> Vec<f64> {
    let mut order: Vec<usize> = (0..v.len()).collect();
    order.sort_by(|a, b| v[*b].total_cmp(&v[*a]));
    let theta = simplex_threshold(&order, |i| v[i], z);
    v.iter().map(|x| (x - theta).max(0.0)).collect()
}

/// Threshold of the simplex projection given a descending ordering.
fn simplex_threshold(order: &[usize], val: impl Fn(usize) -> f64, z: f64) -> f64 {
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (j, &i) in order.iter().enumerate() {
        let u = val(i);
        cum += u;
        let t = (cum - z) / (j + 1) as f64;
        if u - t > 0.0 {
            theta = t;
        } else {
            break;
        }
    }
    theta
}

/// Exact Euclidean projection onto the feasible set
/// `{x >= 0, sum x = N P, ||x - P||^2 <= V0}`.
///
/// The minimizer is `Pi_simplex((y + eta P) / (1 + eta))` for the smallest
/// `eta >= 0` meeting the variance budget, found by bisection.
pub fn project_feasible(y: &[f64], mean_power: f64, v0: f64) -> Vec<f64> {
    let n = y.len();
    let z = n as f64 * mean_power;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|a, b| y[*b].total_cmp(&y[*a]));
    let at = |eta: f64| -> Vec<f64> {
        let s = 1.0 / (1.0 + eta);
        let f = |i: usize| (y[i] + eta * mean_power) * s;
        let theta = simplex_threshold(&order, f, z);
        (0..n).map(|i| (f(i) - theta).max(0.0)).collect()
    };
    let x0 = at(0.0);
    if variance_sum(&x0, mean_power) <= v0 {
        return x0;
    }
    let mut lo = 0.0;
    let mut hi = 1.0;
    while variance_sum(&at(hi), mean_power) > v0 {
        lo = hi;
        hi *= 2.0;
        if hi > 1e300 {
            return vec![mean_power; n];
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if variance_sum(&at(mid), mean_power) > v0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    at(hi)
}

/// Projected-gradient ascent over the exact feasible set with Armijo
/// backtracking, started from the flat allocation. Returns the best iterate.
pub fn single_stage_pg(p: &AllocProblem, steps: usize, step_size: f64) -> Result<AllocSolution> {
    p.validate()?;
    let zeta = p.zeta();
    let gamma = p.gamma();
    let n = p.n();
    let mut x = vec![p.mean_power; n];
    let mut f = p.objective_with(&x, zeta);
    let mut best = (x.clone(), f);
    let mut t = step_size * p.mean_power * (n as f64).sqrt();
    let mut iterations = 0;
    for _ in 0..steps {
        iterations += 1;
        let g = p.gradient(&x, &gamma, zeta);
        let gn = g.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !(gn > 0.0) {
            break;
        }
        let mut accepted = false;
        for _ in 0..40 {
            let trial: Vec<f64> = x.iter().zip(&g).map(|(x, g)| x + t * g / gn).collect();
            let xn = project_feasible(&trial, p.mean_power, p.v0);
            let fnew = p.objective_with(&xn, zeta);
            let lin: f64 = g.iter().zip(xn.iter().zip(&x)).map(|(g, (a, b))| g * (a - b)).sum();
            if fnew >= f + 1e-4 * lin && fnew >= f {
                let moved = xn.iter().zip(&x).any(|(a, b)| a != b);
                x = xn;
                f = fnew;
                accepted = moved;
                break;
            }
            t *= 0.5;
        }
        if f > best.1 {
            best = (x.clone(), f);
        }
        if !accepted {
            break;
        }
        t *= 2.0;
    }
    let mut bx = best.0;
    fix_total(&mut bx, p.total_power());
    let x = PowerAllocation::new(bx, p.mean_power)?;
    Ok(AllocSolution {
        objective: p.objective_with(x.levels(), zeta),
        stage1_x: PowerAllocation::flat(n, p.mean_power),
        x,
        projected: true,
        lambda: 0.0,
        iterations,
    })
}

pub const ORACLE_MAX_N: usize = 8;
pub const ORACLE_MAX_LEVELS: usize = 16;

/// Brute-force search over the quantized grid `X_n in {k X_max / (L-1)}`,
/// `X_max = P + sqrt(V0)`, for the first `N - 1` subcarriers; the last one
/// takes the remaining power.
pub fn exhaustive_oracle(p: &AllocProblem, levels: usize) -> Result<AllocSolution> {
    p.validate()?;
    let n = p.n();
    if n > ORACLE_MAX_N || levels > ORACLE_MAX_LEVELS || levels < 2 {
        return Err(Error::SizeGuard(format!(
            "oracle needs N <= {ORACLE_MAX_N} and 2 <= L <= {ORACLE_MAX_LEVELS}, got N={n}, L={levels}"
        )));
    }
    let zeta = p.zeta();
    let target = p.total_power();
    let step = (p.mean_power + p.v0.sqrt()) / (levels - 1) as f64;
    let slack = 1e-12 * target;

    fn search(
        p: &AllocProblem,
        zeta: f64,
        target: f64,
        step: f64,
        levels: usize,
        slack: f64,
        cur: &mut Vec<f64>,
        best: &mut Option<(Vec<f64>, f64)>,
    ) {
        let n = p.n();
        let used: f64 = cur.iter().sum();
        let var = variance_sum(cur, p.mean_power);
        if used > target + slack || var > p.v0 * (1.0 + VARIANCE_TOL) {
            return;
        }
        if cur.len() == n - 1 {
            let last = (target - used).max(0.0);
            cur.push(last);
            if variance_sum(cur, p.mean_power) <= p.v0 * (1.0 + VARIANCE_TOL) {
                let f = p.objective_with(cur, zeta);
                if best.as_ref().is_none_or(|b| f > b.1) {
                    *best = Some((cur.clone(), f));
                }
            }
            cur.pop();
            return;
        }
        for k in 0..levels {
            cur.push(k as f64 * step);
            search(p, zeta, target, step, levels, slack, cur, best);
            cur.pop();
        }
    }

    let first = if n == 1 { 1 } else { levels };
    let partial = map_indexed(first, |k| {
        let mut best = None;
        let mut cur = Vec::with_capacity(n);
        if n > 1 {
            cur.push(k as f64 * step);
        }
        search(p, zeta, target, step, levels, slack, &mut cur, &mut best);
        best
    });
    let (bx, _) = partial
        .into_iter()
        .flatten()
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .ok_or(Error::InfeasibleBracket)?;
    let x = PowerAllocation::with_tolerance(bx, p.mean_power, 1e-9)?;
    Ok(AllocSolution {
        objective: p.objective_with(x.levels(), zeta),
        stage1_x: x.clone(),
        x,
        projected: false,
        lambda: 0.0,
        iterations: 0,
    })
}

/// Allocation scenario with a 50 dB flat attenuation, two notches and
/// optional Rayleigh fading.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Preset {
    pub n: usize,
    pub bandwidth: f64,
    pub total_power: f64,
    pub attenuation_db: f64,
    pub noise_psd: f64,
    pub notches: Vec<usize>,
    pub notch_depth_db: f64,
    pub notch_width: f64,
    /// `V0 / P^2`.
    pub v0_factor: f64,
}

impl Default for Preset {
    fn default() -> Self {
        Self {
            n: 1024,
            bandwidth: 1e9,
            total_power: 0.2,
            attenuation_db: 50.0,
            noise_psd: crate::dbm_per_hz_to_watts(-150.0),
            notches: vec![260, 760],
            notch_depth_db: DEFAULT_NOTCH_DEPTH_DB,
            notch_width: DEFAULT_NOTCH_WIDTH,
            v0_factor: 1.0,
        }
    }
}

impl Preset {
    pub fn mean_power(&self) -> f64 {
        self.total_power / self.n as f64
    }

    pub fn gains(&self, fading: FastFading, seed: u64) -> Result<Vec<f64>> {
        Ok(make_notched_profile(
            self.n,
            &self.notches,
            self.notch_depth_db,
            self.notch_width,
            self.attenuation_db,
            fading,
            seed,
        )?
        .into_gains())
    }

    pub fn problem(&self, alpha: f64, gains: Vec<f64>) -> AllocProblem {
        let p = self.mean_power();
        AllocProblem {
            weights: baseband_weights(self.n, self.bandwidth),
            gains,
            alpha,
            mean_power: p,
            v0: self.v0_factor * p * p,
            noise_psd: self.noise_psd,
            bandwidth: self.bandwidth,
        }
    }
}

/// RMS bandwidth of an allocation in hertz, `sqrt(sum w^2 X / sum X) / 2 pi`.
pub fn allocation_rms_bandwidth(levels: &[f64], weights: &[f64]) -> f64 {
    let total: f64 = levels.iter().sum();
    let m2: f64 = levels.iter().zip(weights).map(|(x, w)| x * w).sum();
    (m2 / total).sqrt() / (2.0 * PI)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TradeoffPoint {
    /// Hz.
    pub rms_bandwidth: f64,
    /// bits/s.
    pub sum_rate: f64,
    pub projected: bool,
}

/// Two-stage solutions over `alphas` on `draws` Rayleigh realizations of the
/// preset, indexed `[alpha][draw]`. Draw `d` uses the same channel for every
/// alpha.
pub fn tradeoff_campaign(preset: &Preset, fading: FastFading, alphas: &[f64], draws: usize, seed: u64, eps: f64) -> Result<Vec<Vec<TradeoffPoint>>> {
    let per_draw = map_indexed(draws, |d| -> Result<Vec<TradeoffPoint>> {
        let gains = preset.gains(fading, crate::rng::derive_seed(seed, d as u64))?;
        alphas
            .iter()
            .map(|&a| {
                let p = preset.problem(a, gains.clone());
                let s = two_stage(&p, eps)?;
                Ok(TradeoffPoint {
                    rms_bandwidth: allocation_rms_bandwidth(s.x.levels(), &p.weights),
                    sum_rate: crate::comm::sum_rate(s.x.levels(), &p.gains, p.noise_psd, p.bandwidth)?,
                    projected: s.projected,
                })
            })
            .collect()
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    Ok((0..alphas.len())
        .map(|a| per_draw.iter().map(|row| row[a]).collect())
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolverComparison {
    pub two_stage: f64,
    pub single_stage: f64,
    pub two_stage_projected: bool,
}

impl SolverComparison {
    pub fn ratio(&self) -> f64 {
        self.two_stage / self.single_stage
    }
}

/// Objective of [`two_stage`] against [`single_stage_pg`] on `draws` channel
/// realizations of the preset.
pub fn solver_campaign(
    preset: &Preset,
    fading: FastFading,
    alpha: f64,
    draws: usize,
    seed: u64,
    pg_steps: usize,
    pg_step: f64,
) -> Result<Vec<SolverComparison>> {
    map_indexed(draws, |d| {
        let gains = preset.gains(fading, crate::rng::derive_seed(seed, d as u64))?;
        let p = preset.problem(alpha, gains);
        let ts = two_stage(&p, 1e-12)?;
        let pg = single_stage_pg(&p, pg_steps, pg_step)?;
        Ok(SolverComparison {
            two_stage: ts.objective,
            single_stage: pg.objective,
            two_stage_projected: ts.projected,
        })
    })
    .into_iter()
    .collect()
}

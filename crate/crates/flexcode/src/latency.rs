//! Access-latency engine.
//!
//! HDD model: a node's latency is X + l * t_trans with X ~ Uniform(0, t_pos)
//! positioning time. Reading the first l_j rows of the fastest R_j nodes
//! completes layer j at T_j = U_(R_j) + l_j * t_trans (an order statistic,
//! Beta-distributed), and a flexible code finishes at min_j T_j — computed
//! in closed form for two layers, by Monte Carlo for any number, plus a
//! simulated coded matrix-vector-multiplication harness with pluggable
//! worker-delay distributions.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;

use crate::{Error, Result};

/// Name of the counter-based generator recorded in every output.
pub const RNG_NAME: &str = "ChaCha12";

/// Trials per independent stream; fixed so results are reproducible for a
/// given (seed, trials) regardless of thread count.
const STREAM_TRIALS: u64 = 1 << 16;

// ---------------------------------------------------------------------------
// Regularized incomplete beta
// ---------------------------------------------------------------------------

/// ln Gamma via the Lanczos approximation (g = 7, 9 coefficients).
pub fn ln_gamma(x: f64) -> f64 {
    const COEFFS: [f64; 8] = [
        676.5203681218851,
        -1259.1392167224028,
        771.32342877765313,
        -176.61502916214059,
        12.507343278686905,
        -0.13857109526572012,
        9.9843695780195716e-6,
        1.5056327351493116e-7,
    ];
    if x < 0.5 {
        // reflection
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = 0.99999999999980993;
    for (i, &c) in COEFFS.iter().enumerate() {
        acc += c / (x + i as f64 + 1.0);
    }
    let t = x + 7.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

pub fn ln_beta(a: f64, b: f64) -> f64 {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

/// Continued fraction for the incomplete beta (modified Lentz).
fn betacf(a: f64, b: f64, x: f64) -> f64 {
    const FPMIN: f64 = 1e-300;
    const EPS: f64 = 3e-16;
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < FPMIN {
        d = FPMIN;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=300 {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < FPMIN {
            d = FPMIN;
        }
        c = 1.0 + aa / c;
        if c.abs() < FPMIN {
            c = FPMIN;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < FPMIN {
            d = FPMIN;
        }
        c = 1.0 + aa / c;
        if c.abs() < FPMIN {
            c = FPMIN;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

/// Regularized incomplete beta I_x(a, b), relative error well below 1e-10.
pub fn reg_inc_beta(x: f64, a: f64, b: f64) -> Result<f64> {
    if !x.is_finite() || !(0.0..=1.0).contains(&x) {
        return Err(Error::Domain(format!("x = {x} outside [0, 1]")));
    }
    if a <= 0.0 || b <= 0.0 {
        return Err(Error::Domain(format!("need a, b > 0, got ({a}, {b})")));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    if x == 1.0 {
        return Ok(1.0);
    }
    let ln_bt = a * x.ln() + b * (1.0 - x).ln() - ln_beta(a, b);
    let bt = ln_bt.exp();
    // symmetry switch keeps the continued fraction converging fast
    if x < (a + 1.0) / (a + b + 2.0) {
        Ok(bt * betacf(a, b, x) / a)
    } else {
        Ok(1.0 - bt * betacf(b, a, 1.0 - x) / b)
    }
}

// ---------------------------------------------------------------------------
// HDD access model
// ---------------------------------------------------------------------------

/// Node count plus the positioning/transfer time scales.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatencyModel {
    pub n: usize,
    /// Maximum positioning time; X ~ Uniform(0, t_pos).
    pub t_pos: f64,
    /// Transfer time per symbol.
    pub t_trans: f64,
}

impl LatencyModel {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || !(self.t_pos > 0.0) || !(self.t_trans >= 0.0) {
            return Err(Error::Domain(format!(
                "need n > 0, t_pos > 0, t_trans >= 0, got {self:?}"
            )));
        }
        Ok(())
    }
}

/// Monte Carlo bookkeeping attached to a [`LatencyResult`].
#[derive(Debug, Clone, PartialEq)]
pub struct McStats {
    pub trials: u64,
    pub seed: u64,
    pub rng: &'static str,
    /// Standard error of the flexible-latency mean.
    pub std_error: f64,
    /// 95% confidence half-width (1.96 standard errors).
    pub ci_half_width: f64,
    /// Trials where min_j T_j exceeded any single T_j (always 0).
    pub dominance_violations: u64,
}

/// Expected latencies: one per layer, the flexible minimum, and savings.
#[derive(Debug, Clone, PartialEq)]
pub struct LatencyResult {
    pub per_layer: Vec<f64>,
    pub flexible: f64,
    /// `savings[j] = E[T_j] - E[min]`, one per layer.
    pub savings: Vec<f64>,
    pub mc: Option<McStats>,
}

/// Closed-form expected latency of a fixed (n, R, l) code:
/// R/(n+1) * t_pos + l * t_trans.
pub fn expected_fixed(model: &LatencyModel, threshold: usize, rows: usize) -> Result<f64> {
    model.validate()?;
    if threshold == 0 || threshold > model.n {
        return Err(Error::Domain(format!(
            "threshold {threshold} outside 1..={}",
            model.n
        )));
    }
    Ok(threshold as f64 / (model.n + 1) as f64 * model.t_pos + rows as f64 * model.t_trans)
}

/// Closed-form two-layer flexible expectation.
///
/// With d = U_(R1) - U_(R2) ~ Beta(R1-R2, n+1-(R1-R2)) on [0, t_pos] and
/// g = (l2-l1) t_trans, the saving against the layer-1 fixed code is
/// E[(d - g)+]; when g >= t_pos the minimum degenerates to T_1.
pub fn expected_flexible_2layer(
    model: &LatencyModel,
    layer1: (usize, usize),
    layer2: (usize, usize),
) -> Result<LatencyResult> {
    model.validate()?;
    let (r1, l1) = layer1;
    let (r2, l2) = layer2;
    if !(r1 > r2 && l1 < l2 && r2 >= 1 && r1 <= model.n) {
        return Err(Error::Domain(format!(
            "need R1 > R2 >= 1, l1 < l2, R1 <= n, got ({r1},{l1}) ({r2},{l2})"
        )));
    }
    let e1 = expected_fixed(model, r1, l1)?;
    let e2 = expected_fixed(model, r2, l2)?;
    let x = (l2 - l1) as f64 * model.t_trans / model.t_pos;
    let a = (r1 - r2) as f64;
    let b = (model.n + 1 - (r1 - r2)) as f64;
    let (saved1, saved2) = if x >= 1.0 {
        // transfer gap exceeds the largest possible positioning gap:
        // T_1 <= T_2 always, the flexible code behaves as the fixed layer 1
        (0.0, e2 - e1)
    } else {
        let tail = if x == 0.0 {
            0.0
        } else {
            (a * x.ln() + b * (1.0 - x).ln() - ln_beta(a, b)).exp() * model.t_pos
                / (model.n + 1) as f64
        };
        let i_upper = reg_inc_beta(1.0 - x, b, a)?; // P(d > g)
        let s1 = (e1 - e2) * i_upper + tail;
        let s2 = (e2 - e1) * (1.0 - i_upper) + tail;
        (s1, s2)
    };
    let flexible = e1 - saved1;
    Ok(LatencyResult {
        per_layer: vec![e1, e2],
        flexible,
        savings: vec![saved1, saved2],
        mc: None,
    })
}

/// Per-trial completion times: T_j = sorted_delay[R_j - 1] + l_j * unit,
/// and the flexible minimum over layers.
pub fn trial_completion(
    sorted_delays: &[f64],
    tuples: &[(usize, usize)],
    unit: f64,
) -> (Vec<f64>, f64) {
    let per_layer: Vec<f64> = tuples
        .iter()
        .map(|&(r, l)| sorted_delays[r - 1] + l as f64 * unit)
        .collect();
    let flexible = per_layer.iter().copied().fold(f64::INFINITY, f64::min);
    (per_layer, flexible)
}

fn validate_tuples(n: usize, tuples: &[(usize, usize)]) -> Result<()> {
    if tuples.is_empty() {
        return Err(Error::Domain("need at least one (R_j, l_j) tuple".into()));
    }
    for &(r, _) in tuples {
        if r == 0 || r > n {
            return Err(Error::Domain(format!("threshold {r} outside 1..={n}")));
        }
    }
    Ok(())
}

struct StreamSums {
    count: u64,
    layer_sums: Vec<f64>,
    flex_sum: f64,
    flex_sumsq: f64,
    violations: u64,
}

fn run_streams(
    n: usize,
    trials: u64,
    seed: u64,
    sample_delay: impl Fn(&mut ChaCha12Rng) -> f64 + Sync + Send,
    tuples: &[(usize, usize)],
    unit: f64,
) -> StreamSums {
    let streams: u64 = trials.div_ceil(STREAM_TRIALS);
    let partials: Vec<StreamSums> = (0..streams)
        .into_par_iter()
        .map(|s| {
            let mut rng = ChaCha12Rng::seed_from_u64(seed);
            rng.set_stream(s);
            let count = STREAM_TRIALS.min(trials - s * STREAM_TRIALS);
            let mut sums = StreamSums {
                count,
                layer_sums: vec![0.0; tuples.len()],
                flex_sum: 0.0,
                flex_sumsq: 0.0,
                violations: 0,
            };
            let mut delays = vec![0.0f64; n];
            for _ in 0..count {
                for d in &mut delays {
                    *d = sample_delay(&mut rng);
                }
                delays.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
                let (per_layer, flex) = trial_completion(&delays, tuples, unit);
                for (acc, t) in sums.layer_sums.iter_mut().zip(per_layer.iter()) {
                    *acc += t;
                    if flex > *t {
                        sums.violations += 1;
                    }
                }
                sums.flex_sum += flex;
                sums.flex_sumsq += flex * flex;
            }
            sums
        })
        .collect();
    let mut total = StreamSums {
        count: 0,
        layer_sums: vec![0.0; tuples.len()],
        flex_sum: 0.0,
        flex_sumsq: 0.0,
        violations: 0,
    };
    for p in partials {
        total.count += p.count;
        total.flex_sum += p.flex_sum;
        total.flex_sumsq += p.flex_sumsq;
        total.violations += p.violations;
        for (a, b) in total.layer_sums.iter_mut().zip(p.layer_sums.iter()) {
            *a += b;
        }
    }
    total
}

fn finish(sums: StreamSums, seed: u64) -> LatencyResult {
    let nf = sums.count as f64;
    let per_layer: Vec<f64> = sums.layer_sums.iter().map(|s| s / nf).collect();
    let flexible = sums.flex_sum / nf;
    let var = ((sums.flex_sumsq - nf * flexible * flexible) / (nf - 1.0)).max(0.0);
    let se = (var / nf).sqrt();
    LatencyResult {
        savings: per_layer.iter().map(|t| t - flexible).collect(),
        per_layer,
        flexible,
        mc: Some(McStats {
            trials: sums.count,
            seed,
            rng: RNG_NAME,
            std_error: se,
            ci_half_width: 1.96 * se,
            dominance_violations: sums.violations,
        }),
    }
}

/// Monte Carlo estimate for any number of layers. One positioning draw per
/// node per trial is shared across layers (they are dependent order
/// statistics of the same sample); deterministic for a given (seed, trials).
pub fn monte_carlo(
    model: &LatencyModel,
    tuples: &[(usize, usize)],
    trials: u64,
    seed: u64,
) -> Result<LatencyResult> {
    model.validate()?;
    validate_tuples(model.n, tuples)?;
    if trials == 0 {
        return Err(Error::Domain("trials must be positive".into()));
    }
    let t_pos = model.t_pos;
    let sums = run_streams(
        model.n,
        trials,
        seed,
        move |rng| rng.gen::<f64>() * t_pos,
        tuples,
        model.t_trans,
    );
    Ok(finish(sums, seed))
}

// ---------------------------------------------------------------------------
// Coded matrix-vector-multiplication harness
// ---------------------------------------------------------------------------

/// Worker start-up delay distribution for the compute harness.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DelayDistribution {
    Uniform { lo: f64, hi: f64 },
    Exponential { rate: f64 },
    ShiftedExponential { shift: f64, rate: f64 },
}

impl DelayDistribution {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            DelayDistribution::Uniform { lo, hi } => lo.is_finite() && hi >= lo,
            DelayDistribution::Exponential { rate } => rate > 0.0,
            DelayDistribution::ShiftedExponential { shift, rate } => {
                shift.is_finite() && rate > 0.0
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Domain(format!("bad delay distribution {self:?}")))
        }
    }

    /// Inverse-CDF sample from a uniform draw.
    fn sample(&self, u: f64) -> f64 {
        match *self {
            DelayDistribution::Uniform { lo, hi } => lo + (hi - lo) * u,
            DelayDistribution::Exponential { rate } => -(1.0 - u).ln() / rate,
            DelayDistribution::ShiftedExponential { shift, rate } => {
                shift - (1.0 - u).ln() / rate
            }
        }
    }
}

/// Distributed matrix-vector multiplication: the matrix is split row-wise
/// over `n` workers, each assigned `l` sequential tasks of `task_time`;
/// once any R_j workers finish l_j tasks the result is decodable, and the
/// flexible run finishes at the earliest such layer.
pub fn simulate_coded_compute(
    n: usize,
    tuples: &[(usize, usize)],
    delays: DelayDistribution,
    task_time: f64,
    trials: u64,
    seed: u64,
) -> Result<LatencyResult> {
    validate_tuples(n, tuples)?;
    delays.validate()?;
    if !(task_time >= 0.0) || trials == 0 {
        return Err(Error::Domain("need task_time >= 0 and trials > 0".into()));
    }
    let sums = run_streams(
        n,
        trials,
        seed,
        move |rng| delays.sample(rng.gen::<f64>()),
        tuples,
        task_time,
    );
    Ok(finish(sums, seed))
}

// ---------------------------------------------------------------------------
// Sweep output
// ---------------------------------------------------------------------------

/// CSV sweep of the two-layer closed form over t_trans.
///
/// Columns: t_trans, E_fixed_1, E_fixed_2, E_flexible,
/// savings_pct_vs_best_fixed.
pub fn sweep_csv(
    n: usize,
    t_pos: f64,
    layer1: (usize, usize),
    layer2: (usize, usize),
    t_trans_max: f64,
    steps: usize,
) -> Result<String> {
    if steps < 2 || !(t_trans_max >= 0.0) {
        return Err(Error::Domain("need steps >= 2 and t_trans_max >= 0".into()));
    }
    let mut out = String::from("t_trans,e_fixed_1,e_fixed_2,e_flexible,savings_pct_vs_best_fixed\n");
    for i in 0..steps {
        let t = t_trans_max * i as f64 / (steps - 1) as f64;
        let model = LatencyModel {
            n,
            t_pos,
            t_trans: t,
        };
        let r = expected_flexible_2layer(&model, layer1, layer2)?;
        let best = r.per_layer[0].min(r.per_layer[1]);
        let pct = (best - r.flexible) / best * 100.0;
        out.push_str(&format!(
            "{t:.6},{:.9},{:.9},{:.9},{pct:.6}\n",
            r.per_layer[0], r.per_layer[1], r.flexible
        ));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn simpson_reg_beta(x: f64, a: f64, b: f64) -> f64 {
        // quadrature oracle for a, b >= 1 (no endpoint singularities)
        let f = |t: f64| t.powf(a - 1.0) * (1.0 - t).powf(b - 1.0);
        let steps = 200_000;
        let h = x / steps as f64;
        let mut acc = f(0.0) + f(x);
        for i in 1..steps {
            let t = i as f64 * h;
            acc += f(t) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        (acc * h / 3.0) / ln_beta(a, b).exp()
    }

    #[test]
    fn beta_endpoints_and_uniform_cdf() {
        assert_eq!(reg_inc_beta(0.0, 2.5, 3.0).unwrap(), 0.0);
        assert_eq!(reg_inc_beta(1.0, 2.5, 3.0).unwrap(), 1.0);
        assert!((reg_inc_beta(0.5, 1.0, 1.0).unwrap() - 0.5).abs() < 1e-14);
        assert!(reg_inc_beta(-0.1, 1.0, 1.0).is_err());
        assert!(reg_inc_beta(0.5, 0.0, 1.0).is_err());
    }

    #[test]
    fn beta_against_quadrature_oracle() {
        for &(x, a, b) in &[
            (0.3, 1.0, 1.0),
            (0.7, 2.0, 5.0),
            (0.2, 3.0, 14.0),
            (0.9, 14.0, 3.0),
            (0.5, 7.5, 1.5),
        ] {
            let got = reg_inc_beta(x, a, b).unwrap();
            let want = simpson_reg_beta(x, a, b);
            assert!(
                (got - want).abs() <= 1e-9 * want.max(1e-3),
                "I_{x}({a},{b}): {got} vs {want}"
            );
        }
    }

    #[test]
    fn beta_recurrence_identity_spot() {
        // I_x(b, a+1) = I_x(b, a) + x^b (1-x)^a / (a B(b, a))
        for &(x, a, b) in &[(0.3, 3.0, 14.0), (0.62, 1.5, 2.0), (0.05, 4.0, 13.0)] {
            let lhs = reg_inc_beta(x, b, a + 1.0).unwrap();
            let rhs = reg_inc_beta(x, b, a).unwrap()
                + x.powf(b) * (1.0 - x).powf(a) / (a * ln_beta(b, a).exp());
            assert!((lhs - rhs).abs() < 1e-12, "({x},{a},{b}): {lhs} vs {rhs}");
        }
    }

    #[test]
    fn expected_fixed_closed_form() {
        let model = LatencyModel {
            n: 16,
            t_pos: 1.0,
            t_trans: 0.0,
        };
        assert!((expected_fixed(&model, 16, 4).unwrap() - 16.0 / 17.0).abs() < 1e-15);
        let model = LatencyModel {
            n: 16,
            t_pos: 1.0,
            t_trans: 0.02,
        };
        assert!((expected_fixed(&model, 15, 4).unwrap() - (15.0 / 17.0 + 0.08)).abs() < 1e-15);
        assert!((expected_fixed(&model, 12, 5).unwrap() - (12.0 / 17.0 + 0.10)).abs() < 1e-15);
        assert!(expected_fixed(&model, 17, 4).is_err());
    }

    #[test]
    fn expected_fixed_agrees_with_monte_carlo() {
        let model = LatencyModel {
            n: 16,
            t_pos: 1.0,
            t_trans: 0.02,
        };
        for (r, l) in [(15usize, 4usize), (12, 5)] {
            let closed = expected_fixed(&model, r, l).unwrap();
            let mc = monte_carlo(&model, &[(r, l)], 1_000_000, 20240811).unwrap();
            let se = mc.mc.as_ref().unwrap().std_error;
            assert!(
                (closed - mc.flexible).abs() <= 3.0 * se,
                "closed {closed} vs mc {} (se {se})",
                mc.flexible
            );
        }
    }

    #[test]
    fn order_statistic_moments_match_beta() {
        // E and Var of U_(R) against Beta(R, n+1-R) moments
        let model = LatencyModel {
            n: 8,
            t_pos: 2.0,
            t_trans: 0.0,
        };
        let n = 8.0f64;
        let mut prev = 0.0;
        for r in 1..=8usize {
            let mc = monte_carlo(&model, &[(r, 1)], 400_000, 7).unwrap();
            let mean = mc.flexible;
            let rf = r as f64;
            let want_mean = rf / (n + 1.0) * 2.0;
            let want_var = rf * (n + 1.0 - rf) / ((n + 1.0).powi(2) * (n + 2.0)) * 4.0;
            let se = mc.mc.as_ref().unwrap().std_error;
            assert!((mean - want_mean).abs() < 4.0 * se);
            let sample_var = se * se * 400_000.0;
            assert!((sample_var - want_var).abs() / want_var < 0.05);
            assert!(want_mean > prev, "E[U_R] must grow with R");
            prev = want_mean;
        }
    }

    #[test]
    fn degenerate_transfer_gap_pins_layer_one() {
        // x >= 1: the flexible latency equals the layer-1 fixed latency
        let model = LatencyModel {
            n: 8,
            t_pos: 1.0,
            t_trans: 0.6,
        };
        let r = expected_flexible_2layer(&model, (6, 2), (4, 4)).unwrap();
        assert_eq!(r.flexible, r.per_layer[0]);
        assert_eq!(r.savings[0], 0.0);
        assert!(r.savings[1] > 0.0);
    }

    #[test]
    fn two_layer_closed_form_matches_monte_carlo() {
        for &(n, r1, l1, r2, l2, tt) in &[
            (16usize, 15usize, 4usize, 12usize, 5usize, 0.02f64),
            (16, 15, 4, 12, 5, 0.18),
            (8, 6, 2, 4, 3, 0.1),
            (5, 4, 2, 2, 4, 0.05),
        ] {
            let model = LatencyModel {
                n,
                t_pos: 1.0,
                t_trans: tt,
            };
            let closed = expected_flexible_2layer(&model, (r1, l1), (r2, l2)).unwrap();
            let mc = monte_carlo(&model, &[(r1, l1), (r2, l2)], 1_000_000, 99).unwrap();
            let se = mc.mc.as_ref().unwrap().std_error;
            assert!(
                (closed.flexible - mc.flexible).abs() <= 4.0 * se,
                "n={n} tt={tt}: closed {} vs mc {} (se {se})",
                closed.flexible,
                mc.flexible
            );
            assert_eq!(mc.mc.as_ref().unwrap().dominance_violations, 0);
            // closed-form per-layer means are exact
            for j in 0..2 {
                assert!((closed.per_layer[j] - mc.per_layer[j]).abs() < 6.0 * se);
            }
        }
    }

    #[test]
    fn three_layer_monte_carlo_vs_combinatorial_quadrature() {
        // oracle: E[min_j T_j] = integral of P(min > t) dt with the tail
        // probability computed exactly by multinomial enumeration
        let n = 4usize;
        let t_pos = 1.0f64;
        let tt = 0.07f64;
        let tuples = [(4usize, 1usize), (3, 2), (2, 4)];
        let caps: Vec<usize> = tuples.iter().map(|&(r, _)| r - 1).collect();

        let tail_prob = |t: f64| -> f64 {
            // thresholds a_j = t - l_j * tt; need #draws <= a_j to stay <= R_j - 1
            let mut thr: Vec<(f64, usize)> = tuples
                .iter()
                .zip(caps.iter())
                .map(|(&(_, l), &c)| ((t - l as f64 * tt).clamp(0.0, t_pos), c))
                .collect();
            if thr
                .iter()
                .zip(tuples.iter())
                .any(|(&(a, _), &(_, l))| t - (l as f64) * tt >= t_pos && a >= t_pos)
            {
                return 0.0;
            }
            thr.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
            // interval boundaries 0 <= b1 <= b2 <= b3 <= t_pos
            let bounds: Vec<f64> = thr.iter().map(|&(a, _)| a).collect();
            let mut edges = vec![0.0];
            edges.extend(&bounds);
            edges.push(t_pos);
            let widths: Vec<f64> = edges.windows(2).map(|w| (w[1] - w[0]) / t_pos).collect();
            // enumerate counts per interval for n draws
            let mut prob = 0.0;
            let m = widths.len();
            let mut counts = vec![0usize; m];
            fn rec(
                idx: usize,
                left: usize,
                counts: &mut Vec<usize>,
                widths: &[f64],
                thr: &[(f64, usize)],
                prob: &mut f64,
            ) {
                if idx + 1 == counts.len() {
                    counts[idx] = left;
                    // cumulative counts below each threshold must respect caps
                    let mut cum = 0usize;
                    for (i, &(_, cap)) in thr.iter().enumerate() {
                        cum += counts[i];
                        if cum > cap {
                            return;
                        }
                    }
                    // multinomial probability
                    let n: usize = counts.iter().sum();
                    let mut logp = 0.0;
                    let fact = |k: usize| -> f64 {
                        (1..=k).map(|v| (v as f64).ln()).sum::<f64>()
                    };
                    logp += fact(n);
                    for (c, w) in counts.iter().zip(widths.iter()) {
                        logp -= fact(*c);
                        if *c > 0 {
                            if *w <= 0.0 {
                                return;
                            }
                            logp += *c as f64 * w.ln();
                        }
                    }
                    *prob += logp.exp();
                    return;
                }
                for c in 0..=left {
                    counts[idx] = c;
                    rec(idx + 1, left - c, counts, widths, thr, prob);
                }
            }
            rec(0, n, &mut counts, &widths, &thr, &mut prob);
            prob
        };

        // Simpson over t in [0, t_pos + l_max * tt]
        let t_max = t_pos + 4.0 * tt;
        let steps = 40_000;
        let h = t_max / steps as f64;
        let mut expect = tail_prob(0.0) + tail_prob(t_max);
        for i in 1..steps {
            expect += tail_prob(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        expect = expect * h / 3.0;

        let model = LatencyModel {
            n,
            t_pos,
            t_trans: tt,
        };
        let mc = monte_carlo(&model, &tuples, 1_000_000, 31337).unwrap();
        let se = mc.mc.as_ref().unwrap().std_error;
        assert!(
            (mc.flexible - expect).abs() <= 4.0 * se,
            "mc {} vs quadrature {expect} (se {se})",
            mc.flexible
        );
    }

    #[test]
    fn deterministic_workers_complete_exactly() {
        let tuples = [(5usize, 12usize), (4, 15)];
        let r = simulate_coded_compute(
            8,
            &tuples,
            DelayDistribution::Uniform { lo: 2.0, hi: 2.0 },
            0.25,
            64,
            1,
        )
        .unwrap();
        let t1 = 2.0 + 12.0 * 0.25;
        let t2 = 2.0 + 15.0 * 0.25;
        assert_eq!(r.per_layer, vec![t1, t2]);
        assert_eq!(r.flexible, t1.min(t2));
        assert_eq!(r.mc.unwrap().dominance_violations, 0);
    }

    #[test]
    fn two_worker_toy_case_matches_hand_enumeration() {
        // two workers, layers (R, l) = (2, 1) and (1, 2): completion is
        // min(max(d) + u, min(d) + 2u)
        let tuples = [(2usize, 1usize), (1, 2)];
        for (d1, d2, u) in [(0.1, 0.9, 0.3), (0.5, 0.6, 0.01), (0.9, 0.2, 1.5)] {
            let mut sorted = [d1, d2];
            sorted.sort_by(|a: &f64, b: &f64| a.partial_cmp(b).unwrap());
            let (per_layer, flex) = trial_completion(&sorted, &tuples, u);
            let want1 = d1.max(d2) + u;
            let want2 = d1.min(d2) + 2.0 * u;
            assert_eq!(per_layer, vec![want1, want2]);
            assert_eq!(flex, want1.min(want2));
        }
    }

    #[test]
    fn monte_carlo_is_deterministic_for_seed() {
        let model = LatencyModel {
            n: 6,
            t_pos: 1.0,
            t_trans: 0.1,
        };
        let a = monte_carlo(&model, &[(5, 2), (3, 4)], 200_000, 5).unwrap();
        let b = monte_carlo(&model, &[(5, 2), (3, 4)], 200_000, 5).unwrap();
        assert_eq!(a, b);
        let c = monte_carlo(&model, &[(5, 2), (3, 4)], 200_000, 6).unwrap();
        assert_ne!(a.flexible, c.flexible);
    }

    #[test]
    fn sweep_csv_matches_closed_form_rows() {
        let csv = sweep_csv(16, 1.0, (15, 4), (12, 5), 0.5, 6).unwrap();
        let lines: Vec<&str> = csv.trim().lines().collect();
        assert_eq!(lines[0], "t_trans,e_fixed_1,e_fixed_2,e_flexible,savings_pct_vs_best_fixed");
        assert_eq!(lines.len(), 7);
        let mid: Vec<f64> = lines[3].split(',').map(|v| v.parse().unwrap()).collect();
        let model = LatencyModel {
            n: 16,
            t_pos: 1.0,
            t_trans: mid[0],
        };
        let r = expected_flexible_2layer(&model, (15, 4), (12, 5)).unwrap();
        assert!((mid[1] - r.per_layer[0]).abs() < 1e-8);
        assert!((mid[3] - r.flexible).abs() < 1e-8);
    }
}

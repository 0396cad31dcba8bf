#![allow(dead_code)]

use pwexp::model::{SurvivalDataset, SurvivalRecord};
use pwexp::pex::{PeParams, TruncationBounds};
use rand::Rng;
use rand_distr::{Distribution, Gamma};

pub fn s1() -> PeParams {
    PeParams::from_parts(vec![0.0, 2.0, 3.0, 5.0], vec![0.3, 0.6, 0.8, 1.3]).unwrap()
}

/// Uncensored draws from `params`.
pub fn event_data<R: Rng>(params: &PeParams, n: usize, rng: &mut R) -> SurvivalDataset {
    let times: Vec<f64> = (0..n)
        .map(|_| params.sample(&TruncationBounds::none(), rng).unwrap())
        .collect();
    SurvivalDataset::from_event_times(&times).unwrap()
}

/// Clustered data: `subjects` subjects with `replicates` records each, a binary
/// and a continuous covariate, gamma frailties with variance `kappa` and
/// uniform censoring on `(0, censor_max)`.
pub fn frailty_data<R: Rng>(
    baseline: &PeParams,
    subjects: usize,
    replicates: usize,
    beta: [f64; 2],
    kappa: f64,
    censor_max: f64,
    rng: &mut R,
) -> SurvivalDataset {
    let frailty = Gamma::new(1.0 / kappa, kappa).unwrap();
    let mut records = Vec::new();
    for s in 1..=subjects {
        let z: f64 = frailty.sample(rng);
        let sex = f64::from(rng.random_bool(0.5));
        for r in 1..=replicates {
            let age = rng.random_range(10.0..70.0_f64);
            let w = (beta[0] * sex + beta[1] * age).exp() * z;
            let t = baseline
                .scaled(w)
                .unwrap()
                .sample(&TruncationBounds::none(), rng)
                .unwrap();
            let c = rng.random_range(0.0..censor_max);
            let (time, event) = if t <= c {
                (t, true)
            } else {
                (c.max(1e-6), false)
            };
            records.push(SurvivalRecord {
                subject: s,
                replicate: r,
                time,
                event,
                covariates: vec![sex, age],
            });
        }
    }
    SurvivalDataset::new(vec!["sex".into(), "age".into()], records).unwrap()
}

/// Mean and variance of the density `∝ exp(log_f(x))` on `x > 0`, by Simpson's
/// rule in `u = ln x` around the mode. `log_f` must be log-concave in `u`
/// (true for every gamma-type conditional).
pub fn moments_by_quadrature(log_f: impl Fn(f64) -> f64) -> (f64, f64) {
    let g = |u: f64| log_f(u.exp()) + u;
    // golden-section search for the mode
    let (mut a, mut b) = (-60.0_f64, 20.0_f64);
    let r = (5.0_f64.sqrt() - 1.0) / 2.0;
    for _ in 0..200 {
        let c = b - r * (b - a);
        let d = a + r * (b - a);
        if g(c) > g(d) {
            b = d;
        } else {
            a = c;
        }
    }
    let mode = 0.5 * (a + b);
    let peak = g(mode);
    let h = 1e-3;
    let curv = -(g(mode + h) - 2.0 * peak + g(mode - h)) / (h * h);
    let scale = 1.0 / curv.max(1e-12).sqrt();
    // walk out until the log density has dropped by 45
    let edge = |dir: f64| {
        let mut u = mode;
        while g(u) > peak - 45.0 {
            u += dir * scale;
        }
        u
    };
    let (lo, hi) = (edge(-1.0), edge(1.0));
    let n = 4_000;
    let step = (hi - lo) / n as f64;
    let (mut z, mut m1, mut m2) = (0.0, 0.0, 0.0);
    for k in 0..=n {
        let u = lo + k as f64 * step;
        let w = if k == 0 || k == n {
            1.0
        } else if k % 2 == 1 {
            4.0
        } else {
            2.0
        };
        let dens = w * (g(u) - peak).exp();
        let x = u.exp();
        z += dens;
        m1 += dens * x;
        m2 += dens * x * x;
    }
    let mean = m1 / z;
    (mean, m2 / z - mean * mean)
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

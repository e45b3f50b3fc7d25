//! Built-in verification suites runnable without external data. Each suite
//! checks the optimized implementation against an independent transcription
//! or invariant and reports pass/fail.

use ndarray::{Array1, Array2, Array5};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use scvcnet::eval::{run_case, tune_hyperparams, CaseData, TuningGrid};
use scvcnet::model::{fit_ridge, normal_equation_residual, TrainConfig};
use scvcnet::scvc::{scvc, CrossTerm, KernelBank};
use scvcnet::signal::welch::{welch_psd, WelchConfig};
use scvcnet::synthetic::synthetic_database;
use scvcnet::types::DatabaseId;

pub struct SuiteResult {
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

fn scvc_transcription(
    x: &[f64],
    y: &[f64],
    kernel: &Array2<f64>,
    stride: usize,
    cross_term: CrossTerm,
) -> Array2<f64> {
    let d = kernel.nrows();
    let c = d / 2;
    let (m, n) = (x.len(), y.len());
    let mut xp = vec![0.0; c];
    xp.extend_from_slice(x);
    xp.extend(std::iter::repeat(0.0).take(c));
    let mut yp = vec![0.0; c];
    yp.extend_from_slice(y);
    yp.extend(std::iter::repeat(0.0).take(c));
    let wc = kernel[[c, c]];
    let mut out = Array2::zeros((m, n));
    let mut k = 0;
    while k < m {
        let mut l = 0;
        while l < n {
            let mut h = 0.0;
            for t in 0..d {
                h += kernel[[c, t]] * xp[k + t] + kernel[[t, c]] * yp[l + t];
            }
            let cross = match cross_term {
                CrossTerm::Squared => wc * wc * x[k] * y[l],
                CrossTerm::Plain => wc * x[k] * y[l],
            };
            out[[k, l]] = h - wc * x[k] - wc * y[l] + cross;
            l += stride;
        }
        k += stride;
    }
    out
}

fn suite_scvc() -> SuiteResult {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let mut worst = 0.0f64;
    for _ in 0..400 {
        let d = *[1usize, 3, 5].choose(&mut rng).unwrap();
        let m = rng.gen_range(2..17);
        let n = rng.gen_range(2..17);
        let s = rng.gen_range(1..3);
        let ct = *[CrossTerm::Squared, CrossTerm::Plain].choose(&mut rng).unwrap();
        let x: Vec<f64> = (0..m).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let y: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let kernel = Array2::from_shape_fn((d, d), |_| rng.gen_range(-1.0..1.0));
        let fast = scvc(&x, &y, &kernel, s, ct).unwrap();
        let slow = scvc_transcription(&x, &y, &kernel, s, ct);
        let scale = slow.iter().fold(1.0f64, |mx, v| mx.max(v.abs()));
        for (a, b) in fast.iter().zip(slow.iter()) {
            worst = worst.max((a - b).abs() / scale);
        }
    }
    SuiteResult {
        name: "scvc-oracle",
        pass: worst <= 1e-10,
        detail: format!("max rel err {worst:.2e} over 400 instances"),
    }
}

fn suite_cross_only() -> SuiteResult {
    let mut rng = ChaCha8Rng::seed_from_u64(32);
    let mut pass = true;
    for _ in 0..50 {
        let d = 5;
        let x: Vec<f64> = (0..6).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let y: Vec<f64> = (0..6).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let kernel = Array2::from_shape_fn((d, d), |_| rng.gen_range(-1.0..1.0));
        let mut scrambled = kernel.clone();
        for r in 0..d {
            for c in 0..d {
                if r != d / 2 && c != d / 2 {
                    scrambled[[r, c]] = rng.gen_range(-9.0..9.0);
                }
            }
        }
        let a = scvc(&x, &y, &kernel, 1, CrossTerm::Squared).unwrap();
        let b = scvc(&x, &y, &scrambled, 1, CrossTerm::Squared).unwrap();
        pass &= a.iter().zip(b.iter()).all(|(u, v)| u.to_bits() == v.to_bits());
    }
    SuiteResult {
        name: "cross-only-dependence",
        pass,
        detail: "off-cross kernel entries never reach the output".into(),
    }
}

fn suite_ridge() -> SuiteResult {
    let mut rng = ChaCha8Rng::seed_from_u64(33);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let n = rng.gen_range(4..30);
        let mn = rng.gen_range(4..40);
        let f = Array2::from_shape_fn((n, mn), |_| rng.gen_range(-1.0..1.0));
        let t: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0)).collect();
        let c = 10f64.powf(rng.gen_range(-2.0..3.0));
        let beta = fit_ridge(&f, &t, c).unwrap();
        worst = worst.max(normal_equation_residual(&f, &t, &beta, c));
    }
    SuiteResult {
        name: "ridge-normal-equations",
        pass: worst <= 1e-8,
        detail: format!("max residual {worst:.2e} over 50 problems"),
    }
}

fn suite_welch() -> SuiteResult {
    let fs = 128.0;
    let cfg = WelchConfig::default();
    let mut pass = true;
    for f in [4.0f64, 6.25, 8.0, 11.75] {
        let tone: Vec<f64> = (0..2560)
            .map(|t| (2.0 * std::f64::consts::PI * f * t as f64 / fs).sin())
            .collect();
        let psd = welch_psd(&tone, fs, &cfg).unwrap();
        let argmax = psd
            .values
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .unwrap()
            .0;
        pass &= argmax == psd.bin_at(f) && (psd.freq_step - 0.25).abs() < 1e-15;
    }
    SuiteResult {
        name: "welch-peak-bins",
        pass,
        detail: "on-grid tones peak at their own bin, 0.25 Hz grid".into(),
    }
}

fn suite_end_to_end() -> SuiteResult {
    let nback = synthetic_database(DatabaseId::Nback, 5, 11, 1.2, 0.0);
    let stew = synthetic_database(DatabaseId::Stew, 5, 22, 1.2, 0.3);
    let eegmat = synthetic_database(DatabaseId::Eegmat, 5, 33, 1.2, 0.15);
    let data = CaseData {
        nback: &nback,
        stew: &stew,
        eegmat: &eegmat,
    };
    let base = TrainConfig::new(16, 1.0, 42);
    let grid = TuningGrid {
        channels: vec![16],
        regularizations: vec![1e-6, 1e-3, 1.0, 1e3],
    };
    let cfg = match tune_hyperparams(1, 1, &data, &grid, &base) {
        Ok(c) => c,
        Err(e) => {
            return SuiteResult {
                name: "end-to-end-synthetic",
                pass: false,
                detail: format!("tuning failed: {e}"),
            }
        }
    };
    match run_case(1, 1, &data, &cfg) {
        Ok(r) => SuiteResult {
            name: "end-to-end-synthetic",
            pass: r.mean_acc >= 0.9,
            detail: format!("cross-database accuracy {:.3}", r.mean_acc),
        },
        Err(e) => SuiteResult {
            name: "end-to-end-synthetic",
            pass: false,
            detail: format!("run failed: {e}"),
        },
    }
}

fn suite_bank_determinism() -> SuiteResult {
    let cfg = TrainConfig::new(4, 1.0, 42);
    let a = scvcnet::model::init_kernel_bank(&cfg, 16, 16);
    let b = scvcnet::model::init_kernel_bank(&cfg, 16, 16);
    let zero = KernelBank {
        weights: Array5::zeros((1, 1, 1, 1, 1)),
        biases: Array1::zeros(1),
        seed: 0,
        init_bound: 0.0,
    };
    SuiteResult {
        name: "seeded-determinism",
        pass: a == b && zero.shape() == (1, 1, 1, 1),
        detail: "identical seeds reproduce identical kernel banks".into(),
    }
}

pub fn run_all() -> Vec<SuiteResult> {
    vec![
        suite_scvc(),
        suite_cross_only(),
        suite_ridge(),
        suite_welch(),
        suite_bank_determinism(),
        suite_end_to_end(),
    ]
}

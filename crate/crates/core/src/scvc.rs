//! The sliding cross-vector convolution operator and the feedforward layers
//! built on it: inter-frequency-point fusion, sigmoid activation,
//! output-channel pooling, and flattening.

use ndarray::{Array1, Array2, Array3, Array5};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::EpochFeatures;

/// Which correction replaces the additive center contribution at the
/// crossing point (k, l).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum CrossTerm {
    /// h~ = h - wc*x_k - wc*y_l + wc^2 * x_k * y_l. The product of the two
    /// center-weighted values; the default.
    #[default]
    Squared,
    /// h~ = h - wc*x_k - wc*y_l + wc * x_k * y_l.
    Plain,
}

/// Random kernel tensor (c x p x q x d x d) with per-channel biases,
/// reproducible from its seed.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelBank {
    pub weights: Array5<f64>,
    pub biases: Array1<f64>,
    pub seed: u64,
    pub init_bound: f64,
}

impl KernelBank {
    pub fn channels(&self) -> usize {
        self.weights.shape()[0]
    }

    pub fn kernel_size(&self) -> usize {
        self.weights.shape()[4]
    }

    /// (c, p, q, d) of the bank.
    pub fn shape(&self) -> (usize, usize, usize, usize) {
        let s = self.weights.shape();
        (s[0], s[1], s[2], s[4])
    }

    /// Borrow the d x d kernel for (output channel k, frequency pair (i, j)).
    pub fn kernel(&self, k: usize, i: usize, j: usize) -> Array2<f64> {
        use ndarray::s;
        self.weights.slice(s![k, i, j, .., ..]).to_owned()
    }
}

fn check_kernel(d: usize, stride: usize) -> Result<()> {
    if d % 2 == 0 {
        return Err(Error::EvenKernel(d));
    }
    if stride == 0 {
        return Err(Error::BadStride);
    }
    Ok(())
}

/// Sliding cross-vector convolution of a theta vector `x` (length m) and an
/// alpha vector `y` (length n) with a d x d kernel.
///
/// Both vectors are zero-padded with floor(d/2) entries at each end. At every
/// output position (k, l) visited by the stride, the result is the inner
/// product of the kernel's central row with the x window centered at k, plus
/// the central column against the y window at l, with the additive center
/// contributions replaced by a multiplicative cross term. Skipped positions
/// stay zero; the output is always m x n.
pub fn scvc(
    x: &[f64],
    y: &[f64],
    kernel: &Array2<f64>,
    stride: usize,
    cross_term: CrossTerm,
) -> Result<Array2<f64>> {
    let d = kernel.nrows();
    if kernel.ncols() != d {
        return Err(Error::ShapeMismatch {
            expected: format!("{d}x{d} kernel"),
            actual: format!("{}x{}", kernel.nrows(), kernel.ncols()),
        });
    }
    check_kernel(d, stride)?;
    let (m, n) = (x.len(), y.len());
    let c = d / 2;
    let wc = kernel[[c, c]];

    // Row/column inner products against the padded windows. Only the central
    // row and column of the kernel ever touch the output.
    let window_dot = |v: &[f64], pos: usize, pick: &dyn Fn(usize) -> f64| -> f64 {
        let mut acc = 0.0;
        for t in 0..d {
            // Padded index pos + t maps to original index pos + t - c.
            let idx = pos + t;
            if idx >= c && idx - c < v.len() {
                acc += pick(t) * v[idx - c];
            }
        }
        acc
    };
    let row_at: Vec<f64> = (0..m)
        .map(|k| window_dot(x, k, &|t| kernel[[c, t]]))
        .collect();
    let col_at: Vec<f64> = (0..n)
        .map(|l| window_dot(y, l, &|t| kernel[[t, c]]))
        .collect();

    let mut out = Array2::zeros((m, n));
    let mut k = 0;
    while k < m {
        let mut l = 0;
        while l < n {
            let h = row_at[k] + col_at[l];
            let cross = match cross_term {
                CrossTerm::Squared => wc * wc * x[k] * y[l],
                CrossTerm::Plain => wc * x[k] * y[l],
            };
            out[[k, l]] = h - wc * x[k] - wc * y[l] + cross;
            l += stride;
        }
        k += stride;
    }
    Ok(out)
}

/// Fuse SCVC feature maps over all theta/alpha frequency-point pairs for each
/// output channel, adding the per-channel bias. X is p x m, Y is q x n; the
/// result is c x m x n. The (i-major, j-minor) summation order is fixed for
/// determinism.
pub fn ifpfi(
    x: &Array2<f64>,
    y: &Array2<f64>,
    bank: &KernelBank,
    stride: usize,
    cross_term: CrossTerm,
) -> Result<Array3<f64>> {
    let (c, p, q, d) = bank.shape();
    if x.nrows() != p || y.nrows() != q {
        return Err(Error::ShapeMismatch {
            expected: format!("X {}xm, Y {}xn for bank (c={c}, p={p}, q={q}, d={d})", p, q),
            actual: format!("X {:?}, Y {:?}", x.dim(), y.dim()),
        });
    }
    let (m, n) = (x.ncols(), y.ncols());
    let mut out = Array3::zeros((c, m, n));
    for k in 0..c {
        let mut channel = Array2::zeros((m, n));
        for i in 0..p {
            let xi: Vec<f64> = x.row(i).to_vec();
            for j in 0..q {
                let yj: Vec<f64> = y.row(j).to_vec();
                let kernel = bank.kernel(k, i, j);
                let map = scvc(&xi, &yj, &kernel, stride, cross_term)?;
                channel += &map;
            }
        }
        channel += bank.biases[k];
        out.index_axis_mut(ndarray::Axis(0), k).assign(&channel);
    }
    Ok(out)
}

/// Elementwise logistic sigmoid, saturation-safe.
pub fn activate(h: &Array3<f64>) -> Array3<f64> {
    h.mapv(sigmoid)
}

#[inline]
pub fn sigmoid(v: f64) -> f64 {
    if v >= 0.0 {
        1.0 / (1.0 + (-v).exp())
    } else {
        let e = v.exp();
        e / (1.0 + e)
    }
}

/// Arithmetic mean over the output-channel axis.
pub fn channel_pool(h: &Array3<f64>) -> Result<Array2<f64>> {
    let c = h.shape()[0];
    if c == 0 {
        return Err(Error::ShapeMismatch {
            expected: "c >= 1".into(),
            actual: "c = 0".into(),
        });
    }
    let (m, n) = (h.shape()[1], h.shape()[2]);
    let mut out = Array2::zeros((m, n));
    for k in 0..c {
        out += &h.index_axis(ndarray::Axis(0), k);
    }
    out /= c as f64;
    Ok(out)
}

/// Row-major linearization; feature (k, l) lands at position k*n + l.
pub fn flatten(z: &Array2<f64>) -> Array1<f64> {
    Array1::from_iter(z.iter().cloned())
}

/// Full feedforward map of one epoch: flatten(pool(sigmoid(ifpfi(X, Y)))).
/// Every entry lies in (0, 1).
pub fn forward(
    epoch: &EpochFeatures,
    bank: &KernelBank,
    stride: usize,
    cross_term: CrossTerm,
) -> Result<Array1<f64>> {
    let h = ifpfi(&epoch.x, &epoch.y, bank, stride, cross_term)?;
    Ok(flatten(&channel_pool(&activate(&h))?))
}

#[cfg(test)]
pub(crate) mod oracle {
    //! Literal transcriptions of the feedforward algorithms, kept separate
    //! from the optimized path so the two can be compared.
    use super::*;

    /// Line-by-line transcription of the SCVC feedforward: explicit padding,
    /// central-vector copy, and the double loop over output positions.
    pub fn scvc_reference(
        x: &[f64],
        y: &[f64],
        kernel: &Array2<f64>,
        stride: usize,
        cross_term: CrossTerm,
    ) -> Array2<f64> {
        let d = kernel.nrows();
        let c = d / 2;
        let (m, n) = (x.len(), y.len());
        let mut h_out = Array2::zeros((m, n));
        // Pad with floor(d/2) zeros at each end.
        let mut xp = vec![0.0; c];
        xp.extend_from_slice(x);
        xp.extend(std::iter::repeat(0.0).take(c));
        let mut yp = vec![0.0; c];
        yp.extend_from_slice(y);
        yp.extend(std::iter::repeat(0.0).take(c));
        // Copy the central row and column.
        let w_row: Vec<f64> = (0..d).map(|t| kernel[[c, t]]).collect();
        let w_col: Vec<f64> = (0..d).map(|t| kernel[[t, c]]).collect();
        let wc = kernel[[c, c]];
        // Padded indices run from c to c + m - 1 (0-based), stepping by stride.
        let mut k = c;
        while k < c + m {
            let mut l = c;
            while l < c + n {
                let mut h_row = 0.0;
                for t in 0..d {
                    h_row += w_row[t] * xp[k - c + t];
                }
                let mut h_col = 0.0;
                for t in 0..d {
                    h_col += w_col[t] * yp[l - c + t];
                }
                let mut h = h_row + h_col;
                let cross = match cross_term {
                    CrossTerm::Squared => wc * wc * xp[k] * yp[l],
                    CrossTerm::Plain => wc * xp[k] * yp[l],
                };
                h = h - wc * xp[k] - wc * yp[l] + cross;
                h_out[[k - c, l - c]] = h;
                l += stride;
            }
            k += stride;
        }
        h_out
    }

    /// Triple-loop transcription of the fusion step.
    pub fn ifpfi_reference(
        x: &Array2<f64>,
        y: &Array2<f64>,
        bank: &KernelBank,
        stride: usize,
        cross_term: CrossTerm,
    ) -> Array3<f64> {
        let (c, p, q, _) = bank.shape();
        let (m, n) = (x.ncols(), y.ncols());
        let mut out = Array3::zeros((c, m, n));
        for k in 0..c {
            for i in 0..p {
                for j in 0..q {
                    let map = scvc_reference(
                        &x.row(i).to_vec(),
                        &y.row(j).to_vec(),
                        &bank.kernel(k, i, j),
                        stride,
                        cross_term,
                    );
                    for a in 0..m {
                        for b in 0..n {
                            out[[k, a, b]] += map[[a, b]];
                        }
                    }
                }
            }
            for a in 0..m {
                for b in 0..n {
                    out[[k, a, b]] += bank.biases[k];
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn random_kernel(rng: &mut ChaCha8Rng, d: usize) -> Array2<f64> {
        Array2::from_shape_fn((d, d), |_| rng.gen_range(-1.0..1.0))
    }

    fn random_bank(rng: &mut ChaCha8Rng, c: usize, p: usize, q: usize, d: usize) -> KernelBank {
        KernelBank {
            weights: Array5::from_shape_fn((c, p, q, d, d), |_| rng.gen_range(-1.0..1.0)),
            biases: Array1::from_shape_fn(c, |_| rng.gen_range(-1.0..1.0)),
            seed: 0,
            init_bound: 1.0,
        }
    }

    #[test]
    fn d1_closed_form_example() {
        let kernel = ndarray::array![[2.0]];
        let out = scvc(&[1.0, 3.0], &[5.0, 7.0], &kernel, 1, CrossTerm::Squared).unwrap();
        assert_eq!(out, ndarray::array![[20.0, 28.0], [60.0, 84.0]]);
    }

    #[test]
    fn zero_kernel_gives_zero_map() {
        let kernel = Array2::zeros((3, 3));
        let out = scvc(&[1.0, 2.0, 3.0], &[4.0, 5.0], &kernel, 1, CrossTerm::Squared).unwrap();
        assert!(out.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn matches_reference_transcription() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for d in [1usize, 3, 5] {
            for mn in [2usize, 5, 10] {
                for stride in [1usize, 2] {
                    for ct in [CrossTerm::Squared, CrossTerm::Plain] {
                        let kernel = random_kernel(&mut rng, d);
                        let x: Vec<f64> = (0..mn).map(|_| rng.gen_range(-2.0..2.0)).collect();
                        let y: Vec<f64> = (0..mn).map(|_| rng.gen_range(-2.0..2.0)).collect();
                        let fast = scvc(&x, &y, &kernel, stride, ct).unwrap();
                        let slow = oracle::scvc_reference(&x, &y, &kernel, stride, ct);
                        for (a, b) in fast.iter().zip(slow.iter()) {
                            assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0));
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn even_kernel_and_zero_stride_error() {
        let kernel = Array2::zeros((2, 2));
        assert!(matches!(
            scvc(&[1.0], &[1.0], &kernel, 1, CrossTerm::Squared),
            Err(Error::EvenKernel(2))
        ));
        let kernel = Array2::zeros((3, 3));
        assert!(matches!(
            scvc(&[1.0], &[1.0], &kernel, 0, CrossTerm::Squared),
            Err(Error::BadStride)
        ));
    }

    #[test]
    fn only_central_cross_influences_output() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for d in [3usize, 5, 7] {
            let x: Vec<f64> = (0..6).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let y: Vec<f64> = (0..6).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let kernel = random_kernel(&mut rng, d);
            let base = scvc(&x, &y, &kernel, 1, CrossTerm::Squared).unwrap();
            let c = d / 2;
            let mut perturbed = kernel.clone();
            for a in 0..d {
                for b in 0..d {
                    if a != c && b != c {
                        perturbed[[a, b]] = rng.gen_range(-100.0..100.0);
                    }
                }
            }
            let out = scvc(&x, &y, &perturbed, 1, CrossTerm::Squared).unwrap();
            assert_eq!(base, out); // bitwise
        }
    }

    #[test]
    fn center_zero_additivity() {
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        let d = 5;
        let mut kernel = random_kernel(&mut rng, d);
        kernel[[2, 2]] = 0.0;
        let x: Vec<f64> = (0..7).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let y: Vec<f64> = (0..7).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let zeros = vec![0.0; 7];
        let both = scvc(&x, &y, &kernel, 1, CrossTerm::Squared).unwrap();
        let only_x = scvc(&x, &zeros, &kernel, 1, CrossTerm::Squared).unwrap();
        let only_y = scvc(&zeros, &y, &kernel, 1, CrossTerm::Squared).unwrap();
        let sum = &only_x + &only_y;
        for (a, b) in both.iter().zip(sum.iter()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn ifpfi_degenerate_is_single_scvc() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let bank = {
            let mut b = random_bank(&mut rng, 1, 1, 1, 3);
            b.biases[0] = 0.0;
            b
        };
        let x = Array2::from_shape_fn((1, 5), |_| rng.gen_range(-1.0..1.0));
        let y = Array2::from_shape_fn((1, 5), |_| rng.gen_range(-1.0..1.0));
        let fused = ifpfi(&x, &y, &bank, 1, CrossTerm::Squared).unwrap();
        let single = scvc(
            &x.row(0).to_vec(),
            &y.row(0).to_vec(),
            &bank.kernel(0, 0, 0),
            1,
            CrossTerm::Squared,
        )
        .unwrap();
        for a in 0..5 {
            for b in 0..5 {
                assert!((fused[[0, a, b]] - single[[a, b]]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn ifpfi_bias_only() {
        let bank = KernelBank {
            weights: Array5::zeros((1, 2, 2, 3, 3)),
            biases: ndarray::array![3.5],
            seed: 0,
            init_bound: 0.0,
        };
        let x = Array2::ones((2, 4));
        let y = Array2::ones((2, 4));
        let fused = ifpfi(&x, &y, &bank, 1, CrossTerm::Squared).unwrap();
        assert!(fused.iter().all(|v| (*v - 3.5).abs() < 1e-15));
    }

    #[test]
    fn ifpfi_matches_triple_loop_fig6_config() {
        let mut rng = ChaCha8Rng::seed_from_u64(37);
        let bank = random_bank(&mut rng, 2, 3, 3, 3);
        let x = Array2::from_shape_fn((3, 5), |_| rng.gen_range(-1.0..1.0));
        let y = Array2::from_shape_fn((3, 5), |_| rng.gen_range(-1.0..1.0));
        let fast = ifpfi(&x, &y, &bank, 1, CrossTerm::Squared).unwrap();
        let slow = oracle::ifpfi_reference(&x, &y, &bank, 1, CrossTerm::Squared);
        for (a, b) in fast.iter().zip(slow.iter()) {
            assert!((a - b).abs() <= 1e-10 * b.abs().max(1.0));
        }
    }

    #[test]
    fn ifpfi_shape_mismatch_reports_expectation() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let bank = random_bank(&mut rng, 1, 3, 3, 3);
        let x = Array2::zeros((4, 5));
        let y = Array2::zeros((3, 5));
        assert!(matches!(
            ifpfi(&x, &y, &bank, 1, CrossTerm::Squared),
            Err(Error::ShapeMismatch { .. })
        ));
    }

    #[test]
    fn sigmoid_basics() {
        assert_eq!(sigmoid(0.0), 0.5);
        for v in [-3.0, -0.5, 0.2, 7.0] {
            assert!((sigmoid(v) + sigmoid(-v) - 1.0).abs() < 1e-15);
        }
        assert_eq!(sigmoid(710.0), 1.0);
        // e^-710 is subnormal, not zero; just require it vanish.
        assert!(sigmoid(-710.0) < 1e-300);
        assert!(sigmoid(710.0).is_finite());
    }

    #[test]
    fn channel_pool_mean() {
        let mut h = Array3::zeros((2, 2, 2));
        h.index_axis_mut(ndarray::Axis(0), 0).fill(1.0);
        h.index_axis_mut(ndarray::Axis(0), 1).fill(3.0);
        let pooled = channel_pool(&h).unwrap();
        assert!(pooled.iter().all(|v| (*v - 2.0).abs() < 1e-15));
        // c = 1 is identity.
        let one = Array3::from_shape_fn((1, 2, 2), |(_, a, b)| (a * 2 + b) as f64);
        let pooled = channel_pool(&one).unwrap();
        assert_eq!(pooled, Array2::from_shape_fn((2, 2), |(a, b)| (a * 2 + b) as f64));
        assert!(channel_pool(&Array3::zeros((0, 2, 2))).is_err());
    }

    #[test]
    fn flatten_row_major() {
        let z = ndarray::array![[1.0, 2.0], [3.0, 4.0]];
        let f = flatten(&z);
        assert_eq!(f.to_vec(), vec![1.0, 2.0, 3.0, 4.0]);
        // (k, l) lands at k*n + l.
        assert_eq!(f[1 * 2 + 0], z[[1, 0]]);
    }

    #[test]
    fn forward_zero_inputs_give_half() {
        let bank = KernelBank {
            weights: Array5::zeros((2, 16, 16, 3, 3)),
            biases: Array1::zeros(2),
            seed: 0,
            init_bound: 0.0,
        };
        let ep = EpochFeatures {
            x: Array2::zeros((16, 10)),
            y: Array2::zeros((16, 10)),
            label: 0,
            participant_id: "p".into(),
            database_id: crate::types::DatabaseId::Stew,
            phase: "resting".into(),
            segment_index: 0,
        };
        let f = forward(&ep, &bank, 1, CrossTerm::Squared).unwrap();
        assert_eq!(f.len(), 100);
        assert!(f.iter().all(|v| (*v - 0.5).abs() < 1e-15));
    }
}

use serde::Serialize;

use crate::error::{Error, Result};
use crate::spectrum::tau::tau_unchecked;

/// Smallest block length for which the stable-subset guarantees are stated.
pub const MIN_N: usize = 27;

/// `1 / (8 ln 2)`, the upper end of the admissible `alpha` range.
pub fn alpha_max() -> f64 {
    1.0 / (8.0 * std::f64::consts::LN_2)
}

/// Constants of the stable-subset construction for given `n`, `|Y|`, `alpha`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StableParams {
    pub n: usize,
    pub ny: usize,
    pub alpha: f64,
    /// `n / log2 n - 1` before rounding.
    pub t_real: f64,
    pub t: u32,
    /// `2 n log2|Y| / t`, so that `t * lambda = 2 n log2|Y|`.
    pub lambda: f64,
    /// `tau_n(2^{-n alpha}, 2^{-n alpha})`.
    pub tau: f64,
    /// `tau + alpha + 7.19 |Y| log2(n) / n`.
    pub delta_tilde: f64,
    /// `delta_tilde + lambda / n`.
    pub delta: f64,
    /// `log2(n) / n`, the mass required of the chosen slice.
    pub slice_floor: f64,
    /// `(1/n) log2(n/8)`.
    pub mass_floor: f64,
    /// `2^{-n alpha}`.
    pub image_floor: f64,
    /// Whether `n` and `alpha` are inside the stated ranges.
    pub in_range: bool,
}

impl StableParams {
    /// Fails outside `n >= 27`, `log2(n)/n < alpha < 1/(8 ln 2)` unless `unsafe_ok`.
    pub fn new(n: usize, ny: usize, alpha: f64, unsafe_ok: bool) -> Result<Self> {
        if n < 2 || ny < 2 || !(alpha > 0.0) {
            return Err(Error::precondition(format!("need n >= 2, |Y| >= 2 and alpha > 0; got n={n}, |Y|={ny}, alpha={alpha}")));
        }
        let nf = n as f64;
        let log_n = nf.log2();
        let lo = log_n / nf;
        let hi = alpha_max();
        let mut in_range = true;
        if n < MIN_N {
            in_range = false;
            if !unsafe_ok {
                return Err(Error::precondition(format!("n must be >= {MIN_N}, got {n}")));
            }
        }
        if !(alpha > lo && alpha < hi) {
            in_range = false;
            if !unsafe_ok {
                return Err(Error::precondition(format!(
                    "alpha must lie in (log2(n)/n, 1/(8 ln 2)) = ({lo:.4}, {hi:.4}), got {alpha}"
                )));
            }
        }
        let log_y = (ny as f64).log2();
        let t_real = nf / log_n - 1.0;
        let t = (t_real.floor() as u32).max(1);
        let lambda = 2.0 * nf * log_y / t as f64;
        let floor = (-nf * alpha).exp2();
        let tau = tau_unchecked(n, floor, floor, ny).value;
        let delta_tilde = tau + alpha + 7.19 * ny as f64 * log_n / nf;
        Ok(StableParams {
            n,
            ny,
            alpha,
            t_real,
            t,
            lambda,
            tau,
            delta_tilde,
            delta: delta_tilde + lambda / nf,
            slice_floor: lo,
            mass_floor: (nf / 8.0).log2() / nf,
            image_floor: floor,
            in_range,
        })
    }

    pub fn table(&self) -> Vec<(String, f64)> {
        vec![
            ("n".into(), self.n as f64),
            ("alpha".into(), self.alpha),
            ("t".into(), self.t as f64),
            ("lambda".into(), self.lambda),
            ("tau".into(), self.tau),
            ("delta_tilde".into(), self.delta_tilde),
            ("delta".into(), self.delta),
            ("mass_floor".into(), self.mass_floor),
        ]
    }
}

/// `eps_n = n^{-1/(|X||Y|+1)}`.
pub fn eps_n(n: usize, nx: usize, ny: usize) -> f64 {
    (n as f64).powf(-1.0 / ((nx * ny) as f64 + 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_n_rejected() {
        let e = StableParams::new(20, 2, 0.15, false).unwrap_err();
        assert!(e.to_string().contains("27"));
        assert!(StableParams::new(20, 2, 0.15, true).is_ok());
    }

    #[test]
    fn alpha_range_cites_limit() {
        let e = StableParams::new(50, 2, 0.5, false).unwrap_err().to_string();
        assert!(e.contains("0.1803"), "{e}");
    }

    #[test]
    fn catch_all_threshold() {
        for n in [27, 50, 64, 200, 1000] {
            let p = StableParams::new(n, 3, 0.178, false).unwrap();
            assert!((p.t as f64 * p.lambda - 2.0 * n as f64 * 3f64.log2()).abs() < 1e-9);
            assert!(1.0 / (p.t as f64 + 1.0) >= p.slice_floor);
        }
    }

    #[test]
    fn n50_values() {
        let p = StableParams::new(50, 2, 0.15, false).unwrap();
        assert_eq!(p.t, 7);
        assert!((p.mass_floor - 0.052877123795494).abs() < 1e-12);
    }
}

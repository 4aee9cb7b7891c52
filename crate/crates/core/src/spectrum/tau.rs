use serde::Serialize;

use crate::error::{Error, Result};
use crate::prob::binary_entropy;

/// `tau_n(alpha, beta) = H2(q) + q log2|Y|` with
/// `q = (sqrt(-ln beta) + sqrt(-ln alpha)) / sqrt(2n)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TauBound {
    pub q: f64,
    /// `+∞` when saturated.
    pub value: f64,
    /// `q >= 1`: the closed form no longer applies and the bound is vacuous.
    pub saturated: bool,
}

pub fn tau_bound(n: usize, alpha: f64, beta: f64, ny: usize) -> Result<TauBound> {
    if n == 0 || !(alpha > 0.0 && alpha < 1.0) || !(beta > 0.0 && beta <= 1.0 - alpha) {
        return Err(Error::precondition(format!("tau needs n >= 1, alpha in (0,1), beta in (0, 1-alpha]; got n={n}, alpha={alpha}, beta={beta}")));
    }
    let q = ((-beta.ln()).sqrt() + (-alpha.ln()).sqrt()) / (2.0 * n as f64).sqrt();
    if q >= 1.0 {
        return Ok(TauBound { q, value: f64::INFINITY, saturated: true });
    }
    Ok(TauBound { q, value: binary_entropy(q) + q * (ny as f64).log2(), saturated: false })
}

/// The same expression without the domain check on `beta`, for arguments
/// that only need `alpha, beta in (0, 1)`.
pub(crate) fn tau_unchecked(n: usize, alpha: f64, beta: f64, ny: usize) -> TauBound {
    let q = ((-beta.ln()).sqrt() + (-alpha.ln()).sqrt()) / (2.0 * n as f64).sqrt();
    if q >= 1.0 {
        TauBound { q, value: f64::INFINITY, saturated: true }
    } else {
        TauBound { q, value: binary_entropy(q) + q * (ny as f64).log2(), saturated: false }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn tends_to_zero_near_one() {
        let t = tau_unchecked(100, 1.0 - 1e-9, 1.0 - 1e-9, 2);
        assert!(t.value < 1e-3);
        let far = tau_bound(100, 0.5, 0.5, 2).unwrap();
        assert!(far.value > t.value);
    }

    #[test]
    fn saturates_for_small_n() {
        let t = tau_bound(1, 0.01, 0.01, 2).unwrap();
        assert!(t.saturated && t.value.is_infinite());
    }

    #[test]
    fn domain_errors() {
        assert!(tau_bound(10, 0.6, 0.5, 2).is_err());
        assert!(tau_bound(0, 0.1, 0.1, 2).is_err());
    }

    proptest! {
        // The closed form increases in q below |Y|/(|Y|+1), so it shrinks as n grows there.
        #[test]
        fn nonincreasing_in_n(a in 0.01f64..0.99, frac in 0.01f64..1.0, n in 1usize..500, ny in 2usize..6) {
            let b = frac * (1.0 - a);
            let t1 = tau_bound(n, a, b, ny).unwrap();
            let t2 = tau_bound(n + 1, a, b, ny).unwrap();
            prop_assume!(t1.q <= ny as f64 / (ny as f64 + 1.0));
            prop_assert!(t2.value <= t1.value + 1e-12);
        }
    }
}

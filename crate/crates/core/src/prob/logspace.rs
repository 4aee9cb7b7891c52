//! Base-2 log-domain arithmetic for sequence-space probabilities.

/// `log2(2^a + 2^b)`.
pub fn add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp2().ln_1p() / std::f64::consts::LN_2
}

/// `log2 sum 2^{v_i}`; `-∞` on an empty input.
pub fn sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let v: Vec<f64> = values.into_iter().collect();
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    if m == f64::INFINITY {
        return m;
    }
    m + v.iter().map(|x| (x - m).exp2()).sum::<f64>().log2()
}

/// `log2(2^a - 2^b)` for `a >= b`; `-∞` when equal.
pub fn sub(a: f64, b: f64) -> f64 {
    if b == f64::NEG_INFINITY {
        return a;
    }
    if b >= a {
        return f64::NEG_INFINITY;
    }
    a + (-(b - a).exp2()).ln_1p() / std::f64::consts::LN_2
}

/// Table of `log2 k!` for `k <= n`.
#[derive(Clone, Debug)]
pub struct LogFactorials {
    table: Vec<f64>,
}

impl LogFactorials {
    pub fn new(n: usize) -> Self {
        let mut table = Vec::with_capacity(n + 1);
        let mut acc = 0.0;
        table.push(0.0);
        for k in 1..=n {
            acc += (k as f64).log2();
            table.push(acc);
        }
        LogFactorials { table }
    }

    pub fn get(&self, k: usize) -> f64 {
        self.table[k]
    }

    /// `log2` of the multinomial coefficient `n! / prod c_i!`.
    pub fn multinomial(&self, counts: &[u32]) -> f64 {
        let n: u32 = counts.iter().sum();
        self.table[n as usize] - counts.iter().map(|&c| self.table[c as usize]).sum::<f64>()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn add_and_sum_agree() {
        let v = [-3.0, -1.5, -10.0];
        let direct: f64 = v.iter().map(|x: &f64| x.exp2()).sum::<f64>().log2();
        assert!((sum(v) - direct).abs() < 1e-14);
        assert!((add(add(v[0], v[1]), v[2]) - direct).abs() < 1e-14);
        assert_eq!(sum(std::iter::empty()), f64::NEG_INFINITY);
    }

    #[test]
    fn sub_inverts_add() {
        let s = add(-2.0, -5.0);
        assert!((sub(s, -5.0) + 2.0).abs() < 1e-13);
    }

    #[test]
    fn multinomial_small() {
        let f = LogFactorials::new(10);
        assert!((f.multinomial(&[2, 2]) - 6f64.log2()).abs() < 1e-13);
        assert!((f.multinomial(&[3, 0, 1]) - 2.0).abs() < 1e-13);
    }
}

use std::collections::HashMap;

use serde::Serialize;

use super::tau::tau_bound;
use crate::error::{Error, Result};
use crate::prob::Channel;
use crate::types::{Caps, SequenceSpace};

/// Largest output space searched exactly.
pub const MAX_OUTPUTS: usize = 1024;
/// Largest input set searched exactly.
pub const MAX_INPUTS: usize = 16;
const MASS_TOL: f64 = 1e-12;
const LP_TOL: f64 = 1e-6;
const MIP_TIME_LIMIT: f64 = 120.0;


/// A minimum `eta`-image of an input set.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ImageResult {
    pub card: usize,
    /// Output sequence indices, base-`|Y|` with the first letter most significant.
    pub members: Vec<usize>,
    pub greedy_card: usize,
    pub nodes: u64,
}

struct Group {
    w: Vec<f64>,
    size: usize,
    members: Vec<usize>,
}

/// Exact `g(A, eta)`: the fewest output sequences `B` with `w^n(B|x) >= eta`
/// for every `x` in `A`, as an integer program over groups of outputs with
/// equal profiles, solved to proven optimality by HiGHS.
pub fn min_image_bruteforce(a: &[Vec<u32>], w: &Channel, n: usize, eta: f64, caps: &Caps) -> Result<ImageResult> {
    let outputs = (w.outputs() as f64).powi(n as i32);
    if outputs > MAX_OUTPUTS as f64 {
        return Err(Error::cap("output sequences for exact image", outputs, MAX_OUTPUTS as f64));
    }
    if a.is_empty() || a.len() > MAX_INPUTS {
        return Err(Error::cap("input set size for exact image", a.len() as f64, MAX_INPUTS as f64));
    }
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(Error::precondition(format!("image mass {eta} not in (0, 1]")));
    }
    let ys = SequenceSpace::all_sequences(n, w.outputs(), caps)?;
    for x in a {
        if x.len() != n || x.iter().any(|&s| s as usize >= w.inputs()) {
            return Err(Error::precondition(format!("input sequence {x:?} does not match the channel")));
        }
    }
    let target = eta - MASS_TOL;

    // Outputs with equal symbol counts inside every column class of `A` share a profile.
    let mut col_class: HashMap<Vec<u32>, usize> = HashMap::new();
    let cols: Vec<usize> = (0..n)
        .map(|i| {
            let c: Vec<u32> = a.iter().map(|x| x[i]).collect();
            let next = col_class.len();
            *col_class.entry(c).or_insert(next)
        })
        .collect();
    let ny = w.outputs();
    let mut index: HashMap<Vec<u32>, usize> = HashMap::new();
    let mut groups: Vec<Group> = Vec::new();
    for (yi, y) in ys.classes().iter().enumerate() {
        let mut key = vec![0u32; col_class.len() * ny];
        for (i, &s) in y.label.iter().enumerate() {
            key[cols[i] * ny + s as usize] += 1;
        }
        let g = match index.get(&key) {
            Some(&g) => g,
            None => {
                let yv: Vec<usize> = y.label.iter().map(|&v| v as usize).collect();
                let prof: Vec<f64> = a
                    .iter()
                    .map(|x| {
                        let xs: Vec<usize> = x.iter().map(|&v| v as usize).collect();
                        w.n_fold_log_prob(&xs, &yv).exp2()
                    })
                    .collect();
                groups.push(Group { w: prof, size: 0, members: Vec::new() });
                index.insert(key, groups.len() - 1);
                groups.len() - 1
            }
        };
        groups[g].size += 1;
        groups[g].members.push(yi);
    }
    groups.retain(|g| g.w.iter().any(|p| *p > 0.0));

    let greedy = greedy_cover(&groups, target);
    let greedy_card: usize = greedy.iter().sum();
    let (mut counts, nodes) = solve_mip(&groups, target)?;
    if !covers(&groups, target, &counts) {
        // Solver tolerance left a hair of deficit; the greedy fix can only add.
        repair(&groups, target, &mut counts);
        if !covers(&groups, target, &counts) {
            return Err(Error::precondition("image cover could not be completed".to_string()));
        }
    }
    if counts.iter().sum::<usize>() > greedy_card {
        counts = greedy;
    }
    let mut members: Vec<usize> = counts.iter().zip(&groups).flat_map(|(&c, g)| g.members[..c].iter().copied()).collect();
    members.sort_unstable();
    Ok(ImageResult { card: members.len(), members, greedy_card, nodes })
}

struct Highs(*mut std::ffi::c_void);

impl Drop for Highs {
    fn drop(&mut self) {
        // SAFETY: created by `Highs_create` and dropped once.
        unsafe { highs_sys::Highs_destroy(self.0) }
    }
}

impl Highs {
    fn new() -> Self {
        // SAFETY: plain constructor.
        Highs(unsafe { highs_sys::Highs_create() })
    }

    fn set_f64(&self, name: &str, v: f64) {
        let c = std::ffi::CString::new(name).expect("option name");
        // SAFETY: valid instance and NUL-terminated name.
        unsafe { highs_sys::Highs_setDoubleOptionValue(self.0, c.as_ptr(), v) };
    }

    fn set_int(&self, name: &str, v: i32) {
        let c = std::ffi::CString::new(name).expect("option name");
        // SAFETY: as above.
        unsafe { highs_sys::Highs_setIntOptionValue(self.0, c.as_ptr(), v as highs_sys::HighsInt) };
    }

    fn set_bool(&self, name: &str, v: bool) {
        let c = std::ffi::CString::new(name).expect("option name");
        // SAFETY: as above.
        unsafe { highs_sys::Highs_setBoolOptionValue(self.0, c.as_ptr(), v as highs_sys::HighsInt) };
    }
}

/// Exact integer program `min sum c_g` s.t. `sum_g c_g w_g(x) >= target`,
/// `c_g in {0..size_g}`. Returns the counts and the branch-and-bound node count.
fn solve_mip(groups: &[Group], target: f64) -> Result<(Vec<usize>, u64)> {
    use highs_sys::HighsInt;
    let k = groups.first().map_or(0, |g| g.w.len());
    let ncol = groups.len();
    let cost = vec![1.0; ncol];
    let lower = vec![0.0; ncol];
    let upper: Vec<f64> = groups.iter().map(|g| g.size as f64).collect();
    let row_lo = vec![1.0; k];
    let row_hi = vec![f64::INFINITY; k];
    let mut start: Vec<HighsInt> = Vec::with_capacity(ncol + 1);
    let mut index: Vec<HighsInt> = Vec::new();
    let mut value: Vec<f64> = Vec::new();
    for g in groups {
        start.push(index.len() as HighsInt);
        for (x, &w) in g.w.iter().enumerate() {
            if w > 0.0 {
                index.push(x as HighsInt);
                value.push(w / target);
            }
        }
    }
    start.push(index.len() as HighsInt);
    let integrality = vec![highs_sys::VAR_TYPE_INTEGER; ncol];
    let h = Highs::new();
    h.set_bool("output_flag", false);
    h.set_int("threads", 1);
    h.set_int("random_seed", 0);
    h.set_f64("mip_rel_gap", 0.0);
    h.set_f64("mip_abs_gap", LP_TOL);
    h.set_f64("mip_feasibility_tolerance", 1e-9);
    h.set_f64("primal_feasibility_tolerance", 1e-9);
    h.set_f64("time_limit", MIP_TIME_LIMIT);
    // SAFETY: all arrays have the lengths the column-wise format requires.
    let status = unsafe {
        highs_sys::Highs_passMip(
            h.0,
            ncol as HighsInt,
            k as HighsInt,
            index.len() as HighsInt,
            highs_sys::MATRIX_FORMAT_COLUMN_WISE,
            highs_sys::OBJECTIVE_SENSE_MINIMIZE,
            0.0,
            cost.as_ptr(),
            lower.as_ptr(),
            upper.as_ptr(),
            row_lo.as_ptr(),
            row_hi.as_ptr(),
            start.as_ptr(),
            index.as_ptr(),
            value.as_ptr(),
            integrality.as_ptr(),
        )
    };
    if status == highs_sys::STATUS_ERROR {
        return Err(Error::precondition("image program rejected by the solver".to_string()));
    }
    // SAFETY: valid instance.
    unsafe { highs_sys::Highs_run(h.0) };
    // SAFETY: valid instance.
    let model = unsafe { highs_sys::Highs_getModelStatus(h.0) };
    if model == highs_sys::MODEL_STATUS_REACHED_TIME_LIMIT {
        return Err(Error::cap("image solver seconds", MIP_TIME_LIMIT, MIP_TIME_LIMIT));
    }
    if model != highs_sys::MODEL_STATUS_OPTIMAL {
        return Err(Error::precondition(format!("image program ended with solver status {model}")));
    }
    let mut col = vec![0.0; ncol];
    let mut nodes: i64 = 0;
    let name = std::ffi::CString::new("mip_node_count").expect("info name");
    // SAFETY: `col` has one slot per column; null pointers skip the other outputs.
    unsafe {
        highs_sys::Highs_getSolution(h.0, col.as_mut_ptr(), std::ptr::null_mut(), std::ptr::null_mut(), std::ptr::null_mut());
        highs_sys::Highs_getInt64InfoValue(h.0, name.as_ptr(), &mut nodes);
    }
    let counts = col.iter().zip(groups).map(|(v, g)| (v.round().max(0.0) as usize).min(g.size)).collect();
    Ok((counts, nodes.max(0) as u64))
}

fn covers(groups: &[Group], target: f64, counts: &[usize]) -> bool {
    let k = groups.first().map_or(0, |g| g.w.len());
    (0..k).all(|x| groups.iter().zip(counts).map(|(g, &c)| c as f64 * g.w[x]).sum::<f64>() >= target)
}

/// Adds outputs greedily until every input is covered; absorbs LP rounding.
fn repair(groups: &[Group], target: f64, counts: &mut [usize]) {
    let k = groups.first().map_or(0, |g| g.w.len());
    let mut d: Vec<f64> = (0..k).map(|x| target - groups.iter().zip(counts.iter()).map(|(g, &c)| c as f64 * g.w[x]).sum::<f64>()).collect();
    while d.iter().any(|v| *v > 0.0) {
        let pick = (0..groups.len())
            .filter(|&g| counts[g] < groups[g].size)
            .map(|g| (g, groups[g].w.iter().zip(&d).map(|(w, dx)| w.min(dx.max(0.0))).sum::<f64>()))
            .filter(|(_, gain)| *gain > 0.0)
            .max_by(|a, b| a.1.total_cmp(&b.1).then(b.0.cmp(&a.0)));
        let Some((g, _)) = pick else { return };
        counts[g] += 1;
        for (dx, w) in d.iter_mut().zip(&groups[g].w) {
            *dx -= w;
        }
    }
}

fn greedy_cover(groups: &[Group], target: f64) -> Vec<usize> {
    let k = groups.first().map_or(0, |g| g.w.len());
    let mut d = vec![target; k];
    let mut counts = vec![0usize; groups.len()];
    while d.iter().any(|v| *v > 0.0) {
        let mut best = None;
        let mut best_gain = 0.0;
        for (g, grp) in groups.iter().enumerate() {
            if counts[g] == grp.size {
                continue;
            }
            let gain: f64 = grp.w.iter().zip(&d).map(|(w, dx)| w.min(dx.max(0.0))).sum();
            if gain > best_gain {
                best_gain = gain;
                best = Some(g);
            }
        }
        let Some(g) = best else { break };
        counts[g] += 1;
        for (dx, w) in d.iter_mut().zip(&groups[g].w) {
            *dx -= w;
        }
    }
    for g in (0..groups.len()).rev() {
        while counts[g] > 0 {
            let ok = d.iter().zip(&groups[g].w).all(|(dx, w)| dx + w <= 0.0);
            if !ok {
                break;
            }
            counts[g] -= 1;
            for (dx, w) in d.iter_mut().zip(&groups[g].w) {
                *dx += w;
            }
        }
    }
    counts
}

/// Checks `0 <= (1/n) log2(g(A, 1-beta) / g(A, alpha)) <= tau_n(alpha, beta)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ImageRatioReport {
    pub g_high: usize,
    pub g_low: usize,
    pub ratio: f64,
    pub tau: f64,
    pub tau_saturated: bool,
    pub lower_holds: bool,
    pub upper_holds: bool,
}

pub fn image_ratio_check(a: &[Vec<u32>], w: &Channel, n: usize, alpha: f64, beta: f64, caps: &Caps) -> Result<ImageRatioReport> {
    let tau = tau_bound(n, alpha, beta, w.outputs())?;
    let hi = min_image_bruteforce(a, w, n, 1.0 - beta, caps)?;
    let lo = min_image_bruteforce(a, w, n, alpha, caps)?;
    let ratio = ((hi.card as f64).log2() - (lo.card as f64).log2()) / n as f64;
    Ok(ImageRatioReport {
        g_high: hi.card,
        g_low: lo.card,
        ratio,
        tau: tau.value,
        tau_saturated: tau.saturated,
        lower_holds: ratio >= 0.0,
        upper_holds: ratio <= tau.value + 1e-12,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    // Exhaustive search over all subsets of outputs.
    fn oracle(a: &[Vec<u32>], w: &Channel, n: usize, eta: f64) -> usize {
        let ys = SequenceSpace::all_sequences(n, w.outputs(), &Caps::default()).unwrap();
        let m = ys.len();
        let probs: Vec<Vec<f64>> = a
            .iter()
            .map(|x| {
                let xs: Vec<usize> = x.iter().map(|&v| v as usize).collect();
                ys.classes().iter().map(|y| w.n_fold_log_prob(&xs, &y.label.iter().map(|&v| v as usize).collect::<Vec<_>>()).exp2()).collect()
            })
            .collect();
        let mut best = m;
        for mask in 0u32..(1 << m) {
            let c = mask.count_ones() as usize;
            if c >= best {
                continue;
            }
            let ok = probs.iter().all(|row| (0..m).filter(|i| mask >> i & 1 == 1).map(|i| row[i]).sum::<f64>() >= eta - MASS_TOL);
            if ok {
                best = c;
            }
        }
        best
    }

    #[test]
    fn matches_subset_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..60 {
            let n = rng.gen_range(1..=4);
            let w = Channel::random(&mut rng, 2, 2, 1.0);
            let k = rng.gen_range(1..=3);
            let a: Vec<Vec<u32>> = (0..k).map(|_| (0..n).map(|_| rng.gen_range(0..2)).collect()).collect();
            let eta = rng.gen_range(0.05..1.0);
            let r = min_image_bruteforce(&a, &w, n, eta, &Caps::default()).unwrap();
            assert_eq!(r.card, oracle(&a, &w, n, eta), "n={n} a={a:?} eta={eta}");
            assert!(r.card <= r.greedy_card);
        }
    }

    #[test]
    fn noiseless_single_input() {
        let w = Channel::identity(2).unwrap();
        let r = min_image_bruteforce(&[vec![0, 1, 1]], &w, 3, 0.9, &Caps::default()).unwrap();
        assert_eq!(r.card, 1);
        assert_eq!(r.members, vec![3]);
    }

    #[test]
    fn caps_enforced() {
        let w = Channel::bsc(0.1).unwrap();
        assert!(matches!(min_image_bruteforce(&[vec![0; 11]], &w, 11, 0.5, &Caps::default()), Err(Error::ResourceCap { .. })));
    }
}

use serde::Serialize;

use super::constants::StableParams;
use crate::error::{Error, Result};
use crate::prob::logspace;
use crate::spectrum::{Slicing, SpectrumSource, LOG_SLACK};
use crate::types::ChannelModel;

/// The stable subset `A† = A⁺ \ A⁻` of an input law, as a union of input classes.
#[derive(Clone, Debug, Serialize)]
pub struct StableSubset {
    pub params: StableParams,
    /// Mass of every output slice `0..=t` under the induced output law.
    pub slice_masses: Vec<f64>,
    pub s_star: u32,
    /// `floor(s* - n delta_tilde / lambda)`; negative means `A⁻` is empty.
    pub s_minus: i64,
    /// `s* lambda`.
    pub r: f64,
    pub plus: Vec<bool>,
    pub minus: Vec<bool>,
    pub members: Vec<bool>,
    /// `p_X(A†)`.
    pub mass: f64,
    pub mass_ok: bool,
    /// `Pr(|h(Y|U) - r| > n delta + h(u) | u)` for `U = 1{X in A†}`, `u = 1`.
    pub deviation: f64,
    /// `3 * 2^{-n alpha}`.
    pub deviation_bound: f64,
    pub deviation_ok: bool,
    /// Outputs where `h(y|u) < h(y) + log2 p_U(u)` beyond rounding slack.
    pub pointwise_violations: usize,
}

impl StableSubset {
    pub fn is_empty(&self) -> bool {
        !self.members.iter().any(|&b| b)
    }

    pub fn member_count(&self) -> usize {
        self.members.iter().filter(|&&b| b).count()
    }
}

/// Builds `A†` for the input law `x_log2` (`log2 p(x-class)`) through `model`.
///
/// `s*` is the smallest slice below the catch-all with mass at least
/// `log2(n)/n`; `A⁺` and `A⁻` collect the inputs that put at least
/// `2^{-n alpha}` on the slices up to `s*` and `s⁻`.
pub fn build_stable_subset(model: &ChannelModel, x_log2: &[f64], params: &StableParams) -> Result<StableSubset> {
    let y = model.y();
    if x_log2.len() != model.x_len() {
        return Err(Error::precondition("input law does not match the channel model"));
    }
    let total = logspace::sum(x_log2.iter().copied());
    if !(total.abs() < 1e-9) {
        return Err(Error::InvalidDistribution(format!("input law has total log-mass {total}")));
    }
    if y.n() != params.n || model.channel().outputs() != params.ny {
        return Err(Error::precondition("stable-subset constants do not match the channel model"));
    }
    let y_log2 = model.output_log(x_log2);
    let source = SpectrumSource::from_classes(&y_log2, y);
    let slicing = Slicing::build(&source, params.lambda, params.t)?;
    let slice_masses: Vec<f64> = slicing.slices().iter().map(|s| s.mass).collect();
    let s_star = (0..params.t)
        .find(|&s| slice_masses[s as usize] >= params.slice_floor * (1.0 - 1e-12))
        .ok_or_else(|| Error::precondition("no slice below the catch-all carries log2(n)/n of the output mass"))?;
    let nf = params.n as f64;
    let s_minus = (s_star as f64 - nf * params.delta_tilde / params.lambda).floor() as i64;
    let upto = |s: i64| -> Vec<bool> { slicing.assignment().iter().map(|a| a.is_some_and(|v| (v as i64) <= s)).collect() };
    let b_plus = upto(s_star as i64);
    let b_minus = upto(s_minus);
    let nxc = x_log2.len();
    let mut plus = vec![false; nxc];
    let mut minus = vec![false; nxc];
    for xc in 0..nxc {
        if x_log2[xc] == f64::NEG_INFINITY {
            continue;
        }
        plus[xc] = model.event_prob(xc, &b_plus) >= params.image_floor;
        minus[xc] = s_minus >= 0 && model.event_prob(xc, &b_minus) >= params.image_floor;
    }
    let members: Vec<bool> = plus.iter().zip(&minus).map(|(&p, &m)| p && !m).collect();
    let log_mass = logspace::sum(x_log2.iter().zip(&members).filter(|(_, &b)| b).map(|(l, _)| *l));
    let mass = log_mass.exp2();
    let r = s_star as f64 * params.lambda;
    let deviation_bound = 3.0 * params.image_floor;
    let (deviation, pointwise_violations) = if log_mass == f64::NEG_INFINITY {
        (0.0, 0)
    } else {
        let cond: Vec<f64> =
            x_log2.iter().zip(&members).map(|(&l, &b)| if b { l - log_mass } else { f64::NEG_INFINITY }).collect();
        let y_cond = model.output_log(&cond);
        let h_u = -log_mass;
        let radius = nf * params.delta + h_u;
        let mut dev = 0.0;
        let mut bad = 0;
        for (yc, &l) in y_cond.iter().enumerate() {
            if l == f64::NEG_INFINITY {
                continue;
            }
            let size = y.log2_size(yc);
            let h = size - l;
            if (h - r).abs() > radius {
                dev += l.exp2();
            }
            let h_y = size - y_log2[yc];
            if h < h_y + log_mass - LOG_SLACK {
                bad += 1;
            }
        }
        (dev, bad)
    };
    Ok(StableSubset {
        params: params.clone(),
        slice_masses,
        s_star,
        s_minus,
        r,
        plus,
        minus,
        mass_ok: mass >= params.mass_floor,
        members,
        mass,
        deviation,
        deviation_bound,
        deviation_ok: deviation < deviation_bound,
        pointwise_violations,
    })
}

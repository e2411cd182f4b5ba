//! Loss terms over predicted edge fields and their exact gradients.
//!
//! Every loss returns its value and `dL/dp` laid out as an [`EdgeField`]
//! (x channel, y channel), so gradients add entry-wise.

use crate::error::{Error, Result};
use crate::mst_cbpt::{build_cbpt, edge_weights, Direction};
use crate::region_graph::{node_to_edge_labels, EdgeField, RegionMask};
use crate::scalar::Scalar;

/// Probability clamp used inside the logarithms of the BCE term.
pub const BCE_EPS: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq)]
pub struct LossOutput<T> {
    pub value: T,
    pub grad: EdgeField<T>,
}

/// Values of the three terms and their sum.
#[derive(Debug, Clone, PartialEq)]
pub struct LossBreakdown<T> {
    pub bce: LossOutput<T>,
    pub dice: LossOutput<T>,
    pub conn: LossOutput<T>,
    pub total: LossOutput<T>,
}

fn check_binary<T: Scalar>(truth: &EdgeField<T>) -> Result<()> {
    for (index, v) in truth.px().iter().chain(truth.py()).enumerate() {
        if *v != T::zero() && *v != T::one() {
            return Err(Error::NonBinaryTruth {
                index,
                value: v.as_f64(),
            });
        }
    }
    Ok(())
}

/// Summed binary cross entropy over both channels.
///
/// `p` is clamped to `[eps, 1 - eps]`; the gradient is zero wherever the clamp is active.
pub fn bce_xy<T: Scalar>(truth: &EdgeField<T>, pred: &EdgeField<T>) -> Result<LossOutput<T>> {
    truth.check_dims(pred.dims())?;
    check_binary(truth)?;
    let eps = T::lit(BCE_EPS);
    let (lo, hi) = (eps, T::one() - eps);
    let mut value = T::zero();
    let mut grad = EdgeField::zeros(pred.width(), pred.height());

    let channels = [
        (truth.px(), pred.px(), Direction::X),
        (truth.py(), pred.py(), Direction::Y),
    ];
    for (t, p, dir) in channels {
        for (k, (&target, &raw)) in t.iter().zip(p).enumerate() {
            let q = raw.max(lo).min(hi);
            value = value - (target * q.ln() + (T::one() - target) * (T::one() - q).ln());
            if raw > lo && raw < hi {
                let g = -(target / q - (T::one() - target) / (T::one() - q));
                channel_mut(&mut grad, dir)[k] = g;
            }
        }
    }
    Ok(LossOutput { value, grad })
}

/// Dice loss with one pooled quotient over both channels:
/// `1 - 2 (I_x + I_y) / (C_x + C_y)`, `I = sum P p`, `C = sum p^2 + sum P^2`.
pub fn dice_xy<T: Scalar>(truth: &EdgeField<T>, pred: &EdgeField<T>) -> Result<LossOutput<T>> {
    truth.check_dims(pred.dims())?;
    let two = T::lit(2.0);
    let mut intersection = T::zero();
    let mut denom = T::zero();
    for (t, p) in [(truth.px(), pred.px()), (truth.py(), pred.py())] {
        for (&target, &q) in t.iter().zip(p) {
            intersection = intersection + target * q;
            denom = denom + q * q + target * target;
        }
    }
    if denom == T::zero() {
        return Err(Error::DegenerateDenominator);
    }
    let value = T::one() - two * intersection / denom;
    let d2 = denom * denom;
    let mut grad = EdgeField::zeros(pred.width(), pred.height());
    for dir in [Direction::X, Direction::Y] {
        let (t, p) = (channel(truth, dir), channel(pred, dir));
        let g: Vec<T> = t
            .iter()
            .zip(p)
            .map(|(&target, &q)| -(two * target * denom - two * intersection * (two * q)) / d2)
            .collect();
        channel_mut(&mut grad, dir).copy_from_slice(&g);
    }
    Ok(LossOutput { value, grad })
}

/// Normalised maximin connectivity loss,
/// `sum w(e) (1 - p(e))^2 / sum w(e)` over promising spanning-forest edges of `pred`.
///
/// The spanning forest and the weights are held fixed when differentiating, so the
/// gradient is exact wherever no two edge probabilities tie.
pub fn connectivity_loss<T: Scalar>(
    truth_region: &RegionMask,
    pred: &EdgeField<T>,
) -> Result<LossOutput<T>> {
    let cbpt = build_cbpt(pred, truth_region)?;
    let weights = edge_weights(&cbpt);
    let mut grad = EdgeField::zeros(pred.width(), pred.height());
    let total_weight: u64 = weights.values().sum();
    if total_weight == 0 {
        return Ok(LossOutput {
            value: T::zero(),
            grad,
        });
    }
    let norm = T::from_u64(total_weight).expect("weight sum fits the scalar");
    let two = T::lit(2.0);
    let mut value = T::zero();
    for edge in cbpt.mst_edges().filter(|e| e.promising) {
        let w = T::from_u64(weights[&edge.index]).expect("weight fits the scalar");
        let residual = T::one() - edge.probability;
        value = value + w * residual * residual;
        channel_mut(&mut grad, edge.direction)[edge.channel_offset()] = -two * w * residual / norm;
    }
    Ok(LossOutput {
        value: value / norm,
        grad,
    })
}

/// Sum of the three terms; `truth` must be the edge labelling of `truth_region`.
pub fn total_loss<T: Scalar>(
    truth: &EdgeField<T>,
    truth_region: &RegionMask,
    pred: &EdgeField<T>,
) -> Result<LossOutput<T>> {
    Ok(loss_breakdown(truth, truth_region, pred)?.total)
}

pub fn loss_breakdown<T: Scalar>(
    truth: &EdgeField<T>,
    truth_region: &RegionMask,
    pred: &EdgeField<T>,
) -> Result<LossBreakdown<T>> {
    truth_region.check_dims(truth.dims())?;
    if *truth != node_to_edge_labels::<T>(truth_region) {
        return Err(Error::InconsistentTruth);
    }
    let bce = bce_xy(truth, pred)?;
    let dice = dice_xy(truth, pred)?;
    let conn = connectivity_loss(truth_region, pred)?;
    let total = LossOutput {
        value: bce.value + dice.value + conn.value,
        grad: bce.grad.add(&dice.grad)?.add(&conn.grad)?,
    };
    Ok(LossBreakdown {
        bce,
        dice,
        conn,
        total,
    })
}

fn channel<T: Scalar>(field: &EdgeField<T>, dir: Direction) -> &[T] {
    match dir {
        Direction::X => field.px(),
        Direction::Y => field.py(),
    }
}

fn channel_mut<T: Scalar>(field: &mut EdgeField<T>, dir: Direction) -> &mut [T] {
    match dir {
        Direction::X => field.px_mut(),
        Direction::Y => field.py_mut(),
    }
}

/// Central finite-difference check of an analytic gradient.
pub mod grad_check {
    use super::*;

    #[derive(Debug, Clone, Copy, PartialEq)]
    pub struct GradCheck {
        /// Largest `|fd - analytic| / |analytic|` over the checked entries.
        pub max_rel_error: f64,
        pub checked: usize,
        pub skipped: usize,
    }

    /// Compares `loss(pred).grad` against central differences with step `h`, at every
    /// entry whose analytic gradient exceeds `min_abs` in magnitude.
    pub fn check(
        pred: &EdgeField<f64>,
        h: f64,
        min_abs: f64,
        loss: impl Fn(&EdgeField<f64>) -> Result<LossOutput<f64>>,
    ) -> Result<GradCheck> {
        let analytic = loss(pred)?.grad;
        let mut probe = pred.clone();
        let mut report = GradCheck {
            max_rel_error: 0.0,
            checked: 0,
            skipped: 0,
        };
        for dir in [Direction::X, Direction::Y] {
            for k in 0..pred.px().len() {
                let g = channel(&analytic, dir)[k];
                if g.abs() <= min_abs {
                    report.skipped += 1;
                    continue;
                }
                let base = channel(pred, dir)[k];
                channel_mut(&mut probe, dir)[k] = base + h;
                let up = loss(&probe)?.value;
                channel_mut(&mut probe, dir)[k] = base - h;
                let down = loss(&probe)?.value;
                channel_mut(&mut probe, dir)[k] = base;
                let fd = (up - down) / (2.0 * h);
                report.max_rel_error = report.max_rel_error.max((fd - g).abs() / g.abs());
                report.checked += 1;
            }
        }
        Ok(report)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn full_band(w: usize, h: usize) -> RegionMask {
        RegionMask::from_fn(w, h, |_, _| true)
    }

    #[test]
    fn bce_perfect_prediction_is_near_zero() {
        let truth: EdgeField<f64> = node_to_edge_labels(&RegionMask::from_fn(6, 5, |r, c| r > c));
        let mut pred = truth.clone();
        for v in pred.values_mut() {
            *v = if *v == 1.0 { 1.0 - BCE_EPS } else { BCE_EPS };
        }
        let out = bce_xy(&truth, &pred).unwrap();
        assert!(out.value / 60.0 < 1e-5);
    }

    #[test]
    fn bce_single_half_entry_is_ln2() {
        let mut truth = EdgeField::<f64>::zeros(4, 4);
        truth.set_x(1, 1, 1.0);
        let mut pred = EdgeField::<f64>::zeros(4, 4);
        for v in pred.values_mut() {
            *v = BCE_EPS;
        }
        pred.set_x(1, 1, 0.5);
        let out = bce_xy(&truth, &pred).unwrap();
        // 31 remaining entries each contribute -ln(1 - eps)
        let expected = std::f64::consts::LN_2 - 31.0 * (1.0 - BCE_EPS).ln();
        assert!((out.value - expected).abs() < 1e-12);
        assert!((out.value - std::f64::consts::LN_2).abs() < 1e-5);
        assert_eq!(out.grad.x_at(1, 1), -2.0);
    }

    #[test]
    fn bce_rejects_soft_truth() {
        let mut truth = EdgeField::<f64>::zeros(3, 3);
        truth.set_y(0, 0, 0.5);
        let pred = EdgeField::<f64>::zeros(3, 3);
        assert!(matches!(
            bce_xy(&truth, &pred),
            Err(Error::NonBinaryTruth { .. })
        ));
        assert!(matches!(
            bce_xy(&truth, &EdgeField::zeros(2, 3)),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn bce_gradient_vanishes_on_zero_padding() {
        let region = full_band(5, 4);
        let truth: EdgeField<f64> = node_to_edge_labels(&region);
        let mut pred = truth.clone();
        for v in pred.values_mut() {
            if *v == 1.0 {
                *v = 0.7;
            }
        }
        let g = bce_xy(&truth, &pred).unwrap().grad;
        assert!(g.padding_is_zero());
    }

    #[test]
    fn dice_exact_and_disjoint() {
        let truth: EdgeField<f64> = node_to_edge_labels(&RegionMask::from_fn(5, 5, |r, _| r < 3));
        let d = dice_xy(&truth, &truth).unwrap();
        assert_eq!(d.value, 0.0);
        // at the optimum P = 1 entries cancel exactly and P = 0 entries have p = 0
        assert!(d.grad.px().iter().chain(d.grad.py()).all(|g| *g == 0.0));
        let other: EdgeField<f64> = node_to_edge_labels(&RegionMask::from_fn(5, 5, |r, _| r > 3));
        assert_eq!(dice_xy(&truth, &other).unwrap().value, 1.0);
    }

    #[test]
    fn dice_half_prediction_on_full_truth() {
        let region = full_band(6, 4);
        let truth: EdgeField<f64> = node_to_edge_labels(&region);
        let mut pred = truth.clone();
        for v in pred.values_mut() {
            *v *= 0.5;
        }
        let d = dice_xy(&truth, &pred).unwrap();
        assert!((d.value - 0.2).abs() < 1e-15);
    }

    #[test]
    fn dice_degenerate() {
        let z = EdgeField::<f64>::zeros(3, 3);
        assert!(matches!(dice_xy(&z, &z), Err(Error::DegenerateDenominator)));
    }

    #[test]
    fn connectivity_single_edge() {
        let mut pred = EdgeField::<f64>::zeros(2, 1);
        pred.set_x(0, 0, 0.6);
        let out = connectivity_loss(&full_band(2, 1), &pred).unwrap();
        assert!((out.value - 0.16).abs() < 1e-15);
        assert!((out.grad.x_at(0, 0) + 0.8).abs() < 1e-15);
    }

    #[test]
    fn connectivity_chain_value() {
        let mut pred = EdgeField::<f64>::zeros(3, 1);
        pred.set_x(0, 0, 0.9);
        pred.set_x(0, 1, 0.8);
        let out = connectivity_loss(&full_band(3, 1), &pred).unwrap();
        let expected = (1.0 * 0.1f64.powi(2) + 2.0 * 0.2f64.powi(2)) / 3.0;
        assert!((out.value - expected).abs() < 1e-15);
        assert!((out.value - 0.03).abs() < 1e-15);
    }

    #[test]
    fn connectivity_vanishes_without_promising_pairs() {
        let pred = EdgeField::<f64>::zeros(4, 4);
        let mut lone = RegionMask::empty(4, 4);
        lone.set(2, 2, true);
        for region in [RegionMask::empty(4, 4), lone] {
            let out = connectivity_loss(&region, &pred).unwrap();
            assert_eq!(out.value, 0.0);
            assert_eq!(out.grad, EdgeField::zeros(4, 4));
        }
    }

    #[test]
    fn total_requires_consistent_truth() {
        let region = full_band(4, 4);
        let truth: EdgeField<f64> = node_to_edge_labels(&RegionMask::empty(4, 4));
        let pred = truth.clone();
        assert!(matches!(
            total_loss(&truth, &region, &pred),
            Err(Error::InconsistentTruth)
        ));
    }

    #[test]
    fn total_is_sum_of_terms() {
        let region = RegionMask::from_fn(6, 6, |r, c| r + c < 7);
        let truth: EdgeField<f64> = node_to_edge_labels(&region);
        let mut pred = truth.clone();
        for (k, v) in pred.px_mut().iter_mut().enumerate() {
            *v = 0.05 + 0.9 * ((k * 37 % 29) as f64 / 29.0);
        }
        let b = loss_breakdown(&truth, &region, &pred).unwrap();
        assert_eq!(b.total.value, b.bce.value + b.dice.value + b.conn.value);
        for k in 0..36 {
            assert_eq!(
                b.total.grad.px()[k],
                b.bce.grad.px()[k] + b.dice.grad.px()[k] + b.conn.grad.px()[k]
            );
        }
    }
}

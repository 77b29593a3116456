use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Mean squared error and its gradient `(2/n)(pred − target)`.
pub fn mse_loss<S: Scalar>(pred: &[S], target: &[S]) -> Result<(S, Vec<S>)> {
    if pred.len() != target.len() || pred.is_empty() {
        return Err(Error::Dimension(format!(
            "prediction length {} vs target length {}",
            pred.len(),
            target.len()
        )));
    }
    let n = S::lit(pred.len() as f64);
    let scale = S::lit(2.0) / n;
    let mut sum = S::zero();
    let grad = pred
        .iter()
        .zip(target)
        .map(|(&p, &t)| {
            let d = p - t;
            sum += d * d;
            scale * d
        })
        .collect();
    Ok((sum / n, grad))
}

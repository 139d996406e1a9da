use crate::{NcdError, Result};

/// Knee detection on a decreasing convex curve (e.g. inertia against k).
///
/// Normalizes both axes to the unit square, flips the curve so the knee
/// becomes a peak of the difference `y - x`, and confirms a local maximum as
/// the knee once the difference later drops below the maximum minus the mean
/// normalized x-gap (sensitivity fixed at 1, no smoothing). Returns the x
/// value at the knee, or `None` when the curve has no confirmed knee (e.g. a
/// straight line).
///
/// Expects at least 5 points, strictly increasing xs, and ys that trend
/// downward overall.
pub fn kneedle_elbow(xs: &[f64], ys: &[f64]) -> Result<Option<f64>> {
    if xs.len() != ys.len() {
        return Err(NcdError::invalid("x/y length mismatch"));
    }
    let n = xs.len();
    if n < 5 {
        return Err(NcdError::invalid("knee detection needs at least 5 points"));
    }
    if xs.windows(2).any(|w| w[1] <= w[0]) {
        return Err(NcdError::invalid("xs must be strictly increasing"));
    }
    if xs.iter().chain(ys.iter()).any(|v| !v.is_finite()) {
        return Err(NcdError::invalid("non-finite curve value"));
    }
    if ys[n - 1] > ys[0] {
        return Err(NcdError::invalid("expected an overall decreasing curve"));
    }

    let (x_min, x_max) = (xs[0], xs[n - 1]);
    let y_min = ys.iter().cloned().fold(f64::INFINITY, f64::min);
    let y_max = ys.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if y_max == y_min {
        return Ok(None);
    }

    let xn: Vec<f64> = xs.iter().map(|&x| (x - x_min) / (x_max - x_min)).collect();
    // Flipping a decreasing curve makes the knee a peak of d = y_flipped - x.
    let diff: Vec<f64> = ys
        .iter()
        .zip(&xn)
        .map(|(&y, &x)| (1.0 - (y - y_min) / (y_max - y_min)) - x)
        .collect();

    let mean_gap = xn.windows(2).map(|w| w[1] - w[0]).sum::<f64>() / (n - 1) as f64;

    let is_local_max =
        |i: usize| i > 0 && i + 1 < n && diff[i] > diff[i - 1] && diff[i] >= diff[i + 1];

    for i in 1..n - 1 {
        if !is_local_max(i) {
            continue;
        }
        let threshold = diff[i] - mean_gap;
        for (j, &d) in diff.iter().enumerate().skip(i + 1) {
            if is_local_max(j) {
                break;
            }
            if d < threshold {
                return Ok(Some(xs[i]));
            }
        }
    }
    Ok(None)
}

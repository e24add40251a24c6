//! Sampled 1D profiles: peak location, half-maximum crossings, FWHM.

use crate::error::{Error, Result};

/// Half-maximum analysis of a single-peaked sampled profile.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HalfMax {
    pub peak_index: usize,
    pub peak_x: f64,
    pub peak_value: f64,
    /// Interpolated abscissa of the rising half-max crossing.
    pub left: f64,
    /// Interpolated abscissa of the falling half-max crossing.
    pub right: f64,
}

impl HalfMax {
    pub fn width(&self) -> f64 {
        self.right - self.left
    }
}

fn check_grid(xs: &[f64], ys: &[f64]) -> Result<()> {
    if xs.len() != ys.len() {
        return Err(Error::Input(format!(
            "profile abscissa and samples differ in length ({} vs {})",
            xs.len(),
            ys.len()
        )));
    }
    if xs.len() < 3 {
        return Err(Error::Analysis("profile needs at least 3 samples".into()));
    }
    if xs.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Input("profile abscissa must be strictly increasing".into()));
    }
    if ys.iter().any(|y| !y.is_finite()) {
        return Err(Error::Input("profile contains non-finite samples".into()));
    }
    Ok(())
}

/// Index of the largest sample (first one on ties).
pub fn argmax(ys: &[f64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, &y) in ys.iter().enumerate() {
        match best {
            Some(b) if ys[b] >= y => {}
            _ => best = Some(i),
        }
    }
    best
}

/// Walks outward from the maximum and linearly interpolates the two
/// half-maximum crossings.
pub fn half_max(xs: &[f64], ys: &[f64]) -> Result<HalfMax> {
    check_grid(xs, ys)?;
    let peak_index = argmax(ys).expect("non-empty");
    let peak = ys[peak_index];
    if !(peak > 0.0) {
        return Err(Error::Analysis("profile has no positive peak".into()));
    }
    let half = 0.5 * peak;

    let mut left = None;
    for i in (0..peak_index).rev() {
        if ys[i] <= half {
            let (x0, y0, x1, y1) = (xs[i], ys[i], xs[i + 1], ys[i + 1]);
            left = Some(x0 + (half - y0) * (x1 - x0) / (y1 - y0));
            break;
        }
    }
    let mut right = None;
    for i in peak_index + 1..ys.len() {
        if ys[i] <= half {
            let (x0, y0, x1, y1) = (xs[i - 1], ys[i - 1], xs[i], ys[i]);
            right = Some(x0 + (y0 - half) * (x1 - x0) / (y0 - y1));
            break;
        }
    }
    match (left, right) {
        (Some(left), Some(right)) => Ok(HalfMax {
            peak_index,
            peak_x: xs[peak_index],
            peak_value: peak,
            left,
            right,
        }),
        _ => Err(Error::Analysis(
            "profile does not fall below half maximum on both sides of the peak".into(),
        )),
    }
}

/// Full width at half maximum.
pub fn fwhm(xs: &[f64], ys: &[f64]) -> Result<f64> {
    half_max(xs, ys).map(|h| h.width())
}

/// Rejects profiles with a secondary maximum whose prominence exceeds
/// `min_prominence` (as a fraction of the global peak).
pub fn ensure_unimodal(ys: &[f64], min_prominence: f64) -> Result<()> {
    let Some(top) = argmax(ys) else {
        return Err(Error::Analysis("empty profile".into()));
    };
    let peak = ys[top];
    let threshold = min_prominence * peak.abs();

    // Left of the global peak, the running maximum seen from the outside
    // must never drop by more than `threshold` before rising again.
    let scan = |indices: &mut dyn Iterator<Item = usize>| -> bool {
        let mut local_max = f64::NEG_INFINITY;
        for i in indices {
            let y = ys[i];
            if y > local_max {
                local_max = y;
            } else if local_max - y > threshold {
                // Found a dip below a previous local maximum; that maximum is
                // a separate mode if it is not the global one.
                return true;
            }
        }
        false
    };
    let left_bumpy = scan(&mut (0..top));
    let right_bumpy = scan(&mut (top + 1..ys.len()).rev());
    if left_bumpy || right_bumpy {
        Err(Error::Analysis("profile is multimodal".into()))
    } else {
        Ok(())
    }
}

/// Trapezoidal integral of samples on a (possibly non-uniform) grid.
pub fn trapezoid(xs: &[f64], ys: &[f64]) -> f64 {
    xs.windows(2)
        .zip(ys.windows(2))
        .map(|(x, y)| 0.5 * (x[1] - x[0]) * (y[0] + y[1]))
        .sum()
}

/// `n` evenly spaced points on `[start, stop]` inclusive.
pub fn linspace(start: f64, stop: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![start],
        _ => {
            let step = (stop - start) / (n - 1) as f64;
            (0..n)
                .map(|i| if i == n - 1 { stop } else { start + step * i as f64 })
                .collect()
        }
    }
}

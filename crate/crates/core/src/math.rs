//! Floating point functions that `core` does not provide.

#[inline]
pub fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

#[inline]
pub fn exp(x: f64) -> f64 {
    libm::exp(x)
}

#[inline]
pub fn ln(x: f64) -> f64 {
    libm::log(x)
}

#[inline]
pub fn log2(x: f64) -> f64 {
    libm::log2(x)
}

#[inline]
pub fn powf(x: f64, y: f64) -> f64 {
    libm::pow(x, y)
}

#[inline]
pub fn sin(x: f64) -> f64 {
    libm::sin(x)
}

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + exp(-x))
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    sqrt(dot(a, a))
}

/// Ordinary least squares fit `y = a + b x`; returns `(slope, stderr)`.
///
/// The standard error is `None` with fewer than three points.
pub fn ols_slope(xs: &[f64], ys: &[f64]) -> Option<(f64, Option<f64>)> {
    let n = xs.len();
    if n < 2 || ys.len() != n {
        return None;
    }
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx <= 0.0 {
        return None;
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    if n < 3 {
        return Some((slope, None));
    }
    let intercept = my - slope * mx;
    let rss: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| {
            let e = y - intercept - slope * x;
            e * e
        })
        .sum();
    Some((slope, Some(sqrt(rss / (nf - 2.0) / sxx))))
}

/// Median of a slice (average of the two middle values for even length).
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = alloc::vec::Vec::from(values);
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    Some(if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ols_recovers_exact_line() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        let ys: alloc::vec::Vec<f64> = xs.iter().map(|x| 0.5 - 0.25 * x).collect();
        let (slope, se) = ols_slope(&xs, &ys).unwrap();
        assert!((slope + 0.25).abs() < 1e-12);
        assert!(se.unwrap() < 1e-12);
    }

    #[test]
    fn ols_degenerate_inputs() {
        assert!(ols_slope(&[1.0], &[2.0]).is_none());
        assert!(ols_slope(&[1.0, 1.0], &[2.0, 3.0]).is_none());
        let (s, se) = ols_slope(&[0.0, 1.0], &[0.0, 2.0]).unwrap();
        assert_eq!(s, 2.0);
        assert!(se.is_none());
    }

    #[test]
    fn median_even_and_odd() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), Some(2.0));
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), Some(2.5));
        assert_eq!(median(&[]), None);
    }
}

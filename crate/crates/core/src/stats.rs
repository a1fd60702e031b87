//! Small descriptive-statistics helpers shared by the simulation and the batch drivers.

/// Ordinary least-squares slope of `ys` against `xs`.
///
/// Returns `None` with fewer than two points or when `xs` is constant.
pub fn ols_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let n = xs.len().min(ys.len());
    if n < 2 {
        return None;
    }
    let nf = n as f64;
    let mx = xs[..n].iter().sum::<f64>() / nf;
    let my = ys[..n].iter().sum::<f64>() / nf;
    let (sxy, sxx) = xs[..n].iter().zip(&ys[..n]).fold((0.0, 0.0), |(sxy, sxx), (x, y)| {
        let dx = x - mx;
        (sxy + dx * (y - my), sxx + dx * dx)
    });
    if sxx == 0.0 {
        None
    } else {
        Some(sxy / sxx)
    }
}

pub fn mean(xs: &[f64]) -> Option<f64> {
    if xs.is_empty() {
        None
    } else {
        Some(xs.iter().sum::<f64>() / xs.len() as f64)
    }
}

/// Sample standard deviation (n - 1 denominator).
pub fn std_dev(xs: &[f64]) -> Option<f64> {
    if xs.len() < 2 {
        return None;
    }
    let m = mean(xs)?;
    let ss = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>();
    Some((ss / (xs.len() - 1) as f64).sqrt())
}

/// Median of a sample; averages the two middle values for even sizes.
pub fn median(xs: &[f64]) -> Option<f64> {
    if xs.is_empty() {
        return None;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    Some(if v.len().is_multiple_of(2) {
        0.5 * (v[mid - 1] + v[mid])
    } else {
        v[mid]
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_of_line() {
        let xs = [0.0, 1.0, 2.0, 3.0];
        let ys: Vec<f64> = xs.iter().map(|x| 2.5 * x - 1.0).collect();
        assert!((ols_slope(&xs, &ys).unwrap() - 2.5).abs() < 1e-14);
        assert_eq!(ols_slope(&[1.0], &[1.0]), None);
        assert_eq!(ols_slope(&[1.0, 1.0], &[1.0, 2.0]), None);
    }

    #[test]
    fn summaries() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), Some(2.0));
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), Some(2.5));
        assert_eq!(mean(&[]), None);
        assert!((std_dev(&[1.0, 2.0, 3.0, 4.0]).unwrap() - 1.290_994_448_735_805_6).abs() < 1e-15);
    }
}

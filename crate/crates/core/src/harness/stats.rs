//! Order statistics for error reporting.

use crate::error::{Error, Result};

/// Median of the absolute values; the mean of the two middle elements for
/// even lengths.
pub fn median_abs_error(values: &[f64]) -> Result<f64> {
    let v = sorted_abs(values)?;
    let mid = v.len() / 2;
    Ok(if v.len() % 2 == 1 { v[mid] } else { 0.5 * (v[mid - 1] + v[mid]) })
}

/// Empirical CDF evaluated at each distinct absolute value.
pub fn cdf(values: &[f64]) -> Result<Vec<(f64, f64)>> {
    let v = sorted_abs(values)?;
    let n = v.len() as f64;
    let mut table: Vec<(f64, f64)> = Vec::new();
    for (i, &x) in v.iter().enumerate() {
        let frac = (i + 1) as f64 / n;
        match table.last_mut() {
            Some(last) if last.0 == x => last.1 = frac,
            _ => table.push((x, frac)),
        }
    }
    Ok(table)
}

/// Value at cumulative fraction `q` (nearest rank).
pub fn quantile(values: &[f64], q: f64) -> Result<f64> {
    let v = sorted_abs(values)?;
    let rank = (q.clamp(0.0, 1.0) * v.len() as f64).ceil().max(1.0) as usize;
    Ok(v[rank - 1])
}

fn sorted_abs(values: &[f64]) -> Result<Vec<f64>> {
    if values.is_empty() {
        return Err(Error::Domain("statistics of an empty sample".into()));
    }
    if values.iter().any(|v| v.is_nan()) {
        return Err(Error::Domain("NaN in error sample".into()));
    }
    let mut v: Vec<f64> = values.iter().map(|x| x.abs()).collect();
    v.sort_by(f64::total_cmp);
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn medians() {
        assert_eq!(median_abs_error(&[1.0, 2.0, 100.0]).unwrap(), 2.0);
        assert_eq!(median_abs_error(&[1.0, 2.0, 3.0, 4.0]).unwrap(), 2.5);
        assert_eq!(median_abs_error(&[-3.0]).unwrap(), 3.0);
        assert!(median_abs_error(&[]).is_err());
    }

    #[test]
    fn cdf_table() {
        assert_eq!(cdf(&[1.0, 1.0, 2.0]).unwrap(), vec![(1.0, 2.0 / 3.0), (2.0, 1.0)]);
        assert!(cdf(&[]).is_err());
        assert_eq!(quantile(&[3.0, 1.0, 2.0], 0.5).unwrap(), 2.0);
    }

    proptest! {
        #[test]
        fn cdf_is_monotone_and_ends_at_one(v in proptest::collection::vec(-10.0f64..10.0, 1..50)) {
            let t = cdf(&v).unwrap();
            prop_assert!(t.windows(2).all(|w| w[0].0 < w[1].0 && w[0].1 < w[1].1));
            prop_assert_eq!(t.last().unwrap().1, 1.0);
        }
    }
}

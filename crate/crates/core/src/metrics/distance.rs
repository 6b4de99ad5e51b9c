use std::f64::consts::FRAC_PI_2;

use crate::error::{Error, Result};

fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

/// Mean Euclidean distance over all unordered pairs.
pub fn mean_pairwise_distance(points: &[Vec<f64>]) -> Result<f64> {
    let n = points.len();
    if n < 2 {
        return Err(Error::InvalidInput(format!(
            "mean pairwise distance needs at least 2 points, got {n}"
        )));
    }
    let mut total = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            Error::check_len("pairwise distance points", points[i].len(), points[j].len())?;
            total += euclid(&points[i], &points[j]);
        }
    }
    Ok(total / (n * (n - 1) / 2) as f64)
}

/// Distance between the unit-normalized versions of `a` and `b`.
pub fn nvd(a: &[f64], b: &[f64]) -> Result<f64> {
    Error::check_len("nvd operands", a.len(), b.len())?;
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return Err(Error::InvalidInput("nvd of a zero vector".into()));
    }
    Ok(a.iter()
        .zip(b)
        .map(|(x, y)| (x / na - y / nb).powi(2))
        .sum::<f64>()
        .sqrt())
}

/// Angular score `pi/2 - atan((r2 - ref2) / (r1 - ref1))`, increasing with the
/// share of objective 1. A point level with `ref` in the first coordinate
/// scores 0, the limit of the formula as the ratio grows without bound.
pub fn projection_score(point: &[f64], reference: &[f64]) -> Result<f64> {
    Error::check_len("projection point", 2, point.len())?;
    Error::check_len("projection reference", 2, reference.len())?;
    let dx = point[0] - reference[0];
    if dx == 0.0 {
        return Ok(0.0);
    }
    Ok(FRAC_PI_2 - ((point[1] - reference[1]) / dx).atan())
}

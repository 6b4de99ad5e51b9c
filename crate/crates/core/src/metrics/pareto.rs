use crate::error::{Error, Result};

/// `a >= b` componentwise with at least one strict inequality.
pub fn dominates(a: &[f64], b: &[f64]) -> Result<bool> {
    Error::check_len("dominance operands", a.len(), b.len())?;
    let mut strict = false;
    for (x, y) in a.iter().zip(b) {
        if x < y {
            return Ok(false);
        }
        strict |= x > y;
    }
    Ok(strict)
}

/// Indices of the points no other point dominates, in input order.
pub fn pareto_indices(points: &[Vec<f64>]) -> Result<Vec<usize>> {
    if let Some(first) = points.first() {
        for p in points {
            Error::check_len("pareto points", first.len(), p.len())?;
        }
    }
    let mut keep = Vec::new();
    'outer: for (i, p) in points.iter().enumerate() {
        for (j, q) in points.iter().enumerate() {
            if i != j && dominates(q, p)? {
                continue 'outer;
            }
        }
        keep.push(i);
    }
    Ok(keep)
}

/// The nondominated subset of `points`, in input order.
pub fn pareto_filter(points: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    Ok(pareto_indices(points)?
        .into_iter()
        .map(|i| points[i].clone())
        .collect())
}

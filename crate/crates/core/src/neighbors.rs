//! Exact Euclidean neighbor ordering around a query point.

use crate::data::{Dataset, QueryPoint};
use crate::error::Result;

/// Rows of a dataset sorted by ascending Euclidean distance to a query point.
/// Equal distances keep original row order.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborOrder {
    pub perm: Vec<usize>,
    pub dists: Vec<f64>,
}

impl NeighborOrder {
    pub fn len(&self) -> usize {
        self.perm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.perm.is_empty()
    }

    /// Responses of `data` arranged nearest first.
    pub fn ordered_responses(&self, data: &Dataset) -> Vec<f64> {
        let y = data.response();
        self.perm.iter().map(|&i| y[i]).collect()
    }
}

pub(crate) fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| (u - v) * (u - v)).sum()
}

/// Stable ascending order of the rows of `data` by distance to `x`.
pub fn order_by_distance(data: &Dataset, x: &QueryPoint) -> Result<NeighborOrder> {
    x.check_dim(data.d())?;
    let q = x.coords();
    let sq: Vec<f64> = data.rows().map(|r| squared_distance(r, q)).collect();
    let mut perm: Vec<usize> = (0..data.n()).collect();
    // slice::sort_by is stable
    perm.sort_by(|&a, &b| sq[a].total_cmp(&sq[b]));
    let dists = perm.iter().map(|&i| sq[i].sqrt()).collect();
    Ok(NeighborOrder { perm, dists })
}

/// Responses of `data` ordered nearest first relative to `x`.
pub fn ordered_responses(data: &Dataset, x: &QueryPoint) -> Result<Vec<f64>> {
    Ok(order_by_distance(data, x)?.ordered_responses(data))
}

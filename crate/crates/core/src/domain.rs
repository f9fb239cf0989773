//! Axis-aligned boxes in the positive orthant and deterministic samplers.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::tolerance::DEFAULT_SEED;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DomainBox {
    bounds: Vec<(f64, f64)>,
}

impl DomainBox {
    pub fn new(bounds: Vec<(f64, f64)>) -> Result<Self> {
        if bounds.is_empty() {
            return Err(Error::InvalidBox("box has no axes".into()));
        }
        for (axis, &(lo, hi)) in bounds.iter().enumerate() {
            if !(lo.is_finite() && hi.is_finite()) {
                return Err(Error::InvalidBox(format!("axis {axis}: non-finite bound")));
            }
            if lo <= 0.0 {
                return Err(Error::InvalidBox(format!("axis {axis}: lower bound {lo} leaves the positive orthant")));
            }
            if lo >= hi {
                return Err(Error::InvalidBox(format!("axis {axis}: lower bound {lo} not below upper bound {hi}")));
            }
        }
        Ok(Self { bounds })
    }

    /// The same interval on every axis.
    pub fn cube(lo: f64, hi: f64, dim: usize) -> Result<Self> {
        Self::new(vec![(lo, hi); dim])
    }

    /// A small relative neighbourhood of a single point.
    pub fn around(point: &[f64], rel: f64) -> Result<Self> {
        Self::new(point.iter().map(|&x| (x * (1.0 - rel), x * (1.0 + rel))).collect())
    }

    /// Parses `lo:hi,lo:hi,...`.
    pub fn parse(text: &str) -> Result<Self> {
        let mut bounds = Vec::new();
        for part in text.split(',') {
            let (lo, hi) =
                part.split_once(':').ok_or_else(|| Error::InvalidBox(format!("expected lo:hi, got {part:?}")))?;
            let lo: f64 = lo.trim().parse().map_err(|_| Error::InvalidBox(format!("bad lower bound {lo:?}")))?;
            let hi: f64 = hi.trim().parse().map_err(|_| Error::InvalidBox(format!("bad upper bound {hi:?}")))?;
            bounds.push((lo, hi));
        }
        Self::new(bounds)
    }

    pub fn dim(&self) -> usize {
        self.bounds.len()
    }

    pub fn bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }

    /// Geometric center, the natural midpoint for multiplicative geometry.
    pub fn center(&self) -> Vec<f64> {
        self.bounds.iter().map(|&(lo, hi)| (lo * hi).sqrt()).collect()
    }

    pub fn contains(&self, point: &[f64]) -> bool {
        point.len() == self.dim() && point.iter().zip(&self.bounds).all(|(&x, &(lo, hi))| x >= lo && x <= hi)
    }

    pub fn check_dim(&self, dim: usize) -> Result<()> {
        if self.dim() != dim {
            return Err(Error::DimensionMismatch { expected: dim, actual: self.dim() });
        }
        Ok(())
    }

    /// `count` points drawn log-uniformly from the box; identical for identical seeds.
    pub fn log_uniform_samples(&self, count: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..count)
            .map(|_| {
                self.bounds
                    .iter()
                    .map(|&(lo, hi)| {
                        let t: f64 = rng.gen();
                        (lo.ln() + t * (hi.ln() - lo.ln())).exp()
                    })
                    .collect()
            })
            .collect()
    }

    /// Tensor grid with `per_axis` geometrically spaced nodes per axis, in
    /// lexicographic order (last axis fastest).
    pub fn log_grid(&self, per_axis: usize) -> Vec<Vec<f64>> {
        let axes: Vec<Vec<f64>> = self.bounds.iter().map(|&(lo, hi)| geometric_nodes(lo, hi, per_axis)).collect();
        let total = per_axis.pow(self.dim() as u32);
        (0..total)
            .map(|mut index| {
                let mut point = vec![0.0; self.dim()];
                for axis in (0..self.dim()).rev() {
                    point[axis] = axes[axis][index % per_axis];
                    index /= per_axis;
                }
                point
            })
            .collect()
    }
}

/// `count` geometrically spaced nodes from `lo` to `hi` inclusive.
pub fn geometric_nodes(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![(lo * hi).sqrt()],
        _ => {
            let ratio = hi / lo;
            (0..count)
                .map(|k| if k == count - 1 { hi } else { lo * ratio.powf(k as f64 / (count - 1) as f64) })
                .collect()
        }
    }
}

/// `count` evenly spaced nodes from `lo` to `hi` inclusive.
pub fn linear_nodes(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count < 2 {
        return vec![0.5 * (lo + hi)];
    }
    (0..count).map(|k| if k == count - 1 { hi } else { lo + (hi - lo) * k as f64 / (count - 1) as f64 }).collect()
}

/// Sample count and seed for the randomized checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Sampling {
    pub count: usize,
    pub seed: u64,
}

impl Sampling {
    pub fn new(count: usize) -> Self {
        Self { count, seed: DEFAULT_SEED }
    }

    pub fn with_seed(count: usize, seed: u64) -> Self {
        Self { count, seed }
    }
}

/// Rejects empty, non-finite or non-positive points.
pub fn check_point(point: &[f64], inputs: usize) -> Result<()> {
    if point.len() != inputs {
        return Err(Error::DimensionMismatch { expected: inputs, actual: point.len() });
    }
    for (i, &x) in point.iter().enumerate() {
        if !x.is_finite() || x <= 0.0 {
            return Err(Error::InvalidPoint(format!("coordinate {i} = {x} is not strictly positive")));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_boxes() {
        assert!(DomainBox::new(vec![(0.0, 1.0)]).is_err());
        assert!(DomainBox::new(vec![(2.0, 1.0)]).is_err());
        assert!(DomainBox::new(vec![(1.0, 1.0)]).is_err());
        assert!(DomainBox::parse("0.5:2,1").is_err());
        assert!(DomainBox::parse("-1:2").is_err());
    }

    #[test]
    fn parses_box() {
        let b = DomainBox::parse("0.5:2, 1:3").unwrap();
        assert_eq!(b.bounds(), &[(0.5, 2.0), (1.0, 3.0)]);
        assert_eq!(b.center(), vec![1.0, 3f64.sqrt()]);
    }

    #[test]
    fn samples_stay_inside_and_repeat() {
        let b = DomainBox::cube(0.5, 2.0, 3).unwrap();
        let s1 = b.log_uniform_samples(200, 7);
        let s2 = b.log_uniform_samples(200, 7);
        assert_eq!(s1, s2);
        assert!(s1.iter().all(|p| b.contains(p)));
        assert_ne!(s1, b.log_uniform_samples(200, 8));
    }

    #[test]
    fn grid_order_is_lexicographic() {
        let b = DomainBox::cube(1.0, 4.0, 2).unwrap();
        let g = b.log_grid(3);
        assert_eq!(g.len(), 9);
        assert_eq!(g[0], vec![1.0, 1.0]);
        assert_eq!(g[1], vec![1.0, 2.0]);
        assert_eq!(g[3], vec![2.0, 1.0]);
        assert_eq!(g[8], vec![4.0, 4.0]);
    }
}

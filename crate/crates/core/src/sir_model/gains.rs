use std::collections::BTreeSet;

use super::Direction;
use crate::{Error, Result};

/// Linear gain for every (position, direction) pair plus the set of active
/// positions. Inactive positions always carry zero gain.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct GainMatrix {
    gains: Vec<[f64; 4]>,
    active: BTreeSet<usize>,
}

impl GainMatrix {
    pub fn zeros(positions: usize) -> Self {
        Self {
            gains: vec![[0.0; 4]; positions],
            active: BTreeSet::new(),
        }
    }

    /// Builds the product of per-position weights and per-direction gains.
    pub fn from_stages(positions: usize, weights: &[(usize, f64)], pan: [f64; 4]) -> Result<Self> {
        let mut gm = Self::zeros(positions);
        for &(p, w) in weights {
            if p >= positions {
                return Err(Error::PositionOutOfRange {
                    index: p,
                    bound: positions,
                });
            }
            gm.active.insert(p);
            for (g, d) in gm.gains[p].iter_mut().zip(pan) {
                *g = w * d;
            }
        }
        Ok(gm)
    }

    pub fn position_count(&self) -> usize {
        self.gains.len()
    }

    pub fn get(&self, p: usize, d: Direction) -> f64 {
        self.gains[p][d.index()]
    }

    pub fn row(&self, p: usize) -> [f64; 4] {
        self.gains[p]
    }

    /// Sets one gain; a position becomes active as soon as it carries a
    /// nonzero gain.
    pub fn set(&mut self, p: usize, d: Direction, gain: f64) -> Result<()> {
        if p >= self.gains.len() {
            return Err(Error::PositionOutOfRange {
                index: p,
                bound: self.gains.len(),
            });
        }
        self.gains[p][d.index()] = gain.max(0.0);
        if gain > 0.0 {
            self.active.insert(p);
        }
        Ok(())
    }

    pub fn active(&self) -> &BTreeSet<usize> {
        &self.active
    }

    /// Translational weight of position `p`, recovered from its power.
    pub fn position_weight(&self, p: usize) -> f64 {
        self.gains[p].iter().map(|g| g * g).sum::<f64>().sqrt()
    }

    /// Sum of squared gains across the whole matrix.
    pub fn total_power(&self) -> f64 {
        self.gains
            .iter()
            .flat_map(|row| row.iter())
            .map(|g| g * g)
            .sum()
    }

    /// Nonzero entries in position-major, direction-minor order.
    pub fn nonzero(&self) -> impl Iterator<Item = (usize, Direction, f64)> + '_ {
        self.gains.iter().enumerate().flat_map(|(p, row)| {
            Direction::ALL
                .into_iter()
                .filter(move |d| row[d.index()] != 0.0)
                .map(move |d| (p, d, row[d.index()]))
        })
    }

    pub fn as_rows(&self) -> &[[f64; 4]] {
        &self.gains
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stage_product_and_accessors() {
        let gm = GainMatrix::from_stages(20, &[(3, 0.5), (4, 0.5)], [0.6, 0.8, 0.0, 0.0]).unwrap();
        assert_eq!(gm.get(3, Direction::Right), 0.4);
        assert!((gm.position_weight(4) - 0.5).abs() < 1e-15);
        assert_eq!(gm.nonzero().count(), 4);
        assert_eq!(gm.active().iter().copied().collect::<Vec<_>>(), vec![3, 4]);
        assert!((gm.total_power() - 0.5).abs() < 1e-15);
        assert!(GainMatrix::from_stages(2, &[(2, 1.0)], [1.0, 0.0, 0.0, 0.0]).is_err());
    }

    #[test]
    fn set_marks_active() {
        let mut gm = GainMatrix::zeros(4);
        gm.set(1, Direction::Left, 0.25).unwrap();
        assert!(gm.active().contains(&1));
        assert_eq!(gm.nonzero().collect::<Vec<_>>(), vec![(1, Direction::Left, 0.25)]);
        assert!(gm.set(4, Direction::Front, 1.0).is_err());
    }
}

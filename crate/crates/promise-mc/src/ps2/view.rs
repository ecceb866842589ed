//! Views: per-location timestamp maps.

use super::time::Ts;
use crate::lang::LocId;

/// A timestamp function over all declared locations. The initial view maps
/// every location to 0.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct View(pub Vec<Ts>);

impl View {
    pub fn init(n_locs: usize) -> View {
        View(vec![Ts::zero(); n_locs])
    }

    pub fn get(&self, l: LocId) -> &Ts {
        &self.0[l.0]
    }

    pub fn set(&mut self, l: LocId, t: Ts) {
        self.0[l.0] = t;
    }

    /// Pointwise maximum.
    pub fn join(&self, other: &View) -> View {
        View(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(a, b)| if a >= b { a.clone() } else { b.clone() })
                .collect(),
        )
    }

    /// Pointwise comparison: `self <= other` on every location.
    pub fn leq(&self, other: &View) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| a <= b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn join_is_pointwise_max() {
        let mut a = View::init(2);
        let mut b = View::init(2);
        a.set(LocId(0), Ts::from_int(1));
        b.set(LocId(1), Ts::from_int(3));
        let j = a.join(&b);
        assert_eq!(j.get(LocId(0)), &Ts::from_int(1));
        assert_eq!(j.get(LocId(1)), &Ts::from_int(3));
        assert!(a.leq(&j) && b.leq(&j));
    }
}

use super::{check_table, NsBox, Violation, OUTCOMES, PARTIES, SETTINGS, TABLE_LEN};
use crate::error::{Error, Result};

/// Largest number of factors `product_box` will materialize (16^6 entries).
pub const MAX_FACTORS: usize = 3;

/// Joint conditional distribution of `k` four-party boxes over `4k` parties.
///
/// Factor `j` occupies bits `4j..4j+4` of both the joint outcome and the
/// joint setting index; storage is outcome-major like [`NsBox`].
#[derive(Clone, Debug)]
pub struct JointBox {
    factors: usize,
    p: Vec<f64>,
}

impl JointBox {
    pub fn factors(&self) -> usize {
        self.factors
    }

    fn side(&self) -> usize {
        1 << (PARTIES * self.factors)
    }

    pub fn prob(&self, x: usize, u: usize) -> f64 {
        self.p[x * self.side() + u]
    }

    pub fn table(&self) -> &[f64] {
        &self.p
    }

    /// Marginal box of factor `j`; well defined because the joint is no-signaling.
    /// The other factors' settings are fixed to zero.
    pub fn marginal(&self, j: usize) -> Result<NsBox> {
        if j >= self.factors {
            return Err(Error::param("factor", format!("{j} >= {}", self.factors)));
        }
        let side = self.side();
        let shift = PARTIES * j;
        let mut p = [0.0; TABLE_LEN];
        for x in 0..side {
            let xj = (x >> shift) & (OUTCOMES - 1);
            for uj in 0..SETTINGS {
                p[xj * SETTINGS + uj] += self.p[x * side + (uj << shift)];
            }
        }
        NsBox::new(p)
    }

    pub fn no_signaling_violations(&self, tol: f64) -> Vec<Violation> {
        check_table(&self.p, PARTIES * self.factors, tol)
    }

    pub fn is_no_signaling(&self, tol: f64) -> bool {
        self.no_signaling_violations(tol).is_empty()
    }
}

/// `joint(x⃗|u⃗) = Π_j p_j(x_j|u_j)`.
pub fn product_box(boxes: &[NsBox]) -> Result<JointBox> {
    if boxes.is_empty() {
        return Err(Error::Empty("product_box needs at least one box"));
    }
    if boxes.len() > MAX_FACTORS {
        return Err(Error::SizeGuard(format!("{} factors requested, at most {MAX_FACTORS} supported", boxes.len())));
    }
    let mut p: Vec<f64> = boxes[0].table().to_vec();
    let mut side = SETTINGS;
    for b in &boxes[1..] {
        let new_side = side * SETTINGS;
        let mut next = vec![0.0; new_side * new_side];
        for x_old in 0..side {
            for u_old in 0..side {
                let a = p[x_old * side + u_old];
                if a == 0.0 {
                    continue;
                }
                for xn in 0..OUTCOMES {
                    for un in 0..SETTINGS {
                        let x = x_old | (xn * side);
                        let u = u_old | (un * side);
                        next[x * new_side + u] = a * b.table()[xn * SETTINGS + un];
                    }
                }
            }
        }
        p = next;
        side = new_side;
    }
    Ok(JointBox { factors: boxes.len(), p })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bell::{bell_value, BellFunctional, DEFAULT_TOL};

    #[test]
    fn single_factor_is_identity() {
        let pb = NsBox::parity_box();
        let j = product_box(std::slice::from_ref(&pb)).unwrap();
        assert_eq!(j.table(), &pb.table()[..]);
    }

    #[test]
    fn two_uniform_boxes() {
        let j = product_box(&[NsBox::uniform(), NsBox::uniform()]).unwrap();
        assert!(j.table().iter().all(|&v| (v - 1.0 / 256.0).abs() < 1e-15));
        assert!(j.is_no_signaling(DEFAULT_TOL));
    }

    #[test]
    fn marginals_reproduce_factors() {
        let a = NsBox::parity_box();
        let b = NsBox::all_local_deterministic().nth(77).unwrap();
        let j = product_box(&[a.clone(), b.clone()]).unwrap();
        for (k, f) in [a, b].iter().enumerate() {
            let m = j.marginal(k).unwrap();
            let dev = m.table().iter().zip(f.table()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
            assert!(dev <= 1e-12);
        }
        assert!(j.is_no_signaling(DEFAULT_TOL));
        let f = BellFunctional::standard();
        assert!(bell_value(&j.marginal(0).unwrap(), &f).abs() < 1e-12);
    }

    #[test]
    fn empty_and_oversized_inputs() {
        assert!(matches!(product_box(&[]), Err(Error::Empty(_))));
        let four = vec![NsBox::uniform(); 4];
        assert!(matches!(product_box(&four), Err(Error::SizeGuard(_))));
    }
}

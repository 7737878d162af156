//! Context feature maps φ(s) and ψ(s) used by the policy mean and baseline.

use nalgebra::DVector;

/// A fixed nonlinear expansion of the context vector.
///
/// `Identity` is the default policy feature map, `Affine` prepends a constant
/// term, `Quadratic` adds all second-order monomials `s_i s_j` (i ≤ j) on top
/// of the affine terms — the usual baseline features — and `Constant` ignores
/// the context entirely.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeatureMap {
    Constant,
    Identity,
    Affine,
    Quadratic,
}

impl FeatureMap {
    /// Output dimension for a context of dimension `n_s`.
    pub fn dim(&self, n_s: usize) -> usize {
        match self {
            FeatureMap::Constant => 1,
            FeatureMap::Identity => n_s,
            FeatureMap::Affine => 1 + n_s,
            FeatureMap::Quadratic => 1 + n_s + n_s * (n_s + 1) / 2,
        }
    }

    /// True if feature index `i` is the constant term.
    pub fn is_constant_term(&self, i: usize) -> bool {
        match self {
            FeatureMap::Identity => false,
            FeatureMap::Constant | FeatureMap::Affine | FeatureMap::Quadratic => i == 0,
        }
    }

    /// Expands a context vector.
    pub fn apply(&self, s: &DVector<f64>) -> DVector<f64> {
        let n_s = s.len();
        match self {
            FeatureMap::Constant => DVector::from_element(1, 1.0),
            FeatureMap::Identity => s.clone(),
            FeatureMap::Affine => {
                let mut out = DVector::zeros(1 + n_s);
                out[0] = 1.0;
                out.rows_mut(1, n_s).copy_from(s);
                out
            }
            FeatureMap::Quadratic => {
                let mut out = DVector::zeros(self.dim(n_s));
                out[0] = 1.0;
                out.rows_mut(1, n_s).copy_from(s);
                let mut k = 1 + n_s;
                for i in 0..n_s {
                    for j in i..n_s {
                        out[k] = s[i] * s[j];
                        k += 1;
                    }
                }
                out
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dvector;

    #[test]
    fn dimensions_match_expansion() {
        let s = dvector![2.0, 3.0];
        let maps = [
            FeatureMap::Constant,
            FeatureMap::Identity,
            FeatureMap::Affine,
            FeatureMap::Quadratic,
        ];
        for map in maps {
            assert_eq!(map.apply(&s).len(), map.dim(2));
        }
    }

    #[test]
    fn quadratic_terms_in_expected_order() {
        let s = dvector![2.0, 3.0];
        let f = FeatureMap::Quadratic.apply(&s);
        // (1, s1, s2, s1², s1·s2, s2²)
        assert_eq!(f.as_slice(), &[1.0, 2.0, 3.0, 4.0, 6.0, 9.0]);
    }

    #[test]
    fn constant_term_flag() {
        assert!(!FeatureMap::Identity.is_constant_term(0));
        assert!(FeatureMap::Affine.is_constant_term(0));
        assert!(!FeatureMap::Affine.is_constant_term(1));
        assert!(FeatureMap::Quadratic.is_constant_term(0));
    }
}

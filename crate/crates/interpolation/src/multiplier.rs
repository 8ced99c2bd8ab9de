//! Plastic multiplier interpolation: site layout and integration weights.

use crate::{InterpolationError, QuadratureRule, SubdomainData};

/// Where plastic multipliers live on the element.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MultiplierKind {
    /// One multiplier per quadrature point; plastic admissibility is
    /// enforced pointwise at the integration sites.
    GaussPointwise,
    /// One multiplier per strain subdomain; admissibility is enforced in
    /// subdomain average. A single subdomain gives one element-level
    /// yield condition.
    PiecewiseConstant,
}

/// Multiplier site layout. Each basis function is the indicator of its site
/// (non-negative by construction); `weights` carries the parent quadrature
/// weight per Gauss site or the physical area per subdomain.
#[derive(Debug, Clone)]
pub struct MultiplierBasis {
    pub kind: MultiplierKind,
    pub weights: Vec<f64>,
}

impl MultiplierBasis {
    pub fn n_sites(&self) -> usize {
        self.weights.len()
    }
}

/// Build the multiplier layout from the element quadrature (pointwise kind)
/// or from the strain partition (piecewise-constant kind, which requires
/// one).
pub fn multiplier_basis(
    kind: MultiplierKind,
    rule: &QuadratureRule,
    partition: Option<&SubdomainData>,
) -> Result<MultiplierBasis, InterpolationError> {
    let weights = match kind {
        MultiplierKind::GaussPointwise => rule.weights.clone(),
        MultiplierKind::PiecewiseConstant => {
            let data = partition.ok_or(InterpolationError::InvalidPartition { n_d: 0 })?;
            data.volumes.clone()
        }
    };
    debug_assert!(weights.iter().all(|w| *w > 0.0), "multiplier weights must be positive");
    Ok(MultiplierBasis { kind, weights })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{gauss_rule, pian_sumihara_basis, subdomain_partition, StrainBasis};
    use approx::assert_relative_eq;
    use nalgebra::Vector2;

    #[test]
    fn test_two_by_two_gauss_gives_four_unit_sites() {
        let basis =
            multiplier_basis(MultiplierKind::GaussPointwise, &gauss_rule(2), None).unwrap();
        assert_eq!(basis.n_sites(), 4);
        for w in &basis.weights {
            assert_relative_eq!(*w, 1.0);
        }
    }

    #[test]
    fn test_single_subdomain_gives_scalar_element_yield() {
        let coords = vec![
            Vector2::new(0.0, 0.0),
            Vector2::new(3.0, 0.0),
            Vector2::new(3.0, 2.0),
            Vector2::new(0.0, 2.0),
        ];
        let stress = pian_sumihara_basis(&coords).unwrap();
        let StrainBasis::PiecewiseConstant(data) =
            subdomain_partition(&coords, 1, &stress).unwrap()
        else {
            panic!("expected piecewise-constant basis");
        };
        let basis =
            multiplier_basis(MultiplierKind::PiecewiseConstant, &gauss_rule(2), Some(&data))
                .unwrap();
        assert_eq!(basis.n_sites(), 1);
        assert_relative_eq!(basis.weights[0], 6.0, epsilon = 1e-12);
    }

    #[test]
    fn test_piecewise_without_partition_is_rejected() {
        assert!(multiplier_basis(MultiplierKind::PiecewiseConstant, &gauss_rule(2), None)
            .is_err());
    }
}

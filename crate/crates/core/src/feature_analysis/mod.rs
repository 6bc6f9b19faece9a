//! Feature scaling, feature-importance estimators (F-test, k-NN mutual
//! information, random forest), and k-means clustering with elbow selection.

mod importance;
mod kmeans;
mod scaling;

pub use importance::{
    f_test_importance, mutual_info_importance, random_forest_importance, ImportanceMethod,
    ImportanceReport,
};
pub use kmeans::{elbow_select, fit_kmeans, ClusterResult};
pub use scaling::{minmax_scale, FeatureScaling};

use crate::error::Result;
use crate::rom_ml::MixingClassLabel;

/// Bin a normalized degree of mixing into its quartile class.
pub fn label_mixing_class(sigma_sq: f64) -> Result<MixingClassLabel> {
    MixingClassLabel::from_degree_of_mixing(sigma_sq)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mixing_labels_are_monotone_and_total() {
        let mut prev = 0;
        for i in 0..=100 {
            let label = label_mixing_class(i as f64 / 100.0).unwrap().0;
            assert!(label >= prev);
            prev = label;
        }
        assert_eq!(label_mixing_class(0.1).unwrap().0, 1);
        assert_eq!(label_mixing_class(0.25).unwrap().0, 2);
        assert_eq!(label_mixing_class(1.0).unwrap().0, 4);
        assert!(label_mixing_class(-0.1).is_err());
    }
}

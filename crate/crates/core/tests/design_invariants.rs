use proptest::prelude::*;
use sparsearray::beamform::output_sinr;
use sparsearray::design::{design_with_covariances, DesignConfig, DesignMode};
use sparsearray::oracle::{enumerate_covariances, OracleConfig};
use sparsearray::scene::{build_covariances, GridGeometry, Scenario, SourceSpec};

prop_compose! {
    fn scenario()(
        desired in (30.0..150.0f64, 0.0..15.0f64),
        interferers in prop::collection::vec((0.0..180.0f64, 5.0..25.0f64), 1..5),
    ) -> Scenario {
        let mut sources = vec![SourceSpec::desired(desired.0, desired.1)];
        sources.extend(interferers.into_iter().map(|(t, p)| SourceSpec::interferer(t, p)));
        Scenario::new(GridGeometry::linear(10, 0.5).unwrap(), sources).unwrap()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn reported_sinr_is_recomputable_and_bounded_by_enumeration(
        scenario in scenario(),
        perturbed in any::<bool>(),
    ) {
        let cov = build_covariances(&scenario).unwrap();
        let config = DesignConfig {
            p: 5,
            mu_upper: 3.0,
            epsilon: 0.05,
            mode: if perturbed { DesignMode::PerturbedNfsdr } else { DesignMode::Nfsdr },
            ..DesignConfig::default()
        };
        let result = design_with_covariances(&cov, &config).unwrap();
        prop_assert_eq!(result.support.len(), 5);
        let recomputed = output_sinr(&result.beamformer().unwrap(), &cov).unwrap();
        prop_assert!((recomputed - result.sinr_db).abs() <= 1e-6);

        let best = enumerate_covariances(&cov, 5, &[], &OracleConfig::default()).unwrap().best.sinr_db;
        prop_assert!(best >= result.sinr_db - 1e-9);
    }
}

use std::collections::BTreeMap;

use qeeg::clinical::ResponseLabel;
use qeeg::features::FeatureSpec;
use qeeg::ml::{three_fold_cv, Dataset, Hyperparams, ModelKind};
use qeeg::pipeline::{synthetic_table, FeatureConfig};
use qeeg::signal::{Session, TrialArm};
use qeeg::stats::{baseline_comparisons, change_comparisons, group_compare, CompareOptions, Comparison, Selector};
use qeeg::synth::{gen_cohort, CohortSpec, SynthSpec};

fn template(duration_s: f64) -> SynthSpec {
    SynthSpec {
        duration_s,
        quantum_uv: 0.001,
        ..SynthSpec::default()
    }
}

#[test]
fn large_strong_cohort_flags_theta_nearly_always() {
    let seeds = 20;
    let mut flagged = 0;
    for seed in 0..seeds {
        let spec = CohortSpec {
            n_per_group: [(TrialArm::AKet05, 200)].into_iter().collect(),
            responder_fraction: [(TrialArm::AKet05, 0.5)].into_iter().collect(),
            theta_deficit: 0.5,
            post_alpha_gain: 1.5,
            template: template(4.0),
            seed,
            ..CohortSpec::default()
        };
        let table = synthetic_table(&gen_cohort(&spec).unwrap(), &FeatureConfig::default()).unwrap();
        let cmps: Vec<Comparison> = baseline_comparisons()
            .into_iter()
            .filter(|c| c.family() == "baseline A" && c.feature().starts_with("rel_theta"))
            .collect();
        let res = group_compare(&table, &cmps, &CompareOptions::default()).unwrap();
        if res.iter().any(|r| r.reject_primary) {
            flagged += 1;
        }
    }
    assert!(flagged as f64 >= 0.95 * seeds as f64, "{flagged}/{seeds}");
}

#[test]
fn table_shaped_cohort_end_to_end() {
    let spec = CohortSpec {
        theta_deficit: 0.5,
        post_alpha_gain: 1.5,
        template: template(16.0),
        seed: 42,
        ..CohortSpec::default()
    };
    let cohort = gen_cohort(&spec).unwrap();
    let table = synthetic_table(&cohort, &FeatureConfig::default()).unwrap();
    assert_eq!(table.rows.len(), 110);
    assert_eq!(table.columns.len(), 40);

    let opts = CompareOptions::default();
    let base = group_compare(&table, &baseline_comparisons(), &opts).unwrap();
    assert_eq!(base.len(), 64);
    assert!(base
        .iter()
        .any(|r| r.family == "baseline A+B" && r.feature.starts_with("rel_theta") && r.reject_primary));

    let change = group_compare(&table, &change_comparisons(), &opts).unwrap();
    assert_eq!(change.len(), 72);
    let responders = |prefix: &str| {
        change
            .iter()
            .filter(|r| r.family == "change ketamine responders" && r.feature.starts_with(prefix))
            .collect::<Vec<_>>()
    };
    assert!(responders("rel_lowalpha").iter().any(|r| r.reject_primary && r.effect.unwrap() > 0.0));
    assert!(responders("cord_theta").iter().any(|r| r.reject_primary && r.effect.unwrap() < 0.0));

    let ds = Dataset::from_table(&table, Session::Baseline, &[TrialArm::AKet05, TrialArm::BKet02], &FeatureSpec::ThetaLowAlpha.names()).unwrap();
    assert_eq!(ds.len(), 37);
    let rep = three_fold_cv(&ds, ModelKind::SvmRbf, &Hyperparams::default(), 1, 10).unwrap();
    assert!(rep.mean_sd.accuracy.mean.unwrap() >= 75.0);
}

#[test]
fn empty_responder_set_is_insufficient() {
    let spec = CohortSpec {
        n_per_group: [(TrialArm::AKet05, 6), (TrialArm::BKet02, 6)].into_iter().collect(),
        responder_fraction: BTreeMap::new(),
        template: template(4.0),
        ..CohortSpec::default()
    };
    let table = synthetic_table(&gen_cohort(&spec).unwrap(), &FeatureConfig::default()).unwrap();
    let res = group_compare(&table, &baseline_comparisons(), &CompareOptions::default()).unwrap();
    assert!(res.iter().all(|r| r.p.is_none() && !r.reject_primary));
    let paired = vec![Comparison::SignedRank {
        family: "x".into(),
        feature: "rel_theta_Fp1".into(),
        group: Selector::new("responders", &[TrialArm::AKet05], Some(ResponseLabel::Responder)),
        before: Session::Baseline,
        after: Session::Post240,
    }];
    assert!(group_compare(&table, &paired, &CompareOptions::default()).unwrap()[0].p.is_none());
}

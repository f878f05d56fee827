use palpation::contact::ModelKind;
use palpation::estimator::VariantTag;
use palpation::harness::{
    parse_kv_report, render_kv, render_table, run_campaign, run_experiment, strip_timestamp, ExperimentConfig,
    Preset,
};

fn drm(preset: Preset) -> ExperimentConfig {
    ExperimentConfig::for_preset(preset, ModelKind::Drm)
}

#[test]
fn identical_config_and_seed_give_identical_reports() {
    let cfg = drm(Preset::S1).with_seed(7);
    let a = run_campaign(&cfg, &Preset::ALL).unwrap();
    let b = run_campaign(&cfg.clone(), &Preset::ALL).unwrap();
    let (ka, kb) = (render_kv(&a, 1), render_kv(&b, 2));
    assert_ne!(ka, kb);
    assert_eq!(strip_timestamp(&ka), strip_timestamp(&kb));
    assert_eq!(render_table(&a), render_table(&b));

    let c = run_campaign(&cfg.with_seed(8), &Preset::ALL).unwrap();
    assert_ne!(strip_timestamp(&ka), strip_timestamp(&render_kv(&c, 1)));
}

#[test]
fn report_round_trips_through_the_key_value_file() {
    let c = run_campaign(&drm(Preset::S1), &[Preset::S1, Preset::S2]).unwrap();
    let kv = render_kv(&c, 1_700_000_000);
    let back = parse_kv_report(&kv).unwrap();
    assert_eq!(render_kv(&back, 1_700_000_000), kv);
    assert_eq!(render_table(&back), render_table(&c));
}

#[test]
fn report_includes_all_four_variants() {
    let c = run_campaign(&drm(Preset::S1), &[Preset::S1, Preset::S2]).unwrap();
    let r = c.report(Preset::S1).unwrap();
    let tags: Vec<_> = r.variants.iter().map(|v| v.tag).collect();
    assert_eq!(tags, VariantTag::ALL);
    let table = render_table(&c);
    let kv = render_kv(&c, 0);
    for tag in VariantTag::ALL {
        assert!(table.contains(tag.as_str()), "table lacks {tag}");
        assert!(kv.contains(&format!("run.S1.{tag}.force_mse")), "kv lacks {tag}");
    }
    assert_eq!(c.detections.len(), 4);
}

#[test]
fn stiffness_ordering_holds_across_seeds() {
    for seed in 1..=5 {
        let c = run_campaign(&drm(Preset::S1).with_seed(seed), &Preset::ALL).unwrap();
        for tag in [VariantTag::M3, VariantTag::M4] {
            let k: Vec<f64> = Preset::ALL
                .iter()
                .map(|&p| c.report(p).unwrap().variant(tag).unwrap().last().stiffness)
                .collect();
            assert!(k.windows(2).all(|w| w[0] < w[1]), "seed {seed} {tag}: {k:?}");
        }
    }
}

#[test]
fn noise_free_matched_run_lands_on_truth() {
    let mut cfg = drm(Preset::S1).noise_free();
    cfg.variants = vec![VariantTag::M3];
    let r = run_experiment(&cfg).unwrap();
    let (kappa, lambda) = r.truth.coefficients();
    for cp in &r.variant(VariantTag::M3).unwrap().checkpoints {
        let ek = (cp.stiffness - kappa).abs() / kappa;
        let el = (cp.damping - lambda).abs() / lambda;
        assert!(ek <= 1e-3 && el <= 1e-3, "t = {}: κ err {ek:e}, λ err {el:e}", cp.t);
    }
}

#[test]
fn presets_carry_the_reference_truths() {
    let kv = [(2.03, 0.093), (2.49, 0.118), (3.53, 0.160), (4.19, 0.121)];
    let drm_truth = [(0.742, 0.038), (1.01, 0.052), (1.70, 0.081), (2.18, 0.069)];
    for (i, p) in Preset::ALL.into_iter().enumerate() {
        assert_eq!(p.law(ModelKind::Kv).coefficients(), kv[i]);
        assert_eq!(p.law(ModelKind::Drm).coefficients(), drm_truth[i]);
        assert_eq!(drm(p).plant.truth_model.coefficients(), drm_truth[i]);
    }
}

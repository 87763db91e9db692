use std::time::Instant;
use csi_core::harness::*;
use csi_core::synth::NoiseTier;

#[test]
fn dbg_mid_bench3() {
    let mut cfg = RunConfig::benchmark();
    cfg.seeds = vec![0];
    cfg.dataset.n_subjects = 20;
    cfg.dataset.segments_per_subject = 30;
    cfg.sweep_windows = vec![];
    let t0 = Instant::now();
    let report = run_bench(&cfg, true).unwrap();
    println!("bench took {:?}", t0.elapsed());
    for (method, tiers) in &report.method_tier {
        let row: Vec<String> = NoiseTier::ALL.iter()
            .map(|t| tiers.get(t.name()).map(|m| format!("{:5.1}", m.mean*100.0)).unwrap_or("-".into()))
            .collect();
        println!("{method:16} clean/t1/t2/t3: {}", row.join(" / "));
    }
    if let Some(film) = &report.film_ablation {
        let row: Vec<String> = NoiseTier::ALL.iter()
            .map(|t| film.get(t.name()).map(|m| format!("{:5.1}", m.mean*100.0)).unwrap_or("-".into()))
            .collect();
        println!("{:16} clean/t1/t2/t3: {}", "csinet_no_film", row.join(" / "));
    }
    println!("val acc: {:?}", report.val_accuracy);
    for c in &report.curves { println!("  epoch {} loss {:.3} val {:.3}", c.epoch, c.train_loss, c.val_accuracy); }
    println!("per-band clean: {:?}", report.per_band_clean.iter().map(|(b,a,_)| (*b, (a*100.0).round())).collect::<Vec<_>>());
}

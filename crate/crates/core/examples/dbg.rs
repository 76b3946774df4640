// Scratch diagnostics; not part of the deliverable surface.
use locfuse::harness::{
    default_bs_subsets, run_experiment, summarize, sweep_bs_count, sweep_sampling, BiasMode,
    NoiseParams, Scenario,
};
use locfuse::{IsConfig, Method};

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let trials: usize = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(100);
    let grid: usize = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(500);

    let cfg = IsConfig {
        num_samples: 1000,
        grid_nx: grid,
        grid_ny: grid,
        ..IsConfig::default()
    };

    for bias in [BiasMode::Unbiased, BiasMode::Biased] {
        let mut scn =
            Scenario::three_station_hex(50.0, 10.0, 1.0, &NoiseParams::default(), bias).unwrap();
        scn.num_trials = trials;
        scn.master_seed = 20260810;
        let t0 = std::time::Instant::now();
        let records = run_experiment(&scn, &Method::ALL, &cfg).unwrap();
        let dt = t0.elapsed().as_secs_f64();
        println!("== {} ({} trials, grid {grid}, {dt:.1}s) ==", bias.label(), trials);
        for m in Method::ALL {
            let s = summarize(&records, m).unwrap();
            println!(
                "  {:<10} mean={:.3} p50={:.3} p80={:.3} p90={:.3}",
                m.label(),
                s.mean,
                s.p50,
                s.p80,
                s.p90
            );
        }
        let mean_iters: f64 = records.iter().map(|r| r.solver_iters as f64).sum::<f64>()
            / records.len() as f64;
        let flagged = records.iter().filter(|r| r.flagged).count();
        println!("  mean OW iters {mean_iters:.1}, flagged {flagged}");
        // Sample of OW weights.
        if let Some(w) = records[0].weights_ow.as_ref() {
            println!("  trial0 w_ow = {:?}", w.as_slice());
        }
    }

    if args.get(3).map(|s| s == "sweep").unwrap_or(false) {
        let mut scn = Scenario::three_station_hex(
            50.0,
            10.0,
            1.0,
            &NoiseParams::default(),
            BiasMode::Unbiased,
        )
        .unwrap();
        scn.num_trials = trials;
        scn.master_seed = 4242;
        let t0 = std::time::Instant::now();
        let sweep = sweep_sampling(&scn, &[100, 200, 500, 1000, 2000], &cfg).unwrap();
        println!("== sampling sweep ({:.1}s) ==", t0.elapsed().as_secs_f64());
        println!("  counts {:?}", sweep.counts);
        println!("  IS mean {:?}", sweep.importance_mean);
        println!("  US mean {:?}", sweep.uniform_mean);

        let mut scn = Scenario::three_station_hex(
            50.0,
            10.0,
            1.0,
            &NoiseParams::default(),
            BiasMode::Biased,
        )
        .unwrap();
        scn.num_trials = trials;
        scn.master_seed = 777;
        let t0 = std::time::Instant::now();
        let res = sweep_bs_count(&scn, &default_bs_subsets(3), &cfg).unwrap();
        println!("== bs sweep ({:.1}s) ==", t0.elapsed().as_secs_f64());
        for r in &res {
            println!(
                "  subset {:?}: mean={:.3} p50={:.3} p80={:.3}",
                r.stations, r.summary.mean, r.summary.p50, r.summary.p80
            );
        }
    }
}

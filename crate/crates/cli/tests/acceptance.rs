//! Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any
//! criterion fails. `RBFIHMM_ACCEPTANCE=2,3` restricts the run to a subset;
//! `RBFIHMM_UCI_EEG=<csv>` switches criterion 6 to the real seizure data.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use nalgebra::DMatrix;
use proptest::prelude::*;
use proptest::test_runner::{Config as PropConfig, TestRunner};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use sha2::{Digest, Sha256};

use rbfihmm::emission::{accumulate_stats_for, sample_posterior_emission, Emission, EmissionHyperprior, FeatureMap, RbfLayer};
use rbfihmm::eval::{matched_state_accuracy, spectral_features, SpectralEstimator};
use rbfihmm::hdp::{
    backward_messages, count_transitions, gibbs_sweep, marginal_log_likelihood, sample_beta, sample_prior_state,
    sample_transition_rows, ChainState, EmissionFamily, GibbsConfig, LogLikTable, RbfFamily, StickyHdpPrior,
};
use rbfihmm::math::{BasisFunction, CompositeKernelParams, DistanceMetric};
use rbfihmm::rng::seeded;
use rbfihmm::sampling::{sample_dirichlet, standard_normal_matrix};
use rbfihmm::series::{LaggedData, TimeSeries};
use rbfihmm_cli::commands::classify::{ClassificationArtifact, CLASSIFICATION_FILE};
use rbfihmm_cli::commands::eval::{Metrics, METRICS_FILE};
use rbfihmm_cli::config::{ClassifierKind, ClassifierModel};
use rbfihmm_cli::{execute, Command, RunConfig};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn mean_and_stderr(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (var / n).sqrt())
}

/// Stderr of a correlated chain's mean from non-overlapping batch means.
fn batch_stderr(v: &[f64], batches: usize) -> f64 {
    let size = v.len() / batches;
    let means: Vec<f64> = (0..batches).map(|b| v[b * size..(b + 1) * size].iter().sum::<f64>() / size as f64).collect();
    mean_and_stderr(&means).1
}

fn run_commands(cfg: &RunConfig, commands: &[Command]) {
    for &c in commands {
        execute(c, cfg).unwrap_or_else(|e| panic!("{c:?} failed: {e}"));
    }
}

fn synthetic_study() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let mut rows = Vec::new();
    for seed in 0..5u64 {
        let mut cfg = RunConfig::default();
        cfg.run.seed = seed;
        cfg.run.out = dir.path().join(format!("seed{seed}")).to_string_lossy().into_owned();
        run_commands(&cfg, &[Command::Synth, Command::Fit, Command::Eval]);
        let m: Metrics = serde_json::from_str(&std::fs::read_to_string(Path::new(&cfg.run.out).join(METRICS_FILE)).unwrap()).unwrap();
        let (rbf, ar) = (&m.segmentation["rbf"], &m.segmentation["ar"]);
        println!(
            "    seed {seed}: rbf acc {:.3} mse {:.2e} K+ {} | ar acc {:.3} mse {:.2e} K+ {}",
            rbf.z_accuracy, rbf.transition_mse, rbf.occupied_states, ar.z_accuracy, ar.transition_mse, ar.occupied_states
        );
        rows.push((rbf.z_accuracy, rbf.transition_mse, ar.z_accuracy, ar.transition_mse));
    }
    let ra = median(rows.iter().map(|r| r.0).collect());
    let rm = median(rows.iter().map(|r| r.1).collect());
    let aa = median(rows.iter().map(|r| r.2).collect());
    let am = median(rows.iter().map(|r| r.3).collect());
    let pass = ra >= 0.85 && rm <= 1e-2 && ra - aa >= 0.2 && am >= 10.0 * rm;
    outcome(
        pass,
        format!("median rbf acc {ra:.3} (>=0.85) mse {rm:.2e} (<=1e-2); ar acc {aa:.3} mse {am:.2e}; gap {:.3} (>=0.2), ratio {:.1}x (>=10x)", ra - aa, am / rm),
    )
}

/// Gaussian-decay RBF mean and Gaussian log density written out directly.
fn oracle_log_density(y: f64, window: &[f64], centers: &[Vec<f64>], eta: f64, w: &[f64], var: f64) -> f64 {
    let mean: f64 = centers
        .iter()
        .zip(w)
        .map(|(c, wj)| {
            let d = window.iter().zip(c).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
            wj * (-d / eta).exp()
        })
        .sum();
    -0.5 * (2.0 * std::f64::consts::PI * var).ln() - 0.5 * (y - mean).powi(2) / var
}

fn messages_vs_enumeration() -> Outcome {
    let mut rng = seeded(2);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let n = rng.random_range(1..=6usize);
        let l = rng.random_range(1..=3usize);
        let r = rng.random_range(1..=2usize);
        let j = rng.random_range(1..=3usize);
        let values: Vec<f64> = (0..n + r).map(|_| normal(&mut rng)).collect();
        let data = LaggedData::build(&TimeSeries::univariate(values.clone()), r).unwrap();
        struct St {
            centers: Vec<Vec<f64>>,
            eta: f64,
            w: Vec<f64>,
            var: f64,
        }
        let states: Vec<St> = (0..l)
            .map(|_| St {
                centers: (0..j).map(|_| (0..r).map(|_| normal(&mut rng)).collect()).collect(),
                eta: rng.random_range(0.5..2.0),
                w: (0..j).map(|_| 2.0 * rng.random::<f64>() - 1.0).collect(),
                var: rng.random_range(0.1..2.0),
            })
            .collect();
        let emissions: Vec<Emission> = states
            .iter()
            .map(|s| {
                let layer = RbfLayer::new(s.centers.clone(), BasisFunction::gaussian(s.eta), DistanceMetric::Euclidean).unwrap();
                Emission::rbf(layer, DMatrix::from_row_slice(1, j, &s.w), DMatrix::from_element(1, 1, s.var)).unwrap()
            })
            .collect();
        let beta = sample_dirichlet(&vec![1.0; l], &mut rng).unwrap();
        let pi: Vec<Vec<f64>> = (0..l).map(|_| sample_dirichlet(&vec![1.0; l], &mut rng).unwrap()).collect();

        let table = LogLikTable::compute(&data, &emissions).unwrap();
        let msgs = backward_messages(&table, &pi).unwrap();
        let lib = marginal_log_likelihood(&table, &msgs, &beta);

        // window i holds observations i+r-1 down to i, target is i+r
        let ll: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                let window: Vec<f64> = (0..r).map(|k| values[i + r - 1 - k]).collect();
                states.iter().map(|s| oracle_log_density(values[i + r], &window, &s.centers, s.eta, &s.w, s.var)).collect()
            })
            .collect();
        let mut total = 0.0;
        for code in 0..l.pow(n as u32) {
            let path: Vec<usize> = (0..n).map(|t| (code / l.pow(t as u32)) % l).collect();
            let mut p = beta[path[0]] * ll[0][path[0]].exp();
            for t in 1..n {
                p *= pi[path[t - 1]][path[t]] * ll[t][path[t]].exp();
            }
            total += p;
        }
        let rel = ((lib - total.ln()) / total.ln()).abs();
        worst = worst.max(rel);
    }
    outcome(worst <= 1e-8, format!("50 random models, worst relative log-likelihood error {worst:.2e} (<=1e-8)"))
}

fn conjugacy() -> Outcome {
    let mut rng = seeded(3);
    let n = 1000;
    let center = vec![vec![0.0]];
    let layer = RbfLayer::new(center, BasisFunction::gaussian(1.0), DistanceMetric::Euclidean).unwrap();
    let x: Vec<f64> = (0..n).map(|_| 2.0 * normal(&mut rng)).collect();
    let phi: Vec<f64> = x.iter().map(|v| (-v.abs()).exp()).collect();
    let y: Vec<f64> = phi.iter().map(|p| 3.0 * p + 0.1 * normal(&mut rng)).collect();
    let data = LaggedData::from_parts(y.clone(), x, 1, 1).unwrap();
    let ridge = 1e-3;
    let prior = EmissionHyperprior::new(3.0, DMatrix::from_element(1, 1, 0.01), ridge).unwrap();
    let idx: Vec<usize> = (0..n).collect();
    let stats = accumulate_stats_for(&data, &idx, &FeatureMap::Rbf(layer), &prior).unwrap();

    let syy: f64 = y.iter().map(|v| v * v).sum();
    let syp: f64 = y.iter().zip(&phi).map(|(a, b)| a * b).sum();
    let spp: f64 = phi.iter().map(|v| v * v).sum::<f64>() + ridge;
    let w_ridge = syp / spp;
    let sigma_mean = (syy - syp * syp / spp + 0.01) / (3.0 + n as f64 - 2.0);

    let draws = 10_000;
    let (mut ws, mut ss) = (Vec::with_capacity(draws), Vec::with_capacity(draws));
    for _ in 0..draws {
        let (w, s) = sample_posterior_emission(&stats, &prior, &mut rng).unwrap();
        ws.push(w[(0, 0)]);
        ss.push(s[(0, 0)]);
    }
    let (wm, wse) = mean_and_stderr(&ws);
    let (sm, sse) = mean_and_stderr(&ss);
    let pass = (wm - w_ridge).abs() <= 0.05
        && (wm - w_ridge).abs() <= 3.0 * wse
        && (w_ridge - 3.0).abs() <= 0.05
        && (sm - sigma_mean).abs() <= 3.0 * sse
        && (sm - 0.01).abs() <= 0.005;
    outcome(
        pass,
        format!(
            "W mean {wm:.4} vs ridge {w_ridge:.4} (|d|={:.1e}, 3se={:.1e}, truth 3); Sigma mean {sm:.5} vs closed form {sigma_mean:.5} (3se={:.1e})",
            (wm - w_ridge).abs(),
            3.0 * wse,
            3.0 * sse
        ),
    )
}

/// y_0 = 0, then y_{t+1} = W φ(y_t) + ε under the state's emission.
fn regenerate<R: Rng>(state: &ChainState, n: usize, rng: &mut R) -> LaggedData {
    let mut y = vec![0.0];
    let mut phi = vec![0.0; 2];
    let mut mean = [0.0];
    for t in 0..n {
        let e = &state.emissions[state.z[t]];
        e.predict_into(&[y[t]], &mut phi, &mut mean).unwrap();
        let sd = e.noise_cov()[(0, 0)].sqrt();
        y.push(mean[0] + sd * normal(rng));
    }
    LaggedData::build(&TimeSeries::univariate(y), 1).unwrap()
}

fn geweke() -> Outcome {
    let n = 20;
    let prior = StickyHdpPrior {
        gamma: 1.0,
        alpha: 1.0,
        lambda: 2.0,
        truncation: 2,
        emission: EmissionHyperprior::new(6.0, DMatrix::from_element(1, 1, 1.0), 1.0).unwrap(),
    };
    let basis = BasisFunction::gaussian(1.0);
    let layer = RbfLayer::new(vec![vec![-1.0], vec![1.0]], basis, DistanceMetric::Euclidean).unwrap();
    let maps = vec![FeatureMap::Rbf(layer.clone()), FeatureMap::Rbf(layer)];
    let family = EmissionFamily::Rbf(RbfFamily {
        neurons: 2,
        basis,
        metric: DistanceMetric::Euclidean,
        center_spread: 1.0,
        prototype_mean: vec![0.0],
        prototype_cov: DMatrix::identity(1, 1),
    });
    let config = GibbsConfig { center_resampling: false, ..GibbsConfig::default() };
    let draws = 100_000;
    let mut rng = seeded(4);

    let (mut mc_n, mut mc_s) = (Vec::with_capacity(draws), Vec::with_capacity(draws));
    for _ in 0..draws {
        let s = sample_prior_state(n, &prior, &maps, &mut rng).unwrap();
        mc_n.push(s.counts[0][0] as f64);
        mc_s.push(s.emissions[0].noise_cov()[(0, 0)]);
    }

    let (mut sc_n, mut sc_s) = (Vec::with_capacity(draws), Vec::with_capacity(draws));
    let mut state = sample_prior_state(n, &prior, &maps, &mut rng).unwrap();
    let mut data = regenerate(&state, n, &mut rng);
    for _ in 0..draws {
        state = gibbs_sweep(&state, &data, &prior, &family, &config, &mut rng).unwrap();
        data = regenerate(&state, n, &mut rng);
        sc_n.push(state.counts[0][0] as f64);
        sc_s.push(state.emissions[0].noise_cov()[(0, 0)]);
    }

    let mut lines = Vec::new();
    let mut pass = true;
    for (name, mc, sc) in [("E[n11]", &mc_n, &sc_n), ("E[Sigma]", &mc_s, &sc_s)] {
        let (m1, se1) = mean_and_stderr(mc);
        let m2 = sc.iter().sum::<f64>() / sc.len() as f64;
        let se2 = batch_stderr(sc, 100);
        let tol = 3.0 * (se1 * se1 + se2 * se2).sqrt();
        pass &= (m1 - m2).abs() <= tol;
        lines.push(format!("{name}: prior {m1:.4} vs Gibbs {m2:.4} (|d|={:.4}, 3se={tol:.4})", (m1 - m2).abs()));
    }
    outcome(pass, lines.join("; "))
}

/// Worst per-pair RMS (over networks) relative error of the normalized
/// output covariance against the composite kernel.
fn kernel_error(j: usize, params: CompositeKernelParams, points: &[f64], networks: usize, weight_draws: usize, seed: u64) -> f64 {
    let mut rng = seeded(seed);
    let p = points.len();
    let origin = points.iter().position(|v| *v == 0.0).expect("grid contains the origin");
    let k0 = params.value(&[0.0], &[0.0]).unwrap();
    let mut sq = vec![vec![0.0; p]; p];
    for _ in 0..networks {
        let centers: Vec<Vec<f64>> = (0..j).map(|_| vec![params.sigma_c2.sqrt() * normal(&mut rng)]).collect();
        let layer = RbfLayer::new(centers, BasisFunction::squared_exponential(params.eta), DistanceMetric::Euclidean).unwrap();
        let map = FeatureMap::Rbf(layer);
        let mut phi = DMatrix::zeros(p, j);
        for (i, y) in points.iter().enumerate() {
            phi.row_mut(i).copy_from_slice(&map.features(&[*y]).unwrap());
        }
        let w = standard_normal_matrix(j, weight_draws, &mut rng) / (j as f64).sqrt();
        let f = &phi * w;
        let cov = &f * f.transpose() / weight_draws as f64;
        for a in 0..p {
            for b in 0..p {
                let mc = cov[(a, b)] / cov[(origin, origin)];
                let exact = params.value(&[points[a]], &[points[b]]).unwrap() / k0;
                sq[a][b] += (mc / exact - 1.0).powi(2);
            }
        }
    }
    sq.iter().flatten().map(|s| (s / networks as f64).sqrt()).fold(0.0, f64::max)
}

fn composite_kernel() -> Outcome {
    let params = CompositeKernelParams::new(1.0, 2.0).unwrap();
    let points = [-1.0, -0.5, 0.0, 0.5, 1.0];
    let e500 = kernel_error(500, params, &points, 100, 10_000, 5);
    let e50 = kernel_error(50, params, &points, 100, 10_000, 6);
    outcome(e500 <= 0.05 && e500 < e50, format!("worst relative error J=500: {:.2}% (<=5%), J=50: {:.2}%", 100.0 * e500, 100.0 * e50))
}

fn classification_means(cfg: &RunConfig) -> BTreeMap<String, Vec<(f64, Option<f64>)>> {
    run_commands(cfg, &[Command::Classify]);
    let art: ClassificationArtifact = serde_json::from_str(&std::fs::read_to_string(Path::new(&cfg.run.out).join(CLASSIFICATION_FILE)).unwrap()).unwrap();
    art.models.into_iter().map(|m| (m.name, m.means.iter().map(|f| (f.fraction, f.mean_balanced_accuracy)).collect())).collect()
}

fn at(means: &[(f64, Option<f64>)], fraction: f64) -> Option<f64> {
    means.iter().find(|(f, _)| *f == fraction).and_then(|(_, a)| *a)
}

fn classification() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = RunConfig::default();
    cfg.run.out = dir.path().to_string_lossy().into_owned();
    match std::env::var("RBFIHMM_UCI_EEG") {
        Ok(path) if !path.is_empty() => {
            cfg.classify.dataset = path;
            cfg.classify.fractions = vec![0.05];
            let rbf = |name: &str, neurons, metric| ClassifierModel { name: name.into(), kind: ClassifierKind::Rbf, neurons, metric };
            cfg.classify.models = vec![
                rbf("rbf-10", 10, DistanceMetric::Euclidean),
                rbf("rbf-50", 50, DistanceMetric::Euclidean),
                rbf("rbf-100", 100, DistanceMetric::Euclidean),
                rbf("rbf-250", 250, DistanceMetric::Euclidean),
                rbf("rbf-250-manhattan", 250, DistanceMetric::Manhattan),
                ClassifierModel { name: "ar".into(), kind: ClassifierKind::Linear, neurons: 0, metric: DistanceMetric::Euclidean },
            ];
            let means = classification_means(&cfg);
            let get = |m: &str| at(&means[m], 0.05).unwrap_or(f64::NAN);
            let ladder: Vec<f64> = ["rbf-10", "rbf-50", "rbf-100", "rbf-250"].iter().map(|m| get(m)).collect();
            let monotone = ladder.windows(2).all(|w| w[1] >= w[0]);
            let (e250, m250, ar) = (get("rbf-250"), get("rbf-250-manhattan"), get("ar"));
            let pass = e250 >= 0.75 && (0.45..=0.60).contains(&ar) && monotone && m250 < e250;
            outcome(
                pass,
                format!("UCI data, 5% training: rbf-250 {e250:.3} (>=0.75), ar {ar:.3} (in [0.45,0.60]), centers {ladder:.3?} non-decreasing {monotone}, manhattan-250 {m250:.3} < euclidean"),
            )
        }
        _ => {
            let means = classification_means(&cfg);
            let ample = *cfg.classify.fractions.iter().fold(&0.0, |a, b| if b > a { b } else { a });
            let rbf = at(&means["rbf"], ample);
            let ar = at(&means["ar"], ample);
            let five = at(&means["rbf"], 0.05);
            let pass = rbf.is_some_and(|a| a >= 0.9);
            outcome(
                pass,
                format!(
                    "synthetic two-class AR fallback (no UCI data): rbf {} at fraction {ample} (>=0.9); ar {}; rbf at 0.05: {}",
                    fmt_opt(rbf),
                    fmt_opt(ar),
                    fmt_opt(five)
                ),
            )
        }
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|a| format!("{a:.3}")).unwrap_or_else(|| "skipped".into())
}

fn hash_outputs(dir: &Path, names: &[&str]) -> Vec<String> {
    names.iter().map(|n| hex::encode(Sha256::digest(std::fs::read(dir.join(n)).unwrap()))).collect()
}

fn determinism() -> Outcome {
    let root = tempfile::tempdir().unwrap();
    let files = [
        "series.csv",
        "truth.csv",
        "fit_rbf.json",
        "fit_ar.json",
        "states_rbf.csv",
        "trace_rbf.csv",
        "classification.json",
        "sweep_rbf.csv",
        "thresholds_rbf.csv",
        "histograms.json",
        "table1.csv",
        "table2.csv",
        METRICS_FILE,
    ];
    let mut hashes = Vec::new();
    for run in 0..2 {
        let mut cfg = RunConfig::default();
        cfg.run.seed = 11;
        cfg.run.out = root.path().join(format!("run{run}")).to_string_lossy().into_owned();
        cfg.synth.length = 1500;
        cfg.sampler.sweeps = 40;
        cfg.sampler.burn_in = 20;
        cfg.classify.fractions = vec![0.2, 0.8];
        cfg.classify.repeats = 3;
        run_commands(&cfg, &[Command::Synth, Command::Fit, Command::Classify, Command::Eval, Command::Report]);
        hashes.push(hash_outputs(Path::new(&cfg.run.out), &files));
    }
    let same = hashes[0] == hashes[1];
    outcome(same, format!("{} artifacts re-run with seed 11, identical sha256: {same} (metrics {}…)", files.len(), &hashes[0][files.len() - 1][..16]))
}

fn property_suites() -> Outcome {
    let mut results = Vec::new();
    let cases = 1000;
    let mut check = |name: &str, f: &dyn Fn(&mut TestRunner) -> Result<(), String>| {
        let mut runner = TestRunner::new(PropConfig { cases, failure_persistence: None, ..PropConfig::default() });
        let r = f(&mut runner);
        results.push((name.to_string(), r));
    };
    let pair = (1usize..8).prop_flat_map(|n| (prop::collection::vec(-10.0f64..10.0, n), prop::collection::vec(-10.0f64..10.0, n), prop::collection::vec(-10.0f64..10.0, n)));

    check("distance axioms", &|r| {
        r.run(&pair, |(a, b, c)| {
            for m in [DistanceMetric::Euclidean, DistanceMetric::Manhattan] {
                let ab = m.distance(&a, &b).unwrap();
                prop_assert!(ab >= 0.0);
                prop_assert!((ab - m.distance(&b, &a).unwrap()).abs() < 1e-12);
                prop_assert_eq!(m.distance(&a, &a).unwrap(), 0.0);
                prop_assert!(ab <= m.distance(&a, &c).unwrap() + m.distance(&c, &b).unwrap() + 1e-9);
            }
            Ok(())
        })
        .map_err(|e| e.to_string())
    });
    check("simplex constraints", &|r| {
        r.run(&(prop::collection::vec(1e-6f64..50.0, 1..12), any::<u64>()), |(conc, seed)| {
            let d = sample_dirichlet(&conc, &mut seeded(seed)).unwrap();
            prop_assert!(d.iter().all(|v| *v >= 0.0 && v.is_finite()));
            prop_assert!((d.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            Ok(())
        })
        .map_err(|e| e.to_string())
    });
    check("row-stochasticity", &|r| {
        r.run(&(any::<u64>(), 1usize..6, 0.0f64..50.0), |(seed, l, lambda)| {
            let mut rng = seeded(seed);
            let z: Vec<usize> = (0..30).map(|_| rng.random_range(0..l)).collect();
            let counts = count_transitions(&z, l).unwrap();
            let beta = sample_dirichlet(&vec![1.0 / l as f64; l], &mut rng).unwrap();
            let beta = sample_beta(&counts, &beta, 1.0, 1.0, lambda, Some(z[0]), &mut rng).unwrap();
            prop_assert!((beta.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            for row in sample_transition_rows(&beta, &counts, 1.0, lambda, &mut rng).unwrap() {
                prop_assert!(row.iter().all(|p| *p >= 0.0));
                prop_assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            }
            Ok(())
        })
        .map_err(|e| e.to_string())
    });
    check("permutation-matching oracle", &|r| {
        r.run(&(any::<u64>(), 1usize..5, 1usize..5, 1usize..40), |(seed, l, k, n)| {
            let mut rng = seeded(seed);
            let inferred: Vec<usize> = (0..n).map(|_| rng.random_range(0..l)).collect();
            let truth: Vec<usize> = (0..n).map(|_| rng.random_range(0..k)).collect();
            let m = matched_state_accuracy(&inferred, &truth).unwrap();
            prop_assert!((m.accuracy - brute_force_matching(&inferred, &truth, l, k)).abs() < 1e-12);
            Ok(())
        })
        .map_err(|e| e.to_string())
    });
    check("spectral-feature invariances", &|r| {
        r.run(&(any::<u64>(), 1e-3f64..1e3, 64usize..300), |(seed, scale, n)| {
            let mut rng = seeded(seed);
            let x: Vec<f64> = (0..n).map(|_| normal(&mut rng)).collect();
            let y: Vec<f64> = x.iter().map(|v| v * scale).collect();
            let a = spectral_features(&x, 173.61, SpectralEstimator::Periodogram).unwrap();
            let b = spectral_features(&y, 173.61, SpectralEstimator::Periodogram).unwrap();
            prop_assert_eq!(a.fundamental_frequency, b.fundamental_frequency);
            prop_assert!((a.spectral_entropy - b.spectral_entropy).abs() < 1e-9);
            prop_assert!((a.alpha_band_energy - b.alpha_band_energy).abs() < 1e-9);
            prop_assert!((0.0..=1.0 + 1e-12).contains(&a.spectral_entropy));
            Ok(())
        })
        .map_err(|e| e.to_string())
    });
    let failed: Vec<String> = results.iter().filter_map(|(n, r)| r.as_ref().err().map(|e| format!("{n}: {e}"))).collect();
    let names: Vec<&str> = results.iter().map(|(n, _)| n.as_str()).collect();
    if failed.is_empty() {
        outcome(true, format!("{} suites x {cases} cases: {}", results.len(), names.join(", ")))
    } else {
        outcome(false, failed.join("; "))
    }
}

/// Best accuracy over every injective relabeling of inferred states.
fn brute_force_matching(inferred: &[usize], truth: &[usize], l: usize, k: usize) -> f64 {
    fn go(i: usize, l: usize, k: usize, used: &mut Vec<bool>, map: &mut Vec<Option<usize>>, inferred: &[usize], truth: &[usize], best: &mut usize) {
        if i == l {
            let hits = inferred.iter().zip(truth).filter(|(a, b)| map[**a] == Some(**b)).count();
            *best = (*best).max(hits);
            return;
        }
        map[i] = None;
        go(i + 1, l, k, used, map, inferred, truth, best);
        for t in 0..k {
            if !used[t] {
                used[t] = true;
                map[i] = Some(t);
                go(i + 1, l, k, used, map, inferred, truth, best);
                used[t] = false;
            }
        }
        map[i] = None;
    }
    let mut best = 0;
    go(0, l, k, &mut vec![false; k], &mut vec![None; l], inferred, truth, &mut best);
    best as f64 / inferred.len() as f64
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("synthetic segmentation study", synthetic_study),
        ("messages vs path enumeration", messages_vs_enumeration),
        ("conjugate emission posterior", conjugacy),
        ("Geweke joint-distribution test", geweke),
        ("composite kernel Monte Carlo", composite_kernel),
        ("few-shot classification", classification),
        ("deterministic artifacts", determinism),
        ("property suites", property_suites),
    ];
    let only: Option<Vec<usize>> = std::env::var("RBFIHMM_ACCEPTANCE")
        .ok()
        .filter(|s| !s.is_empty())
        .map(|s| s.split(',').filter_map(|x| x.trim().parse().ok()).collect());
    let mut failures = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let id = i + 1;
        if only.as_ref().is_some_and(|o| !o.contains(&id)) {
            continue;
        }
        let start = Instant::now();
        let o = f();
        if !o.pass {
            failures += 1;
        }
        println!(
            "criterion {id} {}: {name}: {} [{:.1}s]",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail,
            start.elapsed().as_secs_f64()
        );
    }
    if failures > 0 {
        println!("acceptance: {failures} criteria failed");
        std::process::exit(1);
    }
    println!("acceptance: all selected criteria passed");
}

//! Acceptance criteria. Each criterion prints one PASS/FAIL line; the target
//! fails if any criterion does.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use sociallearn::analysis::{
    confusion_summary, decide, frozen_ratio_drift, martingale_diagnostics, max_belief_classify,
    memoryless_comparison, Decision, Threshold,
};
use sociallearn::graph::Network;
use sociallearn::learning::{
    adapt, combine_full, combine_partial, fill_memory_aware, run, step_standalone, BeliefState,
    DirectLink, Filling, Priors, ScenarioConfig, Strategy, TrajectoryRecord, TxBelief,
};
use sociallearn::models::{expand_cardinality_pattern, LikelihoodFamily, Observation};
use sociallearn_cli::config::{GraphSpec, IdentifiabilitySpec, LikelihoodSpec, PriorSpec};
use sociallearn_cli::{Canned, ExperimentConfig, Scenario};

/// Frozen seeds for the stochastic criteria.
const SEEDS: [u64; 50] = [
    1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15, 16, 17, 18, 19, 20, 21, 22, 23, 24, 25, 26,
    27, 28, 29, 30, 31, 32, 33, 34, 35, 36, 37, 38, 39, 40, 41, 42, 43, 44, 45, 46, 47, 48, 49, 50,
];
/// Seeds that must pass out of the fifty.
const REQUIRED: usize = 48;
/// Seed for the randomized property instances.
const PROPERTY_SEED: u64 = 20_240_601;
const LONG_RUN_SEED: u64 = SEEDS[0];

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

fn seeded(passes: usize, what: &str) -> Verdict {
    verdict(
        passes >= REQUIRED,
        format!("{passes}/{} seeds {what}", SEEDS.len()),
    )
}

fn run_scenario(scenario: &Scenario, strategy: Strategy, stride: usize) -> TrajectoryRecord {
    let mut rc = scenario.run_config(strategy, 0);
    rc.stride = stride;
    run(&rc, &scenario.net, &scenario.models).unwrap()
}

fn canned(c: Canned, seed: u64) -> Scenario {
    Scenario::resolve(c.config(seed)).unwrap()
}

/// Counts seeds for which `check` holds, running them in parallel.
fn count_seeds(check: impl Fn(u64) -> bool + Sync) -> usize {
    SEEDS.par_iter().filter(|&&s| check(s)).count()
}

fn criterion_1() -> Verdict {
    let start = Instant::now();
    let s = canned(Canned::Panel3, SEEDS[0]);
    run_scenario(&s, Strategy::PartialMemoryAware, 1);
    let elapsed = start.elapsed();
    let passes = count_seeds(|seed| {
        let s = canned(Canned::Panel3, seed);
        let rec = run_scenario(&s, Strategy::PartialMemoryAware, 2000);
        rec.final_beliefs()
            .iter()
            .all(|b| (b[0] - 0.2).abs() <= 0.02)
    });
    let fast = elapsed < Duration::from_secs(5);
    verdict(
        passes >= REQUIRED && fast,
        format!("{passes}/50 seeds with every mu(theta_tx) in 0.2 ± 0.02; one run {elapsed:.2?}"),
    )
}

fn criterion_2() -> Verdict {
    let passes = count_seeds(|seed| {
        let s = canned(Canned::Panel2, seed);
        let rec = run_scenario(&s, Strategy::PartialMemoryAware, 2000);
        rec.final_beliefs()
            .iter()
            .all(|b| b[s.config.theta_tx] <= 1e-3)
    });
    seeded(passes, "with max mu(theta_tx) <= 1e-3")
}

fn criterion_3() -> Verdict {
    let passes = count_seeds(|seed| {
        let s = canned(Canned::Panel4, seed);
        assert_eq!(s.structure.cardinality(0), 0);
        let rec = run_scenario(&s, Strategy::PartialMemoryAware, 2000);
        rec.final_beliefs().iter().all(|b| b[0] >= 0.98)
    });
    seeded(passes, "with min mu(theta0) >= 0.98")
}

fn criterion_4() -> Verdict {
    let mut worst: f64 = 0.0;
    let mut exact = true;
    for seed in SEEDS {
        let s = canned(Canned::Panel3, seed);
        assert_eq!(
            s.structure.cardinalities(),
            expand_cardinality_pattern(&[(10, 4), (5, 8), (5, 2)])
        );
        let summary =
            confusion_summary(&s.priors, &s.structure, &s.net.perron_vector().unwrap()).unwrap();
        worst = worst.max((summary.j - 4.0).abs());
        exact &= summary.rho == summary.j;
    }
    verdict(
        worst <= 1e-9 && exact,
        format!("max |J - 4| = {worst:.1e}, rho == J bitwise: {exact}"),
    )
}

/// Random positive priors, one row per agent.
fn random_priors(seed: u64, agents: usize, hypotheses: usize) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..agents)
        .map(|_| {
            let row: Vec<f64> = (0..hypotheses)
                .map(|_| rng.random_range(0.02..1.0))
                .collect();
            let s: f64 = row.iter().sum();
            row.into_iter().map(|x| x / s).collect()
        })
        .collect()
}

fn criterion_5() -> Verdict {
    // Flat priors keep the preserved ratios at one; random priors make them
    // nontrivial.
    let drifts: Vec<f64> = SEEDS
        .par_iter()
        .flat_map_iter(|&seed| {
            [Canned::Panel2, Canned::Panel3]
                .into_iter()
                .flat_map(move |c| {
                    [false, true].into_iter().map(move |random| {
                        let mut config = c.config(seed);
                        if random {
                            config.priors = PriorSpec::Explicit(random_priors(seed, 20, 10));
                        }
                        let s = Scenario::resolve(config).unwrap();
                        let rec = run_scenario(&s, Strategy::PartialMemoryAware, 1);
                        frozen_ratio_drift(&rec, &s.structure, false)
                    })
                })
        })
        .collect();
    let worst = drifts.iter().copied().fold(0.0, f64::max);
    verdict(
        worst <= 1e-9,
        format!(
            "max relative ratio drift {worst:.1e} over {} trajectories",
            drifts.len()
        ),
    )
}

fn criterion_6() -> Verdict {
    let tau = Threshold::uniform(10, 0.01).unwrap();
    let passes = count_seeds(|seed| {
        let false_tx = canned(Canned::Panel2, seed);
        let rec = run_scenario(&false_tx, Strategy::PartialMemoryAware, 2000);
        let rejects = rec
            .final_beliefs()
            .iter()
            .all(|b| decide(b[1], tau) == Decision::Reject);
        let true_tx = canned(Canned::Panel3, seed);
        let rec = run_scenario(&true_tx, Strategy::PartialMemoryAware, 2000);
        let accepts = rec
            .final_beliefs()
            .iter()
            .all(|b| decide(b[0], tau) == Decision::Accept);
        rejects && accepts
    });
    seeded(
        passes,
        "with every agent rejecting a false and accepting a true theta_tx",
    )
}

fn criterion_7() -> Verdict {
    let tau = Threshold::uniform(10, 0.01).unwrap();
    let passes = count_seeds(|seed| {
        let s = canned(Canned::Panel3, seed);
        let rec = run_scenario(&s, Strategy::PartialMemoryAware, 2000);
        let finals = rec.final_beliefs();
        let small: Vec<usize> = (0..20)
            .filter(|&k| s.structure.cardinality(k) == 2)
            .collect();
        !small.is_empty()
            && small.iter().all(|&k| {
                max_belief_classify(&finals[k], 0) == Decision::Reject
                    && decide(finals[k][0], tau) == Decision::Accept
            })
    });
    seeded(
        passes,
        "where max-belief rejects and the threshold accepts for every J_k = 2 agent",
    )
}

fn criterion_8() -> Verdict {
    let passes = count_seeds(|seed| {
        let s = canned(Canned::Panel3, seed);
        let rec = run_scenario(&s, Strategy::Standalone, 2000);
        let last = rec.last();
        (0..20).all(|k| {
            let j = s.structure.cardinality(k) as f64;
            let lb = &last.log_beliefs[k];
            let near = (lb[0].exp() - 1.0 / (1.0 + j)).abs() <= 0.02;
            let equal = s
                .structure
                .indistinguishable(k)
                .iter()
                .all(|&t| (lb[t] - lb[0]).exp_m1().abs() <= 1e-9);
            near && equal
        })
    });
    seeded(
        passes,
        "with every mu(theta0) in 1/(1+J_k) ± 0.02 and I_k tied to theta0",
    )
}

fn fooling_config(seed: u64) -> ExperimentConfig {
    let mut c = Canned::Panel2.config(seed);
    c.likelihood = LikelihoodSpec::Gaussian {
        means: vec![0.0, 0.5, 6.0],
    };
    c.identifiability = IdentifiabilitySpec::Derived;
    c.graph = GraphSpec::ErdosRenyi {
        agents: 20,
        p: 1.0 / 3.0,
        seed: None,
    };
    c.theta0 = 0;
    c.theta_tx = 1;
    c
}

fn criterion_9() -> Verdict {
    let s = Scenario::resolve(fooling_config(SEEDS[0])).unwrap();
    let v = s.net.perron_vector().unwrap();
    let cmp = memoryless_comparison(&s.models, &v, 0, 1, 1_000_000, 99).unwrap();
    let separated = cmp.d_tx < cmp.d_fict - 3.0 * cmp.d_fict_se;
    let passes = count_seeds(|seed| {
        let s = Scenario::resolve(fooling_config(seed)).unwrap();
        let ml = run_scenario(&s, Strategy::PartialMemoryless, 2000);
        let ma = run_scenario(&s, Strategy::PartialMemoryAware, 2000);
        ml.observation_digest == ma.observation_digest
            && ml.final_beliefs().iter().all(|b| b[1] >= 0.95)
            && ma.final_beliefs().iter().all(|b| b[1] <= 1e-3)
    });
    verdict(
        separated && passes >= REQUIRED,
        format!(
            "d_tx = {:.4} < d_fict = {:.4} - 3 * {:.1e}: {separated}; {passes}/50 seeds fooled memoryless, memory-aware rejects",
            cmp.d_tx, cmp.d_fict, cmp.d_fict_se
        ),
    )
}

const MEANS: [f64; 3] = [0.0, 0.5, 1.5];
const ROWS: [[f64; 3]; 3] = [[0.6, 0.3, 0.1], [0.2, 0.5, 0.3], [0.3, 0.3, 0.4]];

struct Instance {
    net: Network,
    models: Vec<LikelihoodFamily>,
    config: ScenarioConfig,
}

/// Random small instance on a strongly connected graph: a directed ring
/// plus random extra links, positive self-weights, columns normalised.
fn random_instance(rng: &mut ChaCha8Rng) -> Instance {
    let k = rng.random_range(1..=5);
    let h = rng.random_range(2..=4);
    let mut a = vec![vec![0.0; k]; k];
    for j in 0..k {
        a[j][j] = rng.random_range(0.05..1.0);
        a[(j + 1) % k][j] += rng.random_range(0.05..1.0);
        for row in a.iter_mut() {
            if rng.random_bool(0.3) {
                row[j] += rng.random_range(0.05..1.0);
            }
        }
        let s: f64 = a.iter().map(|r| r[j]).sum();
        for row in a.iter_mut() {
            row[j] /= s;
        }
    }
    let discrete = rng.random_bool(0.5);
    let models = (0..k)
        .map(|_| {
            if discrete {
                LikelihoodFamily::discrete(
                    (0..h)
                        .map(|_| ROWS[rng.random_range(0..3)].to_vec())
                        .collect(),
                )
                .unwrap()
            } else {
                LikelihoodFamily::gaussian((0..h).map(|_| MEANS[rng.random_range(0..3)]).collect())
                    .unwrap()
            }
        })
        .collect();
    let priors = (0..k)
        .map(|_| {
            let row: Vec<f64> = (0..h).map(|_| rng.random_range(0.05..1.0)).collect();
            let s: f64 = row.iter().sum();
            row.into_iter().map(|x| x / s).collect()
        })
        .collect();
    let strategy = Strategy::ALL[rng.random_range(0..4)];
    let mut config = ScenarioConfig::new(
        rng.random_range(0..h),
        rng.random_range(0..h),
        strategy,
        Priors::new(priors).unwrap(),
    );
    config.horizon = rng.random_range(1..=200);
    config.seed = rng.random();
    config.record_intermediate = true;
    Instance {
        net: Network::from_matrix(&a).unwrap(),
        models,
        config,
    }
}

fn criterion_10() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(PROPERTY_SEED);
    let mut simplex = 0.0f64;
    let mut identity = true;
    let mut signs = true;
    for _ in 0..100 {
        let mut inst = random_instance(&mut rng);
        let st =
            sociallearn::models::derive_identifiability(&inst.models, inst.config.theta0).unwrap();
        let v = inst.net.perron_vector().unwrap();
        for strategy in Strategy::ALL {
            inst.config.strategy = strategy;
            let rec = run(&inst.config, &inst.net, &inst.models).unwrap();
            for snap in rec.beliefs.iter().chain(&rec.intermediate) {
                for row in &snap.log_beliefs {
                    let sum: f64 = row.iter().map(|x| x.exp()).sum();
                    simplex = simplex.max((sum - 1.0).abs());
                    if row.iter().any(|x| x.is_nan() || *x == f64::INFINITY) {
                        simplex = f64::INFINITY;
                    }
                }
            }
            if strategy == Strategy::PartialMemoryAware {
                let tx = inst.config.theta_tx;
                for snap in &rec.intermediate {
                    for psi in &snap.log_beliefs {
                        let own = TxBelief::from_log_belief(psi, tx);
                        let mut out = vec![0.0; psi.len()];
                        fill_memory_aware(own, psi, own, tx, &mut out).unwrap();
                        identity &= out == *psi;
                    }
                }
                let (diag, _) = martingale_diagnostics(&rec, &st, &v, None).unwrap();
                signs &= diag.m.iter().all(|&m| m <= 0.0);
                signs &= diag.n.iter().flatten().all(|&n| n <= 0.0);
            }
        }
    }

    // One long run with the transmitted hypothesis true.
    let s = canned(Canned::Panel3, LONG_RUN_SEED);
    let mut rc = s.run_config(Strategy::PartialMemoryAware, 0);
    rc.horizon = 10_000;
    rc.record_intermediate = true;
    let rec = run(&rc, &s.net, &s.models).unwrap();
    let (_, report) =
        martingale_diagnostics(&rec, &s.structure, &s.net.perron_vector().unwrap(), None).unwrap();
    let eligible: Vec<_> = report
        .ratio
        .iter()
        .filter(|r| !s.structure.distinguishable(r.agent).is_empty())
        .collect();
    let within = eligible.iter().filter(|r| r.within_3se).count();
    let terminal = eligible.iter().map(|r| r.terminal).fold(0.0, f64::max);
    let long_ok = within == eligible.len() && terminal <= 1e-2;

    verdict(
        simplex <= 1e-12 && identity && signs && long_ok,
        format!(
            "100 instances: simplex error {simplex:.1e}, self-identity exact {identity}, m/n <= 0 {signs}; \
             long run: {within}/{} ratio increments within 3 SE, max terminal {terminal:.1e}",
            eligible.len()
        ),
    )
}

struct Hand {
    a: Vec<Vec<f64>>,
    priors: Vec<Vec<f64>>,
    models: Vec<LikelihoodFamily>,
    obs: Vec<Observation>,
    tx: usize,
}

fn hand_instances() -> Vec<Hand> {
    vec![
        Hand {
            a: vec![vec![0.7, 0.4], vec![0.3, 0.6]],
            priors: vec![vec![0.5, 0.3, 0.2], vec![0.2, 0.2, 0.6]],
            models: vec![
                LikelihoodFamily::gaussian(vec![0.0, 1.0, 2.0]).unwrap(),
                LikelihoodFamily::gaussian(vec![0.0, 0.0, -1.5]).unwrap(),
            ],
            obs: vec![Observation::Real(0.3), Observation::Real(-0.8)],
            tx: 1,
        },
        Hand {
            a: vec![vec![0.5, 0.5], vec![0.5, 0.5]],
            priors: vec![vec![1.0 / 3.0; 3], vec![0.1, 0.6, 0.3]],
            models: vec![
                LikelihoodFamily::discrete(vec![
                    vec![0.6, 0.3, 0.1],
                    vec![0.2, 0.5, 0.3],
                    vec![0.6, 0.3, 0.1],
                ])
                .unwrap(),
                LikelihoodFamily::discrete(vec![
                    vec![0.25, 0.75, 0.0],
                    vec![0.5, 0.25, 0.25],
                    vec![0.1, 0.1, 0.8],
                ])
                .unwrap(),
            ],
            obs: vec![Observation::Symbol(2), Observation::Symbol(1)],
            tx: 0,
        },
        Hand {
            a: vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            priors: vec![vec![0.45, 0.45, 0.1], vec![0.3, 0.3, 0.4]],
            models: vec![
                LikelihoodFamily::gaussian(vec![3.0, -1.0, 0.5]).unwrap(),
                LikelihoodFamily::gaussian(vec![0.0, 2.0, 2.0]).unwrap(),
            ],
            obs: vec![Observation::Real(4.2), Observation::Real(1.1)],
            tx: 2,
        },
    ]
}

fn lik(fam: &LikelihoodFamily, obs: Observation, t: usize) -> f64 {
    match (fam, obs) {
        (LikelihoodFamily::Gaussian { means }, Observation::Real(x)) => {
            (-0.5 * (x - means[t]).powi(2)).exp() / (2.0 * std::f64::consts::PI).sqrt()
        }
        (LikelihoodFamily::Discrete { table }, Observation::Symbol(s)) => table[t][s],
        _ => unreachable!(),
    }
}

fn normalized(v: Vec<f64>) -> Vec<f64> {
    let s: f64 = v.iter().sum();
    v.into_iter().map(|x| x / s).collect()
}

/// Plain-arithmetic iteration of one strategy.
fn hand_oracle(h: &Hand, strategy: Strategy) -> Vec<Vec<f64>> {
    let psi: Vec<Vec<f64>> = (0..2)
        .map(|k| {
            normalized(
                (0..3)
                    .map(|t| h.priors[k][t] * lik(&h.models[k], h.obs[k], t))
                    .collect(),
            )
        })
        .collect();
    let tx = h.tx;
    let hat = |l: usize, k: usize| -> Vec<f64> {
        (0..3)
            .map(|t| match strategy {
                Strategy::Full => psi[l][t],
                _ if t == tx => psi[l][tx],
                Strategy::PartialMemoryless => (1.0 - psi[l][tx]) / 2.0,
                _ => psi[k][t] * (1.0 - psi[l][tx]) / (1.0 - psi[k][tx]),
            })
            .collect()
    };
    if strategy == Strategy::Standalone {
        return psi;
    }
    (0..2)
        .map(|k| {
            let mut out = vec![1.0; 3];
            for l in 0..2 {
                let v = hat(l, k);
                for t in 0..3 {
                    out[t] *= v[t].powf(h.a[l][k]);
                }
            }
            normalized(out)
        })
        .collect()
}

fn hand_library(h: &Hand, strategy: Strategy) -> Vec<Vec<f64>> {
    let net = Network::from_matrix(&h.a).unwrap();
    let mut state = BeliefState::from_priors(&Priors::new(h.priors.clone()).unwrap());
    if strategy == Strategy::Standalone {
        step_standalone(&mut state, &h.obs, &h.models).unwrap();
    } else {
        adapt(&mut state, &h.obs, &h.models).unwrap();
        match strategy {
            Strategy::Full => combine_full(&mut state, &net),
            Strategy::PartialMemoryless => {
                combine_partial(&mut state, &net, Filling::Memoryless, h.tx, &mut DirectLink)
                    .unwrap()
            }
            _ => combine_partial(
                &mut state,
                &net,
                Filling::MemoryAware,
                h.tx,
                &mut DirectLink,
            )
            .unwrap(),
        }
    }
    (0..2).map(|k| state.mu(k)).collect()
}

fn criterion_11() -> Verdict {
    let mut worst: f64 = 0.0;
    for h in hand_instances() {
        for strategy in Strategy::ALL {
            let want = hand_oracle(&h, strategy);
            let got = hand_library(&h, strategy);
            for k in 0..2 {
                for t in 0..3 {
                    worst = worst.max((want[k][t] - got[k][t]).abs());
                }
            }
        }
    }
    verdict(
        worst <= 1e-12,
        format!("max deviation from the linear-domain oracle {worst:.1e}"),
    )
}

type Criterion = (u8, &'static str, fn() -> Verdict);

fn main() {
    let criteria: [Criterion; 11] = [
        (1, "panel 3 limit, theta_tx true", criterion_1),
        (2, "panel 2 decay, theta_tx false", criterion_2),
        (3, "panel 4 truth, rho = 0", criterion_3),
        (4, "descriptor exactness", criterion_4),
        (5, "conditional-belief preservation", criterion_5),
        (6, "decision-rule dichotomy", criterion_6),
        (7, "max-belief failure", criterion_7),
        (8, "standalone limits", criterion_8),
        (9, "memoryless fooling", criterion_9),
        (10, "property suite", criterion_10),
        (11, "oracle equivalence", criterion_11),
    ];
    let mut failed = 0;
    for (n, name, f) in criteria {
        let v = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| verdict(false, "panicked"));
        println!(
            "criterion {n:>2} {:<4} {name}: {}",
            if v.pass { "PASS" } else { "FAIL" },
            v.detail
        );
        failed += usize::from(!v.pass);
    }
    println!("{} of {} criteria passed", 11 - failed, 11);
    if failed > 0 {
        std::process::exit(1);
    }
}

//! One PASS / FAIL / WARN line per acceptance criterion.

#[path = "../../core/tests/support/dempster.rs"]
mod dempster;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use er_core::belief::{expected_utility, from_mean};
use er_core::scale::{
    common_scale, interview_scale, interview_to_common, questionnaire_scale, transform_from_anchor_rules, AnchorRule,
};
use er_core::{combine, BeliefDistribution, ScaleTransform};
use er_mcda::ingest::interview_frequency_to_mean;
use er_mcda::pipeline::{deviations, evaluate_scenario, render_bundle, Inputs, Scenario, ROOT_DEVIATION_WARNING};
use proptest::prelude::*;
use proptest::test_runner::{Config, TestCaseError, TestRunner};

const CASES: u32 = 1000;

enum Verdict {
    Pass(String),
    Warn(String),
    Fail(String),
}

fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).to_path_buf()
}

fn paper(file: &str) -> PathBuf {
    root().join("../../data/paper").join(file)
}

fn fixture(file: &str) -> csv::Reader<std::fs::File> {
    csv::Reader::from_path(root().join("tests/fixtures").join(file)).unwrap()
}

fn load() -> Inputs {
    Inputs::load(&paper("model.json"), &paper("questionnaires.csv"), &paper("interviews.csv"), 0.0).unwrap()
}

fn ranking() -> Verdict {
    let start = Instant::now();
    let inputs = load();
    let outcome = evaluate_scenario(&inputs, &Scenario::default()).unwrap();
    let _ = render_bundle(&inputs, &outcome);
    let elapsed = start.elapsed();
    let order: Vec<_> = outcome.ranking.iter().map(|r| r.name.as_str()).collect();
    let detail = format!("{} in {:.1} ms", order.join(" > "), elapsed.as_secs_f64() * 1e3);
    if order == ["Medium", "Large", "Small", "Micro"] && elapsed.as_secs_f64() < 1.0 {
        Verdict::Pass(detail)
    } else {
        Verdict::Fail(detail)
    }
}

fn expected_utilities() -> Verdict {
    let inputs = load();
    let scale = common_scale();
    let expected = [("Micro", 0.5903), ("Small", 0.6043), ("Medium", 0.6263), ("Large", 0.6234)];
    let mut worst = 0.0f64;
    let mut parts = Vec::new();
    for (name, want) in expected {
        let v = inputs.model.document.reference_root[name].clone();
        let d = BeliefDistribution::from_rounded(scale.id().clone(), v, 1e-3).unwrap();
        let u = expected_utility(&d, &scale).unwrap().mean_assigned;
        worst = worst.max((u - want).abs());
        parts.push(format!("{name} {u:.4}"));
    }
    let detail = format!("{} (max error {worst:.5})", parts.join(", "));
    if worst <= 5e-4 {
        Verdict::Pass(detail)
    } else {
        Verdict::Fail(detail)
    }
}

fn root_deviation() -> Verdict {
    let inputs = load();
    let outcome = evaluate_scenario(&inputs, &Scenario::default()).unwrap();
    let devs = deviations(&inputs, &outcome);
    let worst = devs.iter().map(|d| d.max_abs()).fold(0.0, f64::max);
    let detail = devs.iter().map(|d| format!("{} {:.4}", d.alternative, d.max_abs())).collect::<Vec<_>>().join(", ");
    if devs.len() == 4 && worst <= ROOT_DEVIATION_WARNING {
        Verdict::Pass(format!("max per-grade deviation {detail}"))
    } else {
        Verdict::Warn(format!("max per-grade deviation {detail} exceeds {ROOT_DEVIATION_WARNING}"))
    }
}

fn mean_to_belief() -> Verdict {
    let q = questionnaire_scale();
    let i = interview_scale();
    let questionnaires: BTreeMap<(String, String), f64> = csv::Reader::from_path(paper("questionnaires.csv"))
        .unwrap()
        .records()
        .map(|r| {
            let r = r.unwrap();
            ((r[0].to_owned(), r[1].to_owned()), r[3].parse().unwrap())
        })
        .collect();
    let mut rows = 0;
    let mut misses = Vec::new();
    for r in fixture("questionnaire_beliefs.csv").records() {
        let r = r.unwrap();
        let mean = questionnaires[&(r[0].to_owned(), r[1].to_owned())];
        let printed: Vec<f64> = (2..7).map(|k| r[k].parse().unwrap()).collect();
        let got = from_mean(mean, &q).unwrap();
        rows += 1;
        if got.beliefs().iter().zip(&printed).any(|(a, b)| (a - b).abs() > 0.015) {
            misses.push(format!("{} {}", &r[0], &r[1]));
        }
    }

    let mut groups: BTreeMap<String, Vec<(String, u64)>> = BTreeMap::new();
    for r in csv::Reader::from_path(paper("interviews.csv")).unwrap().records() {
        let r = r.unwrap();
        groups.entry(r[0].to_owned()).or_default().push((r[1].to_owned(), r[2].parse().unwrap()));
    }
    let mut means = BTreeMap::new();
    for (g, list) in &groups {
        let freqs: Vec<u64> = list.iter().map(|(_, f)| *f).collect();
        for ((c, _), m) in list.iter().zip(interview_frequency_to_mean(&freqs, 3.0).unwrap()) {
            means.insert((g.clone(), c.clone()), m);
        }
    }
    for r in fixture("interview_beliefs.csv").records() {
        let r = r.unwrap();
        let printed: Vec<f64> = (3..6).map(|k| r[k].parse().unwrap()).collect();
        let got = from_mean(means[&(r[0].to_owned(), r[1].to_owned())], &i).unwrap();
        rows += 1;
        if got.beliefs().iter().zip(&printed).any(|(a, b)| (a - b).abs() > 0.015) {
            misses.push(format!("{} {}", &r[0], &r[1]));
        }
    }
    if misses.is_empty() {
        Verdict::Pass(format!("{rows} rows within 0.015"))
    } else {
        Verdict::Fail(format!("{} of {rows} rows outside 0.015: {}", misses.len(), misses.join(", ")))
    }
}

fn frequency_scaling() -> Verdict {
    let mut groups: BTreeMap<String, Vec<(u64, f64)>> = BTreeMap::new();
    let frequencies: BTreeMap<(String, String), u64> = csv::Reader::from_path(paper("interviews.csv"))
        .unwrap()
        .records()
        .map(|r| {
            let r = r.unwrap();
            ((r[0].to_owned(), r[1].to_owned()), r[2].parse().unwrap())
        })
        .collect();
    for r in fixture("interview_beliefs.csv").records() {
        let r = r.unwrap();
        let f = frequencies[&(r[0].to_owned(), r[1].to_owned())];
        groups.entry(r[0].to_owned()).or_default().push((f, r[2].parse().unwrap()));
    }
    let mut rows = 0;
    let mut worst = 0.0f64;
    for list in groups.values() {
        let freqs: Vec<u64> = list.iter().map(|(f, _)| *f).collect();
        for ((_, printed), m) in list.iter().zip(interview_frequency_to_mean(&freqs, 3.0).unwrap()) {
            worst = worst.max((m - printed).abs());
            rows += 1;
        }
    }
    let detail = format!("{rows} rows, max error {worst:.4}");
    if rows == 25 && worst <= 0.02 {
        Verdict::Pass(detail)
    } else {
        Verdict::Fail(detail)
    }
}

fn beliefs(grades: usize) -> impl Strategy<Value = Vec<f64>> {
    (prop::collection::vec(0u32..=4, grades), 0u32..=4).prop_map(|(raw, ign)| {
        let assigned: u32 = raw.iter().sum();
        let total = (assigned + ign).max(1);
        raw.iter().map(|&a| a as f64 / total as f64).collect()
    })
}

fn children(max_children: usize, max_grades: usize) -> impl Strategy<Value = Vec<(Vec<f64>, f64)>> {
    (1..=max_children, 2..=max_grades).prop_flat_map(|(n, g)| {
        let ws = prop::collection::vec(1u32..=10, n).prop_map(|raw| {
            let total: u32 = raw.iter().sum();
            raw.iter().map(|&r| r as f64 / total as f64).collect::<Vec<_>>()
        });
        (prop::collection::vec(beliefs(g), n), ws).prop_map(|(bs, ws)| bs.into_iter().zip(ws).collect::<Vec<_>>())
    })
}

fn fold(cs: &[(Vec<f64>, f64)]) -> BeliefDistribution {
    let ds: Vec<_> = cs.iter().map(|(b, w)| (BeliefDistribution::new("s", b.clone()).unwrap(), *w)).collect();
    let refs: Vec<_> = ds.iter().map(|(d, w)| (d, *w)).collect();
    combine(&refs).unwrap()
}

fn close(a: &[f64], b: &[f64], eps: f64) -> Result<(), TestCaseError> {
    prop_assert_eq!(a.len(), b.len());
    for (x, y) in a.iter().zip(b) {
        prop_assert!((x - y).abs() <= eps, "{:?} vs {:?}", a, b);
    }
    Ok(())
}

fn runner() -> TestRunner {
    TestRunner::new(Config { cases: CASES, failure_persistence: None, ..Config::default() })
}

type Check<'a> = (&'a str, Box<dyn Fn(&mut TestRunner) -> Result<(), String>>);

fn suite(checks: Vec<Check>) -> Verdict {
    let mut failed = Vec::new();
    for (name, check) in &checks {
        if let Err(e) = check(&mut runner()) {
            failed.push(format!("{name}: {e}"));
        }
    }
    if failed.is_empty() {
        Verdict::Pass(format!("{} properties x {CASES} cases", checks.len()))
    } else {
        Verdict::Fail(failed.join("; "))
    }
}

fn er_properties() -> Verdict {
    suite(vec![
        (
            "permutation",
            Box::new(|r| {
                let s = children(6, 5).prop_flat_map(|cs| {
                    let idx: Vec<usize> = (0..cs.len()).collect();
                    (Just(cs), Just(idx).prop_shuffle())
                });
                r.run(&s, |(cs, perm)| {
                    let shuffled: Vec<_> = perm.iter().map(|&i| cs[i].clone()).collect();
                    close(fold(&cs).beliefs(), fold(&shuffled).beliefs(), 1e-9)
                })
                .map_err(|e| e.to_string())
            }),
        ),
        (
            "normalization",
            Box::new(|r| {
                r.run(&children(6, 5), |cs| {
                    let d = fold(&cs);
                    let total: f64 = d.beliefs().iter().sum::<f64>() + d.ignorance();
                    prop_assert!((total - 1.0).abs() <= 1e-9);
                    prop_assert!(d.beliefs().iter().all(|b| (0.0..=1.0).contains(b)));
                    Ok(())
                })
                .map_err(|e| e.to_string())
            }),
        ),
        (
            "consensus",
            Box::new(|r| {
                let s = (2usize..=5).prop_flat_map(|g| (0..g, Just(g), children(6, 2)));
                r.run(&s, |(n, g, cs)| {
                    let mut unit = vec![0.0; g];
                    unit[n] = 1.0;
                    let agreed: Vec<_> = cs.iter().map(|(_, w)| (unit.clone(), *w)).collect();
                    close(fold(&agreed).beliefs(), &unit, 1e-9)
                })
                .map_err(|e| e.to_string())
            }),
        ),
        (
            "zero weight",
            Box::new(|r| {
                r.run(&(children(5, 5), 0usize..5), |(cs, at)| {
                    let g = cs[0].0.len();
                    let mut with = cs.clone();
                    with.insert(at.min(cs.len()), (vec![1.0 / g as f64; g], 0.0));
                    close(fold(&cs).beliefs(), fold(&with).beliefs(), 1e-12)
                })
                .map_err(|e| e.to_string())
            }),
        ),
        (
            "all ignorance",
            Box::new(|r| {
                r.run(&children(6, 5), |cs| {
                    let blank: Vec<_> = cs.iter().map(|(b, w)| (vec![0.0; b.len()], *w)).collect();
                    let d = fold(&blank);
                    prop_assert!(d.beliefs().iter().all(|&b| b == 0.0));
                    prop_assert!((d.ignorance() - 1.0).abs() <= 1e-12);
                    Ok(())
                })
                .map_err(|e| e.to_string())
            }),
        ),
        (
            "dempster oracle",
            Box::new(|r| {
                r.run(&children(3, 3), |cs| {
                    let (want, ignorance) = dempster::combine(&cs);
                    let got = fold(&cs);
                    close(got.beliefs(), &want, 1e-9)?;
                    prop_assert!((got.ignorance() - ignorance).abs() <= 1e-9);
                    Ok(())
                })
                .map_err(|e| e.to_string())
            }),
        ),
    ])
}

fn apply(t: &ScaleTransform, b: &[f64]) -> Vec<f64> {
    t.apply(&BeliefDistribution::new(t.source().clone(), b.to_vec()).unwrap()).unwrap().beliefs().to_vec()
}

fn transforms() -> impl Strategy<Value = ScaleTransform> {
    let stochastic = (2usize..=5, 2usize..=5).prop_flat_map(|(s, t)| {
        prop::collection::vec(prop::collection::vec(0u32..=6, t), s).prop_map(|rows| {
            let m = rows
                .into_iter()
                .map(|mut r| {
                    if r.iter().all(|&x| x == 0) {
                        r[0] = 1;
                    }
                    let total: u32 = r.iter().sum();
                    r.iter().map(|&x| x as f64 / total as f64).collect()
                })
                .collect();
            ScaleTransform::new("s", "t", m).unwrap()
        })
    });
    prop_oneof![stochastic, Just(interview_to_common())]
}

fn transform_properties() -> Verdict {
    let i2c = interview_to_common();
    let average = &i2c.matrix()[1];
    let identity: f64 = average.iter().zip(common_scale().utilities()).map(|(m, u)| m * u).sum();
    let mut verdict = suite(vec![
        (
            "row stochastic",
            Box::new(|r| {
                r.run(&transforms(), |t| {
                    for row in t.matrix() {
                        prop_assert!(row.iter().all(|&x| x >= 0.0));
                        prop_assert!((row.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
                    }
                    Ok(())
                })
                .map_err(|e| e.to_string())
            }),
        ),
        (
            "mass conservation",
            Box::new(|r| {
                let s = transforms().prop_flat_map(|t| {
                    let n = t.source_len();
                    (Just(t), beliefs(n))
                });
                r.run(&s, |(t, b)| {
                    let out = apply(&t, &b);
                    prop_assert!((out.iter().sum::<f64>() - b.iter().sum::<f64>()).abs() <= 1e-12);
                    Ok(())
                })
                .map_err(|e| e.to_string())
            }),
        ),
        (
            "linearity",
            Box::new(|r| {
                let s = transforms().prop_flat_map(|t| {
                    let n = t.source_len();
                    (Just(t), beliefs(n), beliefs(n), 0u32..=8)
                });
                r.run(&s, |(t, a, b, k)| {
                    let alpha = k as f64 / 8.0;
                    let mix: Vec<f64> = a.iter().zip(&b).map(|(x, y)| alpha * x + (1.0 - alpha) * y).collect();
                    let lhs = apply(&t, &mix);
                    let rhs: Vec<f64> =
                        apply(&t, &a).iter().zip(apply(&t, &b)).map(|(x, y)| alpha * x + (1.0 - alpha) * y).collect();
                    close(&lhs, &rhs, 1e-12)
                })
                .map_err(|e| e.to_string())
            }),
        ),
        (
            "anchor rules",
            Box::new(|r| {
                let rules = vec![
                    AnchorRule { anchor: vec![1.0, 0.0, 0.0], target: 0 },
                    AnchorRule { anchor: vec![0.125, 0.125, 0.0], target: 1 },
                    AnchorRule { anchor: vec![0.0, 0.5, 0.0], target: 2 },
                    AnchorRule { anchor: vec![0.0, 0.375, 0.375], target: 3 },
                    AnchorRule { anchor: vec![0.0, 0.0, 1.0], target: 4 },
                ];
                let t = transform_from_anchor_rules(&interview_scale(), &common_scale(), &rules).unwrap();
                r.run(&beliefs(3), |b| {
                    let out = apply(&t, &b);
                    prop_assert!((out.iter().sum::<f64>() - b.iter().sum::<f64>()).abs() <= 1e-12);
                    Ok(())
                })
                .map_err(|e| e.to_string())
            }),
        ),
    ]);
    if (identity - 0.5).abs() > 1e-12 {
        verdict = Verdict::Fail(format!("middle-grade utility {identity} != 0.5"));
    } else if let Verdict::Pass(d) = verdict {
        verdict = Verdict::Pass(format!("{d}; middle-grade utility {identity}"));
    }
    verdict
}

fn main() -> ExitCode {
    type Criterion = (&'static str, fn() -> Verdict);
    let criteria: [Criterion; 7] = [
        ("ranking reproduction", ranking),
        ("expected-utility reproduction", expected_utilities),
        ("root-distribution reproduction (soft)", root_deviation),
        ("mean-to-belief golden suite", mean_to_belief),
        ("frequency-scaling golden suite", frequency_scaling),
        ("ER property suite", er_properties),
        ("transform property suite", transform_properties),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        match check() {
            Verdict::Pass(d) => println!("PASS  {name}: {d}"),
            Verdict::Warn(d) => println!("WARN  {name}: {d}"),
            Verdict::Fail(d) => {
                failed += 1;
                println!("FAIL  {name}: {d}");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criterion(s) failed");
        ExitCode::FAILURE
    }
}

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use hsvp::hierarchy::min_cover;
use hsvp::io::parse_probs;
use hsvp::prob::set_mass;
use hsvp::{Budgets, ClassSet};
use hsvp_cli::{run_check, Context, Instance, Outcome, SetSolver, SolverKind};
use serde_json::Value;
use tempfile::TempDir;

const SEVEN_NODE: &str =
    "1\t0\troot\n2\t1\tleft\n3\t1\tright\n4\t2\tc1\n5\t2\tc2\n6\t3\tc3\n7\t3\tc4\n";
const EXAMPLE_PROBS: &str = "instance_id,y_true,p_0,p_1,p_2,p_3\na,0,0.5,0.1,0.3,0.1\n";

fn hsvp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hsvp"))
        .args(args)
        .env_remove("HSVP_ENUM_GUARD")
        .output()
        .expect("binary runs")
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn records(out: &Output) -> Vec<Value> {
    String::from_utf8_lossy(&out.stdout)
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

#[test]
fn solve_seven_node() {
    let dir = TempDir::new().unwrap();
    let h = write(&dir, "h.tsv", SEVEN_NODE);
    let p = write(&dir, "p.csv", EXAMPLE_PROBS);

    let out = hsvp(&[
        "solve",
        "--hierarchy",
        s(&h),
        "--probs",
        s(&p),
        "--solver",
        "rts",
        "--r",
        "2",
        "--k",
        "2",
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let rec = &records(&out)[0];
    assert_eq!(rec["instance_id"], "a");
    assert_eq!(rec["mass"].as_f64().unwrap(), 0.8);
    assert_eq!(rec["n"], 5);
    assert_eq!(rec["set"], serde_json::json!([0, 2]));

    let out = hsvp(&[
        "solve",
        "--hierarchy",
        s(&h),
        "--probs",
        s(&p),
        "--solver",
        "mvm",
        "--r",
        "1",
        "--k",
        "4",
    ]);
    assert!(out.status.success());
    let rec = &records(&out)[0];
    assert_eq!(rec["set"], serde_json::json!([0, 1, 2, 3]));
    assert_eq!(rec["mass"].as_f64().unwrap(), 1.0);

    let out = hsvp(&[
        "solve",
        "--hierarchy",
        s(&h),
        "--probs",
        s(&p),
        "--solver",
        "kcg",
        "--r",
        "2",
        "--k",
        "2",
    ]);
    let rec = &records(&out)[0];
    assert_eq!(rec["ilp_dims"], serde_json::json!([12, 7]));
}

#[test]
fn conds_input_matches_probs() {
    let dir = TempDir::new().unwrap();
    let h = write(&dir, "h.tsv", SEVEN_NODE);
    let c = write(&dir, "c.tsv", "1\t2\t0.6\n1\t3\t0.4\n2\t4\t0.8333333333333334\n2\t5\t0.16666666666666666\n3\t6\t0.75\n3\t7\t0.25\n");
    for solver in ["mvm", "kcg", "rts", "oracle"] {
        let out = hsvp(&[
            "solve",
            "--hierarchy",
            s(&h),
            "--conds",
            s(&c),
            "--solver",
            solver,
            "--r",
            "2",
            "--k",
            "2",
        ]);
        assert!(out.status.success(), "{solver}");
        assert!(
            (records(&out)[0]["mass"].as_f64().unwrap() - 0.8).abs() < 1e-9,
            "{solver}"
        );
    }
}

#[test]
fn input_errors_exit_2() {
    let dir = TempDir::new().unwrap();
    let h = write(&dir, "h.tsv", SEVEN_NODE);
    let bad = write(
        &dir,
        "bad.csv",
        "instance_id,y_true,p_0,p_1,p_2,p_3\na,0,0.5,0.1,0.4\n",
    );
    let out = hsvp(&[
        "solve",
        "--hierarchy",
        s(&h),
        "--probs",
        s(&bad),
        "--r",
        "2",
        "--k",
        "2",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bad.csv:2"));

    let empty = write(&dir, "empty.csv", "instance_id,y_true,p_0,p_1,p_2,p_3\n");
    let out = hsvp(&["bench", "--hierarchy", s(&h), "--probs", s(&empty)]);
    assert_eq!(out.status.code(), Some(2));

    let out = hsvp(&[
        "gen",
        "--classes",
        "1",
        "--hierarchy",
        s(&dir.path().join("x.tsv")),
        "--probs",
        s(&dir.path().join("x.csv")),
    ]);
    assert_eq!(out.status.code(), Some(2));

    let cyclic = write(&dir, "cyc.tsv", "1\t2\ta\n2\t1\tb\n");
    let p = write(&dir, "p.csv", EXAMPLE_PROBS);
    let out = hsvp(&[
        "solve",
        "--hierarchy",
        s(&cyclic),
        "--probs",
        s(&p),
        "--r",
        "1",
        "--k",
        "1",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn guard_exit_3() {
    let dir = TempDir::new().unwrap();
    let h = write(&dir, "h.tsv", SEVEN_NODE);
    let p = write(&dir, "p.csv", EXAMPLE_PROBS);
    let out = Command::new(env!("CARGO_BIN_EXE_hsvp"))
        .args([
            "solve",
            "--hierarchy",
            s(&h),
            "--probs",
            s(&p),
            "--solver",
            "mvm",
            "--r",
            "2",
            "--k",
            "3",
        ])
        .env("HSVP_ENUM_GUARD", "5")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn gen_small_trees() {
    let dir = TempDir::new().unwrap();
    let (h, p) = (dir.path().join("h.tsv"), dir.path().join("p.csv"));
    let args = [
        "gen",
        "--classes",
        "4",
        "--branching",
        "2",
        "--seed",
        "7",
        "--instances",
        "10",
        "--hierarchy",
        s(&h),
        "--probs",
        s(&p),
    ];
    assert!(hsvp(&args).status.success());
    let first = (std::fs::read(&h).unwrap(), std::fs::read(&p).unwrap());
    assert!(hsvp(&args).status.success());
    assert_eq!(
        first,
        (std::fs::read(&h).unwrap(), std::fs::read(&p).unwrap())
    );

    let tree = hsvp::io::parse_hierarchy(&String::from_utf8(first.0).unwrap(), "h").unwrap();
    assert_eq!(tree.node_count(), 7);
    let rows = parse_probs(&String::from_utf8(first.1).unwrap(), "p", 4).unwrap();
    assert_eq!(rows.len(), 10);
    for r in &rows {
        assert!((r.dist.probs().iter().sum::<f64>() - 1.0).abs() <= 1e-9);
    }

    let args = [
        "gen",
        "--classes",
        "2",
        "--instances",
        "1",
        "--hierarchy",
        s(&h),
        "--probs",
        s(&p),
    ];
    assert!(hsvp(&args).status.success());
    let tree = hsvp::io::parse_hierarchy(&std::fs::read_to_string(&h).unwrap(), "h").unwrap();
    assert_eq!(tree.node_count(), 3);
}

#[test]
fn check_seven_node_dirichlet() {
    let dir = TempDir::new().unwrap();
    let h = write(&dir, "h.tsv", SEVEN_NODE);
    let (gh, p) = (dir.path().join("g.tsv"), dir.path().join("p.csv"));
    let out = hsvp(&[
        "gen",
        "--classes",
        "4",
        "--instances",
        "50",
        "--seed",
        "11",
        "--hierarchy",
        s(&gh),
        "--probs",
        s(&p),
    ]);
    assert!(out.status.success());
    let out = hsvp(&[
        "check",
        "--hierarchy",
        s(&h),
        "--probs",
        s(&p),
        "--r",
        "1,2",
        "--k",
        "1,2,4",
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = String::from_utf8_lossy(&out.stdout);
    assert_eq!(
        text.lines()
            .filter(|l| l.contains("mvm,kcg,rts,oracle agree"))
            .count(),
        6
    );
}

#[test]
fn check_large_tree_skips_mvm() {
    let dir = TempDir::new().unwrap();
    let (h, p) = (dir.path().join("h.tsv"), dir.path().join("p.csv"));
    let out = hsvp(&[
        "gen",
        "--classes",
        "4096",
        "--branching",
        "3",
        "--instances",
        "5",
        "--seed",
        "2",
        "--alpha",
        "0.1",
        "--hierarchy",
        s(&h),
        "--probs",
        s(&p),
    ]);
    assert!(out.status.success());
    let out = hsvp(&[
        "check",
        "--hierarchy",
        s(&h),
        "--probs",
        s(&p),
        "--solver-set",
        "mvm,rts,kcg",
        "--r",
        "3",
        "--k",
        "10",
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("skipping mvm (guard)"), "{text}");
    assert!(text.contains("rts,kcg agree"), "{text}");
}

/// Adds a small error to the mass of every third instance.
struct Corrupted;

impl SetSolver for Corrupted {
    fn name(&self) -> &str {
        "corrupted"
    }

    fn solve(&self, ctx: &Context, inst: &Instance, b: Budgets) -> hsvp::Result<Outcome> {
        let mut o = SolverKind::Rts.solve(ctx, inst, b)?;
        if inst.id.parse::<usize>().unwrap() % 3 == 2 {
            o.prediction.mass += 1e-6;
        }
        Ok(o)
    }
}

#[test]
fn check_detects_corrupted_solver() {
    let cfg = hsvp::synth::GenConfig {
        classes: 6,
        branching: 2.0,
        shape: hsvp::synth::TreeShape::Random,
        alpha: 1.0,
        instances: 10,
        seed: 5,
    };
    let ds = hsvp::synth::generate(&cfg).unwrap();
    let instances: Vec<Instance> = ds
        .rows
        .iter()
        .enumerate()
        .map(|(i, r)| Instance {
            id: i.to_string(),
            y_true: Some(r.y_true),
            hier: hsvp::prob::flat_to_hier(&ds.hierarchy, &r.dist),
            flat: r.dist.clone(),
        })
        .collect();
    let ctx = Context::new(ds.hierarchy, hsvp::DEFAULT_ENUM_GUARD);
    let grid = [Budgets::new(2, 3).unwrap()];
    let mut log = Vec::new();
    let kcg = SolverKind::Kcg;
    let fine = run_check(
        &ctx,
        &[&kcg, &SolverKind::Rts],
        &grid,
        &instances,
        1,
        &mut log,
    )
    .unwrap();
    assert!(fine.is_none());
    let bad = run_check(&ctx, &[&kcg, &Corrupted], &grid, &instances, 2, &mut log)
        .unwrap()
        .expect("disagreement found");
    assert_eq!(bad.instance_id, "2");
    assert_eq!(bad.masses.len(), 2);
    assert!(hsvp_cli::CliError::CheckFailed(hsvp_cli::describe(&bad)).exit_code() == 1);
}

#[test]
fn workers_preserve_order_and_masses() {
    let dir = TempDir::new().unwrap();
    let (h, p) = (dir.path().join("h.tsv"), dir.path().join("p.csv"));
    assert!(hsvp(&[
        "gen",
        "--classes",
        "40",
        "--instances",
        "60",
        "--seed",
        "9",
        "--hierarchy",
        s(&h),
        "--probs",
        s(&p)
    ])
    .status
    .success());
    let base = [
        "solve",
        "--hierarchy",
        s(&h),
        "--probs",
        s(&p),
        "--solver",
        "rts",
        "--r",
        "3",
        "--k",
        "6",
        "--no-timing",
    ];
    let one = hsvp(&base);
    let mut many_args = base.to_vec();
    many_args.extend(["--workers", "4"]);
    let many = hsvp(&many_args);
    assert_eq!(one.stdout, many.stdout);

    let tree = hsvp::io::parse_hierarchy(&std::fs::read_to_string(&h).unwrap(), "h").unwrap();
    let rows = parse_probs(&std::fs::read_to_string(&p).unwrap(), "p", 40).unwrap();
    for (rec, row) in records(&one).iter().zip(&rows) {
        assert_eq!(rec["instance_id"].as_str().unwrap(), row.instance_id);
        let set = ClassSet::new(
            rec["set"]
                .as_array()
                .unwrap()
                .iter()
                .map(|c| c.as_u64().unwrap() as usize),
        );
        assert!((set_mass(&row.dist, &set) - rec["mass"].as_f64().unwrap()).abs() <= 1e-9);
        assert!(set.len() <= 6);
        assert!(min_cover(&tree, &set).unwrap().complexity() <= 3);
    }
}

#[test]
fn bench_top_k_column() {
    let out = hsvp(&[
        "bench",
        "--classes",
        "10",
        "--instances",
        "30",
        "--seed",
        "4",
        "--r",
        "3",
        "--k",
        "3",
        "--solver-set",
        "mvm,kcg,rts,oracle",
        "--no-timing",
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = String::from_utf8_lossy(&out.stdout);
    let csv: Vec<&str> = text
        .lines()
        .skip_while(|l| !l.starts_with("solver,"))
        .skip(1)
        .collect();
    assert_eq!(csv.len(), 4);
    let recalls: Vec<&str> = csv.iter().map(|l| l.split(',').nth(3).unwrap()).collect();
    assert!(recalls.windows(2).all(|w| w[0] == w[1]), "{recalls:?}");
}

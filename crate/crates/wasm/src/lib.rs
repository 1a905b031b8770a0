//! Browser bindings. Each exported function takes plain strings and numbers
//! and returns a JSON document; errors come back as JS exceptions.

use hsvp::eval::{oracle_solve, ORACLE_MAX_CLASSES};
use hsvp::hierarchy::min_cover;
use hsvp::io::{parse_hierarchy, write_hierarchy};
use hsvp::kcg::{solve_kcg_flat, ConflictGraph};
use hsvp::mvm::{build_matrix, solve_mvm};
use hsvp::prob::flat_to_hier;
use hsvp::rts::solve_rts;
use hsvp::synth::{generate, GenConfig, TreeShape};
use hsvp::{Budgets, ClassSet, FlatDistribution, Hierarchy, Prediction};
use serde::Serialize;
use wasm_bindgen::prelude::*;

/// Feasible-family guard for the page; smaller than the command-line
/// default so a slider drag cannot stall the tab.
pub const DEMO_GUARD: u64 = 1_000_000;

#[derive(Serialize)]
struct TreeNode<'a> {
    id: u64,
    parent: Option<u64>,
    name: &'a str,
    lo: usize,
    hi: usize,
}

#[derive(Serialize)]
struct SolverResult {
    solver: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    set: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    cover: Option<Vec<u64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    mass: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    n: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    time_us: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    skipped: Option<String>,
}

impl SolverResult {
    fn from_prediction(solver: &'static str, h: &Hierarchy, p: &Prediction) -> Self {
        let cover = min_cover(h, &p.set)
            .map(|c| c.nodes.iter().map(|&v| h.id(v)).collect())
            .ok();
        SolverResult {
            solver,
            set: Some(p.set.members().to_vec()),
            cover,
            mass: Some(p.mass),
            n: Some(p.n),
            time_us: Some(p.time_us),
            skipped: None,
        }
    }

    fn skipped(solver: &'static str, why: String) -> Self {
        SolverResult {
            solver,
            set: None,
            cover: None,
            mass: None,
            n: None,
            time_us: None,
            skipped: Some(why),
        }
    }
}

#[derive(Serialize)]
struct SolveReport<'a> {
    classes: usize,
    r: usize,
    k: usize,
    tree: Vec<TreeNode<'a>>,
    results: Vec<SolverResult>,
}

fn tree_nodes(h: &Hierarchy) -> Vec<TreeNode<'_>> {
    h.preorder()
        .iter()
        .map(|&v| {
            let iv = h.interval(v);
            TreeNode {
                id: h.id(v),
                parent: h.parent(v).map(|p| h.id(p)),
                name: h.name(v),
                lo: iv.lo,
                hi: iv.hi,
            }
        })
        .collect()
}

fn parse_numbers<T: std::str::FromStr>(text: &str, what: &str) -> Result<Vec<T>, String> {
    text.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse()
                .map_err(|_| format!("{what} {s:?} is not a number"))
        })
        .collect()
}

fn to_json(value: &impl Serialize) -> Result<String, String> {
    serde_json::to_string(value).map_err(|e| e.to_string())
}

/// Runs every solver that fits its guard on one distribution.
pub fn solve_all(hierarchy: &str, probs: &str, r: usize, k: usize) -> Result<String, String> {
    let h = parse_hierarchy(hierarchy, "hierarchy").map_err(|e| e.to_string())?;
    let probs: Vec<f64> = parse_numbers(probs, "probability")?;
    if probs.len() != h.class_count() {
        return Err(format!(
            "{} probabilities for {} classes",
            probs.len(),
            h.class_count()
        ));
    }
    let d = FlatDistribution::new(probs).map_err(|e| e.to_string())?;
    let b = Budgets::new(r, k).map_err(|e| e.to_string())?;
    let mut results = Vec::new();

    match build_matrix(&h, b, DEMO_GUARD) {
        Ok(m) => {
            let p = solve_mvm(&m, &d).map_err(|e| e.to_string())?;
            results.push(SolverResult::from_prediction("mvm", &h, &p));
        }
        Err(e) => results.push(SolverResult::skipped("mvm", e.to_string())),
    }
    let g = ConflictGraph::from_tree(&h);
    results.push(SolverResult::from_prediction(
        "kcg",
        &h,
        &solve_kcg_flat(&h, &g, &d, b).prediction,
    ));
    let p = solve_rts(&h, &flat_to_hier(&h, &d), b).map_err(|e| e.to_string())?;
    results.push(SolverResult::from_prediction("rts", &h, &p));
    if h.class_count() <= ORACLE_MAX_CLASSES {
        let p = oracle_solve(&h, &d, b).map_err(|e| e.to_string())?;
        results.push(SolverResult::from_prediction("oracle", &h, &p));
    } else {
        results.push(SolverResult::skipped(
            "oracle",
            format!("more than {ORACLE_MAX_CLASSES} classes"),
        ));
    }

    to_json(&SolveReport {
        classes: h.class_count(),
        r,
        k,
        tree: tree_nodes(&h),
        results,
    })
}

#[derive(Serialize)]
struct CoverReport {
    set: Vec<usize>,
    nodes: Vec<u64>,
    complexity: usize,
}

/// Minimum disjoint node cover of a list of class indices.
pub fn cover_of(hierarchy: &str, classes: &str) -> Result<String, String> {
    let h = parse_hierarchy(hierarchy, "hierarchy").map_err(|e| e.to_string())?;
    let set = ClassSet::new(parse_numbers::<usize>(classes, "class")?);
    let cover = min_cover(&h, &set).map_err(|e| e.to_string())?;
    to_json(&CoverReport {
        set: set.into_members(),
        nodes: cover.nodes.iter().map(|&v| h.id(v)).collect(),
        complexity: cover.complexity(),
    })
}

#[derive(Serialize)]
struct RandomInstance {
    hierarchy: String,
    probs: Vec<f64>,
    y_true: usize,
}

/// Random hierarchy with one Dirichlet probability row.
pub fn random_instance(
    classes: usize,
    branching: f64,
    alpha: f64,
    seed: u64,
) -> Result<String, String> {
    let ds = generate(&GenConfig {
        classes,
        branching,
        shape: TreeShape::Random,
        alpha,
        instances: 1,
        seed,
    })
    .map_err(|e| e.to_string())?;
    let row = &ds.rows[0];
    to_json(&RandomInstance {
        hierarchy: write_hierarchy(&ds.hierarchy),
        probs: row.dist.probs().to_vec(),
        y_true: row.y_true,
    })
}

#[wasm_bindgen]
pub fn solve(hierarchy: &str, probs: &str, r: usize, k: usize) -> Result<String, JsError> {
    solve_all(hierarchy, probs, r, k).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn cover(hierarchy: &str, classes: &str) -> Result<String, JsError> {
    cover_of(hierarchy, classes).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn random(classes: usize, branching: f64, alpha: f64, seed: u32) -> Result<String, JsError> {
    random_instance(classes, branching, alpha, seed as u64).map_err(|e| JsError::new(&e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::Value;

    const SEVEN_NODE: &str =
        "1\t0\troot\n2\t1\tleft\n3\t1\tright\n4\t2\tc1\n5\t2\tc2\n6\t3\tc3\n7\t3\tc4\n";

    fn json(s: &str) -> Value {
        serde_json::from_str(s).unwrap()
    }

    #[test]
    fn solves_seven_node() {
        let out = json(&solve_all(SEVEN_NODE, "0.5, 0.1, 0.3, 0.1", 2, 2).unwrap());
        let results = out["results"].as_array().unwrap();
        assert_eq!(results.len(), 4);
        for r in results {
            assert!((r["mass"].as_f64().unwrap() - 0.8).abs() < 1e-12, "{r}");
            assert_eq!(r["set"], serde_json::json!([0, 2]));
            assert_eq!(r["cover"], serde_json::json!([4, 6]));
        }
        assert_eq!(results[2]["n"], 5);
        assert_eq!(out["tree"].as_array().unwrap().len(), 7);
        assert_eq!(out["tree"][0]["parent"], Value::Null);
    }

    #[test]
    fn reports_bad_input() {
        assert!(solve_all(SEVEN_NODE, "0.5 0.5", 1, 1)
            .unwrap_err()
            .contains("2 probabilities"));
        assert!(solve_all(SEVEN_NODE, "0.5 0.1 0.3 x", 1, 1).is_err());
        assert!(solve_all(SEVEN_NODE, "0.5 0.1 0.3 0.1", 0, 1).is_err());
        assert!(cover_of(SEVEN_NODE, "").is_err());
        assert!(random_instance(1, 2.0, 1.0, 0).is_err());
    }

    #[test]
    fn covers() {
        let out = json(&cover_of(SEVEN_NODE, "0,2,3").unwrap());
        assert_eq!(out["nodes"], serde_json::json!([4, 3]));
        assert_eq!(out["complexity"], 2);
        assert_eq!(json(&cover_of(SEVEN_NODE, "2 3").unwrap())["complexity"], 1);
    }

    #[test]
    fn random_round_trips() {
        let a = random_instance(12, 2.5, 0.5, 3).unwrap();
        assert_eq!(a, random_instance(12, 2.5, 0.5, 3).unwrap());
        let inst = json(&a);
        let probs: Vec<String> = inst["probs"]
            .as_array()
            .unwrap()
            .iter()
            .map(|p| p.to_string())
            .collect();
        let out =
            json(&solve_all(inst["hierarchy"].as_str().unwrap(), &probs.join(","), 2, 4).unwrap());
        let masses: Vec<f64> = out["results"]
            .as_array()
            .unwrap()
            .iter()
            .map(|r| r["mass"].as_f64().unwrap())
            .collect();
        assert!(
            masses.windows(2).all(|w| (w[0] - w[1]).abs() < 1e-9),
            "{masses:?}"
        );
    }

    #[test]
    fn large_tree_skips_enumeration() {
        let inst = json(&random_instance(300, 3.0, 1.0, 1).unwrap());
        let probs: Vec<String> = inst["probs"]
            .as_array()
            .unwrap()
            .iter()
            .map(|p| p.to_string())
            .collect();
        let out =
            json(&solve_all(inst["hierarchy"].as_str().unwrap(), &probs.join(","), 3, 20).unwrap());
        assert!(out["results"][0]["skipped"].is_string());
        assert!(out["results"][3]["skipped"].is_string());
        let (kcg, rts) = (&out["results"][1]["mass"], &out["results"][2]["mass"]);
        assert!((kcg.as_f64().unwrap() - rts.as_f64().unwrap()).abs() < 1e-9);
    }
}

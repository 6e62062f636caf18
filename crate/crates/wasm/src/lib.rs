//! Browser bindings: step through a tactic script, search for a proof, and
//! extract proof trees. Every function takes source text and returns JSON.

use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

use proofgrove::dataset::{extract_source, to_jsonl};
use proofgrove::prelude::file_env;
use proofgrove::search::{search, EnumPolicy, SearchConfig};
use proofgrove::syntax::{parse_file, parse_tactic_script};
use proofgrove::tactics::{new_session, ProofState, TacticConfig};

fn start_state(source: &str, theorem: &str) -> Result<ProofState, String> {
    let file = parse_file(source, "input.ml").map_err(|e| e.to_string())?;
    let (env, _) = file_env(&file);
    let thm = match theorem {
        "" => file.theorems().next(),
        name => file.theorem(name),
    }
    .ok_or_else(|| format!("no theorem {theorem:?}"))?;
    new_session(env, thm).map_err(|e| e.to_string())
}

fn or_error(r: Result<Value, String>) -> String {
    r.unwrap_or_else(|e| json!({ "error": e })).to_string()
}

/// Applies `script` one tactic at a time and reports the goals after each.
#[wasm_bindgen]
pub fn explore(source: &str, theorem: &str, script: &str) -> String {
    or_error((|| {
        let mut state = start_state(source, theorem)?;
        let tactics = parse_tactic_script(script).map_err(|e| e.to_string())?;
        let mut steps = vec![json!({ "tactic": null, "goals": state.render() })];
        for t in &tactics {
            match state.apply(t, &TacticConfig::default()) {
                Ok(o) => {
                    state = o.state;
                    steps.push(json!({ "tactic": proofgrove::syntax::render_tactic(t), "goals": state.render() }));
                }
                Err(e) => {
                    steps.push(json!({ "tactic": proofgrove::syntax::render_tactic(t), "error": e.to_string() }));
                    break;
                }
            }
        }
        Ok(json!({ "steps": steps, "solved": state.is_solved() }))
    })())
}

/// AND-OR search with the bundled enumeration policy.
#[wasm_bindgen]
pub fn prove(source: &str, theorem: &str, max_expansions: usize) -> String {
    or_error((|| {
        let state = start_state(source, theorem)?;
        // single worker: no threads in the browser
        let cfg = SearchConfig { pool_size: 1, max_expansions, ..SearchConfig::default() };
        let r = search(&state, &mut EnumPolicy::templated(), &cfg);
        Ok(json!({
            "proven": r.proven(),
            "script": r.proof.as_ref().map(|p| p.script.clone()).unwrap_or_default(),
            "expansions": r.stats.expansions,
            "nodes": r.stats.nodes,
            "transpositions": r.stats.transpositions,
        }))
    })())
}

/// The dataset record of a source file, as one JSON line.
#[wasm_bindgen]
pub fn extract(source: &str) -> String {
    match to_jsonl(&[extract_source("input.ml", source)]) {
        Ok(line) => line.trim_end().to_string(),
        Err(e) => json!({ "error": e.to_string() }).to_string(),
    }
}

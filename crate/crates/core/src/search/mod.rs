//! AND-OR proof search over factorized states, linear rollouts, policies
//! and the session pool.

mod engine;
mod graph;
mod policy;
mod pool;
mod wire;

pub use engine::{
    extract_proof, rollout, rollout_seed, run_rollouts, search, search_with_pool, verify_script, ExtractedProof,
    RolloutResult, RolloutStep, RolloutsResult, SearchConfig, SearchError, SearchMode, SearchNode, SearchResult,
    SearchStats,
};
pub use graph::{AndEdge, AndOrGraph, EdgeId, NodeId, OrNode, Status};
pub use policy::{
    rendered_hypotheses, template_menu, EnumPolicy, Policy, PolicyError, PolicyRequest, Proposal, RandomPolicy,
    ScriptedPolicy, ViewMode,
};
pub use pool::{session_pool, EnvPool, Lease, PoolError, PoolStats, ProverSession};
pub use wire::{parse_response, serve, WirePolicy, WireRequest, WireResponse};

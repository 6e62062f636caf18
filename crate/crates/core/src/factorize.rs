//! Independent goal components and canonical state keys.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::kernel::{is_inaccessible, FVarId, MetavarContext, MvarId, Term};
use crate::tactics::ProofState;

/// Unassigned metavariables a goal touches: itself plus those in its
/// instantiated target and hypotheses.
pub fn goal_mvars(mctx: &MetavarContext, g: MvarId) -> Vec<MvarId> {
    let d = mctx.decl(g);
    let mut out = vec![g];
    let mut add = |t: &Term| {
        for m in mctx.unassigned_mvars(t) {
            if !out.contains(&m) {
                out.push(m);
            }
        }
    };
    add(&d.ty);
    for h in &d.lctx.decls {
        add(&h.ty);
        if let Some(v) = &h.value {
            add(v);
        }
    }
    out
}

/// Groups goals that share unassigned metavariables, transitively. Groups
/// and their members keep the order of `goals`.
pub fn coupling_components(mctx: &MetavarContext, goals: &[MvarId]) -> Vec<Vec<MvarId>> {
    let n = goals.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], i: usize) -> usize {
        let mut r = i;
        while p[r] != r {
            r = p[r];
        }
        let mut c = i;
        while p[c] != r {
            let next = p[c];
            p[c] = r;
            c = next;
        }
        r
    }
    let mut owner: HashMap<MvarId, usize> = HashMap::new();
    for (i, g) in goals.iter().enumerate() {
        for m in goal_mvars(mctx, *g) {
            match owner.get(&m) {
                Some(&j) => {
                    let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                    if a != b {
                        parent[a.max(b)] = a.min(b);
                    }
                }
                None => {
                    owner.insert(m, i);
                }
            }
        }
    }
    let mut groups: Vec<(usize, Vec<MvarId>)> = Vec::new();
    for (i, g) in goals.iter().enumerate() {
        let r = find(&mut parent, i);
        match groups.iter_mut().find(|(root, _)| *root == r) {
            Some((_, v)) => v.push(*g),
            None => groups.push((r, vec![*g])),
        }
    }
    groups.into_iter().map(|(_, v)| v).collect()
}

/// Fixed-width fingerprint of a goal component.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct StateKey(pub [u8; 32]);

impl fmt::Display for StateKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in &self.0 {
            write!(f, "{b:02x}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for StateKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "StateKey({})", &self.to_string()[..12])
    }
}

/// One coupling component, usable as a state on its own.
#[derive(Debug, Clone)]
pub struct FactorizedState {
    pub state: ProofState,
    pub key: StateKey,
}

impl FactorizedState {
    pub fn goals(&self) -> &[MvarId] {
        &self.state.goals
    }
}

/// Splits a state into its coupling components.
pub fn factorize(state: &ProofState) -> Vec<FactorizedState> {
    coupling_components(&state.mctx, &state.goals)
        .into_iter()
        .map(|goals| {
            let key = canonical_key(&state.mctx, &goals);
            FactorizedState { state: state.with_goals(goals), key }
        })
        .collect()
}

/// Canonical text of a component: hypotheses by position, metavariables by
/// first occurrence, binders nameless, dagger names renumbered.
pub fn canonical_text(mctx: &MetavarContext, goals: &[MvarId]) -> String {
    let mut c = Canon { mctx, mvars: HashMap::new(), daggers: HashMap::new(), out: String::new() };
    for g in goals {
        c.goal(*g);
    }
    c.out
}

pub fn canonical_key(mctx: &MetavarContext, goals: &[MvarId]) -> StateKey {
    let text = canonical_text(mctx, goals);
    StateKey(Sha256::digest(text.as_bytes()).into())
}

struct Canon<'a> {
    mctx: &'a MetavarContext,
    mvars: HashMap<MvarId, usize>,
    daggers: HashMap<String, usize>,
    out: String,
}

impl Canon<'_> {
    fn mvar(&mut self, m: MvarId) -> usize {
        let n = self.mvars.len();
        *self.mvars.entry(m).or_insert(n)
    }

    fn name(&mut self, s: &str) -> String {
        if is_inaccessible(s) {
            let n = self.daggers.len();
            let k = *self.daggers.entry(s.to_string()).or_insert(n);
            format!("†{k}")
        } else {
            s.to_string()
        }
    }

    fn goal(&mut self, g: MvarId) {
        let d = self.mctx.decl(g);
        let id = self.mvar(g);
        self.out.push_str(&format!("goal ?{id} tag={}\n", d.tag.as_deref().unwrap_or("-")));
        let fvars: Vec<FVarId> = d.lctx.fvars();
        for h in &d.lctx.decls {
            let name = self.name(&h.user_name);
            self.out.push_str(&format!("  {name} : "));
            self.term(&self.mctx.instantiate(&h.ty), &fvars);
            if let Some(v) = &h.value {
                self.out.push_str(" := ");
                self.term(&self.mctx.instantiate(v), &fvars);
            }
            self.out.push('\n');
        }
        self.out.push_str("  |- ");
        self.term(&self.mctx.instantiate(&d.ty), &fvars);
        self.out.push('\n');
    }

    fn term(&mut self, t: &Term, fvars: &[FVarId]) {
        match t {
            Term::BVar(i) => self.out.push_str(&format!("#{i}")),
            Term::FVar(f) => match fvars.iter().position(|x| x == f) {
                Some(i) => self.out.push_str(&format!("h{i}")),
                None => self.out.push_str(&format!("f{}", f.0)),
            },
            Term::Const(c) => self.out.push_str(c),
            Term::Sort(n) => self.out.push_str(&format!("Sort{n}")),
            Term::App(f, a) => {
                self.out.push('(');
                self.term(f, fvars);
                self.out.push(' ');
                self.term(a, fvars);
                self.out.push(')');
            }
            Term::Lam(b, body) | Term::Pi(b, body) => {
                self.out.push_str(if matches!(t, Term::Lam(..)) { "(fun " } else { "(pi " });
                self.term(&b.ty, fvars);
                self.out.push_str(". ");
                self.term(body, fvars);
                self.out.push(')');
            }
            Term::Mvar(m) => {
                let k = self.mvar(*m);
                self.out.push_str(&format!("?{k}"));
            }
            Term::Sorry(ty) => {
                self.out.push_str("(sorry ");
                self.term(ty, fvars);
                self.out.push(')');
            }
        }
    }
}

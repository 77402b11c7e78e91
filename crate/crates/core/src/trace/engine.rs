//! Breadth-first exploration of the scenario's state graph.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::sync::Arc;

use super::matching::{build, is_symbol, Domains, Local, Matcher, Unifier};
use super::{Event, Trace};
use crate::protocol::{
    instantiate, AttackerClass, validate_scenario, ActionKind, CompiledProtocol, ProtocolError, ProtocolSpec, RoleProgram, Scenario, Session,
    Sort,
};
use crate::term::{Knowledge, Term, TermSet};

/// Static description of one role instance.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InstanceInfo {
    pub session: usize,
    pub role: String,
    pub agent: String,
    pub historical: bool,
}

/// Everything fixed for the duration of an exploration.
#[derive(Clone, Debug)]
pub struct Context {
    pub compiled: CompiledProtocol,
    pub scenario: Scenario,
    pub sessions: Vec<Session>,
    pub instances: Vec<InstanceInfo>,
    /// Agents that may fill an ordinary role.
    pub ordinary: Vec<String>,
    pub attacker_initial: TermSet,
    initial: Vec<Local>,
}

impl Context {
    pub fn new(spec: &ProtocolSpec, scenario: &Scenario) -> Result<Context, ProtocolError> {
        let issues = validate_scenario(scenario);
        if let Some(first) = issues.first() {
            return Err(ProtocolError::Unsupported(first.clone()));
        }
        let (compiled, sessions) = instantiate(spec, scenario)?;
        let mut instances = Vec::new();
        let mut initial = Vec::new();
        for s in &sessions {
            for ri in &s.instances {
                instances.push(InstanceInfo { session: s.id, role: ri.role.clone(), agent: ri.agent.clone(), historical: s.historical });
                initial.push(Local { pc: 0, roles: ri.roles.clone(), vars: ri.vars.clone(), blobs: Default::default() });
            }
        }
        let mut ordinary = scenario.pool.clone();
        if scenario.attacker == AttackerClass::Insider {
            ordinary.insert(0, scenario.attacker_name.clone());
        }
        let mut attacker_initial = TermSet::new();
        for a in scenario.universe(spec) {
            if !spec.keypairs.is_empty() {
                attacker_initial.insert(Term::public_key(a.clone()));
            }
            attacker_initial.insert(Term::agent(a));
        }
        attacker_initial.insert(Term::nonce(format!("n{}", scenario.attacker_name)));
        attacker_initial.extend(scenario.attacker_keys.iter().cloned());
        for s in &spec.steps {
            s.message.for_each_subterm(&mut |t| {
                if let Term::Text(n) = t {
                    if compiled.var_sort(n).is_none() {
                        attacker_initial.insert(t.clone());
                    }
                }
            });
        }
        Ok(Context { compiled, scenario: scenario.clone(), sessions, instances, ordinary, attacker_initial, initial })
    }

    pub fn spec(&self) -> &ProtocolSpec {
        &self.compiled.spec
    }

    pub fn program(&self, inst: usize) -> &RoleProgram {
        self.compiled.program(&self.instances[inst].role)
    }

    pub fn initial_locals(&self) -> &[Local] {
        &self.initial
    }

    pub(crate) fn matcher<'a>(&'a self, inst: usize, symbols: &'a Domains) -> Matcher<'a> {
        Matcher { ordinary: &self.ordinary, shapes: &self.program(inst).blob_shapes, symbols, inst }
    }

    /// Messages the attacker has seen in `st`. Every message an instance
    /// sent can be rebuilt from its final bindings.
    pub fn spied_in(&self, st: &GState) -> TermSet {
        let mut out = TermSet::new();
        if self.scenario.attacker.overhears() {
            for (i, loc) in st.locals.iter().enumerate() {
                for a in self.program(i).actions.iter().take(loc.pc) {
                    if a.kind == ActionKind::Send {
                        out.insert(build(&a.pattern, loc).expect("sent messages are bound"));
                    }
                }
            }
        }
        if st.compromised {
            out.extend(self.historical_keys());
        }
        out
    }

    pub fn knowledge_in(&self, st: &GState) -> Knowledge {
        let mut h = self.attacker_initial.clone();
        h.extend(self.spied_in(st));
        Knowledge::new(&h)
    }

    /// What `agent` holds without having received it, given the instance
    /// states `locals`: its bound variables, the long-term keys of its runs
    /// and all public keys. For the attacker this is its initial knowledge.
    pub fn private_knowledge(&self, agent: &str, locals: &[Local]) -> TermSet {
        if !self.is_honest(agent) {
            return self.attacker_initial.clone();
        }
        let spec = self.spec();
        let mut out = TermSet::new();
        if !spec.keypairs.is_empty() {
            for a in self.scenario.universe(spec) {
                out.insert(Term::public_key(a));
            }
        }
        for (info, loc) in self.instances.iter().zip(locals) {
            if info.agent != agent {
                continue;
            }
            out.extend(loc.vars.values().filter(|v| !is_symbol(v)).cloned());
            for d in &spec.shared_keys {
                if d.first != info.role && d.second != info.role {
                    continue;
                }
                if let (Some(a), Some(b)) = (loc.roles.get(&d.first), loc.roles.get(&d.second)) {
                    out.insert(super::matching::shared_key(a, b));
                }
            }
            if spec.keypairs.contains(&info.role) {
                out.insert(Term::private_key(agent));
            }
        }
        out
    }

    /// The nonce the attacker starts with; open symbols default to it.
    pub fn attacker_nonce(&self) -> Term {
        Term::nonce(format!("n{}", self.scenario.attacker_name))
    }

    /// Fixes every symbol still open in `events` to the attacker's nonce.
    pub fn close_symbols(&self, events: &mut [Event]) {
        let n = self.attacker_nonce();
        for e in events {
            *e = e.map_term(|t| t.map_atoms(&mut |a| if is_symbol(a) { n.clone() } else { a.clone() }));
        }
    }

    pub fn is_complete(&self, inst: usize, loc: &Local) -> bool {
        loc.pc >= self.program(inst).actions.len()
    }

    /// Whether `agent` is an honest participant.
    pub fn is_honest(&self, agent: &str) -> bool {
        agent != self.scenario.attacker_name
    }

    /// Instance in `session` playing `role`, if any.
    pub fn instance_of(&self, session: usize, role: &str) -> Option<usize> {
        self.instances.iter().position(|i| i.session == session && i.role == role)
    }

    /// Fresh keys generated by historical sessions; these are what leaks.
    pub fn historical_keys(&self) -> Vec<Term> {
        let mut out = Vec::new();
        for (i, info) in self.instances.iter().enumerate() {
            if info.historical {
                for (name, sort) in &self.program(i).fresh {
                    if *sort == Sort::Key {
                        out.push(self.initial[i].vars[name].clone());
                    }
                }
            }
        }
        out
    }
}

/// A message in transit between honest agents when the attacker does not
/// control delivery.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Pending {
    pub session: usize,
    pub step: usize,
    pub target: usize,
    pub claimed: String,
    pub term: Term,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct GState {
    /// Per-instance state; unchanged instances share storage across states.
    pub locals: Vec<Arc<Local>>,
    pub channel: Vec<Pending>,
    pub compromised: bool,
    /// Open nonce symbols and the values each may still take.
    pub symbols: Domains,
}

impl GState {
    fn resolve(&mut self, u: &Unifier) {
        if u.subst.is_empty() && u.domains.is_empty() {
            return;
        }
        if !u.subst.is_empty() {
            for l in &mut self.locals {
                if l.vars.values().chain(l.blobs.values()).all(|t| u.apply(t) == *t) {
                    continue;
                }
                let l = Arc::make_mut(l);
                for v in l.vars.values_mut() {
                    *v = u.apply(v);
                }
                for b in l.blobs.values_mut() {
                    *b = u.apply(b);
                }
            }
            for p in &mut self.channel {
                p.term = u.apply(&p.term);
            }
            self.symbols.retain(|x, _| !u.subst.contains_key(x));
        }
        for (x, d) in &u.domains {
            if !u.subst.contains_key(x) {
                self.symbols.insert(x.clone(), d.clone());
            }
        }
    }
}

pub type NodeId = usize;

#[derive(Clone, Debug)]
pub struct Edge {
    pub to: NodeId,
    pub events: Vec<Event>,
    /// Symbols this step decided, with their values.
    pub resolved: Vec<(Term, Term)>,
}

#[derive(Clone, Debug)]
pub struct Node {
    pub state: Arc<GState>,
    /// First-discovered predecessor; following these gives a shortest trace.
    pub parent: Option<(NodeId, usize)>,
    pub edges: Vec<Edge>,
    /// Number of events on the shortest trace to this node.
    pub depth: usize,
}

/// The explored executions, stored as a DAG of deduplicated states. Every
/// root-to-node path is a trace; paths to nodes without successors are the
/// maximal traces.
#[derive(Clone, Debug)]
pub struct TraceSet {
    pub context: Context,
    pub nodes: Vec<Node>,
    /// Set when the state cap stopped exploration early.
    pub partial: bool,
}

struct Successor {
    events: Vec<Event>,
    state: GState,
    spied: Vec<Term>,
    resolved: Vec<(Term, Term)>,
}

fn extend_path(events: &mut Vec<Event>, e: &Edge) {
    substitute(events, &e.resolved);
    events.extend(e.events.iter().cloned());
}

fn substitute(events: &mut [Event], resolved: &[(Term, Term)]) {
    if resolved.is_empty() {
        return;
    }
    let map: BTreeMap<&Term, &Term> = resolved.iter().map(|(a, b)| (a, b)).collect();
    for e in events {
        *e = e.map_term(|t| t.map_atoms(&mut |a| map.get(a).map_or_else(|| a.clone(), |v| (*v).clone())));
    }
}

/// Explores every execution of the scenario within its bounds.
pub fn explore(spec: &ProtocolSpec, scenario: &Scenario) -> Result<TraceSet, ProtocolError> {
    let ctx = Context::new(spec, scenario)?;
    let root_state = GState { locals: ctx.initial.iter().cloned().map(Arc::new).collect(), channel: Vec::new(), compromised: false, symbols: Domains::new() };
    let root = Node {
        state: Arc::new(root_state),
        parent: None,
        edges: Vec::new(),
        depth: 0,
    };
    let mut set = TraceSet { context: ctx, nodes: vec![root], partial: false };
    let mut index: HashMap<Arc<GState>, NodeId> = HashMap::new();
    index.insert(set.nodes[0].state.clone(), 0);
    let mut queue = VecDeque::from([(0usize, Arc::new(Knowledge::new(&set.context.attacker_initial)))]);
    while let Some((id, known)) = queue.pop_front() {
        let succs = set.successors(id, &known);
        for s in succs {
            let existing = index.get(&s.state).copied();
            let to = match existing {
                Some(to) => to,
                None => {
                    if set.nodes.len() >= set.context.scenario.max_states {
                        set.partial = true;
                        continue;
                    }
                    let knowledge = if !s.resolved.is_empty() {
                        Arc::new(set.context.knowledge_in(&s.state))
                    } else if s.spied.iter().all(|t| known.sees(t)) {
                        known.clone()
                    } else {
                        let mut knowledge = (*known).clone();
                        knowledge.extend(s.spied.iter().cloned());
                        Arc::new(knowledge)
                    };
                    let parent = &set.nodes[id];
                    let node = Node {
                        state: Arc::new(s.state),
                        parent: Some((id, set.nodes[id].edges.len())),
                        edges: Vec::new(),
                        depth: parent.depth + s.events.len(),
                    };
                    let to = set.nodes.len();
                    index.insert(node.state.clone(), to);
                    set.nodes.push(node);
                    queue.push_back((to, knowledge));
                    to
                }
            };
            set.nodes[id].edges.push(Edge { to, events: s.events, resolved: s.resolved });
        }
    }
    Ok(set)
}

impl TraceSet {
    fn successors(&self, id: NodeId, known: &Knowledge) -> Vec<Successor> {
        let ctx = &self.context;
        let node = &self.nodes[id];
        let st = &*node.state;
        let hist_pending = ctx.instances.iter().enumerate().any(|(i, info)| info.historical && !ctx.is_complete(i, &st.locals[i]));
        if hist_pending {
            // The earlier session runs undisturbed, one step at a time.
            return self.channel_successors(st, true).into_iter().take(1).collect();
        }
        if ctx.scenario.compromise && !st.compromised {
            let keys = ctx.historical_keys();
            let events = keys.iter().map(|k| Event::Compromise { term: k.clone() }).collect();
            let mut state = st.clone();
            state.compromised = true;
            return vec![Successor { events, state, spied: keys, resolved: vec![] }];
        }
        if ctx.scenario.attacker.controls_network() {
            self.attacker_successors(node, known)
        } else {
            self.channel_successors(st, false)
        }
    }

    /// Steps where honest messages travel unaltered.
    fn channel_successors(&self, st: &GState, historical: bool) -> Vec<Successor> {
        let ctx = &self.context;
        let overhear = ctx.scenario.attacker.overhears();
        let mut out: Vec<((usize, usize, u8, Term), Successor)> = Vec::new();
        for (i, info) in ctx.instances.iter().enumerate() {
            if info.historical != historical {
                continue;
            }
            let loc = &st.locals[i];
            let Some(action) = ctx.program(i).actions.get(loc.pc) else { continue };
            if action.kind != ActionKind::Send {
                continue;
            }
            let term = build(&action.pattern, loc).expect("compiled sends are fully bound");
            let to = loc.roles.get(&action.peer).cloned().expect("receiver bound before send");
            let Some(target) = ctx.instance_of(info.session, &action.peer) else { continue };
            let mut state = st.clone();
            Arc::make_mut(&mut state.locals[i]).pc += 1;
            state.channel.push(Pending { session: info.session, step: action.step, target, claimed: info.agent.clone(), term: term.clone() });
            state.channel.sort();
            let spied = if overhear { vec![term.clone()] } else { vec![] };
            let ev = Event::Send { actual: info.agent.clone(), claimed: info.agent.clone(), to, term: term.clone() };
            out.push(((info.session, action.step, 0, term), Successor { events: vec![ev], state, spied, resolved: vec![] }));
        }
        for (pi, p) in st.channel.iter().enumerate() {
            let info = &ctx.instances[p.target];
            let loc = &st.locals[p.target];
            let Some(action) = ctx.program(p.target).actions.get(loc.pc) else { continue };
            if action.kind != ActionKind::Recv || action.step != p.step {
                continue;
            }
            let m = ctx.matcher(p.target, &st.symbols);
            let Some((mut l, _)) = m.matches(&action.pattern, &p.term, ((**loc).clone(), Unifier::default())).into_iter().next() else { continue };
            if !l.roles.contains_key(&action.peer) {
                l.roles.insert(action.peer.clone(), p.claimed.clone());
            }
            l.pc += 1;
            let mut state = st.clone();
            state.locals[p.target] = Arc::new(l);
            state.channel.remove(pi);
            let ev = Event::Recv { receiver: info.agent.clone(), term: p.term.clone(), step: p.step, session: p.session };
            out.push(((p.session, p.step, 1, p.term.clone()), Successor { events: vec![ev], state, spied: vec![], resolved: vec![] }));
        }
        out.sort_by(|a, b| a.0.cmp(&b.0));
        out.into_iter().map(|(_, s)| s).collect()
    }

    /// Performs the consecutive sends of instance `i`, intercepted by the attacker.
    fn send_chain(&self, i: usize, state: &mut GState, events: &mut Vec<Event>, spied: &mut Vec<Term>) {
        let ctx = &self.context;
        let info = &ctx.instances[i];
        loop {
            let loc = &state.locals[i];
            let Some(action) = ctx.program(i).actions.get(loc.pc) else { return };
            if action.kind != ActionKind::Send {
                return;
            }
            let term = build(&action.pattern, loc).expect("compiled sends are fully bound");
            let to = loc.roles.get(&action.peer).cloned().expect("receiver bound before send");
            events.push(Event::Send { actual: info.agent.clone(), claimed: info.agent.clone(), to, term: term.clone() });
            spied.push(term);
            Arc::make_mut(&mut state.locals[i]).pc += 1;
        }
    }

    fn attacker_successors(&self, node: &Node, known: &Knowledge) -> Vec<Successor> {
        let ctx = &self.context;
        let st = &*node.state;
        let mut out = Vec::new();
        for (i, info) in ctx.instances.iter().enumerate() {
            if info.historical {
                continue;
            }
            let loc = &st.locals[i];
            let Some(action) = ctx.program(i).actions.get(loc.pc) else { continue };
            match action.kind {
                ActionKind::Send => {
                    let mut state = st.clone();
                    let (mut events, mut spied) = (Vec::new(), Vec::new());
                    self.send_chain(i, &mut state, &mut events, &mut spied);
                    out.push(Successor { events, state, spied, resolved: vec![] });
                }
                ActionKind::Recv => {
                    let m = ctx.matcher(i, &st.symbols);
                    let mut seen = BTreeSet::new();
                    for (term, (l, u)) in m.solve(&action.pattern, ((**loc).clone(), Unifier::default()), known, ctx.scenario.synthesis_depth) {
                        let term = u.apply(&term);
                        let claims: Vec<(String, Local)> = match l.roles.get(&action.peer) {
                            Some(c) => vec![(c.clone(), l)],
                            None => ctx
                                .ordinary
                                .iter()
                                .filter(|a| !l.roles.values().any(|b| b == *a))
                                .map(|a| {
                                    let mut l2 = l.clone();
                                    l2.roles.insert(action.peer.clone(), a.clone());
                                    (a.clone(), l2)
                                })
                                .collect(),
                        };
                        for (claimed, mut l) in claims {
                            if !seen.insert((claimed.clone(), term.clone(), l.clone(), u.clone())) {
                                continue;
                            }
                            l.pc += 1;
                            let mut state = st.clone();
                            state.locals[i] = Arc::new(l);
                            state.resolve(&u);
                            let mut events = vec![
                                Event::Send { actual: ctx.scenario.attacker_name.clone(), claimed, to: info.agent.clone(), term: term.clone() },
                                Event::Recv { receiver: info.agent.clone(), term: term.clone(), step: action.step, session: info.session },
                            ];
                            let mut spied = Vec::new();
                            self.send_chain(i, &mut state, &mut events, &mut spied);
                            out.push(Successor { events, state, spied, resolved: u.resolved() });
                        }
                    }
                }
            }
        }
        out
    }

    /// Raw terms the attacker intercepted, overheard, or obtained by
    /// compromise on the way to node `id`.
    pub fn spied(&self, id: NodeId) -> TermSet {
        self.context.spied_in(&self.nodes[id].state)
    }

    /// What the attacker can derive at node `id`.
    pub fn knowledge(&self, id: NodeId) -> Knowledge {
        self.context.knowledge_in(&self.nodes[id].state)
    }

    pub fn root(&self) -> NodeId {
        0
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn is_maximal(&self, id: NodeId) -> bool {
        self.nodes[id].edges.is_empty()
    }

    /// Shortest trace reaching `id`, with every attacker choice made concrete.
    pub fn trace_to(&self, id: NodeId) -> Trace {
        let mut path = Vec::new();
        let mut cur = id;
        while let Some((p, e)) = self.nodes[cur].parent {
            path.push(&self.nodes[p].edges[e]);
            cur = p;
        }
        let mut events = Vec::new();
        for e in path.into_iter().rev() {
            extend_path(&mut events, e);
        }
        self.context.close_symbols(&mut events);
        Trace::new(events)
    }

    /// Number of distinct maximal traces (root-to-sink paths).
    pub fn count_maximal(&self) -> u128 {
        let mut paths = vec![0u128; self.nodes.len()];
        // Children always have larger ids than some parent but not all, so
        // process in reverse topological order via an explicit DFS.
        let order = self.topological_order();
        for &id in order.iter().rev() {
            let n = &self.nodes[id];
            paths[id] = if n.edges.is_empty() { 1 } else { n.edges.iter().map(|e| paths[e.to]).sum() };
        }
        paths[0]
    }

    pub fn topological_order(&self) -> Vec<NodeId> {
        let mut indeg = vec![0usize; self.nodes.len()];
        for n in &self.nodes {
            for e in &n.edges {
                indeg[e.to] += 1;
            }
        }
        let mut ready: VecDeque<NodeId> = (0..self.nodes.len()).filter(|&i| indeg[i] == 0).collect();
        let mut order = Vec::with_capacity(self.nodes.len());
        while let Some(id) = ready.pop_front() {
            order.push(id);
            for e in &self.nodes[id].edges {
                indeg[e.to] -= 1;
                if indeg[e.to] == 0 {
                    ready.push_back(e.to);
                }
            }
        }
        order
    }

    /// Every maximal trace, in exploration order, up to `limit` of them.
    pub fn maximal_traces(&self, limit: usize) -> Vec<Trace> {
        fn walk(set: &TraceSet, id: NodeId, events: &mut Vec<Event>, out: &mut Vec<Trace>, limit: usize) {
            if out.len() >= limit {
                return;
            }
            let n = &set.nodes[id];
            if n.edges.is_empty() {
                let mut done = events.clone();
                set.context.close_symbols(&mut done);
                out.push(Trace::new(done));
                return;
            }
            for e in &n.edges {
                let saved = (!e.resolved.is_empty()).then(|| events.clone());
                let base = events.len();
                extend_path(events, e);
                walk(set, e.to, events, out, limit);
                match saved {
                    Some(old) => *events = old,
                    None => events.truncate(base),
                }
            }
        }
        let mut out = Vec::new();
        walk(self, 0, &mut Vec::new(), &mut out, limit);
        out
    }

    /// Depth-first search for a path whose events satisfy `accept`, pruning
    /// any prefix rejected by `viable`, which also learns the node the
    /// prefix leads to. Both callbacks and the returned trace keep open
    /// symbols.
    pub fn find_path(
        &self,
        viable: &mut dyn FnMut(NodeId, &[Event]) -> bool,
        accept: &mut dyn FnMut(NodeId, &[Event]) -> bool,
    ) -> Option<(NodeId, Trace)> {
        fn walk(
            set: &TraceSet,
            id: NodeId,
            events: &mut Vec<Event>,
            viable: &mut dyn FnMut(NodeId, &[Event]) -> bool,
            accept: &mut dyn FnMut(NodeId, &[Event]) -> bool,
        ) -> Option<NodeId> {
            if accept(id, events) {
                return Some(id);
            }
            for e in &set.nodes[id].edges {
                let saved = (!e.resolved.is_empty()).then(|| events.clone());
                let base = events.len();
                extend_path(events, e);
                if viable(e.to, events) {
                    if let Some(found) = walk(set, e.to, events, viable, accept) {
                        return Some(found);
                    }
                }
                match saved {
                    Some(old) => *events = old,
                    None => events.truncate(base),
                }
            }
            None
        }
        let mut events = Vec::new();
        let found = walk(self, 0, &mut events, viable, accept)?;
        Some((found, Trace::new(events)))
    }
}

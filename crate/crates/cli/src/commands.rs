//! One function per subcommand, each filling in a [`Report`].

use std::path::Path;

use secknow::ban::{parse_ban, prove, ProofOutcome};
use secknow::epistemic::{
    build_model, check_valid, dining_crypto_model, model_from_traces, parse_formula, russian_cards_model, At, KripkeModel,
    ObservationMode, Outcome,
};
use secknow::infoflow::{check_ni, parse_event_system, parse_program, refines_low_equivalence, show_trace, Policy};
use secknow::protocol::{parse_protocol, AttackerClass, ProtocolSpec, Scenario};
use secknow::security::{certify, check_claims, Status as ClaimStatus};
use secknow::trace::{explore, Context, Trace, TraceSet};

use crate::report::{ClaimResult, Report, Status};
use crate::{AnalyzeArgs, AtArg, BanArgs, EpistemicArgs, EventsArgs, ExploreArgs, Mode, NiArgs};

type CmdResult = Result<(), String>;

fn read(path: &Path) -> Result<String, String> {
    std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))
}

fn in_file<E: std::fmt::Display>(path: &Path) -> impl Fn(E) -> String + '_ {
    move |e| format!("{}: {e}", path.display())
}

fn load_protocol(path: &Path) -> Result<ProtocolSpec, String> {
    parse_protocol(&read(path)?).map_err(in_file(path))
}

fn scenario(spec: &ProtocolSpec, args: &ExploreArgs, report: &mut Report) -> Result<Scenario, String> {
    let attacker: AttackerClass = args.attacker.parse()?;
    if args.sessions == 0 {
        return Err("--sessions must be at least 1".into());
    }
    let mut sc = Scenario::standard(spec, attacker, args.sessions);
    sc.compromise = args.compromise;
    sc.synthesis_depth = args.depth;
    sc.max_states = args.max_states;
    report.bound("attacker", attacker);
    report.bound("sessions", args.sessions);
    report.bound("depth", args.depth);
    report.bound("compromise", args.compromise);
    report.bound("max_states", args.max_states);
    Ok(sc)
}

fn explore_with(spec: &ProtocolSpec, args: &ExploreArgs, report: &mut Report) -> Result<TraceSet, String> {
    let sc = scenario(spec, args, report)?;
    let traces = explore(spec, &sc).map_err(|e| e.to_string())?;
    report.bound("states", traces.len());
    report.bound("partial", traces.partial);
    Ok(traces)
}

pub(crate) fn analyze(args: &AnalyzeArgs, report: &mut Report) -> CmdResult {
    let spec = load_protocol(&args.file)?;
    let traces = explore_with(&spec, &args.explore, report)?;
    for v in check_claims(&traces, &spec) {
        let status = match (v.status, v.exhaustive) {
            (ClaimStatus::Violated, _) => Status::Violated,
            (ClaimStatus::HoldsWithinBounds, true) => Status::HoldsWithinBounds,
            (ClaimStatus::HoldsWithinBounds, false) => Status::Inconclusive,
        };
        let mut r = ClaimResult::new(v.claim.to_string(), status);
        if let Some(w) = &v.witness {
            r.witness = w.interaction.iter().map(ToString::to_string).collect();
            r.log = w.trace.to_log().lines().map(str::to_string).collect();
            r.details.push(w.explanation.clone());
            let replays = certify(&traces.context, &v.claim, &w.trace);
            r.details.push(format!("certificate replays: {replays}"));
        }
        report.results.push(r);
    }
    Ok(())
}

fn formula_text(arg: &str) -> Result<String, String> {
    match arg.strip_prefix('@') {
        Some(path) => read(Path::new(path)),
        None => Ok(arg.to_string()),
    }
}

fn observation_mode(mode: Mode) -> ObservationMode {
    match mode {
        Mode::Raw => ObservationMode::LocalRaw,
        Mode::Pattern => ObservationMode::PatternView,
    }
}

fn epistemic_model(args: &EpistemicArgs, report: &mut Report) -> Result<KripkeModel, String> {
    let mode = observation_mode(args.mode);
    if let Some(path) = args.model.strip_prefix("protocol:") {
        let path = Path::new(path);
        let spec = load_protocol(path)?;
        let traces = explore_with(&spec, &args.explore, report)?;
        report.bound("mode", format!("{:?}", args.mode).to_lowercase());
        report.bound("max_traces", args.max_traces);
        return build_model(&traces, mode, args.max_traces).map_err(|e| e.to_string());
    }
    if let Some(list) = args.model.strip_prefix("traces:") {
        let path = args.protocol.as_deref().ok_or("`traces:` models need --protocol")?;
        let spec = load_protocol(path)?;
        let sc = scenario(&spec, &args.explore, report)?;
        let ctx = Context::new(&spec, &sc).map_err(|e| e.to_string())?;
        let mut traces = Vec::new();
        for file in list.split(',').filter(|f| !f.is_empty()) {
            let file = Path::new(file);
            let t: Trace = read(file)?.parse().map_err(in_file(file))?;
            traces.push(t);
        }
        report.bound("mode", format!("{:?}", args.mode).to_lowercase());
        return model_from_traces(&ctx, &traces, mode).map_err(|e| e.to_string());
    }
    match args.model.as_str() {
        "russian-cards" => Ok(russian_cards_model()),
        "dining-crypto" => Ok(dining_crypto_model()),
        other => Err(format!("unknown model `{other}`; expected russian-cards, dining-crypto, protocol:<file> or traces:<files>")),
    }
}

pub(crate) fn epistemic(args: &EpistemicArgs, report: &mut Report) -> CmdResult {
    let text = formula_text(&args.formula)?;
    let formula = parse_formula(text.trim()).map_err(|e| format!("formula: {e}"))?;
    let model = epistemic_model(args, report)?;
    let at = match args.at {
        AtArg::Initial => At::InitialPoints,
        AtArg::All => At::AllPoints,
        AtArg::Final => At::FinalPoints,
    };
    report.bound("model", &args.model);
    report.bound("points", model.len());
    report.bound("at", format!("{:?}", args.at).to_lowercase());
    let v = check_valid(&model, &formula, at).map_err(|e| e.to_string())?;
    let status = if v.outcome == Outcome::Holds { Status::Holds } else { Status::Violated };
    let mut r = ClaimResult::new(formula.to_string(), status);
    if let Some(p) = v.counterexample {
        r.witness.push(format!("fails at {p}"));
    }
    r.details.push(format!("points checked: {}", v.checked));
    report.results.push(r);
    Ok(())
}

pub(crate) fn ban(args: &BanArgs, report: &mut Report) -> CmdResult {
    let input = parse_ban(&read(&args.file)?, args.depth).map_err(in_file(&args.file))?;
    let goal = input.goal.as_ref().ok_or_else(|| format!("{}: no goal", args.file.display()))?;
    report.bound("depth", args.depth);
    let r = match prove(&input.initial, &input.steps, goal, args.depth) {
        ProofOutcome::Proved(tree) => {
            let mut r = ClaimResult::new(goal.to_string(), Status::Holds);
            r.witness = tree.to_string().lines().map(str::to_string).collect();
            let valid = tree.validate(&input.initial, &input.steps);
            r.details.push(match valid {
                Ok(()) => "proof tree validates".to_string(),
                Err(e) => format!("proof tree does not validate: {e}"),
            });
            r
        }
        ProofOutcome::NotDerived { facts, beyond_depth } => {
            let mut r = ClaimResult::new(goal.to_string(), Status::Violated);
            r.details.push(format!("not derivable from {facts} saturated facts"));
            if beyond_depth > 0 {
                r.details.push(format!("{beyond_depth} formulas dropped by the depth bound"));
            }
            r
        }
    };
    report.results.push(r);
    Ok(())
}

pub(crate) fn ni(args: &NiArgs, report: &mut Report) -> CmdResult {
    let program = parse_program(&read(&args.file)?).map_err(in_file(&args.file))?;
    report.bound("modulus", args.modulus);
    report.bound("max_pairs", args.max_pairs);
    let v = check_ni(&program, args.modulus, args.max_pairs).map_err(|e| e.to_string())?;
    let mut r = ClaimResult::new("noninterference", if v.secure { Status::Holds } else { Status::Violated });
    if let Some(cx) = &v.counterexample {
        r.witness.push(format!("inputs  {} ~L {}", program.show(&cx.inputs.0), program.show(&cx.inputs.1)));
        r.witness.push(format!("outputs {} !~L {}", program.show(&cx.outputs.0), program.show(&cx.outputs.1)));
    }
    r.details.push(format!("low-equivalent pairs: {}", v.pairs));
    let refinement = refines_low_equivalence(&program, args.modulus).map_err(|e| e.to_string())?;
    r.details.push(format!("refinement check agrees: {}", refinement == v.secure));
    report.results.push(r);
    Ok(())
}

pub(crate) fn events(args: &EventsArgs, report: &mut Report) -> CmdResult {
    let es = parse_event_system(&read(&args.file)?).map_err(in_file(&args.file))?;
    let policies = match &args.policy {
        None => Policy::ALL.to_vec(),
        Some(name) => {
            let known: Vec<&str> = Policy::ALL.iter().map(|p| p.name()).collect();
            vec![Policy::from_name(name).ok_or_else(|| format!("unknown policy `{name}`; expected one of {}", known.join(", ")))?]
        }
    };
    report.bound("traces", es.traces.len());
    for p in policies {
        let v = es.check(p);
        let mut r = ClaimResult::new(p.name(), if v.holds { Status::Holds } else { Status::Violated });
        r.witness = v.witness.iter().map(|t| show_trace(t)).collect();
        report.results.push(r);
    }
    Ok(())
}

//! Execute script commands and collect text and JSON reports.

use idexp::cone;
use idexp::detres::{self, GenericMatrixSpec, Status};
use idexp::gb::GroebnerBasis;
use idexp::pair::{format_order, Chart, DivisorDef, Pair, PointSpec};
use idexp::poly::{Poly, Ring};
use idexp::reduce;
use serde_json::{json, Value};
use thiserror::Error;

use crate::script::{BoundaryItem, Command, Script};

/// Input the library rejected: unknown names, non-permissible centers,
/// pairs outside the singular locus and the like.
#[derive(Debug, Error)]
#[error("{command}: {message}")]
pub struct RunError {
    pub command: String,
    pub message: String,
}

#[derive(Clone, Copy, Debug, Default)]
pub struct RunOptions {
    /// Lift the size cap of the determinantal driver.
    pub allow_large: bool,
}

#[derive(Clone, Debug)]
pub struct Report {
    pub command: String,
    /// False when a verification inside the command failed.
    pub ok: bool,
    pub lines: Vec<String>,
    pub json: Value,
}

fn strs<T: ToString>(xs: &[T]) -> Vec<String> {
    xs.iter().map(|x| x.to_string()).collect()
}

fn locus(ring: &Ring, gens: &[Poly]) -> (bool, Vec<String>) {
    let gb = GroebnerBasis::new(ring, gens);
    if gb.is_unit() {
        (true, Vec::new())
    } else {
        (false, strs(gb.basis()))
    }
}

fn locus_text(empty: bool, basis: &[String]) -> String {
    if empty {
        "empty".into()
    } else {
        format!("V({})", basis.join(", "))
    }
}

fn chart_for(ring: &Ring, items: Option<&[BoundaryItem]>) -> Chart {
    let Some(items) = items else {
        return Chart::new(ring);
    };
    let mut chart = Chart::new(ring).with_boundary(items.iter().map(|b| DivisorDef::Poly(b.poly.clone())).collect());
    for (d, b) in chart.boundary.iter_mut().zip(items) {
        d.old = !b.new;
    }
    chart
}

fn indices(ring: &Ring, names: &[String]) -> Vec<usize> {
    names.iter().map(|n| ring.index(n).expect("names checked at parse time")).collect()
}

pub fn execute(script: &Script, cmd: &Command, opts: RunOptions) -> Result<Report, RunError> {
    let fail = |m: String| RunError { command: cmd.to_string(), message: m };
    let pair = |name: &str| -> &Pair { script.pair(name).expect("names checked at parse time") };
    let mut ok = true;
    let mut lines = Vec::new();
    let json = match cmd {
        Command::Order { pair: p, at } => {
            let e = pair(p);
            let spec = match at {
                None => PointSpec::origin(e.ring()),
                Some(vs) => PointSpec::Subspace(indices(e.ring(), vs)),
            };
            let o = e.ord_at(&spec);
            let comps: Vec<Option<u32>> = e.component_orders(&spec);
            lines.push(format!("ord = {}", format_order(&o)));
            lines.push(format!(
                "component orders: {}",
                comps.iter().map(|c| c.map_or("inf".into(), |x| x.to_string())).collect::<Vec<_>>().join(", ")
            ));
            json!({ "order": o.map(|x| x.to_string()), "component_orders": comps })
        }
        Command::Sing { pair: p } => {
            let e = pair(p);
            let s = e.singular_locus_ideal();
            let (empty, basis) = locus(e.ring(), &s.gens);
            let at_origin = e.in_sing(&PointSpec::origin(e.ring()));
            lines.push(format!("Sing = {}", locus_text(empty, &basis)));
            lines.push(format!("origin in Sing: {}", at_origin));
            if s.upper_bound {
                lines.push("imperfect field: the zero set is an upper bound".into());
            }
            json!({ "empty": empty, "basis": basis, "origin_in_sing": at_origin, "upper_bound": s.upper_bound })
        }
        Command::Tangent { pair: p } => {
            let tc = cone::tangent_cone(pair(p)).map_err(|e| fail(e.to_string()))?;
            lines.push(format!("cone: {}", tc));
            if tc.best_effort {
                lines.push("generators not declared a standard basis".into());
            }
            json!({ "cone": tc.to_string(), "best_effort": tc.best_effort })
        }
        Command::Directrix { pair: p } => {
            let tc = cone::tangent_cone(pair(p)).map_err(|e| fail(e.to_string()))?;
            let rd = cone::ridge(&tc).map_err(|e| fail(e.to_string()))?;
            let d = cone::directrix(&tc, &rd).map_err(|e| fail(e.to_string()))?;
            lines.push(format!("directrix: {}", d));
            lines.push(format!("dimension: {}", d.dim()));
            json!({ "directrix": strs(&d.polys()), "dimension": d.dim() })
        }
        Command::Ridge { pair: p } => {
            let tc = cone::tangent_cone(pair(p)).map_err(|e| fail(e.to_string()))?;
            let rd = cone::ridge(&tc).map_err(|e| fail(e.to_string()))?;
            let d = cone::directrix(&tc, &rd).map_err(|e| fail(e.to_string()))?;
            let checked = cone::check_ridge(&tc, &rd).is_ok();
            ok &= checked;
            let same = cone::reduced_ridge_equals_directrix(&rd, &d);
            lines.push(format!("ridge: {}", rd));
            lines.push(format!("triangular: {}", rd.is_triangular()));
            lines.push(format!("reduced ridge equals directrix: {}", same));
            lines.push(format!("ridge check: {}", if checked { "ok" } else { "FAILED" }));
            json!({
                "ridge": strs(&rd.polys()),
                "degrees": rd.degrees(),
                "triangular": rd.is_triangular(),
                "reduced_equals_directrix": same,
                "checked": checked,
            })
        }
        Command::Decompose { pair: p } => {
            let dec = reduce::ridge_decomposition(pair(p)).map_err(|e| fail(e.to_string()))?;
            let replay = dec.certificate.verify().is_ok();
            ok &= replay;
            if dec.resolved {
                lines.push("origin outside Sing: nothing to decompose".into());
            } else {
                for l in &dec.lifts {
                    lines.push(format!("lift ({} : {})", l.g, l.q));
                }
                lines.push(format!("residual: {}", dec.residual));
                let orders: Vec<String> =
                    dec.residual_orders().iter().map(|(o, w)| format!("{} > {}", o.map_or("inf".into(), |x| x.to_string()), w)).collect();
                if !orders.is_empty() {
                    lines.push(format!("residual orders: {}", orders.join(", ")));
                }
                if let Ok(g) = dec.grouped() {
                    lines.push(format!("grouped: {}", g.target));
                }
            }
            lines.push(format!("certificate: {} moves, replay {}", dec.certificate.moves.len(), if replay { "ok" } else { "FAILED" }));
            json!({
                "resolved": dec.resolved,
                "lifts": dec.lifts.iter().map(|l| json!({ "g": l.g.to_string(), "q": l.q })).collect::<Vec<_>>(),
                "residual": dec.residual.to_string(),
                "moves": dec.certificate.moves.len(),
                "replay": replay,
            })
        }
        Command::Reduce { pair: p, chain: false } => {
            let e = pair(p);
            let rep = reduce::classify(e).map_err(|x| fail(x.to_string()))?;
            let replay = rep.certificate.verify().is_ok()
                && rep.contact_certificate.as_ref().map_or(true, |c| c.verify().is_ok());
            ok &= replay;
            let contact: Vec<String> = rep.contact.iter().map(|&i| e.ring().name(i).to_string()).collect();
            lines.push(format!("case: {}", rep.case));
            lines.push(format!("exponents: {:?}", rep.exponents));
            if !contact.is_empty() {
                lines.push(format!("contact: {}", contact.join(", ")));
            }
            for c in &rep.straightening {
                lines.push(format!("straighten: {} -> {}", c.var, c.image));
            }
            if let Some(d) = &rep.coefficient {
                lines.push(format!("coefficient pair: {}", d));
            }
            lines.push(format!("certificates replay: {}", if replay { "ok" } else { "FAILED" }));
            json!({
                "case": rep.case.to_string(),
                "exponents": rep.exponents,
                "contact": contact,
                "coefficient": rep.coefficient.as_ref().map(|d| d.to_string()),
                "replay": replay,
            })
        }
        Command::Reduce { pair: p, chain: true } => {
            let stages = reduce::contact_chain(pair(p), 8).map_err(|x| fail(x.to_string()))?;
            let mut js = Vec::new();
            for (k, st) in stages.iter().enumerate() {
                let delta = st.delta.as_ref().map_or("inf".to_string(), |d| d.to_string());
                let contact: Vec<String> = st.contact.iter().map(|(n, f)| format!("{} = {}", n, f)).collect();
                lines.push(format!("stage {}: pair {}", k + 1, st.pair));
                lines.push(format!("  delta = {}", delta));
                if !contact.is_empty() {
                    lines.push(format!("  contact: {}", contact.join(", ")));
                }
                lines.push(format!("  contact pair: {}", st.contact_pair));
                lines.push(format!("  coefficient pair: {}", st.coefficient));
                js.push(json!({
                    "pair": st.pair.to_string(),
                    "delta": delta,
                    "contact": contact,
                    "contact_pair": st.contact_pair.to_string(),
                    "coefficient": st.coefficient.to_string(),
                }));
            }
            json!({ "stages": js })
        }
        Command::Blowup { pair: p, center, chart, boundary } => {
            let e = pair(p);
            let r = e.ring();
            let ch = chart_for(r, boundary.as_deref().and_then(|b| script.boundary(b)));
            let c = indices(r, center);
            let v = r.index(chart).expect("checked at parse time");
            let bl = ch.blowup(e, &c, v).map_err(|x| fail(x.to_string()))?;
            let s = bl.pair.singular_locus_ideal();
            let (empty, basis) = locus(r, &s.gens);
            lines.push(format!("transform: {}", bl.pair));
            if let Some(st) = &bl.strict {
                lines.push(format!("strict transform: {}", st));
            }
            lines.push(format!("Sing of transform: {}", locus_text(empty, &basis)));
            lines.push(format!("boundary: {}", bl.chart.describe_boundary().join(", ")));
            json!({
                "transform": bl.pair.to_string(),
                "strict": bl.strict.as_ref().map(|s| s.to_string()),
                "sing_empty": empty,
                "sing_basis": basis,
                "boundary": bl.chart.describe_boundary(),
            })
        }
        Command::Invariant { pair: p, depth, boundary } => {
            let e = pair(p);
            let ch = chart_for(e.ring(), boundary.as_deref().and_then(|b| script.boundary(b)));
            let t = reduce::invariant_truncation(&ch, e, *depth).map_err(|x| fail(x.to_string()))?;
            lines.push(format!("invariant: {}", t));
            lines.push(format!("stop: {:?}", t.stop));
            for (k, st) in t.stages.iter().enumerate() {
                lines.push(format!("stage {}: contact {}, coefficient pair {}", k + 1, st.contact, st.coefficient));
                if let Some(c) = &st.companion {
                    let pair = c.pair.as_ref().map_or("monomial case".to_string(), |p| p.to_string());
                    lines.push(format!("  companion: nu = {}, {}", c.nu, pair));
                }
            }
            json!({ "invariant": t.to_string(), "stop": format!("{:?}", t.stop), "stages": t.stages.len() })
        }
        Command::Gb { pair: p } => {
            let e = pair(p);
            let mut js = Vec::new();
            for (i, c) in e.components().iter().enumerate() {
                let basis = strs(GroebnerBasis::new(e.ring(), &c.gens).basis());
                lines.push(format!("component {}: [{}]", i + 1, basis.join(", ")));
                js.push(json!(basis));
            }
            json!({ "bases": js })
        }
        Command::ResolveDet { m, n, r } => {
            let spec = GenericMatrixSpec::new(*m, *n, *r, script.field()).map_err(|x| fail(x.to_string()))?;
            let trace = detres::resolve_determinantal(&spec, opts.allow_large).map_err(|x| fail(x.to_string()))?;
            let complete = trace.complete();
            ok &= complete;
            lines.extend(trace.to_string().lines().map(str::to_string));
            lines.push(format!("complete: {}", complete));
            trace_json(&trace)
        }
    };
    Ok(Report { command: cmd.to_string(), ok, lines, json })
}

fn trace_json(trace: &detres::ResolutionTrace) -> Value {
    let nodes: Vec<Value> = trace
        .nodes()
        .iter()
        .skip(1)
        .map(|n| {
            let (status, witness) = match &n.status {
                Status::Verified => ("verified".to_string(), None),
                Status::Failed { reason, witness } => (reason.clone(), Some(witness.to_string())),
            };
            json!({
                "round": n.round,
                "chart": n.choice.map(|(i, j)| vec![i, j]),
                "substitution": n.substitution,
                "size": [n.size.0, n.size.1, n.size.2],
                "status": status,
                "witness": witness,
                "gluing_checks": n.gluing.len(),
                "gluing_ok": n.gluing.iter().all(|g| g.holds),
                "leaf": n.is_leaf(),
                "regular": n.is_leaf() && n.coordinate_regular(),
                "snc": n.is_leaf() && n.snc_boundary(),
            })
        })
        .collect();
    let s = trace.spec;
    json!({
        "m": s.m, "n": s.n, "r": s.r,
        "field": s.field.descriptor(),
        "rounds": trace.depth(),
        "leaves": trace.leaves().len(),
        "complete": trace.complete(),
        "charts": nodes,
    })
}

pub fn run_all(script: &Script, opts: RunOptions) -> Result<Vec<Report>, RunError> {
    script.commands().into_iter().map(|c| execute(script, c, opts)).collect()
}

pub fn render(reports: &[Report]) -> String {
    let mut out = String::new();
    for r in reports {
        out.push_str(&format!("> {}\n", r.command));
        for l in &r.lines {
            out.push_str(&format!("  {}\n", l));
        }
    }
    out
}

pub fn render_json(reports: &[Report]) -> Value {
    Value::Array(
        reports.iter().map(|r| json!({ "command": r.command, "ok": r.ok, "result": r.json })).collect(),
    )
}

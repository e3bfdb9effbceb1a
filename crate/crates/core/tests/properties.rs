mod common;

use std::collections::BTreeSet;

use common::oracle::{Ctx, Sim};
use common::{load, CORPUS};
use covloop::closure::{run_closure, ClosureConfig};
use covloop::coverage::{compute_coverage, enumerate_targets, CoverageReport, Status, TargetKind, TargetRecord};
use covloop::rtl::ast::{Item, SourceSpan, Stmt, StmtKind};
use covloop::sva::{merge_into_file, name_and_dedup, parse_sva, ImplOp, PropKind, SvaProperty, SvaResources, Trace};
use proptest::prelude::*;
use regex::Regex;

fn designs() -> Vec<&'static str> {
    CORPUS.iter().copied().chain(["listing1", "adder", "deadcode"]).collect()
}

fn check_stmt(s: &Stmt, parent: SourceSpan, name: &str) {
    assert!(s.span.is_well_formed(), "{name}: {:?}", s.span);
    assert!(parent.contains(&s.span), "{name}: {:?} escapes {parent:?}", s.span);
    let inside = |e: &covloop::rtl::ast::Expr| {
        e.visit(&mut |x| assert!(s.span.contains(&x.span), "{name}: expr {x} at {:?} escapes {:?}", x.span, s.span));
    };
    match &s.kind {
        StmtKind::Block { stmts, .. } => stmts.iter().for_each(|x| check_stmt(x, s.span, name)),
        StmtKind::If { cond, then_branch, else_branch } => {
            inside(cond);
            check_stmt(then_branch, s.span, name);
            if let Some(e) = else_branch {
                assert!(then_branch.span.end() <= e.span.start(), "{name}: arms overlap");
                check_stmt(e, s.span, name);
            }
        }
        StmtKind::Case { subject, arms, default, .. } => {
            inside(subject);
            for a in arms {
                a.labels.iter().for_each(inside);
                check_stmt(&a.body, s.span, name);
            }
            if let Some(d) = default {
                check_stmt(d, s.span, name);
            }
        }
        StmtKind::Assign { lhs, rhs, .. } => {
            assert!(s.span.contains(&lhs.span));
            inside(rhs);
        }
    }
}

#[test]
fn spans_nest_over_the_corpus() {
    for name in designs() {
        let (design, _) = load(name);
        let unit = design.unit();
        assert!(unit.span.is_well_formed());
        for item in &unit.items {
            match item {
                Item::Always(b) => check_stmt(&b.body, unit.span, name),
                Item::Assign(a) => {
                    assert!(unit.span.contains(&a.span));
                    assert!(a.span.contains(&a.lhs.span));
                    a.rhs.visit(&mut |x| assert!(a.span.contains(&x.span), "{name}: {x}"));
                }
            }
        }
        let targets = enumerate_targets(unit, &design.file_name());
        let lines: Vec<&str> = design.source().lines().collect();
        for t in &targets {
            assert!(unit.span.contains(&t.span), "{name}: {}", t.id);
            // Target spans end before the terminating semicolon.
            if t.span.start_line == t.span.end_line && t.kind == TargetKind::Statement {
                let line = lines[t.span.start_line as usize - 1];
                let text = &line[t.span.start_col as usize - 1..t.span.end_col as usize - 1];
                assert!(!text.ends_with(';') && !text.trim().is_empty(), "{name}: `{text}`");
            }
        }
    }
}

#[test]
fn path_conditions_predict_execution() {
    // Exhaustive over reachable states and all inputs: a statement runs in a
    // cycle exactly when its path condition holds on that cycle's values.
    for name in designs() {
        let (design, _) = load(name);
        let sim = Sim::new(design.unit());
        let targets: Vec<_> = enumerate_targets(design.unit(), &design.file_name())
            .into_iter()
            .filter(|t| t.kind == TargetKind::Statement)
            .collect();
        for state in sim.reachable() {
            for input in sim.all_inputs() {
                let mut executed = Vec::new();
                let (vals, _) = sim.cycle(&state, &input, &mut executed);
                let ctx = Ctx { sim: &sim, vals: &vals, past: None };
                for t in &targets {
                    let ran = executed.iter().any(|s| s.start() == t.span.start());
                    let predicted = ctx.truth(&t.path_condition);
                    assert_eq!(ran, predicted, "{name}: {} under {vals:?}", t.id);
                }
            }
        }
    }
}

/// Directive and block counts found by a line scanner that knows nothing
/// about expressions.
fn scan(text: &str) -> (BTreeSet<String>, usize) {
    let block = Regex::new(r"^\s*property\s+(\w+)\s*;").unwrap();
    let directive = Regex::new(r"\b(assert|cover|assume)\s+property\s*\(").unwrap();
    let mut names = BTreeSet::new();
    let mut directives = 0;
    for line in text.lines() {
        let code = line.split("//").next().unwrap();
        if let Some(c) = block.captures(code) {
            names.insert(c[1].to_string());
        }
        directives += directive.find_iter(code).count();
    }
    (names, directives)
}

#[test]
fn line_scanner_agrees_with_the_parser_on_closed_files() {
    for name in designs() {
        let (design, seed) = load(name);
        let run = run_closure(&design, &seed, &ClosureConfig::default()).unwrap();
        let parsed = parse_sva(&run.sva_text).unwrap();
        let (names, directives) = scan(&run.sva_text);
        let parsed_names: BTreeSet<String> = parsed.properties.iter().map(|p| p.name.clone()).collect();
        assert_eq!(names, parsed_names, "{name}");
        assert_eq!(directives, parsed.properties.len(), "{name}");
    }
}

fn expr() -> impl Strategy<Value = String> {
    let leaf = prop_oneof![
        prop::sample::select(vec!["a", "b", "c", "d1", "d2"]).prop_map(str::to_string),
        (0u32..16).prop_map(|v| format!("4'd{v}")),
        Just("1'b1".to_string()),
    ];
    leaf.prop_recursive(3, 12, 2, |inner| {
        prop_oneof![
            (inner.clone(), prop::sample::select(vec!["+", "-", "&", "|", "^"]), inner.clone())
                .prop_map(|(l, op, r)| format!("({l} {op} {r})")),
            inner.clone().prop_map(|e| format!("!{e}")),
            inner.prop_map(|e| format!("$past({e})")),
        ]
    })
}

fn property() -> impl Strategy<Value = SvaProperty> {
    (
        "[a-z][a-z0-9_]{0,10}",
        prop::bool::ANY,
        prop::option::of(prop::sample::select(vec!["!rst", "rst"])),
        expr(),
        prop_oneof![Just(ImplOp::Overlap), Just(ImplOp::NonOverlap), (1u32..=16).prop_map(ImplOp::OverlapDelay)],
        expr(),
        prop::sample::select(vec!["==", "!="]),
    )
        .prop_map(|(name, cover, dis, ante, op, lhs, rel)| SvaProperty {
            name: format!("p_{name}"),
            kind: if cover { PropKind::Cover } else { PropKind::Assert },
            clock_expr: "@(posedge clk)".into(),
            disable_expr: dis.map(str::to_string),
            antecedent: ante.replace("$past", ""),
            op,
            consequent: format!("c {rel} {lhs}"),
            behavior: String::new(),
            trace: None,
        })
}

fn resources() -> SvaResources {
    let mut res = parse_sva("").unwrap().resources;
    for s in ["clk", "rst", "a", "b", "c", "d1", "d2"] {
        res.add_signal(s, Some(4));
    }
    res
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn rendered_properties_parse_back(p in property()) {
        let parsed = parse_sva(&p.render()).unwrap();
        prop_assert_eq!(parsed.properties.len(), 1);
        let q = &parsed.properties[0];
        prop_assert_eq!(&q.name, &p.name);
        prop_assert_eq!(q.kind, p.kind);
        prop_assert_eq!(&q.disable_expr, &p.disable_expr);
        prop_assert_eq!(q.op, p.op);
        prop_assert_eq!(&q.antecedent, &p.antecedent);
        prop_assert_eq!(&q.consequent, &p.consequent);
        prop_assert_eq!(q.render(), p.render());
    }

    #[test]
    fn merged_properties_scan_back(props in prop::collection::vec(property(), 1..12), seed in any::<u64>()) {
        let res = resources();
        let named = name_and_dedup(props.clone(), &res, seed);
        let named: Vec<SvaProperty> = named
            .into_iter()
            .enumerate()
            .map(|(i, mut p)| {
                p.trace = Some(Trace {
                    file: "t.v".into(),
                    locations: vec![SourceSpan::new((i as u32 + 1, 1), (i as u32 + 1, 5))],
                    iteration: 1,
                });
                p
            })
            .collect();
        let base = "`define CLK @(posedge clk)\n";
        let merged = merge_into_file(base, &named).unwrap();
        prop_assert!(merged.starts_with(base));
        let parsed = parse_sva(&merged).unwrap();
        prop_assert_eq!(parsed.properties.len(), named.len());
        for (p, q) in named.iter().zip(&parsed.properties) {
            prop_assert_eq!(p.render(), q.render());
            prop_assert_eq!(&p.trace, &q.trace);
        }
        let (names, directives) = scan(&merged);
        prop_assert_eq!(names.len(), named.len());
        prop_assert_eq!(directives, named.len());
        // Merging again changes nothing.
        prop_assert_eq!(merge_into_file(&merged, &named).unwrap(), merged.clone());
        // Distinct bodies survive dedup; repeated bodies collapse.
        let bodies: BTreeSet<(String, &str)> = props.iter().map(|p| (p.body(), p.kind.keyword())).collect();
        prop_assert_eq!(named.len(), bodies.len());
    }

    #[test]
    fn coverage_is_a_bounded_percentage(statuses in prop::collection::vec(0u8..3, 0..40), exclude in any::<bool>()) {
        let targets: Vec<TargetRecord> = statuses
            .iter()
            .enumerate()
            .map(|(i, s)| TargetRecord {
                id: format!("t.v:t:stmt@{}.1-{}.2", i + 1, i + 1),
                kind: TargetKind::Statement,
                start: [i as u32 + 1, 1],
                end: [i as u32 + 1, 2],
                status: [Status::Covered, Status::Uncovered, Status::Unreachable][*s as usize],
            })
            .collect();
        let covered = statuses.iter().filter(|s| **s == 0).count();
        let unreachable = statuses.iter().filter(|s| **s == 2).count();
        let denom = if exclude { statuses.len() - unreachable } else { statuses.len() };
        let report = CoverageReport { design: "t".into(), iteration: 0, targets, coverage_pct: 0.0 };
        let pct = compute_coverage(&report, exclude);
        prop_assert!((0.0..=100.0).contains(&pct));
        let want = if denom == 0 { 100.0 } else { (covered as f64 / denom as f64 * 10000.0).round() / 100.0 };
        prop_assert_eq!(pct, want);
    }
}

#[test]
fn ten_thousand_colliding_names_stay_unique() {
    let res = {
        let mut r = parse_sva("property clash; @(posedge clk) a |-> b; endproperty\nassert property (clash);\n")
            .unwrap()
            .resources;
        r.add_signal("c", Some(16));
        r
    };
    let props: Vec<SvaProperty> = (0..10_000)
        .map(|i| SvaProperty {
            name: String::new(),
            kind: PropKind::Assert,
            clock_expr: "@(posedge clk)".into(),
            disable_expr: None,
            antecedent: "a".into(),
            op: ImplOp::Overlap,
            consequent: format!("c == 16'd{i}"),
            behavior: "clash".into(),
            trace: None,
        })
        .collect();
    let named = name_and_dedup(props, &res, 11);
    assert_eq!(named.len(), 10_000);
    let names: BTreeSet<&str> = named.iter().map(|p| p.name.as_str()).collect();
    assert_eq!(names.len(), 10_000);
    assert!(!names.contains("clash"));
    let ident = Regex::new(r"^[A-Za-z_][A-Za-z0-9_]*$").unwrap();
    assert!(names.iter().all(|n| ident.is_match(n)));
    // Same seed, same names.
    let again = name_and_dedup(named.iter().cloned().map(|mut p| { p.name.clear(); p }).collect(), &res, 11);
    assert!(named.iter().zip(&again).all(|(a, b)| a.name == b.name));
}

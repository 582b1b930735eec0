use std::collections::HashMap;

use nail_core::cond::{eval_condition, parse_condition, CompareOp, CondErrorKind, CondExpr, ScanFieldDecl};
use nail_core::nir::{SignalScope, Width};
use proptest::prelude::*;

struct Sigs(Vec<(&'static str, Width)>);

impl SignalScope for Sigs {
    fn signal_width(&self, path: &str) -> Option<Width> {
        self.0.iter().find(|(p, _)| *p == path).map(|(_, w)| *w)
    }
}

fn scope() -> Sigs {
    Sigs(vec![("X1", 8), ("X2", 8), ("rf_waddr", 5), ("rf_wen", 1), ("b", 5), ("core.v", 3)])
}

fn map(kv: &[(&str, u64)]) -> HashMap<String, u64> {
    kv.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

fn decl(name: &str, width: Width) -> ScanFieldDecl {
    ScanFieldDecl { name: name.into(), width }
}

fn sf(name: &str, width: Width) -> Box<CondExpr> {
    Box::new(CondExpr::ScanField { name: name.into(), width })
}

fn sig(path: &str, width: Width) -> Box<CondExpr> {
    Box::new(CondExpr::Signal { path: path.into(), width })
}

#[test]
fn two_field_disjunction() {
    let (e, decls) = parse_condition("($sf(t1,8) == X1) || ($sf(t2,8) == X2)", &scope()).unwrap();
    assert_eq!(decls, [decl("t1", 8), decl("t2", 8)]);
    let want = CondExpr::Or(
        Box::new(CondExpr::Compare { op: CompareOp::Eq, lhs: sf("t1", 8), rhs: sig("X1", 8) }),
        Box::new(CondExpr::Compare { op: CompareOp::Eq, lhs: sf("t2", 8), rhs: sig("X2", 8) }),
    );
    assert_eq!(e, want);
    let s = map(&[("X1", 3), ("X2", 0)]);
    assert!(eval_condition(&e, &s, &map(&[("t1", 3), ("t2", 9)])).unwrap());
    assert!(!eval_condition(&e, &s, &map(&[("t1", 4), ("t2", 9)])).unwrap());
}

#[test]
fn register_file_condition() {
    let (e, decls) = parse_condition("($sf(targetAddr,5) == rf_waddr) && rf_wen", &scope()).unwrap();
    assert_eq!(decls, [decl("targetAddr", 5)]);
    let f = map(&[("targetAddr", 15)]);
    assert!(!eval_condition(&e, &map(&[("rf_waddr", 15), ("rf_wen", 0)]), &f).unwrap());
    assert!(eval_condition(&e, &map(&[("rf_waddr", 15), ("rf_wen", 1)]), &f).unwrap());
}

#[test]
fn exactly_one_address_matches() {
    let (e, _) = parse_condition("($sf(targetAddr,5) == rf_waddr) && rf_wen", &scope()).unwrap();
    for target in 0..32u64 {
        let f = map(&[("targetAddr", target)]);
        let hits: Vec<u64> = (0..32u64)
            .filter(|&a| eval_condition(&e, &map(&[("rf_waddr", a), ("rf_wen", 1)]), &f).unwrap())
            .collect();
        assert_eq!(hits, [target]);
        assert!((0..32).all(|a| !eval_condition(&e, &map(&[("rf_waddr", a), ("rf_wen", 0)]), &f).unwrap()));
    }
}

#[test]
fn error_kinds() {
    let err = |t: &str| parse_condition(t, &scope()).unwrap_err().kind;
    assert_eq!(err("$sf(a,4) == b"), CondErrorKind::WidthMismatch { lhs: 4, rhs: 5 });
    assert_eq!(err("nope == X1"), CondErrorKind::Unresolved("nope".into()));
    assert!(matches!(err("X1"), CondErrorKind::NotBoolean(8)));
    assert!(matches!(err("($sf(a,3) == core.v) || ($sf(a,5) == b)"), CondErrorKind::Conflict { first: 3, second: 5, .. }));
    assert!(matches!(err("rf_wen &&"), CondErrorKind::Syntax(_)));
    assert!(matches!(err("$sf(a,0) == rf_wen"), CondErrorKind::BadWidth(0)));
    assert!(matches!(err("UInt<2>(7) == X1"), CondErrorKind::LiteralTooWide { .. } | CondErrorKind::WidthMismatch { .. }));
}

#[test]
fn error_columns_point_at_the_problem() {
    let e = parse_condition("rf_wen && nope", &scope()).unwrap_err();
    assert_eq!(e.col, 11);
}

#[test]
fn literals_and_repeated_fields() {
    let (e, decls) = parse_condition("(X1 > 0x10) && !(b == 3) && ($sf(k,5) != b) && ($sf(k,5) < b)", &scope()).unwrap();
    assert_eq!(decls, [decl("k", 5)]);
    let f = map(&[("k", 1)]);
    assert!(eval_condition(&e, &map(&[("X1", 0x11), ("b", 4)]), &f).unwrap());
    assert!(!eval_condition(&e, &map(&[("X1", 0x10), ("b", 4)]), &f).unwrap());
    assert!(!eval_condition(&e, &map(&[("X1", 0x11), ("b", 3)]), &f).unwrap());
}

#[test]
fn missing_binding_is_an_error() {
    let (e, _) = parse_condition("$sf(t,8) == X1", &scope()).unwrap();
    assert!(eval_condition(&e, &map(&[]), &map(&[("t", 1)])).is_err());
    assert!(eval_condition(&e, &map(&[("X1", 1)]), &map(&[])).is_err());
}

/// Random token soup drawn from the condition alphabet.
fn token_soup() -> impl Strategy<Value = String> {
    let toks = prop::sample::select(vec![
        "(", ")", "&&", "||", "!", "==", "!=", "<", ">", "$sf(", ",", "X1", "X2", "rf_wen", "rf_waddr", "b", "core.v",
        "3", "0x1f", "UInt<5>(", "t", "8", "5", " ", "?", ".", "$",
    ]);
    prop::collection::vec(toks, 0..20).prop_map(|v| v.concat())
}

/// Well-formed conditions with their scan field bindings.
fn arb_cond() -> impl Strategy<Value = String> {
    let leaf = prop_oneof![
        Just("rf_wen".to_string()),
        (0u8..32).prop_map(|v| format!("(rf_waddr == {v})")),
        Just("($sf(ta,5) == rf_waddr)".to_string()),
        Just("($sf(tb,8) < X1)".to_string()),
        Just("(X1 != X2)".to_string()),
    ];
    leaf.prop_recursive(3, 16, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a} && {b})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a} || {b})")),
            inner.prop_map(|a| format!("!{a}")),
        ]
    })
}

proptest! {
    #[test]
    fn parsing_is_total(s in "\\PC{0,40}") {
        match parse_condition(&s, &scope()) {
            Ok(_) => {}
            Err(e) => prop_assert!(e.col <= s.chars().count() + 1, "{s:?} col {}", e.col),
        }
    }

    #[test]
    fn token_soup_is_total(s in token_soup()) {
        if let Err(e) = parse_condition(&s, &scope()) {
            prop_assert!(e.col <= s.chars().count() + 1);
        }
    }

    #[test]
    fn eval_is_pure_and_boolean(
        text in arb_cond(),
        vals in any::<[u64; 4]>(),
        fields in any::<[u64; 2]>(),
    ) {
        let (e, decls) = parse_condition(&text, &scope()).unwrap();
        prop_assert!(decls.iter().all(|d| d.name == "ta" || d.name == "tb"));
        let s = map(&[("rf_wen", vals[0] & 1), ("rf_waddr", vals[1] & 31), ("X1", vals[2] & 0xFF), ("X2", vals[3] & 0xFF)]);
        let f = map(&[("ta", fields[0] & 31), ("tb", fields[1] & 0xFF)]);
        let first = eval_condition(&e, &s, &f).unwrap();
        prop_assert_eq!(eval_condition(&e, &s, &f).unwrap(), first);
        prop_assert_eq!(parse_condition(&text, &scope()).unwrap().0, e);
    }
}

//! The specializer: given a function and a pin assignment (or hot map),
//! produce a guarded, optimized [`Variant`].
//!
//! Pipeline: substitute, then (unroll -> propagate/fold -> DCE) iterated to a
//! fixed point (at most [`MAX_PASS_ITERATIONS`] rounds), then guard insertion.
//! A variant whose statement count exceeds [`CODE_SIZE_FACTOR`] times the
//! generic function's is rejected as infeasible.

pub mod passes;

use crate::ir::{
    stmt_count, node_count, CmpOp, Expr, FunctionDef, PointKind, Program, ScalarType, Stmt, Value,
};
use std::collections::BTreeMap;
use std::fmt;
use thiserror::Error;

pub use passes::{eliminate_dead_code, propagate_and_fold, unroll_loops};

/// Upper bound on (unroll -> fold -> DCE) rounds.
pub const MAX_PASS_ITERATIONS: u32 = 8;
/// A specialized body may grow to at most this many times the generic
/// statement count before the variant is rejected.
pub const CODE_SIZE_FACTOR: u64 = 64;
/// Default trip-count cap for loop unrolling.
pub const DEFAULT_UNROLL_CAP: u32 = 16;

/// Identity of a specialization point: a scalar variable in a function.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PointId {
    pub function: String,
    pub variable: String,
}

impl PointId {
    pub fn new(function: impl Into<String>, variable: impl Into<String>) -> Self {
        PointId {
            function: function.into(),
            variable: variable.into(),
        }
    }
}

impl fmt::Display for PointId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.function, self.variable)
    }
}

/// A registered specialization point.
///
/// Workload knobs guard by default (their values arrive with requests);
/// config knobs do not (the runtime controls the value). `driver_coupled`
/// marks a workload knob the driver adopts when the explorer pins it.
#[derive(Debug, Clone, PartialEq)]
pub struct SpecPoint {
    pub id: PointId,
    pub kind: PointKind,
    pub candidate_values: Option<Vec<Value>>,
    pub guard_enabled: bool,
    pub collection_enabled: bool,
    pub driver_coupled: bool,
}

impl SpecPoint {
    pub fn new(id: PointId, kind: PointKind) -> Self {
        SpecPoint {
            id,
            kind,
            candidate_values: None,
            guard_enabled: kind == PointKind::Workload,
            collection_enabled: true,
            driver_coupled: false,
        }
    }
}

/// A chosen constant assignment for one or more points of a single function.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct PinSet {
    pub function: String,
    /// variable -> pinned value; non-empty, all scalars of `function`.
    pub assignments: BTreeMap<String, Value>,
}

impl PinSet {
    pub fn single(function: impl Into<String>, variable: impl Into<String>, value: Value) -> Self {
        let mut assignments = BTreeMap::new();
        assignments.insert(variable.into(), value);
        PinSet {
            function: function.into(),
            assignments,
        }
    }

    /// Canonical text form, e.g. `s=4` or `b1=2,b2=8`.
    pub fn label(&self) -> String {
        self.assignments
            .iter()
            .map(|(k, v)| format!("{k}={v}"))
            .collect::<Vec<_>>()
            .join(",")
    }
}

/// Hard-coded (input -> output) pairs for the hottest inputs of a pure
/// function, ordered by descending observed frequency (ties by ascending
/// key). The `table_version` tag invalidates the map when rules change.
#[derive(Debug, Clone, PartialEq)]
pub struct HotMapSpec {
    pub function: String,
    /// The scalar parameter the entries key on.
    pub key_param: String,
    pub entries: Vec<(Value, Value)>,
    pub table_version: u64,
}

/// How a variant came to be.
#[derive(Debug, Clone, PartialEq)]
pub enum VariantOrigin {
    Generic,
    Pinned(PinSet),
    HotMap(HotMapSpec),
}

/// Entry checks protecting a variant.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct GuardInfo {
    /// Guarded (variable, pinned value) pairs in signature order.
    pub pinned: Vec<(String, Value)>,
    /// Required runtime table version for hot-map variants.
    pub table_version: Option<u64>,
}

impl GuardInfo {
    pub fn is_empty(&self) -> bool {
        self.pinned.is_empty() && self.table_version.is_none()
    }
}

/// One line of the pass log: nodes before -> nodes after.
#[derive(Debug, Clone, PartialEq)]
pub struct PassLogEntry {
    pub pass: &'static str,
    pub nodes_before: u64,
    pub nodes_after: u64,
}

impl fmt::Display for PassLogEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {} -> {}", self.pass, self.nodes_before, self.nodes_after)
    }
}

/// A compiled variant of one function: optimized code plus guard metadata.
/// The generic variant has no guards and code identical to the base
/// definition. Call statistics live in the execution engine.
#[derive(Debug, Clone, PartialEq)]
pub struct Variant {
    pub id: String,
    pub base: String,
    pub origin: VariantOrigin,
    pub code: FunctionDef,
    pub guards: GuardInfo,
    pub pass_log: Vec<PassLogEntry>,
}

impl Variant {
    pub fn generic(func: &FunctionDef) -> Variant {
        Variant {
            id: format!("{}[generic]", func.name),
            base: func.name.clone(),
            origin: VariantOrigin::Generic,
            code: func.clone(),
            guards: GuardInfo::default(),
            pass_log: Vec::new(),
        }
    }

    pub fn is_generic(&self) -> bool {
        matches!(self.origin, VariantOrigin::Generic)
    }
}

/// Options controlling specialization.
#[derive(Debug, Clone)]
pub struct SpecializeOpts {
    pub unroll_cap: u32,
    pub guards: GuardSelection,
}

/// Which pinned variables get an entry check. Workload knobs default to
/// guarded; the `point_disable_spec_check` hook and config knobs leave
/// pins unguarded (mismatched calls then silently run specialized code).
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GuardSelection {
    All,
    None,
    Only(std::collections::BTreeSet<String>),
}

impl GuardSelection {
    fn includes(&self, var: &str) -> bool {
        match self {
            GuardSelection::All => true,
            GuardSelection::None => false,
            GuardSelection::Only(set) => set.contains(var),
        }
    }
}

impl Default for SpecializeOpts {
    fn default() -> Self {
        SpecializeOpts {
            unroll_cap: DEFAULT_UNROLL_CAP,
            guards: GuardSelection::All,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpecError {
    #[error("unknown function `{0}`")]
    UnknownFunction(String),
    #[error("unknown specialization point `{0}`")]
    UnknownPoint(PointId),
    #[error("point `{0}` is not a scalar variable")]
    NotScalar(PointId),
    #[error("pin for `{variable}` has type {got}, expected {expected}")]
    PinType {
        variable: String,
        expected: ScalarType,
        got: ScalarType,
    },
    #[error("substitution refused: `{0}` is assigned in the function body")]
    SubstitutionRefused(String),
    #[error("cannot guard `{0}` at entry: not a parameter")]
    GuardOnLocal(String),
    #[error("specialized body has {statements} statements, over the {limit} limit")]
    SpecializationTooLarge { statements: u64, limit: u64 },
    #[error("hot map target `{0}` is not pure")]
    NotPure(String),
    #[error("hot map has no entries")]
    EmptyHotMap,
    #[error("hot map has duplicate key {0}")]
    DuplicateHotKey(Value),
}

// ---------------------------------------------------------------------------
// Pin validation and substitution
// ---------------------------------------------------------------------------

fn check_pins(func: &FunctionDef, pins: &PinSet) -> Result<(), SpecError> {
    assert!(!pins.assignments.is_empty(), "PinSet must be non-empty");
    let mut assigned = std::collections::BTreeSet::new();
    passes::assigned_names(&func.body, &mut assigned);
    for (var, value) in &pins.assignments {
        let id = PointId::new(&func.name, var);
        let declared = func.params.iter().any(|(n, _)| n == var)
            || func.locals.iter().any(|(n, _)| n == var);
        if !declared {
            return Err(SpecError::UnknownPoint(id));
        }
        let ty = func
            .scalar_type_of(var)
            .ok_or_else(|| SpecError::NotScalar(id))?;
        if value.scalar_type() != ty {
            return Err(SpecError::PinType {
                variable: var.clone(),
                expected: ty,
                got: value.scalar_type(),
            });
        }
        if assigned.contains(var) {
            return Err(SpecError::SubstitutionRefused(var.clone()));
        }
    }
    Ok(())
}

/// Replace every read of a pinned variable with the pinned constant. Pinned
/// parameters stay in the signature; callers are unchanged.
pub fn substitute(func: &FunctionDef, pins: &PinSet) -> Result<FunctionDef, SpecError> {
    check_pins(func, pins)?;
    let mut out = func.clone();
    passes::substitute_body(&mut out.body, &pins.assignments);
    Ok(out)
}

/// Prepend the entry specialization check: a conjunction `var_i == pinned_i`
/// over the guarded pins, in signature order. With guards disabled no check
/// is emitted and mismatched calls silently run the specialized code.
pub fn insert_guards(
    func: &FunctionDef,
    pins: &PinSet,
    guards_enabled: bool,
) -> Result<(FunctionDef, GuardInfo), SpecError> {
    let selection = if guards_enabled {
        GuardSelection::All
    } else {
        GuardSelection::None
    };
    insert_selected_guards(func, pins, &selection)
}

fn insert_selected_guards(
    func: &FunctionDef,
    pins: &PinSet,
    selection: &GuardSelection,
) -> Result<(FunctionDef, GuardInfo), SpecError> {
    let mut ordered: Vec<(usize, String, Value)> = Vec::new();
    for (var, value) in &pins.assignments {
        if !selection.includes(var) {
            continue;
        }
        match func.param_index(var) {
            Some(i) => ordered.push((i, var.clone(), *value)),
            None => return Err(SpecError::GuardOnLocal(var.clone())),
        }
    }
    if ordered.is_empty() {
        return Ok((func.clone(), GuardInfo::default()));
    }
    ordered.sort();
    let conjuncts: Vec<Expr> = ordered
        .iter()
        .map(|(_, var, value)| Expr::Cmp {
            op: CmpOp::Eq,
            lhs: Box::new(Expr::Var(var.clone())),
            rhs: Box::new(value.as_const_expr()),
        })
        .collect();
    let mut out = func.clone();
    out.body.insert(0, Stmt::Guard(conjuncts));
    let info = GuardInfo {
        pinned: ordered.into_iter().map(|(_, v, val)| (v, val)).collect(),
        table_version: None,
    };
    Ok((out, info))
}

// ---------------------------------------------------------------------------
// The full pipeline
// ---------------------------------------------------------------------------

/// Specialize one function of `program` to `pins`: substitute constants, run
/// the pass pipeline to a fixed point, insert guards, and enforce the code
/// size cap.
pub fn pin_and_specialize(
    program: &Program,
    pins: &PinSet,
    opts: SpecializeOpts,
) -> Result<Variant, SpecError> {
    let generic = program
        .function(&pins.function)
        .ok_or_else(|| SpecError::UnknownFunction(pins.function.clone()))?;

    let mut log = Vec::new();
    let logged = |pass: &'static str, before: &FunctionDef, after: &FunctionDef| PassLogEntry {
        pass,
        nodes_before: node_count(&before.body),
        nodes_after: node_count(&after.body),
    };

    let mut current = substitute(generic, pins)?;
    log.push(logged("substitute", generic, &current));

    for _ in 0..MAX_PASS_ITERATIONS {
        let unrolled = passes::unroll_loops(&current, opts.unroll_cap);
        log.push(logged("unroll", &current, &unrolled));
        let folded = passes::propagate_and_fold(&unrolled);
        log.push(logged("propagate_fold", &unrolled, &folded));
        let cleaned = passes::eliminate_dead_code(&folded);
        log.push(logged("dce", &folded, &cleaned));
        let fixed = cleaned == current;
        current = cleaned;
        if fixed {
            break;
        }
    }

    let (guarded, guard_info) = insert_selected_guards(&current, pins, &opts.guards)?;

    let statements = stmt_count(&guarded.body);
    let limit = CODE_SIZE_FACTOR * stmt_count(&generic.body);
    if statements > limit {
        return Err(SpecError::SpecializationTooLarge { statements, limit });
    }

    let guard_tag = if guard_info.pinned.len() == pins.assignments.len() {
        String::new()
    } else if guard_info.pinned.is_empty() {
        "!noguard".to_string()
    } else {
        format!(
            "!guard={}",
            guard_info
                .pinned
                .iter()
                .map(|(v, _)| v.as_str())
                .collect::<Vec<_>>()
                .join("+")
        )
    };
    Ok(Variant {
        id: format!("{}[{}]{}", pins.function, pins.label(), guard_tag),
        base: pins.function.clone(),
        origin: VariantOrigin::Pinned(pins.clone()),
        code: guarded,
        guards: guard_info,
        pass_log: log,
    })
}

// ---------------------------------------------------------------------------
// Hot maps
// ---------------------------------------------------------------------------

/// Build a hot-map variant: an entry If-chain returning hard-coded results
/// for the hottest keys, followed by the original body. The runtime table
/// version is checked by the engine before the variant runs; on mismatch the
/// call falls back to the generic function.
pub fn apply_hot_map(program: &Program, spec: &HotMapSpec) -> Result<Variant, SpecError> {
    let generic = program
        .function(&spec.function)
        .ok_or_else(|| SpecError::UnknownFunction(spec.function.clone()))?;
    if !generic.pure {
        return Err(SpecError::NotPure(spec.function.clone()));
    }
    if spec.entries.is_empty() {
        return Err(SpecError::EmptyHotMap);
    }
    let key_id = PointId::new(&spec.function, &spec.key_param);
    if generic.param_index(&spec.key_param).is_none() {
        return Err(SpecError::UnknownPoint(key_id));
    }
    let key_ty = generic
        .scalar_type_of(&spec.key_param)
        .ok_or(SpecError::NotScalar(key_id))?;

    let mut seen = std::collections::BTreeSet::new();
    for (key, result) in &spec.entries {
        if key.scalar_type() != key_ty {
            return Err(SpecError::PinType {
                variable: spec.key_param.clone(),
                expected: key_ty,
                got: key.scalar_type(),
            });
        }
        if result.scalar_type() != generic.return_type {
            return Err(SpecError::PinType {
                variable: format!("{} result", spec.function),
                expected: generic.return_type,
                got: result.scalar_type(),
            });
        }
        if !seen.insert(*key) {
            return Err(SpecError::DuplicateHotKey(*key));
        }
    }

    let mut code = generic.clone();
    let chain: Vec<Stmt> = spec
        .entries
        .iter()
        .map(|(key, result)| Stmt::If {
            cond: Expr::Cmp {
                op: CmpOp::Eq,
                lhs: Box::new(Expr::Var(spec.key_param.clone())),
                rhs: Box::new(key.as_const_expr()),
            },
            then_body: vec![Stmt::Return(result.as_const_expr())],
            else_body: Vec::new(),
        })
        .collect();
    for (i, stmt) in chain.into_iter().enumerate() {
        code.body.insert(i, stmt);
    }

    Ok(Variant {
        id: format!(
            "{}[hotmap.v{}.k{}]",
            spec.function,
            spec.table_version,
            spec.entries.len()
        ),
        base: spec.function.clone(),
        origin: VariantOrigin::HotMap(spec.clone()),
        code,
        guards: GuardInfo {
            pinned: Vec::new(),
            table_version: Some(spec.table_version),
        },
        pass_log: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::parse_program;

    fn body_of(src: &str, f: &str) -> Vec<Stmt> {
        parse_program(src).unwrap().function(f).unwrap().body.clone()
    }

    #[test]
    fn pin_folds_to_constant_return() {
        let p = parse_program("(func g ((s i64)) (locals (y i64)) (set y (* s 2)) (return y))")
            .unwrap();
        let v = pin_and_specialize(
            &p,
            &PinSet::single("g", "s", Value::Int(4)),
            SpecializeOpts::default(),
        )
        .unwrap();
        // Guard first, then the fully folded body.
        assert_eq!(
            v.code.body,
            vec![
                Stmt::Guard(vec![Expr::Cmp {
                    op: CmpOp::Eq,
                    lhs: Box::new(Expr::Var("s".into())),
                    rhs: Box::new(Expr::ConstInt(4)),
                }]),
                Stmt::Return(Expr::ConstInt(8)),
            ]
        );
        assert_eq!(v.guards.pinned, vec![("s".to_string(), Value::Int(4))]);
    }

    #[test]
    fn pin_removes_dead_branch() {
        let p = parse_program(
            "(func g ((s i64)) (if (== s 0) (then (return 0)) (else (return (* s s)))))",
        )
        .unwrap();
        let v = pin_and_specialize(
            &p,
            &PinSet::single("g", "s", Value::Int(5)),
            SpecializeOpts::default(),
        )
        .unwrap();
        assert_eq!(v.code.body[1], Stmt::Return(Expr::ConstInt(25)));
        assert_eq!(v.code.body.len(), 2);
    }

    #[test]
    fn substitute_replaces_reads_and_keeps_signature() {
        let p = parse_program("(func f ((x i64)) (return x))").unwrap();
        let out = substitute(
            p.function("f").unwrap(),
            &PinSet::single("f", "x", Value::Int(1)),
        )
        .unwrap();
        assert_eq!(out.body, vec![Stmt::Return(Expr::ConstInt(1))]);
        assert_eq!(out.params, p.function("f").unwrap().params);
    }

    #[test]
    fn substitute_refuses_reassigned_variable() {
        let p = parse_program("(func f ((x i64)) (set x 2) (return x))").unwrap();
        let err = substitute(
            p.function("f").unwrap(),
            &PinSet::single("f", "x", Value::Int(1)),
        )
        .unwrap_err();
        assert_eq!(err, SpecError::SubstitutionRefused("x".into()));
    }

    #[test]
    fn substitute_handles_multiple_points_in_one_pass() {
        let p = parse_program("(func f ((a i64) (b i64)) (return (+ a b)))").unwrap();
        let mut pins = PinSet::single("f", "a", Value::Int(2));
        pins.assignments.insert("b".into(), Value::Int(3));
        let out = substitute(p.function("f").unwrap(), &pins).unwrap();
        assert_eq!(
            out.body,
            vec![Stmt::Return(Expr::Bin {
                op: crate::ir::BinOp::Add,
                lhs: Box::new(Expr::ConstInt(2)),
                rhs: Box::new(Expr::ConstInt(3)),
            })]
        );
    }

    #[test]
    fn substitute_rejects_type_mismatch_and_unknown_point() {
        let p = parse_program("(func f ((x i64) (a arr-i64)) (return x))").unwrap();
        let f = p.function("f").unwrap();
        assert!(matches!(
            substitute(f, &PinSet::single("f", "x", Value::Float(1.0))),
            Err(SpecError::PinType { .. })
        ));
        assert!(matches!(
            substitute(f, &PinSet::single("f", "zz", Value::Int(1))),
            Err(SpecError::UnknownPoint(_))
        ));
        assert!(matches!(
            substitute(f, &PinSet::single("f", "a", Value::Int(1))),
            Err(SpecError::NotScalar(_))
        ));
    }

    #[test]
    fn propagation_flows_through_assign_chains() {
        let p = parse_program(
            "(func f ((q i64)) (locals (a i64) (b i64)) (set a 2) (set b (* a 3)) (return b))",
        )
        .unwrap();
        let folded = propagate_and_fold(p.function("f").unwrap());
        assert_eq!(folded.body[2], Stmt::Return(Expr::ConstInt(6)));
        let cleaned = eliminate_dead_code(&folded);
        assert_eq!(cleaned.body, vec![Stmt::Return(Expr::ConstInt(6))]);
    }

    #[test]
    fn division_by_zero_is_never_folded() {
        let p = parse_program("(func f ((q i64)) (return (/ 1 0)))").unwrap();
        let folded = propagate_and_fold(p.function("f").unwrap());
        assert_eq!(folded.body, body_of("(func f ((q i64)) (return (/ 1 0)))", "f"));
    }

    #[test]
    fn branch_assignments_do_not_propagate_past_the_join() {
        let src = "(func f ((c bool)) (locals (t i64))
                     (set t 1)
                     (if c (then (set t 2)) (else (set t 3)))
                     (return t))";
        let p = parse_program(src).unwrap();
        let folded = propagate_and_fold(p.function("f").unwrap());
        assert_eq!(folded.body[2], Stmt::Return(Expr::Var("t".into())));
    }

    #[test]
    fn dce_keeps_live_branch_and_drops_dead_effects() {
        let src = "(func f ((q i64))
                     (if true (then (return 1)) (else (emit \"pkt\" 0) (return 2))))";
        let p = parse_program(src).unwrap();
        let cleaned = eliminate_dead_code(p.function("f").unwrap());
        assert_eq!(cleaned.body, vec![Stmt::Return(Expr::ConstInt(1))]);
    }

    #[test]
    fn dce_removes_unused_assignment_but_never_emit() {
        let src = "(func f ((q i64)) (locals (t i64))
                     (set t 5)
                     (emit \"live\" q)
                     (return q))";
        let p = parse_program(src).unwrap();
        let cleaned = eliminate_dead_code(p.function("f").unwrap());
        assert_eq!(cleaned.body.len(), 2);
        assert!(matches!(cleaned.body[0], Stmt::Emit { .. }));
    }

    #[test]
    fn dce_keeps_trapping_assignment() {
        let src = "(func f ((q i64)) (locals (t i64)) (set t (/ 1 q)) (return 0))";
        let p = parse_program(src).unwrap();
        let cleaned = eliminate_dead_code(p.function("f").unwrap());
        assert_eq!(cleaned.body.len(), 2);
    }

    #[test]
    fn unroll_expands_constant_trip_counts_only() {
        let src = "(func f ((n i64) (a arr-i64))
                     (for i 0 4 1 (store a i i))
                     (for j 0 100 1 (store a j j))
                     (for k 0 n 1 (store a k k))
                     (return 0))";
        let p = parse_program(src).unwrap();
        let out = unroll_loops(p.function("f").unwrap(), 16);
        // First loop: four store copies with i substituted.
        assert_eq!(
            out.body[0],
            Stmt::Store {
                array: "a".into(),
                index: Expr::ConstInt(0),
                value: Expr::ConstInt(0),
            }
        );
        assert_eq!(
            out.body[3],
            Stmt::Store {
                array: "a".into(),
                index: Expr::ConstInt(3),
                value: Expr::ConstInt(3),
            }
        );
        // Trip count 100 exceeds the cap; non-constant bound untouched.
        assert!(matches!(&out.body[4], Stmt::For { var, .. } if var == "j"));
        assert!(matches!(&out.body[5], Stmt::For { var, .. } if var == "k"));
        assert_eq!(out.body.len(), 7);
    }

    #[test]
    fn passes_are_idempotent_at_the_fixed_point() {
        let src = "(func f ((s i64) (a arr-i64)) (locals (acc i64))
                     (set acc 0)
                     (for i 0 3 1
                       (set acc (+ acc (load a i)))
                       (if (< acc 100) (then (store a i acc))))
                     (return acc))";
        let p = parse_program(src).unwrap();
        let mut cur = p.function("f").unwrap().clone();
        for _ in 0..MAX_PASS_ITERATIONS {
            let next = eliminate_dead_code(&propagate_and_fold(&unroll_loops(&cur, 16)));
            if next == cur {
                break;
            }
            cur = next;
        }
        let again = eliminate_dead_code(&propagate_and_fold(&unroll_loops(&cur, 16)));
        assert_eq!(again, cur);
    }

    #[test]
    fn guards_form_a_single_conjunction_in_signature_order() {
        let p = parse_program("(func f ((a i64) (b i64)) (return (+ a b)))").unwrap();
        let mut pins = PinSet::single("f", "b", Value::Int(3));
        pins.assignments.insert("a".into(), Value::Int(2));
        let (guarded, info) = insert_guards(p.function("f").unwrap(), &pins, true).unwrap();
        match &guarded.body[0] {
            Stmt::Guard(conjuncts) => {
                assert_eq!(conjuncts.len(), 2);
                assert!(matches!(&conjuncts[0], Expr::Cmp { lhs, .. }
                    if **lhs == Expr::Var("a".into())));
            }
            other => panic!("expected guard, got {other:?}"),
        }
        assert_eq!(info.pinned.len(), 2);
        assert_eq!(info.pinned[0].0, "a");
    }

    #[test]
    fn disabled_guards_emit_no_check() {
        let p = parse_program("(func f ((s i64)) (return s))").unwrap();
        let (code, info) = insert_guards(
            p.function("f").unwrap(),
            &PinSet::single("f", "s", Value::Int(4)),
            false,
        )
        .unwrap();
        assert_eq!(code.body, p.function("f").unwrap().body);
        assert!(info.is_empty());
    }

    #[test]
    fn guarding_a_local_is_an_error() {
        let src = "(func f ((x i64)) (locals (t i64)) (return x))";
        let p = parse_program(src).unwrap();
        let err = insert_guards(
            p.function("f").unwrap(),
            &PinSet::single("f", "t", Value::Int(1)),
            true,
        )
        .unwrap_err();
        assert_eq!(err, SpecError::GuardOnLocal("t".into()));
    }

    #[test]
    fn oversized_unrolling_is_rejected() {
        // 16 * 16 * 16 copies of the store blow the 64x statement cap.
        let src = "(func f ((s i64) (a arr-i64))
                     (for i 0 16 1 (for j 0 16 1 (for k 0 16 1 (store a 0 (+ s 1)))))
                     (return 0))";
        let p = parse_program(src).unwrap();
        let err = pin_and_specialize(
            &p,
            &PinSet::single("f", "s", Value::Int(1)),
            SpecializeOpts::default(),
        )
        .unwrap_err();
        assert!(matches!(err, SpecError::SpecializationTooLarge { .. }));
    }

    #[test]
    fn hot_map_prepends_entry_chain() {
        let p = parse_program("(func route ((addr i64)) (return (% addr 7)))").unwrap();
        let spec = HotMapSpec {
            function: "route".into(),
            key_param: "addr".into(),
            entries: vec![(Value::Int(167837187), Value::Int(2))],
            table_version: 1,
        };
        let v = apply_hot_map(&p, &spec).unwrap();
        assert_eq!(v.guards.table_version, Some(1));
        assert_eq!(v.code.body.len(), 2);
        match &v.code.body[0] {
            Stmt::If { then_body, .. } => {
                assert_eq!(then_body, &vec![Stmt::Return(Expr::ConstInt(2))]);
            }
            other => panic!("expected entry chain, got {other:?}"),
        }
    }

    #[test]
    fn hot_map_rejects_impure_and_empty() {
        let p = parse_program(
            "(func noisy ((addr i64)) (emit \"x\" addr) (return addr))
             (func quiet ((addr i64)) (return addr))",
        )
        .unwrap();
        let mut spec = HotMapSpec {
            function: "noisy".into(),
            key_param: "addr".into(),
            entries: vec![(Value::Int(1), Value::Int(2))],
            table_version: 1,
        };
        assert!(matches!(apply_hot_map(&p, &spec), Err(SpecError::NotPure(_))));
        spec.function = "quiet".into();
        spec.entries.clear();
        assert!(matches!(apply_hot_map(&p, &spec), Err(SpecError::EmptyHotMap)));
    }

    #[test]
    fn pass_log_reports_node_counts() {
        let p = parse_program("(func g ((s i64)) (locals (y i64)) (set y (* s 2)) (return y))")
            .unwrap();
        let v = pin_and_specialize(
            &p,
            &PinSet::single("g", "s", Value::Int(4)),
            SpecializeOpts::default(),
        )
        .unwrap();
        assert_eq!(v.pass_log[0].pass, "substitute");
        assert!(v.pass_log.iter().any(|e| e.nodes_after < e.nodes_before));
    }
}

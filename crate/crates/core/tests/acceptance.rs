//! Acceptance suite. Each test checks one property exactly on seeded random
//! instances and prints a one-line summary.

use std::process::Command;
use std::sync::{Arc, OnceLock};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use zinbiel_deform::algebra::{Bimodule, ZinbielAlgebra};
use zinbiel_deform::cohomology::{
    differential, push_forward_left, push_forward_right, Cochain, CochainComplex, MorphismComplex, TripleCochain,
};
use zinbiel_deform::deformation::{
    check_deformation, conjugate, extend_from_cocycle, extend_one_order, infinitesimal_difference_is_coboundary,
    obstruction, rigidity_check, trivialize, verify_obstruction_identity, DeformationError, Extension,
    ExtensionOutcome, Infinitesimal, TruncatedDeformation, Verdict,
};
use zinbiel_deform::field::{Field, FieldElement};
use zinbiel_deform::format::ProblemFile;
use zinbiel_deform::matrix::Matrix;
use zinbiel_deform::sample::{self, Instance};

const SUITE_SEED: u64 = 20_240_601;
const SUITE_SIZE: usize = 220;

struct Case {
    label: String,
    complex: Arc<MorphismComplex>,
}

fn suite() -> &'static [Case] {
    static SUITE: OnceLock<Vec<Case>> = OnceLock::new();
    SUITE.get_or_init(|| {
        sample::instance_suite(SUITE_SEED, SUITE_SIZE)
            .into_iter()
            .map(|Instance { label, morphism }| Case {
                label,
                complex: Arc::new(MorphismComplex::new(morphism)),
            })
            .collect()
    })
}

fn rng(tag: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(SUITE_SEED ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

fn verdict(name: &str, failures: &[String], summary: String) {
    if failures.is_empty() {
        println!("PASS {name}: {summary}");
    } else {
        println!("FAIL {name}: {summary}; {} failure(s)", failures.len());
        for f in failures.iter().take(10) {
            println!("  {f}");
        }
        panic!("{name} failed");
    }
}

fn modules(c: &MorphismComplex) -> [(&'static str, &Bimodule); 3] {
    [
        ("R,R", c.source_module()),
        ("S,S", c.target_module()),
        ("R,S", c.cross_module()),
    ]
}

fn module_matrix(module: &Bimodule, i: usize) -> Matrix {
    zinbiel_deform::cohomology::differential_matrix(module, i).unwrap()
}

#[test]
fn c01_differentials_square_to_zero() {
    let mut failures = Vec::new();
    let mut products = 0;
    for case in suite() {
        let c = &case.complex;
        for i in 1..=2 {
            let p = c.differential_matrix(i + 1).unwrap().mul(c.differential_matrix(i).unwrap()).unwrap();
            products += 1;
            if !p.is_zero() {
                failures.push(format!("{}: d_f^{} d_f^{i} != 0", case.label, i + 1));
            }
            for (name, m) in modules(c) {
                let p = module_matrix(m, i + 1).mul(&module_matrix(m, i)).unwrap();
                products += 1;
                if !p.is_zero() {
                    failures.push(format!("{}: d^{} d^{i} != 0 on C({name})", case.label, i + 1));
                }
            }
        }
    }
    assert!(suite().len() >= 200);
    verdict(
        "criterion 1, d∘d = 0",
        &failures,
        format!("{products} matrix products on {} instances", suite().len()),
    );
}

#[test]
fn c02_push_forwards_commute_with_differential() {
    let mut rng = rng(2);
    let mut failures = Vec::new();
    let mut checks = 0;
    for case in suite() {
        let c = &case.complex;
        let f = c.morphism();
        let field = f.field();
        let (d, s) = (c.source_dim(), c.target_dim());
        for i in 1..=3 {
            for _ in 0..2 {
                let xi = sample::random_cochain(&mut rng, field, i, d, d, 0.6);
                let lhs = push_forward_left(f, &differential(c.source_module(), &xi).unwrap());
                let rhs = differential(c.cross_module(), &push_forward_left(f, &xi)).unwrap();
                if lhs != rhs {
                    failures.push(format!("{}: f(dξ) != d(fξ) in arity {i}", case.label));
                }
                let pi = sample::random_cochain(&mut rng, field, i, s, s, 0.6);
                let lhs = push_forward_right(f, &differential(c.target_module(), &pi).unwrap());
                let rhs = differential(c.cross_module(), &push_forward_right(f, &pi)).unwrap();
                if lhs != rhs {
                    failures.push(format!("{}: (dπ)f != d(πf) in arity {i}", case.label));
                }
                checks += 2;
            }
        }
    }
    verdict(
        "criterion 2, push-forward commutation",
        &failures,
        format!("{checks} random cochains on {} instances", suite().len()),
    );
}

#[test]
fn c03_product_is_a_two_cocycle() {
    let mut failures = Vec::new();
    let mut count = 0;
    for case in suite() {
        let c = &case.complex;
        for (alg, module) in [(c.source(), c.source_module()), (c.target(), c.target_module())] {
            let m = Cochain::product(alg);
            count += 1;
            if !differential(module, &m).unwrap().is_zero() {
                failures.push(format!("{}: d²(m) != 0 (dim {})", case.label, alg.dim()));
            }
        }
    }
    verdict("criterion 3, d²(m) = 0", &failures, format!("{count} algebras"));
}

#[test]
fn c04_order_one_deformations_are_exactly_the_cocycles() {
    let mut rng = rng(4);
    let mut failures = Vec::new();
    let (mut cocycles, mut nonzero_cocycles, mut non_cocycles) = (0, 0, 0);
    for case in suite() {
        let c = &case.complex;
        let basis = sample::cocycle_basis(c).unwrap();
        let proper = basis.len() < c.space_dim(2);
        for _ in 0..2 {
            let theta1 = sample::random_combination(&mut rng, c, &basis);
            cocycles += 1;
            nonzero_cocycles += usize::from(!theta1.is_zero());
            if let Err(e) = check_deformation(c, vec![c.base_point(), theta1]) {
                failures.push(format!("{}: cocycle rejected: {e}", case.label));
            }
        }
        if proper {
            for _ in 0..2 {
                let theta1 = sample::random_triple(&mut rng, c, 2, 0.5);
                let is_cocycle = c.is_cocycle(&theta1).unwrap().holds();
                non_cocycles += usize::from(!is_cocycle);
                match check_deformation(c, vec![c.base_point(), theta1]) {
                    Ok(_) if !is_cocycle => failures.push(format!("{}: non-cocycle accepted", case.label)),
                    Err(DeformationError::Violation(_)) if !is_cocycle => {}
                    Err(e) if is_cocycle => failures.push(format!("{}: cocycle rejected: {e}", case.label)),
                    Err(e @ DeformationError::Cohomology(_)) => failures.push(format!("{}: {e}", case.label)),
                    _ => {}
                }
            }
        }
    }
    if nonzero_cocycles < 100 {
        failures.push(format!("only {nonzero_cocycles} nonzero cocycles"));
    }
    if non_cocycles < 100 {
        failures.push(format!("only {non_cocycles} non-cocycles"));
    }
    verdict(
        "criterion 4, order one iff cocycle",
        &failures,
        format!("{cocycles} cocycles ({nonzero_cocycles} nonzero) accepted, {non_cocycles} non-cocycles rejected"),
    );
}

#[test]
fn c05_conjugation_changes_infinitesimal_by_a_coboundary() {
    let mut rng = rng(5);
    let mut failures = Vec::new();
    let (mut conjugations, mut nontrivial) = (0, 0);
    let cases: Vec<&Case> = suite().iter().filter(|c| c.complex.space_dim(1) > 0).collect();
    for k in 0..cases.len().max(120) {
        let case = cases[k % cases.len()];
        let c = &case.complex;
        let basis = sample::cocycle_basis(c).unwrap();
        let theta = sample::random_deformation(&mut rng, c, &basis, 2).unwrap();
        let iso = sample::random_isomorphism(&mut rng, c, 2);
        let bar = conjugate(&theta, &iso).unwrap();
        conjugations += 1;
        nontrivial += usize::from(!theta.term(1).sub(bar.term(1)).is_zero());
        let cert = infinitesimal_difference_is_coboundary(&theta, &bar, &iso).unwrap();
        if !cert.holds() {
            failures.push(format!("{}: θ₁ − θ̄₁ != d¹_f φ₁", case.label));
        }
        for t in [&theta, &bar] {
            if let Infinitesimal::Leading { check, order, .. } = t.infinitesimal().unwrap() {
                if !check.holds() {
                    failures.push(format!("{}: infinitesimal at order {order} is not a cocycle", case.label));
                }
            }
        }
    }
    if conjugations < 100 {
        failures.push(format!("only {conjugations} conjugations"));
    }
    verdict(
        "criterion 5, equivalence changes θ₁ by d¹_f φ₁",
        &failures,
        format!("{conjugations} conjugations of order-2 deformations, {nontrivial} with θ₁ != θ̄₁"),
    );
}

/// Deformations built by extending random cocycles to orders 1 to 3.
fn extended_deformations(tag: u64, per_case: usize) -> Vec<(&'static Case, TruncatedDeformation)> {
    let mut rng = rng(tag);
    let mut out = Vec::new();
    for case in suite() {
        let c = &case.complex;
        let basis = sample::cocycle_basis(c).unwrap();
        for _ in 0..per_case {
            let target = rng.random_range(1..=3);
            let theta1 = sample::random_combination(&mut rng, c, &basis);
            let theta = match extend_from_cocycle(c, theta1, target).unwrap() {
                ExtensionOutcome::Complete(t) => t,
                ExtensionOutcome::Obstructed { partial, .. } => partial,
            };
            out.push((case, theta));
        }
    }
    out
}

#[test]
fn c06_obstruction_is_a_compatible_cocycle() {
    let mut failures = Vec::new();
    let deformations = extended_deformations(6, 1);
    let mut nonzero = 0;
    for (case, theta) in &deformations {
        let c = &case.complex;
        let ob = obstruction(theta).cochain;
        nonzero += usize::from(!ob.is_zero());
        if !c.is_cocycle(&ob).unwrap().holds() {
            failures.push(format!("{}: d³_f Ob != 0 (formula)", case.label));
        }
        let via_matrix = c.differential_matrix(3).unwrap().apply(&ob.flatten()).unwrap();
        if via_matrix.iter().any(|x| !x.is_zero()) {
            failures.push(format!("{}: d³_f Ob != 0 (matrix)", case.label));
        }
        if !verify_obstruction_identity(theta).unwrap().holds() {
            failures.push(format!("{}: f Ob_R − Ob_S f != d² Ob_f", case.label));
        }
    }
    if deformations.len() < 100 {
        failures.push(format!("only {} deformations", deformations.len()));
    }
    let orders: Vec<usize> = (1..=3)
        .map(|n| deformations.iter().filter(|(_, t)| t.order() == n).count())
        .collect();
    verdict(
        "criterion 6, obstruction identities",
        &failures,
        format!(
            "{} deformations (orders 1/2/3: {:?}), {nonzero} with nonzero Ob",
            deformations.len(),
            orders
        ),
    );
}

fn line_example() -> (Arc<MorphismComplex>, TripleCochain) {
    let q = Field::Rationals;
    let line = Arc::new(ZinbielAlgebra::abelian(q, 1));
    let f = zinbiel_deform::algebra::AlgebraMorphism::zero(line.clone(), line).unwrap();
    let c = Arc::new(MorphismComplex::new(f));
    let mu = Cochain::from_coeffs(q, 2, 1, 1, vec![q.one()]).unwrap();
    let theta1 = TripleCochain::new(mu, Cochain::zero(q, 2, 1, 1), Cochain::zero(q, 1, 1, 1)).unwrap();
    (c, theta1)
}

#[test]
fn c07_extension_succeeds_exactly_when_obstruction_is_a_coboundary() {
    let mut failures = Vec::new();
    let (mut extended, mut obstructed) = (0, 0);
    for (case, theta) in extended_deformations(7, 1) {
        let c = &case.complex;
        match extend_one_order(&theta).unwrap() {
            Extension::Extended { deformation, term } => {
                extended += 1;
                if deformation.order() != theta.order() + 1 {
                    failures.push(format!("{}: wrong order after extension", case.label));
                }
                if let Err(e) = check_deformation(c, deformation.terms().to_vec()) {
                    failures.push(format!("{}: extension fails recheck: {e}", case.label));
                }
                if c.differential(&term).unwrap() != obstruction(&theta).cochain {
                    failures.push(format!("{}: d²_f θ_(N+1) != Ob", case.label));
                }
            }
            Extension::Obstructed { obstruction: ob, witness } => {
                obstructed += 1;
                if c.coboundary_preimage(&ob.cochain).unwrap().is_some() {
                    failures.push(format!("{}: obstructed but Ob has a preimage", case.label));
                }
                let pairing = zinbiel_deform::matrix::dot(&witness, &ob.cochain.flatten());
                if pairing.is_zero() {
                    failures.push(format!("{}: witness does not separate Ob", case.label));
                }
            }
        }
    }
    let (c, theta1) = line_example();
    let q = Field::Rationals;
    match extend_from_cocycle(&c, theta1, 2).unwrap() {
        ExtensionOutcome::Obstructed { at_order, obstruction: ob, .. } => {
            let expected: &[FieldElement] = &[q.from_i64(-1)];
            if at_order != 2 || ob.cochain.xi.value(&[0, 0, 0]) != expected {
                failures.push(format!("line example: obstructed at {at_order} with Ob_R = {}", ob.cochain.xi));
            }
            if !ob.cochain.pi.is_zero() || !ob.cochain.phi.is_zero() {
                failures.push("line example: Ob_S or Ob_f nonzero".into());
            }
            if c.coboundary_preimage(&ob.cochain).unwrap().is_some() {
                failures.push("line example: Ob has a preimage".into());
            }
        }
        ExtensionOutcome::Complete(_) => failures.push("line example extended to order 2".into()),
    }
    if obstructed == 0 {
        failures.push("no obstructed random extension was exercised".into());
    }
    verdict(
        "criterion 7, extension round trip",
        &failures,
        format!("{extended} extended, {obstructed} obstructed, line example Ob_R(e1,e1,e1) = -e1"),
    );
}

#[test]
fn c08_vanishing_h2_trivializes_deformations() {
    let mut rng = rng(8);
    let mut failures = Vec::new();
    let mut rigid_instances = 0;
    let mut trivialized = 0;
    let mut h2_histogram = std::collections::BTreeMap::new();
    for case in suite() {
        let c = &case.complex;
        let report = rigidity_check(c, None).unwrap();
        *h2_histogram.entry(report.h2).or_insert(0) += 1;
        if report.h2 != 0 {
            if report.verdict != Verdict::Inconclusive {
                failures.push(format!("{}: H² = {} but verdict rigid", case.label, report.h2));
            }
            continue;
        }
        rigid_instances += 1;
        if report.verdict != Verdict::Rigid {
            failures.push(format!("{}: H² = 0 but not reported rigid", case.label));
        }
        let basis = sample::cocycle_basis(c).unwrap();
        for _ in 0..50 {
            let theta = sample::random_deformation(&mut rng, c, &basis, 4).unwrap();
            match trivialize(&theta) {
                Ok(t) if (1..=4).all(|i| t.deformation.term(i).is_zero()) => trivialized += 1,
                Ok(_) => failures.push(format!("{}: trivialization left a term", case.label)),
                Err(e) => failures.push(format!("{}: {e}", case.label)),
            }
        }
    }
    if rigid_instances == 0 {
        failures.push("no instance with H² = 0 in the suite".into());
    }

    // Iterated normalization where it is guaranteed to succeed although H² != 0:
    // conjugates of the trivial deformation.
    let mut equivalent_to_trivial = 0;
    for case in suite().iter().filter(|c| c.complex.space_dim(1) > 0).take(60) {
        let c = &case.complex;
        let iso = sample::random_isomorphism(&mut rng, c, 4);
        let theta = conjugate(&TruncatedDeformation::trivial(c, 4), &iso).unwrap();
        match trivialize(&theta) {
            Ok(t) if t.deformation.is_trivial() => equivalent_to_trivial += 1,
            Ok(_) => failures.push(format!("{}: conjugate of trivial not trivialized", case.label)),
            Err(e) => failures.push(format!("{}: conjugate of trivial: {e}", case.label)),
        }
    }

    let q = Field::Rationals;
    let line = Arc::new(ZinbielAlgebra::abelian(q, 1));
    let c = Arc::new(MorphismComplex::new(zinbiel_deform::algebra::AlgebraMorphism::identity(line)));
    let report = rigidity_check(&c, None).unwrap();
    if (report.h2, report.verdict) != (1, Verdict::Inconclusive) {
        failures.push(format!("id on the abelian line: H² = {}, {:?}", report.h2, report.verdict));
    }
    verdict(
        "criterion 8, H² = 0 trivializes",
        &failures,
        format!(
            "{rigid_instances} instances with H² = 0, {trivialized} order-4 deformations trivialized; \
             {equivalent_to_trivial} conjugates of trivial trivialized with H² != 0; \
             H² histogram {h2_histogram:?}; id on abelian line: dim H²(f,f) = 1, inconclusive"
        ),
    );
}

#[test]
fn c09_matrix_and_formula_differentials_agree() {
    let mut failures = Vec::new();
    let mut columns = 0;
    for case in suite() {
        let c = &case.complex;
        let field = c.morphism().field();
        for i in 1..=3 {
            for (name, module) in modules(c) {
                let m = module_matrix(module, i).transpose();
                let (d, a) = (module.base().dim(), module.dim());
                for j in 0..m.rows() {
                    let mut coeffs = vec![field.zero(); m.rows()];
                    coeffs[j] = field.one();
                    let e = Cochain::from_coeffs(field, i, d, a, coeffs).unwrap();
                    columns += 1;
                    if differential(module, &e).unwrap().coeffs() != m.row(j) {
                        failures.push(format!("{}: d^{i} on C({name}) differs at column {j}", case.label));
                    }
                }
            }
            let m = c.differential_matrix(i).unwrap().transpose();
            for j in 0..m.rows() {
                let mut v = vec![field.zero(); m.rows()];
                v[j] = field.one();
                let e = c.unflatten(i, &v).unwrap();
                columns += 1;
                if c.differential(&e).unwrap().flatten() != m.row(j) {
                    failures.push(format!("{}: d_f^{i} differs at column {j}", case.label));
                }
            }
        }
    }
    verdict(
        "criterion 9, matrix vs formula",
        &failures,
        format!("{columns} basis columns on {} instances", suite().len()),
    );
}

fn data_file(name: &str) -> String {
    format!("{}/data/{name}", env!("CARGO_MANIFEST_DIR"))
}

fn zinb(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_zinb")).args(args).output().expect("run zinb");
    let text = String::from_utf8_lossy(&out.stdout).into_owned() + &String::from_utf8_lossy(&out.stderr);
    (out.status.code().unwrap_or(-1), text)
}

#[test]
fn c10_cli_round_trip_and_exit_codes() {
    let mut failures = Vec::new();
    let mut files = 0;
    for entry in std::fs::read_dir(format!("{}/data", env!("CARGO_MANIFEST_DIR"))).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_none_or(|e| e != "toml") {
            continue;
        }
        files += 1;
        let text = std::fs::read_to_string(&path).unwrap();
        let parsed = ProblemFile::parse(&text).unwrap();
        let written = parsed.serialize();
        let again = ProblemFile::parse(&written).unwrap();
        if again != parsed || again.serialize() != written {
            failures.push(format!("{}: round trip differs", path.display()));
        }
    }

    let scenarios: [(&[&str], i32, &str); 3] = [
        (&["validate", &data_file("square_zero.toml")], 0, "Zinbiel identity verified on 8 triples"),
        (&["rigidity", &data_file("abelian_identity.toml")], 0, "dim H²(f,f) = 1, inconclusive"),
        (
            &["extend", &data_file("obstructed_line.toml"), "--target-order", "2"],
            1,
            "R: (e1,e1,e1) -> -e1",
        ),
    ];
    for (args, code, needle) in scenarios {
        let (got, text) = zinb(args);
        if got != code || !text.contains(needle) {
            failures.push(format!("zinb {}: exit {got}, output {text:?}", args.join(" ")));
        }
        let mut machine = args.to_vec();
        machine.extend(["--output", "machine"]);
        let (got, text) = zinb(&machine);
        let doc: serde_json::Value = serde_json::from_str(&text).unwrap_or_default();
        if got != code || doc["exit_code"] != code {
            failures.push(format!("zinb {} (machine): exit {got}, output {text:?}", args.join(" ")));
        }
    }
    let (_, text) = zinb(&["extend", &data_file("obstructed_line.toml"), "--target-order", "2", "--output", "machine"]);
    let doc: serde_json::Value = serde_json::from_str(&text).unwrap_or_default();
    if doc["obstruction"]["source"]["entries"][0]["value"] != "-1" {
        failures.push(format!("machine obstruction value: {}", doc["obstruction"]));
    }
    let (got, _) = zinb(&["validate", "/nonexistent/problem.toml"]);
    if got != 2 {
        failures.push(format!("missing file: exit {got}"));
    }
    let (got, _) = zinb(&["cohomology"]);
    if got != 2 {
        failures.push(format!("missing argument: exit {got}"));
    }
    if files < 3 {
        failures.push(format!("only {files} curated files"));
    }
    verdict(
        "criterion 10, CLI",
        &failures,
        format!("{files} curated files round-trip, three exit-code scenarios in both output modes"),
    );
}

//! The `verify`, `solve`, `flows` and `gen` pipelines. Each command turns a
//! [`ResolvedRun`] into a [`Report`]; randomness is drawn only from seeds
//! derived from the run seed, so equal inputs give byte-identical reports
//! apart from timings.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::arrangement::{binomial, subsets, ArrangementSpec, SpecFile};
use crate::config::{derive_seed, ResolvedRun};
use crate::error::{Error, Result};
use crate::lagrangian::{
    chart_complete, cx_action, default_s_grid, extract_chart, flow_trajectory, generating_map,
    projection_jacobian, projection_jacobian_fd, sample_chart, transition_expected, transition_jacobian, Chart,
    Flow,
};
use crate::linalg::RatMatrix;
use crate::quotient::{mu_independence_check, mu_map, QuotientAlgebra, SingSpace};
use crate::relations::{involution_suite, RelationSet};
use crate::report::{complex_json, complex_vec_json, rat_json, rat_vec_json, subset_label, Report};
use crate::spectrum::{
    char_poly, hess_jac_identity, hessian_formula, joint_spectrum, match_points, mixed_minor_direct,
    mixed_minor_formula, newton_multistart, rational_point, recover_t, scaled_jacobian, CriticalPoint,
    NewtonOptions, SpectrumOptions,
};
use crate::symbolic::{int, rat, CPoint, Rat, RatPoint, Scalar, CF};

/// Relative step of the central differences.
pub const FD_STEP: f64 = 1e-5;
/// Spectral points and Newton points must agree to this relative distance.
pub const MATCH_TOL: f64 = 1e-8;
/// Relation residuals at numeric critical points.
pub const RELATION_TOL: f64 = 1e-9;
/// `|∂Φ/∂t|` at accepted critical points.
pub const GRADIENT_TOL: f64 = 1e-10;
/// Hessian closed form, Hessian-Jacobian identity, smoothness witness, `t` recovery.
pub const IDENTITY_TOL: f64 = 1e-8;
/// Spread of `d_M² Jac_M` over all `M`.
pub const CHART_SPREAD_TOL: f64 = 1e-10;

const DISCRIMINANT_SKIP: &str = "skipped: z on discriminant";

fn ms_since(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

fn rel_err(a: CF, b: CF) -> f64 {
    (a - b).norm() / b.norm().max(f64::MIN_POSITIVE)
}

fn rows_json(m: &RatMatrix) -> Value {
    json!(m.to_string_rows())
}

/// A fixed rational `t` used by the exact identity sweep.
fn sample_t(k: usize) -> Vec<Rat> {
    (0..k).map(|m| rat(2 * m as i64 + 1, m as i64 + 3)).collect()
}

/// Arrangement-level identities, the involution suite and the finite
/// dimensional algebra at `z`.
pub fn cmd_verify(run: &ResolvedRun) -> Result<Report> {
    let total = Instant::now();
    let spec = &run.spec;
    let (n, k) = (spec.n(), spec.k());
    let mut report = Report::new("verify", run.echo());

    let start = Instant::now();
    let minors = subsets(n, k);
    let zero_minors = minors.iter().filter(|idx| spec.plucker(idx).map_or(true, |d| d == int(0))).count();
    report.check("genericity", zero_minors == 0, minors.len() - zero_minors, minors.len());
    report.check("span_rank", spec.span_rank() == n - k, spec.span_rank(), n - k);

    let mut plucker_count = 0;
    let mut plucker_nonzero = 0;
    for jseq in subsets(n, k + 1) {
        for iseq in subsets(n, k - 1) {
            plucker_count += 1;
            if spec.plucker_relation_residual(&jseq, &iseq)? != int(0) {
                plucker_nonzero += 1;
            }
        }
    }
    report.check_detail(
        "plucker_relations",
        plucker_nonzero == 0,
        plucker_nonzero,
        0,
        format!("{plucker_count} relations"),
    );

    let t = sample_t(k);
    let upper = subsets(n, k + 1);
    let id1_nonzero = upper
        .iter()
        .map(|idx| spec.id1_residual(idx, &run.z, &t))
        .collect::<Result<Vec<_>>>()?
        .iter()
        .filter(|r| **r != int(0))
        .count();
    report.check_detail("id1", id1_nonzero == 0, id1_nonzero, 0, format!("{} tuples", upper.len()));
    report.time("arrangement", ms_since(start));

    let start = Instant::now();
    let inv = involution_suite(spec);
    report.check_detail(
        "involution",
        inv.all_zero(),
        inv.classes.iter().map(|c| c.nonzero_residuals.len()).sum::<usize>(),
        0,
        format!("{} brackets", inv.total_pairs()),
    );
    let rels = RelationSet::build(spec);
    let fact_nonzero = rels.factorization_residuals(n).iter().filter(|r| !r.is_zero()).count();
    report.check("factorization", fact_nonzero == 0, fact_nonzero, 0);
    report.set_data("involution", serde_json::to_value(&inv).expect("serializable"));
    report.time("involution", ms_since(start));

    let algebra_checks = [
        "algebra_dim",
        "commutators",
        "unit_identity",
        "first_kind_operators",
        "second_kind_operators",
        "position_sum",
        "unit_independence",
        "second_kind_normal_forms",
        "sing_dim",
        "mu_independence",
        "charpoly_basis_invariance",
    ];
    if !spec.is_off_discriminant(&run.z) {
        for name in algebra_checks {
            report.skip(name, DISCRIMINANT_SKIP);
        }
        report.time("total", ms_since(total));
        return Ok(report);
    }

    let start = Instant::now();
    let expected = binomial(n - 1, k);
    let alg = QuotientAlgebra::new(spec, &run.z, 0)?;
    report.check("algebra_dim", alg.dim() == expected, alg.dim(), expected);
    let ops = alg.operator_checks();
    report.check_detail(
        "commutators",
        ops.commutator_failures == 0,
        ops.commutator_failures,
        0,
        format!("{} pairs", ops.commutators),
    );
    report.check("unit_identity", ops.unit_identity, ops.unit_identity, true);
    report.check_detail(
        "first_kind_operators",
        ops.first_kind_failures == 0,
        ops.first_kind_failures,
        0,
        format!("{} relations", ops.first_kind),
    );
    report.check_detail(
        "second_kind_operators",
        ops.second_kind_failures == 0,
        ops.second_kind_failures,
        0,
        format!("{} relations", ops.second_kind),
    );
    report.check_detail(
        "position_sum",
        ops.position_sum_failures == 0,
        ops.position_sum_failures,
        0,
        format!("{} subsets", ops.position_sum_subsets),
    );
    let mut unit_mismatch = 0;
    for which in 0..alg.dim() {
        if alg.element_one_via(which)? != alg.element_one() {
            unit_mismatch += 1;
        }
    }
    report.check("unit_independence", unit_mismatch == 0, unit_mismatch, 0);
    let nf = alg.second_kind_normal_forms_vanish()?;
    report.check("second_kind_normal_forms", nf, nf, true);
    report.time("algebra", ms_since(start));

    let start = Instant::now();
    let sing = SingSpace::new(spec)?;
    report.check("sing_dim", sing.dim() == expected, sing.dim(), expected);
    let mu = mu_independence_check(spec, &run.z, 0, n - 1, &sing)?;
    report.check_detail(
        "mu_independence",
        mu.passed(),
        mu.mismatches,
        0,
        format!("j1 = {} vs {}, {} elements, rank {}", mu.j1, mu.j1_alt, mu.checked, mu.rank),
    );
    let alt = QuotientAlgebra::new(spec, &run.z, n - 1)?;
    let combo = |a: &QuotientAlgebra| {
        a.operators()
            .iter()
            .enumerate()
            .fold(RatMatrix::zeros(a.dim(), a.dim()), |acc, (j, m)| acc.add(&m.scale(&int(j as i64 + 1))))
    };
    let cp = char_poly(&combo(&alg));
    let cp_alt = char_poly(&combo(&alt));
    report.check("charpoly_basis_invariance", cp == cp_alt, rat_vec_json(&cp), rat_vec_json(&cp_alt));
    report.time("sing", ms_since(start));

    report.set_data("dim", json!(alg.dim()));
    report.set_data("operators", serde_json::to_value(alg.operator_export()).expect("serializable"));
    report.set_data("mu", rows_json(&mu_map(&alg, &sing)));
    report.set_data("charpoly", rat_vec_json(&cp));
    report.time("total", ms_since(total));
    Ok(report)
}

#[derive(Default)]
struct Worst {
    value: f64,
    failures: usize,
}

impl Worst {
    fn add(&mut self, v: f64, tol: f64) {
        if v.is_nan() || v > self.value {
            self.value = if v.is_nan() { f64::NAN } else { v };
        }
        if !(v < tol) {
            self.failures += 1;
        }
    }

    fn record(&self, report: &mut Report, name: &str, tol: f64, count: usize) {
        report.check_detail(
            name,
            self.failures == 0,
            self.value,
            json!({ "lt": tol }),
            format!("{} of {count} points fail", self.failures),
        );
    }
}

struct PointChecks {
    relations: f64,
    position_sum: f64,
    hessian: Option<f64>,
    hess_jac: Option<f64>,
    chart_spread: f64,
    projection_fd: f64,
    witness: f64,
    t_recovery: f64,
}

fn point_checks(spec: &ArrangementSpec, rels: &RelationSet, z: &[CF], pt: &CriticalPoint) -> Result<PointChecks> {
    let n = spec.n();
    let k = spec.k();
    let phase = CPoint::new(z.to_vec(), pt.p.clone());
    let relations = rels.max_relative_residual(&phase)?;
    let sum: CF = z.iter().zip(&pt.p).map(|(a, b)| a * b).sum();
    let position_sum = rel_err(sum, CF::from_rat(&spec.weight_sum()));

    let zero_hess = pt.hess.norm() == 0.0;
    let hessian = (!zero_hess).then(|| rel_err(hessian_formula(spec, &pt.p), pt.hess));
    let hess_jac = if zero_hess { None } else { Some(hess_jac_identity(spec, pt.hess, &pt.p)?) };

    let scaled = scaled_jacobian(spec, &pt.p)?;
    let mut chart_spread: f64 = 0.0;
    let mut projection_fd: f64 = 0.0;
    for m in subsets(n, k) {
        let d = CF::from_rat(&spec.plucker(&m)?);
        let chart = extract_chart(&phase, &m);
        let exact = projection_jacobian(spec, &chart)?;
        chart_spread = nan_max(chart_spread, rel_err(exact * d * d, scaled));
        let fd = projection_jacobian_fd(spec, &m, &phase, FD_STEP)?;
        projection_fd = nan_max(projection_fd, rel_err(fd, scaled / (d * d)));
    }

    let mut witness: f64 = 0.0;
    for cols in subsets(n, k) {
        let direct = mixed_minor_direct(spec, z, &pt.t, &cols)?;
        let formula = mixed_minor_formula(spec, z, &pt.t, &cols)?;
        witness = nan_max(witness, rel_err(formula, direct));
    }

    let t = recover_t(spec, z, &pt.p)?;
    let diff: f64 = t.iter().zip(&pt.t).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
    let norm: f64 = pt.t.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    Ok(PointChecks {
        relations,
        position_sum,
        hessian,
        hess_jac,
        chart_spread,
        projection_fd,
        witness,
        t_recovery: diff / norm.max(1.0),
    })
}

fn nan_max(a: f64, b: f64) -> f64 {
    if a.is_nan() || b.is_nan() {
        f64::NAN
    } else {
        a.max(b)
    }
}

/// Critical points from the operator spectrum and from Newton's method,
/// cross-matched, with the Hessian and Jacobian identities at every point.
pub fn cmd_solve(run: &ResolvedRun) -> Result<Report> {
    let total = Instant::now();
    let spec = &run.spec;
    let (n, k) = (spec.n(), spec.k());
    let tol = run.tolerances;
    let mut report = Report::new("solve", run.echo());
    if !spec.is_off_discriminant(&run.z) {
        return Err(Error::Domain("z lies on the discriminant".into()));
    }
    let expected = binomial(n - 1, k);
    let z: Vec<CF> = run.z.iter().map(CF::from_rat).collect();

    let start = Instant::now();
    let alg = QuotientAlgebra::new(spec, &run.z, 0)?;
    let spectrum = joint_spectrum(
        alg.operators(),
        &SpectrumOptions {
            spectral_tol: tol.spectral_tol,
            seed: run.seed.map_or(0, |s| derive_seed(s, "spectrum")),
            ..Default::default()
        },
    )?;
    report.check("spectral_count", spectrum.count_with_multiplicity() == expected, spectrum.count_with_multiplicity(), expected);
    report.check_detail(
        "spectral_residual",
        spectrum.max_residual() < tol.spectral_tol,
        spectrum.max_residual(),
        json!({ "lt": tol.spectral_tol }),
        format!("{} redraws, clustered: {}", spectrum.redraws, spectrum.clustered),
    );
    report.time("spectrum", ms_since(start));

    let start = Instant::now();
    let newton = newton_multistart(
        spec,
        &z,
        &NewtonOptions {
            n_starts: run.newton_starts,
            tol: tol.newton_tol,
            dedup_tol: tol.dedup_tol,
            seed: run.seed_for("newton")?,
            ..Default::default()
        },
    )?;
    report.check_detail(
        "newton_count",
        newton.points.len() == expected,
        newton.points.len(),
        expected,
        format!("{} of {} starts converged", newton.converged_starts, newton.starts),
    );
    report.time("newton", ms_since(start));

    let newton_p: Vec<Vec<CF>> = newton.points.iter().map(|p| p.p.clone()).collect();
    let matched = match_points(&spectrum.momenta(), &newton_p);
    match &matched {
        Some((_, dist)) => report.check("spectral_newton_match", *dist < MATCH_TOL, *dist, json!({ "lt": MATCH_TOL })),
        None => report.check_detail(
            "spectral_newton_match",
            false,
            Value::Null,
            json!({ "lt": MATCH_TOL }),
            "point counts differ",
        ),
    }

    let start = Instant::now();
    let rels = RelationSet::build(spec);
    let count = newton.points.len();
    let mut relations = Worst::default();
    let mut gradient = Worst::default();
    let mut position = Worst::default();
    let mut hessian = Worst::default();
    let mut hess_jac = Worst::default();
    let mut spread = Worst::default();
    let mut proj_fd = Worst::default();
    let mut witness = Worst::default();
    let mut t_rec = Worst::default();
    let mut zero_hess = 0;
    let mut points_json = Vec::new();
    for (i, pt) in newton.points.iter().enumerate() {
        let c = point_checks(spec, &rels, &z, pt)?;
        relations.add(c.relations, RELATION_TOL);
        gradient.add(pt.residual, GRADIENT_TOL);
        position.add(c.position_sum, RELATION_TOL);
        match (c.hessian, c.hess_jac) {
            (Some(h), Some(hj)) => {
                hessian.add(h, IDENTITY_TOL);
                hess_jac.add(hj, IDENTITY_TOL);
            }
            _ => zero_hess += 1,
        }
        spread.add(c.chart_spread, CHART_SPREAD_TOL);
        proj_fd.add(c.projection_fd, tol.fd_tol);
        witness.add(c.witness, IDENTITY_TOL);
        t_rec.add(c.t_recovery, IDENTITY_TOL);
        let spectral_index = matched.as_ref().and_then(|(assign, _)| assign.iter().position(|&j| j == i));
        points_json.push(json!({
            "t": complex_vec_json(&pt.t),
            "p": complex_vec_json(&pt.p),
            "hess": complex_json(&pt.hess),
            "scaled_jacobian": complex_json(&scaled_jacobian(spec, &pt.p)?),
            "gradient_residual": pt.residual,
            "relation_residual": c.relations,
            "spectral_index": spectral_index,
            "zero_hessian": c.hessian.is_none(),
        }));
    }
    relations.record(&mut report, "relations_at_points", RELATION_TOL, count);
    gradient.record(&mut report, "gradient", GRADIENT_TOL, count);
    position.record(&mut report, "position_sum", RELATION_TOL, count);
    if zero_hess == count && count > 0 {
        report.skip("hessian_formula", "Hessian vanishes at every point");
        report.skip("hess_jac_identity", "Hessian vanishes at every point");
    } else {
        hessian.record(&mut report, "hessian_formula", IDENTITY_TOL, count - zero_hess);
        hess_jac.record(&mut report, "hess_jac_identity", IDENTITY_TOL, count - zero_hess);
    }
    spread.record(&mut report, "jacobian_chart_independence", CHART_SPREAD_TOL, count);
    proj_fd.record(&mut report, "projection_jacobian_fd", tol.fd_tol, count);
    witness.record(&mut report, "smoothness_witness", IDENTITY_TOL, count);
    t_rec.record(&mut report, "t_recovery", IDENTITY_TOL, count);
    report.time("point_checks", ms_since(start));

    if expected == 1 {
        exact_pipeline(spec, &run.z, &alg, &rels, &mut report)?;
    }

    report.set_data("dim", json!(expected));
    report.set_data("charpoly", rat_vec_json(&spectrum.charpoly));
    report.set_data("combination", json!(spectrum.combination));
    report.set_data("zero_hessian_points", json!(zero_hess));
    report.set_data("points", Value::Array(points_json));
    report.time("total", ms_since(total));
    Ok(report)
}

/// The rational pipeline for a one-dimensional algebra: `p` is read off the
/// `1×1` operators and every quantity is exact.
fn exact_pipeline(
    spec: &ArrangementSpec,
    z: &[Rat],
    alg: &QuotientAlgebra,
    rels: &RelationSet,
    report: &mut Report,
) -> Result<()> {
    let Some(p) = rational_point(alg.operators()) else {
        report.skip("exact_relations", "operators are not 1×1");
        return Ok(());
    };
    let point = RatPoint::new(z.to_vec(), p.clone());
    let vanish = rels.vanish_exactly(&point)?;
    report.check("exact_relations", vanish, vanish, true);
    let t = recover_t(spec, z, &p)?;
    let hess = crate::spectrum::hessian_direct(spec, z, &t)?;
    let hess_f = hessian_formula(spec, &p);
    report.check("exact_hessian", hess == hess_f, rat_json(&hess), rat_json(&hess_f));
    let scaled = scaled_jacobian(spec, &p)?;
    let mut mismatches = 0;
    for m in subsets(spec.n(), spec.k()) {
        let d = spec.plucker(&m)?;
        let exact = projection_jacobian(spec, &extract_chart(&point, &m))?;
        if exact * d.clone() * d != scaled {
            mismatches += 1;
        }
    }
    report.check("exact_jacobian", mismatches == 0, mismatches, 0);
    report.set_data(
        "exact",
        json!({
            "t": rat_vec_json(&t),
            "p": rat_vec_json(&p),
            "hess": rat_json(&hess),
            "scaled_jacobian": rat_json(&scaled),
        }),
    );
    Ok(())
}

fn small_nonzero(rng: &mut impl Rng) -> Rat {
    loop {
        let num: i64 = rng.gen_range(-5..=5);
        if num != 0 {
            return rat(num, rng.gen_range(1..=3));
        }
    }
}

#[derive(Default)]
struct Tally {
    checked: usize,
    failures: usize,
}

impl Tally {
    fn add(&mut self, ok: bool) {
        self.checked += 1;
        if !ok {
            self.failures += 1;
        }
    }

    fn record(&self, report: &mut Report, name: &str, unit: &str) {
        if self.checked == 0 {
            report.skip(name, "no sample reached this check");
        } else {
            report.check_detail(name, self.failures == 0, self.failures, 0, format!("{} {unit}", self.checked));
        }
    }
}

fn generator_values(rels: &RelationSet, point: &RatPoint) -> Result<Vec<Rat>> {
    rels.hamiltonians().map(|f| f.eval(point)).collect()
}

/// Charts, the generating map, transition Jacobians, the Hamiltonian flows
/// and the `C×`-action on sampled points of the Lagrangian variety.
pub fn cmd_flows(run: &ResolvedRun) -> Result<Report> {
    let total = Instant::now();
    let spec = &run.spec;
    let (n, k) = (spec.n(), spec.k());
    let mut report = Report::new("flows", run.echo());
    let grid = run.s_grid.clone().unwrap_or_else(default_s_grid);
    if grid.is_empty() {
        return Err(Error::Usage("s_grid must not be empty".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(run.seed_for("flows")?);
    let rels = RelationSet::build(spec);
    let charts = subsets(n, k);
    let flows = Flow::all(spec);
    let lambdas = [int(2), rat(-1, 3), rat(5, 2)];

    let mut domain_errors = Vec::new();
    let mut completion = Tally::default();
    let mut membership = Tally::default();
    let mut round_trip = Tally::default();
    let mut transition = Tally::default();
    let mut transition_worst: f64 = 0.0;
    let mut invariance = Tally::default();
    let mut commutation = Tally::default();
    let mut conservation = Tally::default();
    let mut cx = Tally::default();
    let mut trajectory = Value::Null;

    let start = Instant::now();
    for sample in 0..run.samples {
        let idx = &charts[sample % charts.len()];
        let other = &charts[rng.gen_range(0..charts.len())];
        let off_point = RatPoint::new(
            (0..n).map(|_| small_nonzero(&mut rng)).collect(),
            (0..n).map(|_| small_nonzero(&mut rng)).collect(),
        );
        let chart = match sample_chart(spec, idx, &mut rng) {
            Ok(c) => c,
            Err(e) => {
                domain_errors.push(json!({ "sample": sample, "error": e.to_string() }));
                continue;
            }
        };
        let outcome = flows_sample(
            spec,
            &rels,
            &flows,
            &grid,
            &lambdas,
            &chart,
            other,
            &off_point,
            &mut FlowTallies {
                completion: &mut completion,
                membership: &mut membership,
                round_trip: &mut round_trip,
                transition: &mut transition,
                transition_worst: &mut transition_worst,
                invariance: &mut invariance,
                commutation: &mut commutation,
                conservation: &mut conservation,
                cx: &mut cx,
                fd_tol: run.tolerances.fd_tol,
                domain_errors: &mut domain_errors,
                sample,
            },
        );
        match outcome {
            Ok(point) => {
                if trajectory.is_null() {
                    if let Some(flow) = flows.first() {
                        if let Ok(traj) = flow_trajectory(spec, flow, &grid, &point) {
                            trajectory = json!({
                                "flow": flow.label(),
                                "chart": subset_label(idx),
                                "s": rat_vec_json(&grid),
                                "points": traj.iter().map(|q| json!({
                                    "z": rat_vec_json(&q.z),
                                    "p": rat_vec_json(&q.p),
                                })).collect::<Vec<_>>(),
                            });
                        }
                    }
                }
            }
            Err(Error::Domain(msg)) => domain_errors.push(json!({ "sample": sample, "error": msg })),
            Err(e) => return Err(e),
        }
    }
    report.time("samples", ms_since(start));

    completion.record(&mut report, "chart_generating_agreement", "samples");
    membership.record(&mut report, "relations_on_charts", "samples");
    round_trip.record(&mut report, "chart_round_trip", "samples");
    if transition.checked == 0 {
        report.skip("transition_jacobian", "no sample reached this check");
    } else {
        report.check_detail(
            "transition_jacobian",
            transition.failures == 0,
            transition_worst,
            json!({ "lt": run.tolerances.fd_tol }),
            format!("{} of {} transitions fail", transition.failures, transition.checked),
        );
    }
    invariance.record(&mut report, "flow_invariance", "flow evaluations");
    commutation.record(&mut report, "flow_commutation", "flow pairs");
    conservation.record(&mut report, "conservation", "flow evaluations");
    cx.record(&mut report, "cx_action", "scalings");

    report.set_data("samples", json!(run.samples));
    report.set_data("flows", json!(flows.iter().map(Flow::label).collect::<Vec<_>>()));
    report.set_data("domain_errors", Value::Array(domain_errors));
    report.set_data("trajectory", trajectory);
    report.time("total", ms_since(total));
    Ok(report)
}

struct FlowTallies<'a> {
    completion: &'a mut Tally,
    membership: &'a mut Tally,
    round_trip: &'a mut Tally,
    transition: &'a mut Tally,
    transition_worst: &'a mut f64,
    invariance: &'a mut Tally,
    commutation: &'a mut Tally,
    conservation: &'a mut Tally,
    cx: &'a mut Tally,
    fd_tol: f64,
    domain_errors: &'a mut Vec<Value>,
    sample: usize,
}

impl FlowTallies<'_> {
    fn domain(&mut self, what: &str, e: Error) -> Result<()> {
        match e {
            Error::Domain(msg) => {
                self.domain_errors
                    .push(json!({ "sample": self.sample, "step": what, "error": msg }));
                Ok(())
            }
            other => Err(other),
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn flows_sample(
    spec: &ArrangementSpec,
    rels: &RelationSet,
    flows: &[Flow],
    grid: &[Rat],
    lambdas: &[Rat],
    chart: &Chart<Rat>,
    other: &[usize],
    off_point: &RatPoint,
    t: &mut FlowTallies<'_>,
) -> Result<RatPoint> {
    let point = chart_complete(spec, chart)?;
    t.completion.add(generating_map(spec, chart)? == point);
    t.membership.add(rels.vanish_exactly(&point)?);

    let back = extract_chart(&point, &chart.idx);
    let other_chart = extract_chart(&point, other);
    let ok = back == *chart && chart_complete(spec, &other_chart).is_ok_and(|q| q == point);
    t.round_trip.add(ok);

    let expected = transition_expected(spec, &chart.idx, other)?;
    match transition_jacobian(spec, &chart.idx, other, &point.to_complex(), FD_STEP) {
        Ok(j) => {
            let e = CF::from_rat(&expected);
            let err = rel_err(j, e);
            *t.transition_worst = nan_max(*t.transition_worst, err);
            t.transition.add(err < t.fd_tol);
        }
        Err(e) => t.domain("transition_jacobian", e)?,
    }

    for flow in flows {
        for s in grid {
            match flow.apply(spec, s, &point) {
                Ok(q) => t.invariance.add(rels.vanish_exactly(&q)?),
                Err(e) => t.domain(&flow.label(), e)?,
            }
        }
    }

    let (s1, s2) = (&grid[0], grid.get(1).unwrap_or(&grid[0]));
    for (i, a) in flows.iter().enumerate() {
        for b in &flows[i + 1..] {
            let ab = a.apply(spec, s1, &point).and_then(|q| b.apply(spec, s2, &q));
            let ba = b.apply(spec, s2, &point).and_then(|q| a.apply(spec, s1, &q));
            match (ab, ba) {
                (Ok(x), Ok(y)) => t.commutation.add(x == y),
                (Err(e), _) | (_, Err(e)) => t.domain("commutation", e)?,
            }
        }
    }

    let before = generator_values(rels, off_point)?;
    for flow in flows {
        for s in grid {
            match flow.apply(spec, s, off_point) {
                Ok(q) => t.conservation.add(generator_values(rels, &q)? == before),
                Err(e) => t.domain("conservation", e)?,
            }
        }
    }

    for lambda in lambdas {
        let q = cx_action(lambda, &point)?;
        t.cx.add(rels.vanish_exactly(&q)?);
    }
    Ok(point)
}

/// A random generic arrangement with a sampled `z` off the discriminant.
pub fn cmd_gen(n: usize, k: usize, seed: u64, coeff_bound: i64) -> Result<SpecFile> {
    let spec = ArrangementSpec::random_generic(n, k, derive_seed(seed, "spec"), coeff_bound)?;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, "z"));
    let z = spec.sample_z(&mut rng)?;
    let mut file = SpecFile::from_spec(&spec, Some(&z));
    file.seed = Some(seed);
    file.coeff_bound = Some(coeff_bound);
    Ok(file)
}

/// Dispatches on the command name.
pub fn run_command(command: &str, run: &ResolvedRun) -> Result<Report> {
    match command {
        "verify" => cmd_verify(run),
        "solve" => cmd_solve(run),
        "flows" => cmd_flows(run),
        other => Err(Error::Usage(format!("unknown command {other:?}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{resolve, RunConfig};
    use std::path::Path;

    fn run_of(json: &str) -> ResolvedRun {
        resolve(&RunConfig::from_json(json).unwrap(), Path::new(".")).unwrap()
    }

    const N2K1: &str = r#"{"spec": {"n": 2, "k": 1, "b": [[1], [1]], "a": [1, 1]}, "z": [0, 1], "seed": 1}"#;
    const N3K2: &str =
        r#"{"spec": {"n": 3, "k": 2, "b": [[1, 0], [0, 1], [1, 1]], "a": [1, 1, 1]}, "z": [0, 0, 1], "seed": 1}"#;

    #[test]
    fn verify_worked_example_passes() {
        let r = cmd_verify(&run_of(N2K1)).unwrap();
        assert!(r.passed(), "{}", r.to_json());
        assert_eq!(r.data["dim"], json!(1));
    }

    #[test]
    fn verify_skips_on_discriminant() {
        let r = cmd_verify(&run_of(r#"{"spec": {"n": 2, "k": 1, "b": [[1], [1]], "a": [1, 1]}, "z": [1, 1]}"#))
            .unwrap();
        assert!(r.passed());
        let rec = r.find("commutators").unwrap();
        assert_eq!(rec.detail.as_deref(), Some(DISCRIMINANT_SKIP));
    }

    #[test]
    fn solve_worked_examples() {
        let r = cmd_solve(&run_of(N2K1)).unwrap();
        assert!(r.passed(), "{}", r.to_json());
        assert_eq!(r.data["exact"]["t"], json!(["-1/2"]));
        assert_eq!(r.data["exact"]["hess"], json!("-8"));
        assert_eq!(r.data["exact"]["scaled_jacobian"], json!("-1/2"));

        let r = cmd_solve(&run_of(N3K2)).unwrap();
        assert!(r.passed(), "{}", r.to_json());
        assert_eq!(r.data["exact"]["t"], json!(["-1/3", "-1/3"]));
        assert_eq!(r.data["exact"]["hess"], json!("243"));
    }

    #[test]
    fn flows_worked_example() {
        let r = cmd_flows(&run_of(N2K1)).unwrap();
        assert!(r.passed(), "{}", r.to_json());
    }

    #[test]
    fn flows_transition_n3k2() {
        let r = cmd_flows(&run_of(N3K2)).unwrap();
        assert!(r.passed(), "{}", r.to_json());
        let rec = r.find("transition_jacobian").unwrap();
        assert!(rec.value.as_ref().unwrap().as_f64().unwrap() < 1e-6);
    }

    #[test]
    fn gen_is_deterministic() {
        let a = cmd_gen(5, 2, 9, 3).unwrap();
        assert_eq!(a, cmd_gen(5, 2, 9, 3).unwrap());
        let spec = a.to_spec().unwrap();
        assert!(spec.is_off_discriminant(&a.z_values().unwrap()));
    }
}

use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

use qpos_core::bwsim::{default_decay_operand, default_t_grid, gbr_norm_bound, normal_spine_decay, BoundaryWeightSpec};
use qpos_core::corner::{
    basischange_block, corner_from_contraction, flow_corner_to_identity, identity_corner_block,
    is_hypermaximal_over_resolvent_family, is_q_corner, max_corner_norm_rank_one, unitary_conjugation_corner,
    verify_corner, CornerSpec, DEFAULT_TS_GRID,
};
use qpos_core::format::{
    corner_norm_to_json, eigenvalues_to_json, map_from_str, matrix_from_json, profile_from_value,
    qpure_verdict_to_json, schur_to_json, state_to_json, superop_to_json, LoadedMap,
};
use qpos_core::linalg::{diag, diag_real, Mat, C64, I, ONE};
use qpos_core::qorder::{counterexample_multipliers, default_grid, eps_deform, is_q_positive};
use qpos_core::qpure::{self, classify_q_pure_with, density_of_state_map, make_invertible_qpure, phiu_multipliers};
use qpos_core::superop::{conjugate_by_unitary, is_completely_positive, CP_TOL};
use qpos_core::{Error, SuperOp};

use crate::{BwsimArgs, Cli, Command, CornerArgs, ExampleArgs, ExampleName, Failure};

pub struct Output {
    pub text: String,
    /// Human-readable verdict lines, printed to stderr.
    pub summary: Vec<String>,
    /// Set when an `--assert-*` flag was given and its verdict is false.
    pub assertion_failure: Option<String>,
}

impl Output {
    fn report(v: &Value) -> Self {
        Self { text: pretty(v), summary: summarize(v), assertion_failure: None }
    }

    fn raw(text: String) -> Self {
        Self { text, summary: Vec::new(), assertion_failure: None }
    }
}

fn summarize(v: &Value) -> Vec<String> {
    let mut lines = Vec::new();
    for key in ["unital", "self_adjoint", "cp", "q_positive", "corner", "q_corner"] {
        if let Some(b) = v[key]["verdict"].as_bool() {
            lines.push(format!("{key}: {b}"));
        }
    }
    if let Some(b) = v["q_pure"].as_bool() {
        lines.push(format!("q_pure: {b} ({})", v["verdict"]["tag"].as_str().unwrap_or("?")));
    }
    let hyper = v["hypermaximality"]["hypermaximal"].as_bool().or(v["hypermaximal"].as_bool());
    if let Some(b) = hyper {
        lines.push(format!("hypermaximal: {b}"));
    }
    if let Some(x) = v["max_corner_norm"]["value"].as_f64() {
        lines.push(format!("max corner norm: {x:.12}"));
    }
    if let Some(c) = v["conclusion"].as_str() {
        lines.push(c.to_string());
    }
    lines
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("JSON values serialize");
    s.push('\n');
    s
}

type CmdResult<T> = std::result::Result<T, Failure>;

/// Hashes every input file, length-prefixed, in command-line order.
struct Inputs {
    hasher: Sha256,
    any: bool,
}

impl Inputs {
    fn new() -> Self {
        Self { hasher: Sha256::new(), any: false }
    }

    fn read(&mut self, path: &str) -> CmdResult<String> {
        let text = std::fs::read_to_string(path).map_err(|e| Failure::Input(format!("cannot read {path}: {e}")))?;
        self.hasher.update((text.len() as u64).to_le_bytes());
        self.hasher.update(text.as_bytes());
        self.any = true;
        Ok(text)
    }

    fn map(&mut self, path: &str) -> CmdResult<LoadedMap> {
        let text = self.read(path)?;
        Ok(map_from_str(&text)?)
    }

    fn json(&mut self, path: &str) -> CmdResult<Value> {
        let text = self.read(path)?;
        serde_json::from_str(&text).map_err(|e| Failure::Input(format!("{path}: malformed JSON: {e}")))
    }

    fn digest(self) -> Value {
        if self.any {
            Value::String(format!("sha256:{}", hex::encode(self.hasher.finalize())))
        } else {
            Value::Null
        }
    }
}

fn envelope(cli: &Cli, args: &[String], inputs: Inputs, body: Map<String, Value>) -> Value {
    let mut out = Map::new();
    out.insert("command".into(), json!(args));
    out.insert("input_digest".into(), inputs.digest());
    out.insert("seed".into(), json!(cli.seed));
    out.insert("tol".into(), json!(cli.tol));
    out.extend(body);
    Value::Object(out)
}

fn q_grid(cli: &Cli) -> Vec<f64> {
    cli.t_grid.clone().unwrap_or_else(default_grid)
}

fn cp_tol(cli: &Cli) -> f64 {
    cli.tol.unwrap_or(CP_TOL)
}

fn to_value<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report types serialize")
}

pub fn run(cli: &Cli, args: &[String]) -> CmdResult<Output> {
    match &cli.command {
        Command::Analyze { path } => analyze(cli, args, path),
        Command::Classify { path } => classify(cli, args, path),
        Command::Corner(c) => corner(cli, args, c),
        Command::Bwsim(b) => bwsim(cli, args, b),
        Command::Examples(e) => examples(e),
    }
}

fn sorted_eigenvalues(phi: &SuperOp) -> Vec<C64> {
    let mut e = phi.eigenvalues();
    e.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    e
}

fn analyze(cli: &Cli, args: &[String], path: &str) -> CmdResult<Output> {
    let mut inputs = Inputs::new();
    let loaded = inputs.map(path)?;
    let phi = &loaded.map;
    let tol = cp_tol(cli);
    let mut body = Map::new();
    body.insert("dim_in".into(), json!(phi.dim_in()));
    body.insert("dim_out".into(), json!(phi.dim_out()));
    body.insert("repr".into(), json!(loaded.repr.as_str()));
    let scale = phi.norm().max(1.0);
    body.insert(
        "unital".into(),
        match phi.unitality_defect() {
            Ok(d) => json!({ "verdict": d <= tol * scale, "defect": d }),
            Err(_) => Value::Null,
        },
    );
    let sa = phi.self_adjointness_defect();
    body.insert("self_adjoint".into(), json!({ "verdict": sa <= tol * scale, "defect": sa }));
    body.insert("cp".into(), to_value(&is_completely_positive(phi, tol)?));
    if phi.is_endomorphism() {
        body.insert("eigenvalues".into(), eigenvalues_to_json(&sorted_eigenvalues(phi)));
        let grid = q_grid(cli);
        let cert = is_q_positive(phi, &grid, tol)?;
        let mut eps = Vec::new();
        for &e in &cli.eps_grid {
            let deformed = eps_deform(phi, e)?;
            eps.push(json!({ "eps": e, "q_positive": is_q_positive(&deformed, &grid, tol)?.verdict }));
        }
        body.insert("q_positive".into(), to_value(&cert));
        body.insert("eps_deformations".into(), Value::Array(eps));
    } else {
        body.insert("eigenvalues".into(), Value::Null);
        body.insert("q_positive".into(), Value::Null);
    }
    Ok(Output::report(&envelope(cli, args, inputs, body)))
}

fn classify(cli: &Cli, args: &[String], path: &str) -> CmdResult<Output> {
    let mut inputs = Inputs::new();
    let loaded = inputs.map(path)?;
    let verdict = classify_q_pure_with(&loaded.map, &q_grid(cli), cli.tol.unwrap_or(qpure::DEFAULT_TOL))?;
    let mut body = Map::new();
    body.insert("q_pure".into(), json!(verdict.is_q_pure()));
    body.insert("verdict".into(), qpure_verdict_to_json(&verdict));
    Ok(Output::report(&envelope(cli, args, inputs, body)))
}

fn require<'a, T>(v: &'a Option<T>, flag: &str) -> CmdResult<&'a T> {
    v.as_ref().ok_or_else(|| Failure::Input(format!("{flag} is required in this mode")))
}

/// The density `D` of a rank-one unital map `A ↦ tr(DA)·I`.
fn rank_one_density(phi: &SuperOp, side: &str) -> CmdResult<Mat> {
    if !phi.is_endomorphism() || phi.rank(qpure::RANK_TOL) != 1 {
        return Err(Failure::Input(format!("{side} map is not rank one")));
    }
    let defect = phi.unitality_defect()?;
    if defect > 1e-8 {
        return Err(Failure::Input(format!("{side} map is not unital (defect {defect:e})")));
    }
    Ok(density_of_state_map(phi))
}

fn corner_norm_conclusion(value: f64, faithful: bool) -> &'static str {
    if value < 1.0 - 1e-6 {
        "corner norm below one: no contractive corner of norm one exists, so there is no hyper maximal q-corner \
         and the induced E0-semigroups are not cocycle conjugate"
    } else if faithful {
        "corner norm one: a hyper maximal q-corner exists and the induced E0-semigroups are cocycle conjugate"
    } else {
        "corner norm one, but a density is not faithful"
    }
}

fn corner(cli: &Cli, args: &[String], c: &CornerArgs) -> CmdResult<Output> {
    let mut inputs = Inputs::new();
    let grid = q_grid(cli);
    let tol = cp_tol(cli);
    let mut body = Map::new();

    if c.auto_max {
        let left = inputs.map(require(&c.left, "--left")?)?;
        let right = inputs.map(require(&c.right, "--right")?)?;
        let d1 = rank_one_density(&left.map, "left")?;
        let d2 = rank_one_density(&right.map, "right")?;
        let v = max_corner_norm_rank_one(&d1, &d2, cli.seed)?;
        let hyper = v.faithful && v.value >= 1.0 - 1e-6;
        body.insert("mode".into(), json!("auto-max"));
        body.insert("max_corner_norm".into(), corner_norm_to_json(&v));
        body.insert("hypermaximal".into(), json!(hyper));
        body.insert("conclusion".into(), json!(corner_norm_conclusion(v.value, v.faithful)));
        let report = envelope(cli, args, inputs, body);
        return Ok(finish(&report, c.assert_hypermaximal, Some(hyper)));
    }

    let (mode, phi, gamma, psi) = if let Some(cpath) = &c.contraction {
        let left = inputs.map(require(&c.left, "--left")?)?;
        let right = inputs.map(require(&c.right, "--right")?)?;
        let cmat = matrix_from_json(&inputs.json(cpath)?)?;
        let (Some(lk), Some(rk)) = (left.kraus, right.kraus) else {
            return Err(Failure::Input("--contraction needs both maps in Kraus form".into()));
        };
        let spec = CornerSpec::new(lk, rk, cmat)?;
        ("contraction", spec.left_map(), corner_from_contraction(&spec), spec.right_map())
    } else if let Some(upath) = &c.unitary {
        let left = inputs.map(require(&c.left, "--left")?)?;
        let u = matrix_from_json(&inputs.json(upath)?)?;
        let gamma = unitary_conjugation_corner(&left.map, &u)?;
        let psi = conjugate_by_unitary(&left.map, &u)?;
        ("unitary", left.map, gamma, psi)
    } else if c.identity_target {
        let l = require(&c.lambdas, "--lambdas")?;
        let phi = make_invertible_qpure(l, None)?;
        ("identity-target", phi, flow_corner_to_identity(l)?, SuperOp::identity(1))
    } else {
        return Err(Failure::Input("choose one of --contraction, --auto-max, --unitary, --identity-target".into()));
    };

    body.insert("mode".into(), json!(mode));
    body.insert("corner".into(), to_value(&verify_corner(&phi, &gamma, &psi, tol)?));
    let qc = is_q_corner(&phi, &gamma, &psi, &grid, tol)?;
    body.insert("q_corner".into(), to_value(&qc));
    let hyper = match is_hypermaximal_over_resolvent_family(&phi, &gamma, &psi, &DEFAULT_TS_GRID, &grid, tol) {
        Ok(v) => {
            body.insert("hypermaximality".into(), to_value(&v));
            Some(v.hypermaximal)
        }
        Err(Error::DiagonalsNotQPure(reason)) => {
            body.insert("hypermaximality".into(), json!({ "skipped": reason }));
            None
        }
        Err(Error::NotQCorner { t }) => {
            body.insert("hypermaximality".into(), json!({ "hypermaximal": false, "not_q_corner_at": t }));
            Some(false)
        }
        Err(e) => return Err(e.into()),
    };
    if let (Ok(d1), Ok(d2)) = (rank_one_density(&phi, "left"), rank_one_density(&psi, "right")) {
        let v = max_corner_norm_rank_one(&d1, &d2, cli.seed)?;
        body.insert("conclusion".into(), json!(corner_norm_conclusion(v.value, v.faithful)));
        body.insert("max_corner_norm".into(), corner_norm_to_json(&v));
    }
    let report = envelope(cli, args, inputs, body);
    Ok(finish(&report, c.assert_hypermaximal, hyper))
}

fn finish(report: &Value, assert: bool, hyper: Option<bool>) -> Output {
    let mut out = Output::report(report);
    if assert && hyper != Some(true) {
        out.assertion_failure = Some(match hyper {
            Some(false) => "corner is not hypermaximal".into(),
            _ => "hypermaximality could not be decided".into(),
        });
    }
    out
}

fn fmt_num(x: f64) -> String {
    format!("{x}")
}

fn bwsim(cli: &Cli, args: &[String], b: &BwsimArgs) -> CmdResult<Output> {
    let mut inputs = Inputs::new();
    let phi = inputs.map(&b.map)?.map;
    let spec = if b.profile == "indicator01" {
        BoundaryWeightSpec::indicator01()
    } else {
        profile_from_value(&inputs.json(&b.profile)?)?
    };
    let mut body = Map::new();
    body.insert("profile".into(), json!(spec.profile.name()));
    body.insert("unbounded".into(), json!(spec.unbounded));
    let mut tsv = String::new();
    if b.decay {
        let op = default_decay_operand(phi.dim_in(), b.t_fixed)?;
        let table = normal_spine_decay(&phi, &spec, b.t_fixed, &b.b_grid, &op)?;
        tsv.push_str("b\tnu_I\ts_t\tbound\tnorm\n");
        for r in &table.rows {
            tsv.push_str(&[r.b, r.nu_i, r.s_b, r.bound, r.norm].map(fmt_num).join("\t"));
            tsv.push('\n');
        }
        body.insert("decay".into(), to_value(&table));
    } else {
        let grid = cli.t_grid.clone().unwrap_or_else(default_t_grid);
        let rows = gbr_norm_bound(&phi, &spec, &grid)?;
        tsv.push_str("t\tnu_I\ts_t\tbound\tnorm\n");
        for r in &rows {
            tsv.push_str(&[r.t, r.nu_i, r.s_t, r.bound, r.norm].map(fmt_num).join("\t"));
            tsv.push('\n');
        }
        let degenerate: Vec<f64> = rows.iter().filter(|r| r.degenerate).map(|r| r.t).collect();
        body.insert("degenerate_t".into(), json!(degenerate));
        body.insert("bound".into(), to_value(&rows));
    }
    if b.tsv {
        return Ok(Output::raw(tsv));
    }
    Ok(Output::report(&envelope(cli, args, inputs, body)))
}

/// `diag(1, i, −1, −i, …)`.
fn phase_unitary(n: usize) -> Mat {
    let mut phases = vec![ONE; n];
    for k in 1..n {
        phases[k] = phases[k - 1] * I;
    }
    diag(&phases)
}

fn density_from_diag(d: &Option<Vec<f64>>) -> CmdResult<Mat> {
    let d = d.clone().unwrap_or_else(|| vec![0.5, 0.5]);
    let sum: f64 = d.iter().sum();
    if d.is_empty() || d.iter().any(|&x| x < 0.0) || (sum - 1.0).abs() > 1e-12 {
        return Err(Failure::Input("--diag must be nonnegative and sum to one".into()));
    }
    Ok(diag_real(&d))
}

fn examples(e: &ExampleArgs) -> CmdResult<Output> {
    let value = match e.name {
        ExampleName::SchurCounterexample => schur_to_json(&counterexample_multipliers()),
        ExampleName::Phiu => {
            let l = require(&e.lambdas, "--lambdas")?;
            make_invertible_qpure(l, None)?;
            schur_to_json(&phiu_multipliers(l))
        }
        ExampleName::StateMap => state_to_json(&density_from_diag(&e.diag)?),
        ExampleName::BasischangeCorner => {
            let d = density_from_diag(&e.diag)?;
            let phi = qpos_core::superop::state_map(&d)?;
            superop_to_json(&basischange_block(&phi, &phase_unitary(d.nrows()))?)
        }
        ExampleName::IdentityCorner => {
            let l = require(&e.lambdas, "--lambdas")?;
            superop_to_json(&identity_corner_block(l)?)
        }
    };
    let text = pretty(&value);
    match &e.out {
        Some(path) => {
            std::fs::write(path, &text).map_err(|err| Failure::Input(format!("cannot write {path}: {err}")))?;
            Ok(Output::raw(String::new()))
        }
        None => Ok(Output::raw(text)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn phase_unitary_is_unitary() {
        for n in 1..5 {
            assert!(qpos_core::linalg::unitarity_defect(&phase_unitary(n)) < 1e-15);
        }
        assert_eq!(phase_unitary(2)[(1, 1)], I);
    }

    #[test]
    fn conclusions() {
        assert!(corner_norm_conclusion(0.8, true).contains("not cocycle conjugate"));
        assert!(corner_norm_conclusion(1.0, true).contains("hyper maximal q-corner exists"));
    }

    #[test]
    fn error_classes() {
        assert!(matches!(Failure::from(Error::ContractionViolated(1.2)), Failure::Input(_)));
        assert!(matches!(Failure::from(Error::SingularResolvent { t: 1.0 }), Failure::Numerical(_)));
    }
}

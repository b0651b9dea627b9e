use std::path::Path;

use aip_core::aip::{
    check_j_inner, check_potapov_class, lft_solve, validate, verify_solution, AipData, ResolventMatrix, Severity, VerifyOptions,
};
use aip_core::io::{to_rows, FunctionFile, InstanceFile, ParameterSpec, PointConditions};
use aip_core::linalg::norm2;
use aip_core::pontryagin::{estimate_negative_squares, inertia, SampleOptions, DEFAULT_ZERO_TOL};
use aip_core::rational::{krein_langer_left, krein_langer_right, spiral_points, KLFactorization, RationalMatrixFunction, SchurKernel, Side};
use aip_core::scalar::unimodular;
use aip_core::{Error, Mat64, C64};
use serde::de::DeserializeOwned;
use serde_json::{json, Value};

use crate::parse::{parse_complex, parse_points};
use crate::report::{Ctx, InputRecord, Kind, Report, Settings, Step};
use crate::{Cli, Command, DEFAULT_GRID};

const IDENTITY_TOL: f64 = 1e-9;
const INTERPOLATION_TOL: f64 = 1e-8;
const KL_TOL: f64 = 1e-9;
const J_INNER_SAMPLES: usize = 100;

struct Run<'a> {
    cli: &'a Cli,
    ctx: Ctx,
    grid: Option<usize>,
    seed: Option<u64>,
    tol: Option<f64>,
}

pub(crate) fn execute(cli: &Cli) -> Report {
    let mut run = Run { cli, ctx: Ctx::new(), grid: cli.grid, seed: cli.seed, tol: cli.tol };
    let _ = match &cli.command {
        Command::Validate { file } => run.validate(file),
        Command::Resolvent { file, points } => run.resolvent(file, points.as_deref()),
        Command::Solve { file, epsilon, points } => run.solve(file, epsilon.as_deref(), points.as_deref()),
        Command::Verify { file, solution } => run.verify(file, solution),
        Command::Factorize { file } => run.factorize(file),
        Command::Signature { file } => run.signature(file),
    };
    let settings = Settings { grid: run.grid(), seed: run.seed(), tol: run.tol };
    run.ctx.finish(cli.command.name(), settings)
}

/// Error diagnostic for a library error, classified by variant.
fn library_failure(ctx: &mut Ctx, code: &str, e: &Error) -> crate::report::Stop {
    let kind = match e {
        Error::InvalidInput(_) | Error::NotGeneralizedSchur(_) | Error::DeterminateCase | Error::Validation(_) | Error::ExtensionInfeasible { .. } => {
            Kind::Validation
        }
        _ => Kind::Numerical,
    };
    ctx.fail(kind, code, e.to_string())
}

fn scalar_diagonal(p: usize, q: usize, c: C64) -> Mat64 {
    Mat64::from_fn(p, q, |i, j| if i == j { c } else { C64::new(0.0, 0.0) })
}

impl Run<'_> {
    fn grid(&self) -> usize {
        self.grid.unwrap_or(DEFAULT_GRID)
    }

    fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    /// Instance-file settings fill in flags that were not given.
    fn adopt_settings(&mut self, file: &InstanceFile) {
        self.grid = self.cli.grid.or(file.grid);
        self.seed = self.cli.seed.or(file.seed);
        self.tol = self.cli.tol.or(file.tol);
    }

    fn read(&mut self, role: &str, path: &Path) -> Step<String> {
        match std::fs::read(path) {
            Ok(bytes) => {
                self.ctx.inputs.push(InputRecord::new(role, &path.display().to_string(), &bytes));
                String::from_utf8(bytes).map_err(|_| self.ctx.fail(Kind::Parse, "PARSE", format!("{}: not UTF-8", path.display())))
            }
            Err(e) => Err(self.ctx.fail(Kind::Parse, "IO", format!("{}: {e}", path.display()))),
        }
    }

    fn parse_json<T: DeserializeOwned>(&mut self, path: &Path, text: &str) -> Step<T> {
        serde_json::from_str(text).map_err(|e| self.ctx.fail(Kind::Parse, "PARSE", format!("{}: {e}", path.display())))
    }

    fn load_instance(&mut self, path: &Path) -> Step<(InstanceFile, AipData<f64>)> {
        let text = self.read("instance", path)?;
        let file: InstanceFile = self.parse_json(path, &text)?;
        let data = file.to_data().map_err(|e| self.ctx.fail(Kind::Parse, "PARSE", format!("{}: {e}", path.display())))?;
        self.adopt_settings(&file);
        Ok((file, data))
    }

    fn load_function(&mut self, role: &str, path: &Path) -> Step<RationalMatrixFunction<f64>> {
        let text = self.read(role, path)?;
        let file: FunctionFile = self.parse_json(path, &text)?;
        file.to_function().map_err(|e| self.ctx.fail(Kind::Parse, "PARSE", format!("{}: {e}", path.display())))
    }

    /// Runs the assumption checks; stops on any error.
    fn check_data(&mut self, data: &AipData<f64>) -> Step<()> {
        let v = validate(data);
        for d in &v.diagnostics {
            match d.severity {
                Severity::Error => {
                    self.ctx.fail(Kind::Validation, &d.code, d.message.clone());
                }
                _ => self.ctx.diagnostics.push(d.clone()),
            }
        }
        let ok = v.ok();
        if let Some(k) = v.kappa {
            self.ctx.line(format!("negative index of P: {k}"));
        }
        self.ctx.set("validation", &v);
        if ok {
            Ok(())
        } else {
            Err(crate::report::Stop)
        }
    }

    fn points(&mut self, spec: Option<&str>, default: &str) -> Step<Vec<C64>> {
        let s = spec.unwrap_or(default);
        match parse_points(s) {
            Some(p) => Ok(p.points(self.seed())),
            None => Err(self.ctx.fail(Kind::Parse, "ARGS", format!("cannot read points from {s:?}"))),
        }
    }

    fn validate(&mut self, path: &Path) -> Step<()> {
        let (_, data) = self.load_instance(path)?;
        self.check_data(&data)?;
        let v = aip_core::aip::build_isometry_v(&data);
        self.ctx.set("isometry_residual", v.residual);
        Ok(())
    }

    fn resolvent(&mut self, path: &Path, points: Option<&str>) -> Step<()> {
        let (_, data) = self.load_instance(path)?;
        self.check_data(&data)?;
        let w = ResolventMatrix::new(&data).map_err(|e| library_failure(&mut self.ctx, "RESOLVENT", &e))?;
        let pts = self.points(points, "8")?;
        let mut rows = Vec::new();
        let mut good = Vec::new();
        let mut scale = 1.0f64;
        for &z in &pts {
            match w.evaluate(z) {
                Ok(v) => {
                    let r = w.identity_residual(z, z).map_err(|e| library_failure(&mut self.ctx, "RESOLVENT", &e))?;
                    scale = scale.max(norm2(&v).powi(2));
                    rows.push(json!({ "lambda": z, "W": to_rows(&v), "residual": r }));
                    good.push(z);
                }
                Err(e) => {
                    self.ctx.info("SINGULAR_POINT", format!("W is not defined at {z}: {e}"));
                    rows.push(json!({ "lambda": z, "W": Value::Null, "residual": Value::Null }));
                }
            }
        }
        let mut pair = 0.0f64;
        for &a in &good {
            for &b in &good {
                pair = pair.max(w.identity_residual(a, b).map_err(|e| library_failure(&mut self.ctx, "RESOLVENT", &e))?);
            }
        }
        let anchor = w.anchor();
        let norm = w.evaluate(anchor).map(|v| norm2(&(v - Mat64::identity(w.dim(), w.dim())))).unwrap_or(f64::INFINITY);
        let circle: Vec<C64> = (0..J_INNER_SAMPLES)
            .map(|k| unimodular(std::f64::consts::TAU * (k as f64 + 0.5) / J_INNER_SAMPLES as f64))
            .collect();
        let jin = check_j_inner(&w, &circle);
        let tol = self.tol.unwrap_or(IDENTITY_TOL);
        self.ctx.set("anchor", anchor);
        self.ctx.set("samples", rows);
        self.ctx.set("identity_residual_max", pair);
        self.ctx.set("normalization_residual", norm);
        self.ctx.set("j_inner", &jin);
        self.ctx.line(format!("anchor {anchor}, identity residual {pair:.3e}, ‖W(a) − I‖ {norm:.3e}, J-inner defect {:.3e}", jin.max_defect));
        if !(pair <= tol * scale) {
            self.ctx.fail(Kind::Numerical, "W_IDENTITY", format!("kernel identity residual {pair:.3e} exceeds {:.1e}", tol * scale));
        }
        if !(norm <= tol) {
            self.ctx.fail(Kind::Numerical, "W_NORMALIZATION", format!("‖W(a) − I‖ = {norm:.3e}"));
        }
        if !(jin.max_defect <= tol * scale) {
            self.ctx.fail(Kind::Numerical, "J_INNER", format!("boundary defect {:.3e}", jin.max_defect));
        }
        Ok(())
    }

    fn epsilon(&mut self, flag: Option<&str>, file: &InstanceFile) -> Step<ParameterSpec> {
        let (p, q) = (file.p, file.q);
        let Some(arg) = flag else {
            return Ok(file.epsilon.clone().unwrap_or(ParameterSpec::Constant { value: to_rows(&Mat64::zeros(p, q)) }));
        };
        let path = Path::new(arg);
        if path.is_file() {
            let text = self.read("epsilon", path)?;
            let value: Value = self.parse_json(path, &text)?;
            return if value.get("kind").is_some() {
                self.parse_json(path, &text)
            } else {
                Ok(ParameterSpec::Realization(self.parse_json(path, &text)?))
            };
        }
        match parse_complex(arg) {
            Some(c) => Ok(ParameterSpec::Constant { value: to_rows(&scalar_diagonal(p, q, c)) }),
            None => Err(self.ctx.fail(Kind::Parse, "ARGS", format!("--epsilon {arg:?} is neither a file nor a complex number"))),
        }
    }

    fn solve(&mut self, path: &Path, epsilon: Option<&str>, points: Option<&str>) -> Step<()> {
        let (file, data) = self.load_instance(path)?;
        self.check_data(&data)?;
        let spec = self.epsilon(epsilon, &file)?;
        self.ctx.set("parameter", &spec);
        let eps = spec.to_function(data.out_dim(), data.in_dim()).map_err(|e| self.ctx.fail(Kind::Parse, "PARSE", e.to_string()))?;
        let w = ResolventMatrix::new(&data).map_err(|e| library_failure(&mut self.ctx, "RESOLVENT", &e))?;
        let sol = lft_solve(&w, &eps).map_err(|e| library_failure(&mut self.ctx, "EPSILON", &e))?;
        self.ctx.set("admissible", sol.admissible);
        self.ctx.set("denominator_sigma_min", sol.denominator_sigma_min);
        if !sol.admissible {
            return Err(self.ctx.fail(Kind::Validation, "ADMISSIBILITY", "w21(0)ε(0) + w22(0) is singular"));
        }
        let Some(s) = sol.realization().cloned() else {
            return Err(self.ctx.fail(Kind::Numerical, "REALIZATION", "no state-space realization of the solution could be assembled"));
        };
        self.ctx.set("solution", FunctionFile::from_function(&s));
        if points.is_some() {
            let pts = self.points(points, "8")?;
            let table: Vec<Value> = pts
                .iter()
                .map(|z| json!({ "lambda": z, "s": s.evaluate(*z).ok().map(|v| to_rows(&v)) }))
                .collect();
            self.ctx.set("solution_samples", table);
        }
        let label = match &spec {
            ParameterSpec::Constant { .. } => "constant",
            ParameterSpec::Realization(_) => "realization",
        };
        self.check_solution(&data, file.interpolation.as_ref(), &s, label)
    }

    fn verify(&mut self, path: &Path, solution: &Path) -> Step<()> {
        let (file, data) = self.load_instance(path)?;
        self.check_data(&data)?;
        let s = self.load_function("solution", solution)?;
        self.check_solution(&data, file.interpolation.as_ref(), &s, "external")
    }

    fn check_solution(&mut self, data: &AipData<f64>, cond: Option<&PointConditions>, s: &RationalMatrixFunction<f64>, label: &str) -> Step<()> {
        let mut opts = VerifyOptions { grid: self.grid(), seed: self.seed(), parameter: Some(label.into()), ..Default::default() };
        if let Some(t) = self.tol {
            opts.ii_tol = t;
        }
        let report = verify_solution(data, s, &opts).map_err(|e| library_failure(&mut self.ctx, "VERIFY", &e))?;
        self.ctx.line(format!(
            "condition (ii) residual {:.3e}, κ̂ = {}{}, margin {}",
            report.condition_ii_residual,
            report.kappa_hat.kappa,
            if report.kappa_hat.stabilized { "" } else { " (not stabilized)" },
            report.condition_i_margin.map(|m| format!("{m:.3e}")).unwrap_or_else(|| "n/a".into())
        ));
        if !report.kappa_hat.stabilized {
            self.ctx.warn("KAPPA_UNSTABLE", "negative-squares count did not stabilize");
        }
        if report.condition_i_caveat {
            self.ctx.info("QUADRATURE", "the D(s) inner product involves the Γ_r correction; the margin is a quadrature estimate");
        }
        if !report.accepted {
            self.ctx.fail(Kind::Validation, "SOLUTION_REJECTED", report.notes.join("; "));
        }
        self.ctx.set("verification", &report);
        if let Some(cond) = cond {
            let res = cond.residuals(s).map_err(|e| self.ctx.fail(Kind::Parse, "PARSE", e.to_string()))?;
            let tol = self.tol.unwrap_or(INTERPOLATION_TOL);
            let worst = res.iter().map(|r| r.unwrap_or(f64::INFINITY)).fold(0.0, f64::max);
            self.ctx.set("interpolation", json!({ "nodes": cond.nodes, "residuals": res, "max": worst }));
            self.ctx.line(format!("interpolation residual {worst:.3e}"));
            if !(worst <= tol) {
                self.ctx.fail(Kind::Validation, "INTERPOLATION", format!("point conditions fail: max residual {worst:.3e}"));
            }
        }
        Ok(())
    }

    fn factorize(&mut self, path: &Path) -> Step<()> {
        let f = self.load_function("function", path)?;
        let pts: Vec<C64> = spiral_points(50, 0.95, self.seed()).into_iter().filter(|z| f.evaluate(*z).is_ok()).collect();
        let tol = self.tol.unwrap_or(KL_TOL);
        for (side, kl) in [(Side::Left, krein_langer_left(&f)), (Side::Right, krein_langer_right(&f))] {
            let name = match side {
                Side::Left => "left",
                Side::Right => "right",
            };
            let kl = kl.map_err(|e| library_failure(&mut self.ctx, "KL", &e))?;
            self.record_factorization(name, &f, &kl, &pts, tol)?;
        }
        Ok(())
    }

    fn record_factorization(&mut self, name: &str, f: &RationalMatrixFunction<f64>, kl: &KLFactorization<f64>, pts: &[C64], tol: f64) -> Step<()> {
        let residual = kl.reconstruction_residual(f, pts).map_err(|e| library_failure(&mut self.ctx, "KL", &e))?;
        let rank = kl.rank_condition(pts).map_err(|e| library_failure(&mut self.ctx, "KL", &e))?;
        let full = if kl.side == Side::Left { f.out_dim() } else { f.in_dim() };
        self.ctx.set(
            name,
            json!({
                "degree": kl.certified_degree,
                "blaschke": kl.blaschke_part.summary(),
                "schur_part": FunctionFile::from_function(&kl.schur_part),
                "kernel_estimate": kl.kernel_estimate,
                "consistent": kl.is_consistent(),
                "reconstruction_residual": residual,
                "rank_min": rank,
                "rank_full": rank == full,
                "sample_points": pts.len(),
            }),
        );
        self.ctx.line(format!("{name}: degree {}, reconstruction residual {residual:.3e}, rank {rank}/{full}", kl.certified_degree));
        if !(residual <= tol) {
            self.ctx.fail(Kind::Numerical, "KL_RESIDUAL", format!("{name} factorization residual {residual:.3e}"));
        }
        if rank != full {
            self.ctx.fail(Kind::Numerical, "KL_RANK", format!("{name} rank condition fails: rank {rank} < {full}"));
        }
        if !kl.is_consistent() {
            match &kl.kernel_estimate {
                Some(e) if e.stabilized => {
                    self.ctx.fail(Kind::Numerical, "KL_DEGREE", format!("{name} degree {} but κ̂ = {}", kl.certified_degree, e.kappa));
                }
                _ => self.ctx.warn("KL_DEGREE", format!("{name} degree differs from an unstabilized κ̂")),
            }
        }
        Ok(())
    }

    fn signature(&mut self, path: &Path) -> Step<()> {
        let text = self.read("input", path)?;
        let value: Value = self.parse_json(path, &text)?;
        let options = SampleOptions { seed: self.seed(), ..Default::default() };
        if value.get("M").is_some() {
            let file: InstanceFile = self.parse_json(path, &text)?;
            let data = file.to_data().map_err(|e| self.ctx.fail(Kind::Parse, "PARSE", format!("{}: {e}", path.display())))?;
            self.adopt_settings(&file);
            let options = SampleOptions { seed: self.seed(), ..Default::default() };
            self.check_data(&data)?;
            let inr = inertia(&data.p, DEFAULT_ZERO_TOL).map_err(|e| library_failure(&mut self.ctx, "INERTIA", &e))?;
            let w = ResolventMatrix::new(&data).map_err(|e| library_failure(&mut self.ctx, "RESOLVENT", &e))?;
            let pot = check_potapov_class(&w, &options).map_err(|e| library_failure(&mut self.ctx, "SIGNATURE", &e))?;
            self.ctx.set("kind", "instance");
            self.ctx.set("inertia", inr);
            self.ctx.set("potapov", &pot);
            self.ctx.line(format!("κ(P) = {}, κ̂ of the W kernel = {}", pot.kappa, pot.kappa_hat.kappa));
            if !pot.kappa_hat.stabilized {
                self.ctx.warn("KAPPA_UNSTABLE", "negative-squares count did not stabilize");
            }
            if !pot.kerpen_ok {
                self.ctx.warn("KERPEN", "the kernel of the pencil data is not trivial; only the bound is meaningful");
            }
            if !pot.bound_ok {
                self.ctx.fail(Kind::Numerical, "POTAPOV", format!("κ̂ = {} exceeds κ = {}", pot.kappa_hat.kappa, pot.kappa));
            }
            return Ok(());
        }
        let file: FunctionFile = self.parse_json(path, &text)?;
        let s = file.to_function().map_err(|e| self.ctx.fail(Kind::Parse, "PARSE", format!("{}: {e}", path.display())))?;
        let est = estimate_negative_squares(&SchurKernel::new(&s), &options).map_err(|e| library_failure(&mut self.ctx, "SIGNATURE", &e))?;
        self.ctx.set("kind", "function");
        self.ctx.set("negative_squares", &est);
        self.ctx.line(format!("κ̂ = {}{}", est.kappa, if est.stabilized { "" } else { " (not stabilized)" }));
        if !est.stabilized {
            self.ctx.warn("KAPPA_UNSTABLE", "negative-squares count did not stabilize");
        }
        Ok(())
    }
}

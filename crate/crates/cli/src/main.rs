//! `gonlab`: command-line front end for the geometry-of-numbers laboratory.
//!
//! Every subcommand prints a JSON report (schema `gonlab/1`) or, where a table
//! makes sense, CSV. Exit status: 0 success, 1 a checked property failed, 2 bad input.

use clap::{Args, Parser, Subcommand, ValueEnum};
use gonlab::badlab::{self, BadnessQuery, PhiPolicy};
use gonlab::bestapprox::{self, BestApproxSequence, Subsequence};
use gonlab::dynamics::{self, DvOptions, LineMeasure, SourceMeasure};
use gonlab::lattice::{Dims, FlowTime, Grid, LatticeBasis, RationalSubspace};
use gonlab::linalg::Matrix;
use gonlab::minima::{self, AuditStatus, Parallelepiped};
use gonlab::templates::{self, ThreeSystem};
use gonlab::{GonError, Scalar};
use serde::Serialize;
use serde_json::{json, Value};
use std::cmp::Ordering;
use std::io::Write;
use std::path::PathBuf;

const SCHEMA: &str = "gonlab/1";

const SUBCOMMANDS: [&str; 24] = [
    "psi", "seq", "classc", "minima", "profile", "template", "extend", "claims", "transfer", "flow", "weights",
    "values", "fourier", "coset", "tailspan", "bad", "scan", "measure", "pell", "boxcheck", "cover", "auxcount",
    "bmeasure", "etasearch",
];

#[derive(Parser, Debug)]
#[command(name = "gonlab", version, about = "Best approximations, successive minima, diagonal flows and badly approximable targets")]
#[command(args_override_self = true)]
struct Cli {
    /// Worker threads (defaults to the number of cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// JSON object of option values; explicit flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Working precision in bits for non-exact reals.
    #[arg(long, global = true, default_value_t = 256)]
    precision: u32,
    /// Fractional digits for decimal output.
    #[arg(long, global = true, default_value_t = 12)]
    digits: usize,
    /// Output file (stdout if absent); a `.csv` extension selects CSV.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args, Debug, Clone)]
struct MatrixArgs {
    /// Matrix as a JSON array of rows of scalar literals, e.g. '[["sqrt:2"]]'.
    #[arg(long)]
    matrix: String,
    /// Rows of the matrix (checked against the literal).
    #[arg(long)]
    m: Option<usize>,
    /// Columns of the matrix (checked against the literal).
    #[arg(long)]
    n: Option<usize>,
}

#[derive(Args, Debug, Clone)]
struct ShellArgs {
    /// Smallest ‖q‖ in the shell.
    #[arg(long, default_value_t = 1)]
    qmin: i64,
    /// Largest ‖q‖ in the shell.
    #[arg(long = "Q")]
    q: i64,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Irrationality measure function Ψ_A(t), or its jump table up to --tmax.
    Psi {
        #[command(flatten)]
        mat: MatrixArgs,
        #[arg(long)]
        t: Option<u64>,
        #[arg(long)]
        tmax: Option<u64>,
    },
    /// Best approximation sequence (M_l, ζ_l, Δ_l) with the Δ_l ≤ 1 and growth audits.
    Seq {
        #[command(flatten)]
        mat: MatrixArgs,
        #[arg(long)]
        tmax: u64,
    },
    /// Class-C test: summability of Δ_{l_k}^{d-1} and decay of H_k along a subsequence.
    Classc {
        #[command(flatten)]
        mat: MatrixArgs,
        #[arg(long)]
        tmax: u64,
        /// JSON list of 1-based indices l_k; automatic when absent.
        #[arg(long)]
        subsequence: Option<String>,
    },
    /// Successive minima of {‖q‖ ≤ 1, ‖Aq + p‖ ≤ Q^{-1}} (--qinv) or of Π_l (--l), with Minkowski's second theorem.
    Minima {
        #[command(flatten)]
        mat: MatrixArgs,
        #[arg(long)]
        qinv: Option<String>,
        #[arg(long)]
        l: Option<usize>,
        #[arg(long, default_value_t = 1000)]
        tmax: u64,
    },
    /// Log successive minima L_j(q) of {‖q‖ ≤ 1, ‖Aq + p‖ ≤ e^{-q}} along a q grid.
    Profile {
        #[command(flatten)]
        mat: MatrixArgs,
        /// Grid as 'start:stop:step' or a JSON list of literals.
        #[arg(long)]
        grid: String,
    },
    /// The explicit 3-system on [1, Q-1], extended self-similarly.
    Template {
        #[arg(long = "Q")]
        q: String,
        #[arg(long, default_value_t = 0)]
        levels: u32,
        /// Check the 3-system axioms and fail if any is violated.
        #[arg(long)]
        validate: bool,
        #[arg(long, default_value_t = 4)]
        samples: usize,
    },
    /// Self-similar extension of a 3-system read from JSON.
    Extend {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        levels: u32,
        #[arg(long, default_value_t = 4)]
        samples: usize,
    },
    /// The two inequalities relating the explicit template to its parameter Q.
    Claims {
        #[arg(long = "Q")]
        q: String,
        #[arg(long, default_value_t = 0)]
        levels: u32,
    },
    /// Bounds on Ψ from an affine bound L_1(q) ≷ A q - B.
    Transfer {
        #[arg(long)]
        a: String,
        #[arg(long)]
        b: String,
        /// Needed for the lower bound.
        #[arg(long)]
        theta_norm: Option<String>,
        #[arg(long, value_enum)]
        direction: DirectionArg,
        /// Points t at which to evaluate the bound.
        #[arg(long)]
        grid: Option<String>,
    },
    /// Systole of h_t x along a time grid.
    Flow {
        /// Basis (columns) of the lattice as a JSON matrix.
        #[arg(long)]
        lattice: String,
        #[arg(long)]
        m: usize,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        grid: String,
    },
    /// Weights of the diagonal flow on the k-th exterior power.
    Weights {
        #[arg(long)]
        m: usize,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        k: usize,
        /// Fail when some weight is zero.
        #[arg(long)]
        require_nonzero: bool,
    },
    /// Values of F(v, w) = ‖v‖^m ‖w‖^n on a grid, with gap statistics.
    Values {
        #[arg(long)]
        lattice: String,
        /// Shift vector as a JSON list of literals.
        #[arg(long)]
        shift: String,
        #[arg(long)]
        m: usize,
        #[arg(long)]
        n: usize,
        #[arg(long = "Q")]
        q: i64,
        #[arg(long, default_value_t = 1.0)]
        s: f64,
        #[arg(long, default_value_t = 20)]
        bins: usize,
    },
    /// Fourier coefficients of pushforwards of a line or Haar measure under h_t.
    Fourier {
        /// Base point of a line measure.
        #[arg(long)]
        base: Option<String>,
        /// Direction of a line measure.
        #[arg(long)]
        direction: Option<String>,
        /// Source lattice of a Haar measure.
        #[arg(long)]
        haar: Option<String>,
        /// Target lattice (defaults to Z^d).
        #[arg(long)]
        target: Option<String>,
        /// Character b in the dual of the target.
        #[arg(long)]
        b: String,
        #[arg(long)]
        m: usize,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        grid: String,
    },
    /// Integer relations of a sequence of integer vectors and the subtorus they cut out.
    Coset {
        /// CSV file, one vector per row.
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 0)]
        tail_start: usize,
    },
    /// Limit of the spans of tails of a sequence of rational subspaces.
    Tailspan {
        /// JSON list of subspaces, each a list of integer spanning vectors.
        #[arg(long)]
        subspaces: String,
        #[arg(long)]
        ambient: usize,
    },
    /// Badness ‖q‖^{n/m}<Aq - η> minimized over a shell; --steps gives dyadic shells, --doubling checks η ↦ 2η.
    Bad {
        #[command(flatten)]
        mat: MatrixArgs,
        #[arg(long)]
        eta: String,
        #[command(flatten)]
        shell: ShellArgs,
        #[arg(long)]
        steps: Option<u32>,
        #[arg(long)]
        doubling: bool,
    },
    /// Badness along the line t (Aq0 + p0) + η.
    Scan {
        #[command(flatten)]
        mat: MatrixArgs,
        #[arg(long)]
        q0: Option<String>,
        #[arg(long)]
        p0: String,
        #[arg(long)]
        eta: Option<String>,
        #[arg(long)]
        grid: String,
        #[command(flatten)]
        shell: ShellArgs,
        #[arg(long)]
        eps: String,
    },
    /// Fraction of a midpoint grid of targets with badness above ε.
    Measure {
        #[command(flatten)]
        mat: MatrixArgs,
        #[arg(long)]
        resolution: u32,
        #[command(flatten)]
        shell: ShellArgs,
        #[arg(long)]
        eps: String,
    },
    /// Lower bound for F on the shifted grid of the Pell form x^2 - 2y^2.
    Pell {
        #[arg(long)]
        m: usize,
        /// Shift; coordinates 1 and m+1 must be 1/2. Defaults to those and zeros.
        #[arg(long)]
        shift: Option<String>,
        #[arg(long, default_value_t = 10_000)]
        enum_q: i64,
        #[arg(long, default_value_t = 6)]
        full_q: i64,
    },
    /// Every box η + [0, 2dζ_l/Δ_l)^m contains some Aq - p with ‖q‖ ≤ d M_{l+1}/Δ_l.
    Boxcheck {
        #[command(flatten)]
        mat: MatrixArgs,
        #[arg(long)]
        l: usize,
        /// JSON list of target vectors.
        #[arg(long)]
        etas: Option<String>,
        /// Midpoint grid resolution, used when --etas is absent.
        #[arg(long, default_value_t = 100)]
        resolution: u32,
    },
    /// Nested box covering built from best approximations, with its audits.
    Cover {
        #[command(flatten)]
        mat: MatrixArgs,
        /// Number of sequence terms to compute.
        #[arg(long, default_value_t = 16)]
        len: usize,
        #[arg(long)]
        subsequence: Option<String>,
        #[arg(long)]
        eps: String,
        #[arg(long)]
        kmax: usize,
        /// JSON list of φ_k; the default policy otherwise.
        #[arg(long)]
        phi: Option<String>,
    },
    /// Count of (a0, a1, a2) with a small value of a0 + a1θ1 + a2θ2 + ... for some θ3.. in [0,1].
    Auxcount {
        #[arg(long = "M")]
        big_m: i64,
        #[arg(long)]
        delta: String,
        /// JSON list (a3, ..., am).
        #[arg(long)]
        tail: String,
        #[arg(long)]
        theta1: String,
        #[arg(long)]
        theta2: String,
    },
    /// Monte Carlo measure of the union of thin slabs in [0,1]^{m-2}.
    Bmeasure {
        #[arg(long = "M")]
        big_m: i64,
        #[arg(long)]
        eps: f64,
        #[arg(long)]
        m: usize,
        #[arg(long)]
        theta1: String,
        #[arg(long)]
        theta2: String,
        #[arg(long, default_value_t = 100_000)]
        samples: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Search for a target with large badness for the vector θ.
    Etasearch {
        #[arg(long)]
        theta: String,
        #[arg(long = "Q")]
        q: i64,
        #[arg(long, default_value_t = 8)]
        budget: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum DirectionArg {
    Lower,
    Upper,
}

enum Fail {
    Input(String),
    Check(String),
}

impl From<GonError> for Fail {
    fn from(e: GonError) -> Self {
        match e {
            GonError::Undecidable(_) => Fail::Check(e.to_string()),
            _ => Fail::Input(e.to_string()),
        }
    }
}

type Res<T> = std::result::Result<T, Fail>;

fn input<T>(msg: impl Into<String>) -> Res<T> {
    Err(Fail::Input(msg.into()))
}

struct Report {
    query: Value,
    result: Value,
    ok: bool,
    csv: Option<Vec<u8>>,
}

fn to_value<T: Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("serializable report")
}

fn scalar(s: &str) -> Res<Scalar> {
    s.parse().map_err(|e: GonError| Fail::Input(e.to_string()))
}

fn json(s: &str) -> Res<Value> {
    serde_json::from_str(s).map_err(|e| Fail::Input(format!("invalid JSON `{s}`: {e}")))
}

fn literal(v: &Value) -> Res<Scalar> {
    match v {
        Value::String(s) => scalar(s),
        Value::Number(n) => scalar(&n.to_string()),
        _ => input(format!("expected a scalar literal, got {v}")),
    }
}

fn vector_of(v: &Value) -> Res<Vec<Scalar>> {
    match v {
        Value::Array(xs) => xs.iter().map(literal).collect(),
        _ => input(format!("expected a list, got {v}")),
    }
}

fn vector(s: &str) -> Res<Vec<Scalar>> {
    vector_of(&json(s)?)
}

fn int_vector_of(v: &Value) -> Res<Vec<i64>> {
    match v {
        Value::Array(xs) => xs
            .iter()
            .map(|x| x.as_i64().ok_or_else(|| Fail::Input(format!("expected an integer, got {x}"))))
            .collect(),
        _ => input(format!("expected a list of integers, got {v}")),
    }
}

fn int_vector(s: &str) -> Res<Vec<i64>> {
    int_vector_of(&json(s)?)
}

fn matrix(s: &str) -> Res<Matrix> {
    match json(s)? {
        Value::Array(rows) => Ok(Matrix::from_rows(rows.iter().map(vector_of).collect::<Res<_>>()?)?),
        v => input(format!("expected a list of rows, got {v}")),
    }
}

fn matrix_args(a: &MatrixArgs) -> Res<(Matrix, Dims)> {
    let mat = matrix(&a.matrix)?;
    if a.m.is_some_and(|m| m != mat.rows()) || a.n.is_some_and(|n| n != mat.cols()) {
        return input(format!("matrix is {}×{}, flags say {:?}×{:?}", mat.rows(), mat.cols(), a.m, a.n));
    }
    let dims = Dims::new(mat.rows(), mat.cols())?;
    Ok((mat, dims))
}

fn lattice(s: &str) -> Res<LatticeBasis> {
    Ok(LatticeBasis::new(matrix(s)?)?)
}

/// `start:stop:step` (inclusive, exact) or a JSON list.
fn grid(s: &str) -> Res<Vec<Scalar>> {
    if s.trim_start().starts_with('[') {
        return vector(s);
    }
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        return input(format!("grid `{s}` is neither start:stop:step nor a JSON list"));
    }
    let (start, stop, step) = (scalar(parts[0])?, scalar(parts[1])?, scalar(parts[2])?);
    if step.sign() != Some(Ordering::Greater) {
        return input("grid step must be positive");
    }
    let mut out = Vec::new();
    let mut x = start;
    while x.try_cmp(&stop).unwrap_or_else(|| x.cmp_approx(&stop)) != Ordering::Greater {
        if out.len() >= 1_000_000 {
            return input("grid has more than 10^6 points");
        }
        out.push(x.clone());
        x = &x + &step;
    }
    Ok(out)
}

fn csv_bytes(f: impl FnOnce(&mut Vec<u8>) -> gonlab::Result<()>) -> Res<Option<Vec<u8>>> {
    let mut buf = Vec::new();
    f(&mut buf)?;
    Ok(Some(buf))
}

fn report<T: Serialize>(query: Value, result: &T, ok: bool, csv: Option<Vec<u8>>) -> Res<Report> {
    Ok(Report { query, result: to_value(result), ok, csv })
}

fn dispatch(cmd: &Cmd, digits: usize) -> Res<Report> {
    match cmd {
        Cmd::Psi { mat, t, tmax } => {
            let (a, dims) = matrix_args(mat)?;
            let q = json!({"matrix": to_value(&a), "t": t, "tmax": tmax});
            match (t, tmax) {
                (Some(t), None) => {
                    let v = bestapprox::psi(&a, *t, dims)?;
                    report(q, &v, true, None)
                }
                (None, Some(tm)) => {
                    let seq = bestapprox::best_approx_sequence(&a, *tm, dims)?;
                    let csv = csv_bytes(|b| seq.write_csv(b))?;
                    report(q, &seq, true, csv)
                }
                _ => input("give exactly one of --t and --tmax"),
            }
        }
        Cmd::Seq { mat, tmax } => {
            let (a, dims) = matrix_args(mat)?;
            let seq = bestapprox::best_approx_sequence(&a, *tmax, dims)?;
            let growth = bestapprox::growth_audit(&seq);
            let minkowski = seq.minkowski_violations();
            let ok = minkowski.is_empty() && growth.violations.is_empty();
            let csv = csv_bytes(|b| seq.write_csv(b))?;
            let q = json!({"matrix": to_value(&a), "tmax": tmax});
            let r = json!({"sequence": to_value(&seq), "minkowski_violations": minkowski, "growth": to_value(&growth)});
            report(q, &r, ok, csv)
        }
        Cmd::Classc { mat, tmax, subsequence } => {
            let (a, dims) = matrix_args(mat)?;
            let seq = bestapprox::best_approx_sequence(&a, *tmax, dims)?;
            let sub = match subsequence {
                Some(s) => Subsequence::Explicit(
                    int_vector(s)?.into_iter().map(|x| usize::try_from(x).map_err(|_| Fail::Input("negative index".into()))).collect::<Res<_>>()?,
                ),
                None => Subsequence::Auto,
            };
            let rep = bestapprox::class_c_test(&seq, &sub)?;
            report(json!({"matrix": to_value(&a), "tmax": tmax}), &rep, true, None)
        }
        Cmd::Minima { mat, qinv, l, tmax } => {
            let (a, dims) = matrix_args(mat)?;
            let body = match (qinv, l) {
                (Some(qi), None) => Parallelepiped::appendix_body(&a, &scalar(qi)?)?,
                (None, Some(l)) => {
                    let seq = bestapprox::best_approx_sequence(&a, *tmax, dims)?;
                    Parallelepiped::pi_l(&a, &seq, *l)?
                }
                _ => return input("give exactly one of --qinv and --l"),
            };
            let m = minima::body_minima(&body, None)?;
            let audit = minima::minkowski_audit(&body, &m)?;
            let ok = audit.status != AuditStatus::Fail;
            let q = json!({"matrix": to_value(&a), "qinv": qinv, "l": l});
            report(q, &json!({"minima": to_value(&m), "audit": to_value(&audit)}), ok, None)
        }
        Cmd::Profile { mat, grid: g } => {
            let (a, _) = matrix_args(mat)?;
            let qs = grid(g)?;
            let p = minima::log_minima_profile(&a, &qs)?;
            let ok = p.ordered() && p.sum_bounded();
            let csv = csv_bytes(|b| p.write_csv(b, digits))?;
            report(json!({"matrix": to_value(&a), "grid": to_value(&qs)}), &p, ok, csv)
        }
        Cmd::Template { q, levels, validate, samples } => {
            let qv = scalar(q)?;
            let base = templates::appendix_template(&qv)?;
            let p = templates::self_similar_extend(&base, *levels)?;
            let violations = if *validate { templates::validate_three_system(&p) } else { vec![] };
            let csv = csv_bytes(|b| p.write_csv(b, *samples, digits))?;
            let r = json!({"template": to_value(&p), "violations": to_value(&violations)});
            report(json!({"Q": to_value(&qv), "levels": levels, "validate": validate}), &r, violations.is_empty(), csv)
        }
        Cmd::Extend { input: path, levels, samples } => {
            let text = std::fs::read_to_string(path).map_err(|e| Fail::Input(format!("{}: {e}", path.display())))?;
            let p: ThreeSystem = serde_json::from_str(&text).map_err(|e| Fail::Input(format!("{}: {e}", path.display())))?;
            let ext = templates::self_similar_extend(&p, *levels)?;
            let violations = templates::validate_three_system(&ext);
            let csv = csv_bytes(|b| ext.write_csv(b, *samples, digits))?;
            let r = json!({"template": to_value(&ext), "violations": to_value(&violations)});
            report(json!({"input": path, "levels": levels}), &r, violations.is_empty(), csv)
        }
        Cmd::Claims { q, levels } => {
            let qv = scalar(q)?;
            let p = templates::self_similar_extend(&templates::appendix_template(&qv)?, *levels)?;
            let rep = templates::template_claims_check(&p, &qv)?;
            report(json!({"Q": to_value(&qv), "levels": levels}), &rep, rep.holds(), None)
        }
        Cmd::Transfer { a, b, theta_norm, direction, grid: g } => {
            let (av, bv) = (scalar(a)?, scalar(b)?);
            let tb = match direction {
                DirectionArg::Lower => {
                    let tn = theta_norm.as_deref().ok_or_else(|| Fail::Input("--theta-norm is required for the lower bound".into()))?;
                    templates::psi_lower_from_l1(&av, &bv, &scalar(tn)?)?
                }
                DirectionArg::Upper => templates::psi_upper_from_l1(&av, &bv)?,
            };
            let values = match g {
                Some(g) => grid(g)?
                    .iter()
                    .map(|t| Ok((t.clone(), tb.bound_at(t)?)))
                    .collect::<Res<Vec<_>>>()?,
                None => vec![],
            };
            let q = json!({"a": to_value(&av), "b": to_value(&bv), "direction": format!("{direction:?}").to_lowercase()});
            report(q, &json!({"bounds": to_value(&tb), "values": to_value(&values)}), true, None)
        }
        Cmd::Flow { lattice: l, m, n, grid: g } => {
            let x = lattice(l)?;
            let ts = grid(g)?;
            let curve = dynamics::systole_curve(&x, &ts, Dims::new(*m, *n)?)?;
            let csv = csv_bytes(|b| curve.write_csv(b, digits))?;
            report(json!({"lattice": to_value(x.matrix()), "m": m, "n": n}), &curve, true, csv)
        }
        Cmd::Weights { m, n, k, require_nonzero } => {
            let t = dynamics::wedge_weights(Dims::new(*m, *n)?, *k)?;
            let ok = !*require_nonzero || t.zero_rows().is_empty();
            let csv = csv_bytes(|b| t.write_csv(b))?;
            report(json!({"m": m, "n": n, "k": k, "require_nonzero": require_nonzero}), &t, ok, csv)
        }
        Cmd::Values { lattice: l, shift, m, n, q, s, bins } => {
            let y = Grid::new(lattice(l)?, vector(shift)?)?;
            let vs = dynamics::value_set_sample(&y, *q, Dims::new(*m, *n)?, DvOptions { s: *s, bins: *bins })?;
            let r = json!({"report": to_value(&vs.report), "distinct_values": vs.values.len()});
            report(json!({"lattice": to_value(y.lattice().matrix()), "shift": to_value(&y.shift()), "Q": q}), &r, true, None)
        }
        Cmd::Fourier { base, direction, haar, target, b, m, n, grid: g } => {
            let dims = Dims::new(*m, *n)?;
            let measure = match (base, direction, haar) {
                (Some(bs), Some(dr), None) => SourceMeasure::Line(LineMeasure::new(vector(bs)?, vector(dr)?)?),
                (None, None, Some(h)) => SourceMeasure::Haar(lattice(h)?),
                _ => return input("give --base and --direction for a line measure, or --haar"),
            };
            let tgt = match target {
                Some(t) => lattice(t)?,
                None => LatticeBasis::standard(dims.d()),
            };
            let bv = vector(b)?;
            let rows = grid(g)?
                .into_iter()
                .map(|t| {
                    let map = dynamics::TorusMap::Flow(FlowTime::Time(t.clone()), dims);
                    Ok((t, dynamics::pushforward_fourier(&measure, &map, &bv, &tgt)?))
                })
                .collect::<Res<Vec<_>>>()?;
            let csv = csv_bytes(|w| dynamics::write_fourier_csv(w, &rows, digits))?;
            let r: Vec<Value> = rows.iter().map(|(t, v)| json!({"t": to_value(t), "value": to_value(v), "abs": v.abs()})).collect();
            report(json!({"b": to_value(&bv), "m": m, "n": n}), &r, true, csv)
        }
        Cmd::Coset { input: path, tail_start } => {
            let f = std::fs::File::open(path).map_err(|e| Fail::Input(format!("{}: {e}", path.display())))?;
            let gammas = dynamics::read_gammas_csv(f)?;
            let ext = dynamics::coset_extract(&gammas, *tail_start)?;
            let ok = ext.verify(&gammas, *tail_start);
            report(json!({"input": path, "tail_start": tail_start, "vectors": gammas.len()}), &ext, ok, None)
        }
        Cmd::Tailspan { subspaces, ambient } => {
            let list = match json(subspaces)? {
                Value::Array(xs) => xs
                    .iter()
                    .map(|s| match s {
                        Value::Array(vs) => {
                            let vecs = vs.iter().map(int_vector_of).collect::<Res<Vec<_>>>()?;
                            Ok(RationalSubspace::span_i64(&vecs, *ambient)?)
                        }
                        _ => input("each subspace is a list of vectors"),
                    })
                    .collect::<Res<Vec<_>>>()?,
                _ => return input("--subspaces must be a JSON list"),
            };
            let ts = dynamics::tail_span_limit(&list)?;
            report(json!({"ambient": ambient, "count": list.len()}), &ts, true, None)
        }
        Cmd::Bad { mat, eta, shell, steps, doubling } => {
            let (a, _) = matrix_args(mat)?;
            let e = vector(eta)?;
            let query = BadnessQuery::new(a.clone(), e.clone(), (shell.qmin, shell.q))?;
            let q = json!({"matrix": to_value(&a), "eta": to_value(&e), "shell": [shell.qmin, shell.q]});
            if *doubling {
                let rep = badlab::doubling_inequality_check(&a, &e, shell.q)?;
                return report(q, &rep, rep.holds, None);
            }
            let score = badlab::badness_score(&query)?;
            let shells = match steps {
                Some(s) => Some(badlab::shell_profile(&a, &e, *s)?),
                None => None,
            };
            let r = json!({
                "score": to_value(&score.score),
                "score_decimal": score.score.to_decimal(digits),
                "witness": {"q": score.q, "p": to_value(&score)["p"]},
                "shells": shells.as_ref().map(to_value),
            });
            report(q, &r, true, None)
        }
        Cmd::Scan { mat, q0, p0, eta, grid: g, shell, eps } => {
            let (a, _) = matrix_args(mat)?;
            let q0v = match q0 {
                Some(s) => int_vector(s)?,
                None => vec![0; a.cols()],
            };
            let dir = badlab::coset_direction(&a, &q0v, &int_vector(p0)?)?;
            let e = match eta {
                Some(s) => vector(s)?,
                None => vec![Scalar::zero(); a.rows()],
            };
            let ts = grid(g)?;
            let rep = badlab::coset_scan(&a, &dir, &e, &ts, (shell.qmin, shell.q), &scalar(eps)?)?;
            let csv = csv_bytes(|b| rep.write_csv(b, "t", digits))?;
            let q = json!({"matrix": to_value(&a), "direction": to_value(&dir), "eta": to_value(&e), "shell": [shell.qmin, shell.q], "eps": eps});
            report(q, &rep, true, csv)
        }
        Cmd::Measure { mat, resolution, shell, eps } => {
            let (a, _) = matrix_args(mat)?;
            let rep = badlab::bad_measure_estimate(&a, *resolution, (shell.qmin, shell.q), &scalar(eps)?)?;
            let csv = csv_bytes(|b| rep.write_csv(b, "eta", digits))?;
            let q = json!({"matrix": to_value(&a), "resolution": resolution, "shell": [shell.qmin, shell.q], "eps": eps});
            report(q, &rep, true, csv)
        }
        Cmd::Pell { m, shift, enum_q, full_q } => {
            let dims = Dims::new(*m, *m)?;
            let u = match shift {
                Some(s) => vector(s)?,
                None => (0..2 * m).map(|i| if i == 0 || i == *m { Scalar::ratio(1, 2) } else { Scalar::zero() }).collect(),
            };
            let c = badlab::pell_certificate(dims, &u, *enum_q, *full_q)?;
            report(json!({"m": m, "shift": to_value(&u), "enum_q": enum_q, "full_q": full_q}), &c, c.agree && c.systole_ok, None)
        }
        Cmd::Boxcheck { mat, l, etas, resolution } => {
            let (a, _) = matrix_args(mat)?;
            let targets = match etas {
                Some(s) => match json(s)? {
                    Value::Array(xs) => xs.iter().map(vector_of).collect::<Res<Vec<_>>>()?,
                    _ => return input("--etas must be a list of vectors"),
                },
                None => badlab::midpoint_grid(a.rows(), *resolution),
            };
            let seq = badlab::sequence_through(&a, l + 1)?;
            let rep = badlab::box_cover_check(&seq, *l, &targets)?;
            report(json!({"matrix": to_value(&a), "l": l, "targets": targets.len()}), &rep, rep.all_hit, None)
        }
        Cmd::Cover { mat, len, subsequence, eps, kmax, phi } => {
            let (a, _) = matrix_args(mat)?;
            let seq: BestApproxSequence = badlab::sequence_through(&a, *len)?;
            let sub = match subsequence {
                Some(s) => Subsequence::Explicit(int_vector(s)?.into_iter().map(|x| x.max(0) as usize).collect()),
                None => Subsequence::Auto,
            };
            let policy = match phi {
                Some(s) => PhiPolicy::Explicit(vector(s)?),
                None => PhiPolicy::Default,
            };
            let plan = badlab::covering_plan_build(&seq, &sub, &scalar(eps)?, *kmax, &policy)?;
            let ok = plan.disjoint.iter().all(|d| *d != Some(false))
                && plan.levels.iter().all(|l| l.missing_boxes == 0)
                && plan.counts.iter().all(|c| c.within_sharp0);
            report(json!({"matrix": to_value(&a), "eps": eps, "kmax": kmax}), &plan, ok, None)
        }
        Cmd::Auxcount { big_m, delta, tail, theta1, theta2 } => {
            let (t1, t2) = (scalar(theta1)?, scalar(theta2)?);
            let tl = int_vector(tail)?;
            let rep = badlab::aux_count_audit(*big_m, &scalar(delta)?, &tl, (&t1, &t2))?;
            report(json!({"M": big_m, "delta": delta, "tail": tl, "theta": [theta1, theta2]}), &rep, rep.pass, None)
        }
        Cmd::Bmeasure { big_m, eps, m, theta1, theta2, samples, seed } => {
            let th = (scalar(theta1)?.to_f64(), scalar(theta2)?.to_f64());
            let rep = badlab::bme_measure_audit(*big_m, *eps, *m, th, *samples, *seed)?;
            let q = json!({"M": big_m, "eps": eps, "m": m, "theta": [theta1, theta2], "samples": samples, "seed": seed});
            report(q, &rep, rep.within, None)
        }
        Cmd::Etasearch { theta, q, budget, seed } => {
            let th = vector(theta)?;
            let s = badlab::eta_search(&th, *q, *budget, *seed)?;
            report(json!({"theta": to_value(&th), "Q": q, "budget": budget, "seed": seed}), &s, true, None)
        }
    }
}

fn name_of(cmd: &Cmd) -> &'static str {
    let dbg = format!("{cmd:?}");
    let head = dbg.split([' ', '{', '(']).next().unwrap_or("").to_lowercase();
    SUBCOMMANDS.iter().find(|s| **s == head).copied().unwrap_or("unknown")
}

/// Turns a JSON config object into flags placed right after the subcommand, so explicit flags win.
fn merge_config(mut argv: Vec<String>) -> std::result::Result<Vec<String>, String> {
    let mut path = None;
    for (i, a) in argv.iter().enumerate() {
        if a == "--config" {
            path = argv.get(i + 1).cloned();
        } else if let Some(p) = a.strip_prefix("--config=") {
            path = Some(p.to_string());
        }
    }
    let Some(path) = path else { return Ok(argv) };
    let text = std::fs::read_to_string(&path).map_err(|e| format!("config {path}: {e}"))?;
    let cfg: Value = serde_json::from_str(&text).map_err(|e| format!("config {path}: {e}"))?;
    let Value::Object(map) = cfg else { return Err(format!("config {path}: expected a JSON object")) };
    let mut pos = argv.iter().position(|a| SUBCOMMANDS.contains(&a.as_str()));
    let mut extra = Vec::new();
    for (k, v) in map {
        if k == "command" {
            if pos.is_none() {
                let c = v.as_str().ok_or("config: `command` must be a string")?.to_string();
                argv.push(c);
                pos = Some(argv.len() - 1);
            }
            continue;
        }
        let flag = format!("--{}", k.replace('_', "-"));
        match v {
            Value::Bool(true) => extra.push(flag),
            Value::Bool(false) | Value::Null => {}
            Value::String(s) => extra.extend([flag, s]),
            Value::Number(x) => extra.extend([flag, x.to_string()]),
            other => extra.extend([flag, other.to_string()]),
        }
    }
    let Some(p) = pos else { return Err("no subcommand given".into()) };
    argv.splice(p + 1..p + 1, extra);
    Ok(argv)
}

fn run(argv: Vec<String>) -> i32 {
    let argv = match merge_config(argv) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    if let Some(t) = cli.threads {
        if t == 0 || rayon::ThreadPoolBuilder::new().num_threads(t).build_global().is_err() {
            eprintln!("error: cannot start {t} worker threads");
            return 2;
        }
    }
    gonlab::scalar::set_default_precision(cli.precision);
    let format = cli.format.unwrap_or_else(|| match &cli.out {
        Some(p) if p.extension().is_some_and(|e| e == "csv") => Format::Csv,
        _ => Format::Json,
    });
    let rep = match dispatch(&cli.cmd, cli.digits) {
        Ok(r) => r,
        Err(Fail::Input(msg)) => {
            eprintln!("error: {msg}");
            return 2;
        }
        Err(Fail::Check(msg)) => {
            eprintln!("check failed: {msg}");
            return 1;
        }
    };
    let bytes = match format {
        Format::Json => {
            let doc = json!({
                "schema": SCHEMA,
                "command": name_of(&cli.cmd),
                "query": rep.query,
                "ok": rep.ok,
                "result": rep.result,
            });
            let mut s = serde_json::to_string_pretty(&doc).expect("json");
            s.push('\n');
            s.into_bytes()
        }
        Format::Csv => match rep.csv {
            Some(b) => b,
            None => {
                eprintln!("error: `{}` has no CSV output", name_of(&cli.cmd));
                return 2;
            }
        },
    };
    let written = match &cli.out {
        Some(p) => std::fs::write(p, &bytes).map_err(|e| format!("{}: {e}", p.display())),
        None => std::io::stdout().write_all(&bytes).map_err(|e| e.to_string()),
    };
    if let Err(e) = written {
        eprintln!("error: {e}");
        return 2;
    }
    if !rep.ok {
        eprintln!("check failed: see the report");
        return 1;
    }
    0
}

fn main() {
    std::process::exit(run(std::env::args().collect()));
}

//! Experiment runner behind the `cayley` binary.
//!
//! An experiment is described by an [`ExperimentConfig`], read from a
//! line-oriented `key = value` file and/or command-line flags. Reports are
//! plain strings so re-running a config gives byte-identical output.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use cayley_core::algebra::averaging_operator;
use cayley_core::cogrowth::{cheeger_buser_check, cheeger_constant, cogrowth_table, grigorchuk_residual, CheegerMode};
use cayley_core::criteria::{
    free_average_norm, free_basis_certify_with, hn_limit_experiment, infinitesimal_report_with, powers_average_bounds,
    FreeBasisInstance, GroupSequence, HnLimitRow, SequenceOptions,
};
use cayley_core::group::file::load_group_file;
use cayley_core::group::{burnside_group, DEFAULT_COSET_CAP};
use cayley_core::spectral::operator_norm_bounds;
use cayley_core::syntax::{parse_key_values, Entry};
use cayley_core::{Error, MarkedGroup, Result};
use serde_json::{json, Value};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Experiment {
    FreeNorms,
    Grigorchuk,
    Cheeger,
    HnLimit,
    PowersAverage,
    BasisCertify,
    BurnsideDesk,
    SequenceReport,
}

impl Experiment {
    pub const ALL: [Experiment; 8] = [
        Experiment::FreeNorms,
        Experiment::Grigorchuk,
        Experiment::Cheeger,
        Experiment::HnLimit,
        Experiment::PowersAverage,
        Experiment::BasisCertify,
        Experiment::BurnsideDesk,
        Experiment::SequenceReport,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::FreeNorms => "free-norms",
            Experiment::Grigorchuk => "grigorchuk",
            Experiment::Cheeger => "cheeger",
            Experiment::HnLimit => "hn-limit",
            Experiment::PowersAverage => "powers-average",
            Experiment::BasisCertify => "basis-certify",
            Experiment::BurnsideDesk => "burnside-desk",
            Experiment::SequenceReport => "sequence-report",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| format!("unknown experiment `{s}`"))
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            _ => Err(format!("unknown format `{s}` (expected csv or json)")),
        }
    }
}

/// Parses `2..5`, `2..=5`, `3` or `1,2,4` into a strictly increasing list.
pub fn parse_index_list(s: &str) -> std::result::Result<Vec<usize>, String> {
    let num = |t: &str| t.trim().parse::<usize>().map_err(|_| format!("`{t}` is not a nonnegative integer"));
    let v: Vec<usize> = if let Some((a, b)) = s.split_once("..") {
        let b = b.strip_prefix('=').unwrap_or(b);
        (num(a)?..=num(b)?).collect()
    } else {
        s.split(',').map(num).collect::<std::result::Result<_, _>>()?
    };
    if v.is_empty() || v.windows(2).any(|w| w[0] >= w[1]) {
        return Err(format!("`{s}` is not a nonempty increasing list"));
    }
    Ok(v)
}

/// Everything an experiment run needs. Unset values take per-experiment defaults.
#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub groups: Vec<PathBuf>,
    pub depth: Option<usize>,
    pub format: Format,
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
    pub seed: u64,
    pub ranks: Option<Vec<usize>>,
    pub n: Option<Vec<usize>>,
    pub mode: Option<CheegerMode>,
    pub radius: Option<usize>,
    pub budget: Option<usize>,
    /// powers-average: the averaged element, the conjugators and an optional left multiplier.
    pub element: Option<String>,
    pub conjugators: Option<String>,
    pub multiplier: Option<String>,
    /// basis-certify: elements of `A`, number of `x` letters, `T`-word length, sample count.
    pub a_set: Option<String>,
    pub basis_n: Option<usize>,
    pub length: Option<usize>,
    pub samples: Option<usize>,
    pub planted: bool,
    /// burnside-desk parameters.
    pub rank: Option<usize>,
    pub exponent: Option<u32>,
    pub word_length: Option<usize>,
    pub max_cosets: Option<usize>,
}

impl ExperimentConfig {
    pub fn new(experiment: Experiment) -> Self {
        ExperimentConfig {
            experiment,
            groups: Vec::new(),
            depth: None,
            format: Format::Csv,
            out: None,
            threads: None,
            seed: 0,
            ranks: None,
            n: None,
            mode: None,
            radius: None,
            budget: None,
            element: None,
            conjugators: None,
            multiplier: None,
            a_set: None,
            basis_n: None,
            length: None,
            samples: None,
            planted: false,
            rank: None,
            exponent: None,
            word_length: None,
            max_cosets: None,
        }
    }

    /// Reads a config file. `group` may repeat; paths are relative to the file.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))?;
        let dir = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, dir).map_err(|e| with_path(path, e))
    }

    pub fn parse(text: &str, dir: &Path) -> Result<Self> {
        const KEYS: &[&str] = &[
            "experiment", "group", "depth", "format", "out", "threads", "seed", "ranks", "n", "mode", "radius",
            "budget", "element", "conjugators", "multiplier", "a_set", "basis_n", "length", "samples", "planted",
            "rank", "exponent", "word_length", "max_cosets",
        ];
        let entries = parse_key_values(text, KEYS, &["group"])?;
        let one = |k: &str| entries.get(k).map(|v| &v[0]);
        let exp = one("experiment").ok_or_else(|| Error::config(1, 1, "missing `experiment = ...`"))?;
        let mut c = ExperimentConfig::new(typed(exp)?);
        for e in entries.get("group").into_iter().flatten() {
            c.groups.push(dir.join(&e.value));
        }
        c.depth = one("depth").map(positive).transpose()?;
        if let Some(e) = one("format") {
            c.format = typed(e)?;
        }
        c.out = one("out").map(|e| dir.join(&e.value));
        c.threads = one("threads").map(positive).transpose()?;
        if let Some(e) = one("seed") {
            c.seed = typed(e)?;
        }
        c.ranks = one("ranks").map(|e| parse_index_list(&e.value).map_err(|m| e.error(m))).transpose()?;
        c.n = one("n").map(|e| parse_index_list(&e.value).map_err(|m| e.error(m))).transpose()?;
        c.mode = one("mode").map(typed).transpose()?;
        c.radius = one("radius").map(positive).transpose()?;
        c.budget = one("budget").map(positive).transpose()?;
        c.element = one("element").map(|e| e.value.clone());
        c.conjugators = one("conjugators").map(|e| e.value.clone());
        c.multiplier = one("multiplier").map(|e| e.value.clone());
        c.a_set = one("a_set").map(|e| e.value.clone());
        c.basis_n = one("basis_n").map(positive).transpose()?;
        c.length = one("length").map(positive).transpose()?;
        c.samples = one("samples").map(typed).transpose()?;
        if let Some(e) = one("planted") {
            c.planted = typed(e)?;
        }
        c.rank = one("rank").map(positive).transpose()?;
        c.exponent = one("exponent").map(typed).transpose()?;
        c.word_length = one("word_length").map(positive).transpose()?;
        c.max_cosets = one("max_cosets").map(positive).transpose()?;
        Ok(c)
    }

    /// Checks the invariants that do not need any computation.
    pub fn validate(&self) -> Result<()> {
        if self.depth == Some(0) {
            return Err(Error::InvalidInput("depth must be at least 1".into()));
        }
        if let Some(p) = self.groups.iter().find(|p| !p.is_file()) {
            return Err(Error::InvalidInput(format!("group file {} does not exist", p.display())));
        }
        if self.threads == Some(0) {
            return Err(Error::InvalidInput("threads must be at least 1".into()));
        }
        Ok(())
    }

    fn load_groups(&self) -> Result<Vec<MarkedGroup>> {
        self.groups
            .iter()
            .map(|p| load_group_file(p).map_err(|e| with_path(p, e)))
            .collect()
    }

    fn one_group(&self, default: impl FnOnce() -> MarkedGroup) -> Result<MarkedGroup> {
        match self.groups.len() {
            0 => Ok(default()),
            1 => Ok(self.load_groups()?.remove(0)),
            _ => Err(Error::InvalidInput(format!("{} takes a single group", self.experiment))),
        }
    }

    fn depth_or(&self, d: usize) -> usize {
        self.depth.unwrap_or(d)
    }

    pub fn report_file_name(&self) -> String {
        format!("{}.{}", self.experiment, self.format.extension())
    }
}

fn typed<T: FromStr>(e: &Entry) -> Result<T>
where
    T::Err: fmt::Display,
{
    e.value.parse().map_err(|err: T::Err| e.error(err.to_string()))
}

fn positive(e: &Entry) -> Result<usize> {
    match e.value.parse::<usize>() {
        Ok(v) if v >= 1 => Ok(v),
        _ => Err(e.error(format!("expected a positive integer, found `{}`", e.value))),
    }
}

/// Prefixes line:column diagnostics with the file they refer to.
fn with_path(path: &Path, e: Error) -> Error {
    match e {
        Error::Config { line, column, message } => Error::Config {
            line,
            column,
            message: format!("{} (in {})", message, path.display()),
        },
        other => other,
    }
}

/// A finished report in both encodings.
#[derive(Clone, Debug)]
pub struct Report {
    pub csv: String,
    pub json: Value,
}

impl Report {
    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => self.csv.clone(),
            Format::Json => {
                let mut s = serde_json::to_string_pretty(&self.json).expect("serializable");
                s.push('\n');
                s
            }
        }
    }
}

fn f(x: f64) -> String {
    format!("{x:.12}")
}

fn to_value<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("serializable")
}

fn free_norms(c: &ExperimentConfig) -> Result<Report> {
    let ranks = c.ranks.clone().unwrap_or_else(|| (2..=5).collect());
    if ranks[0] < 2 {
        return Err(Error::InvalidInput("free-norms needs ranks >= 2".into()));
    }
    let depth = c.depth_or(60);
    let mut csv = String::from("i,n,bound,extrapolated,formula\n");
    let mut rows = Vec::new();
    for &i in &ranks {
        let g = MarkedGroup::free(i);
        let e = operator_norm_bounds(&averaging_operator(&g, false), depth)?;
        let formula = free_average_norm(i);
        // every bound is a lower bound on the exact norm
        if let Some(n) = (1..=depth).find(|&n| e.sequence.bound(n) > formula + 1e-9) {
            return Err(Error::invariant(format!("bound at n={n} exceeds 2 sqrt(i-1)/i for i={i}")));
        }
        for n in 1..=depth {
            csv.push_str(&format!("{i},{n},{},{},{}\n", f(e.sequence.bound(n)), f(e.extrapolated_at(n)), f(formula)));
        }
        rows.push(json!({
            "i": i,
            "depth": depth,
            "bound": e.last_bound(),
            "extrapolated": e.extrapolated,
            "formula": formula,
            "bounds": e.bounds(),
        }));
    }
    Ok(Report { csv, json: Value::Array(rows) })
}

fn grigorchuk(c: &ExperimentConfig) -> Result<Report> {
    let groups = if c.groups.is_empty() {
        vec![MarkedGroup::cyclic(3), MarkedGroup::free_abelian(2)]
    } else {
        c.load_groups()?
    };
    let depth = c.depth_or(40);
    let mut csv = String::from("group,rank,depth,rho_hat,omega_hat,omega_root,rhs,residual,exact_residual\n");
    let mut rows = Vec::new();
    for g in &groups {
        let r = grigorchuk_residual(g, depth)?;
        if let Some(res) = &r.exact_residual {
            if res != "0" {
                return Err(Error::invariant(format!("exact Grigorchuk residual for {} is {res}", r.group)));
            }
        }
        csv.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            csv_field(&r.group),
            r.rank,
            r.depth,
            f(r.rho_hat),
            f(r.omega_hat),
            f(r.omega_root),
            f(r.rhs),
            f(r.residual),
            r.exact_residual.clone().unwrap_or_default()
        ));
        rows.push(to_value(&r));
    }
    Ok(Report { csv, json: Value::Array(rows) })
}

fn cheeger(c: &ExperimentConfig) -> Result<Report> {
    let g = c.one_group(|| MarkedGroup::free(2))?;
    let mode = c.mode.unwrap_or(if g.order().is_some() {
        CheegerMode::PaperExactFinite
    } else {
        CheegerMode::BallUpperInfinite
    });
    let limit = match mode {
        CheegerMode::BallUpperInfinite => c.radius.unwrap_or(6),
        CheegerMode::BalancedFinite => c.budget.unwrap_or(1 << 22),
        CheegerMode::PaperExactFinite => 0,
    };
    let depth = c.depth_or(100);
    let h = cheeger_constant(&g, mode, limit)?;
    let sandwich = cheeger_buser_check(&g, depth, mode, limit)?;
    let mut csv = String::from("group,mode,r,boundary,size,ratio,left,middle,right,right_upper,certified,holds\n");
    let mode_name = to_value(&mode).as_str().unwrap_or_default().to_string();
    let tail = format!(
        "{},{},{},{},{},{}",
        f(sandwich.left),
        f(sandwich.middle),
        f(sandwich.right),
        f(sandwich.right_upper),
        sandwich.certified,
        sandwich.holds
    );
    if h.profile.is_empty() {
        csv.push_str(&format!(
            "{},{mode_name},,{},{},{},{tail}\n",
            csv_field(&h.group),
            h.witness.boundary,
            h.witness.size,
            h.value
        ));
    } else {
        for &(r, b, s) in &h.profile {
            csv.push_str(&format!("{},{mode_name},{r},{b},{s},{},{tail}\n", csv_field(&h.group), f(b as f64 / s as f64)));
        }
    }
    let json = json!({ "cheeger": to_value(&h), "sandwich": to_value(&sandwich) });
    Ok(Report { csv, json })
}

fn hn_limit(c: &ExperimentConfig) -> Result<Report> {
    let ns = c.n.clone().unwrap_or_else(|| vec![1, 2, 3]);
    if ns[0] == 0 {
        return Err(Error::InvalidInput("hn-limit needs n >= 1".into()));
    }
    let rows = hn_limit_experiment(&ns, c.depth_or(6))?;
    let mut csv = format!("{}\n", HnLimitRow::csv_header());
    for r in &rows {
        csv.push_str(&r.csv_rows());
    }
    Ok(Report { csv, json: to_value(&rows) })
}

fn split_list(s: &str) -> impl Iterator<Item = &str> {
    s.split(',').map(str::trim).filter(|t| !t.is_empty())
}

fn powers_average(c: &ExperimentConfig) -> Result<Report> {
    let g = c.one_group(|| MarkedGroup::free(3))?;
    let gens = g.generators();
    let x = g.parse_element(c.element.as_deref().unwrap_or(&gens[0]))?;
    let default_ys = gens.iter().skip(1).cloned().collect::<Vec<_>>().join(",");
    let ys = split_list(c.conjugators.as_deref().unwrap_or(&default_ys))
        .map(|w| g.parse_element(w))
        .collect::<Result<Vec<_>>>()?;
    let u = c.multiplier.as_deref().map(|w| g.parse_element(w)).transpose()?;
    let p = powers_average_bounds(&g, &x, &ys, c.depth_or(16), u.as_ref())?;
    let json = json!({
        "group": g.name(),
        "support": p.support,
        "identity_holds": p.identity_holds,
        "bound": p.estimate.last_bound(),
        "extrapolated": p.estimate.extrapolated,
        "upper": p.estimate.upper,
        "bounds": p.estimate.bounds(),
    });
    Ok(Report { csv: p.estimate.to_csv(), json })
}

fn basis_certify(c: &ExperimentConfig) -> Result<Report> {
    let base = c.one_group(|| {
        MarkedGroup::new("Z_3", vec!["a".into()], MarkedGroup::cyclic(3).engine_arc()).expect("one generator")
    })?;
    let a_set = split_list(c.a_set.as_deref().unwrap_or(&base.generators()[0]))
        .map(|w| base.parse_element(w))
        .collect::<Result<Vec<_>>>()?;
    let n = c.basis_n.unwrap_or(2);
    let inst = if c.planted {
        FreeBasisInstance::planted_square(&base, a_set, n)?
    } else {
        FreeBasisInstance::new(&base, a_set, n)?
    };
    let length = c.length.unwrap_or(4);
    let cert = free_basis_certify_with(&inst, length, c.samples.unwrap_or(200), c.seed)?;
    let mut csv = String::from("length,words\n");
    for (l, w) in cert.words_by_length.iter().enumerate() {
        csv.push_str(&format!("{},{w}\n", l + 1));
    }
    let p = inst.product_group();
    let t: Vec<String> = inst.t_words().iter().map(|w| p.format_word(w)).collect();
    let json = json!({ "group": p.name(), "t": t, "certificate": to_value(&cert) });
    Ok(Report { csv, json })
}

fn burnside_desk(c: &ExperimentConfig) -> Result<Report> {
    let rank = c.rank.unwrap_or(2);
    let exponent = c.exponent.unwrap_or(3);
    let (g, rep) = burnside_group(rank, exponent, c.word_length.unwrap_or(2), c.max_cosets.unwrap_or(DEFAULT_COSET_CAP))?;
    let depth = c.depth_or(12);
    let table = cogrowth_table(&g, depth)?;
    let grig = grigorchuk_residual(&g, depth)?;
    if grig.exact_residual.as_deref() != Some("0") {
        return Err(Error::invariant(format!("exact Grigorchuk residual for {} is not 0", g.name())));
    }
    let sandwich = cheeger_buser_check(&g, depth, CheegerMode::PaperExactFinite, 0)?;
    let mut csv = String::from("group,order,relators,augmentations,girth,exact_residual,sandwich_holds\n");
    csv.push_str(&format!(
        "{},{},{},{},{},{},{}\n",
        csv_field(g.name()),
        rep.order,
        rep.relators,
        rep.augmentations,
        table.girth.map_or(String::new(), |x| x.to_string()),
        grig.exact_residual.clone().unwrap_or_default(),
        sandwich.holds
    ));
    let json = json!({
        "group": g.name(),
        "order": rep.order,
        "relators": rep.relators,
        "augmentations": rep.augmentations,
        "cogrowth": to_value(&table),
        "grigorchuk": to_value(&grig),
        "sandwich": to_value(&sandwich),
    });
    Ok(Report { csv, json })
}

fn sequence_report(c: &ExperimentConfig) -> Result<Report> {
    let seq = if c.groups.is_empty() {
        GroupSequence::free(c.ranks.clone().unwrap_or_else(|| (2..=5).collect()))
    } else {
        GroupSequence::new(c.load_groups()?.into_iter().enumerate().map(|(i, g)| (i + 1, g)).collect())?
    };
    let mut opt = SequenceOptions::with_depth(c.depth_or(60));
    if let Some(r) = c.radius {
        opt.cheeger_radius = r;
    }
    if let Some(b) = c.budget {
        opt.cheeger_budget = b;
    }
    let rep = infinitesimal_report_with(&seq, &opt)?;
    let json = json!({
        "rows": to_value(&rep.rows),
        "ax_decreasing": rep.ax_decreasing,
        "rho_decreasing": rep.rho_decreasing,
        "omega_ratio_decreasing": rep.omega_ratio_decreasing,
        "cheeger_ratio_increasing": rep.cheeger_ratio_increasing,
        "ranks_increasing": rep.ranks_increasing,
        "verdict": rep.verdict,
    });
    Ok(Report { csv: rep.to_csv(), json })
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Runs the experiment on the current thread pool and returns the report.
pub fn run_experiment(c: &ExperimentConfig) -> Result<Report> {
    c.validate()?;
    match c.experiment {
        Experiment::FreeNorms => free_norms(c),
        Experiment::Grigorchuk => grigorchuk(c),
        Experiment::Cheeger => cheeger(c),
        Experiment::HnLimit => hn_limit(c),
        Experiment::PowersAverage => powers_average(c),
        Experiment::BasisCertify => basis_certify(c),
        Experiment::BurnsideDesk => burnside_desk(c),
        Experiment::SequenceReport => sequence_report(c),
    }
}

/// Runs inside a pool of `threads` workers (when set) and renders the report.
pub fn run_rendered(c: &ExperimentConfig) -> Result<String> {
    let run = || run_experiment(c).map(|r| r.render(c.format));
    match c.threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| Error::InvalidInput(format!("thread pool: {e}")))?
            .install(run),
        None => run(),
    }
}

/// Runs and writes the report to `out/<experiment>.<ext>`, or returns it for stdout.
pub fn execute(c: &ExperimentConfig) -> Result<Option<PathBuf>> {
    c.validate()?;
    let text = run_rendered(c)?;
    match &c.out {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            let path = dir.join(c.report_file_name());
            fs::write(&path, text)?;
            Ok(Some(path))
        }
        None => {
            print!("{text}");
            Ok(None)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn index_lists() {
        assert_eq!(parse_index_list("2..5").unwrap(), vec![2, 3, 4, 5]);
        assert_eq!(parse_index_list("1..=3").unwrap(), vec![1, 2, 3]);
        assert_eq!(parse_index_list("1,4").unwrap(), vec![1, 4]);
        assert!(parse_index_list("4,1").is_err());
        assert!(parse_index_list("3..1").is_err());
    }

    #[test]
    fn config_file() {
        let c = ExperimentConfig::parse("experiment = hn-limit\nn = 1..2\ndepth = 4 # short\n", Path::new("/tmp")).unwrap();
        assert_eq!(c.experiment, Experiment::HnLimit);
        assert_eq!(c.n, Some(vec![1, 2]));
        assert_eq!(c.depth, Some(4));
        let err = ExperimentConfig::parse("experiment = hn-limit\ndepth = 0\n", Path::new(".")).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().starts_with("2:9:"), "{err}");
        let err = ExperimentConfig::parse("experiment = nope\n", Path::new(".")).unwrap_err();
        assert!(err.to_string().starts_with("1:14:"), "{err}");
    }

    #[test]
    fn grigorchuk_defaults() {
        let r = run_experiment(&ExperimentConfig::new(Experiment::Grigorchuk)).unwrap();
        let lines: Vec<&str> = r.csv.lines().collect();
        assert_eq!(lines.len(), 3);
        assert!(lines[1].ends_with(",0"), "{}", lines[1]);
    }

    #[test]
    fn planted_basis_fails_with_exit_four() {
        let mut c = ExperimentConfig::new(Experiment::BasisCertify);
        c.planted = true;
        c.length = Some(3);
        assert_eq!(run_experiment(&c).unwrap_err().exit_code(), 4);
    }
}

//! The example corpus and the host-side loops that drive it: retries,
//! classical post-processing and answer filtering.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::Serialize;

use crate::classical::eval_classical;
use crate::error::{Error, ErrorCode, RuntimeError};
use crate::post::{
    as_bin_frac, cfrac_convergents, gcd, gf2_solve_nullspace, grover_iterations, last_convergent_with_denominator_below,
    lcm, mod_pow, modinv, BitString,
};
use crate::sim::{bit_string, run, run_shot, Plan, RunResult, SimOptions};
use crate::syntax::DefKind;
use crate::typecheck::{compile, Bindings, Compiled};

/// Example programs shipped with the toolchain, by name.
pub const CORPUS: &[(&str, &str)] = &[
    ("deutsch", include_str!("../examples/deutsch.qw")),
    ("dj", include_str!("../examples/dj.qw")),
    ("bv", include_str!("../examples/bv.qw")),
    ("ghz", include_str!("../examples/ghz.qw")),
    ("period", include_str!("../examples/period.qw")),
    ("simon", include_str!("../examples/simon.qw")),
    ("qpe", include_str!("../examples/qpe.qw")),
    ("order_finding", include_str!("../examples/order_finding.qw")),
    ("grover", include_str!("../examples/grover.qw")),
    ("fixpoint", include_str!("../examples/fixpoint.qw")),
    ("match", include_str!("../examples/match.qw")),
];

/// Names accepted by [`run_driver`].
pub const DRIVERS: &[&str] =
    &["deutsch", "dj", "bv", "period", "simon", "qpe", "order_finding", "shors", "grover", "fixpoint", "match"];

pub fn corpus_source(name: &str) -> Option<&'static str> {
    CORPUS.iter().find(|(n, _)| *n == name).map(|(_, s)| *s)
}

#[derive(Debug, Clone)]
pub struct DriverConfig {
    /// Overrides of the program's `#@` defaults.
    pub bindings: Bindings,
    pub seed: u64,
    /// Shots for the histogram-based drivers.
    pub shots: u64,
    pub opts: SimOptions,
    /// Alternative program source; the corpus entry otherwise.
    pub source: Option<String>,
}

impl Default for DriverConfig {
    fn default() -> Self {
        DriverConfig { bindings: Bindings::default(), seed: 0, shots: 1024, opts: SimOptions::default(), source: None }
    }
}

impl DriverConfig {
    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn shots(mut self, shots: u64) -> Self {
        self.shots = shots;
        self
    }

    pub fn dim(mut self, k: &str, v: i64) -> Self {
        self.bindings = self.bindings.dim(k, v);
        self
    }

    pub fn arg(mut self, k: &str, v: &str) -> Self {
        self.bindings = self.bindings.arg(k, v);
        self
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct DriverReport {
    pub algorithm: String,
    /// Final classical answer.
    pub answer: String,
    /// Quantum kernel invocations (shots) used.
    pub invocations: u64,
    /// Embedded-oracle applications over all invocations.
    pub oracle_calls: u64,
    /// Measurement results consumed by the post-processing, in order.
    pub samples: Vec<String>,
    /// Histogram, for drivers that sample many shots.
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub counts: BTreeMap<String, u64>,
}

/// A compiled corpus program plus an invocation counter.
struct Kernel {
    compiled: Compiled,
    plan: Plan,
    seed: u64,
    next: u64,
    oracle_calls: u64,
    oracle_name: Option<String>,
}

impl Kernel {
    fn new(name: &str, cfg: &DriverConfig, extra: &Bindings) -> Result<Kernel, Error> {
        let src = match &cfg.source {
            Some(s) => s.as_str(),
            None => corpus_source(name).ok_or_else(|| unknown(name))?,
        };
        let mut b = cfg.bindings.clone();
        for (k, v) in &extra.dims {
            b.dims.entry(k.clone()).or_insert(*v);
        }
        for (k, v) in &extra.args {
            b.args.entry(k.clone()).or_insert_with(|| v.clone());
        }
        let oracle_name = match b.args.get("f") {
            Some(f) => Some(f.clone()),
            None => crate::parser::parse_program(src)?.pragmas.args.into_iter().find(|(k, _)| k == "f").map(|(_, v)| v),
        }
        .map(|f| f.split(['[', '{']).next().unwrap_or_default().to_string());
        let compiled = compile(src, None, &b)?;
        let plan = Plan::new(&compiled, cfg.opts)?;
        Ok(Kernel { compiled, plan, seed: cfg.seed, next: 0, oracle_calls: 0, oracle_name })
    }

    /// One shot, with a fresh stream per invocation.
    fn shot(&mut self) -> Result<BitString, RuntimeError> {
        let s = run_shot(&self.plan, self.seed, self.next)?;
        self.next += 1;
        self.oracle_calls += s.calls.values().sum::<u64>();
        Ok(BitString(s.bits))
    }

    fn histogram(&mut self, shots: u64) -> Result<RunResult, RuntimeError> {
        let r = run(&self.plan, shots, self.seed)?;
        self.next += shots;
        self.oracle_calls += r.total_calls();
        Ok(r)
    }

    /// Evaluates the program's only classical function on `x`.
    fn oracle(&self, x: &BitString) -> Result<BitString, RuntimeError> {
        let mut defs: Vec<_> =
            self.compiled.mono.program.defs.iter().filter(|d| d.kind == DefKind::Classical).collect();
        if defs.len() > 1 {
            if let Some(f) = &self.oracle_name {
                defs.retain(|d| d.name.split(['[', '{']).next() == Some(f.as_str()));
            }
        }
        match defs.as_slice() {
            [d] => Ok(BitString(eval_classical(d, &x.0)?)),
            _ => Err(RuntimeError::new(ErrorCode::DriverFailed, "expected exactly one classical oracle")),
        }
    }

    fn report(&self, algorithm: &str, answer: String, samples: Vec<String>) -> DriverReport {
        DriverReport {
            algorithm: algorithm.into(),
            answer,
            invocations: self.next,
            oracle_calls: self.oracle_calls,
            samples,
            counts: BTreeMap::new(),
        }
    }
}

fn unknown(name: &str) -> Error {
    Error::Runtime(RuntimeError::new(ErrorCode::UnknownName, format!("no driver `{name}`")))
}

fn failed(msg: impl Into<String>) -> Error {
    Error::Runtime(RuntimeError::new(ErrorCode::DriverFailed, msg))
}

/// Runs the named driver.
pub fn run_driver(name: &str, cfg: &DriverConfig) -> Result<DriverReport, Error> {
    match name {
        "deutsch" | "dj" => constant_or_balanced(name, cfg),
        "bv" => bernstein_vazirani(cfg),
        "period" => period_finding(cfg, 10),
        "simon" => simon(cfg, 25),
        "qpe" => phase_estimation(cfg),
        "order_finding" => {
            let x = dim_or(cfg, "X", 7)?;
            let n = dim_or(cfg, "MODN", 15)?;
            order_finding(cfg, x, n, 10)
        }
        "shors" => shors(cfg, dim_or(cfg, "MODN", 15)?, 10),
        "grover" => grover(cfg),
        "fixpoint" => histogram_search("fixpoint", cfg),
        "match" => substring_match(cfg),
        other => Err(unknown(other)),
    }
}

fn dim_or(cfg: &DriverConfig, k: &str, default: i64) -> Result<i64, Error> {
    Ok(cfg.bindings.dims.get(k).copied().unwrap_or(default))
}

/// Deutsch and Deutsch-Jozsa: all zeros means constant.
pub fn constant_or_balanced(name: &str, cfg: &DriverConfig) -> Result<DriverReport, Error> {
    let mut k = Kernel::new(name, cfg, &Bindings::default())?;
    let y = k.shot()?;
    let answer = if y.0.iter().all(|b| !b) { "constant" } else { "balanced" };
    Ok(k.report(name, answer.into(), vec![y.to_string()]))
}

pub fn bernstein_vazirani(cfg: &DriverConfig) -> Result<DriverReport, Error> {
    let mut k = Kernel::new("bv", cfg, &Bindings::default())?;
    let y = k.shot()?;
    Ok(k.report("bv", y.to_string(), vec![y.to_string()]))
}

/// Smallest `r` with `f(x) = f(x + r)`: the lcm of the denominators of the
/// sampled binary fractions, checked classically on every `x`.
pub fn period_finding(cfg: &DriverConfig, retries: u32) -> Result<DriverReport, Error> {
    let mut k = Kernel::new("period", cfg, &Bindings::default())?;
    let mut r = 1i64;
    let mut samples = Vec::new();
    for _ in 0..retries {
        let y = k.shot()?;
        let m = y.width();
        samples.push(y.to_string());
        r = lcm(r, *as_bin_frac(&y).denom());
        if r < 1 << m && is_period(&k, m, r as u64)? {
            return Ok(k.report("period", r.to_string(), samples));
        }
    }
    Err(failed(format!("no period found in {retries} attempts")))
}

fn is_period(k: &Kernel, m: usize, r: u64) -> Result<bool, RuntimeError> {
    let size = 1u64 << m;
    for x in 0..size {
        let a = k.oracle(&BitString::from_value(x, m))?;
        let b = k.oracle(&BitString::from_value((x + r) % size, m))?;
        if a != b {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Collects nonzero rows until they determine `s`, starting over when
/// the rows are inconsistent with a single hidden string.
pub fn simon(cfg: &DriverConfig, budget: u64) -> Result<DriverReport, Error> {
    let mut k = Kernel::new("simon", cfg, &Bindings::default())?;
    let mut rows: Vec<BitString> = Vec::new();
    let mut samples = Vec::new();
    while k.next < budget {
        let y = k.shot()?;
        samples.push(y.to_string());
        if y.0.iter().all(|b| !b) || rows.contains(&y) {
            continue;
        }
        rows.push(y);
        if rows.len() + 1 < rows[0].width() {
            continue;
        }
        match gf2_solve_nullspace(&rows) {
            Ok(s) => {
                let zero = BitString(vec![false; s.width()]);
                if k.oracle(&zero)? == k.oracle(&s)? {
                    return Ok(k.report("simon", s.to_string(), samples));
                }
                rows.clear();
            }
            Err(e) if e.code == ErrorCode::NeedMoreRows => {
                if rows.len() >= rows[0].width() {
                    rows.clear();
                }
            }
            Err(e) => return Err(e.into()),
        }
    }
    Err(failed(format!("no hidden string within {budget} invocations")))
}

/// Estimated phase as a binary fraction of the measured register.
pub fn phase_estimation(cfg: &DriverConfig) -> Result<DriverReport, Error> {
    let mut k = Kernel::new("qpe", cfg, &Bindings::default())?;
    let y = k.shot()?;
    Ok(k.report("qpe", as_bin_frac(&y).to_string(), vec![y.to_string()]))
}

fn bit_length(n: i64) -> i64 {
    64 - i64::from(n.leading_zeros())
}

/// Multiplicative order of `x` modulo `n` by phase estimation of the
/// modular multiplier.
pub fn order_finding(cfg: &DriverConfig, x: i64, n: i64, retries: u32) -> Result<DriverReport, Error> {
    if gcd(x, n) != 1 {
        return Err(failed(format!("{x} and {n} are not coprime")));
    }
    let l = bit_length(n);
    let m = 2 * l + 1;
    let xinv = modinv(x, n)?;
    let extra = Bindings::default()
        .dim("M", m)
        .dim("L", l)
        .arg("op", &format!("mult[[X={x},XINV={xinv},MODN={n},L={l},...]]"));
    let mut k = Kernel::new("order_finding", cfg, &extra)?;
    let mut r = 1i64;
    let mut samples = Vec::new();
    for _ in 0..retries {
        let y = k.shot()?;
        samples.push(y.to_string());
        let c = last_convergent_with_denominator_below(&cfrac_convergents(as_bin_frac(&y)), n)?;
        r = lcm(r, *c.denom());
        if mod_pow(x as u64, r as u64, n as u64) == 1 {
            return Ok(k.report("order_finding", r.to_string(), samples));
        }
        if r >= n {
            r = 1;
        }
    }
    Err(failed(format!("order of {x} mod {n} not found in {retries} attempts (samples {})", samples.join(" "))))
}

/// A nontrivial factor of `n` through order finding of random bases.
pub fn shors(cfg: &DriverConfig, n: i64, attempts: u32) -> Result<DriverReport, Error> {
    let mut rng = ChaCha12Rng::seed_from_u64(cfg.seed);
    let mut report = DriverReport { algorithm: "shors".into(), ..Default::default() };
    if n % 2 == 0 {
        report.answer = "2".into();
        return Ok(report);
    }
    for attempt in 0..attempts {
        let x = rng.random_range(2..n);
        let g = gcd(x, n);
        report.samples.push(format!("x={x}"));
        if g != 1 {
            report.answer = g.to_string();
            return Ok(report);
        }
        let sub = DriverConfig { seed: cfg.seed.wrapping_add(u64::from(attempt) << 32), ..cfg.clone() };
        let of = match order_finding(&sub, x, n, 10) {
            Ok(of) => of,
            Err(Error::Runtime(e)) if matches!(e.code, ErrorCode::DriverFailed | ErrorCode::NoConvergent) => continue,
            Err(e) => return Err(e),
        };
        report.invocations += of.invocations;
        report.oracle_calls += of.oracle_calls;
        let r: u64 = of.answer.parse().expect("order is an integer");
        report.samples.push(format!("r={r}"));
        if r % 2 == 1 {
            continue;
        }
        let half = mod_pow(x as u64, r / 2, n as u64) as i64;
        if half == n - 1 {
            continue;
        }
        for c in [gcd(half - 1, n), gcd(half + 1, n)] {
            if c != 1 && c != n {
                report.answer = c.to_string();
                return Ok(report);
            }
        }
    }
    Err(failed(format!("no factor of {n} in {attempts} attempts")))
}

/// Grover search with the iteration count for the expected number of
/// answers (dim `ANSWERS`, default 1), filtered through the oracle.
pub fn grover(cfg: &DriverConfig) -> Result<DriverReport, Error> {
    let src = cfg.source.as_deref().unwrap_or(corpus_source("grover").unwrap());
    let n = match cfg.bindings.dims.get("N") {
        Some(n) => *n,
        None => crate::parser::parse_program(src)?
            .pragmas
            .dims
            .iter()
            .find(|(k, _)| k == "N")
            .and_then(|(_, v)| v.parse().ok())
            .ok_or_else(|| failed("grover needs N"))?,
    };
    let answers = dim_or(cfg, "ANSWERS", 1)?;
    let iters = grover_iterations(n as u32, answers as u64)?;
    let extra = Bindings::default().dim("I", iters as i64);
    histogram_search_with("grover", cfg, &extra)
}

fn histogram_search(name: &str, cfg: &DriverConfig) -> Result<DriverReport, Error> {
    histogram_search_with(name, cfg, &Bindings::default())
}

/// Samples a histogram and keeps the outcomes the oracle accepts.
fn histogram_search_with(name: &str, cfg: &DriverConfig, extra: &Bindings) -> Result<DriverReport, Error> {
    let mut k = Kernel::new(name, cfg, extra)?;
    let r = k.histogram(cfg.shots)?;
    let mut found = Vec::new();
    for key in r.counts.keys() {
        let x: BitString = key.parse()?;
        if k.oracle(&x)?.0 == [true] {
            found.push(key.clone());
        }
    }
    let mut rep = k.report(name, found.join(","), Vec::new());
    rep.counts = r.counts;
    Ok(rep)
}

/// Offsets whose count is within a factor two of the most common one,
/// each confirmed against the haystack.
pub fn substring_match(cfg: &DriverConfig) -> Result<DriverReport, Error> {
    let mut k = Kernel::new("match", cfg, &Bindings::default())?;
    let r = k.histogram(cfg.shots)?;
    let hay: BitString = k_arg(&cfg.bindings, "hay", "match")?.parse()?;
    let pat: BitString = k_arg(&cfg.bindings, "pat", "match")?.parse()?;
    let best = r.most_common().map_or(0, |(_, c)| c);
    let mut found = Vec::new();
    for (key, c) in &r.counts {
        let off = BitString(key.chars().map(|c| c == '1').collect::<Vec<_>>()).value() as usize;
        if 2 * c >= best && occurs_at(&hay, &pat, off) {
            found.push(off.to_string());
        }
    }
    let mut rep = k.report("match", found.join(","), Vec::new());
    rep.counts = r.counts;
    Ok(rep)
}

fn k_arg(b: &Bindings, k: &str, program: &str) -> Result<String, Error> {
    if let Some(v) = b.args.get(k) {
        return Ok(v.clone());
    }
    let p = crate::parser::parse_program(corpus_source(program).unwrap())?;
    p.pragmas.args.iter().find(|(n, _)| n == k).map(|(_, v)| v.clone()).ok_or_else(|| failed(format!("missing `{k}`")))
}

/// True when `pat` equals the haystack rotated left by `off`, prefix-wise.
pub fn occurs_at(hay: &BitString, pat: &BitString, off: usize) -> bool {
    let n = hay.width();
    (0..pat.width()).all(|i| hay.0[(off + i) % n] == pat.0[i])
}

/// Bits of `v` as a most-significant-first string of `width` characters.
pub fn bits(v: u64, width: usize) -> String {
    bit_string(&BitString::from_value(v, width).0)
}

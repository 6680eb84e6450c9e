//! Monomorphization and type checking.

pub mod check;
pub mod mono;
pub mod types;

use std::collections::BTreeMap;

use crate::error::{Error, ErrorCode, TypeError};
use crate::parser::{parse_dim, parse_program};
use crate::syntax::{Pragmas, Program, TypeExpr};

pub use check::{check_basis, check_measure, check_program, check_translation, type_of, Globals};
pub use mono::{monomorphize, Bindings, Monomorphized};

/// A monomorphized, type-checked program ready to simulate.
#[derive(Debug, Clone)]
pub struct Compiled {
    pub mono: Monomorphized,
    pub types: BTreeMap<String, TypeExpr>,
}

impl Compiled {
    pub fn entry_type(&self) -> &TypeExpr {
        &self.types[&self.mono.entry]
    }
}

impl Bindings {
    /// Fills values missing from `self` with the file's `#@` defaults.
    pub fn with_pragmas(mut self, p: &Pragmas) -> Result<Self, TypeError> {
        for (k, v) in &p.dims {
            if self.dims.contains_key(k) {
                continue;
            }
            let d = parse_dim(v).map_err(|e| TypeError::new(ErrorCode::DimMismatch, e.message))?;
            self.dims.insert(k.clone(), d.eval_map(&BTreeMap::new())?);
        }
        for (k, v) in &p.args {
            if k == "phases" {
                if self.phases.is_none() {
                    self.phases = Some(parse_phases(v)?);
                }
                continue;
            }
            self.args.entry(k.clone()).or_insert_with(|| v.clone());
        }
        Ok(self)
    }
}

/// Parses a comma-separated list of angles in radians.
pub fn parse_phases(s: &str) -> Result<Vec<f64>, TypeError> {
    s.split(',')
        .filter(|x| !x.trim().is_empty())
        .map(|x| {
            x.trim()
                .parse::<f64>()
                .map_err(|_| TypeError::new(ErrorCode::MissingPhase, format!("`{x}` is not an angle")))
        })
        .collect()
}

/// Monomorphizes from `entry` and checks the result.
pub fn compile_program(p: &Program, entry: &str, b: &Bindings) -> Result<Compiled, TypeError> {
    let mono = monomorphize(p, entry, b)?;
    let types = check_program(&mono.program)?;
    Ok(Compiled { mono, types })
}

/// Parses, applies `#@` defaults under `b`, and compiles from `entry` or
/// the file's declared entry.
pub fn compile(src: &str, entry: Option<&str>, b: &Bindings) -> Result<Compiled, Error> {
    let p = parse_program(src)?;
    let b = b.clone().with_pragmas(&p.pragmas)?;
    let entry = entry
        .map(str::to_string)
        .or_else(|| p.pragmas.entry.clone())
        .ok_or_else(|| TypeError::new(ErrorCode::UnknownName, "no entry point given"))?;
    Ok(compile_program(&p, &entry, &b)?)
}

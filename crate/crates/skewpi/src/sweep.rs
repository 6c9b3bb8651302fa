//! Grids of PI-degree computations, run in parallel or sequentially.

use std::fmt::Write;

use num_bigint::BigInt;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::families::{closed_form_pidegree, family_matrix, FamilyId, FamilyKind};
use crate::pidegree::{pi_degree_from_snf, smith_normal_form, SmithForm};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Strategy {
    Sequential,
    /// Uses rayon when the `parallel` feature is on, otherwise sequential.
    Parallel,
}

impl Default for Strategy {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Self::Parallel
        } else {
            Self::Sequential
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SweepRow {
    pub family: FamilyKind,
    pub n: usize,
    pub r: u64,
    pub ell: u64,
    #[serde(with = "crate::bigjson")]
    pub h: BigInt,
    #[serde(with = "crate::bigjson")]
    pub pi_degree: BigInt,
    #[serde(serialize_with = "crate::bigjson::option::serialize")]
    pub closed_form: Option<BigInt>,
    #[serde(rename = "match")]
    pub matches: Option<bool>,
}

impl SweepRow {
    pub fn mismatch(&self) -> bool {
        self.matches == Some(false)
    }
}

fn cell(kind: FamilyKind, n: usize, r: u64, snf: &SmithForm) -> Result<SweepRow> {
    let rep = pi_degree_from_snf(snf, r)?;
    let closed = match closed_form_pidegree(kind, n, r) {
        Ok(c) => Some(c),
        Err(Error::NoClosedForm(_)) => None,
        Err(e) => return Err(e),
    };
    let matches = closed.as_ref().map(|c| *c == rep.pi_degree);
    Ok(SweepRow { family: kind, n, r, ell: r, h: rep.h, pi_degree: rep.pi_degree, closed_form: closed, matches })
}

/// PI degree against the closed form for every `(n, r)` in the grid, rows
/// sorted by `(n, r)`.
pub fn sweep(kind: FamilyKind, ns: &[usize], rs: &[u64], strategy: Strategy) -> Result<Vec<SweepRow>> {
    if !kind.is_single() {
        return Err(Error::Usage(format!("{kind} needs an exponent assignment; sweep covers single-parameter families")));
    }
    let mut ns = ns.to_vec();
    ns.sort_unstable();
    ns.dedup();
    let mut rs = rs.to_vec();
    rs.sort_unstable();
    rs.dedup();
    let forms = run(&ns, strategy, |&n| Ok((n, smith_normal_form(&family_matrix(&FamilyId::new(kind, n)?, None)?)?)))?;
    let cells: Vec<(usize, &SmithForm, u64)> =
        forms.iter().flat_map(|(n, f)| rs.iter().map(move |&r| (*n, f, r))).collect();
    run(&cells, strategy, |&(n, m, r)| cell(kind, n, r, m))
}

#[cfg(feature = "parallel")]
fn run<T: Sync, U: Send, F: Fn(&T) -> Result<U> + Sync + Send>(cells: &[T], strategy: Strategy, f: F) -> Result<Vec<U>> {
    use rayon::prelude::*;
    match strategy {
        Strategy::Parallel => cells.par_iter().map(f).collect(),
        Strategy::Sequential => cells.iter().map(f).collect(),
    }
}

#[cfg(not(feature = "parallel"))]
fn run<T, U, F: Fn(&T) -> Result<U>>(cells: &[T], _strategy: Strategy, f: F) -> Result<Vec<U>> {
    cells.iter().map(f).collect()
}

pub const CSV_HEADER: &str = "family,n,r,ell,h,pi_degree,closed_form,match";

pub fn to_csv(rows: &[SweepRow]) -> String {
    let mut s = String::from(CSV_HEADER);
    s.push('\n');
    for r in rows {
        let cf = r.closed_form.as_ref().map(|c| c.to_string()).unwrap_or_default();
        let m = r.matches.map(|b| b.to_string()).unwrap_or_default();
        let _ = writeln!(s, "{},{},{},{},{},{},{},{}", r.family, r.n, r.r, r.ell, r.h, r.pi_degree, cf, m);
    }
    s
}

//! Plain-text file formats.
//!
//! ```text
//! symmatrix <dim>            embeddings <dim>
//! <dim rows of dim values>   <utt> <speaker|-> <dim values>   (one per record)
//!
//! plda <dim>                 lda <in_dim> <out_dim>
//! mu <dim values>            <in_dim values: mean>
//! phi_b                      <out_dim rows of in_dim values>
//! symmatrix <dim> ...
//! phi_w                      vector <dim>
//! symmatrix <dim> ...        <dim values>
//!
//! <enroll> <test> <target|nontarget|-> [<score>]               (trial list)
//! ```
//!
//! Floats are written in shortest round-trip form, so a write/read cycle is
//! lossless. Readers accept `#` comment lines and blank lines anywhere.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::metrics::{Label, OperatingPoint, Report, Trial, TrialSet};
use crate::plda::{Embedding, EmbeddingSet, PldaModel};
use crate::preprocess::LdaProjection;
use crate::symmat::SymMatrix;

pub fn fmt_f64(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 || (1e-5..1e16).contains(&a) || !v.is_finite() {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

fn push_row<'a>(out: &mut String, vals: impl IntoIterator<Item = &'a f64>) {
    let mut first = true;
    for v in vals {
        if !first {
            out.push(' ');
        }
        first = false;
        out.push_str(&fmt_f64(*v));
    }
    out.push('\n');
}

/// Line cursor that skips blanks and comments and remembers line numbers.
struct Lines<'a> {
    path: &'a str,
    iter: std::iter::Enumerate<std::str::Lines<'a>>,
    last: usize,
}

impl<'a> Lines<'a> {
    fn new(path: &'a str, text: &'a str) -> Self {
        Lines {
            path,
            iter: text.lines().enumerate(),
            last: 0,
        }
    }

    fn next_line(&mut self) -> Option<(usize, &'a str)> {
        for (i, l) in self.iter.by_ref() {
            let t = l.trim();
            if t.is_empty() || t.starts_with('#') {
                continue;
            }
            self.last = i + 1;
            return Some((i + 1, t));
        }
        None
    }

    fn expect_line(&mut self, what: &str) -> Result<(usize, &'a str)> {
        self.next_line().ok_or_else(|| {
            Error::parse(
                self.path,
                self.last + 1,
                format!("expected {what}, found end of file"),
            )
        })
    }

    fn err(&self, line: usize, msg: impl Into<String>) -> Error {
        Error::parse(self.path, line, msg)
    }

    fn floats(&self, line: usize, fields: &[&str], n: usize) -> Result<Vec<f64>> {
        if fields.len() != n {
            return Err(self.err(line, format!("expected {n} values, found {}", fields.len())));
        }
        fields
            .iter()
            .map(|f| {
                f.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| self.err(line, format!("invalid number `{f}`")))
            })
            .collect()
    }

    fn header(&mut self, tag: &str, n_args: usize) -> Result<(usize, Vec<usize>)> {
        let (ln, l) = self.expect_line(&format!("`{tag}` header"))?;
        let f: Vec<&str> = l.split_whitespace().collect();
        if f.first() != Some(&tag) || f.len() != 1 + n_args {
            return Err(self.err(ln, format!("expected `{tag}` header, found `{l}`")));
        }
        let args = f[1..]
            .iter()
            .map(|a| {
                a.parse::<usize>()
                    .ok()
                    .filter(|&v| v > 0)
                    .ok_or_else(|| self.err(ln, format!("invalid dimension `{a}`")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok((ln, args))
    }

    fn row(&mut self, n: usize, what: &str) -> Result<Vec<f64>> {
        let (ln, l) = self.expect_line(what)?;
        let f: Vec<&str> = l.split_whitespace().collect();
        self.floats(ln, &f, n)
    }

    fn tag(&mut self, tag: &str) -> Result<()> {
        let (ln, l) = self.expect_line(&format!("`{tag}`"))?;
        if l != tag {
            return Err(self.err(ln, format!("expected `{tag}`, found `{l}`")));
        }
        Ok(())
    }

    fn finish(&mut self) -> Result<()> {
        if let Some((ln, l)) = self.next_line() {
            return Err(self.err(ln, format!("unexpected trailing content `{l}`")));
        }
        Ok(())
    }

    fn symmat(&mut self) -> Result<SymMatrix> {
        let (ln, args) = self.header("symmatrix", 1)?;
        let dim = args[0];
        let mut vals = Vec::with_capacity(dim * dim);
        for _ in 0..dim {
            vals.extend(self.row(dim, "matrix row")?);
        }
        SymMatrix::from_row_slice(dim, &vals).map_err(|e| self.err(ln, e.to_string()))
    }
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn name(path: &Path) -> String {
    path.display().to_string()
}

// ---- symmetric matrices ----

pub fn symmat_to_string(m: &SymMatrix) -> String {
    let mut out = format!("symmatrix {}\n", m.dim());
    let a = m.as_matrix();
    for i in 0..m.dim() {
        push_row(&mut out, a.row(i).iter());
    }
    out
}

pub fn parse_symmat(path: &str, text: &str) -> Result<SymMatrix> {
    let mut lines = Lines::new(path, text);
    let m = lines.symmat()?;
    lines.finish()?;
    Ok(m)
}

pub fn read_symmat(path: &Path) -> Result<SymMatrix> {
    parse_symmat(&name(path), &read_text(path)?)
}

pub fn write_symmat(path: &Path, m: &SymMatrix) -> Result<()> {
    write_text(path, &symmat_to_string(m))
}

// ---- vectors ----

pub fn vector_to_string(v: &DVector<f64>) -> String {
    let mut out = format!("vector {}\n", v.len());
    push_row(&mut out, v.iter());
    out
}

pub fn parse_vector(path: &str, text: &str) -> Result<DVector<f64>> {
    let mut lines = Lines::new(path, text);
    let (_, args) = lines.header("vector", 1)?;
    let v = lines.row(args[0], "vector values")?;
    lines.finish()?;
    Ok(DVector::from_vec(v))
}

pub fn read_vector(path: &Path) -> Result<DVector<f64>> {
    parse_vector(&name(path), &read_text(path)?)
}

pub fn write_vector(path: &Path, v: &DVector<f64>) -> Result<()> {
    write_text(path, &vector_to_string(v))
}

// ---- embeddings ----

pub fn embeddings_to_string(set: &EmbeddingSet) -> String {
    let mut out = format!("embeddings {}\n", set.dim());
    for r in set.records() {
        let _ = write!(out, "{} {} ", r.utt, r.speaker.as_deref().unwrap_or("-"));
        push_row(&mut out, r.vector.iter());
    }
    out
}

pub fn parse_embeddings(path: &str, text: &str) -> Result<EmbeddingSet> {
    let mut lines = Lines::new(path, text);
    let (_, args) = lines.header("embeddings", 1)?;
    let dim = args[0];
    let mut set = EmbeddingSet::new(dim);
    while let Some((ln, l)) = lines.next_line() {
        let f: Vec<&str> = l.split_whitespace().collect();
        if f.len() < 2 {
            return Err(lines.err(ln, "expected `<utt> <speaker|-> <values>`"));
        }
        let vals = lines.floats(ln, &f[2..], dim)?;
        let speaker = (f[1] != "-").then(|| f[1].to_string());
        set.push(Embedding {
            utt: f[0].to_string(),
            speaker,
            vector: DVector::from_vec(vals),
        })
        .map_err(|e| lines.err(ln, e.to_string()))?;
    }
    Ok(set)
}

pub fn read_embeddings(path: &Path) -> Result<EmbeddingSet> {
    parse_embeddings(&name(path), &read_text(path)?)
}

pub fn write_embeddings(path: &Path, set: &EmbeddingSet) -> Result<()> {
    write_text(path, &embeddings_to_string(set))
}

// ---- PLDA models ----

pub fn plda_to_string(m: &PldaModel) -> String {
    let mut out = format!("plda {}\nmu ", m.dim());
    push_row(&mut out, m.mu.iter());
    out.push_str("phi_b\n");
    out.push_str(&symmat_to_string(&m.phi_b));
    out.push_str("phi_w\n");
    out.push_str(&symmat_to_string(&m.phi_w));
    out
}

pub fn parse_plda(path: &str, text: &str) -> Result<PldaModel> {
    let mut lines = Lines::new(path, text);
    let (hl, args) = lines.header("plda", 1)?;
    let dim = args[0];
    let (ln, l) = lines.expect_line("`mu` line")?;
    let f: Vec<&str> = l.split_whitespace().collect();
    if f.first() != Some(&"mu") {
        return Err(lines.err(ln, format!("expected `mu`, found `{l}`")));
    }
    let mu = lines.floats(ln, &f[1..], dim)?;
    lines.tag("phi_b")?;
    let b = lines.symmat()?;
    lines.tag("phi_w")?;
    let w = lines.symmat()?;
    lines.finish()?;
    PldaModel::new(DVector::from_vec(mu), b, w).map_err(|e| lines.err(hl, e.to_string()))
}

pub fn read_plda(path: &Path) -> Result<PldaModel> {
    parse_plda(&name(path), &read_text(path)?)
}

pub fn write_plda(path: &Path, m: &PldaModel) -> Result<()> {
    write_text(path, &plda_to_string(m))
}

// ---- LDA projections ----

pub fn lda_to_string(p: &LdaProjection) -> String {
    let mut out = format!("lda {} {}\n", p.in_dim(), p.out_dim());
    push_row(&mut out, p.mean.iter());
    for i in 0..p.out_dim() {
        push_row(&mut out, p.basis.row(i).iter());
    }
    out
}

pub fn parse_lda(path: &str, text: &str) -> Result<LdaProjection> {
    let mut lines = Lines::new(path, text);
    let (hl, args) = lines.header("lda", 2)?;
    let (in_dim, out_dim) = (args[0], args[1]);
    let mean = lines.row(in_dim, "mean row")?;
    let mut vals = Vec::with_capacity(in_dim * out_dim);
    for _ in 0..out_dim {
        vals.extend(lines.row(in_dim, "basis row")?);
    }
    lines.finish()?;
    LdaProjection::new(
        DMatrix::from_row_slice(out_dim, in_dim, &vals),
        DVector::from_vec(mean),
    )
    .map_err(|e| lines.err(hl, e.to_string()))
}

pub fn read_lda(path: &Path) -> Result<LdaProjection> {
    parse_lda(&name(path), &read_text(path)?)
}

pub fn write_lda(path: &Path, p: &LdaProjection) -> Result<()> {
    write_text(path, &lda_to_string(p))
}

// ---- trials ----

pub fn trials_to_string(t: &TrialSet) -> String {
    let mut out = String::new();
    for tr in &t.trials {
        let label = match tr.label {
            Some(Label::Target) => "target",
            Some(Label::Nontarget) => "nontarget",
            None => "-",
        };
        let _ = write!(out, "{} {} {}", tr.enroll, tr.test, label);
        if let Some(s) = tr.score {
            let _ = write!(out, " {}", fmt_f64(s));
        }
        out.push('\n');
    }
    out
}

pub fn parse_trials(path: &str, text: &str) -> Result<TrialSet> {
    let mut lines = Lines::new(path, text);
    let mut trials = Vec::new();
    while let Some((ln, l)) = lines.next_line() {
        let f: Vec<&str> = l.split_whitespace().collect();
        if !(3..=4).contains(&f.len()) {
            return Err(lines.err(
                ln,
                "expected `<enroll> <test> <target|nontarget|-> [<score>]`",
            ));
        }
        let label = match f[2] {
            "target" => Some(Label::Target),
            "nontarget" => Some(Label::Nontarget),
            "-" => None,
            other => return Err(lines.err(ln, format!("invalid label `{other}`"))),
        };
        let score = match f.get(3) {
            Some(s) => Some(lines.floats(ln, &[s], 1)?[0]),
            None => None,
        };
        trials.push(Trial {
            enroll: f[0].to_string(),
            test: f[1].to_string(),
            label,
            score,
        });
    }
    Ok(TrialSet { trials })
}

pub fn read_trials(path: &Path) -> Result<TrialSet> {
    parse_trials(&name(path), &read_text(path)?)
}

pub fn write_trials(path: &Path, t: &TrialSet) -> Result<()> {
    write_text(path, &trials_to_string(t))
}

// ---- reports ----

pub fn report_to_string(r: &Report) -> String {
    format!(
        "eer {}\nmin_cprimary {}\n",
        fmt_f64(r.eer),
        fmt_f64(r.min_cprimary)
    )
}

pub fn det_to_string(points: &[OperatingPoint]) -> String {
    let mut out = String::from("threshold\tp_miss\tp_fa\n");
    for p in points {
        let _ = writeln!(
            out,
            "{}\t{}\t{}",
            fmt_f64(p.threshold),
            fmt_f64(p.p_miss),
            fmt_f64(p.p_fa)
        );
    }
    out
}

pub const SWEEP_HEADER: &str = "alpha\trecipe\teer\tmin_cprimary";

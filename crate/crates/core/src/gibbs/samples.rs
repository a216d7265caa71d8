use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::state::{ChainState, Layout};
use crate::error::{Error, Result};
use crate::method::{Hyperparameters, Method, Structure};

/// Post-burn-in draws, row-major by stored iteration.
///
/// Traces a method does not carry are empty.
#[derive(Clone, Debug, PartialEq)]
pub struct PosteriorSamples {
    pub method: Option<Method>,
    pub p: usize,
    pub group_size: usize,
    pub q: usize,
    pub k: usize,
    pub n_draws: usize,
    pub alpha: Vec<f64>,
    pub theta: Vec<f64>,
    pub beta: Vec<f64>,
    pub phi_b: Vec<bool>,
    pub phi_w: Vec<bool>,
    pub nu: Vec<f64>,
    pub sigma2: Vec<f64>,
    pub pi0: Vec<f64>,
    pub pi1: Vec<f64>,
    pub s2: Vec<f64>,
}

/// Run metadata written next to a samples file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub software: String,
    pub version: String,
    pub method: Method,
    pub seed: u64,
    pub stream_id: u64,
    pub n_iter: usize,
    pub burn_in: usize,
    pub stored_draws: usize,
    pub n: usize,
    pub p: usize,
    pub q: usize,
    pub k: usize,
    pub hyper: Hyperparameters,
    pub final_eta: Option<f64>,
    pub final_eta1: Option<f64>,
    pub final_eta2: Option<f64>,
    pub elapsed_seconds: f64,
    pub created_unix: u64,
}

impl RunManifest {
    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let f = std::fs::File::create(path.as_ref())?;
        serde_json::to_writer_pretty(f, self)?;
        Ok(())
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let f = std::fs::File::open(path.as_ref())?;
        Ok(serde_json::from_reader(f)?)
    }
}

impl PosteriorSamples {
    pub fn new(method: Method, p: usize, group_size: usize, q: usize, k: usize) -> Self {
        let mut s = PosteriorSamples::empty(p, group_size, q, k);
        s.method = Some(method);
        s
    }

    fn empty(p: usize, group_size: usize, q: usize, k: usize) -> Self {
        PosteriorSamples {
            method: None,
            p,
            group_size,
            q,
            k,
            n_draws: 0,
            alpha: Vec::new(),
            theta: Vec::new(),
            beta: Vec::new(),
            phi_b: Vec::new(),
            phi_w: Vec::new(),
            nu: Vec::new(),
            sigma2: Vec::new(),
            pi0: Vec::new(),
            pi1: Vec::new(),
            s2: Vec::new(),
        }
    }

    pub fn n_effects(&self) -> usize {
        self.p * self.group_size
    }

    pub fn push(&mut self, st: &ChainState) {
        let method = self.method.expect("samples built for a method");
        let lay = Layout::of(method);
        self.alpha.extend(st.alpha.iter());
        self.theta.extend(st.theta.iter());
        self.beta.extend(&st.beta);
        if lay.phi_b {
            self.phi_b.extend(&st.phi_b);
        }
        if lay.phi_w {
            self.phi_w.extend(&st.phi_w);
        }
        if lay.nu {
            self.nu.push(st.nu);
        }
        if lay.sigma2 {
            self.sigma2.push(st.sigma2);
        }
        if lay.pi0 {
            self.pi0.push(st.pi0);
        }
        if lay.pi1 {
            self.pi1.push(st.pi1);
        }
        if lay.s2 {
            self.s2.push(st.s2);
        }
        self.n_draws += 1;
    }

    fn column(values: &[f64], width: usize, idx: usize) -> Vec<f64> {
        values.iter().skip(idx).step_by(width.max(1)).copied().collect()
    }

    pub fn alpha_trace(&self, t: usize) -> Vec<f64> {
        Self::column(&self.alpha, self.q, t)
    }

    pub fn theta_trace(&self, m: usize) -> Vec<f64> {
        Self::column(&self.theta, self.k, m)
    }

    /// Draws of `beta` for flat effect index `j * L + l`.
    pub fn beta_trace(&self, c: usize) -> Vec<f64> {
        Self::column(&self.beta, self.n_effects(), c)
    }

    /// Selection structure implied by the stored indicators.
    pub fn structure(&self) -> Option<Structure> {
        if let Some(m) = self.method {
            return m.spike_slab().then(|| m.structure());
        }
        match (self.phi_b.is_empty(), self.phi_w.is_empty()) {
            (false, false) => Some(Structure::SparseGroup),
            (false, true) => Some(Structure::Group),
            (true, false) => Some(Structure::Individual),
            (true, true) => None,
        }
    }

    pub fn has_indicators(&self) -> bool {
        !(self.phi_b.is_empty() && self.phi_w.is_empty())
    }

    /// Joint inclusion indicator of effect `c` at stored draw `g`.
    pub fn indicator(&self, g: usize, c: usize) -> Option<bool> {
        let l = self.group_size;
        let j = c / l;
        match self.structure()? {
            Structure::SparseGroup => Some(self.phi_b[g * self.p + j] && self.phi_w[g * self.n_effects() + c]),
            Structure::Group => Some(self.phi_b[g * self.p + j]),
            Structure::Individual => Some(self.phi_w[g * self.n_effects() + c]),
        }
    }

    /// Column names in file order.
    pub fn column_names(&self) -> Vec<String> {
        let mut names = Vec::new();
        names.extend((1..=self.q).map(|t| format!("alpha.{t}")));
        names.extend((1..=self.k).map(|m| format!("theta.{m}")));
        for j in 1..=self.p {
            for l in 1..=self.group_size {
                names.push(format!("beta.{j}.{l}"));
            }
        }
        if !self.phi_b.is_empty() {
            names.extend((1..=self.p).map(|j| format!("phi_b.{j}")));
        }
        if !self.phi_w.is_empty() {
            for j in 1..=self.p {
                for l in 1..=self.group_size {
                    names.push(format!("phi_w.{j}.{l}"));
                }
            }
        }
        for (name, v) in [
            ("nu", &self.nu),
            ("sigma2", &self.sigma2),
            ("pi0", &self.pi0),
            ("pi1", &self.pi1),
            ("s2", &self.s2),
        ] {
            if !v.is_empty() {
                names.push(name.to_string());
            }
        }
        names
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(out);
        wtr.write_record(self.column_names())?;
        let pl = self.n_effects();
        let flag = |b: bool| if b { "1".to_string() } else { "0".to_string() };
        let mut row: Vec<String> = Vec::new();
        for g in 0..self.n_draws {
            row.clear();
            row.extend(self.alpha[g * self.q..(g + 1) * self.q].iter().map(f64::to_string));
            row.extend(self.theta[g * self.k..(g + 1) * self.k].iter().map(f64::to_string));
            row.extend(self.beta[g * pl..(g + 1) * pl].iter().map(f64::to_string));
            if !self.phi_b.is_empty() {
                row.extend(self.phi_b[g * self.p..(g + 1) * self.p].iter().map(|&b| flag(b)));
            }
            if !self.phi_w.is_empty() {
                row.extend(self.phi_w[g * pl..(g + 1) * pl].iter().map(|&b| flag(b)));
            }
            for v in [&self.nu, &self.sigma2, &self.pi0, &self.pi1, &self.s2] {
                if !v.is_empty() {
                    row.push(v[g].to_string());
                }
            }
            wtr.write_record(&row)?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn write_csv_path(&self, path: impl AsRef<Path>) -> Result<()> {
        let f = std::io::BufWriter::new(std::fs::File::create(path.as_ref())?);
        self.write_csv(f)
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
        let header: Vec<String> = rdr.headers()?.iter().map(|s| s.trim().to_string()).collect();

        #[derive(Clone, Copy)]
        enum Slot {
            Alpha,
            Theta,
            Beta,
            PhiB,
            PhiW,
            Nu,
            Sigma2,
            Pi0,
            Pi1,
            S2,
        }
        let bad = |name: &str| Error::Parse {
            row: 1,
            column: name.to_string(),
            message: "unrecognized column".to_string(),
        };
        let mut slots = Vec::with_capacity(header.len());
        let (mut q, mut k, mut p, mut l) = (0usize, 0usize, 0usize, 0usize);
        for name in &header {
            let parts: Vec<&str> = name.split('.').collect();
            let idx = |s: &str| s.parse::<usize>().map_err(|_| bad(name));
            let slot = match parts.as_slice() {
                ["alpha", t] => {
                    q = q.max(idx(t)?);
                    Slot::Alpha
                }
                ["theta", m] => {
                    k = k.max(idx(m)?);
                    Slot::Theta
                }
                ["beta", j, ll] => {
                    p = p.max(idx(j)?);
                    l = l.max(idx(ll)?);
                    Slot::Beta
                }
                ["phi_b", _] => Slot::PhiB,
                ["phi_w", _, _] => Slot::PhiW,
                ["nu"] => Slot::Nu,
                ["sigma2"] => Slot::Sigma2,
                ["pi0"] => Slot::Pi0,
                ["pi1"] => Slot::Pi1,
                ["s2"] => Slot::S2,
                _ => return Err(bad(name)),
            };
            slots.push(slot);
        }
        let mut s = PosteriorSamples::empty(p, l, q, k);
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let line = i + 2;
            if rec.len() != header.len() {
                return Err(Error::Parse {
                    row: line,
                    column: String::new(),
                    message: format!("row has {} fields, header has {}", rec.len(), header.len()),
                });
            }
            for (c, cell) in rec.iter().enumerate() {
                let parse = || {
                    cell.trim().parse::<f64>().map_err(|_| Error::Parse {
                        row: line,
                        column: header[c].clone(),
                        message: format!("non-numeric value {cell:?}"),
                    })
                };
                match slots[c] {
                    Slot::Alpha => s.alpha.push(parse()?),
                    Slot::Theta => s.theta.push(parse()?),
                    Slot::Beta => s.beta.push(parse()?),
                    Slot::PhiB => s.phi_b.push(parse()? != 0.0),
                    Slot::PhiW => s.phi_w.push(parse()? != 0.0),
                    Slot::Nu => s.nu.push(parse()?),
                    Slot::Sigma2 => s.sigma2.push(parse()?),
                    Slot::Pi0 => s.pi0.push(parse()?),
                    Slot::Pi1 => s.pi1.push(parse()?),
                    Slot::S2 => s.s2.push(parse()?),
                }
            }
            s.n_draws += 1;
        }
        if s.n_draws == 0 {
            return Err(Error::NoData);
        }
        let g = s.n_draws;
        let widths_ok = s.alpha.len() == g * q
            && s.theta.len() == g * k
            && s.beta.len() == g * p * l
            && (s.phi_b.is_empty() || s.phi_b.len() == g * p)
            && (s.phi_w.is_empty() || s.phi_w.len() == g * p * l);
        if !widths_ok || s.column_names() != header {
            return Err(Error::Parse {
                row: 1,
                column: String::new(),
                message: "header does not list a complete, ordered set of sample columns".to_string(),
            });
        }
        Ok(s)
    }

    pub fn read_csv_path(path: impl AsRef<Path>) -> Result<Self> {
        let f = std::fs::File::open(path.as_ref())?;
        Self::read_csv(std::io::BufReader::new(f))
    }

    /// Append the draws of another chain of the same shape.
    pub fn extend(&mut self, other: &PosteriorSamples) -> Result<()> {
        if (self.p, self.group_size, self.q, self.k) != (other.p, other.group_size, other.q, other.k)
            || self.column_names() != other.column_names()
        {
            return Err(Error::Dimension("sample sets have different layouts".to_string()));
        }
        self.alpha.extend(&other.alpha);
        self.theta.extend(&other.theta);
        self.beta.extend(&other.beta);
        self.phi_b.extend(&other.phi_b);
        self.phi_w.extend(&other.phi_w);
        self.nu.extend(&other.nu);
        self.sigma2.extend(&other.sigma2);
        self.pi0.extend(&other.pi0);
        self.pi1.extend(&other.pi1);
        self.s2.extend(&other.s2);
        self.n_draws += other.n_draws;
        Ok(())
    }
}

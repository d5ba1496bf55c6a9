//! On-disk formats: networks, planted labels, sample traces and summary matrices.
//!
//! Every text artifact may start with `#` comment lines. Writers put a
//! `# manifest: <path>` line first so the file can be traced back to the run
//! that produced it; readers skip all comment lines.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use sbm_core::graph::parse_edge_list;
use sbm_core::relabel::{CoClusterMatrix, MembershipMatrix};
use sbm_core::{ChainSample, EdgeModel, GraphKind, MoveKind, Network};

/// `# sbm directed=1 self_loops=0 model=binary`, written at the top of
/// generated networks so readers can recover the graph kind.
const KIND_TAG: &str = "# sbm ";

pub fn model_name(model: EdgeModel) -> &'static str {
    match model {
        EdgeModel::Binary => "binary",
        EdgeModel::CountWeighted => "poisson",
    }
}

pub fn parse_model(s: &str) -> Result<EdgeModel> {
    match s {
        "binary" => Ok(EdgeModel::Binary),
        "poisson" | "count" => Ok(EdgeModel::CountWeighted),
        other => bail!("unknown edge model {other:?}, expected binary or poisson"),
    }
}

fn kind_header(kind: GraphKind, model: EdgeModel) -> String {
    format!(
        "{KIND_TAG}directed={} self_loops={} model={}",
        kind.directed as u8,
        kind.self_loops as u8,
        model_name(model)
    )
}

/// Graph kind and edge model declared in a network file's header, if any.
pub fn declared_kind(text: &str) -> Result<Option<(GraphKind, EdgeModel)>> {
    let Some(line) = text.lines().find(|l| l.starts_with(KIND_TAG)) else {
        return Ok(None);
    };
    let mut kind = GraphKind::DIRECTED;
    let mut model = EdgeModel::Binary;
    for field in line[KIND_TAG.len()..].split_whitespace() {
        let (key, value) = field.split_once('=').with_context(|| format!("bad header field {field:?}"))?;
        match key {
            "directed" => kind.directed = value == "1",
            "self_loops" => kind.self_loops = value == "1",
            "model" => model = parse_model(value)?,
            _ => {}
        }
    }
    Ok(Some((kind, model)))
}

/// Overrides for the kind and model of a network being read.
#[derive(Clone, Copy, Debug, Default)]
pub struct KindOverride {
    pub directed: Option<bool>,
    pub self_loops: Option<bool>,
    pub model: Option<EdgeModel>,
}

/// Reads an edge list. The header's declared kind is used unless overridden;
/// with neither, the network is directed, loop-free and binary.
pub fn read_network(path: &Path, overrides: KindOverride) -> Result<Network> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let (mut kind, mut model) = declared_kind(&text)?.unwrap_or((GraphKind::DIRECTED, EdgeModel::Binary));
    if let Some(d) = overrides.directed {
        kind.directed = d;
    }
    if let Some(s) = overrides.self_loops {
        kind.self_loops = s;
    }
    if let Some(m) = overrides.model {
        model = m;
    }
    parse_edge_list(&text, kind, model).with_context(|| format!("parsing {}", path.display()))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(f))
}

fn manifest_line(w: &mut impl Write, manifest: Option<&Path>) -> std::io::Result<()> {
    match manifest {
        Some(m) => writeln!(w, "# manifest: {}", m.display()),
        None => Ok(()),
    }
}

/// Incremental network writer for edges produced one at a time.
pub struct NetworkWriter {
    out: BufWriter<File>,
    path: PathBuf,
}

impl NetworkWriter {
    pub fn create(path: &Path, n_nodes: usize, kind: GraphKind, model: EdgeModel, manifest: Option<&Path>) -> Result<Self> {
        let mut out = create(path)?;
        manifest_line(&mut out, manifest)?;
        writeln!(out, "{}", kind_header(kind, model))?;
        writeln!(out, "nodes={n_nodes}")?;
        Ok(NetworkWriter { out, path: path.to_path_buf() })
    }

    pub fn edge(&mut self, s: u32, d: u32, w: u32) -> std::io::Result<()> {
        writeln!(self.out, "{s} {d} {w}")
    }

    pub fn finish(mut self) -> Result<()> {
        self.out.flush().with_context(|| format!("writing {}", self.path.display()))
    }
}

pub fn write_network(path: &Path, net: &Network, manifest: Option<&Path>) -> Result<()> {
    let mut w = NetworkWriter::create(path, net.n_nodes(), net.kind(), net.model(), manifest)?;
    for (s, d, wt) in net.edges() {
        w.edge(s, d, wt)?;
    }
    w.finish()
}

/// Planted labels, one per line.
pub fn write_labels(path: &Path, z: &[u32], manifest: Option<&Path>) -> Result<()> {
    let mut w = create(path)?;
    manifest_line(&mut w, manifest)?;
    for c in z {
        writeln!(w, "{c}")?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_labels(path: &Path) -> Result<Vec<u32>> {
    let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let mut z = Vec::new();
    for (i, line) in BufReader::new(f).lines().enumerate() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        z.push(t.parse().with_context(|| format!("{}:{}: bad label {t:?}", path.display(), i + 1))?);
    }
    Ok(z)
}

pub const SAMPLE_HEADER: &str = "iter,K,K1,log_post,move,accepted";

/// Writes the per-sample CSV and the matching z-trace, line for line.
pub struct TraceWriter {
    csv: BufWriter<File>,
    z: BufWriter<File>,
    line: String,
}

impl TraceWriter {
    pub fn create(csv: &Path, ztrace: &Path, manifest: Option<&Path>) -> Result<Self> {
        let mut c = create(csv)?;
        let mut z = create(ztrace)?;
        manifest_line(&mut c, manifest)?;
        manifest_line(&mut z, manifest)?;
        writeln!(c, "{SAMPLE_HEADER}")?;
        Ok(TraceWriter { csv: c, z, line: String::new() })
    }

    pub fn push(&mut self, s: &ChainSample) -> std::io::Result<()> {
        use std::fmt::Write as _;
        writeln!(self.csv, "{},{},{},{},{},{}", s.iter, s.k, s.k1, s.log_post, s.move_kind, s.accepted as u8)?;
        self.line.clear();
        for (i, c) in s.z.iter().enumerate() {
            if i > 0 {
                self.line.push(' ');
            }
            let _ = write!(self.line, "{c}");
        }
        self.line.push('\n');
        self.z.write_all(self.line.as_bytes())
    }

    pub fn finish(mut self) -> Result<()> {
        self.csv.flush()?;
        self.z.flush()?;
        Ok(())
    }
}

/// One row of the sample CSV.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleRecord {
    pub iter: u64,
    pub k: usize,
    pub k1: usize,
    pub log_post: f64,
    pub move_kind: MoveKind,
    pub accepted: bool,
}

pub fn read_samples(path: &Path) -> Result<Vec<SampleRecord>> {
    let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let mut out = Vec::new();
    let mut header_seen = false;
    for (i, line) in BufReader::new(f).lines().enumerate() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        if !header_seen {
            ensure!(t == SAMPLE_HEADER, "{}:{}: expected header {SAMPLE_HEADER:?}", path.display(), i + 1);
            header_seen = true;
            continue;
        }
        let ctx = || format!("{}:{}: malformed sample row", path.display(), i + 1);
        let f: Vec<&str> = t.split(',').collect();
        ensure!(f.len() == 6, "{}", ctx());
        out.push(SampleRecord {
            iter: f[0].parse().with_context(ctx)?,
            k: f[1].parse().with_context(ctx)?,
            k1: f[2].parse().with_context(ctx)?,
            log_post: f[3].parse().with_context(ctx)?,
            move_kind: f[4].parse().map_err(anyhow::Error::from).with_context(ctx)?,
            accepted: match f[5] {
                "1" => true,
                "0" => false,
                _ => bail!("{}", ctx()),
            },
        });
    }
    Ok(out)
}

/// Flat z-trace: `n_nodes` labels per state.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ZTrace {
    pub n_nodes: usize,
    pub labels: Vec<u32>,
}

impl ZTrace {
    pub fn len(&self) -> usize {
        self.labels.len().checked_div(self.n_nodes).unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn state(&self, i: usize) -> &[u32] {
        &self.labels[i * self.n_nodes..(i + 1) * self.n_nodes]
    }

    pub fn states(&self) -> impl Iterator<Item = &[u32]> {
        self.labels.chunks(self.n_nodes.max(1))
    }
}

pub fn read_ztrace(path: &Path) -> Result<ZTrace> {
    let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let mut labels = Vec::new();
    let mut n_nodes = None;
    for (i, line) in BufReader::new(f).lines().enumerate() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let before = labels.len();
        for tok in t.split_ascii_whitespace() {
            labels.push(tok.parse::<u32>().with_context(|| format!("{}:{}: bad label {tok:?}", path.display(), i + 1))?);
        }
        let n = labels.len() - before;
        match n_nodes {
            None => n_nodes = Some(n),
            Some(m) => ensure!(m == n, "{}:{}: expected {m} labels, found {n}", path.display(), i + 1),
        }
    }
    let Some(n_nodes) = n_nodes else {
        bail!("{} contains no states", path.display());
    };
    Ok(ZTrace { n_nodes, labels })
}

pub fn write_membership(path: &Path, m: &MembershipMatrix, manifest: Option<&Path>) -> Result<()> {
    let mut w = create(path)?;
    manifest_line(&mut w, manifest)?;
    write!(w, "node")?;
    for c in 0..m.n_clusters() {
        write!(w, ",cluster{c}")?;
    }
    writeln!(w)?;
    for i in 0..m.n_nodes() {
        write!(w, "{i}")?;
        for p in m.row(i) {
            write!(w, ",{p}")?;
        }
        writeln!(w)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_coclustering(path: &Path, m: &CoClusterMatrix, manifest: Option<&Path>) -> Result<()> {
    let mut w = create(path)?;
    manifest_line(&mut w, manifest)?;
    write!(w, "node")?;
    for j in 0..m.n_nodes() {
        write!(w, ",{j}")?;
    }
    writeln!(w)?;
    for i in 0..m.n_nodes() {
        write!(w, "{i}")?;
        for p in m.row(i) {
            write!(w, ",{p}")?;
        }
        writeln!(w)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes any text report, preceded by the manifest reference.
pub fn write_text(path: &Path, body: &str, manifest: Option<&Path>) -> Result<()> {
    let mut w = create(path)?;
    manifest_line(&mut w, manifest)?;
    w.write_all(body.as_bytes())?;
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn network_round_trip_keeps_kind() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.txt");
        let net = parse_edge_list("nodes=5\n0 1 2\n3 3 1\n", GraphKind::new(false, true), EdgeModel::CountWeighted).unwrap();
        write_network(&path, &net, Some(Path::new("m.manifest"))).unwrap();
        let back = read_network(&path, KindOverride::default()).unwrap();
        assert_eq!(back, net);
    }

    #[test]
    fn trace_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let (csv, z) = (dir.path().join("s.csv"), dir.path().join("z.txt"));
        let mut w = TraceWriter::create(&csv, &z, None).unwrap();
        let s = ChainSample { iter: 4, k: 3, k1: 2, z: vec![0, 2, 2], log_post: -1.25, move_kind: MoveKind::AE, accepted: true };
        w.push(&s).unwrap();
        w.finish().unwrap();
        let rows = read_samples(&csv).unwrap();
        assert_eq!(rows[0].k, 3);
        assert_eq!(rows[0].log_post, -1.25);
        assert_eq!(rows[0].move_kind, MoveKind::AE);
        let zt = read_ztrace(&z).unwrap();
        assert_eq!(zt.state(0), &[0, 2, 2]);
    }

    #[test]
    fn empty_trace_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let z = dir.path().join("z.txt");
        std::fs::write(&z, "# manifest: x\n").unwrap();
        assert!(read_ztrace(&z).is_err());
    }
}

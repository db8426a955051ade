//! Pair dataset files: CSV with header `id,label,weight,x,y`, where `x` and
//! `y` hold space-separated observations. Leading `#` lines carry metadata
//! such as the digest of the configuration that produced the file.

use std::collections::HashSet;
use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use nepdf_core::nepdf::{clean_pair, Label, PairSample};
use sha2::{Digest, Sha256};

pub const HEADER: [&str; 5] = ["id", "label", "weight", "x", "y"];
const DIGEST_KEY: &str = "# config_digest: ";

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetFile {
    pub pairs: Vec<PairSample>,
    pub config_digest: Option<String>,
}

fn join(values: &[f64]) -> String {
    let mut out = String::with_capacity(values.len() * 12);
    for (i, v) in values.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        out.push_str(&v.to_string());
    }
    out
}

/// CSV body (header and rows, no comment lines).
pub fn to_csv(pairs: &[PairSample]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(HEADER)?;
    for p in pairs {
        w.write_record([
            p.id.as_str(),
            &p.label.to_string(),
            &p.weight.to_string(),
            &join(&p.x),
            &join(&p.y),
        ])?;
    }
    Ok(w.into_inner()?)
}

/// SHA-256 of the CSV body, hex encoded.
pub fn dataset_digest(pairs: &[PairSample]) -> Result<String> {
    Ok(hex::encode(Sha256::digest(to_csv(pairs)?)))
}

pub fn write_dataset(path: &Path, pairs: &[PairSample], config_digest: &str) -> Result<()> {
    let mut bytes = format!("{DIGEST_KEY}{config_digest}\n").into_bytes();
    bytes.extend(to_csv(pairs)?);
    fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
}

fn parse_values(field: &str) -> Result<Vec<Option<f64>>> {
    field
        .split_ascii_whitespace()
        .map(|tok| match tok {
            "NA" | "na" | "NaN" | "nan" | "?" => Ok(None),
            t => {
                let v: f64 = t.parse().with_context(|| format!("bad number {t:?}"))?;
                Ok(v.is_finite().then_some(v))
            }
        })
        .collect()
}

fn parse_row(rec: &csv::StringRecord) -> Result<PairSample> {
    if rec.len() != HEADER.len() {
        bail!("expected {} fields, found {}", HEADER.len(), rec.len());
    }
    let id = rec[0].trim();
    if id.is_empty() {
        bail!("empty id");
    }
    let label: i64 = rec[1].trim().parse().with_context(|| format!("bad label {:?}", &rec[1]))?;
    let label = Label::try_from(label)?;
    let weight = match rec[2].trim() {
        "" => 1.0,
        w => w.parse::<f64>().with_context(|| format!("bad weight {w:?}"))?,
    };
    if !(weight.is_finite() && weight >= 0.0) {
        bail!("weight must be a nonnegative number, got {weight}");
    }
    let x = parse_values(&rec[3])?;
    let y = parse_values(&rec[4])?;
    if x.len() != y.len() {
        bail!("x has {} observations, y has {}", x.len(), y.len());
    }
    let (x, y) = clean_pair(&x, &y)?;
    Ok(PairSample::new(id, x, y, label)?.with_weight(weight))
}

/// Parses a dataset from text. Observations marked `NA`, `nan` or `?` drop
/// the whole observation from both vectors.
pub fn parse_dataset(text: &str, origin: &str) -> Result<DatasetFile> {
    let mut config_digest = None;
    let mut body_start = 0;
    for line in text.split_inclusive('\n') {
        if !line.starts_with('#') {
            break;
        }
        if let Some(d) = line.trim_end().strip_prefix(DIGEST_KEY) {
            config_digest = Some(d.to_string());
        }
        body_start += line.len();
    }

    let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(&text.as_bytes()[body_start..]);
    let header: Vec<String> = r.headers()?.iter().map(|h| h.trim().to_string()).collect();
    if header != HEADER {
        bail!("{origin}: header must be {}, found {}", HEADER.join(","), header.join(","));
    }
    let mut pairs = Vec::new();
    let mut seen = HashSet::new();
    for (i, rec) in r.records().enumerate() {
        let line = i + 2;
        let rec = rec.with_context(|| format!("{origin}: row {line}"))?;
        let pair = parse_row(&rec).with_context(|| format!("{origin}: row {line}"))?;
        if !seen.insert(pair.id.clone()) {
            bail!("{origin}: row {line}: duplicate id {:?}", pair.id);
        }
        pairs.push(pair);
    }
    Ok(DatasetFile { pairs, config_digest })
}

pub fn read_dataset(path: &Path) -> Result<DatasetFile> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_dataset(&text, &path.display().to_string())
}

fn read_columns(path: &Path) -> Result<(Vec<Option<f64>>, Vec<Option<f64>>)> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut x = Vec::new();
    let mut y = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.is_empty() {
            continue;
        }
        if toks.len() != 2 {
            bail!("{}: line {}: expected 2 columns, found {}", path.display(), i + 1, toks.len());
        }
        let vals = parse_values(line).with_context(|| format!("{}: line {}", path.display(), i + 1))?;
        x.push(vals[0]);
        y.push(vals[1]);
    }
    Ok((x, y))
}

/// Reads a Tübingen-style directory: `meta` lists one pair per line as
/// `name cause_first cause_last effect_first effect_last weight`, and the
/// observations live in `<dir>/<name>.txt` as two whitespace-separated
/// columns. Pairs whose cause or effect spans several columns are skipped.
/// Returns the pairs and the names of the skipped entries.
pub fn convert_tuebingen(meta: &Path, dir: &Path) -> Result<(Vec<PairSample>, Vec<String>)> {
    let text = fs::read_to_string(meta).with_context(|| format!("reading {}", meta.display()))?;
    let mut pairs = Vec::new();
    let mut skipped = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.is_empty() || toks[0].starts_with('#') {
            continue;
        }
        let ctx = || format!("{}: line {}", meta.display(), i + 1);
        if toks.len() != 6 {
            bail!("{}: expected 6 fields, found {}", ctx(), toks.len());
        }
        let cols = toks[1..5]
            .iter()
            .map(|t| t.parse::<usize>().with_context(ctx))
            .collect::<Result<Vec<usize>>>()?;
        let weight: f64 = toks[5].parse().with_context(ctx)?;
        let name = if toks[0].starts_with("pair") { toks[0].to_string() } else { format!("pair{:0>4}", toks[0]) };
        let label = match (cols[0], cols[1], cols[2], cols[3]) {
            (1, 1, 2, 2) => Label::Causal,
            (2, 2, 1, 1) => Label::Reverse,
            _ => {
                skipped.push(name);
                continue;
            }
        };
        let (x, y) = read_columns(&dir.join(format!("{name}.txt")))?;
        let (x, y) = clean_pair(&x, &y).with_context(|| format!("pair {name}"))?;
        pairs.push(PairSample::new(name, x, y, label)?.with_weight(weight));
    }
    Ok((pairs, skipped))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Vec<PairSample> {
        vec![
            PairSample::new("a:X-Y", vec![0.1, 1.0 / 3.0, -2.5e-300], vec![1e300, 2.0, 3.0], Label::Causal).unwrap(),
            PairSample::new("b", vec![5.0], vec![-0.0], Label::Independent).unwrap().with_weight(0.25),
        ]
    }

    #[test]
    fn round_trip_is_exact() {
        let pairs = sample();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.csv");
        write_dataset(&path, &pairs, "abc").unwrap();
        let back = read_dataset(&path).unwrap();
        assert_eq!(back.pairs, pairs);
        assert_eq!(back.config_digest.as_deref(), Some("abc"));
        for (a, b) in back.pairs.iter().zip(&pairs) {
            for (u, v) in a.x.iter().zip(&b.x).chain(a.y.iter().zip(&b.y)) {
                assert_eq!(u.to_bits(), v.to_bits());
            }
        }
    }

    #[test]
    fn missing_values_drop_observations() {
        let text = "id,label,weight,x,y\np,1,,1 NA 3 4,5 6 nan 8\n";
        let d = parse_dataset(text, "t").unwrap();
        assert_eq!(d.pairs[0].x, [1.0, 4.0]);
        assert_eq!(d.pairs[0].y, [5.0, 8.0]);
        assert_eq!(d.pairs[0].weight, 1.0);
        assert!(d.config_digest.is_none());
    }

    #[test]
    fn rejects_bad_rows() {
        let cases = [
            "id,label,weight,x,y\np,2,1,1 2,3 4\n",
            "id,label,weight,x,y\np,1,1,1 2,3\n",
            "id,label,weight,x,y\np,1,1,1 2,3 4\np,1,1,1 2,3 4\n",
            "id,label,weight,x,y\np,1,1,1 zz,3 4\n",
            "id,label,x,y\np,1,1 2,3 4\n",
            "id,label,weight,x,y\np,1,-1,1 2,3 4\n",
            "id,label,weight,x,y\np,1,1,NA,NA\n",
        ];
        for c in cases {
            assert!(parse_dataset(c, "t").is_err(), "{c}");
        }
    }

    #[test]
    fn digest_tracks_content() {
        let pairs = sample();
        let d = dataset_digest(&pairs).unwrap();
        assert_eq!(d.len(), 64);
        assert_eq!(d, dataset_digest(&pairs).unwrap());
        assert_ne!(d, dataset_digest(&pairs[..1]).unwrap());
    }

    #[test]
    fn tuebingen_conversion() {
        let dir = tempfile::tempdir().unwrap();
        let meta = dir.path().join("pairmeta.txt");
        fs::write(&meta, "0001 1 1 2 2 1\n0002 2 2 1 1 0.5\n0003 1 2 3 3 1\n").unwrap();
        fs::write(dir.path().join("pair0001.txt"), "1 2\n2 4.5\n3 NaN\n4 8\n").unwrap();
        fs::write(dir.path().join("pair0002.txt"), " 1.5e1\t2\n3 4\n").unwrap();
        let (pairs, skipped) = convert_tuebingen(&meta, dir.path()).unwrap();
        assert_eq!(skipped, ["pair0003"]);
        assert_eq!(pairs.len(), 2);
        assert_eq!(pairs[0].id, "pair0001");
        assert_eq!(pairs[0].label, Label::Causal);
        assert_eq!(pairs[0].x, [1.0, 2.0, 4.0]);
        assert_eq!(pairs[1].label, Label::Reverse);
        assert_eq!(pairs[1].weight, 0.5);
        assert_eq!(pairs[1].x, [15.0, 3.0]);
    }
}

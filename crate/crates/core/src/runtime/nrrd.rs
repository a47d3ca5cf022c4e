//! Reader and writer for a small NRRD subset: `float`/`double` samples,
//! raw little-endian encoding, up to three spatial axes plus an optional
//! leading component axis, optional space origin/directions and detached data.

use std::collections::HashMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use thiserror::Error;

use super::image::{invert, Image};
use crate::Scalar;

#[derive(Debug, Error)]
pub enum NrrdError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("unsupported NRRD feature: {0}")]
    UnsupportedFeature(String),
    #[error("malformed NRRD header: {0}")]
    MalformedHeader(String),
    #[error("NRRD data has {found} bytes, expected {expected}")]
    SizeMismatch { expected: usize, found: usize },
}

const IGNORED: &[&str] = &[
    "content",
    "kinds",
    "centers",
    "centerings",
    "labels",
    "units",
    "space units",
    "min",
    "max",
    "old min",
    "old max",
    "thicknesses",
    "axis mins",
    "axis maxs",
    "measurement frame",
    "sample units",
    "space",
];

fn malformed(msg: impl Into<String>) -> NrrdError {
    NrrdError::MalformedHeader(msg.into())
}

fn parse_vector(s: &str) -> Result<Option<Vec<f64>>, NrrdError> {
    let s = s.trim();
    if s == "none" {
        return Ok(None);
    }
    let inner = s
        .strip_prefix('(')
        .and_then(|r| r.strip_suffix(')'))
        .ok_or_else(|| malformed(format!("bad vector `{s}`")))?;
    inner
        .split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|_| malformed(format!("bad number in `{s}`"))))
        .collect::<Result<Vec<_>, _>>()
        .map(Some)
}

fn split_vectors(s: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    let mut depth = 0;
    for ch in s.chars() {
        match ch {
            '(' => {
                depth += 1;
                cur.push(ch);
            }
            ')' => {
                depth -= 1;
                cur.push(ch);
            }
            c if c.is_whitespace() && depth == 0 => {
                if !cur.is_empty() {
                    out.push(std::mem::take(&mut cur));
                }
            }
            c => cur.push(c),
        }
    }
    if !cur.is_empty() {
        out.push(cur);
    }
    out
}

/// Parses an NRRD file held in memory; `dir` resolves detached data files.
pub fn parse_nrrd<T: Scalar>(bytes: &[u8], dir: Option<&Path>) -> Result<Image<T>, NrrdError> {
    let mut pos = 0;
    let next_line = |pos: &mut usize| -> Option<String> {
        if *pos >= bytes.len() {
            return None;
        }
        let end = bytes[*pos..].iter().position(|&b| b == b'\n').map_or(bytes.len(), |i| *pos + i);
        let line = String::from_utf8_lossy(&bytes[*pos..end]).trim_end_matches('\r').to_string();
        *pos = (end + 1).min(bytes.len() + 1);
        Some(line)
    };
    let magic = next_line(&mut pos).ok_or_else(|| malformed("empty file"))?;
    let version = magic.strip_prefix("NRRD000").ok_or_else(|| malformed("missing NRRD magic"))?;
    if !matches!(version, "1" | "2" | "3" | "4" | "5") {
        return Err(NrrdError::UnsupportedFeature(format!("version {magic}")));
    }

    let mut fields: HashMap<String, String> = HashMap::new();
    let mut ended_blank = false;
    while let Some(line) = next_line(&mut pos) {
        if line.is_empty() {
            ended_blank = true;
            break;
        }
        if line.starts_with('#') || line.contains(":=") {
            continue;
        }
        let (k, v) = line.split_once(':').ok_or_else(|| malformed(format!("line `{line}`")))?;
        fields.insert(k.trim().to_lowercase(), v.trim().to_string());
    }

    let get = |k: &str| fields.get(k).map(String::as_str);
    for k in fields.keys() {
        let known = matches!(
            k.as_str(),
            "type" | "dimension" | "sizes" | "encoding" | "endian" | "space origin" | "space directions"
                | "space dimension" | "spacings" | "data file" | "datafile" | "byte skip" | "line skip"
        );
        if !known && !IGNORED.contains(&k.as_str()) {
            return Err(NrrdError::UnsupportedFeature(k.clone()));
        }
    }

    let width = match get("type").ok_or_else(|| malformed("missing type"))? {
        "float" => 4,
        "double" => 8,
        other => return Err(NrrdError::UnsupportedFeature(format!("type: {other}"))),
    };
    let enc = get("encoding").ok_or_else(|| malformed("missing encoding"))?;
    if enc != "raw" {
        return Err(NrrdError::UnsupportedFeature(format!("encoding: {enc}")));
    }
    if let Some(e) = get("endian") {
        if e != "little" {
            return Err(NrrdError::UnsupportedFeature(format!("endian: {e}")));
        }
    }
    for k in ["byte skip", "line skip"] {
        if let Some(v) = get(k) {
            if v != "0" {
                return Err(NrrdError::UnsupportedFeature(format!("{k}: {v}")));
            }
        }
    }
    let dim: usize = get("dimension")
        .ok_or_else(|| malformed("missing dimension"))?
        .parse()
        .map_err(|_| malformed("dimension"))?;
    let sizes: Vec<usize> = get("sizes")
        .ok_or_else(|| malformed("missing sizes"))?
        .split_whitespace()
        .map(|t| t.parse().map_err(|_| malformed("sizes")))
        .collect::<Result<_, _>>()?;
    if sizes.len() != dim {
        return Err(malformed(format!("dimension {dim} but {} sizes", sizes.len())));
    }

    // Axes whose space direction is `none` (or the extra leading axis of a
    // four-axis file) hold tensor components.
    let directions: Option<Vec<Option<Vec<f64>>>> = match get("space directions") {
        Some(s) => Some(split_vectors(s).iter().map(|t| parse_vector(t)).collect::<Result<_, _>>()?),
        None => None,
    };
    let ncomp_axes = match &directions {
        Some(dirs) => {
            if dirs.len() != dim {
                return Err(malformed("space directions count"));
            }
            let k = dirs.iter().take_while(|d| d.is_none()).count();
            if dirs[k..].iter().any(Option::is_none) {
                return Err(NrrdError::UnsupportedFeature("non-leading component axis".into()));
            }
            k
        }
        None => usize::from(dim == 4),
    };
    if ncomp_axes > 1 {
        return Err(NrrdError::UnsupportedFeature("more than one component axis".into()));
    }
    let spatial = dim - ncomp_axes;
    if !(1..=3).contains(&spatial) {
        return Err(NrrdError::UnsupportedFeature(format!("{spatial} spatial axes")));
    }
    let shape: Vec<usize> = sizes[..ncomp_axes].to_vec();
    let spatial_sizes: Vec<usize> = sizes[ncomp_axes..].to_vec();

    // Image-to-world matrix with the direction vectors as columns.
    let mut m = vec![0.0; spatial * spatial];
    match &directions {
        Some(dirs) => {
            for (a, dir) in dirs[ncomp_axes..].iter().enumerate() {
                let dir = dir.as_ref().unwrap();
                if dir.len() != spatial {
                    return Err(malformed("space direction length"));
                }
                for r in 0..spatial {
                    m[r * spatial + a] = dir[r];
                }
            }
        }
        None => {
            let spacings: Vec<f64> = match get("spacings") {
                Some(s) => s
                    .split_whitespace()
                    .map(|t| if t == "nan" { Ok(f64::NAN) } else { t.parse().map_err(|_| malformed("spacings")) })
                    .collect::<Result<_, _>>()?,
                None => vec![1.0; dim],
            };
            if spacings.len() != dim {
                return Err(malformed("spacings count"));
            }
            for a in 0..spatial {
                m[a * spatial + a] = spacings[ncomp_axes + a];
            }
        }
    }
    let origin = match get("space origin") {
        Some(s) => parse_vector(s)?.ok_or_else(|| malformed("space origin"))?,
        None => vec![0.0; spatial],
    };
    if origin.len() != spatial {
        return Err(malformed("space origin length"));
    }
    let a = invert(&m, spatial).ok_or_else(|| malformed("singular space directions"))?;
    let b: Vec<f64> = (0..spatial).map(|r| -(0..spatial).map(|c| a[r * spatial + c] * origin[c]).sum::<f64>()).collect();

    let payload: Vec<u8> = match get("data file").or(get("datafile")) {
        Some(name) => {
            if name.starts_with("LIST") || name.contains('%') {
                return Err(NrrdError::UnsupportedFeature(format!("data file: {name}")));
            }
            let path = dir.map_or_else(|| Path::new(name).to_path_buf(), |d| d.join(name));
            fs::read(path)?
        }
        None => {
            if !ended_blank {
                return Err(malformed("header not terminated by a blank line"));
            }
            bytes[pos.min(bytes.len())..].to_vec()
        }
    };
    let count: usize = sizes.iter().product();
    if payload.len() != count * width {
        return Err(NrrdError::SizeMismatch { expected: count * width, found: payload.len() });
    }
    let data: Vec<T> = payload
        .chunks_exact(width)
        .map(|c| {
            T::lit(if width == 4 {
                f32::from_le_bytes(c.try_into().unwrap()) as f64
            } else {
                f64::from_le_bytes(c.try_into().unwrap())
            })
        })
        .collect();
    let img = Image::new(spatial_sizes, shape, data).map_err(|e| malformed(e.to_string()))?;
    img.with_transform(a.into_iter().map(T::lit).collect(), b.into_iter().map(T::lit).collect())
        .map_err(|e| malformed(e.to_string()))
}

pub fn load_nrrd<T: Scalar>(path: &Path) -> Result<Image<T>, NrrdError> {
    let bytes = fs::read(path)?;
    parse_nrrd(&bytes, path.parent())
}

/// Serializes `data` as an attached raw little-endian double NRRD. `ncomp > 1`
/// adds a leading component axis.
pub fn nrrd_bytes(sizes: &[usize], ncomp: usize, data: &[f64]) -> Vec<u8> {
    let mut all = Vec::new();
    if ncomp > 1 {
        all.push(ncomp);
    }
    all.extend_from_slice(sizes);
    let mut out = Vec::new();
    let _ = writeln!(out, "NRRD0004");
    let _ = writeln!(out, "type: double");
    let _ = writeln!(out, "dimension: {}", all.len());
    let sz: Vec<String> = all.iter().map(|s| s.to_string()).collect();
    let _ = writeln!(out, "sizes: {}", sz.join(" "));
    let _ = writeln!(out, "encoding: raw");
    let _ = writeln!(out, "endian: little");
    let _ = writeln!(out);
    for v in data {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

/// Writes an image (with its transform) as an attached double NRRD.
pub fn write_image<T: Scalar>(path: &Path, img: &Image<T>) -> Result<(), NrrdError> {
    let d = img.dim();
    let a: Vec<f64> = img.a.iter().map(|v| v.as_f64()).collect();
    let m = invert(&a, d).ok_or_else(|| malformed("singular transform"))?;
    let origin: Vec<f64> = (0..d).map(|r| -(0..d).map(|c| m[r * d + c] * img.b[c].as_f64()).sum::<f64>()).collect();
    let fmt_vec = |v: &[f64]| format!("({})", v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(","));
    let ncomp = img.ncomp();
    let mut sizes = Vec::new();
    let mut dirs = Vec::new();
    if !img.shape.is_empty() {
        sizes.push(ncomp);
        dirs.push("none".to_string());
    }
    sizes.extend_from_slice(&img.sizes);
    for ax in 0..d {
        let col: Vec<f64> = (0..d).map(|r| m[r * d + ax]).collect();
        dirs.push(fmt_vec(&col));
    }
    let mut out = Vec::new();
    writeln!(out, "NRRD0005")?;
    writeln!(out, "type: double")?;
    writeln!(out, "dimension: {}", sizes.len())?;
    writeln!(out, "sizes: {}", sizes.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(" "))?;
    writeln!(out, "space dimension: {d}")?;
    writeln!(out, "space directions: {}", dirs.join(" "))?;
    writeln!(out, "space origin: {}", fmt_vec(&origin))?;
    writeln!(out, "encoding: raw")?;
    writeln!(out, "endian: little")?;
    writeln!(out)?;
    for v in &img.data {
        out.extend_from_slice(&v.as_f64().to_le_bytes());
    }
    fs::write(path, out)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn file(header: &str, data: &[f32]) -> Vec<u8> {
        let mut b = header.as_bytes().to_vec();
        for v in data {
            b.extend_from_slice(&v.to_le_bytes());
        }
        b
    }

    #[test]
    fn minimal_1d() {
        let b = file("NRRD0004\ntype: float\ndimension: 1\nsizes: 4\nencoding: raw\nendian: little\n\n", &[1.0, 2.0, 4.0, 8.0]);
        let img: Image<f64> = parse_nrrd(&b, None).unwrap();
        assert_eq!(img.sizes, vec![4]);
        assert!(img.shape.is_empty());
        assert_eq!(img.data, vec![1.0, 2.0, 4.0, 8.0]);
        assert_eq!(img.a, vec![1.0]);
        assert_eq!(img.b, vec![0.0]);
    }

    #[test]
    fn space_metadata_inverted() {
        let h = "NRRD0004\ntype: float\ndimension: 3\nsizes: 2 2 2\nspace dimension: 3\n\
                 space directions: (0.5,0,0) (0,0.5,0) (0,0,0.5)\nspace origin: (1,1,1)\nencoding: raw\n\n";
        let img: Image<f64> = parse_nrrd(&file(h, &[0.0; 8]), None).unwrap();
        assert_eq!(img.a, vec![2.0, 0.0, 0.0, 0.0, 2.0, 0.0, 0.0, 0.0, 2.0]);
        assert_eq!(img.b, vec![-2.0, -2.0, -2.0]);
    }

    #[test]
    fn gzip_unsupported() {
        let h = "NRRD0004\ntype: float\ndimension: 1\nsizes: 4\nencoding: gzip\n\n";
        let err = parse_nrrd::<f64>(&file(h, &[]), None).unwrap_err();
        assert!(matches!(err, NrrdError::UnsupportedFeature(ref s) if s.contains("gzip")));
    }

    #[test]
    fn wrong_size() {
        let h = "NRRD0004\ntype: float\ndimension: 1\nsizes: 4\nencoding: raw\n\n";
        assert!(matches!(parse_nrrd::<f64>(&file(h, &[1.0]), None), Err(NrrdError::SizeMismatch { .. })));
    }

    #[test]
    fn component_axis_and_roundtrip() {
        let data: Vec<f64> = (0..18).map(|v| v as f64 * 0.25).collect();
        let img = Image::new(vec![3, 3], vec![2], data)
            .unwrap()
            .with_transform(vec![2.0, 1.0, 0.0, 1.0], vec![0.5, -1.0])
            .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("v.nrrd");
        write_image(&p, &img).unwrap();
        let back: Image<f64> = load_nrrd(&p).unwrap();
        assert_eq!(back.sizes, img.sizes);
        assert_eq!(back.shape, vec![2]);
        assert_eq!(back.data, img.data);
        for (x, y) in back.a.iter().zip(&img.a).chain(back.b.iter().zip(&img.b)) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn detached_data() {
        let dir = tempfile::tempdir().unwrap();
        let raw: Vec<u8> = [3.0f64, 5.0].iter().flat_map(|v| v.to_le_bytes()).collect();
        fs::write(dir.path().join("d.raw"), raw).unwrap();
        let hdr = "NRRD0004\ntype: double\ndimension: 1\nsizes: 2\nencoding: raw\ndata file: d.raw\n";
        fs::write(dir.path().join("d.nhdr"), hdr).unwrap();
        let img: Image<f64> = load_nrrd(&dir.path().join("d.nhdr")).unwrap();
        assert_eq!(img.data, vec![3.0, 5.0]);
    }

    #[test]
    fn unknown_field_rejected() {
        let h = "NRRD0004\ntype: float\ndimension: 1\nsizes: 1\nencoding: raw\nblock size: 4\n\n";
        assert!(matches!(parse_nrrd::<f64>(&file(h, &[1.0]), None), Err(NrrdError::UnsupportedFeature(_))));
    }
}

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::{ColoredPointCloud, Vec3};

/// A vertex cloud plus the optional per-point `frame` property.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PlyData {
    pub cloud: ColoredPointCloud,
    pub frames: Option<Vec<usize>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Format {
    Ascii,
    BinaryLe,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Scalar {
    I8,
    U8,
    I16,
    U16,
    I32,
    U32,
    F32,
    F64,
}

impl Scalar {
    fn parse(name: &str) -> Option<Self> {
        Some(match name {
            "char" | "int8" => Scalar::I8,
            "uchar" | "uint8" => Scalar::U8,
            "short" | "int16" => Scalar::I16,
            "ushort" | "uint16" => Scalar::U16,
            "int" | "int32" => Scalar::I32,
            "uint" | "uint32" => Scalar::U32,
            "float" | "float32" => Scalar::F32,
            "double" | "float64" => Scalar::F64,
            _ => return None,
        })
    }

    fn size(self) -> usize {
        match self {
            Scalar::I8 | Scalar::U8 => 1,
            Scalar::I16 | Scalar::U16 => 2,
            Scalar::I32 | Scalar::U32 | Scalar::F32 => 4,
            Scalar::F64 => 8,
        }
    }

    fn is_float(self) -> bool {
        matches!(self, Scalar::F32 | Scalar::F64)
    }

    fn read_le(self, b: &[u8]) -> f64 {
        match self {
            Scalar::I8 => b[0] as i8 as f64,
            Scalar::U8 => b[0] as f64,
            Scalar::I16 => i16::from_le_bytes([b[0], b[1]]) as f64,
            Scalar::U16 => u16::from_le_bytes([b[0], b[1]]) as f64,
            Scalar::I32 => i32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
            Scalar::U32 => u32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
            Scalar::F32 => f32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
            Scalar::F64 => f64::from_le_bytes(b[..8].try_into().expect("8 bytes")),
        }
    }
}

#[derive(Debug, Clone)]
enum Property {
    Scalar { name: String, ty: Scalar },
    List { count: Scalar, item: Scalar },
}

#[derive(Debug, Clone)]
struct Element {
    name: String,
    count: usize,
    properties: Vec<Property>,
}

struct Header {
    format: Format,
    elements: Vec<Element>,
    body_offset: usize,
}

fn parse_header(bytes: &[u8], path: &str) -> Result<Header> {
    let err = |msg: &str| Error::parse(path, msg);
    let end_marker = b"end_header";
    let end = bytes
        .windows(end_marker.len())
        .position(|w| w == end_marker)
        .ok_or_else(|| err("no end_header line"))?;
    let mut body_offset = end + end_marker.len();
    if bytes.get(body_offset) == Some(&b'\r') {
        body_offset += 1;
    }
    if bytes.get(body_offset) != Some(&b'\n') {
        return Err(err("end_header must end its line"));
    }
    body_offset += 1;

    let text = std::str::from_utf8(&bytes[..end]).map_err(|_| err("header is not UTF-8"))?;
    let mut lines = text.lines().map(str::trim);
    if lines.next() != Some("ply") {
        return Err(err("missing `ply` magic"));
    }
    let mut format = None;
    let mut elements: Vec<Element> = Vec::new();
    for line in lines {
        let tokens: Vec<&str> = line.split_whitespace().collect();
        match tokens.as_slice() {
            [] => {}
            ["comment", ..] | ["obj_info", ..] => {}
            ["format", kind, _version] => {
                format = Some(match *kind {
                    "ascii" => Format::Ascii,
                    "binary_little_endian" => Format::BinaryLe,
                    other => return Err(err(&format!("unsupported format `{other}`"))),
                });
            }
            ["element", name, count] => {
                let count = count
                    .parse()
                    .map_err(|_| err(&format!("bad element count `{count}`")))?;
                elements.push(Element {
                    name: name.to_string(),
                    count,
                    properties: Vec::new(),
                });
            }
            ["property", "list", count, item, _name] => {
                let el = elements.last_mut().ok_or_else(|| err("property before element"))?;
                let count = Scalar::parse(count).ok_or_else(|| err(&format!("unknown type `{count}`")))?;
                let item = Scalar::parse(item).ok_or_else(|| err(&format!("unknown type `{item}`")))?;
                el.properties.push(Property::List { count, item });
            }
            ["property", ty, name] => {
                let el = elements.last_mut().ok_or_else(|| err("property before element"))?;
                let ty = Scalar::parse(ty).ok_or_else(|| err(&format!("unknown type `{ty}`")))?;
                el.properties.push(Property::Scalar {
                    name: name.to_string(),
                    ty,
                });
            }
            _ => return Err(err(&format!("unrecognized header line `{line}`"))),
        }
    }
    Ok(Header {
        format: format.ok_or_else(|| err("missing format line"))?,
        elements,
        body_offset,
    })
}

// Column of each wanted vertex property, with its type.
struct VertexLayout {
    xyz: [(usize, Scalar); 3],
    rgb: [(usize, Scalar); 3],
    frame: Option<(usize, Scalar)>,
}

fn vertex_layout(el: &Element, path: &str) -> Result<VertexLayout> {
    let find = |wanted: &str| {
        el.properties.iter().enumerate().find_map(|(i, p)| match p {
            Property::Scalar { name, ty } if name == wanted => Some((i, *ty)),
            _ => None,
        })
    };
    let need = |wanted: &str| {
        find(wanted).ok_or_else(|| Error::MissingProperty {
            path: path.to_string(),
            property: wanted.to_string(),
        })
    };
    Ok(VertexLayout {
        xyz: [need("x")?, need("y")?, need("z")?],
        rgb: [need("red")?, need("green")?, need("blue")?],
        frame: find("frame"),
    })
}

fn color_channel(value: f64, ty: Scalar, path: &str) -> Result<f64> {
    let c = if ty.is_float() && value <= 1.0 {
        value
    } else {
        value / 255.0
    };
    if !(0.0..=1.0).contains(&c) {
        return Err(Error::parse(path, format!("color value {value} out of range")));
    }
    Ok(c)
}

struct Rows {
    positions: Vec<Vec3>,
    colors: Vec<Vec3>,
    frames: Vec<usize>,
}

impl Rows {
    fn push(&mut self, row: &[f64], layout: &VertexLayout, path: &str) -> Result<()> {
        let [x, y, z] = layout.xyz.map(|(i, _)| row[i]);
        let p = Vec3::new(x, y, z);
        if !p.iter().all(|v| v.is_finite()) {
            return Err(Error::parse(path, "non-finite vertex position"));
        }
        let mut c = Vec3::zeros();
        for (k, (i, ty)) in layout.rgb.iter().enumerate() {
            c[k] = color_channel(row[*i], *ty, path)?;
        }
        self.positions.push(p);
        self.colors.push(c);
        if let Some((i, _)) = layout.frame {
            let f = row[i];
            if f < 0.0 || f.fract() != 0.0 {
                return Err(Error::parse(path, format!("invalid frame index {f}")));
            }
            self.frames.push(f as usize);
        }
        Ok(())
    }
}

/// Parses ASCII or binary little-endian PLY bytes. `path` only labels errors.
pub fn parse_ply(bytes: &[u8], path: &str) -> Result<PlyData> {
    let header = parse_header(bytes, path)?;
    let vertex_pos = header
        .elements
        .iter()
        .position(|e| e.name == "vertex")
        .ok_or_else(|| Error::parse(path, "no vertex element"))?;
    let layout = vertex_layout(&header.elements[vertex_pos], path)?;
    let n = header.elements[vertex_pos].count;
    let mut rows = Rows {
        positions: Vec::with_capacity(n),
        colors: Vec::with_capacity(n),
        frames: Vec::new(),
    };
    let body = &bytes[header.body_offset..];
    match header.format {
        Format::Ascii => read_ascii(body, &header.elements, vertex_pos, &layout, &mut rows, path)?,
        Format::BinaryLe => read_binary(body, &header.elements, vertex_pos, &layout, &mut rows, path)?,
    }
    let frames = layout.frame.map(|_| rows.frames);
    Ok(PlyData {
        cloud: ColoredPointCloud::new(rows.positions, rows.colors)?,
        frames,
    })
}

fn read_ascii(
    body: &[u8],
    elements: &[Element],
    vertex_pos: usize,
    layout: &VertexLayout,
    rows: &mut Rows,
    path: &str,
) -> Result<()> {
    let text = std::str::from_utf8(body).map_err(|_| Error::parse(path, "ASCII body is not UTF-8"))?;
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    for (e, el) in elements.iter().enumerate() {
        for r in 0..el.count {
            let line = lines
                .next()
                .ok_or_else(|| Error::parse(path, format!("element `{}` truncated at row {r}", el.name)))?;
            if e != vertex_pos {
                continue;
            }
            let values = ascii_row(line, &el.properties)
                .ok_or_else(|| Error::parse(path, format!("malformed vertex row {r}")))?;
            rows.push(&values, layout, path)?;
        }
    }
    Ok(())
}

// Scalars are narrowed to their declared type so ASCII and binary agree.
fn ascii_row(line: &str, properties: &[Property]) -> Option<Vec<f64>> {
    let mut tokens = line.split_whitespace().map(str::parse::<f64>);
    let mut row = Vec::with_capacity(properties.len());
    for p in properties {
        match p {
            Property::Scalar { ty, .. } => {
                let v = tokens.next()?.ok()?;
                row.push(if *ty == Scalar::F32 { v as f32 as f64 } else { v });
            }
            Property::List { .. } => {
                let k = tokens.next()?.ok()?;
                if k < 0.0 || k.fract() != 0.0 {
                    return None;
                }
                for _ in 0..k as usize {
                    tokens.next()?.ok()?;
                }
                row.push(f64::NAN);
            }
        }
    }
    tokens.next().is_none().then_some(row)
}

fn read_binary(
    body: &[u8],
    elements: &[Element],
    vertex_pos: usize,
    layout: &VertexLayout,
    rows: &mut Rows,
    path: &str,
) -> Result<()> {
    let truncated = || Error::parse(path, "binary body truncated");
    let mut at = 0usize;
    let mut take = |len: usize| -> Result<&[u8]> {
        let slice = body.get(at..at + len).ok_or_else(truncated)?;
        at += len;
        Ok(slice)
    };
    let mut row = Vec::new();
    for (e, el) in elements.iter().enumerate() {
        for _ in 0..el.count {
            row.clear();
            for p in &el.properties {
                match p {
                    Property::Scalar { ty, .. } => row.push(ty.read_le(take(ty.size())?)),
                    Property::List { count, item } => {
                        let k = count.read_le(take(count.size())?);
                        if k < 0.0 {
                            return Err(Error::parse(path, "negative list length"));
                        }
                        take(k as usize * item.size())?;
                        row.push(f64::NAN);
                    }
                }
            }
            if e == vertex_pos {
                rows.push(&row, layout, path)?;
            }
        }
    }
    Ok(())
}

pub fn read_ply(path: impl AsRef<Path>) -> Result<ColoredPointCloud> {
    Ok(read_ply_data(path)?.cloud)
}

pub fn read_ply_data(path: impl AsRef<Path>) -> Result<PlyData> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_ply(&bytes, &path.display().to_string())
}

fn to_u8(c: f64) -> u8 {
    (c * 255.0).round_ties_even().clamp(0.0, 255.0) as u8
}

fn check_frames(cloud: &ColoredPointCloud, frames: Option<&[usize]>) -> Result<()> {
    match frames {
        Some(f) if f.len() != cloud.len() => Err(Error::invalid(format!(
            "{} frame ids for {} points",
            f.len(),
            cloud.len()
        ))),
        Some(f) if f.iter().any(|&i| i > u32::MAX as usize) => Err(Error::invalid("frame id exceeds u32")),
        _ => Ok(()),
    }
}

fn header_text(format: &str, n: usize, with_frames: bool) -> String {
    let mut h = format!(
        "ply\nformat {format} 1.0\nelement vertex {n}\nproperty float x\nproperty float y\nproperty float z\n\
         property uchar red\nproperty uchar green\nproperty uchar blue\n"
    );
    if with_frames {
        h.push_str("property uint frame\n");
    }
    h.push_str("end_header\n");
    h
}

/// Binary little-endian encoding: float32 positions, uint8 colors, optional
/// uint32 `frame`.
pub fn encode_ply(cloud: &ColoredPointCloud, frames: Option<&[usize]>) -> Result<Vec<u8>> {
    check_frames(cloud, frames)?;
    let mut out = header_text("binary_little_endian", cloud.len(), frames.is_some()).into_bytes();
    out.reserve(cloud.len() * 19);
    for (i, (p, c)) in cloud.positions().iter().zip(cloud.colors()).enumerate() {
        for v in p.iter() {
            out.extend_from_slice(&(*v as f32).to_le_bytes());
        }
        out.extend(c.iter().map(|&v| to_u8(v)));
        if let Some(f) = frames {
            out.extend_from_slice(&(f[i] as u32).to_le_bytes());
        }
    }
    Ok(out)
}

/// ASCII encoding with the same properties and quantization as [`encode_ply`].
pub fn encode_ply_ascii(cloud: &ColoredPointCloud, frames: Option<&[usize]>) -> Result<String> {
    check_frames(cloud, frames)?;
    let mut out = header_text("ascii", cloud.len(), frames.is_some());
    for (i, (p, c)) in cloud.positions().iter().zip(cloud.colors()).enumerate() {
        let _ = write!(
            out,
            "{} {} {} {} {} {}",
            p.x as f32,
            p.y as f32,
            p.z as f32,
            to_u8(c.x),
            to_u8(c.y),
            to_u8(c.z)
        );
        if let Some(f) = frames {
            let _ = write!(out, " {}", f[i]);
        }
        out.push('\n');
    }
    Ok(out)
}

pub fn write_ply(cloud: &ColoredPointCloud, path: impl AsRef<Path>) -> Result<()> {
    write_ply_data(cloud, None, path)
}

pub fn write_ply_data(cloud: &ColoredPointCloud, frames: Option<&[usize]>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode_ply(cloud, frames)?;
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

//! Compact mesh descriptions such as `squares:40`, `triangles:8:crisscross`,
//! `distorted:8:seed=7`, `refined:4:box=0/0.5/0/0.5/2` or `file:path.mesh`.

use std::fmt;
use std::path::{Path, PathBuf};

use mfv_core::mesh::*;
use mfv_core::{Error, Result};

pub const DEFAULT_JITTER: f64 = 0.25;
pub const DEFAULT_SMOOTH: f64 = 0.05;
pub const DEFAULT_BOX: RefineBox = RefineBox {
    x0: 0.0,
    x1: 0.5,
    y0: 0.0,
    y1: 0.5,
    factor: 2,
};

#[derive(Clone, Debug, PartialEq)]
pub enum Family {
    Squares,
    Triangles(TrianglePattern),
    Refined(Vec<RefineBox>),
    Distorted(Distortion),
}

#[derive(Clone, Debug, PartialEq)]
pub enum MeshSpec {
    Generated { family: Family, n: Option<usize> },
    File(PathBuf),
}

fn bad(spec: &str, why: impl fmt::Display) -> Error {
    Error::Config(format!("mesh spec '{spec}': {why}"))
}

fn parse_num<T: std::str::FromStr>(spec: &str, what: &str, s: &str) -> Result<T> {
    s.parse()
        .map_err(|_| bad(spec, format!("cannot read {what} from '{s}'")))
}

fn parse_box(spec: &str, s: &str) -> Result<RefineBox> {
    let v: Vec<&str> = s.split('/').collect();
    if v.len() != 5 {
        return Err(bad(spec, "box needs x0/x1/y0/y1/factor"));
    }
    Ok(RefineBox {
        x0: parse_num(spec, "x0", v[0])?,
        x1: parse_num(spec, "x1", v[1])?,
        y0: parse_num(spec, "y0", v[2])?,
        y1: parse_num(spec, "y1", v[3])?,
        factor: parse_num(spec, "factor", v[4])?,
    })
}

impl MeshSpec {
    pub fn parse(spec: &str) -> Result<Self> {
        if let Some(path) = spec.strip_prefix("file:") {
            if path.is_empty() {
                return Err(bad(spec, "missing path"));
            }
            return Ok(MeshSpec::File(PathBuf::from(path)));
        }
        let mut parts = spec.split(':');
        let family = parts.next().unwrap_or_default();
        let mut rest: Vec<&str> = parts.collect();
        let n = match rest.first() {
            Some(t) if t.chars().all(|c| c.is_ascii_digit()) && !t.is_empty() => {
                let n: usize = parse_num(spec, "n", t)?;
                rest.remove(0);
                Some(n)
            }
            _ => None,
        };
        let family = match family {
            "squares" => {
                if let Some(opt) = rest.first() {
                    return Err(bad(spec, format!("unknown option '{opt}'")));
                }
                Family::Squares
            }
            "triangles" => {
                let mut pattern = TrianglePattern::Diagonal;
                for opt in rest {
                    pattern = match opt {
                        "diagonal" => TrianglePattern::Diagonal,
                        "crisscross" => TrianglePattern::Crisscross,
                        _ => return Err(bad(spec, format!("unknown option '{opt}'"))),
                    };
                }
                Family::Triangles(pattern)
            }
            "refined" => {
                let mut boxes = Vec::new();
                for opt in rest {
                    match opt.strip_prefix("box=") {
                        Some(b) => boxes.push(parse_box(spec, b)?),
                        None => return Err(bad(spec, format!("unknown option '{opt}'"))),
                    }
                }
                if boxes.is_empty() {
                    boxes.push(DEFAULT_BOX);
                }
                Family::Refined(boxes)
            }
            "distorted" => {
                let (mut smooth, mut seed, mut amp) = (false, 0u64, None);
                for opt in rest {
                    if opt == "smooth" {
                        smooth = true;
                    } else if let Some(s) = opt.strip_prefix("seed=") {
                        seed = parse_num(spec, "seed", s)?;
                    } else if let Some(a) = opt.strip_prefix("amp=") {
                        amp = Some(parse_num(spec, "amplitude", a)?);
                    } else {
                        return Err(bad(spec, format!("unknown option '{opt}'")));
                    }
                }
                Family::Distorted(if smooth {
                    Distortion::Smooth {
                        amplitude: amp.unwrap_or(DEFAULT_SMOOTH),
                    }
                } else {
                    Distortion::Jitter {
                        amplitude: amp.unwrap_or(DEFAULT_JITTER),
                        seed,
                    }
                })
            }
            other => return Err(bad(spec, format!("unknown family '{other}'"))),
        };
        Ok(MeshSpec::Generated { family, n })
    }

    pub fn with_n(&self, n: usize) -> Self {
        match self {
            MeshSpec::Generated { family, .. } => MeshSpec::Generated {
                family: family.clone(),
                n: Some(n),
            },
            MeshSpec::File(p) => MeshSpec::File(p.clone()),
        }
    }

    pub fn is_file(&self) -> bool {
        matches!(self, MeshSpec::File(_))
    }

    pub fn build(&self, point: PointPolicy) -> Result<Mesh> {
        let (family, n) = match self {
            MeshSpec::File(path) => {
                if point != PointPolicy::Centroid {
                    return Err(Error::Config(
                        "circumcenter cell points are only available for generated triangle meshes"
                            .into(),
                    ));
                }
                return read_mesh(path);
            }
            MeshSpec::Generated { family, n } => (
                family,
                n.ok_or_else(|| {
                    Error::Config(format!(
                        "mesh spec '{self}' needs a resolution, e.g. '{self}:8'"
                    ))
                })?,
            ),
        };
        if point != PointPolicy::Centroid && !matches!(family, Family::Triangles(_)) {
            return Err(Error::Config(
                "circumcenter cell points are only available for generated triangle meshes".into(),
            ));
        }
        match family {
            Family::Squares => gen_uniform_squares(n),
            Family::Triangles(pattern) => gen_uniform_triangles(n, *pattern, point),
            Family::Refined(boxes) => gen_refined_nonconforming(n, boxes),
            Family::Distorted(d) => gen_distorted_quads(n, *d),
        }
    }
}

impl fmt::Display for MeshSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (family, n) = match self {
            MeshSpec::File(p) => {
                let name = Path::new(p).file_name().unwrap_or(p.as_os_str());
                return write!(f, "file:{}", name.to_string_lossy());
            }
            MeshSpec::Generated { family, n } => (family, n),
        };
        let name = match family {
            Family::Squares => "squares",
            Family::Triangles(_) => "triangles",
            Family::Refined(_) => "refined",
            Family::Distorted(_) => "distorted",
        };
        f.write_str(name)?;
        if let Some(n) = n {
            write!(f, ":{n}")?;
        }
        match family {
            Family::Squares => Ok(()),
            Family::Triangles(TrianglePattern::Diagonal) => f.write_str(":diagonal"),
            Family::Triangles(TrianglePattern::Crisscross) => f.write_str(":crisscross"),
            Family::Refined(boxes) => boxes.iter().try_for_each(|b| {
                write!(f, ":box={}/{}/{}/{}/{}", b.x0, b.x1, b.y0, b.y1, b.factor)
            }),
            Family::Distorted(Distortion::Jitter { amplitude, seed }) => {
                write!(f, ":seed={seed}:amp={amplitude}")
            }
            Family::Distorted(Distortion::Smooth { amplitude }) => {
                write!(f, ":smooth:amp={amplitude}")
            }
            Family::Distorted(Distortion::None) => Ok(()),
        }
    }
}

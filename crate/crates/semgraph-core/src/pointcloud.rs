//! Point-cloud representation, file IO, seeded subsampling and exact
//! nearest-neighbor queries.
//!
//! Everything here is immutable after construction and safe to share across
//! threads; queries are read-only. Clouds are passed through unchanged (no
//! re-centering or re-scaling) - upstream datasets are assumed pre-normalized.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng::Rng;

/// A 3-D point. Doubles as a 3-vector for the rigid-transform arithmetic.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point3 {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Point3 { x, y, z }
    }

    pub fn zero() -> Self {
        Point3::new(0.0, 0.0, 0.0)
    }

    pub fn add(self, o: Point3) -> Point3 {
        Point3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }

    pub fn sub(self, o: Point3) -> Point3 {
        Point3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }

    pub fn scale(self, s: f64) -> Point3 {
        Point3::new(self.x * s, self.y * s, self.z * s)
    }

    pub fn dot(self, o: Point3) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn cross(self, o: Point3) -> Point3 {
        Point3::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn dist_sq(self, o: Point3) -> f64 {
        self.sub(o).dot(self.sub(o))
    }

    pub fn dist(self, o: Point3) -> f64 {
        self.dist_sq(o).sqrt()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

/// Ordered point set, optionally carrying per-point part labels and a
/// category name. Never empty; labels, when present, match the point count.
#[derive(Clone, Debug)]
pub struct PointCloud {
    points: Vec<Point3>,
    labels: Option<Vec<i64>>,
    category: Option<String>,
}

impl PointCloud {
    pub fn new(points: Vec<Point3>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptyCloud);
        }
        if let Some(p) = points.iter().find(|p| !p.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "non-finite point coordinates {p:?}"
            )));
        }
        Ok(PointCloud {
            points,
            labels: None,
            category: None,
        })
    }

    pub fn with_labels(points: Vec<Point3>, labels: Vec<i64>) -> Result<Self> {
        if labels.len() != points.len() {
            return Err(Error::InvalidArgument(format!(
                "label count {} != point count {}",
                labels.len(),
                points.len()
            )));
        }
        let mut cloud = PointCloud::new(points)?;
        cloud.labels = Some(labels);
        Ok(cloud)
    }

    pub fn points(&self) -> &[Point3] {
        &self.points
    }

    pub fn labels(&self) -> Option<&[i64]> {
        self.labels.as_deref()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        false // invariant: at least one point
    }

    pub fn category(&self) -> Option<&str> {
        self.category.as_deref()
    }

    pub fn set_category(&mut self, category: impl Into<String>) {
        self.category = Some(category.into());
    }

    /// Index and Euclidean distance of the closest point; ties go to the
    /// lowest index.
    pub fn nearest_neighbor(&self, query: Point3) -> (usize, f64) {
        nearest_in(query, &self.points).expect("cloud is non-empty")
    }
}

/// Brute-force nearest neighbor over a slice; `None` on an empty slice.
/// Strict `<` comparison keeps the lowest index on ties.
pub fn nearest_in(query: Point3, points: &[Point3]) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for (i, &p) in points.iter().enumerate() {
        let d = query.dist_sq(p);
        match best {
            Some((_, bd)) if d >= bd => {}
            _ => best = Some((i, d)),
        }
    }
    best.map(|(i, d)| (i, d.sqrt()))
}

/// Symmetric matrix of Euclidean distances, zero diagonal. Each pair is
/// computed once and mirrored so symmetry is exact.
pub fn pairwise_distances(cloud: &PointCloud) -> Matrix {
    let pts = cloud.points();
    let n = pts.len();
    let mut m = Matrix::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let d = pts[i].dist(pts[j]);
            m[(i, j)] = d;
            m[(j, i)] = d;
        }
    }
    m
}

/// Seeded uniform sampling of `n` points without replacement, keeping the
/// original order. Clouds with at most `n` points pass through unchanged;
/// labels are carried along.
pub fn subsample(cloud: &PointCloud, n: usize, seed: u64) -> Result<PointCloud> {
    if n == 0 {
        return Err(Error::InvalidArgument("subsample size 0".into()));
    }
    if cloud.len() <= n {
        return Ok(cloud.clone());
    }
    let mut rng = Rng::new(seed);
    let mut idx: Vec<usize> = (0..cloud.len()).collect();
    for i in 0..n {
        let j = i + rng.below(idx.len() - i);
        idx.swap(i, j);
    }
    let mut chosen = idx[..n].to_vec();
    chosen.sort_unstable();
    let points: Vec<Point3> = chosen.iter().map(|&i| cloud.points[i]).collect();
    let mut out = match &cloud.labels {
        Some(labels) => {
            PointCloud::with_labels(points, chosen.iter().map(|&i| labels[i]).collect())?
        }
        None => PointCloud::new(points)?,
    };
    if let Some(c) = &cloud.category {
        out.set_category(c.clone());
    }
    Ok(out)
}

/// Supported on-disk cloud formats.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CloudFormat {
    /// One point per line: `x y z [label]`, whitespace separated.
    XyzText,
    /// OFF mesh; only the vertex block is read, faces are ignored.
    OffVertices,
}

pub fn load_cloud(path: impl AsRef<Path>, format: CloudFormat) -> Result<PointCloud> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let name = path.display().to_string();
    match format {
        CloudFormat::XyzText => parse_xyz(&name, &text),
        CloudFormat::OffVertices => parse_off(&name, &text),
    }
}

fn parse_xyz(name: &str, text: &str) -> Result<PointCloud> {
    let mut points = Vec::new();
    let mut labels: Vec<i64> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 3 && fields.len() != 4 {
            return Err(Error::parse(
                name,
                lineno + 1,
                format!("expected 3 or 4 columns, found {}", fields.len()),
            ));
        }
        let mut coords = [0.0; 3];
        for (k, f) in fields[..3].iter().enumerate() {
            coords[k] = f
                .parse::<f64>()
                .map_err(|_| Error::parse(name, lineno + 1, format!("invalid coordinate {f:?}")))?;
        }
        if fields.len() == 4 {
            let lab = fields[3].parse::<i64>().map_err(|_| {
                Error::parse(name, lineno + 1, format!("invalid label {:?}", fields[3]))
            })?;
            if labels.len() != points.len() {
                return Err(Error::parse(
                    name,
                    lineno + 1,
                    "label column appears on some lines only",
                ));
            }
            labels.push(lab);
        } else if !labels.is_empty() {
            return Err(Error::parse(
                name,
                lineno + 1,
                "label column appears on some lines only",
            ));
        }
        points.push(Point3::new(coords[0], coords[1], coords[2]));
    }
    if points.is_empty() {
        return Err(Error::EmptyCloud);
    }
    if labels.is_empty() {
        PointCloud::new(points)
    } else {
        PointCloud::with_labels(points, labels)
    }
}

fn parse_off(name: &str, text: &str) -> Result<PointCloud> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

    let (first_no, first) = lines.next().ok_or(Error::EmptyCloud)?;
    // Counts either follow the OFF keyword on the next line or share it
    // ("OFF 4 2 0" appears in the wild).
    let counts_line = if first == "OFF" {
        None
    } else if let Some(rest) = first.strip_prefix("OFF") {
        Some((first_no, rest.trim()))
    } else {
        return Err(Error::parse(name, first_no, "missing OFF header"));
    };
    let (counts_no, counts) = match counts_line {
        Some(c) => c,
        None => lines
            .next()
            .ok_or_else(|| Error::parse(name, first_no, "missing OFF count line"))?,
    };
    let fields: Vec<&str> = counts.split_whitespace().collect();
    if fields.len() < 2 {
        return Err(Error::parse(
            name,
            counts_no,
            "expected vertex and face counts",
        ));
    }
    let n_vertices: usize = fields[0].parse().map_err(|_| {
        Error::parse(
            name,
            counts_no,
            format!("invalid vertex count {:?}", fields[0]),
        )
    })?;

    let mut points = Vec::with_capacity(n_vertices);
    for _ in 0..n_vertices {
        let (lineno, line) = lines
            .next()
            .ok_or_else(|| Error::parse(name, counts_no, "truncated vertex block"))?;
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() < 3 {
            return Err(Error::parse(name, lineno, "expected 3 vertex coordinates"));
        }
        let mut coords = [0.0; 3];
        for (k, f) in fields[..3].iter().enumerate() {
            coords[k] = f
                .parse::<f64>()
                .map_err(|_| Error::parse(name, lineno, format!("invalid coordinate {f:?}")))?;
        }
        points.push(Point3::new(coords[0], coords[1], coords[2]));
    }
    // Face lines are intentionally not parsed.
    if points.is_empty() {
        return Err(Error::EmptyCloud);
    }
    PointCloud::new(points)
}

/// Write a cloud in xyz-text form, appending the label column when present.
pub fn save_xyz(cloud: &PointCloud, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::new();
    for (i, p) in cloud.points().iter().enumerate() {
        match cloud.labels() {
            Some(labels) => writeln!(out, "{} {} {} {}", p.x, p.y, p.z, labels[i]),
            None => writeln!(out, "{} {} {}", p.x, p.y, p.z),
        }
        .expect("string write");
    }
    fs::write(path, out).map_err(|e| Error::io(path.display().to_string(), e))
}

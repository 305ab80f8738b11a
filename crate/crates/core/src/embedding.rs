//! Finite ultrametric spaces and their isometric embeddings into `Q_p`.
//!
//! The distinct positive distances `δ_1 < δ_2 < … < δ_K` of the space are
//! sent to `p^1, p^2, …, p^K`. Each point becomes a leaf of the window
//! `[0, K]`, its digits chosen so that two points whose smallest common
//! cluster has height `δ_i` first differ at the digit of exponent `-i`.

use std::collections::BTreeSet;
use std::fmt;

use num_rational::BigRational;
use num_traits::{Signed, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::measure::MeasureTree;
use crate::padic::{ball_of, BallAddress, Base, Window};
use crate::rational::{format_rational, parse_rational};

#[derive(Clone, Debug, PartialEq)]
pub struct FiniteUltrametricSpace {
    labels: Vec<String>,
    dist: Vec<Vec<BigRational>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    NonzeroSelfDistance {
        point: String,
    },
    NonPositiveDistance {
        a: String,
        b: String,
    },
    /// The largest of the three pairwise distances is attained only once.
    StrongTriangle {
        x: String,
        y: String,
        z: String,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NonzeroSelfDistance { point } => write!(f, "d({point}, {point}) != 0"),
            Violation::NonPositiveDistance { a, b } => write!(f, "d({a}, {b}) <= 0"),
            Violation::StrongTriangle { x, y, z } => {
                write!(f, "strong triangle inequality fails on ({x}, {y}, {z})")
            }
        }
    }
}

impl FiniteUltrametricSpace {
    /// Requires a square symmetric matrix; the ultrametric axioms are checked
    /// by [`validate_ultrametric`].
    pub fn new(labels: Vec<String>, dist: Vec<Vec<BigRational>>) -> Result<Self> {
        let n = labels.len();
        if dist.len() != n || dist.iter().any(|r| r.len() != n) {
            return Err(Error::MalformedSpace(format!("expected a {n}x{n} matrix")));
        }
        if labels.iter().collect::<BTreeSet<_>>().len() != n {
            return Err(Error::MalformedSpace("duplicate labels".into()));
        }
        for i in 0..n {
            for j in 0..i {
                if dist[i][j] != dist[j][i] {
                    return Err(Error::MalformedSpace(format!(
                        "d({}, {}) != d({}, {})",
                        labels[i], labels[j], labels[j], labels[i]
                    )));
                }
            }
        }
        Ok(FiniteUltrametricSpace { labels, dist })
    }

    /// A header row of labels followed by the square numeric body. Body rows
    /// may start with their label.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .flexible(true)
            .from_reader(text.as_bytes());
        let mut rows = Vec::new();
        for record in reader.records() {
            let record = record.map_err(|e| Error::Parse(e.to_string()))?;
            if record.iter().all(str::is_empty) {
                continue;
            }
            rows.push(record.iter().map(str::to_owned).collect::<Vec<_>>());
        }
        let Some((header, body)) = rows.split_first() else {
            return Self::new(Vec::new(), Vec::new());
        };
        let mut labels = header.clone();
        let n = body.len();
        if labels.len() == n + 1 && labels[0].is_empty() {
            labels.remove(0);
        }
        let dist = body
            .iter()
            .map(|row| {
                let cells = if row.len() == n + 1 {
                    &row[1..]
                } else {
                    &row[..]
                };
                cells
                    .iter()
                    .map(|c| parse_rational(c))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(labels, dist)
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn distance(&self, i: usize, j: usize) -> &BigRational {
        &self.dist[i][j]
    }

    /// Distinct positive distances, ascending.
    pub fn distance_values(&self) -> Vec<BigRational> {
        let set: BTreeSet<_> = self
            .dist
            .iter()
            .flatten()
            .filter(|d| d.is_positive())
            .cloned()
            .collect();
        set.into_iter().collect()
    }
}

pub fn validate_ultrametric(space: &FiniteUltrametricSpace) -> Vec<Violation> {
    let n = space.len();
    let l = &space.labels;
    let d = &space.dist;
    let mut out = Vec::new();
    for i in 0..n {
        if !d[i][i].is_zero() {
            out.push(Violation::NonzeroSelfDistance {
                point: l[i].clone(),
            });
        }
        for j in i + 1..n {
            if !d[i][j].is_positive() {
                out.push(Violation::NonPositiveDistance {
                    a: l[i].clone(),
                    b: l[j].clone(),
                });
            }
        }
    }
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                let mut sides = [&d[i][j], &d[j][k], &d[i][k]];
                sides.sort();
                if sides[1] != sides[2] {
                    out.push(Violation::StrongTriangle {
                        x: l[i].clone(),
                        y: l[j].clone(),
                        z: l[k].clone(),
                    });
                }
            }
        }
    }
    out
}

/// Merge tree of an ultrametric space: the distance between two points is
/// the height of their smallest common cluster.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Dendrogram {
    Leaf(String),
    Node {
        height: BigRational,
        children: Vec<Dendrogram>,
    },
}

impl Dendrogram {
    /// Clusters are the classes of `d < height` inside each parent cluster,
    /// ordered by their first point in the space's order.
    pub fn from_space(space: &FiniteUltrametricSpace) -> Result<Self> {
        let violations = validate_ultrametric(space);
        if !violations.is_empty() {
            return Err(Error::NotUltrametric(violations));
        }
        if space.is_empty() {
            return Err(Error::MalformedSpace(
                "empty space has no dendrogram".into(),
            ));
        }
        Ok(Self::build(space, (0..space.len()).collect()))
    }

    fn build(space: &FiniteUltrametricSpace, points: Vec<usize>) -> Self {
        if points.len() == 1 {
            return Dendrogram::Leaf(space.labels[points[0]].clone());
        }
        let height = points
            .iter()
            .flat_map(|&i| points.iter().map(move |&j| space.distance(i, j)))
            .max()
            .expect("at least two points")
            .clone();
        let mut classes: Vec<Vec<usize>> = Vec::new();
        for &i in &points {
            match classes
                .iter_mut()
                .find(|c| space.distance(c[0], i) < &height)
            {
                Some(c) => c.push(i),
                None => classes.push(vec![i]),
            }
        }
        Dendrogram::Node {
            height,
            children: classes.into_iter().map(|c| Self::build(space, c)).collect(),
        }
    }

    /// Parses `((u1,u2):1,u3):2`: a leaf is a label, a cluster is a
    /// parenthesized list followed by `:height`.
    pub fn parse(text: &str) -> Result<Self> {
        let chars: Vec<char> = text.chars().filter(|c| !c.is_whitespace()).collect();
        let mut pos = 0;
        let tree = parse_node(&chars, &mut pos)?;
        if pos != chars.len() {
            return Err(Error::Parse(format!("trailing input at position {pos}")));
        }
        Ok(tree)
    }

    pub fn height(&self) -> BigRational {
        match self {
            Dendrogram::Leaf(_) => BigRational::zero(),
            Dendrogram::Node { height, .. } => height.clone(),
        }
    }

    pub fn labels(&self) -> Vec<String> {
        match self {
            Dendrogram::Leaf(l) => vec![l.clone()],
            Dendrogram::Node { children, .. } => {
                children.iter().flat_map(Dendrogram::labels).collect()
            }
        }
    }

    /// Every internal node as `(height, sorted labels)`, sorted.
    pub fn clusters(&self) -> Vec<(BigRational, Vec<String>)> {
        let mut out = Vec::new();
        self.collect_clusters(&mut out);
        out.sort();
        out
    }

    fn collect_clusters(&self, out: &mut Vec<(BigRational, Vec<String>)>) {
        if let Dendrogram::Node { height, children } = self {
            let mut labels = self.labels();
            labels.sort();
            out.push((height.clone(), labels));
            for c in children {
                c.collect_clusters(out);
            }
        }
    }

    /// The ultrametric the tree encodes; points in leaf order.
    pub fn to_space(&self) -> Result<FiniteUltrametricSpace> {
        let labels = self.labels();
        let n = labels.len();
        let mut dist = vec![vec![BigRational::zero(); n]; n];
        self.fill(&mut dist, 0);
        FiniteUltrametricSpace::new(labels, dist)
    }

    fn fill(&self, dist: &mut [Vec<BigRational>], offset: usize) -> usize {
        match self {
            Dendrogram::Leaf(_) => 1,
            Dendrogram::Node { height, children } => {
                let mut starts = Vec::new();
                let mut at = offset;
                for c in children {
                    let size = c.fill(dist, at);
                    starts.push((at, size));
                    at += size;
                }
                #[allow(clippy::needless_range_loop)]
                for (a, &(sa, na)) in starts.iter().enumerate() {
                    for &(sb, nb) in &starts[a + 1..] {
                        for i in sa..sa + na {
                            for j in sb..sb + nb {
                                dist[i][j] = height.clone();
                                dist[j][i] = height.clone();
                            }
                        }
                    }
                }
                at - offset
            }
        }
    }
}

fn parse_node(chars: &[char], pos: &mut usize) -> Result<Dendrogram> {
    if chars.get(*pos) == Some(&'(') {
        *pos += 1;
        let mut children = vec![parse_node(chars, pos)?];
        while chars.get(*pos) == Some(&',') {
            *pos += 1;
            children.push(parse_node(chars, pos)?);
        }
        if chars.get(*pos) != Some(&')') {
            return Err(Error::Parse(format!("expected ')' at position {pos}")));
        }
        *pos += 1;
        if chars.get(*pos) != Some(&':') {
            return Err(Error::Parse(format!(
                "expected ':height' at position {pos}"
            )));
        }
        *pos += 1;
        let start = *pos;
        while *pos < chars.len() && !matches!(chars[*pos], ',' | ')') {
            *pos += 1;
        }
        let height: String = chars[start..*pos].iter().collect();
        let height = parse_rational(&height)?;
        if !height.is_positive() {
            return Err(Error::Parse("cluster heights must be positive".into()));
        }
        for c in &children {
            if c.height() >= height {
                return Err(Error::Parse(format!(
                    "cluster height {} does not exceed its sub-cluster",
                    format_rational(&height)
                )));
            }
        }
        Ok(Dendrogram::Node { height, children })
    } else {
        let start = *pos;
        while *pos < chars.len() && !matches!(chars[*pos], ',' | ')' | '(' | ':') {
            *pos += 1;
        }
        if start == *pos {
            return Err(Error::Parse(format!(
                "expected a label at position {start}"
            )));
        }
        Ok(Dendrogram::Leaf(chars[start..*pos].iter().collect()))
    }
}

/// Point labels mapped to leaves of the window `[0, K]`.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingResult {
    base: Base,
    window: Window,
    /// `level_map[i - 1] = δ_i`.
    levels: Vec<BigRational>,
    assignment: Vec<(String, BallAddress)>,
}

impl EmbeddingResult {
    pub fn base(&self) -> Base {
        self.base
    }

    /// `[0, K]` with `K` the number of distinct positive distances.
    pub fn window(&self) -> Window {
        self.window
    }

    pub fn assignment(&self) -> &[(String, BallAddress)] {
        &self.assignment
    }

    pub fn get(&self, label: &str) -> Option<&BallAddress> {
        self.assignment
            .iter()
            .find(|(l, _)| l == label)
            .map(|(_, b)| b)
    }

    /// `(δ_i, i)` pairs, ascending.
    pub fn level_map(&self) -> impl Iterator<Item = (&BigRational, i32)> {
        self.levels.iter().zip(1..)
    }

    pub fn level_of(&self, delta: &BigRational) -> Option<i32> {
        self.levels.binary_search(delta).ok().map(|i| i as i32 + 1)
    }

    /// Exact check that `|x_u - x_v|_p = p^{level(δ(u, v))}` for all pairs.
    pub fn is_isometric_to(&self, space: &FiniteUltrametricSpace) -> Result<bool> {
        if space.labels()
            != self
                .assignment
                .iter()
                .map(|(l, _)| l.clone())
                .collect::<Vec<_>>()
        {
            return Ok(false);
        }
        for i in 0..space.len() {
            for j in i + 1..space.len() {
                let xi = self.assignment[i].1.center();
                let xj = self.assignment[j].1.center();
                let Some(level) = self.level_of(space.distance(i, j)) else {
                    return Ok(false);
                };
                if xi.distance(&xj)? != self.base.pow(level as i64) {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }

    /// Density `leaf_density` on the finest ball of `window` around each
    /// embedded point.
    pub fn to_measure_tree(
        &self,
        window: Window,
        leaf_density: BigRational,
    ) -> Result<MeasureTree> {
        if !leaf_density.is_positive() {
            return Err(Error::NegativeValue {
                leaf: "<density>".into(),
                value: format_rational(&leaf_density),
            });
        }
        let required = self.window.gamma_max();
        if window.gamma_min() > 0 || window.gamma_max() < required {
            return Err(Error::WindowTooShallow {
                gamma_min: window.gamma_min(),
                gamma_max: window.gamma_max(),
                required,
            });
        }
        let mut density =
            vec![BigRational::zero(); (self.base.get() as usize).pow(window.depth() as u32)];
        for (_, leaf) in &self.assignment {
            let ball = ball_of(&leaf.center(), window.gamma_min(), window)?;
            density[ball.index()] = leaf_density.clone();
        }
        MeasureTree::from_leaf_densities(self.base, window, density)
    }

    pub fn report(&self) -> EmbeddingReport {
        EmbeddingReport {
            p: self.base.get(),
            gamma_min: self.window.gamma_min(),
            gamma_max: self.window.gamma_max(),
            level_map: self
                .level_map()
                .map(|(d, i)| LevelEntry {
                    delta: format_rational(d),
                    level: i,
                })
                .collect(),
            assignment: self
                .assignment
                .iter()
                .map(|(l, b)| AssignmentEntry {
                    label: l.clone(),
                    path: b.path_string(),
                    point: format_rational(&b.center().to_rational()),
                })
                .collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EmbeddingReport {
    pub p: u32,
    pub gamma_min: i32,
    pub gamma_max: i32,
    pub level_map: Vec<LevelEntry>,
    pub assignment: Vec<AssignmentEntry>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LevelEntry {
    pub delta: String,
    pub level: i32,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AssignmentEntry {
    pub label: String,
    pub path: String,
    pub point: String,
}

/// Embeds `space` into `Q_p`, children of each cluster receiving digits
/// `0, 1, …` in order of their first point.
pub fn embed(space: &FiniteUltrametricSpace, base: Base) -> Result<EmbeddingResult> {
    let levels = space.distance_values();
    let window = Window::new(0, levels.len() as i32)?;
    if space.is_empty() {
        return Ok(EmbeddingResult {
            base,
            window,
            levels,
            assignment: Vec::new(),
        });
    }
    let tree = Dendrogram::from_space(space)?;
    let depth = window.depth();
    let mut paths = Vec::new();
    assign(&tree, &levels, base, depth, Vec::new(), &mut paths)?;
    let mut assignment = Vec::with_capacity(paths.len());
    for label in space.labels() {
        let path = paths
            .iter()
            .find(|(l, _)| l == label)
            .map(|(_, p)| p.clone())
            .expect("every label is a leaf");
        assignment.push((label.clone(), BallAddress::new(base, window, path)?));
    }
    Ok(EmbeddingResult {
        base,
        window,
        levels,
        assignment,
    })
}

fn assign(
    node: &Dendrogram,
    levels: &[BigRational],
    base: Base,
    depth: usize,
    mut prefix: Vec<u8>,
    out: &mut Vec<(String, Vec<u8>)>,
) -> Result<()> {
    match node {
        Dendrogram::Leaf(label) => {
            prefix.resize(depth, 0);
            out.push((label.clone(), prefix));
        }
        Dendrogram::Node { height, children } => {
            if children.len() > base.get() as usize {
                let mut labels = node.labels();
                labels.sort();
                return Err(Error::BranchOverflow {
                    node: format!("{{{}}}", labels.join(",")),
                    count: children.len(),
                    base: base.get(),
                });
            }
            let level = levels
                .binary_search(height)
                .expect("height is a distance value")
                + 1;
            prefix.resize(depth - level, 0);
            for (digit, child) in children.iter().enumerate() {
                let mut next = prefix.clone();
                next.push(digit as u8);
                assign(child, levels, base, depth, next, out)?;
            }
        }
    }
    Ok(())
}

//! Sensing-network layout, body footprints and Fresnel-region membership.

use std::collections::HashMap;
use std::f64::consts::{PI, TAU};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::diffraction::{LinkGeometry, Point3};
use crate::error::{Error, Result};
use crate::rng::rng_from_seed;

pub type Point2 = [f64; 2];

/// Pose and body dimensions of one subject.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TargetParams {
    /// Floor position (x, y) in meters.
    pub position: Point2,
    /// Heading of the anteroposterior axis, radians.
    pub orientation: f64,
    pub height: f64,
    /// Anteroposterior dimension (the larger one).
    pub width_ap: f64,
    /// Lateral dimension.
    pub width_lat: f64,
}

impl TargetParams {
    pub fn new(
        position: Point2,
        orientation: f64,
        height: f64,
        width_ap: f64,
        width_lat: f64,
    ) -> Result<Self> {
        let t = Self {
            position,
            orientation,
            height,
            width_ap,
            width_lat,
        };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.height > 0.0 && self.width_ap > 0.0 && self.width_lat > 0.0) {
            return Err(Error::InvalidArgument(
                "target dimensions must be positive".into(),
            ));
        }
        if self.width_lat > self.width_ap {
            return Err(Error::InvalidArgument(format!(
                "lateral width {} exceeds anteroposterior width {}",
                self.width_lat, self.width_ap
            )));
        }
        if !(self.position[0].is_finite() && self.position[1].is_finite()) {
            return Err(Error::InvalidArgument("non-finite target position".into()));
        }
        Ok(())
    }

    /// Same body, placed and oriented elsewhere.
    pub fn posed(profile: &SubjectProfile, position: Point2, orientation: f64) -> Self {
        Self {
            position,
            orientation,
            height: profile.height,
            width_ap: profile.width_ap,
            width_lat: profile.width_lat,
        }
    }
}

/// Body dimensions shared by a class of subjects.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubjectProfile {
    pub name: String,
    pub height: f64,
    pub width_ap: f64,
    pub width_lat: f64,
}

impl SubjectProfile {
    pub fn new(name: &str, height: f64, width_ap: f64, width_lat: f64) -> Result<Self> {
        let p = Self {
            name: name.to_string(),
            height,
            width_ap,
            width_lat,
        };
        TargetParams::posed(&p, [0.0, 0.0], 0.0).validate()?;
        Ok(p)
    }

    pub fn subject_a() -> Self {
        Self::new("A", 2.0, 0.65, 0.25).expect("preset")
    }

    pub fn subject_b() -> Self {
        Self::new("B", 1.6, 0.55, 0.25).expect("preset")
    }

    pub fn subject_c() -> Self {
        Self::new("C", 1.4, 0.55, 0.25).expect("preset")
    }

    /// Preset by name (`A`, `B`, `C`, case-insensitive).
    pub fn preset(name: &str) -> Option<Self> {
        match name.to_ascii_uppercase().as_str() {
            "A" => Some(Self::subject_a()),
            "B" => Some(Self::subject_b()),
            "C" => Some(Self::subject_c()),
            _ => None,
        }
    }
}

/// Axis-aligned monitored rectangle with a corner at the origin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Area {
    pub width: f64,
    pub height: f64,
}

impl Area {
    pub fn new(width: f64, height: f64) -> Result<Self> {
        if !(width > 0.0 && height > 0.0) || !width.is_finite() || !height.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "area dimensions must be positive, got {width} x {height}"
            )));
        }
        Ok(Self { width, height })
    }

    pub fn square(side: f64) -> Result<Self> {
        Self::new(side, side)
    }

    pub fn size(&self) -> f64 {
        self.width * self.height
    }

    pub fn perimeter(&self) -> f64 {
        2.0 * (self.width + self.height)
    }

    fn on_perimeter(&self, x: f64, y: f64) -> bool {
        const EPS: f64 = 1e-9;
        let inside = x >= -EPS && x <= self.width + EPS && y >= -EPS && y <= self.height + EPS;
        let on_edge = x.abs() < EPS
            || (x - self.width).abs() < EPS
            || y.abs() < EPS
            || (y - self.height).abs() < EPS;
        inside && on_edge
    }

    /// Point at arc length `s` along the perimeter, counter-clockwise from the origin.
    fn perimeter_point(&self, s: f64) -> Point2 {
        let (w, h) = (self.width, self.height);
        let s = s.rem_euclid(self.perimeter());
        if s < w {
            [s, 0.0]
        } else if s < w + h {
            [w, s - w]
        } else if s < 2.0 * w + h {
            [w - (s - w - h), h]
        } else {
            [0.0, h - (s - 2.0 * w - h)]
        }
    }
}

/// How nodes are distributed along the perimeter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NodePlacement {
    /// `round(side / spacing)` nodes per side, starting at each side's origin corner.
    Spacing(f64),
    /// This many nodes at equal arc-length intervals, the first at the origin.
    Count(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub enum LinkRule {
    /// Every ordered pair (u, v), u != v.
    AllPairs,
    Custom(Vec<(usize, usize)>),
}

/// The sensing graph: RF nodes on the perimeter and the active links between them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GraphDocument", into = "GraphDocument")]
pub struct NetworkGraph {
    node_positions: Vec<Point3>,
    labels: Vec<String>,
    links: Vec<(usize, usize)>,
    node_height: f64,
    area: Area,
    neighbors: Vec<Vec<usize>>,
    link_index: HashMap<(usize, usize), usize>,
}

/// On-disk form of [`NetworkGraph`].
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphDocument {
    pub nodes: Vec<Point3>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
    pub links: Vec<(usize, usize)>,
    pub node_height: f64,
    pub area: Area,
}

impl TryFrom<GraphDocument> for NetworkGraph {
    type Error = Error;

    fn try_from(doc: GraphDocument) -> Result<Self> {
        NetworkGraph::from_parts(doc.nodes, doc.labels, doc.links, doc.node_height, doc.area)
    }
}

impl From<NetworkGraph> for GraphDocument {
    fn from(g: NetworkGraph) -> Self {
        let default_labels = g
            .labels
            .iter()
            .enumerate()
            .all(|(i, l)| *l == i.to_string());
        GraphDocument {
            nodes: g.node_positions,
            labels: if default_labels { None } else { Some(g.labels) },
            links: g.links,
            node_height: g.node_height,
            area: g.area,
        }
    }
}

impl NetworkGraph {
    /// Validated graph. Labels default to the node indices.
    pub fn from_parts(
        node_positions: Vec<Point3>,
        labels: Option<Vec<String>>,
        links: Vec<(usize, usize)>,
        node_height: f64,
        area: Area,
    ) -> Result<Self> {
        let n = node_positions.len();
        let labels = labels.unwrap_or_else(|| (0..n).map(|i| i.to_string()).collect());
        if labels.len() != n {
            return Err(Error::InvalidArgument(format!(
                "{} labels for {n} nodes",
                labels.len()
            )));
        }
        for (i, p) in node_positions.iter().enumerate() {
            if !area.on_perimeter(p[0], p[1]) {
                return Err(Error::InvalidArgument(format!(
                    "node {i} at ({}, {}) is not on the area perimeter",
                    p[0], p[1]
                )));
            }
        }
        let mut neighbors = vec![Vec::new(); n];
        let mut link_index = HashMap::with_capacity(links.len());
        for (idx, &(u, v)) in links.iter().enumerate() {
            if u >= n || v >= n {
                return Err(Error::InvalidArgument(format!(
                    "link ({u}, {v}) references a missing node"
                )));
            }
            if u == v {
                return Err(Error::InvalidArgument(format!("self-loop at node {u}")));
            }
            if link_index.insert((u, v), idx).is_some() {
                return Err(Error::InvalidArgument(format!("duplicate link ({u}, {v})")));
            }
            neighbors[u].push(v);
        }
        for list in &mut neighbors {
            list.sort_unstable();
        }
        Ok(Self {
            node_positions,
            labels,
            links,
            node_height,
            area,
            neighbors,
            link_index,
        })
    }

    pub fn num_nodes(&self) -> usize {
        self.node_positions.len()
    }

    pub fn num_links(&self) -> usize {
        self.links.len()
    }

    pub fn node_positions(&self) -> &[Point3] {
        &self.node_positions
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn links(&self) -> &[(usize, usize)] {
        &self.links
    }

    pub fn node_height(&self) -> f64 {
        self.node_height
    }

    pub fn area(&self) -> Area {
        self.area
    }

    /// Ascending neighbor list of `u`.
    pub fn neighbors(&self, u: usize) -> &[usize] {
        &self.neighbors[u]
    }

    pub fn max_degree(&self) -> usize {
        self.neighbors.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn link_index(&self, u: usize, v: usize) -> Option<usize> {
        self.link_index.get(&(u, v)).copied()
    }

    /// Binary adjacency matrix, row-major.
    pub fn adjacency(&self) -> Vec<Vec<u8>> {
        let n = self.num_nodes();
        let mut d = vec![vec![0u8; n]; n];
        for &(u, v) in &self.links {
            d[u][v] = 1;
        }
        d
    }

    pub fn link_geometry(&self, link: usize) -> LinkGeometry {
        let (u, v) = self.links[link];
        LinkGeometry::new(self.node_positions[u], self.node_positions[v])
            .expect("validated graph has distinct node positions per link")
    }

    /// Node index for a label.
    pub fn node_by_label(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn to_document(&self) -> GraphDocument {
        self.clone().into()
    }
}

/// Nodes evenly placed on the perimeter of `area`, all at `node_height`.
pub fn build_perimeter_network(
    area: Area,
    placement: NodePlacement,
    node_height: f64,
    rule: LinkRule,
) -> Result<NetworkGraph> {
    let (w, h) = (area.width, area.height);
    let floor: Vec<Point2> = match placement {
        NodePlacement::Spacing(spacing) => {
            if !(spacing > 0.0) || spacing >= w.min(h) {
                return Err(Error::InvalidSpacing(format!(
                    "spacing {spacing} must be in (0, {})",
                    w.min(h)
                )));
            }
            let nx = (w / spacing).round() as usize;
            let ny = (h / spacing).round() as usize;
            let mut pts = Vec::with_capacity(2 * (nx + ny));
            for i in 0..nx {
                pts.push([i as f64 * w / nx as f64, 0.0]);
            }
            for i in 0..ny {
                pts.push([w, i as f64 * h / ny as f64]);
            }
            for i in 0..nx {
                pts.push([w - i as f64 * w / nx as f64, h]);
            }
            for i in 0..ny {
                pts.push([0.0, h - i as f64 * h / ny as f64]);
            }
            pts
        }
        NodePlacement::Count(count) => {
            let step = area.perimeter() / count.max(1) as f64;
            (0..count).map(|i| area.perimeter_point(i as f64 * step)).collect()
        }
    };
    if floor.len() < 2 {
        return Err(Error::InvalidSpacing(format!(
            "placement yields {} node(s), need at least 2",
            floor.len()
        )));
    }
    let n = floor.len();
    let nodes: Vec<Point3> = floor.iter().map(|p| [p[0], p[1], node_height]).collect();
    let links = match rule {
        LinkRule::AllPairs => {
            let mut l = Vec::with_capacity(n * (n - 1));
            for u in 0..n {
                for v in 0..n {
                    if u != v {
                        l.push((u, v));
                    }
                }
            }
            l
        }
        LinkRule::Custom(l) => l,
    };
    NetworkGraph::from_parts(nodes, None, links, node_height, area)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ellipse2D {
    pub center: Point2,
    pub semi_major: f64,
    pub semi_minor: f64,
    /// Direction of the major axis, radians.
    pub azimuth: f64,
}

impl Ellipse2D {
    pub fn area(&self) -> f64 {
        PI * self.semi_major * self.semi_minor
    }

    /// Coordinates of `p` in the ellipse's own frame.
    pub fn local(&self, p: Point2) -> Point2 {
        let (s, c) = self.azimuth.sin_cos();
        let dx = p[0] - self.center[0];
        let dy = p[1] - self.center[1];
        [dx * c + dy * s, -dx * s + dy * c]
    }

    pub fn contains(&self, p: Point2) -> bool {
        let [x, y] = self.local(p);
        let a = x / self.semi_major;
        let b = y / self.semi_minor;
        a * a + b * b <= 1.0
    }
}

/// Floor projection of the first Fresnel ellipsoid of `link`.
pub fn fresnel_floor_ellipse(graph: &NetworkGraph, link: usize, wavelength: f64) -> Ellipse2D {
    fresnel_ellipse_for(&graph.link_geometry(link), wavelength)
}

fn fresnel_ellipse_for(link: &LinkGeometry, wavelength: f64) -> Ellipse2D {
    let d = link.length_d;
    let semi_major = 0.5 * (d + 0.5 * wavelength);
    let semi_minor = 0.5 * (wavelength * d + 0.25 * wavelength * wavelength).sqrt();
    Ellipse2D {
        center: [
            0.5 * (link.tx_position[0] + link.rx_position[0]),
            0.5 * (link.tx_position[1] + link.rx_position[1]),
        ],
        semi_major,
        semi_minor,
        azimuth: link.azimuth(),
    }
}

/// Floor footprint of a body.
pub fn footprint_ellipse(target: &TargetParams) -> Ellipse2D {
    Ellipse2D {
        center: target.position,
        semi_major: 0.5 * target.width_ap,
        semi_minor: 0.5 * target.width_lat,
        azimuth: target.orientation,
    }
}

/// Width of the body projected perpendicular to a link with azimuth `link_azimuth`.
pub fn effective_width(target: &TargetParams, link_azimuth: f64) -> f64 {
    let a = 0.5 * target.width_ap;
    let b = 0.5 * target.width_lat;
    let (s, c) = (target.orientation - link_azimuth).sin_cos();
    2.0 * ((a * s).powi(2) + (b * c).powi(2)).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MembershipConfig {
    /// Minimum footprint fraction inside the Fresnel region.
    pub overlap_threshold: f64,
    pub footprint_samples: usize,
}

impl Default for MembershipConfig {
    fn default() -> Self {
        Self {
            overlap_threshold: 0.5,
            footprint_samples: 256,
        }
    }
}

impl MembershipConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.overlap_threshold > 0.0 && self.overlap_threshold <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "overlap_threshold must be in (0, 1], got {}",
                self.overlap_threshold
            )));
        }
        if self.footprint_samples < 32 {
            return Err(Error::InvalidArgument(format!(
                "footprint_samples must be >= 32, got {}",
                self.footprint_samples
            )));
        }
        Ok(())
    }

    /// Smallest inside-count that makes a member.
    fn required_count(&self) -> usize {
        ((self.overlap_threshold * self.footprint_samples as f64) - 1e-9).ceil() as usize
    }
}

/// Deterministic equal-area point set on the unit disk (sunflower lattice).
#[derive(Debug, Clone)]
pub struct FootprintSampler {
    unit: Vec<Point2>,
    required: usize,
}

impl FootprintSampler {
    pub fn new(cfg: &MembershipConfig) -> Result<Self> {
        cfg.validate()?;
        let n = cfg.footprint_samples;
        let golden = PI * (3.0 - 5f64.sqrt());
        let unit = (0..n)
            .map(|i| {
                let r = ((i as f64 + 0.5) / n as f64).sqrt();
                let (s, c) = (i as f64 * golden).sin_cos();
                [r * c, r * s]
            })
            .collect();
        Ok(Self {
            unit,
            required: cfg.required_count(),
        })
    }

    pub fn len(&self) -> usize {
        self.unit.len()
    }

    pub fn is_empty(&self) -> bool {
        self.unit.is_empty()
    }

    /// Sample points inside the footprint of `target`, world coordinates.
    pub fn footprint_points(&self, target: &TargetParams) -> Vec<Point2> {
        let a = 0.5 * target.width_ap;
        let b = 0.5 * target.width_lat;
        let (s, c) = target.orientation.sin_cos();
        self.unit
            .iter()
            .map(|&[x, y]| {
                let (lx, ly) = (a * x, b * y);
                [
                    target.position[0] + lx * c - ly * s,
                    target.position[1] + lx * s + ly * c,
                ]
            })
            .collect()
    }

    /// Fraction of footprint samples inside `region`.
    pub fn overlap_fraction(&self, target: &TargetParams, region: &Ellipse2D) -> f64 {
        let pts = self.footprint_points(target);
        let inside = pts.iter().filter(|p| region.contains(**p)).count();
        inside as f64 / pts.len() as f64
    }

    fn is_member(&self, points: &[Point2], region: &PreparedEllipse) -> bool {
        region.count_at_least(points, self.required)
    }
}

/// Fresnel region in a form cheap to test many points against.
#[derive(Debug, Clone, Copy)]
struct PreparedEllipse {
    cx: f64,
    cy: f64,
    cos: f64,
    sin: f64,
    inv_a2: f64,
    inv_b2: f64,
    a: f64,
    b: f64,
}

impl PreparedEllipse {
    fn new(e: &Ellipse2D) -> Self {
        let (sin, cos) = e.azimuth.sin_cos();
        Self {
            cx: e.center[0],
            cy: e.center[1],
            cos,
            sin,
            inv_a2: 1.0 / (e.semi_major * e.semi_major),
            inv_b2: 1.0 / (e.semi_minor * e.semi_minor),
            a: e.semi_major,
            b: e.semi_minor,
        }
    }

    /// True iff at least `required` of `points` fall inside.
    fn count_at_least(&self, points: &[Point2], required: usize) -> bool {
        if required == 0 {
            return true;
        }
        let total = points.len();
        let mut inside = 0usize;
        for (seen, p) in points.iter().enumerate() {
            let dx = p[0] - self.cx;
            let dy = p[1] - self.cy;
            let x = dx * self.cos + dy * self.sin;
            let y = -dx * self.sin + dy * self.cos;
            if x * x * self.inv_a2 + y * y * self.inv_b2 <= 1.0 {
                inside += 1;
                if inside >= required {
                    return true;
                }
            }
            if inside + (total - seen - 1) < required {
                return false;
            }
        }
        false
    }

    /// No point within `reach` of `c` can be inside.
    fn far_from(&self, c: Point2, reach: f64) -> bool {
        let dx = c[0] - self.cx;
        let dy = c[1] - self.cy;
        let x = dx * self.cos + dy * self.sin;
        let y = -dx * self.sin + dy * self.cos;
        x.abs() > self.a + reach || y.abs() > self.b + reach
    }
}

/// Whether `target` lies in the Fresnel region of `link`: at least
/// `overlap_threshold` of its footprint samples fall inside the floor ellipse.
pub fn fresnel_membership(
    target: &TargetParams,
    link: usize,
    graph: &NetworkGraph,
    wavelength: f64,
    cfg: &MembershipConfig,
) -> Result<bool> {
    let sampler = FootprintSampler::new(cfg)?;
    let region = fresnel_floor_ellipse(graph, link, wavelength);
    let pts = sampler.footprint_points(target);
    Ok(sampler.is_member(&pts, &PreparedEllipse::new(&region)))
}

/// Fresnel regions of every link of a graph, computed once per unordered
/// node pair (both directions share the same region).
#[derive(Debug, Clone)]
pub struct FresnelTable {
    regions: Vec<PreparedEllipse>,
    /// Ordered link indices per unordered pair, ascending.
    members: Vec<Vec<usize>>,
    sampler: FootprintSampler,
}

impl FresnelTable {
    pub fn new(graph: &NetworkGraph, wavelength: f64, cfg: &MembershipConfig) -> Result<Self> {
        if !(wavelength > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "wavelength must be positive, got {wavelength}"
            )));
        }
        let sampler = FootprintSampler::new(cfg)?;
        let mut pair_slot: HashMap<(usize, usize), usize> = HashMap::new();
        let mut regions = Vec::new();
        let mut members: Vec<Vec<usize>> = Vec::new();
        for (idx, &(u, v)) in graph.links().iter().enumerate() {
            let key = (u.min(v), u.max(v));
            let slot = *pair_slot.entry(key).or_insert_with(|| {
                regions.push(PreparedEllipse::new(&fresnel_floor_ellipse(
                    graph, idx, wavelength,
                )));
                members.push(Vec::new());
                regions.len() - 1
            });
            members[slot].push(idx);
        }
        Ok(Self {
            regions,
            members,
            sampler,
        })
    }

    /// Sorted indices of the links whose Fresnel region contains `target`.
    pub fn covering_links(&self, target: &TargetParams) -> Vec<usize> {
        let reach = 0.5 * target.width_ap.max(target.width_lat);
        let pts = self.sampler.footprint_points(target);
        let mut out = Vec::new();
        for (region, links) in self.regions.iter().zip(&self.members) {
            if region.far_from(target.position, reach) {
                continue;
            }
            if self.sampler.is_member(&pts, region) {
                out.extend_from_slice(links);
            }
        }
        out.sort_unstable();
        out
    }

    /// Membership matrix row for one target: `member[link]`.
    pub fn membership_row(&self, target: &TargetParams, num_links: usize) -> Vec<bool> {
        let mut row = vec![false; num_links];
        for l in self.covering_links(target) {
            row[l] = true;
        }
        row
    }
}

/// `n` subjects with i.i.d. uniform positions in `area` and uniform headings.
pub fn sample_targets(n: usize, area: Area, profile: &SubjectProfile, rng_seed: u64) -> Vec<TargetParams> {
    let mut rng = rng_from_seed(rng_seed);
    (0..n)
        .map(|_| {
            let x = rng.gen::<f64>() * area.width;
            let y = rng.gen::<f64>() * area.height;
            let phi = rng.gen::<f64>() * TAU;
            TargetParams::posed(profile, [x, y], phi)
        })
        .collect()
}

//! Three-cell synthetic benchmark: three coloured cells on a square grid,
//! labelled by exact integer geometry.
//!
//! Coordinates are `(x, y)` with `x` the column and `y` the row.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io;

pub const GRID: u32 = 14;
pub const PATCH: u32 = 16;
pub const IMAGE_SIDE: u32 = GRID * PATCH;
pub const RETRY_CAP: usize = 10_000;

pub const RED: [u8; 3] = [255, 0, 0];
pub const GREEN: [u8; 3] = [0, 255, 0];
pub const BLUE: [u8; 3] = [0, 0, 255];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Cell {
    pub x: u32,
    pub y: u32,
}

impl Cell {
    pub const fn new(x: u32, y: u32) -> Self {
        Self { x, y }
    }

    fn xi(self) -> i64 {
        self.x as i64
    }

    fn yi(self) -> i64 {
        self.y as i64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ThreeCellSample {
    pub r: Cell,
    pub g: Cell,
    pub b: Cell,
    /// Index of the RNG stream that produced the sample.
    pub seed_tag: u64,
}

impl ThreeCellSample {
    pub fn new(r: Cell, g: Cell, b: Cell) -> Result<Self> {
        Self::with_grid(r, g, b, GRID)
    }

    fn with_grid(r: Cell, g: Cell, b: Cell, grid: u32) -> Result<Self> {
        for (name, c) in [("r", r), ("g", g), ("b", b)] {
            if c.x >= grid || c.y >= grid {
                return Err(Error::InvalidSample(format!(
                    "{name} = ({}, {}) lies outside the {grid}x{grid} grid",
                    c.x, c.y
                )));
            }
        }
        if r == g || r == b || g == b {
            return Err(Error::InvalidSample("cells must be pairwise distinct".into()));
        }
        Ok(Self {
            r,
            g,
            b,
            seed_tag: 0,
        })
    }

    /// Squared distances `(|rg|^2, |rb|^2)`.
    pub fn squared_distances(&self) -> (i64, i64) {
        let sq = |a: Cell, b: Cell| {
            let (dx, dy) = (a.xi() - b.xi(), a.yi() - b.yi());
            dx * dx + dy * dy
        };
        (sq(self.r, self.g), sq(self.r, self.b))
    }

    /// Orientation determinant; positive means counterclockwise.
    pub fn determinant(&self) -> i64 {
        let (r, g, b) = (self.r, self.g, self.b);
        (g.xi() - r.xi()) * (b.yi() - r.yi()) - (g.yi() - r.yi()) * (b.xi() - r.xi())
    }

    /// Doubled trapezium areas under RG and RB: `(2 A_RG, 2 A_RB)`.
    pub fn doubled_areas(&self) -> (i64, i64) {
        let (r, g, b) = (self.r, self.g, self.b);
        (
            ((r.yi() + g.yi()) * (g.xi() - r.xi())).abs(),
            ((r.yi() + b.yi()) * (b.xi() - r.xi())).abs(),
        )
    }

    pub fn vector_sum(&self) -> (i64, i64) {
        (
            self.r.xi() + self.g.xi() + self.b.xi(),
            self.r.yi() + self.g.yi() + self.b.yi(),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Distance,
    Orientation,
    Area,
    #[serde(rename = "vecsum")]
    VectorSum,
    #[serde(rename = "sixclass")]
    SixClass,
}

impl Task {
    pub const ALL: [Task; 5] = [
        Task::Distance,
        Task::Orientation,
        Task::Area,
        Task::VectorSum,
        Task::SixClass,
    ];

    pub fn num_classes(self) -> usize {
        match self {
            Task::Distance | Task::Area => 3,
            Task::Orientation | Task::VectorSum => 2,
            Task::SixClass => 6,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Task::Distance => "distance",
            Task::Orientation => "orientation",
            Task::Area => "area",
            Task::VectorSum => "vecsum",
            Task::SixClass => "sixclass",
        }
    }

    /// Human-readable class names, indexed by class.
    pub fn class_names(self) -> &'static [&'static str] {
        match self {
            Task::Distance => &["d_rg>d_rb", "d_rb>d_rg", "d_rg=d_rb"],
            Task::Orientation => &["counterclockwise", "clockwise"],
            Task::Area => &["A_RG>A_RB", "A_RB>A_RG", "A_RG=A_RB"],
            Task::VectorSum => &["inside", "outside"],
            Task::SixClass => &[
                "d_rg>d_rb",
                "d_rb>d_rg",
                "counterclockwise",
                "A_RG>A_RB",
                "A_RB>A_RG",
                "sum_outside",
            ],
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Task {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Task::ALL
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| format!("unknown task `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskLabel {
    pub task: Task,
    pub class_index: usize,
}

fn three_way(a: i64, b: i64) -> usize {
    match a.cmp(&b) {
        std::cmp::Ordering::Greater => 0,
        std::cmp::Ordering::Less => 1,
        std::cmp::Ordering::Equal => 2,
    }
}

/// Label of `s` for one of the four geometric tasks.
///
/// Six-class labels depend on which sub-task generated the image and are
/// checked with [`six_class_holds`] instead.
pub fn label(s: &ThreeCellSample, task: Task) -> Result<TaskLabel> {
    let class_index = match task {
        Task::Distance => {
            let (rg, rb) = s.squared_distances();
            three_way(rg, rb)
        }
        Task::Orientation => match s.determinant() {
            0 => return Err(Error::Collinear),
            d if d > 0 => 0,
            _ => 1,
        },
        Task::Area => {
            let (rg, rb) = s.doubled_areas();
            three_way(rg, rb)
        }
        Task::VectorSum => {
            let limit = GRID as i64 - 1;
            let (xs, ys) = s.vector_sum();
            usize::from(xs > limit && ys > limit)
        }
        Task::SixClass => {
            return Err(Error::InvalidSample(
                "six-class labels are fixed by the generating sub-task".into(),
            ))
        }
    };
    Ok(TaskLabel { task, class_index })
}

/// Labels for every geometric task. Orientation is absent for collinear
/// triples.
pub fn label_sample(s: &ThreeCellSample) -> BTreeMap<Task, TaskLabel> {
    [Task::Distance, Task::Orientation, Task::Area, Task::VectorSum]
        .into_iter()
        .filter_map(|t| label(s, t).ok().map(|l| (t, l)))
        .collect()
}

/// Whether `s` satisfies the defining condition of six-class `class`.
pub fn six_class_holds(s: &ThreeCellSample, class: usize) -> bool {
    let (rg, rb) = s.squared_distances();
    let (arg, arb) = s.doubled_areas();
    let (xs, ys) = s.vector_sum();
    let limit = GRID as i64 - 1;
    match class {
        0 => rg > rb,
        1 => rb > rg,
        2 => s.determinant() > 0,
        3 => arg > arb,
        4 => arb > arg,
        5 => xs > limit && ys > limit,
        _ => false,
    }
}

/// Whether the stored `(task, class)` is consistent with the coordinates.
pub fn class_matches(s: &ThreeCellSample, task: Task, class: usize) -> bool {
    match task {
        Task::SixClass => six_class_holds(s, class),
        t => label(s, t).map(|l| l.class_index == class).unwrap_or(false),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetSpec {
    pub grid: u32,
    pub image_side: u32,
    pub patch: u32,
    pub count: usize,
    pub seed: u64,
    pub task: Task,
}

impl DatasetSpec {
    pub fn new(task: Task, count: usize, seed: u64) -> Self {
        Self {
            grid: GRID,
            image_side: IMAGE_SIDE,
            patch: PATCH,
            count,
            seed,
            task,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.grid != GRID {
            return Err(Error::InvalidSample(format!(
                "grid must be {GRID}, got {}",
                self.grid
            )));
        }
        if self.patch == 0 || self.image_side != self.grid * self.patch {
            return Err(Error::InvalidSample(format!(
                "image_side {} must equal grid {} x patch {}",
                self.image_side, self.grid, self.patch
            )));
        }
        Ok(())
    }
}

/// Deterministic RNG for sample `index` of a dataset seeded with `seed`.
pub fn sample_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

fn random_cells(spec: &DatasetSpec, rng: &mut impl Rng) -> (Cell, Cell, Cell) {
    let n = spec.grid * spec.grid;
    let r = rng.random_range(0..n);
    let mut g = rng.random_range(0..n);
    while g == r {
        g = rng.random_range(0..n);
    }
    let mut b = rng.random_range(0..n);
    while b == r || b == g {
        b = rng.random_range(0..n);
    }
    let cell = |i: u32| Cell::new(i % spec.grid, i / spec.grid);
    (cell(r), cell(g), cell(b))
}

/// Draws a target class uniformly, then rejection-samples three distinct
/// cells until the sample belongs to it. Returns the sample and its class.
pub fn sample_cells(spec: &DatasetSpec, rng: &mut impl Rng) -> Result<(ThreeCellSample, usize)> {
    let target = rng.random_range(0..spec.task.num_classes());
    for _ in 0..RETRY_CAP {
        let (r, g, b) = random_cells(spec, rng);
        let s = ThreeCellSample {
            r,
            g,
            b,
            seed_tag: 0,
        };
        if class_matches(&s, spec.task, target) {
            return Ok((s, target));
        }
    }
    Err(Error::RetryCapExceeded(RETRY_CAP))
}

/// Sample `index` of the dataset described by `spec`.
pub fn sample_at(spec: &DatasetSpec, index: u64) -> Result<(ThreeCellSample, usize)> {
    let mut rng = sample_rng(spec.seed, index);
    let (mut s, class) = sample_cells(spec, &mut rng)?;
    s.seed_tag = index;
    Ok((s, class))
}

/// 8-bit RGB image, row-major, 3 bytes per pixel.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RgbImage {
    pub width: u32,
    pub height: u32,
    pub data: Vec<u8>,
}

impl RgbImage {
    pub fn black(width: u32, height: u32) -> Self {
        Self {
            width,
            height,
            data: vec![0; (width * height * 3) as usize],
        }
    }

    pub fn pixel(&self, x: u32, y: u32) -> [u8; 3] {
        let i = ((y * self.width + x) * 3) as usize;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    fn fill(&mut self, x0: u32, y0: u32, side: u32, rgb: [u8; 3]) {
        for y in y0..y0 + side {
            for x in x0..x0 + side {
                let i = ((y * self.width + x) * 3) as usize;
                self.data[i..i + 3].copy_from_slice(&rgb);
            }
        }
    }

    pub fn non_black_pixels(&self) -> usize {
        self.data.chunks_exact(3).filter(|p| p.iter().any(|&c| c != 0)).count()
    }
}

/// Black canvas with one pure-colour patch per cell.
pub fn render(s: &ThreeCellSample, spec: &DatasetSpec) -> RgbImage {
    let mut img = RgbImage::black(spec.image_side, spec.image_side);
    for (cell, rgb) in [(s.r, RED), (s.g, GREEN), (s.b, BLUE)] {
        img.fill(cell.x * spec.patch, cell.y * spec.patch, spec.patch, rgb);
    }
    img
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestRow {
    pub index: usize,
    pub sample: ThreeCellSample,
    pub task: Task,
    pub class: usize,
}

pub const MANIFEST_HEADER: &str = "index,xr,yr,xg,yg,xb,yb,task,class";

pub fn image_name(index: usize) -> String {
    format!("{index:08}.ppm")
}

pub fn write_manifest(rows: &[ManifestRow]) -> String {
    let mut out = String::from(MANIFEST_HEADER);
    out.push('\n');
    for row in rows {
        let s = &row.sample;
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            row.index, s.r.x, s.r.y, s.g.x, s.g.y, s.b.x, s.b.y, row.task, row.class
        ));
    }
    out
}

pub fn parse_manifest(text: &str) -> Result<Vec<ManifestRow>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == MANIFEST_HEADER => {}
        _ => return Err(Error::parse(1, format!("expected header `{MANIFEST_HEADER}`"))),
    }
    let mut rows = Vec::new();
    for (i, line) in lines {
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 9 {
            return Err(Error::parse(line_no, format!("expected 9 fields, got {}", fields.len())));
        }
        let num = |k: usize| -> Result<u32> {
            fields[k]
                .parse()
                .map_err(|_| Error::parse(line_no, format!("bad integer `{}`", fields[k])))
        };
        let index: usize = fields[0]
            .parse()
            .map_err(|_| Error::parse(line_no, format!("bad index `{}`", fields[0])))?;
        let mut sample = ThreeCellSample::new(
            Cell::new(num(1)?, num(2)?),
            Cell::new(num(3)?, num(4)?),
            Cell::new(num(5)?, num(6)?),
        )
        .map_err(|e| Error::parse(line_no, e.to_string()))?;
        sample.seed_tag = index as u64;
        let task: Task = fields[7].parse().map_err(|e: String| Error::parse(line_no, e))?;
        let class: usize = fields[8]
            .parse()
            .map_err(|_| Error::parse(line_no, format!("bad class `{}`", fields[8])))?;
        if class >= task.num_classes() {
            return Err(Error::parse(line_no, format!("class {class} out of range for {task}")));
        }
        rows.push(ManifestRow {
            index,
            sample,
            task,
            class,
        });
    }
    Ok(rows)
}

/// Writes `count` PPM images, `manifest.csv` and `spec.json` into `out_dir`.
pub fn gen_dataset(spec: &DatasetSpec, out_dir: &Path) -> Result<Vec<ManifestRow>> {
    spec.validate()?;
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut rows = Vec::with_capacity(spec.count);
    for index in 0..spec.count {
        let (sample, class) = sample_at(spec, index as u64)?;
        let img = render(&sample, spec);
        io::write_atomic(&out_dir.join(image_name(index)), &io::encode_ppm(&img))?;
        rows.push(ManifestRow {
            index,
            sample,
            task: spec.task,
            class,
        });
    }
    io::write_atomic(&out_dir.join("manifest.csv"), write_manifest(&rows).as_bytes())?;
    io::write_json(&out_dir.join("spec.json"), spec)?;
    Ok(rows)
}

/// Result of re-checking a generated dataset against its manifest.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct DatasetCheck {
    pub images: usize,
    pub label_mismatches: Vec<usize>,
    pub render_mismatches: Vec<usize>,
}

impl DatasetCheck {
    pub fn is_clean(&self) -> bool {
        self.label_mismatches.is_empty() && self.render_mismatches.is_empty()
    }
}

/// Relabels every manifest row from its coordinates and decodes every image,
/// checking it against a fresh rendering of the manifest coordinates.
pub fn verify_dataset(dir: &Path) -> Result<DatasetCheck> {
    let spec: DatasetSpec = io::read_json(&dir.join("spec.json"))?;
    spec.validate()?;
    let manifest_path = dir.join("manifest.csv");
    let text = std::fs::read_to_string(&manifest_path).map_err(|e| Error::io(&manifest_path, e))?;
    let rows = parse_manifest(&text)?;
    let mut check = DatasetCheck::default();
    for row in &rows {
        if row.task != spec.task || !class_matches(&row.sample, row.task, row.class) {
            check.label_mismatches.push(row.index);
        }
        let path = dir.join(image_name(row.index));
        let bytes = std::fs::read(&path).map_err(|e| Error::io(&path, e))?;
        let img = io::decode_ppm(&bytes)?;
        let expected = render(&row.sample, &spec);
        if img != expected || img.non_black_pixels() != 3 * (spec.patch * spec.patch) as usize {
            check.render_mismatches.push(row.index);
        }
        check.images += 1;
    }
    Ok(check)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(r: (u32, u32), g: (u32, u32), b: (u32, u32)) -> ThreeCellSample {
        ThreeCellSample::new(Cell::new(r.0, r.1), Cell::new(g.0, g.1), Cell::new(b.0, b.1)).unwrap()
    }

    #[test]
    fn orientation_examples() {
        let ccw = sample((0, 0), (1, 0), (0, 1));
        assert_eq!(ccw.determinant(), 1);
        assert_eq!(label(&ccw, Task::Orientation).unwrap().class_index, 0);
        let cw = sample((0, 0), (0, 1), (1, 0));
        assert_eq!(cw.determinant(), -1);
        assert_eq!(label(&cw, Task::Orientation).unwrap().class_index, 1);
    }

    #[test]
    fn collinear_orientation_is_an_error() {
        let s = sample((0, 0), (1, 1), (2, 2));
        assert!(matches!(label(&s, Task::Orientation), Err(Error::Collinear)));
        assert!(!label_sample(&s).contains_key(&Task::Orientation));
    }

    #[test]
    fn area_example() {
        let s = sample((0, 2), (2, 2), (4, 1));
        assert_eq!(s.doubled_areas(), (8, 12));
        assert_eq!(label(&s, Task::Area).unwrap().class_index, 1);
    }

    #[test]
    fn vector_sum_example() {
        let s = sample((5, 6), (4, 4), (5, 4));
        assert_eq!(s.vector_sum(), (14, 14));
        assert_eq!(label(&s, Task::VectorSum).unwrap().class_index, 1);
        // boundary: 13 is not out of the grid
        let s = sample((5, 5), (4, 4), (4, 4 + 1));
        assert_eq!(s.vector_sum(), (13, 14));
        assert_eq!(label(&s, Task::VectorSum).unwrap().class_index, 0);
    }

    #[test]
    fn equal_distance_example() {
        let s = sample((0, 0), (3, 4), (5, 0));
        assert_eq!(s.squared_distances(), (25, 25));
        assert_eq!(label(&s, Task::Distance).unwrap().class_index, 2);
    }

    #[test]
    fn sample_validation() {
        assert!(ThreeCellSample::new(Cell::new(0, 0), Cell::new(0, 0), Cell::new(1, 1)).is_err());
        assert!(ThreeCellSample::new(Cell::new(14, 0), Cell::new(0, 0), Cell::new(1, 1)).is_err());
    }

    #[test]
    fn six_class_is_not_labelled_from_coordinates() {
        let s = sample((0, 0), (1, 0), (0, 1));
        assert!(label(&s, Task::SixClass).is_err());
        assert!(six_class_holds(&s, 2));
        assert!(!six_class_holds(&s, 6));
    }

    #[test]
    fn orientation_samples_are_never_collinear() {
        let spec = DatasetSpec::new(Task::Orientation, 0, 7);
        for i in 0..2_000 {
            let (s, _) = sample_at(&spec, i).unwrap();
            assert_ne!(s.determinant(), 0);
        }
    }

    #[test]
    fn sampling_is_deterministic_per_index() {
        let spec = DatasetSpec::new(Task::Area, 0, 42);
        let a: Vec<_> = (0..50).map(|i| sample_at(&spec, i).unwrap()).collect();
        let b: Vec<_> = (0..50).rev().map(|i| sample_at(&spec, i).unwrap()).collect();
        assert!(a.iter().eq(b.iter().rev()));
    }

    #[test]
    fn render_places_patches() {
        let spec = DatasetSpec::new(Task::Distance, 1, 0);
        let s = sample((0, 0), (13, 0), (2, 5));
        let img = render(&s, &spec);
        assert_eq!(img.pixel(0, 0), RED);
        assert_eq!(img.pixel(15, 15), RED);
        assert_eq!(img.pixel(16, 0), [0, 0, 0]);
        assert_eq!(img.pixel(13 * 16, 0), GREEN);
        assert_eq!(img.pixel(2 * 16 + 3, 5 * 16 + 15), BLUE);
        assert_eq!(img.non_black_pixels(), 768);
    }

    #[test]
    fn spec_rejects_inconsistent_sides() {
        let mut spec = DatasetSpec::new(Task::Distance, 1, 0);
        spec.image_side = 200;
        assert!(spec.validate().is_err());
    }

    #[test]
    fn manifest_parse_rejects_garbage() {
        assert!(parse_manifest("nope").is_err());
        let bad = format!("{MANIFEST_HEADER}\n0,1,2,3,4,5,6,distance,7\n");
        assert!(parse_manifest(&bad).is_err());
        let dup = format!("{MANIFEST_HEADER}\n0,1,1,1,1,5,6,distance,0\n");
        assert!(parse_manifest(&dup).is_err());
    }
}

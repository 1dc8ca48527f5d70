//! Deterministic structure/texture transform codec.
//!
//! The image is described by one global structure block and a `GRID x GRID`
//! grid of texture blocks:
//!
//! - **structure**: the `r_s` lowest-frequency coefficients (zigzag order) of
//!   the full-image orthonormal DCT-II of each color plane. The count is split
//!   evenly across R, G, B with the remainder going to G first, then R.
//! - **texture (row, col)**: the `r_t` lowest-frequency AC coefficients of the
//!   tile DCT of the *structure residual* `x - S(x)`, split across planes the
//!   same way. The tile DC term is never sent; tile means are carried by the
//!   structure.
//!
//! Coefficients are serialized rank-interleaved: rank 0 of R, G, B, then rank
//! 1, and so on, skipping planes whose share is exhausted. All samples are
//! `f32`, the residual is taken against the `f32`-rounded structure, and the
//! decoder sums structure and texture reconstructions before clamping to
//! `[-1, 1]`. With every block delivered intact, decoding is the orthogonal
//! projection of the image onto the span of the retained basis functions.

pub mod dct;
pub mod exchange;
mod image_io;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};
use dct::{forward_lowpass, inverse_lowpass_add, zigzag, DctBasis};
pub use image_io::{load_image, save_png};

/// Texture grid side.
pub const GRID: usize = 4;
pub const TEXTURE_BLOCKS: usize = GRID * GRID;
pub const CHANNELS: usize = 3;
/// Damping applied to the neighbor mean in conditional completion.
pub const DEFAULT_COMPLETION_GAIN: f32 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodecProfile {
    pub r_s: usize,
    pub r_t: usize,
}

impl Default for CodecProfile {
    fn default() -> Self {
        Self { r_s: 128, r_t: 24 }
    }
}

impl CodecProfile {
    pub fn total(&self) -> usize {
        self.r_s + TEXTURE_BLOCKS * self.r_t
    }
}

/// Planar RGB image with samples in `[-1, 1]`; sample `(c, y, x)` lives at
/// `data[(c * height + y) * width + x]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageBuffer {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl ImageBuffer {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 || width % GRID != 0 || height % GRID != 0 {
            return Err(Error::InvalidParameter(format!(
                "image {width}x{height} must be nonempty and divisible by the {GRID}x{GRID} grid"
            )));
        }
        if data.len() != CHANNELS * width * height {
            return Err(Error::InvalidParameter(format!(
                "expected {} samples, got {}",
                CHANNELS * width * height,
                data.len()
            )));
        }
        if data.iter().any(|v| !(-1.0..=1.0).contains(v)) {
            return Err(Error::InvalidParameter(
                "samples must lie in [-1, 1]".into(),
            ));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Result<Self> {
        Self::new(width, height, vec![value; CHANNELS * width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn plane(&self, c: usize) -> &[f64] {
        let n = self.width * self.height;
        &self.data[c * n..(c + 1) * n]
    }

    /// Central `size x size` crop.
    pub fn center_crop(&self, size: usize) -> Result<Self> {
        if size > self.width || size > self.height {
            return Err(Error::InvalidParameter(format!(
                "cannot crop {}x{} image to {size}x{size}",
                self.width, self.height
            )));
        }
        let y0 = (self.height - size) / 2;
        let x0 = (self.width - size) / 2;
        let mut data = Vec::with_capacity(CHANNELS * size * size);
        for c in 0..CHANNELS {
            let plane = self.plane(c);
            for y in 0..size {
                let start = (y0 + y) * self.width + x0;
                data.extend_from_slice(&plane[start..start + size]);
            }
        }
        Self::new(size, size, data)
    }

    /// Samples mapped from `[-1, 1]` to `[0, 1]`.
    pub fn to_unit_range(&self) -> Vec<f64> {
        self.data.iter().map(|v| (v + 1.0) / 2.0).collect()
    }
}

/// Splits `total` coefficients over R, G, B; the remainder goes to the planes
/// in luminance order (G, then R).
pub fn split_channels(total: usize) -> [usize; CHANNELS] {
    let base = total / CHANNELS;
    let mut counts = [base; CHANNELS];
    for &c in [1usize, 0].iter().take(total % CHANNELS) {
        counts[c] += 1;
    }
    counts
}

/// Coefficient positions of one serialized vector and their order.
#[derive(Debug, Clone, PartialEq)]
struct Layout {
    /// `(plane, u, v)` in serialization order.
    entries: Vec<(usize, usize, usize)>,
    fu: usize,
    fv: usize,
}

impl Layout {
    fn new(h: usize, w: usize, total: usize, skip_dc: bool) -> Result<Self> {
        let counts = split_channels(total);
        let offset = usize::from(skip_dc);
        let avail = h * w - offset;
        if counts.iter().any(|&n| n > avail) {
            return Err(Error::Profile(format!(
                "{total} coefficients over {CHANNELS} planes exceeds {avail} available per {h}x{w} plane"
            )));
        }
        let max = counts.iter().copied().max().unwrap_or(0);
        let scan = zigzag(h, w, max + offset);
        let mut entries = Vec::with_capacity(total);
        for rank in 0..max {
            for (c, &n) in counts.iter().enumerate() {
                if rank < n {
                    let (u, v) = scan[rank + offset];
                    entries.push((c, u, v));
                }
            }
        }
        let fu = entries.iter().map(|e| e.1 + 1).max().unwrap_or(0);
        let fv = entries.iter().map(|e| e.2 + 1).max().unwrap_or(0);
        Ok(Self { entries, fu, fv })
    }

    fn len(&self) -> usize {
        self.entries.len()
    }

    /// Low-pass coefficients of each plane region, gathered into a vector.
    fn analyze(
        &self,
        planes: &[&[f64]; CHANNELS],
        stride: usize,
        origin: (usize, usize),
        rows: &DctBasis,
        cols: &DctBasis,
    ) -> Vec<f32> {
        if self.entries.is_empty() {
            return Vec::new();
        }
        let blocks: Vec<Vec<f64>> = planes
            .iter()
            .map(|p| forward_lowpass(p, stride, origin, rows, cols, self.fu, self.fv))
            .collect();
        self.entries
            .iter()
            .map(|&(c, u, v)| blocks[c][u * self.fv + v] as f32)
            .collect()
    }

    /// Adds the reconstruction of `coeffs` into each plane region.
    fn synthesize_add(
        &self,
        coeffs: &[f32],
        planes: &mut [Vec<f64>; CHANNELS],
        stride: usize,
        origin: (usize, usize),
        rows: &DctBasis,
        cols: &DctBasis,
    ) {
        if coeffs.iter().all(|&v| v == 0.0) {
            return;
        }
        let mut blocks = vec![vec![0.0; self.fu * self.fv]; CHANNELS];
        for (&(c, u, v), &x) in self.entries.iter().zip(coeffs) {
            blocks[c][u * self.fv + v] = f64::from(x);
        }
        for (c, block) in blocks.iter().enumerate() {
            if block.iter().any(|&v| v != 0.0) {
                inverse_lowpass_add(
                    block,
                    self.fu,
                    self.fv,
                    rows,
                    cols,
                    &mut planes[c],
                    stride,
                    origin,
                );
            }
        }
    }
}

/// Encoded image: the structure vector and 16 texture vectors (row-major).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockSet {
    pub structure: Vec<f32>,
    pub textures: Vec<Vec<f32>>,
}

impl BlockSet {
    pub fn texture(&self, row: usize, col: usize) -> &[f32] {
        &self.textures[row * GRID + col]
    }

    /// Every block delivered as-is.
    pub fn into_reception(self) -> ReceptionState {
        let texture_len = self.textures.first().map_or(0, Vec::len);
        ReceptionState {
            structure: Some(self.structure),
            textures: self.textures.into_iter().map(Some).collect(),
            texture_len,
        }
    }
}

/// Receiver view of the block set; `None` marks a missing block, which is
/// distinct from a delivered all-zero vector.
#[derive(Debug, Clone, PartialEq)]
pub struct ReceptionState {
    pub structure: Option<Vec<f32>>,
    pub textures: Vec<Option<Vec<f32>>>,
    pub texture_len: usize,
}

impl ReceptionState {
    pub fn empty(texture_len: usize) -> Self {
        Self {
            structure: None,
            textures: vec![None; TEXTURE_BLOCKS],
            texture_len,
        }
    }

    pub fn missing_count(&self) -> usize {
        usize::from(self.structure.is_none()) + self.textures.iter().filter(|t| t.is_none()).count()
    }
}

/// Reception with every texture cell filled. A missing structure stays
/// `None` and decodes as the zero vector.
#[derive(Debug, Clone, PartialEq)]
pub struct CompletedReception {
    pub structure: Option<Vec<f32>>,
    pub textures: Vec<Vec<f32>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum CompletionMode {
    ZeroFill,
    /// Missing cell = `gain` x coefficient-wise mean of the received
    /// 4-neighbors; zero when no neighbor was received.
    Conditional {
        gain: f32,
    },
}

impl CompletionMode {
    pub fn conditional() -> Self {
        CompletionMode::Conditional {
            gain: DEFAULT_COMPLETION_GAIN,
        }
    }
}

pub fn complete_missing(rx: &ReceptionState, mode: CompletionMode) -> CompletedReception {
    let textures = (0..TEXTURE_BLOCKS)
        .map(|cell| match &rx.textures[cell] {
            Some(t) => t.clone(),
            None => match mode {
                CompletionMode::ZeroFill => vec![0.0; rx.texture_len],
                CompletionMode::Conditional { gain } => synthesize_from_neighbors(rx, cell, gain),
            },
        })
        .collect();
    CompletedReception {
        structure: rx.structure.clone(),
        textures,
    }
}

fn synthesize_from_neighbors(rx: &ReceptionState, cell: usize, gain: f32) -> Vec<f32> {
    let (row, col) = (cell / GRID, cell % GRID);
    let mut neighbors = Vec::with_capacity(4);
    if row > 0 {
        neighbors.push(cell - GRID);
    }
    if row + 1 < GRID {
        neighbors.push(cell + GRID);
    }
    if col > 0 {
        neighbors.push(cell - 1);
    }
    if col + 1 < GRID {
        neighbors.push(cell + 1);
    }
    let received: Vec<&Vec<f32>> = neighbors
        .iter()
        .filter_map(|&n| rx.textures[n].as_ref())
        .collect();
    let mut out = vec![0.0f32; rx.texture_len];
    if received.is_empty() {
        return out;
    }
    let scale = gain / received.len() as f32;
    for (i, o) in out.iter_mut().enumerate() {
        *o = scale * received.iter().map(|t| t[i]).sum::<f32>();
    }
    out
}

/// Encoder/decoder for one image size and profile.
#[derive(Debug, Clone)]
pub struct Codec {
    profile: CodecProfile,
    width: usize,
    height: usize,
    full_rows: DctBasis,
    full_cols: DctBasis,
    tile_rows: DctBasis,
    tile_cols: DctBasis,
    structure: Layout,
    texture: Layout,
}

impl Codec {
    pub fn new(width: usize, height: usize, profile: CodecProfile) -> Result<Self> {
        if width == 0 || height == 0 || width % GRID != 0 || height % GRID != 0 {
            return Err(Error::Profile(format!(
                "image {width}x{height} does not tile into a {GRID}x{GRID} grid"
            )));
        }
        if profile.r_s == 0 || profile.r_t == 0 {
            return Err(Error::Profile("block lengths must be positive".into()));
        }
        let (th, tw) = (height / GRID, width / GRID);
        Ok(Self {
            profile,
            width,
            height,
            full_rows: DctBasis::new(height),
            full_cols: DctBasis::new(width),
            tile_rows: DctBasis::new(th),
            tile_cols: DctBasis::new(tw),
            structure: Layout::new(height, width, profile.r_s, false)?,
            texture: Layout::new(th, tw, profile.r_t, true)?,
        })
    }

    pub fn profile(&self) -> CodecProfile {
        self.profile
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    fn check_dims(&self, x: &ImageBuffer) -> Result<()> {
        if (x.width, x.height) != (self.width, self.height) {
            return Err(Error::InvalidParameter(format!(
                "codec built for {}x{}, image is {}x{}",
                self.width, self.height, x.width, x.height
            )));
        }
        Ok(())
    }

    fn structure_planes(&self, structure: Option<&[f32]>) -> [Vec<f64>; CHANNELS] {
        let mut planes: [Vec<f64>; CHANNELS] =
            std::array::from_fn(|_| vec![0.0; self.width * self.height]);
        if let Some(s) = structure {
            self.structure.synthesize_add(
                s,
                &mut planes,
                self.width,
                (0, 0),
                &self.full_rows,
                &self.full_cols,
            );
        }
        planes
    }

    fn tile_origin(&self, cell: usize) -> (usize, usize) {
        let (th, tw) = (self.height / GRID, self.width / GRID);
        ((cell / GRID) * th, (cell % GRID) * tw)
    }

    pub fn encode(&self, x: &ImageBuffer) -> Result<BlockSet> {
        self.check_dims(x)?;
        let planes: [&[f64]; CHANNELS] = std::array::from_fn(|c| x.plane(c));
        let structure = self.structure.analyze(
            &planes,
            self.width,
            (0, 0),
            &self.full_rows,
            &self.full_cols,
        );

        let approx = self.structure_planes(Some(&structure));
        let residual: [Vec<f64>; CHANNELS] = std::array::from_fn(|c| {
            planes[c]
                .iter()
                .zip(&approx[c])
                .map(|(a, b)| a - b)
                .collect()
        });
        let residual_refs: [&[f64]; CHANNELS] = std::array::from_fn(|c| residual[c].as_slice());
        let textures = (0..TEXTURE_BLOCKS)
            .map(|cell| {
                self.texture.analyze(
                    &residual_refs,
                    self.width,
                    self.tile_origin(cell),
                    &self.tile_rows,
                    &self.tile_cols,
                )
            })
            .collect();
        Ok(BlockSet {
            structure,
            textures,
        })
    }

    pub fn decode(&self, rx: &CompletedReception) -> ImageBuffer {
        let mut planes = self.structure_planes(rx.structure.as_deref());
        for (cell, t) in rx.textures.iter().enumerate() {
            self.texture.synthesize_add(
                t,
                &mut planes,
                self.width,
                self.tile_origin(cell),
                &self.tile_rows,
                &self.tile_cols,
            );
        }
        let data = planes
            .concat()
            .into_iter()
            .map(|v| v.clamp(-1.0, 1.0))
            .collect();
        ImageBuffer {
            width: self.width,
            height: self.height,
            data,
        }
    }

    /// Decodes a block set with nothing lost.
    pub fn round_trip(&self, x: &ImageBuffer) -> Result<ImageBuffer> {
        let blocks = self.encode(x)?;
        Ok(self.decode(&complete_missing(
            &blocks.into_reception(),
            CompletionMode::ZeroFill,
        )))
    }
}

/// Single undivided coefficient stream: the `len` lowest-frequency full-image
/// DCT coefficients, split and interleaved like the structure block.
#[derive(Debug, Clone)]
pub struct StreamCodec {
    width: usize,
    height: usize,
    rows: DctBasis,
    cols: DctBasis,
    layout: Layout,
}

impl StreamCodec {
    pub fn new(width: usize, height: usize, len: usize) -> Result<Self> {
        Ok(Self {
            width,
            height,
            rows: DctBasis::new(height),
            cols: DctBasis::new(width),
            layout: Layout::new(height, width, len, false)?,
        })
    }

    pub fn len(&self) -> usize {
        self.layout.len()
    }

    pub fn is_empty(&self) -> bool {
        self.layout.len() == 0
    }

    pub fn encode(&self, x: &ImageBuffer) -> Result<Vec<f32>> {
        if (x.width, x.height) != (self.width, self.height) {
            return Err(Error::InvalidParameter("stream codec size mismatch".into()));
        }
        let planes: [&[f64]; CHANNELS] = std::array::from_fn(|c| x.plane(c));
        Ok(self
            .layout
            .analyze(&planes, self.width, (0, 0), &self.rows, &self.cols))
    }

    pub fn decode(&self, stream: &[f32]) -> ImageBuffer {
        let mut planes: [Vec<f64>; CHANNELS] =
            std::array::from_fn(|_| vec![0.0; self.width * self.height]);
        self.layout.synthesize_add(
            stream,
            &mut planes,
            self.width,
            (0, 0),
            &self.rows,
            &self.cols,
        );
        let data = planes
            .concat()
            .into_iter()
            .map(|v| v.clamp(-1.0, 1.0))
            .collect();
        ImageBuffer {
            width: self.width,
            height: self.height,
            data,
        }
    }
}

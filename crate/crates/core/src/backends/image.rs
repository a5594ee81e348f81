//! Deterministic PNG collages for the offline image backend.
//!
//! Each tile is a solid colour block separated from its neighbours by white
//! gutters. Tile labels and kinds are stored in an `iTXt` chunk so a test can
//! decode the image and check it against the request.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{ImageRequest, TileKind, TileSpec};
use crate::error::BackendError;

pub const LAYOUT_CHUNK: &str = "clay:layout";
pub const GUTTER_RGB: [u8; 3] = [255, 255, 255];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CollageMetadata {
    pub prompt: String,
    pub seed: Option<u64>,
    pub variant: u32,
    pub tiles: Vec<TileSpec>,
}

fn tile_colour(req: &ImageRequest, variant: u32, index: usize, tile: &TileSpec) -> [u8; 3] {
    let mut h = Sha256::new();
    h.update(req.prompt_text.as_bytes());
    h.update(req.seed.unwrap_or(0).to_le_bytes());
    h.update(variant.to_le_bytes());
    h.update((index as u64).to_le_bytes());
    h.update(tile.label.as_bytes());
    let d = h.finalize();
    // Channels stay below 200 so no tile can be mistaken for a gutter.
    let base = [d[0] % 200, d[1] % 200, d[2] % 200];
    match tile.kind {
        TileKind::Garment => base,
        TileKind::Object => [base[0] / 2, base[1] / 2, base[2] / 2],
    }
}

/// Grid shape used for `n` tiles: near-square, row-major.
pub fn grid(n: usize) -> (usize, usize) {
    let cols = (n as f64).sqrt().ceil().max(1.0) as usize;
    let rows = n.div_ceil(cols);
    (cols, rows)
}

pub fn render_collage(req: &ImageRequest, variant: u32) -> Result<Vec<u8>, BackendError> {
    let tiles: Vec<TileSpec> = match &req.tiles {
        Some(t) => t.clone(),
        None => vec![TileSpec { label: req.prompt_text.clone(), kind: TileKind::Garment }],
    };
    let (cols, rows) = grid(tiles.len());
    let gutter = ((req.size_hint.0.min(req.size_hint.1) / 64) as usize).max(2);
    let fit = |want: u32, cells: usize| -> (usize, usize) {
        let want = want as usize;
        let cell = (want.saturating_sub(gutter * (cells + 1)) / cells).max(2);
        (cell, cell * cells + gutter * (cells + 1))
    };
    let (cell_w, width) = fit(req.size_hint.0, cols);
    let (cell_h, height) = fit(req.size_hint.1, rows);

    let mut pixels = vec![255u8; width * height * 3];
    for (i, tile) in tiles.iter().enumerate() {
        let colour = tile_colour(req, variant, i, tile);
        let (c, r) = (i % cols, i / cols);
        let x0 = gutter + c * (cell_w + gutter);
        let y0 = gutter + r * (cell_h + gutter);
        for y in y0..y0 + cell_h {
            for x in x0..x0 + cell_w {
                let p = (y * width + x) * 3;
                pixels[p..p + 3].copy_from_slice(&colour);
            }
        }
    }

    let meta = CollageMetadata {
        prompt: req.prompt_text.clone(),
        seed: req.seed,
        variant,
        tiles,
    };
    let encode_err = |e: png::EncodingError| BackendError::Structural(format!("png encoding: {e}"));
    let mut out = Vec::new();
    {
        let mut enc = png::Encoder::new(&mut out, width as u32, height as u32);
        enc.set_color(png::ColorType::Rgb);
        enc.set_depth(png::BitDepth::Eight);
        enc.set_compression(png::Compression::Fast);
        enc.add_itxt_chunk(LAYOUT_CHUNK.into(), serde_json::to_string(&meta).expect("metadata"))
            .map_err(encode_err)?;
        let mut w = enc.write_header().map_err(encode_err)?;
        w.write_image_data(&pixels).map_err(encode_err)?;
        w.finish().map_err(encode_err)?;
    }
    Ok(out)
}

/// Reads the layout chunk back from a collage.
pub fn read_metadata(bytes: &[u8]) -> Option<CollageMetadata> {
    let decoder = png::Decoder::new(std::io::Cursor::new(bytes));
    let reader = decoder.read_info().ok()?;
    let chunk = reader.info().utf8_text.iter().find(|c| c.keyword == LAYOUT_CHUNK)?;
    serde_json::from_str(&chunk.get_text().ok()?).ok()
}

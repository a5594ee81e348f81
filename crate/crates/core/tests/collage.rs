use clay_core::backends::image::{read_metadata, render_collage, GUTTER_RGB};
use clay_core::backends::{ImageRequest, TileKind, TileSpec};
use proptest::prelude::*;

/// Decodes an RGB PNG into (width, height, pixels).
fn decode(bytes: &[u8]) -> (usize, usize, Vec<u8>) {
    let mut reader = png::Decoder::new(std::io::Cursor::new(bytes)).read_info().unwrap();
    let mut buf = vec![0; reader.output_buffer_size().unwrap()];
    let info = reader.next_frame(&mut buf).unwrap();
    buf.truncate(info.buffer_size());
    (info.width as usize, info.height as usize, buf)
}

/// Counts 4-connected regions of non-gutter pixels by flood fill.
fn count_components(w: usize, h: usize, px: &[u8]) -> usize {
    let filled = |i: usize| px[i * 3..i * 3 + 3] != GUTTER_RGB;
    let mut seen = vec![false; w * h];
    let mut n = 0;
    for start in 0..w * h {
        if seen[start] || !filled(start) {
            continue;
        }
        n += 1;
        let mut stack = vec![start];
        seen[start] = true;
        while let Some(i) = stack.pop() {
            let (x, y) = (i % w, i / w);
            let mut next = Vec::with_capacity(4);
            if x > 0 {
                next.push(i - 1);
            }
            if x + 1 < w {
                next.push(i + 1);
            }
            if y > 0 {
                next.push(i - w);
            }
            if y + 1 < h {
                next.push(i + w);
            }
            for j in next {
                if !seen[j] && filled(j) {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
    }
    n
}

fn request(n: usize, garments: usize, size: u32) -> ImageRequest {
    ImageRequest {
        prompt_text: "Fashion moodboard collage".into(),
        count: 1,
        size_hint: (size, size),
        seed: Some(5),
        tiles: Some(
            (0..n)
                .map(|i| TileSpec {
                    label: format!("keyword {i}"),
                    kind: if i < garments { TileKind::Garment } else { TileKind::Object },
                })
                .collect(),
        ),
    }
}

#[test]
fn six_tile_moodboard_has_six_regions() {
    let bytes = render_collage(&request(6, 3, 256), 0).unwrap();
    let (w, h, px) = decode(&bytes);
    assert_eq!(count_components(w, h, &px), 6);
    let meta = read_metadata(&bytes).unwrap();
    assert_eq!(meta.tiles.len(), 6);
    assert_eq!(meta.tiles.iter().filter(|t| t.kind == TileKind::Garment).count(), 3);
}

#[test]
fn untiled_request_renders_one_region() {
    let mut req = request(1, 1, 64);
    req.tiles = None;
    let bytes = render_collage(&req, 0).unwrap();
    let (w, h, px) = decode(&bytes);
    assert_eq!(count_components(w, h, &px), 1);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]
    #[test]
    fn region_count_equals_tile_count(n in 1usize..=16, g in 0usize..=16, size in 16u32..160) {
        let bytes = render_collage(&request(n, g.min(n), size), 1).unwrap();
        let (w, h, px) = decode(&bytes);
        prop_assert_eq!(count_components(w, h, &px), n);
        prop_assert_eq!(read_metadata(&bytes).unwrap().tiles.len(), n);
    }
}

//! Draws tracked boxes and labels onto a frame copy.
//!
//! Mask boxes are green (0,255,0), No_Mask boxes red (255,0,0). Fresh
//! detections get a 3-pixel border, coasting tracks a 1-pixel border when
//! distinct drawing is on. The label line ("Mask 3") renders in an embedded
//! 5x7 bitmap font just above the box and is skipped entirely when it would
//! leave the raster.

use crate::frame::{Frame, MaskLabel};
use crate::roi::crop_rect;
use crate::tracker::TrackOutput;

pub const MASK_COLOR: [u8; 3] = [0, 255, 0];
pub const NO_MASK_COLOR: [u8; 3] = [255, 0, 0];

const GLYPH_W: u32 = 5;
const GLYPH_H: u32 = 7;
/// Glyph advance: 5 pixel columns plus 1 of spacing.
const ADVANCE: u32 = GLYPH_W + 1;

/// Row bitmaps, bit 4 = leftmost column.
fn glyph(c: char) -> [u8; 7] {
    match c {
        'M' => [0x11, 0x1B, 0x15, 0x11, 0x11, 0x11, 0x11],
        'N' => [0x11, 0x19, 0x15, 0x13, 0x11, 0x11, 0x11],
        'a' => [0x00, 0x00, 0x0E, 0x01, 0x0F, 0x11, 0x0F],
        's' => [0x00, 0x00, 0x0F, 0x10, 0x0E, 0x01, 0x1E],
        'k' => [0x10, 0x10, 0x12, 0x14, 0x18, 0x14, 0x12],
        'o' => [0x00, 0x00, 0x0E, 0x11, 0x11, 0x11, 0x0E],
        '_' => [0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x1F],
        '0' => [0x0E, 0x11, 0x13, 0x15, 0x19, 0x11, 0x0E],
        '1' => [0x04, 0x0C, 0x04, 0x04, 0x04, 0x04, 0x0E],
        '2' => [0x0E, 0x11, 0x01, 0x02, 0x04, 0x08, 0x1F],
        '3' => [0x1F, 0x02, 0x04, 0x02, 0x01, 0x11, 0x0E],
        '4' => [0x02, 0x06, 0x0A, 0x12, 0x1F, 0x02, 0x02],
        '5' => [0x1F, 0x10, 0x1E, 0x01, 0x01, 0x11, 0x0E],
        '6' => [0x06, 0x08, 0x10, 0x1E, 0x11, 0x11, 0x0E],
        '7' => [0x1F, 0x01, 0x02, 0x04, 0x08, 0x08, 0x08],
        '8' => [0x0E, 0x11, 0x11, 0x0E, 0x11, 0x11, 0x0E],
        '9' => [0x0E, 0x11, 0x11, 0x0F, 0x01, 0x02, 0x0C],
        _ => [0; 7], // space and anything unmapped
    }
}

fn fill_rect(frame: &mut Frame, x: u32, y: u32, w: u32, h: u32, rgb: [u8; 3]) {
    for row in y..(y.saturating_add(h)).min(frame.dims.height) {
        for col in x..(x.saturating_add(w)).min(frame.dims.width) {
            frame.set(col, row, rgb);
        }
    }
}

fn draw_border(frame: &mut Frame, x: u32, y: u32, w: u32, h: u32, t: u32, rgb: [u8; 3]) {
    let t = t.min(w).min(h);
    fill_rect(frame, x, y, w, t, rgb); // top
    fill_rect(frame, x, y + h - t, w, t, rgb); // bottom
    fill_rect(frame, x, y, t, h, rgb); // left
    fill_rect(frame, x + w - t, y, t, h, rgb); // right
}

fn draw_text(frame: &mut Frame, text: &str, x: u32, y: u32, rgb: [u8; 3]) {
    let mut pen = x;
    for c in text.chars() {
        let rows = glyph(c);
        for (dy, bits) in rows.iter().enumerate() {
            for dx in 0..GLYPH_W {
                if bits >> (GLYPH_W - 1 - dx) & 1 == 1 {
                    frame.set(pen + dx, y + dy as u32, rgb);
                }
            }
        }
        pen += ADVANCE;
    }
}

fn text_width(text: &str) -> u32 {
    let n = text.chars().count() as u32;
    if n == 0 {
        0
    } else {
        n * ADVANCE - 1
    }
}

/// Returns an annotated copy of `frame`. Boxes must already be clamped to
/// the raster; results are drawn in order, later boxes over earlier ones.
pub fn annotate(frame: &Frame, results: &[TrackOutput], draw_coasting_distinct: bool) -> Frame {
    let mut out = frame.clone();
    for r in results {
        let Some((x, y, w, h)) = crop_rect(&r.bbox, frame.dims) else {
            continue;
        };
        let color = match r.label {
            MaskLabel::Mask => MASK_COLOR,
            MaskLabel::NoMask => NO_MASK_COLOR,
        };
        let thickness = if r.coasting && draw_coasting_distinct {
            1
        } else {
            3
        };
        draw_border(&mut out, x, y, w, h, thickness, color);

        let text = format!("{} {}", r.label.as_str(), r.id);
        let tw = text_width(&text);
        // Text sits one row above the box; skipped when any part of it
        // would leave the raster.
        if y > GLYPH_H && x + tw <= frame.dims.width {
            draw_text(&mut out, &text, x, y - GLYPH_H - 1, color);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{BoundingBox, FrameDims};

    fn output(x: f64, y: f64, w: f64, h: f64, label: MaskLabel, coasting: bool) -> TrackOutput {
        TrackOutput {
            id: 0,
            bbox: BoundingBox::new(x, y, w, h),
            label,
            confidence: 1.0,
            coasting,
        }
    }

    #[test]
    fn empty_results_leave_pixels_untouched() {
        let frame = Frame::filled(FrameDims::new(40, 30), [9, 9, 9], 0);
        let out = annotate(&frame, &[], true);
        assert_eq!(out.pixels, frame.pixels);
    }

    #[test]
    fn mask_box_changes_exactly_the_border_outside_text() {
        let frame = Frame::filled(FrameDims::new(64, 64), [9, 9, 9], 0);
        let r = output(20.0, 20.0, 24.0, 24.0, MaskLabel::Mask, false);
        let out = annotate(&frame, std::slice::from_ref(&r), true);
        for y in 0..64u32 {
            for x in 0..64u32 {
                let in_box = (20..44).contains(&x) && (20..44).contains(&y);
                let in_border = in_box
                    && ((20..23).contains(&x)
                        || (41..44).contains(&x)
                        || (20..23).contains(&y)
                        || (41..44).contains(&y));
                let in_text_band = (20..64).contains(&x) && (12..19).contains(&y);
                let px = out.get(x, y);
                if in_border {
                    assert_eq!(px, MASK_COLOR, "border pixel at ({x},{y})");
                } else if !in_text_band {
                    assert_eq!(px, [9, 9, 9], "pixel at ({x},{y}) should be untouched");
                }
            }
        }
        // The text band contains some label pixels in the box color.
        let mut text_pixels = 0;
        for y in 12..19u32 {
            for x in 20..64u32 {
                if out.get(x, y) == MASK_COLOR {
                    text_pixels += 1;
                }
            }
        }
        assert!(text_pixels > 10);
    }

    #[test]
    fn coasting_border_is_one_pixel() {
        let frame = Frame::filled(FrameDims::new(64, 64), [9, 9, 9], 0);
        let r = output(20.0, 20.0, 24.0, 24.0, MaskLabel::NoMask, true);
        let out = annotate(&frame, std::slice::from_ref(&r), true);
        assert_eq!(out.get(20, 30), NO_MASK_COLOR);
        assert_eq!(out.get(21, 30), [9, 9, 9], "second ring must stay clear");
        // With distinct drawing off, coasting uses the full 3px border.
        let thick = annotate(&frame, std::slice::from_ref(&r), false);
        assert_eq!(thick.get(21, 30), NO_MASK_COLOR);
    }

    #[test]
    fn text_skipped_when_leaving_raster() {
        let frame = Frame::filled(FrameDims::new(64, 64), [9, 9, 9], 0);
        // Box touches the top edge: no room for the label line.
        let r = output(10.0, 2.0, 20.0, 20.0, MaskLabel::Mask, false);
        let out = annotate(&frame, std::slice::from_ref(&r), true);
        for y in 0..2u32 {
            for x in 0..64u32 {
                assert_eq!(out.get(x, y), [9, 9, 9]);
            }
        }
    }
}

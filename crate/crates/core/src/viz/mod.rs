//! Plot rendering: joint-angle-vs-time previews and confusion-matrix
//! heatmaps, drawn directly onto PNG rasters with an embedded bitmap
//! font. Output images use a fixed light palette.

mod font;

use image::{Rgb, RgbImage};

use crate::metrics::{ConfusionMatrix, PRED_CLASSES, TRUE_CLASSES};
use crate::motion::{JointTrajectory, RobotProfile};

pub const BACKGROUND: Rgb<u8> = Rgb([255, 255, 255]);
const AXIS: Rgb<u8> = Rgb([20, 20, 20]);
const GRID: Rgb<u8> = Rgb([225, 225, 225]);
/// Deepest heatmap shade.
const HEAT: Rgb<u8> = Rgb([8, 48, 107]);

/// Twelve visually distinct series colors, one per robot joint.
pub const SERIES_COLORS: [Rgb<u8>; 12] = [
    Rgb([230, 25, 75]),
    Rgb([60, 180, 75]),
    Rgb([0, 130, 200]),
    Rgb([245, 130, 48]),
    Rgb([145, 30, 180]),
    Rgb([0, 128, 128]),
    Rgb([240, 50, 230]),
    Rgb([128, 128, 0]),
    Rgb([170, 110, 40]),
    Rgb([128, 0, 0]),
    Rgb([0, 0, 128]),
    Rgb([70, 180, 240]),
];

/// Bounds-checked drawing surface. Coordinates may run off the image;
/// out-of-range pixels are dropped silently so callers never clip by
/// hand.
pub struct Canvas {
    image: RgbImage,
}

impl Canvas {
    pub fn new(width: u32, height: u32, background: Rgb<u8>) -> Self {
        Self {
            image: RgbImage::from_pixel(width, height, background),
        }
    }

    pub fn set(&mut self, x: i64, y: i64, color: Rgb<u8>) {
        if x >= 0 && y >= 0 && (x as u32) < self.image.width() && (y as u32) < self.image.height()
        {
            self.image.put_pixel(x as u32, y as u32, color);
        }
    }

    pub fn line(&mut self, x0: f64, y0: f64, x1: f64, y1: f64, color: Rgb<u8>) {
        let steps = (x1 - x0).abs().max((y1 - y0).abs()).ceil().max(1.0) as usize;
        for i in 0..=steps {
            let t = i as f64 / steps as f64;
            self.set(
                (x0 + t * (x1 - x0)).round() as i64,
                (y0 + t * (y1 - y0)).round() as i64,
                color,
            );
        }
    }

    pub fn fill_rect(&mut self, x: i64, y: i64, width: i64, height: i64, color: Rgb<u8>) {
        for yy in y..y + height {
            for xx in x..x + width {
                self.set(xx, yy, color);
            }
        }
    }

    /// Draw text with its top-left corner at (x, y).
    pub fn text(&mut self, x: i64, y: i64, text: &str, color: Rgb<u8>) {
        for (i, c) in text.chars().enumerate() {
            let origin = x + (i as i64) * font::GLYPH_ADVANCE as i64;
            for (row, bits) in font::glyph(c).iter().enumerate() {
                for col in 0..font::GLYPH_WIDTH {
                    if bits & (1 << (font::GLYPH_WIDTH - 1 - col)) != 0 {
                        self.set(origin + col as i64, y + row as i64, color);
                    }
                }
            }
        }
    }

    /// Pixel width of a rendered string.
    pub fn text_width(text: &str) -> i64 {
        let n = text.chars().count() as i64;
        if n == 0 {
            0
        } else {
            n * font::GLYPH_ADVANCE as i64 - 1
        }
    }

    pub fn into_image(self) -> RgbImage {
        self.image
    }
}

/// Encode an image as PNG bytes (callers handle file placement).
pub fn encode_png(image: &RgbImage) -> Vec<u8> {
    let mut bytes = Vec::new();
    image
        .write_to(
            &mut std::io::Cursor::new(&mut bytes),
            image::ImageFormat::Png,
        )
        .expect("png encoding into memory cannot fail");
    bytes
}

const TRAJ_WIDTH: u32 = 960;
const TRAJ_HEIGHT: u32 = 600;
const TRAJ_LEFT: f64 = 70.0;
const TRAJ_RIGHT_MARGIN: f64 = 170.0;
const TRAJ_TOP: f64 = 20.0;
const TRAJ_BOTTOM_MARGIN: f64 = 45.0;

/// Render one angle-vs-time line per joint column, with axes, grid,
/// and a legend naming the profile's joints.
pub fn plot_trajectory(trajectory: &JointTrajectory, profile: &RobotProfile) -> RgbImage {
    let mut canvas = Canvas::new(TRAJ_WIDTH, TRAJ_HEIGHT, BACKGROUND);
    let frames = trajectory.frames();
    let left = TRAJ_LEFT;
    let right = TRAJ_WIDTH as f64 - TRAJ_RIGHT_MARGIN;
    let top = TRAJ_TOP;
    let bottom = TRAJ_HEIGHT as f64 - TRAJ_BOTTOM_MARGIN;

    let t0 = frames.first().map(|f| f.timestamp).unwrap_or(0.0);
    let t1 = frames.last().map(|f| f.timestamp).unwrap_or(1.0);
    let t_span = if t1 > t0 { t1 - t0 } else { 1.0 };

    let mut a_min = f64::INFINITY;
    let mut a_max = f64::NEG_INFINITY;
    for frame in frames {
        for &a in &frame.angles {
            a_min = a_min.min(a);
            a_max = a_max.max(a);
        }
    }
    if !a_min.is_finite() || !a_max.is_finite() {
        a_min = -1.0;
        a_max = 1.0;
    }
    let pad = ((a_max - a_min) * 0.05).max(0.05);
    a_min -= pad;
    a_max += pad;
    let a_span = a_max - a_min;

    let px = |t: f64| left + (t - t0) / t_span * (right - left);
    let py = |a: f64| bottom - (a - a_min) / a_span * (bottom - top);

    // Grid and tick labels.
    for i in 0..=4 {
        let frac = i as f64 / 4.0;
        let x = left + frac * (right - left);
        canvas.line(x, top, x, bottom, GRID);
        let label = format!("{:.2}", t0 + frac * t_span);
        canvas.text(
            (x as i64) - Canvas::text_width(&label) / 2,
            bottom as i64 + 6,
            &label,
            AXIS,
        );

        let y = bottom - frac * (bottom - top);
        canvas.line(left, y, right, y, GRID);
        let label = format!("{:.2}", a_min + frac * a_span);
        canvas.text(
            left as i64 - Canvas::text_width(&label) - 6,
            (y as i64) - 3,
            &label,
            AXIS,
        );
    }
    canvas.line(left, bottom, right, bottom, AXIS);
    canvas.line(left, top, left, bottom, AXIS);
    canvas.text(
        ((left + right) / 2.0) as i64 - Canvas::text_width("time (s)") / 2,
        TRAJ_HEIGHT as i64 - 14,
        "time (s)",
        AXIS,
    );
    canvas.text(4, 4, "angle (rad)", AXIS);

    // One polyline per joint column, legend entry alongside.
    let joints = profile.joints();
    for column in 0..trajectory.width() {
        let color = SERIES_COLORS[column % SERIES_COLORS.len()];
        for pair in frames.windows(2) {
            canvas.line(
                px(pair[0].timestamp),
                py(pair[0].angles[column]),
                px(pair[1].timestamp),
                py(pair[1].angles[column]),
                color,
            );
        }
        let ly = top as i64 + 8 + column as i64 * 14;
        let lx = right as i64 + 12;
        canvas.fill_rect(lx, ly + 2, 9, 3, color);
        let name = joints
            .get(column)
            .map(|j| j.name.as_str())
            .unwrap_or("extra");
        canvas.text(lx + 13, ly, name, AXIS);
    }
    canvas.into_image()
}

const CM_LEFT: i64 = 120;
const CM_TOP: i64 = 48;
const CM_CELL_W: i64 = 100;
const CM_CELL_H: i64 = 64;
const CM_PAD: i64 = 12;

fn heat_shade(v: f64) -> Rgb<u8> {
    let channel = |a: u8, b: u8| (a as f64 + (b as f64 - a as f64) * v).round() as u8;
    Rgb([
        channel(BACKGROUND[0], HEAT[0]),
        channel(BACKGROUND[1], HEAT[1]),
        channel(BACKGROUND[2], HEAT[2]),
    ])
}

/// Render the matrix as a shaded grid: rows are true labels, columns
/// predictions, shade scales linearly with count.
pub fn plot_confusion(matrix: &ConfusionMatrix) -> RgbImage {
    let width = (CM_LEFT + 4 * CM_CELL_W + CM_PAD) as u32;
    let height = (CM_TOP + 3 * CM_CELL_H + CM_PAD) as u32;
    let mut canvas = Canvas::new(width, height, BACKGROUND);

    let max = matrix.counts.iter().flatten().copied().max().unwrap_or(0).max(1);

    for (col, label) in PRED_CLASSES.iter().enumerate() {
        let x = CM_LEFT + col as i64 * CM_CELL_W + CM_CELL_W / 2;
        canvas.text(
            x - Canvas::text_width(label.token()) / 2,
            CM_TOP - 16,
            label.token(),
            AXIS,
        );
    }
    for (row, label) in TRUE_CLASSES.iter().enumerate() {
        let y = CM_TOP + row as i64 * CM_CELL_H + CM_CELL_H / 2 - 3;
        canvas.text(
            CM_LEFT - Canvas::text_width(label.token()) - 10,
            y,
            label.token(),
            AXIS,
        );
    }

    for row in 0..3 {
        for col in 0..4 {
            let count = matrix.counts[row][col];
            let v = count as f64 / max as f64;
            let x = CM_LEFT + col as i64 * CM_CELL_W;
            let y = CM_TOP + row as i64 * CM_CELL_H;
            canvas.fill_rect(x, y, CM_CELL_W, CM_CELL_H, heat_shade(v));
            for edge in 0..=1 {
                canvas.line(
                    (x + edge * CM_CELL_W) as f64,
                    y as f64,
                    (x + edge * CM_CELL_W) as f64,
                    (y + CM_CELL_H) as f64,
                    AXIS,
                );
                canvas.line(
                    x as f64,
                    (y + edge * CM_CELL_H) as f64,
                    (x + CM_CELL_W) as f64,
                    (y + edge * CM_CELL_H) as f64,
                    AXIS,
                );
            }
            let text = count.to_string();
            let text_color = if v > 0.5 { BACKGROUND } else { AXIS };
            canvas.text(
                x + CM_CELL_W / 2 - Canvas::text_width(&text) / 2,
                y + CM_CELL_H / 2 - 3,
                &text,
                text_color,
            );
        }
    }
    canvas.into_image()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::motion::{JointFrame, JointSpec, JOINT_COUNT};

    fn profile() -> RobotProfile {
        let joints = (0..JOINT_COUNT)
            .map(|i| JointSpec::new(format!("J{i}"), -3.0, 3.0, 7.0).unwrap())
            .collect();
        RobotProfile::new("test", joints).unwrap()
    }

    #[test]
    fn canvas_clips_out_of_range_writes() {
        let mut canvas = Canvas::new(4, 4, BACKGROUND);
        canvas.set(-1, 0, AXIS);
        canvas.set(0, 100, AXIS);
        canvas.set(2, 2, AXIS);
        let image = canvas.into_image();
        assert_eq!(image.get_pixel(2, 2), &AXIS);
        assert_eq!(image.get_pixel(0, 0), &BACKGROUND);
    }

    #[test]
    fn line_touches_both_endpoints() {
        let mut canvas = Canvas::new(20, 20, BACKGROUND);
        canvas.line(1.0, 1.0, 17.0, 9.0, AXIS);
        let image = canvas.into_image();
        assert_eq!(image.get_pixel(1, 1), &AXIS);
        assert_eq!(image.get_pixel(17, 9), &AXIS);
    }

    #[test]
    fn text_renders_glyph_pixels() {
        let mut canvas = Canvas::new(10, 10, BACKGROUND);
        canvas.text(0, 0, "A", AXIS);
        let image = canvas.into_image();
        // Top row of 'A' is .###. so (2, 0) is inked and (0, 0) is not.
        assert_eq!(image.get_pixel(2, 0), &AXIS);
        assert_eq!(image.get_pixel(0, 0), &BACKGROUND);
        assert_eq!(Canvas::text_width("AB"), 11);
        assert_eq!(Canvas::text_width(""), 0);
    }

    #[test]
    fn png_bytes_decode_back() {
        let canvas = Canvas::new(10, 8, BACKGROUND);
        let bytes = encode_png(&canvas.into_image());
        let decoded = image::load_from_memory(&bytes).unwrap();
        assert_eq!(decoded.width(), 10);
        assert_eq!(decoded.height(), 8);
    }

    #[test]
    fn trajectory_plot_draws_every_series() {
        let frames = (0..5)
            .map(|i| {
                let t = i as f64 * 0.25;
                let angles = (0..JOINT_COUNT).map(|j| t + j as f64 * 0.1).collect();
                JointFrame::new(t, angles)
            })
            .collect();
        let trajectory = JointTrajectory::new("test", frames).unwrap();
        let image = plot_trajectory(&trajectory, &profile());
        assert_eq!((image.width(), image.height()), (TRAJ_WIDTH, TRAJ_HEIGHT));
        for color in SERIES_COLORS {
            assert!(
                image.pixels().any(|p| *p == color),
                "series color {color:?} missing from plot"
            );
        }
    }

    #[test]
    fn confusion_plot_shades_by_count() {
        let matrix = ConfusionMatrix {
            counts: [[101, 0, 6, 10], [28, 711, 135, 38], [26, 86, 2567, 28]],
        };
        let image = plot_confusion(&matrix);
        // Center of the largest cell (row 2, col 2) is the deepest
        // shade; an empty cell keeps the background.
        let cx = (CM_LEFT + 2 * CM_CELL_W + CM_CELL_W / 4) as u32;
        let cy = (CM_TOP + 2 * CM_CELL_H + CM_CELL_H / 4) as u32;
        assert_eq!(image.get_pixel(cx, cy), &HEAT);
        let ex = (CM_LEFT + CM_CELL_W + CM_CELL_W / 4) as u32;
        let ey = (CM_TOP + CM_CELL_H / 4) as u32;
        assert_eq!(image.get_pixel(ex, ey), &BACKGROUND);
    }
}

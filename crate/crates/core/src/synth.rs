//! Synthetic clips: one of four primitives, each with its own motion
//! (translating square, rocking bar, bobbing blob, growing ring), standing
//! upright or lying prone over a plain background.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::labels::{Action, Actor, Background};
use crate::video::{Rgb, VideoVolume};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Shape {
    Upright,
    Prone,
}

impl Shape {
    pub const ALL: [Shape; 2] = [Shape::Upright, Shape::Prone];

    pub fn actor(self) -> Actor {
        match self {
            Shape::Upright => Actor::Human,
            Shape::Prone => Actor::Animal,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Shape::Upright => "upright",
            Shape::Prone => "prone",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Motion {
    Translate,
    Rotate,
    Oscillate,
    Expand,
}

impl Motion {
    pub const ALL: [Motion; 4] = [Motion::Translate, Motion::Rotate, Motion::Oscillate, Motion::Expand];

    /// Action label the motion stands in for.
    pub fn action(self) -> Action {
        match self {
            Motion::Translate => Action::Running,
            Motion::Rotate => Action::Spinning,
            Motion::Oscillate => Action::Jumping,
            Motion::Expand => Action::Flying,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Motion::Translate => "translate",
            Motion::Rotate => "rotate",
            Motion::Oscillate => "oscillate",
            Motion::Expand => "expand",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClipSpec {
    pub id: String,
    pub shape: Shape,
    pub motion: Motion,
    pub seed: u64,
    pub width: usize,
    pub height: usize,
    pub frames: usize,
}

impl ClipSpec {
    pub fn new(shape: Shape, motion: Motion, index: usize, seed: u64) -> Self {
        ClipSpec {
            id: format!("{}_{}_{index:02}", shape.as_str(), motion.as_str()),
            shape,
            motion,
            seed,
            width: 80,
            height: 60,
            frames: 16,
        }
    }

    pub fn actor(&self) -> Actor {
        self.shape.actor()
    }

    pub fn action(&self) -> Action {
        self.motion.action()
    }

    pub fn background(&self) -> Background {
        Background::Static
    }
}

/// `clips_per_class` clips for every shape and motion pair, seeds derived
/// from `seed`.
pub fn corpus(clips_per_class: usize, seed: u64) -> Vec<ClipSpec> {
    let mut out = Vec::new();
    for shape in Shape::ALL {
        for motion in Motion::ALL {
            for i in 0..clips_per_class {
                let s = seed
                    .wrapping_mul(0x9E37_79B9_7F4A_7C15)
                    .wrapping_add((out.len() as u64 + 1).wrapping_mul(0xD1B5_4A32_D192_ED03));
                out.push(ClipSpec::new(shape, motion, i, s));
            }
        }
    }
    out
}

/// Pose of the figure in one frame.
#[derive(Debug, Clone, Copy)]
struct Pose {
    cx: f32,
    cy: f32,
    angle: f32,
    scale: f32,
}

pub fn render_clip(spec: &ClipSpec) -> VideoVolume {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let (w, h) = (spec.width as f32, spec.height as f32);

    let bg: Rgb = [rng.gen_range(40.0..90.0), rng.gen_range(60.0..110.0), rng.gen_range(90.0..140.0)];
    let fg: Rgb = [rng.gen_range(200.0..250.0), rng.gen_range(150.0..230.0), rng.gen_range(20.0..80.0)];
    let size = rng.gen_range(0.9f32..1.1);
    let phase = rng.gen_range(0.0f32..std::f32::consts::TAU);
    let direction = if rng.gen_bool(0.5) { 1.0f32 } else { -1.0 };
    let speed = rng.gen_range(1.6f32..2.4);
    let jitter = (rng.gen_range(-4.0f32..4.0), rng.gen_range(-3.0f32..3.0));

    let n = spec.frames as f32;
    let tau = std::f32::consts::TAU;
    let pose = |t: usize| -> Pose {
        let t = t as f32;
        let mut p = Pose {
            cx: w / 2.0 + jitter.0,
            cy: h / 2.0 + jitter.1,
            angle: 0.0,
            scale: size,
        };
        match spec.motion {
            Motion::Translate => p.cx += direction * speed * (t - (n - 1.0) / 2.0),
            Motion::Rotate => p.angle = direction * 0.5 * (tau * t / n + phase).sin(),
            Motion::Oscillate => p.cy += 6.0 * (tau * t / 8.0 + phase).sin(),
            Motion::Expand => p.scale = size * (0.65 + 0.6 * t / (n - 1.0)),
        }
        p
    };

    let mut v = VideoVolume::new(spec.width, spec.height, spec.frames).expect("non-empty clip");
    const SS: usize = 3;
    for t in 0..spec.frames {
        let p = pose(t);
        let (sin, cos) = p.angle.sin_cos();
        for y in 0..spec.height {
            for x in 0..spec.width {
                let mut cover = 0usize;
                for sy in 0..SS {
                    for sx in 0..SS {
                        let px = x as f32 + (sx as f32 + 0.5) / SS as f32 - 0.5;
                        let py = y as f32 + (sy as f32 + 0.5) / SS as f32 - 0.5;
                        // Into figure coordinates: x right, y down, unit scale.
                        let (dx, dy) = (px - p.cx, py - p.cy);
                        let u = (cos * dx + sin * dy) / p.scale;
                        let q = (-sin * dx + cos * dy) / p.scale;
                        cover += inside(spec.motion, spec.shape, u, q) as usize;
                    }
                }
                let a = cover as f32 / (SS * SS) as f32;
                v.set(t, y, x, std::array::from_fn(|c| fg[c] * a + bg[c] * (1.0 - a)));
            }
        }
    }
    v
}

/// Each motion has its own primitive; prone is the upright one turned on
/// its side.
fn inside(motion: Motion, shape: Shape, u: f32, v: f32) -> bool {
    let (a, b) = match shape {
        Shape::Upright => (u, v),
        Shape::Prone => (v, u),
    };
    // (a, b): a across, b along the long axis.
    let ellipse = |ra: f32, rb: f32| (a / ra).powi(2) + (b / rb).powi(2) <= 1.0;
    match motion {
        Motion::Translate => a.abs() <= 6.0 && b.abs() <= 11.0,
        Motion::Rotate => a.abs() <= 2.5 && b.abs() <= 15.0,
        Motion::Oscillate => ellipse(6.5, 12.0),
        Motion::Expand => ellipse(8.0, 14.0) && !ellipse(4.0, 9.0),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn corpus_has_every_class_pair() {
        let c = corpus(3, 1);
        assert_eq!(c.len(), 24);
        let ids: std::collections::HashSet<_> = c.iter().map(|s| s.id.clone()).collect();
        assert_eq!(ids.len(), 24);
        assert_eq!(c, corpus(3, 1));
    }

    #[test]
    fn clips_are_deterministic_and_animated() {
        let spec = &corpus(1, 4)[0];
        let a = render_clip(spec);
        assert_eq!(a, render_clip(spec));
        assert_eq!(a.frame_count(), spec.frames);
        assert_ne!(a.frame_pixels(0), a.frame_pixels(spec.frames - 1));
    }
}

use serde::{Deserialize, Serialize};

use super::Image;

/// One of the eight flip/rotation symmetries of the square.
///
/// Applying a transform rotates counter-clockwise by `rotation` quarter turns,
/// then mirrors left-right when `hflip` is set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GeomTransform {
    pub rotation: u8,
    pub hflip: bool,
}

impl GeomTransform {
    pub const IDENTITY: GeomTransform = GeomTransform { rotation: 0, hflip: false };

    pub fn new(rotation: u8, hflip: bool) -> Self {
        Self { rotation: rotation % 4, hflip }
    }

    /// All eight transforms in a fixed order: rotations 0..4 without flip, then with flip.
    pub fn all() -> [GeomTransform; 8] {
        let mut out = [Self::IDENTITY; 8];
        for (i, t) in out.iter_mut().enumerate() {
            *t = Self::new((i % 4) as u8, i >= 4);
        }
        out
    }

    pub fn inverse(self) -> Self {
        if self.hflip {
            // flip∘rot(r) is an involution
            self
        } else {
            Self::new((4 - self.rotation) % 4, false)
        }
    }

    /// The transform equivalent to applying `self` and then `next`.
    pub fn then(self, next: GeomTransform) -> Self {
        if self.hflip {
            Self::new((4 + self.rotation - next.rotation) % 4, !next.hflip)
        } else {
            Self::new(self.rotation + next.rotation, next.hflip)
        }
    }
}

pub fn apply_transform(img: &Image, t: GeomTransform) -> Image {
    let mut out = img.clone();
    for _ in 0..t.rotation % 4 {
        out = rot90(&out);
    }
    if t.hflip {
        out = hflip(&out);
    }
    out
}

// out[i][j] = in[j][W-1-i]
fn rot90(img: &Image) -> Image {
    let (c, h, w) = img.shape();
    Image::from_fn(c, w, h, |ch, i, j| img.get(ch, j, w - 1 - i)).expect("shape preserved")
}

fn hflip(img: &Image) -> Image {
    let (c, h, w) = img.shape();
    Image::from_fn(c, h, w, |ch, y, x| img.get(ch, y, w - 1 - x)).expect("shape preserved")
}

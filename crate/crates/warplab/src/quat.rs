//! Unit quaternions as rotations.
//!
//! Rotations are identified with unit quaternions up to sign; the canonical
//! representative has its first nonzero component (in w,x,y,z order)
//! positive. The bi-invariant distance between rotations is the rotation
//! angle of the relative rotation, 2*acos(|<p,q>|), in [0, pi].

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Quat {
    pub w: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Quat {
    pub const IDENTITY: Quat = Quat {
        w: 1.0,
        x: 0.0,
        y: 0.0,
        z: 0.0,
    };

    pub fn new(w: f64, x: f64, y: f64, z: f64) -> Self {
        Quat { w, x, y, z }
    }

    /// Rotation by `angle` about the (normalized) axis.
    pub fn from_axis_angle(axis: [f64; 3], angle: f64) -> Self {
        let n = (axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]).sqrt();
        assert!(n > 0.0, "axis must be nonzero");
        let (s, c) = ((angle / 2.0).sin(), (angle / 2.0).cos());
        Quat {
            w: c,
            x: s * axis[0] / n,
            y: s * axis[1] / n,
            z: s * axis[2] / n,
        }
    }

    pub fn norm(&self) -> f64 {
        (self.w * self.w + self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    pub fn conj(&self) -> Quat {
        Quat {
            w: self.w,
            x: -self.x,
            y: -self.y,
            z: -self.z,
        }
    }

    pub fn dot(&self, o: &Quat) -> f64 {
        self.w * o.w + self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn mul(&self, o: &Quat) -> Quat {
        Quat {
            w: self.w * o.w - self.x * o.x - self.y * o.y - self.z * o.z,
            x: self.w * o.x + self.x * o.w + self.y * o.z - self.z * o.y,
            y: self.w * o.y - self.x * o.z + self.y * o.w + self.z * o.x,
            z: self.w * o.z + self.x * o.y - self.y * o.x + self.z * o.w,
        }
    }

    pub fn scale(&self, s: f64) -> Quat {
        Quat {
            w: self.w * s,
            x: self.x * s,
            y: self.y * s,
            z: self.z * s,
        }
    }

    pub fn normalized(&self) -> Quat {
        self.scale(1.0 / self.norm())
    }

    /// Flip sign so the first nonzero component is positive.
    pub fn canonical_sign(&self) -> Quat {
        for c in [self.w, self.x, self.y, self.z] {
            if c > 0.0 {
                return *self;
            }
            if c < 0.0 {
                return self.scale(-1.0);
            }
        }
        *self
    }

    /// Rotation angle between two unit quaternions, in [0, pi].
    pub fn angle_to(&self, o: &Quat) -> f64 {
        2.0 * self.dot(o).abs().clamp(0.0, 1.0).acos()
    }

    /// Axis-angle logarithm of a unit quaternion (relative to identity),
    /// with angle in [0, pi].
    pub fn log(&self) -> [f64; 3] {
        let q = if self.w < 0.0 { self.scale(-1.0) } else { *self };
        let vn = (q.x * q.x + q.y * q.y + q.z * q.z).sqrt();
        if vn < 1e-300 {
            return [0.0, 0.0, 0.0];
        }
        let angle = 2.0 * vn.atan2(q.w);
        [angle * q.x / vn, angle * q.y / vn, angle * q.z / vn]
    }

    /// Inverse of [`Quat::log`]: v is an axis-angle vector with |v| <= pi.
    pub fn exp(v: [f64; 3]) -> Quat {
        let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if n < 1e-300 {
            return Quat::IDENTITY;
        }
        let (s, c) = ((n / 2.0).sin(), (n / 2.0).cos());
        Quat {
            w: c,
            x: s * v[0] / n,
            y: s * v[1] / n,
            z: s * v[2] / n,
        }
    }
}

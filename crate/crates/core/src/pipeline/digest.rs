use sha2::{Digest as _, Sha256};

use crate::geometry::{ColoredPointCloud, Pose, Sim3, Vec3};

/// SHA-256 over the exact bit patterns of the values fed in.
#[derive(Default)]
pub(crate) struct Fingerprint(Sha256);

impl Fingerprint {
    pub fn new(tag: &str) -> Self {
        let mut f = Self::default();
        f.bytes(tag.as_bytes());
        f
    }

    pub fn bytes(&mut self, b: &[u8]) -> &mut Self {
        self.0.update((b.len() as u64).to_le_bytes());
        self.0.update(b);
        self
    }

    pub fn u64(&mut self, v: u64) -> &mut Self {
        self.0.update(v.to_le_bytes());
        self
    }

    pub fn f64(&mut self, v: f64) -> &mut Self {
        self.0.update(v.to_bits().to_le_bytes());
        self
    }

    pub fn vec3(&mut self, v: &Vec3) -> &mut Self {
        for x in v.iter() {
            self.f64(*x);
        }
        self
    }

    pub fn pose(&mut self, p: &Pose) -> &mut Self {
        for x in p.rotation.matrix().iter() {
            self.f64(*x);
        }
        self.vec3(&p.translation)
    }

    pub fn sim3(&mut self, s: &Sim3) -> &mut Self {
        self.f64(s.scale());
        for x in s.rotation.matrix().iter() {
            self.f64(*x);
        }
        self.vec3(&s.translation)
    }

    pub fn cloud(&mut self, c: &ColoredPointCloud) -> &mut Self {
        self.u64(c.len() as u64);
        for (p, col) in c.positions().iter().zip(c.colors()) {
            self.vec3(p).vec3(col);
        }
        self
    }

    pub fn hex(&self) -> String {
        self.0.clone().finalize().iter().map(|b| format!("{b:02x}")).collect()
    }
}

use super::{centroid, Mat3, Rot3, Sim3, Vec3};
use crate::error::{Error, Result};

/// Closed-form least-squares similarity aligning `src` onto `tgt`:
/// minimizes `Σ ‖tgt_i − (s·R·src_i + t)‖²`.
pub fn umeyama_sim3(src: &[Vec3], tgt: &[Vec3]) -> Result<Sim3> {
    if src.len() != tgt.len() {
        return Err(Error::invalid(format!(
            "{} source points but {} target points",
            src.len(),
            tgt.len()
        )));
    }
    if src.len() < 3 {
        return Err(Error::degenerate(format!(
            "Umeyama needs at least 3 pairs, got {}",
            src.len()
        )));
    }
    let n = src.len() as f64;
    let mu_src = centroid(src);
    let mu_tgt = centroid(tgt);

    let mut cov = Mat3::zeros();
    let mut var_src = 0.0;
    for (x, y) in src.iter().zip(tgt) {
        let dx = x - mu_src;
        cov += (y - mu_tgt) * dx.transpose();
        var_src += dx.norm_squared();
    }
    cov /= n;
    var_src /= n;
    if var_src <= 0.0 || src.iter().all(|p| *p == src[0]) {
        return Err(Error::degenerate("source points all coincide"));
    }

    let svd = cov.svd(true, true);
    let (u, v_t) = (svd.u.unwrap(), svd.v_t.unwrap());
    let d = if u.determinant() * v_t.determinant() < 0.0 {
        -1.0
    } else {
        1.0
    };
    let sign = Vec3::new(1.0, 1.0, d);
    let rotation = Rot3::from_matrix_unchecked(u * Mat3::from_diagonal(&sign) * v_t);
    let scale = svd.singular_values.dot(&sign) / var_src;
    if !(scale > 0.0) {
        return Err(Error::degenerate("target points carry no spread to fit a scale"));
    }
    let translation = mu_tgt - scale * (rotation * mu_src);
    Sim3::new(scale, rotation, translation)
}

use nalgebra::{UnitQuaternion, Vector3};

pub fn floats(s: &str) -> Result<Vec<f64>, String> {
    s.split(',')
        .map(|p| {
            let p = p.trim();
            p.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| format!("\"{p}\" is not a finite number"))
        })
        .collect()
}

pub fn vec3(s: &str) -> Result<Vector3<f64>, String> {
    match floats(s)?.as_slice() {
        &[x, y, z] => Ok(Vector3::new(x, y, z)),
        v => Err(format!("expected 3 comma-separated values, got {}", v.len())),
    }
}

/// `w,x,y,z`, normalized.
pub fn quat(s: &str) -> Result<UnitQuaternion<f64>, String> {
    match floats(s)?.as_slice() {
        &[w, x, y, z] => {
            let q = nalgebra::Quaternion::new(w, x, y, z);
            if q.norm() < 1e-12 {
                return Err("quaternion has zero norm".into());
            }
            Ok(UnitQuaternion::from_quaternion(q))
        }
        v => Err(format!("expected 4 comma-separated values (w,x,y,z), got {}", v.len())),
    }
}

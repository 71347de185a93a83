use serde::{Serialize, Serializer};

fn db_or_inf<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
    if v.is_infinite() {
        s.serialize_str("inf")
    } else {
        s.serialize_f64(*v)
    }
}

/// One row of image-quality results. JSON carries full precision; the text
/// line uses two decimals.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricReport {
    #[serde(serialize_with = "db_or_inf")]
    pub psnr: f64,
    pub ssim: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fps: Option<f64>,
    pub width: u32,
    pub height: u32,
    pub channels: u8,
}

impl MetricReport {
    pub fn table_line(&self) -> String {
        let psnr = if self.psnr.is_infinite() {
            "inf".to_string()
        } else {
            format!("{:.2}", self.psnr)
        };
        let fps = self.fps.map_or("-".to_string(), |f| format!("{f:.2}"));
        format!("PSNR {psnr} dB | SSIM {:.2} | FPS {fps}", self.ssim)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn infinite_psnr_serializes_as_inf() {
        let r = MetricReport {
            psnr: f64::INFINITY,
            ssim: 1.0,
            fps: None,
            width: 2,
            height: 2,
            channels: 3,
        };
        let j = serde_json::to_value(&r).unwrap();
        assert_eq!(j["psnr"], "inf");
        assert_eq!(j["ssim"], 1.0);
        assert!(j.get("fps").is_none());
        assert!(r.table_line().starts_with("PSNR inf dB"));
    }
}

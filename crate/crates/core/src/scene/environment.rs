use serde::{Deserialize, Serialize};

use super::{SceneError, SCENE_TOLERANCE};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Weather {
    #[default]
    Clear,
    Fog,
    Rain,
    Snow,
}

impl Weather {
    pub fn parse(s: &str) -> Option<Weather> {
        match s.trim().to_lowercase().as_str() {
            "clear" | "sunny" => Some(Self::Clear),
            "fog" | "foggy" => Some(Self::Fog),
            "rain" | "rainy" => Some(Self::Rain),
            "snow" | "snowy" => Some(Self::Snow),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Clear => "clear",
            Self::Fog => "fog",
            Self::Rain => "rain",
            Self::Snow => "snow",
        }
    }
}

/// Time of day and weather. Sun angles are derived, never stored.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(try_from = "EnvironmentRepr", into = "EnvironmentRepr")]
pub struct EnvironmentState {
    time_of_day: f64,
    weather: Weather,
    intensity: f64,
}

#[derive(Serialize, Deserialize)]
struct EnvironmentRepr {
    time_of_day: f64,
    weather: Weather,
    #[serde(default)]
    intensity: f64,
    #[serde(default, skip_deserializing)]
    sun_elevation_deg: f64,
    #[serde(default, skip_deserializing)]
    sun_azimuth_deg: f64,
}

impl TryFrom<EnvironmentRepr> for EnvironmentState {
    type Error = SceneError;
    fn try_from(r: EnvironmentRepr) -> Result<Self, SceneError> {
        EnvironmentState::new(r.time_of_day, r.weather, r.intensity)
    }
}

impl From<EnvironmentState> for EnvironmentRepr {
    fn from(e: EnvironmentState) -> Self {
        Self {
            time_of_day: e.time_of_day,
            weather: e.weather,
            intensity: e.intensity,
            sun_elevation_deg: e.sun_elevation_deg(),
            sun_azimuth_deg: e.sun_azimuth_deg(),
        }
    }
}

impl Default for EnvironmentState {
    /// Clear noon.
    fn default() -> Self {
        Self {
            time_of_day: 12.0,
            weather: Weather::Clear,
            intensity: 0.0,
        }
    }
}

impl PartialEq for EnvironmentState {
    fn eq(&self, o: &Self) -> bool {
        self.weather == o.weather
            && (self.time_of_day - o.time_of_day).abs() <= SCENE_TOLERANCE
            && (self.intensity - o.intensity).abs() <= SCENE_TOLERANCE
    }
}

impl EnvironmentState {
    /// Hours must lie in [0, 24) and intensity in [0, 1]. Clear weather
    /// stores intensity 0.
    pub fn new(time_of_day: f64, weather: Weather, intensity: f64) -> Result<Self, SceneError> {
        if !(0.0..24.0).contains(&time_of_day) {
            return Err(SceneError::Invalid(format!("time of day {time_of_day} outside [0, 24)")));
        }
        if !(0.0..=1.0).contains(&intensity) {
            return Err(SceneError::Invalid(format!("weather intensity {intensity} outside [0, 1]")));
        }
        Ok(Self {
            time_of_day,
            weather,
            intensity: if weather == Weather::Clear { 0.0 } else { intensity },
        })
    }

    pub fn time_of_day(&self) -> f64 {
        self.time_of_day
    }

    pub fn weather(&self) -> Weather {
        self.weather
    }

    pub fn intensity(&self) -> f64 {
        self.intensity
    }

    pub fn with_time(self, hours: f64) -> Result<Self, SceneError> {
        Self::new(hours.rem_euclid(24.0), self.weather, self.intensity)
    }

    pub fn with_weather(self, weather: Weather, intensity: f64) -> Result<Self, SceneError> {
        Self::new(self.time_of_day, weather, intensity)
    }

    /// Sinusoidal day model: -90° at midnight, 0° at 06:00 and 18:00,
    /// +90° at noon.
    pub fn sun_elevation_deg(&self) -> f64 {
        90.0 * (std::f64::consts::TAU * (self.time_of_day - 6.0) / 24.0).sin()
    }

    /// Compass azimuth, 180° (south) at noon, advancing 15° per hour.
    pub fn sun_azimuth_deg(&self) -> f64 {
        (180.0 + 15.0 * (self.time_of_day - 12.0)).rem_euclid(360.0)
    }

    /// Global brightness scale: ambient floor 0.15 plus direct sun.
    pub fn illumination(&self) -> f64 {
        0.15 + 0.85 * self.sun_elevation_deg().to_radians().sin().max(0.0)
    }

    pub fn is_night(&self) -> bool {
        self.sun_elevation_deg() <= 0.0
    }
}

use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhonemeTemplate {
    pub label: String,
    /// `(frequency Hz, amplitude)` pairs.
    pub formants: Vec<(f64, f64)>,
    pub base_duration_ms: u32,
    pub voiced: bool,
}

impl PhonemeTemplate {
    fn new(label: &str, formants: &[(f64, f64)], base_duration_ms: u32, voiced: bool) -> Self {
        Self {
            label: label.to_string(),
            formants: formants.to_vec(),
            base_duration_ms,
            voiced,
        }
    }

    pub fn is_valid(&self) -> bool {
        (2..=3).contains(&self.formants.len())
            && self
                .formants
                .iter()
                .all(|(f, a)| *f > 50.0 && *f < 7900.0 && *a > 0.0 && *a <= 1.0)
            && (40..=400).contains(&self.base_duration_ms)
    }
}

/// The fixed 16-phoneme inventory.
pub fn phoneme_inventory() -> Vec<PhonemeTemplate> {
    vec![
        PhonemeTemplate::new("aa", &[(750.0, 1.0), (1200.0, 0.6), (2600.0, 0.3)], 120, true),
        PhonemeTemplate::new("iy", &[(300.0, 1.0), (2300.0, 0.6), (3000.0, 0.4)], 110, true),
        PhonemeTemplate::new("uw", &[(320.0, 1.0), (850.0, 0.6), (2300.0, 0.3)], 110, true),
        PhonemeTemplate::new("eh", &[(550.0, 1.0), (1800.0, 0.6), (2500.0, 0.3)], 100, true),
        PhonemeTemplate::new("ao", &[(600.0, 1.0), (900.0, 0.7), (2500.0, 0.3)], 120, true),
        PhonemeTemplate::new("ah", &[(680.0, 0.9), (1400.0, 0.7)], 100, true),
        PhonemeTemplate::new("ih", &[(420.0, 1.0), (2000.0, 0.6), (2700.0, 0.3)], 90, true),
        PhonemeTemplate::new("er", &[(500.0, 0.9), (1350.0, 0.7), (1700.0, 0.5)], 110, true),
        PhonemeTemplate::new("s", &[(4500.0, 0.5), (6000.0, 0.6)], 90, false),
        PhonemeTemplate::new("sh", &[(2700.0, 0.6), (3800.0, 0.5)], 90, false),
        PhonemeTemplate::new("f", &[(1500.0, 0.3), (5400.0, 0.4), (7000.0, 0.3)], 80, false),
        PhonemeTemplate::new("m", &[(280.0, 1.0), (1100.0, 0.3), (2200.0, 0.2)], 80, true),
        PhonemeTemplate::new("n", &[(350.0, 0.9), (1600.0, 0.3), (3300.0, 0.2)], 80, true),
        PhonemeTemplate::new("l", &[(380.0, 0.9), (1050.0, 0.5), (2900.0, 0.3)], 80, true),
        PhonemeTemplate::new("r", &[(460.0, 0.9), (1250.0, 0.5), (1550.0, 0.4)], 80, true),
        PhonemeTemplate::new("k", &[(1800.0, 0.6), (3200.0, 0.4)], 70, false),
    ]
}

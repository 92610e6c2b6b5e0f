//! Published per-level severity counts for the crash dataset (n = 8319).
//!
//! Each entry lists, for one feature level, how many crashes of each
//! severity fall on that level, ordered `[minor, serious, fatal]`. These
//! drive both the synthetic generator (as conditional sampling weights)
//! and the expectations in its tests. Age is summarized in bands because
//! the underlying variable is continuous.

/// Crash totals per severity, `[minor, serious, fatal]`.
pub const CLASS_TOTALS: [u64; 3] = [6480, 1363, 476];

/// Total number of crashes.
pub const TOTAL: u64 = 8319;

/// Severity counts for every level of one discrete feature.
pub struct FeatureCounts {
    pub name: &'static str,
    /// `(level name, [minor, serious, fatal])` in schema level order.
    pub levels: &'static [(&'static str, [u64; 3])],
}

/// Age bands: `(low, high, [minor, serious, fatal])`. Sampling draws a
/// band by weight, then a uniform age within it; profiling buckets ages
/// with the same boundaries.
pub const AGE_BANDS: [(f64, f64, [u64; 3]); 4] = [
    (0.0, 9.0, [631, 118, 33]),
    (10.0, 29.0, [3120, 556, 119]),
    (30.0, 59.0, [2131, 509, 202]),
    (60.0, 90.0, [598, 180, 122]),
];

/// Display labels for the age bands, aligned with [`AGE_BANDS`].
pub const AGE_BAND_LABELS: [&str; 4] = ["0 to 9", "10 to 29", "30 to 59", "> 59"];

/// Per-level severity counts for the 16 discrete features.
///
/// Note: the published lighting breakdown does not add up to the class
/// totals (its "Others" row repeats the weather table's), so the
/// generator normalizes each feature's level weights within a severity
/// rather than trusting the marginals to be consistent.
pub const FEATURES: &[FeatureCounts] = &[
    FeatureCounts {
        name: "Sex",
        levels: &[("Male", [3775, 849, 309]), ("Female", [2705, 514, 167])],
    },
    FeatureCounts {
        name: "AlcoholDrugTest",
        levels: &[
            ("Both-Positive", [0, 0, 11]),
            ("Drug-Positive", [0, 0, 34]),
            ("Alcohol-Positive", [0, 2, 13]),
            ("Negative", [0, 0, 9]),
            ("Not related", [6480, 1361, 409]),
        ],
    },
    FeatureCounts {
        name: "DUI",
        levels: &[("No", [6384, 1305, 413]), ("Yes", [96, 58, 63])],
    },
    FeatureCounts {
        name: "DistractedDriving",
        levels: &[("No", [6003, 1218, 430]), ("Yes", [477, 145, 46])],
    },
    FeatureCounts {
        name: "TeenageDriver",
        levels: &[("No", [5886, 1205, 432]), ("Yes", [594, 158, 44])],
    },
    FeatureCounts {
        name: "Holiday",
        levels: &[("No", [5726, 1185, 397]), ("Yes", [754, 178, 79])],
    },
    FeatureCounts {
        name: "RightTurn",
        levels: &[("No", [5025, 1254, 464]), ("Yes", [1455, 109, 12])],
    },
    FeatureCounts {
        name: "Intersection",
        levels: &[("Yes", [4237, 718, 136]), ("No", [2243, 645, 340])],
    },
    FeatureCounts {
        name: "LeftTurn",
        levels: &[("No", [5067, 1144, 441]), ("Yes", [1413, 219, 35])],
    },
    FeatureCounts {
        name: "WorkZone",
        levels: &[("No", [6208, 1298, 447]), ("Yes", [272, 65, 29])],
    },
    FeatureCounts {
        name: "RoadType",
        levels: &[("Urban", [6367, 1296, 419]), ("Rural", [113, 67, 57])],
    },
    FeatureCounts {
        name: "FunctionClass",
        levels: &[
            ("Local", [2103, 352, 71]),
            ("Collector", [1190, 232, 71]),
            ("Arterial", [3187, 779, 334]),
        ],
    },
    FeatureCounts {
        name: "RoadwaySurf",
        levels: &[("Yes", [5585, 1181, 409]), ("No", [895, 182, 67])],
    },
    FeatureCounts {
        name: "Light",
        levels: &[
            ("Dark-Not lighted", [656, 285, 176]),
            ("Dark-Lighted", [1366, 332, 138]),
            ("Daylight", [4134, 678, 141]),
            ("Dusk", [174, 40, 10]),
            ("Dawn", [150, 28, 11]),
            ("Others", [74, 9, 8]),
        ],
    },
    FeatureCounts {
        name: "Weather",
        levels: &[
            ("Clear", [4955, 1068, 355]),
            ("Cloudy", [896, 176, 69]),
            ("Rain", [373, 80, 31]),
            ("Fog, Smog", [17, 4, 3]),
            ("Snowing", [165, 26, 10]),
            ("Others", [74, 9, 8]),
        ],
    },
    FeatureCounts {
        name: "VerticalAlignment",
        levels: &[
            ("Level", [5047, 1108, 360]),
            ("Uphill", [47, 7, 3]),
            ("Downhill", [36, 12, 2]),
            ("Others", [1350, 236, 111]),
        ],
    },
];

/// Look up the counts for one feature by name.
pub fn feature_counts(name: &str) -> Option<&'static FeatureCounts> {
    FEATURES.iter().find(|f| f.name == name)
}

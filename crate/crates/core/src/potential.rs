//! Piecewise-constant radial pair potentials.
//!
//! A potential is a list of spherical shells `[r_lo, r_hi) -> value` tiling
//! `[0, R0]`, plus declared floors: `v >= lambda_plus` on the core `[0, r1]`
//! and `v >= -lambda_minus` everywhere. The floors are stored metadata,
//! validated against the segments at construction, so condition checks use
//! the declared values exactly.

use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum PotentialError {
    #[error("segment {index}: r_lo {r_lo} must be < r_hi {r_hi}")]
    BadSegmentBounds { index: usize, r_lo: f64, r_hi: f64 },
    #[error("segment {index} starts at {found}, expected {expected} (segments must tile [0, R0])")]
    BrokenTiling {
        index: usize,
        expected: f64,
        found: f64,
    },
    #[error("declared support radius {r0} does not match the last segment end {last_hi}")]
    SupportMismatch { r0: f64, last_hi: f64 },
    #[error("segment {index} value {value} is below the declared core floor {lambda_plus} on [0, {r1}]")]
    CoreFloorViolated {
        index: usize,
        value: f64,
        lambda_plus: f64,
        r1: f64,
    },
    #[error("segment {index} value {value} is below the declared global floor -{lambda_minus}")]
    GlobalFloorViolated {
        index: usize,
        value: f64,
        lambda_minus: f64,
    },
    #[error("scale factor must be positive and finite, got {0}")]
    NonPositiveScale(f64),
    #[error("non-finite number in potential definition")]
    NonFinite,
    #[error("negative {0} not allowed")]
    NegativeMetadata(&'static str),
}

/// One spherical shell with a constant value on `[r_lo, r_hi)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub r_lo: f64,
    pub r_hi: f64,
    pub value: f64,
}

/// Spherically symmetric, compactly supported pair potential.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialPotential {
    segments: Vec<Segment>,
    r0: f64,
    r1: f64,
    lambda_plus: f64,
    lambda_minus: f64,
}

impl RadialPotential {
    /// Build with fully declared metadata; every invariant is checked.
    pub fn new(
        segments: Vec<Segment>,
        r0: f64,
        r1: f64,
        lambda_plus: f64,
        lambda_minus: f64,
    ) -> Result<Self, PotentialError> {
        if !(r0.is_finite() && r1.is_finite() && lambda_plus.is_finite() && lambda_minus.is_finite())
        {
            return Err(PotentialError::NonFinite);
        }
        if r0 < 0.0 {
            return Err(PotentialError::NegativeMetadata("R0"));
        }
        if r1 < 0.0 {
            return Err(PotentialError::NegativeMetadata("r1"));
        }
        if lambda_plus < 0.0 {
            return Err(PotentialError::NegativeMetadata("lambda_plus"));
        }
        if lambda_minus < 0.0 {
            return Err(PotentialError::NegativeMetadata("lambda_minus"));
        }
        let mut expected = 0.0;
        for (index, s) in segments.iter().enumerate() {
            if !(s.r_lo.is_finite() && s.r_hi.is_finite() && s.value.is_finite()) {
                return Err(PotentialError::NonFinite);
            }
            if s.r_lo >= s.r_hi {
                return Err(PotentialError::BadSegmentBounds {
                    index,
                    r_lo: s.r_lo,
                    r_hi: s.r_hi,
                });
            }
            if s.r_lo != expected {
                return Err(PotentialError::BrokenTiling {
                    index,
                    expected,
                    found: s.r_lo,
                });
            }
            expected = s.r_hi;
            // The core floor applies to every segment meeting (0, r1).
            if s.r_lo < r1 && s.value < lambda_plus {
                return Err(PotentialError::CoreFloorViolated {
                    index,
                    value: s.value,
                    lambda_plus,
                    r1,
                });
            }
            if s.value < -lambda_minus {
                return Err(PotentialError::GlobalFloorViolated {
                    index,
                    value: s.value,
                    lambda_minus,
                });
            }
        }
        if expected != r0 {
            return Err(PotentialError::SupportMismatch {
                r0,
                last_hi: expected,
            });
        }
        Ok(Self {
            segments,
            r0,
            r1,
            lambda_plus,
            lambda_minus,
        })
    }

    /// The identically zero potential (empty support).
    pub fn zero() -> Self {
        Self {
            segments: Vec::new(),
            r0: 0.0,
            r1: 0.0,
            lambda_plus: 0.0,
            lambda_minus: 0.0,
        }
    }

    /// Build from segments alone, inferring the floors: `r1 = 0`,
    /// `lambda_plus = 0` and `lambda_minus = max(0, -min value)`.
    pub fn from_segments(segments: Vec<Segment>) -> Result<Self, PotentialError> {
        let r0 = segments.last().map_or(0.0, |s| s.r_hi);
        let lambda_minus = segments
            .iter()
            .map(|s| -s.value)
            .fold(0.0_f64, f64::max)
            .max(0.0);
        Self::new(segments, r0, 0.0, 0.0, lambda_minus)
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn r0(&self) -> f64 {
        self.r0
    }

    pub fn r1(&self) -> f64 {
        self.r1
    }

    pub fn lambda_plus(&self) -> f64 {
        self.lambda_plus
    }

    pub fn lambda_minus(&self) -> f64 {
        self.lambda_minus
    }

    pub fn is_zero(&self) -> bool {
        self.segments.iter().all(|s| s.value == 0.0)
    }

    pub fn is_nonnegative(&self) -> bool {
        self.segments.iter().all(|s| s.value >= 0.0)
    }

    /// Piecewise lookup with the half-open `[r_lo, r_hi)` convention;
    /// exactly zero for `r >= R0`.
    pub fn evaluate(&self, r: f64) -> f64 {
        debug_assert!(r >= 0.0, "radius must be nonnegative");
        if r >= self.r0 {
            return 0.0;
        }
        for s in &self.segments {
            if r >= s.r_lo && r < s.r_hi {
                return s.value;
            }
        }
        0.0
    }

    /// Scaled potential `v_a(r) = v(r/a) / a^2`: boundaries times `a`,
    /// values divided by `a^2`, metadata scaled consistently.
    pub fn scale(&self, a: f64) -> Result<Self, PotentialError> {
        if !a.is_finite() || a <= 0.0 {
            return Err(PotentialError::NonPositiveScale(a));
        }
        let inv_a2 = 1.0 / (a * a);
        let segments = self
            .segments
            .iter()
            .map(|s| Segment {
                r_lo: s.r_lo * a,
                r_hi: s.r_hi * a,
                value: s.value * inv_a2,
            })
            .collect();
        Ok(Self {
            segments,
            r0: self.r0 * a,
            r1: self.r1 * a,
            lambda_plus: self.lambda_plus * inv_a2,
            lambda_minus: self.lambda_minus * inv_a2,
        })
    }

    /// Split into `(v_plus, v_minus)` with `v_plus >= 0 >= v_minus` and
    /// `v_plus + v_minus == v` segment by segment. Both parts keep the
    /// original segment boundaries so the sum is exact.
    pub fn decompose(&self) -> (Self, Self) {
        let plus = Self {
            segments: self
                .segments
                .iter()
                .map(|s| Segment {
                    value: s.value.max(0.0),
                    ..*s
                })
                .collect(),
            r0: self.r0,
            r1: self.r1,
            lambda_plus: self.lambda_plus,
            lambda_minus: 0.0,
        };
        let minus = Self {
            segments: self
                .segments
                .iter()
                .map(|s| Segment {
                    value: s.value.min(0.0),
                    ..*s
                })
                .collect(),
            r0: self.r0,
            r1: 0.0,
            lambda_plus: 0.0,
            lambda_minus: self.lambda_minus,
        };
        (plus, minus)
    }

    /// Segmentwise `c1 * (v + t * v_minus)`, the combination whose
    /// scattering length the stability check inspects.
    pub fn stability_combination(&self, t: f64, c1: f64) -> Result<Self, PotentialError> {
        let (_, minus) = self.decompose();
        let segments = self
            .segments
            .iter()
            .zip(minus.segments.iter())
            .map(|(s, m)| Segment {
                r_lo: s.r_lo,
                r_hi: s.r_hi,
                value: c1 * (s.value + t * m.value),
            })
            .collect();
        Self::from_segments(segments)
    }

    /// All shell boundaries interior to `(0, limit)`, ascending.
    pub(crate) fn interior_boundaries(&self, limit: f64) -> Vec<f64> {
        let mut bs: Vec<f64> = self
            .segments
            .iter()
            .flat_map(|s| [s.r_lo, s.r_hi])
            .filter(|&r| r > 0.0 && r < limit)
            .collect();
        bs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        bs.dedup();
        bs
    }
}

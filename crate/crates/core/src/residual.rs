use crate::point::Point;

/// Largest absolute deviation observed over a set of points, with the point
/// where it occurred.
#[derive(Debug, Clone, PartialEq)]
pub struct Residual {
    pub value: f64,
    pub worst_point: Option<Point>,
}

impl Default for Residual {
    fn default() -> Self {
        Self::zero()
    }
}

impl Residual {
    pub fn zero() -> Self {
        Self { value: 0.0, worst_point: None }
    }

    /// Records a candidate; NaN counts as an infinite deviation.
    pub fn observe(&mut self, value: f64, point: &Point) {
        let value = if value.is_nan() { f64::INFINITY } else { value.abs() };
        if value > self.value || (self.worst_point.is_none() && value >= self.value) {
            self.value = value;
            self.worst_point = Some(point.clone());
        }
    }

    pub fn merge(mut self, other: Residual) -> Residual {
        if other.value > self.value || self.worst_point.is_none() {
            if let Some(p) = &other.worst_point {
                self.value = self.value.max(other.value);
                if other.value >= self.value {
                    self.worst_point = Some(p.clone());
                }
            }
        }
        self
    }

    pub fn passes(&self, tolerance: f64) -> bool {
        self.value <= tolerance
    }
}

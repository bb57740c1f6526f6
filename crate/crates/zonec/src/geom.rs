//! Plain 2D geometry in micrometres.

use serde::{Deserialize, Serialize};

/// Absolute tolerance for coordinate equality, in um.
pub const COORD_EPS: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn distance(&self, other: &Point) -> f64 {
        ((self.x - other.x).powi(2) + (self.y - other.y).powi(2)).sqrt()
    }

    pub fn approx_eq(&self, other: &Point) -> bool {
        (self.x - other.x).abs() <= COORD_EPS && (self.y - other.y).abs() <= COORD_EPS
    }
}

/// Euclidean distance between two positions.
pub fn distance(a: Point, b: Point) -> f64 {
    a.distance(&b)
}

/// Axis-aligned rectangle given by its bottom-left corner and size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub x: f64,
    pub y: f64,
    pub width: f64,
    pub height: f64,
}

impl Rect {
    pub fn contains(&self, p: Point) -> bool {
        p.x >= self.x - COORD_EPS
            && p.x <= self.x + self.width + COORD_EPS
            && p.y >= self.y - COORD_EPS
            && p.y <= self.y + self.height + COORD_EPS
    }

    pub fn overlaps(&self, other: &Rect) -> bool {
        self.x < other.x + other.width - COORD_EPS
            && other.x < self.x + self.width - COORD_EPS
            && self.y < other.y + other.height - COORD_EPS
            && other.y < self.y + self.height - COORD_EPS
    }

    /// Euclidean gap between two rectangles (0 if they touch or overlap).
    pub fn gap(&self, other: &Rect) -> f64 {
        let dx = (other.x - (self.x + self.width)).max(self.x - (other.x + other.width));
        let dy = (other.y - (self.y + self.height)).max(self.y - (other.y + other.height));
        let dx = dx.max(0.0);
        let dy = dy.max(0.0);
        (dx * dx + dy * dy).sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn distance_worked_examples() {
        // reference values used throughout the placement cost model
        let d1 = distance(Point::new(0.0, 19.0), Point::new(13.0, 9.0));
        assert!((d1 - 16.40).abs() < 0.01, "d1 = {d1}");
        let d2 = distance(Point::new(1.0, 9.0), Point::new(0.0, 19.0));
        assert!((d2 - 10.05).abs() < 0.01, "d2 = {d2}");
        assert_eq!(distance(Point::new(3.0, 4.0), Point::new(3.0, 4.0)), 0.0);
    }

    #[test]
    fn rect_gap_and_overlap() {
        let a = Rect { x: 0.0, y: 0.0, width: 10.0, height: 10.0 };
        let b = Rect { x: 0.0, y: 15.0, width: 10.0, height: 5.0 };
        assert!(!a.overlaps(&b));
        assert!((a.gap(&b) - 5.0).abs() < 1e-12);
        let c = Rect { x: 5.0, y: 5.0, width: 10.0, height: 10.0 };
        assert!(a.overlaps(&c));
        assert_eq!(a.gap(&c), 0.0);
    }
}

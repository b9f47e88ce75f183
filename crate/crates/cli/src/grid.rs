//! `start:stop:count[:log]` grids.

use std::str::FromStr;

#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
    pub log: bool,
}

impl Grid {
    pub fn values(&self) -> Vec<f64> {
        match self.count {
            0 => Vec::new(),
            1 => vec![self.start],
            k => (0..k)
                .map(|i| {
                    let f = i as f64 / (k - 1) as f64;
                    if i == k - 1 {
                        self.stop
                    } else if self.log {
                        (self.start.ln() + f * (self.stop.ln() - self.start.ln())).exp()
                    } else {
                        self.start + f * (self.stop - self.start)
                    }
                })
                .collect(),
        }
    }
}

impl FromStr for Grid {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(':').collect();
        let log = match parts.len() {
            3 => false,
            4 if parts[3] == "log" => true,
            4 if parts[3] == "lin" => false,
            _ => return Err(format!("expected start:stop:count[:log], got {s:?}")),
        };
        let num = |x: &str| x.trim().parse::<f64>().map_err(|e| format!("{x:?}: {e}"));
        let (start, stop) = (num(parts[0])?, num(parts[1])?);
        let count = parts[2].trim().parse::<usize>().map_err(|e| format!("{:?}: {e}", parts[2]))?;
        if !start.is_finite() || !stop.is_finite() {
            return Err("grid end points must be finite".into());
        }
        if log && (start <= 0.0 || stop <= 0.0) {
            return Err("a log grid needs positive end points".into());
        }
        Ok(Grid { start, stop, count, log })
    }
}

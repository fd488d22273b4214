use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

/// Dense displacement field. The field at index `t` maps frame `t` onto
/// frame `t + 1` (the forward convention declared in every manifest).
#[derive(Clone, Debug, PartialEq)]
pub struct FlowField {
    pub frame_index: u32,
    pub width: u32,
    pub height: u32,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
}

impl FlowField {
    pub fn zero(frame_index: u32, width: u32, height: u32) -> Self {
        let n = (width * height) as usize;
        FlowField {
            frame_index,
            width,
            height,
            u: vec![0.0; n],
            v: vec![0.0; n],
        }
    }

    #[inline]
    pub fn at(&self, x: u32, y: u32) -> (f64, f64) {
        let i = (y * self.width + x) as usize;
        (self.u[i], self.v[i])
    }

    #[inline]
    pub fn set(&mut self, x: u32, y: u32, u: f64, v: f64) {
        let i = (y * self.width + x) as usize;
        self.u[i] = u;
        self.v[i] = v;
    }

    pub fn validate(&self) -> Result<()> {
        if self.u.len() != (self.width * self.height) as usize
            || self.v.len() != (self.width * self.height) as usize
        {
            return Err(Error::InvalidInput(format!(
                "flow {} buffer sizes do not match {}x{}",
                self.frame_index, self.width, self.height
            )));
        }
        if self.u.iter().chain(self.v.iter()).any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "flow {} contains non-finite values",
                self.frame_index
            )));
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut out = String::new();
        writeln!(
            out,
            "streamloc-flow v1 frame {} height {} width {}",
            self.frame_index, self.height, self.width
        )
        .unwrap();
        for comp in [&self.u, &self.v] {
            for y in 0..self.height {
                let row: Vec<String> = (0..self.width)
                    .map(|x| format!("{}", comp[(y * self.width + x) as usize]))
                    .collect();
                writeln!(out, "{}", row.join(" ")).unwrap();
            }
        }
        std::fs::write(path, out).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut lines = text.lines().enumerate();
        let (_, header) = lines
            .next()
            .ok_or_else(|| Error::parse(path, 1, "empty flow file"))?;
        let tokens: Vec<&str> = header.split_whitespace().collect();
        if tokens.len() != 8 || tokens[0] != "streamloc-flow" || tokens[1] != "v1" {
            return Err(Error::parse(path, 1, "bad flow header"));
        }
        let frame_index: u32 = tokens[3]
            .parse()
            .map_err(|_| Error::parse(path, 1, "bad frame index"))?;
        let height: u32 = tokens[5]
            .parse()
            .map_err(|_| Error::parse(path, 1, "bad height"))?;
        let width: u32 = tokens[7]
            .parse()
            .map_err(|_| Error::parse(path, 1, "bad width"))?;
        let mut field = FlowField::zero(frame_index, width, height);
        for comp in 0..2 {
            for y in 0..height {
                let (lineno, line) = lines.next().ok_or_else(|| {
                    Error::parse(path, 0, format!("truncated flow file, missing row y={y}"))
                })?;
                let vals: Vec<f64> = line
                    .split_whitespace()
                    .map(|s| s.parse::<f64>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|_| Error::parse(path, lineno + 1, "bad float"))?;
                if vals.len() != width as usize {
                    return Err(Error::parse(
                        path,
                        lineno + 1,
                        format!("expected {} values, got {}", width, vals.len()),
                    ));
                }
                let buf = if comp == 0 {
                    &mut field.u
                } else {
                    &mut field.v
                };
                for (x, val) in vals.into_iter().enumerate() {
                    buf[(y * width) as usize + x] = val;
                }
            }
        }
        field.validate()?;
        Ok(field)
    }
}

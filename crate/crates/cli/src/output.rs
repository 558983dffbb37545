use std::io::{self, Write};
use std::path::Path;

use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};
use sfmew::{Verdict, VerdictTag};

/// Seventeen significant digits, which round-trips every `f64`.
pub fn sig17(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        String::new()
    }
}

/// Pretty JSON whose floats are written by [`sig17`].
struct Sig17<'a>(PrettyFormatter<'a>);

impl Formatter for Sig17<'_> {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, v: f64) -> io::Result<()> {
        w.write_all(sig17(v).as_bytes())
    }

    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }

    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }

    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }

    fn end_array_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }

    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }

    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }

    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }

    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }

    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, Sig17(PrettyFormatter::new()));
    value
        .serialize(&mut ser)
        .expect("report types serialize infallibly");
    buf.push(b'\n');
    String::from_utf8(buf).expect("serde_json writes UTF-8")
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> io::Result<()> {
    std::fs::write(path, to_json(value))
}

pub const CSV_HEADER: [&str; 8] = [
    "x",
    "y",
    "verdict",
    "res12",
    "res13",
    "res23",
    "F_candidates",
    "residual",
];

/// One row per node. The `res*` columns hold the separation measure that
/// decides the obstruction class; they are empty where no constraints were
/// assembled. `F_candidates` lists verified values separated by `;`.
pub fn write_grid_csv(path: &Path, verdicts: &[Verdict]) -> csv::Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(CSV_HEADER)?;
    for v in verdicts {
        let res = |k: usize| {
            v.obstructions
                .map(|o| sig17(o.all()[k].separation))
                .unwrap_or_default()
        };
        let f: Vec<String> = v.f_values().into_iter().map(sig17).collect();
        let residual = if v.tag == VerdictTag::Flat {
            String::new()
        } else {
            v.best_residual().map(sig17).unwrap_or_default()
        };
        w.write_record([
            sig17(v.point[0]),
            sig17(v.point[1]),
            v.tag.to_string(),
            res(0),
            res(1),
            res(2),
            f.join(";"),
            residual,
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip() {
        for v in [0.1, -2.0 / 3.0, 1e-300, 6.02214076e23, 0.0] {
            assert_eq!(sig17(v).parse::<f64>().unwrap(), v);
        }
        assert_eq!(sig17(f64::NAN), "");
    }

    #[test]
    fn json_floats_use_seventeen_digits() {
        let s = to_json(&serde_json::json!({"a": [0.1, 2.0], "b": f64::INFINITY}));
        assert!(s.contains("1.0000000000000001e-1"), "{s}");
        assert!(s.contains("2.0000000000000000e0"), "{s}");
        assert!(s.contains("\"b\": null"), "{s}");
        let back: serde_json::Value = serde_json::from_str(&s).unwrap();
        assert_eq!(back["a"][0].as_f64(), Some(0.1));
    }
}

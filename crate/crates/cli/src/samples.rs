use pjx_core::{Error, Result};

/// Parses `a:b:step` (inclusive of `b` up to rounding) or a single value.
pub fn parse(spec: &str) -> Result<Vec<f64>> {
    let bad = |why: &str| Error::Parameter(format!("sample spec `{spec}`: {why}"));
    let num = |s: &str| s.trim().parse::<f64>().map_err(|_| bad("not a number"));
    let parts: Vec<&str> = spec.split(':').collect();
    let values = match parts.as_slice() {
        [one] => vec![num(one)?],
        [a, b, step] => {
            let (a, b, step) = (num(a)?, num(b)?, num(step)?);
            if !(step > 0.0) || !(b >= a) || !a.is_finite() || !b.is_finite() {
                return Err(bad("need a <= b and step > 0"));
            }
            let count = ((b - a) / step + 1e-9).floor() as usize + 1;
            if count > 1_000_000 {
                return Err(bad("more than 10^6 samples"));
            }
            (0..count).map(|k| a + k as f64 * step).collect()
        }
        _ => return Err(bad("expected `a:b:step` or a single value")),
    };
    if values.iter().any(|v| !v.is_finite()) {
        return Err(bad("values must be finite"));
    }
    Ok(values)
}

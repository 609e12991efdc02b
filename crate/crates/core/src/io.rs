//! File formats and serialization helpers. Vertex sets are JSON objects
//! {"n": …, "vertices": ["0x…", …]} with the masks sorted ascending, so a
//! given set always prints the same bytes. Rationals travel as "num/den"
//! strings; nothing is ever emitted as a float.

use num::rational::BigRational;
use num::{BigInt, BigUint, Zero};
use serde::{Deserialize, Serialize};

use crate::cube::VertexSet;
use crate::error::{Error, Result};
use crate::stability::StabilityParams;

/// Field serializers used across the report types.
pub mod ser {
    use super::*;
    use serde::ser::SerializeSeq;
    use serde::Serializer;

    pub fn biguint<S: Serializer>(x: &BigUint, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&x.to_string())
    }

    pub fn rational<S: Serializer>(
        x: &BigRational,
        s: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&rational_string(x))
    }

    pub fn hex_mask<S: Serializer>(x: &u64, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&format!("{x:#x}"))
    }

    pub fn hex_masks<S: Serializer>(xs: &[u64], s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(xs.len()))?;
        for x in xs {
            seq.serialize_element(&format!("{x:#x}"))?;
        }
        seq.end()
    }
}

/// "num/den", always with the (positive) denominator spelled out.
pub fn rational_string(x: &BigRational) -> String {
    format!("{}/{}", x.numer(), x.denom())
}

/// Accepts "num/den", plain integers, and decimal literals like "1.25".
pub fn parse_rational(s: &str) -> Result<BigRational> {
    let t = s.trim();
    let int = |v: &str| -> Result<BigInt> {
        v.parse::<BigInt>()
            .map_err(|_| Error::Malformed(format!("bad integer '{v}'")))
    };
    if let Some((a, b)) = t.split_once('/') {
        let den = int(b.trim())?;
        if den.is_zero() {
            return Err(Error::Malformed(format!("zero denominator in '{t}'")));
        }
        return Ok(BigRational::new(int(a.trim())?, den));
    }
    if let Some((a, b)) = t.split_once('.') {
        if b.is_empty() || !b.chars().all(|c| c.is_ascii_digit()) {
            return Err(Error::Malformed(format!("bad decimal '{t}'")));
        }
        let whole = int(if a.is_empty() { "0" } else { a })?;
        let frac = int(b)?;
        let scale = BigInt::from(10u32).pow(b.len() as u32);
        let negative = a.trim_start().starts_with('-');
        let value = if negative {
            whole * &scale - frac
        } else {
            whole * &scale + frac
        };
        return Ok(BigRational::new(value, scale));
    }
    Ok(BigRational::from_integer(int(t)?))
}

/// Accepts "0x…" hex or plain decimal.
pub fn parse_mask(s: &str) -> Result<u64> {
    let t = s.trim();
    if let Some(h) = t.strip_prefix("0x").or_else(|| t.strip_prefix("0X")) {
        return u64::from_str_radix(h, 16)
            .map_err(|_| Error::Malformed(format!("bad hex mask '{t}'")));
    }
    t.parse::<u64>()
        .map_err(|_| Error::Malformed(format!("bad mask '{t}'")))
}

#[derive(Serialize, Deserialize)]
struct VertexSetFile {
    n: u32,
    vertices: Vec<String>,
}

#[derive(Serialize, Deserialize)]
struct ParamsBlock {
    n: u32,
    k: u32,
    p: String,
    rho: String,
    kappa: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    delta: Option<String>,
}

#[derive(Serialize, Deserialize)]
struct InstanceFile {
    n: u32,
    vertices: Vec<String>,
    params: ParamsBlock,
}

fn hex_vertices(set: &VertexSet) -> Vec<String> {
    set.sorted_bits().iter().map(|b| format!("{b:#x}")).collect()
}

/// Canonical JSON for a vertex set.
pub fn vertex_set_string(set: &VertexSet) -> String {
    let file = VertexSetFile {
        n: set.dimension(),
        vertices: hex_vertices(set),
    };
    let mut s = serde_json::to_string_pretty(&file).expect("plain struct serializes");
    s.push('\n');
    s
}

pub fn parse_vertex_set(text: &str) -> Result<VertexSet> {
    let file: VertexSetFile =
        serde_json::from_str(text).map_err(|e| Error::Malformed(e.to_string()))?;
    let mut bits = Vec::with_capacity(file.vertices.len());
    for v in &file.vertices {
        bits.push(parse_mask(v)?);
    }
    VertexSet::from_bits(file.n, bits)
}

fn params_block(params: &StabilityParams) -> ParamsBlock {
    ParamsBlock {
        n: params.n,
        k: params.k,
        p: rational_string(&params.p),
        rho: rational_string(&params.rho),
        kappa: rational_string(&params.kappa),
        delta: Some(rational_string(&params.delta)),
    }
}

/// Canonical JSON for a stability instance: the set plus its params block.
pub fn instance_string(set: &VertexSet, params: &StabilityParams) -> String {
    let file = InstanceFile {
        n: set.dimension(),
        vertices: hex_vertices(set),
        params: params_block(params),
    };
    let mut s = serde_json::to_string_pretty(&file).expect("plain struct serializes");
    s.push('\n');
    s
}

/// Reads an instance file. A missing delta defaults to p k^3 / n exactly;
/// the derived constants are always recomputed, never read.
pub fn parse_instance(text: &str) -> Result<(VertexSet, StabilityParams)> {
    let file: InstanceFile =
        serde_json::from_str(text).map_err(|e| Error::Malformed(e.to_string()))?;
    if file.n != file.params.n {
        return Err(Error::Malformed(format!(
            "set dimension {} disagrees with params dimension {}",
            file.n, file.params.n
        )));
    }
    let mut bits = Vec::with_capacity(file.vertices.len());
    for v in &file.vertices {
        bits.push(parse_mask(v)?);
    }
    let set = VertexSet::from_bits(file.n, bits)?;
    let p = parse_rational(&file.params.p)?;
    let rho = parse_rational(&file.params.rho)?;
    let kappa = parse_rational(&file.params.kappa)?;
    let k = file.params.k;
    let delta = match &file.params.delta {
        Some(d) => parse_rational(d)?,
        None => {
            use crate::counting::rational_int;
            p.clone() * rational_int((k as i64).pow(3)) / rational_int(file.n as i64)
        }
    };
    let params = StabilityParams::new(file.n, k, p, rho, kappa, delta)?;
    Ok((set, params))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vertex_set_round_trip_is_sorted() {
        let set = VertexSet::from_bits(5, [0b10100, 0b1, 0b11111]).unwrap();
        let text = vertex_set_string(&set);
        assert!(text.contains("\"0x1\""));
        let idx_a = text.find("0x1\"").unwrap();
        let idx_b = text.find("0x14").unwrap();
        let idx_c = text.find("0x1f").unwrap();
        assert!(idx_a < idx_b && idx_b < idx_c);
        let back = parse_vertex_set(&text).unwrap();
        assert_eq!(back, set);
        // Same set, different insertion order: identical bytes.
        let other = VertexSet::from_bits(5, [0b11111, 0b10100, 0b1]).unwrap();
        assert_eq!(vertex_set_string(&other), text);
    }

    #[test]
    fn vertex_set_rejects_bad_input() {
        assert!(parse_vertex_set("{ not json").is_err());
        assert!(parse_vertex_set("{\"n\": 3, \"vertices\": [\"0x9\"]}").is_err());
        assert!(parse_vertex_set("{\"n\": 3, \"vertices\": [\"zz\"]}").is_err());
    }

    #[test]
    fn rational_parsing_forms() {
        let r = |a: i64, b: i64| BigRational::new(a.into(), b.into());
        assert_eq!(parse_rational("3").unwrap(), r(3, 1));
        assert_eq!(parse_rational(" 3/4 ").unwrap(), r(3, 4));
        assert_eq!(parse_rational("-1.5").unwrap(), r(-3, 2));
        assert_eq!(parse_rational("0.25").unwrap(), r(1, 4));
        assert_eq!(parse_rational(".5").unwrap(), r(1, 2));
        assert_eq!(parse_rational("77/66").unwrap(), r(7, 6));
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("a.b").is_err());
        assert!(parse_rational("1.2.3").is_err());
        assert_eq!(rational_string(&r(-3, 2)), "-3/2");
        assert_eq!(rational_string(&r(10, 1)), "10/1");
    }

    #[test]
    fn mask_parsing_forms() {
        assert_eq!(parse_mask("0x1f").unwrap(), 31);
        assert_eq!(parse_mask("0X1F").unwrap(), 31);
        assert_eq!(parse_mask("12").unwrap(), 12);
        assert!(parse_mask("0xZZ").is_err());
        assert!(parse_mask("-4").is_err());
    }

    #[test]
    fn instance_round_trip_and_delta_default() {
        let p = BigRational::new(3.into(), 2.into());
        let params = StabilityParams::for_instance(10, 2, p.clone()).unwrap();
        let set = crate::cube::Vertex::origin(10)
            .unwrap()
            .kth_neighbourhood(2)
            .unwrap();
        let text = instance_string(&set, &params);
        let (set2, params2) = parse_instance(&text).unwrap();
        assert_eq!(set2, set);
        assert_eq!(params2.p, p);
        assert_eq!(params2.delta, params.delta);

        // Drop the delta line: the parser must rebuild p k^3 / n exactly.
        let trimmed: Vec<String> = text
            .lines()
            .filter(|l| !l.contains("delta"))
            .map(|l| l.replace("\"kappa\": \"4/3\",", "\"kappa\": \"4/3\""))
            .collect();
        let (_, params3) = parse_instance(&trimmed.join("\n")).unwrap();
        assert_eq!(params3.delta, params.delta);

        // Dimension disagreement is malformed.
        let broken = text.replace("\"n\": 10,\n  \"vertices\"", "\"n\": 11,\n  \"vertices\"");
        assert!(parse_instance(&broken).is_err());
    }
}

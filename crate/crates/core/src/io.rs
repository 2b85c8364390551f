//! Text formats for matrices and states, and text/JSON output of results.
//!
//! # Matrix and state files
//!
//! ```text
//! # comments run from '#' to end of line
//! 2 2                 <- header: rows cols (dim_a dim_b for states)
//! scale 0.5           <- optional, multiplies every entry
//! 2i 1
//! 1  2
//! ```
//!
//! Entries are whitespace separated and may span any number of lines. A
//! complex literal is `[sign]real`, `[sign]imag i` or `[sign]real sign imag i`
//! (no inner whitespace), where a missing imaginary magnitude means 1, so
//! `i`, `-i` and `1-i` are all valid.
//!
//! # JSON
//!
//! Complex numbers are `[re, im]` pairs and every float is printed with 17
//! significant digits, which round-trips `f64` exactly. Keys appear in a fixed
//! order.

use std::fmt::Write as _;
use std::str::FromStr;

use serde_json::Value;

use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, C64};
use crate::phase_svd::{ComplexDiagonal, PhaseConvention, SvdFactorization};
use crate::schmidt::{BipartiteState, SchmidtDecomposition};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutputFormat {
    #[default]
    Text,
    Json,
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "text" => Ok(OutputFormat::Text),
            "json" => Ok(OutputFormat::Json),
            other => Err(Error::parse(
                0,
                0,
                format!("unknown output format '{other}'"),
            )),
        }
    }
}

/// Either kind of result accepted by [`emit_result`].
#[derive(Debug, Clone, Copy)]
pub enum Decomposition<'a> {
    Svd(&'a SvdFactorization),
    Schmidt(&'a SchmidtDecomposition),
}

// ---------------------------------------------------------------------------
// Complex literals

/// Parses one complex literal. Error columns are 1-based within `token`.
pub fn parse_complex(token: &str) -> Result<C64> {
    parse_complex_at(token, 0, 0)
}

fn parse_complex_at(token: &str, line: usize, col0: usize) -> Result<C64> {
    let err =
        |pos: usize, msg: &str| Error::parse(line, col0 + pos + 1, format!("{msg} in '{token}'"));
    let bytes = token.as_bytes();
    if bytes.is_empty() {
        return Err(err(0, "empty complex literal"));
    }

    let mut pos = 0;
    let first_sign = take_sign(bytes, &mut pos);
    let first_start = pos;
    let first_len = scan_unsigned_float(bytes, pos);
    pos += first_len;

    if pos < bytes.len() && bytes[pos] == b'i' {
        // pure imaginary
        if pos + 1 != bytes.len() {
            return Err(err(pos + 1, "unexpected characters after imaginary unit"));
        }
        let mag =
            magnitude(token, first_start, first_len).map_err(|_| err(first_start, "bad number"))?;
        return Ok(C64::new(0.0, first_sign * mag));
    }
    if first_len == 0 {
        return Err(err(first_start, "expected a number"));
    }
    let re = first_sign
        * magnitude(token, first_start, first_len).map_err(|_| err(first_start, "bad number"))?;
    if pos == bytes.len() {
        return Ok(C64::new(re, 0.0));
    }

    let sign_pos = pos;
    if !matches!(bytes[pos], b'+' | b'-') {
        return Err(err(pos, "unexpected character"));
    }
    let second_sign = take_sign(bytes, &mut pos);
    let second_start = pos;
    let second_len = scan_unsigned_float(bytes, pos);
    pos += second_len;
    if pos >= bytes.len() || bytes[pos] != b'i' {
        return Err(err(pos.max(sign_pos), "imaginary part must end in 'i'"));
    }
    if pos + 1 != bytes.len() {
        return Err(err(pos + 1, "unexpected characters after imaginary unit"));
    }
    let im = second_sign
        * magnitude(token, second_start, second_len)
            .map_err(|_| err(second_start, "bad number"))?;
    Ok(C64::new(re, im))
}

fn take_sign(bytes: &[u8], pos: &mut usize) -> f64 {
    match bytes.get(*pos) {
        Some(b'+') => {
            *pos += 1;
            1.0
        }
        Some(b'-') => {
            *pos += 1;
            -1.0
        }
        _ => 1.0,
    }
}

/// Length of the longest `digits[.digits][e[sign]digits]` or `.digits[...]` prefix at `start`.
fn scan_unsigned_float(bytes: &[u8], start: usize) -> usize {
    let digits = |mut p: usize| {
        while p < bytes.len() && bytes[p].is_ascii_digit() {
            p += 1;
        }
        p
    };
    let mut p = digits(start);
    let int_digits = p - start;
    let mut frac_digits = 0;
    if p < bytes.len() && bytes[p] == b'.' {
        let q = digits(p + 1);
        frac_digits = q - (p + 1);
        if int_digits == 0 && frac_digits == 0 {
            return 0;
        }
        p = q;
    }
    if int_digits == 0 && frac_digits == 0 {
        return 0;
    }
    if p < bytes.len() && matches!(bytes[p], b'e' | b'E') {
        let mut q = p + 1;
        if q < bytes.len() && matches!(bytes[q], b'+' | b'-') {
            q += 1;
        }
        let r = digits(q);
        if r > q {
            p = r;
        }
    }
    p - start
}

fn magnitude(token: &str, start: usize, len: usize) -> std::result::Result<f64, ()> {
    if len == 0 {
        return Ok(1.0);
    }
    let x: f64 = token[start..start + len].parse().map_err(|_| ())?;
    if x.is_finite() {
        Ok(x)
    } else {
        Err(())
    }
}

/// `%.17g`: 17 significant digits, trailing zeros trimmed.
pub fn format_real(x: f64) -> String {
    if x == 0.0 {
        return if x.is_sign_negative() {
            "-0.0".into()
        } else {
            "0".into()
        };
    }
    let sci = format!("{:.16e}", x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..17).contains(&exp) {
        let decimals = (16 - exp).max(0) as usize;
        let fixed = format!("{:.*}", decimals, x);
        trim_fraction(&fixed).to_string()
    } else {
        let mantissa = trim_fraction(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exp.abs())
    }
}

fn trim_fraction(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Formats `z` as a literal accepted by [`parse_complex`].
pub fn format_complex(z: C64) -> String {
    if z.im == 0.0 {
        return format_real(z.re);
    }
    let im = if z.im.abs() == 1.0 {
        String::new()
    } else {
        format_real(z.im.abs())
    };
    let sign = if z.im < 0.0 { "-" } else { "+" };
    if z.re == 0.0 {
        let sign = if z.im < 0.0 { "-" } else { "" };
        format!("{sign}{im}i")
    } else {
        format!("{}{sign}{im}i", format_real(z.re))
    }
}

// ---------------------------------------------------------------------------
// Matrix and state documents

struct Token<'a> {
    line: usize,
    col: usize,
    text: &'a str,
}

/// Nonempty lines with comments removed, each as a token list.
fn tokenize(text: &str) -> Vec<Vec<Token<'_>>> {
    let mut lines = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let content = raw.split('#').next().unwrap_or("");
        let mut tokens = Vec::new();
        let mut offset = 0;
        for piece in content.split_whitespace() {
            let at = content[offset..]
                .find(piece)
                .expect("piece comes from content")
                + offset;
            offset = at + piece.len();
            tokens.push(Token {
                line: idx + 1,
                col: content[..at].chars().count() + 1,
                text: piece,
            });
        }
        if !tokens.is_empty() {
            lines.push(tokens);
        }
    }
    lines
}

fn is_scale_line(tokens: &[Token<'_>]) -> bool {
    tokens[0].text == "scale"
}

fn looks_like_header(tokens: &[Token<'_>]) -> bool {
    tokens.len() == 2
        && tokens.iter().all(|t| {
            t.text.bytes().all(|b| b.is_ascii_digit())
                && t.text.parse::<usize>().is_ok_and(|n| n > 0)
        })
}

fn parse_header(tokens: &[Token<'_>], what: &str) -> Result<(usize, usize)> {
    if tokens.len() != 2 {
        let t = &tokens[0];
        return Err(Error::parse(
            t.line,
            t.col,
            format!(
                "header must be '<{what}>' (two positive integers), found {} tokens",
                tokens.len()
            ),
        ));
    }
    let mut dims = [0usize; 2];
    for (slot, t) in dims.iter_mut().zip(tokens) {
        *slot = match t.text.parse::<usize>() {
            Ok(n) if n > 0 && t.text.bytes().all(|b| b.is_ascii_digit()) => n,
            _ => {
                return Err(Error::parse(
                    t.line,
                    t.col,
                    format!("header dimension '{}' is not a positive integer", t.text),
                ))
            }
        };
    }
    Ok((dims[0], dims[1]))
}

fn parse_scale(tokens: &[Token<'_>]) -> Result<f64> {
    let t = &tokens[0];
    if tokens.len() != 2 {
        return Err(Error::parse(
            t.line,
            t.col,
            "scale line must be 'scale <float>'",
        ));
    }
    let v = &tokens[1];
    match v.text.parse::<f64>() {
        Ok(x) if x.is_finite() => Ok(x),
        _ => Err(Error::parse(
            v.line,
            v.col,
            format!("bad scale factor '{}'", v.text),
        )),
    }
}

/// Header dims, scale-applied entries.
fn parse_grid(
    text: &str,
    what: &str,
    hint: Option<(usize, usize)>,
) -> Result<(usize, usize, Vec<C64>)> {
    let lines = tokenize(text);
    let mut scale: Option<f64> = None;
    let mut dims: Option<(usize, usize)> = None;
    let mut body: Vec<&Token<'_>> = Vec::new();

    let body_token_count: usize = lines
        .iter()
        .filter(|l| !is_scale_line(l))
        .map(Vec::len)
        .sum();

    for tokens in &lines {
        if is_scale_line(tokens) {
            if !body.is_empty() {
                let t = &tokens[0];
                return Err(Error::parse(
                    t.line,
                    t.col,
                    "scale line must precede the entries",
                ));
            }
            if scale.is_some() {
                let t = &tokens[0];
                return Err(Error::parse(t.line, t.col, "duplicate scale line"));
            }
            scale = Some(parse_scale(tokens)?);
            continue;
        }
        if dims.is_none() && body.is_empty() {
            match hint {
                None => {
                    dims = Some(parse_header(tokens, what)?);
                    continue;
                }
                Some((a, b)) => {
                    if looks_like_header(tokens) && body_token_count == a * b + 2 {
                        let declared = parse_header(tokens, what)?;
                        if declared != (a, b) {
                            let t = &tokens[0];
                            return Err(Error::parse(
                                t.line,
                                t.col,
                                format!(
                                    "file declares {}x{} but {a}x{b} was requested",
                                    declared.0, declared.1
                                ),
                            ));
                        }
                        dims = Some(declared);
                        continue;
                    }
                    dims = Some((a, b));
                }
            }
        }
        body.extend(tokens.iter());
    }

    let (rows, cols) = match (dims, hint) {
        (Some(d), _) => d,
        (None, Some(d)) => d,
        (None, None) => return Err(Error::parse(1, 1, format!("missing '<{what}>' header"))),
    };
    let expected = rows * cols;
    if body.len() != expected {
        let (line, col) = body
            .last()
            .map_or((lines.last().map_or(1, |l| l[0].line), 1), |t| {
                (t.line, t.col)
            });
        return Err(Error::parse(
            line,
            col,
            format!(
                "expected {expected} entries for {rows}x{cols}, found {}",
                body.len()
            ),
        ));
    }
    let factor = scale.unwrap_or(1.0);
    let mut entries = Vec::with_capacity(expected);
    for t in body {
        let z = parse_complex_at(t.text, t.line, t.col - 1)?;
        let z = if scale.is_some() { z * factor } else { z };
        if !z.is_finite() {
            return Err(Error::parse(t.line, t.col, "entry overflows after scaling"));
        }
        entries.push(z);
    }
    Ok((rows, cols, entries))
}

pub fn parse_matrix(text: &str) -> Result<ComplexMatrix> {
    let (rows, cols, entries) = parse_grid(text, "rows cols", None)?;
    ComplexMatrix::new(rows, cols, entries)
}

/// State file with a mandatory `dim_a dim_b` header.
pub fn parse_state(text: &str) -> Result<BipartiteState> {
    parse_state_with_dims(text, None)
}

/// State file whose header may be omitted when `dims` is given. A leading
/// two-integer line counts as a header only if the remaining token count is
/// exactly `dim_a * dim_b`; it must then agree with `dims`.
pub fn parse_state_with_dims(text: &str, dims: Option<(usize, usize)>) -> Result<BipartiteState> {
    if let Some((a, b)) = dims {
        if a == 0 || b == 0 {
            return Err(Error::Dimension(format!(
                "dimensions must be positive, got ({a}, {b})"
            )));
        }
    }
    let (a, b, amplitudes) = parse_grid(text, "dim_a dim_b", dims)?;
    BipartiteState::new(a, b, amplitudes)
}

/// Matrix file text for `m`, readable by [`parse_matrix`].
pub fn format_matrix(m: &ComplexMatrix) -> String {
    let mut out = format!("{} {}\n", m.rows(), m.cols());
    for i in 0..m.rows() {
        let row: Vec<String> = m.row(i).iter().map(|&z| format_complex(z)).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out
}

// ---------------------------------------------------------------------------
// Result emission

pub fn emit_result(result: Decomposition<'_>, format: OutputFormat) -> String {
    match (result, format) {
        (Decomposition::Svd(f), OutputFormat::Json) => svd_json(f),
        (Decomposition::Svd(f), OutputFormat::Text) => svd_text(f),
        (Decomposition::Schmidt(sd), OutputFormat::Json) => schmidt_json(sd),
        (Decomposition::Schmidt(sd), OutputFormat::Text) => schmidt_text(sd),
    }
}

fn json_complex(z: C64) -> String {
    format!("[{}, {}]", format_real(z.re), format_real(z.im))
}

fn json_reals(xs: &[f64]) -> String {
    let items: Vec<String> = xs.iter().map(|&x| format_real(x)).collect();
    format!("[{}]", items.join(", "))
}

fn json_complexes(zs: &[C64]) -> String {
    let items: Vec<String> = zs.iter().map(|&z| json_complex(z)).collect();
    format!("[{}]", items.join(", "))
}

fn json_rows<R: AsRef<[C64]>>(rows: impl Iterator<Item = R>) -> String {
    let items: Vec<String> = rows
        .map(|r| format!("    {}", json_complexes(r.as_ref())))
        .collect();
    if items.is_empty() {
        return "[]".into();
    }
    format!("[\n{}\n  ]", items.join(",\n"))
}

fn json_matrix(m: &ComplexMatrix) -> String {
    json_rows((0..m.rows()).map(|i| m.row(i)))
}

fn json_convention(c: &PhaseConvention) -> String {
    match c {
        PhaseConvention::CustomAlphas(alphas) => format!("{{\"custom\": {}}}", json_reals(alphas)),
        named => format!("\"{}\"", named.label()),
    }
}

fn svd_json(f: &SvdFactorization) -> String {
    let mut out = String::from("{\n");
    let _ = writeln!(out, "  \"U\": {},", json_matrix(&f.u));
    let _ = writeln!(out, "  \"sigma\": {},", json_reals(&f.sigma));
    let _ = writeln!(out, "  \"V\": {},", json_matrix(&f.v));
    let _ = writeln!(out, "  \"d\": {},", json_complexes(f.d.entries()));
    let _ = writeln!(out, "  \"phase_u\": {},", json_complexes(&f.phase_u));
    let _ = writeln!(out, "  \"phase_v\": {},", json_complexes(&f.phase_v));
    let _ = writeln!(out, "  \"residual\": {},", format_real(f.residual));
    let _ = writeln!(out, "  \"convention\": {}", json_convention(&f.convention));
    out.push_str("}\n");
    out
}

fn schmidt_json(sd: &SchmidtDecomposition) -> String {
    let mut out = String::from("{\n");
    let _ = writeln!(out, "  \"coefficients\": {},", json_reals(&sd.coefficients));
    let _ = writeln!(out, "  \"basis_a\": {},", json_rows(sd.basis_a.iter()));
    let _ = writeln!(out, "  \"basis_b\": {},", json_rows(sd.basis_b.iter()));
    let _ = writeln!(out, "  \"rank\": {},", sd.schmidt_rank);
    let _ = writeln!(out, "  \"entropy_bits\": {}", format_real(sd.entropy_bits));
    out.push_str("}\n");
    out
}

fn literal_row(zs: &[C64]) -> String {
    zs.iter()
        .map(|&z| format_complex(z))
        .collect::<Vec<_>>()
        .join(" ")
}

fn svd_text(f: &SvdFactorization) -> String {
    let reals: Vec<String> = f.sigma.iter().map(|&s| format_real(s)).collect();
    let mut out = String::new();
    let _ = writeln!(out, "convention: {}", f.convention);
    if let PhaseConvention::CustomAlphas(alphas) = &f.convention {
        let _ = writeln!(
            out,
            "alphas: {}",
            alphas
                .iter()
                .map(|&a| format_real(a))
                .collect::<Vec<_>>()
                .join(" ")
        );
    }
    let _ = writeln!(out, "sigma: {}", reals.join(" "));
    let _ = writeln!(out, "d: {}", literal_row(f.d.entries()));
    let _ = writeln!(out, "phase_u: {}", literal_row(&f.phase_u));
    let _ = writeln!(out, "phase_v: {}", literal_row(&f.phase_v));
    let _ = writeln!(out, "residual: {}", format_real(f.residual));
    let _ = write!(out, "U: {}", format_matrix(&f.u));
    let _ = write!(out, "V: {}", format_matrix(&f.v));
    out
}

fn schmidt_text(sd: &SchmidtDecomposition) -> String {
    let reals: Vec<String> = sd.coefficients.iter().map(|&s| format_real(s)).collect();
    let mut out = String::new();
    let _ = writeln!(out, "coefficients: {}", reals.join(" "));
    let _ = writeln!(out, "rank: {}", sd.schmidt_rank);
    let _ = writeln!(out, "entropy_bits: {}", format_real(sd.entropy_bits));
    for (i, v) in sd.basis_a.iter().enumerate() {
        let _ = writeln!(out, "basis_a[{i}]: {}", literal_row(v));
    }
    for (i, v) in sd.basis_b.iter().enumerate() {
        let _ = writeln!(out, "basis_b[{i}]: {}", literal_row(v));
    }
    out
}

// ---------------------------------------------------------------------------
// JSON read-back

fn json_err(message: impl Into<String>) -> Error {
    Error::parse(0, 0, message)
}

fn field<'a>(obj: &'a Value, key: &str) -> Result<&'a Value> {
    obj.get(key)
        .ok_or_else(|| json_err(format!("missing key '{key}'")))
}

fn as_real(v: &Value, key: &str) -> Result<f64> {
    v.as_f64()
        .ok_or_else(|| json_err(format!("'{key}' holds a non-number")))
}

fn as_reals(v: &Value, key: &str) -> Result<Vec<f64>> {
    v.as_array()
        .ok_or_else(|| json_err(format!("'{key}' must be an array")))?
        .iter()
        .map(|x| as_real(x, key))
        .collect()
}

fn as_complex(v: &Value, key: &str) -> Result<C64> {
    match v.as_array().map(Vec::as_slice) {
        Some([re, im]) => Ok(C64::new(as_real(re, key)?, as_real(im, key)?)),
        _ => Err(json_err(format!("'{key}' entries must be [re, im] pairs"))),
    }
}

fn as_complexes(v: &Value, key: &str) -> Result<Vec<C64>> {
    v.as_array()
        .ok_or_else(|| json_err(format!("'{key}' must be an array")))?
        .iter()
        .map(|z| as_complex(z, key))
        .collect()
}

fn as_rows(v: &Value, key: &str) -> Result<Vec<Vec<C64>>> {
    v.as_array()
        .ok_or_else(|| json_err(format!("'{key}' must be an array of rows")))?
        .iter()
        .map(|r| as_complexes(r, key))
        .collect()
}

fn as_matrix(v: &Value, key: &str) -> Result<ComplexMatrix> {
    ComplexMatrix::from_rows(&as_rows(v, key)?)
}

fn as_convention(v: &Value) -> Result<PhaseConvention> {
    if let Some(s) = v.as_str() {
        return s.parse();
    }
    match v.get("custom") {
        Some(alphas) => Ok(PhaseConvention::CustomAlphas(as_reals(
            alphas,
            "convention",
        )?)),
        None => Err(json_err("unrecognised 'convention'")),
    }
}

/// Reads back the output of [`emit_result`] for an SVD.
pub fn parse_svd_json(text: &str) -> Result<SvdFactorization> {
    let doc: Value = serde_json::from_str(text)
        .map_err(|e| Error::parse(e.line(), e.column(), e.to_string()))?;
    Ok(SvdFactorization {
        u: as_matrix(field(&doc, "U")?, "U")?,
        sigma: as_reals(field(&doc, "sigma")?, "sigma")?,
        v: as_matrix(field(&doc, "V")?, "V")?,
        d: ComplexDiagonal(as_complexes(field(&doc, "d")?, "d")?),
        phase_u: as_complexes(field(&doc, "phase_u")?, "phase_u")?,
        phase_v: as_complexes(field(&doc, "phase_v")?, "phase_v")?,
        convention: as_convention(field(&doc, "convention")?)?,
        residual: as_real(field(&doc, "residual")?, "residual")?,
    })
}

/// Reads back the output of [`emit_result`] for a Schmidt decomposition.
pub fn parse_schmidt_json(text: &str) -> Result<SchmidtDecomposition> {
    let doc: Value = serde_json::from_str(text)
        .map_err(|e| Error::parse(e.line(), e.column(), e.to_string()))?;
    let rank = field(&doc, "rank")?
        .as_u64()
        .ok_or_else(|| json_err("'rank' must be a nonnegative integer"))?;
    Ok(SchmidtDecomposition {
        coefficients: as_reals(field(&doc, "coefficients")?, "coefficients")?,
        basis_a: as_rows(field(&doc, "basis_a")?, "basis_a")?,
        basis_b: as_rows(field(&doc, "basis_b")?, "basis_b")?,
        schmidt_rank: rank as usize,
        entropy_bits: as_real(field(&doc, "entropy_bits")?, "entropy_bits")?,
    })
}

//! Seeded file generation and the on-disk formats.
//!
//! Cache image (`MACC`):
//!
//! ```text
//! "MACC" | version u8 | N u16 | K u16 | L u16 | subfile_bits u32
//! K blocks, block k = q entries of { j u16 | payload }
//! ```
//!
//! Transcript (`MACX`):
//!
//! ```text
//! "MACX" | version u8 | N u16 | K u16 | L u16 | subfile_bits u32
//! demand: K bytes | count u32
//! count entries of { n u16 | j u16 | origin u8 (0 forced, 1 extra) | payload }
//! ```
//!
//! Integers are big-endian. A payload is `ceil(subfile_bits/8)` bytes, packed
//! MSB first, with zero padding in the low bits of the last byte.

use std::fmt::{self, Write as _};

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::bits::Bits;
use crate::delivery::{DemandVector, Origin, Transcript, TranscriptEntry};
use crate::error::Error as SchemeError;
use crate::params::{CyclicIndex, SystemParams};
use crate::placement::{cache_content_indices, CacheArray, CodedFile, FileStore, SubfileLabel};
use crate::verify::{Coverage, SweepRow, SweepStatus, VerificationReport};

pub const CACHE_MAGIC: &[u8; 4] = b"MACC";
pub const TRANSCRIPT_MAGIC: &[u8; 4] = b"MACX";
pub const FORMAT_VERSION: u8 = 1;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseErrorKind {
    BadMagic,
    Version(u8),
    Truncated,
    DemandOutOfRange(u8),
    TrailingBytes,
    Invalid(String),
}

impl fmt::Display for ParseErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParseErrorKind::BadMagic => f.write_str("bad magic"),
            ParseErrorKind::Version(v) => write!(f, "unsupported format version {v}"),
            ParseErrorKind::Truncated => f.write_str("truncated stream"),
            ParseErrorKind::DemandOutOfRange(v) => write!(f, "demand out of range ({v})"),
            ParseErrorKind::TrailingBytes => f.write_str("trailing bytes"),
            ParseErrorKind::Invalid(msg) => f.write_str(msg),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{kind} at offset {offset}")]
pub struct ParseError {
    pub offset: usize,
    pub kind: ParseErrorKind,
}

/// Deterministic store: subfile `W_{n,j}` is drawn from a ChaCha8 stream
/// seeded with `seed ^ mix(n, j)`, so any single subfile can be regenerated
/// on its own.
pub fn generate_store(params: &SystemParams, seed: u64) -> FileStore {
    let subfiles = (1..=params.files())
        .map(|n| {
            params
                .indices()
                .map(|j| generate_subfile(params, seed, n, j))
                .collect()
        })
        .collect();
    FileStore::from_subfiles(*params, subfiles).expect("generated subfiles have the right shape")
}

pub fn generate_subfile(params: &SystemParams, seed: u64, file: usize, position: CyclicIndex) -> Bits {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ mix(file as u64, position.get() as u64));
    let mut buf = vec![0u8; params.subfile_bits().div_ceil(8)];
    rng.fill_bytes(&mut buf);
    Bits::from_bytes(&buf, params.subfile_bits()).expect("buffer covers the subfile")
}

// splitmix64 finaliser over the packed (n, j) pair
fn mix(file: u64, position: u64) -> u64 {
    let mut z = (file << 32 | position).wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn write_header(out: &mut Vec<u8>, magic: &[u8; 4], p: &SystemParams) -> Result<(), SchemeError> {
    let narrow = |v: usize, what: &str| {
        u16::try_from(v).map_err(|_| SchemeError::Parameter(format!("{what}={v} exceeds u16")))
    };
    out.extend_from_slice(magic);
    out.push(FORMAT_VERSION);
    out.extend_from_slice(&narrow(p.files(), "N")?.to_be_bytes());
    out.extend_from_slice(&narrow(p.users(), "K")?.to_be_bytes());
    out.extend_from_slice(&narrow(p.span(), "L")?.to_be_bytes());
    let sb = u32::try_from(p.subfile_bits())
        .map_err(|_| SchemeError::Parameter("subfile_bits exceeds u32".into()))?;
    out.extend_from_slice(&sb.to_be_bytes());
    Ok(())
}

pub fn serialize_caches(caches: &CacheArray) -> Result<Vec<u8>, SchemeError> {
    let p = caches.params();
    let mut out = Vec::new();
    write_header(&mut out, CACHE_MAGIC, p)?;
    for (_, z) in caches.iter() {
        for c in z {
            out.extend_from_slice(&(c.position.get() as u16).to_be_bytes());
            out.extend_from_slice(&c.payload.to_bytes());
        }
    }
    Ok(out)
}

pub fn serialize_transcript(t: &Transcript) -> Result<Vec<u8>, SchemeError> {
    let p = t.params();
    if p.files() > 255 {
        return Err(SchemeError::Parameter(format!(
            "N={} exceeds the one-byte demand encoding",
            p.files()
        )));
    }
    let mut out = Vec::new();
    write_header(&mut out, TRANSCRIPT_MAGIC, p)?;
    out.extend(t.demand().entries().iter().map(|&n| n as u8));
    let count = u32::try_from(t.entries().len())
        .map_err(|_| SchemeError::Parameter("too many transcript entries".into()))?;
    out.extend_from_slice(&count.to_be_bytes());
    for e in t.entries() {
        out.extend_from_slice(&(e.label.file as u16).to_be_bytes());
        out.extend_from_slice(&(e.label.position as u16).to_be_bytes());
        out.push(match e.origin {
            Origin::Forced => 0,
            Origin::Extra => 1,
        });
        out.extend_from_slice(&e.payload.to_bytes());
    }
    Ok(out)
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn new(buf: &'a [u8]) -> Self {
        Reader { buf, pos: 0 }
    }

    fn err(&self, offset: usize, kind: ParseErrorKind) -> ParseError {
        ParseError { offset, kind }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8], ParseError> {
        if self.buf.len() - self.pos < n {
            return Err(self.err(self.pos, ParseErrorKind::Truncated));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8, ParseError> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16, ParseError> {
        let b = self.take(2)?;
        Ok(u16::from_be_bytes([b[0], b[1]]))
    }

    fn u32(&mut self) -> Result<u32, ParseError> {
        let b = self.take(4)?;
        Ok(u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
    }

    fn header(&mut self, magic: &[u8; 4]) -> Result<SystemParams, ParseError> {
        if self.take(4)? != magic {
            return Err(self.err(0, ParseErrorKind::BadMagic));
        }
        let v = self.u8()?;
        if v != FORMAT_VERSION {
            return Err(self.err(4, ParseErrorKind::Version(v)));
        }
        let n = self.u16()? as usize;
        let k = self.u16()? as usize;
        let l = self.u16()? as usize;
        let sb = self.u32()? as usize;
        SystemParams::new(n, k, l, sb).map_err(|e| self.err(5, ParseErrorKind::Invalid(e.to_string())))
    }

    fn payload(&mut self, bits: usize) -> Result<Bits, ParseError> {
        let at = self.pos;
        let bytes = self.take(bits.div_ceil(8))?;
        let b = Bits::from_bytes(bytes, bits).expect("length checked");
        if b.to_bytes() != bytes {
            return Err(self.err(at, ParseErrorKind::Invalid("nonzero padding bits".into())));
        }
        Ok(b)
    }

    fn finish(&self) -> Result<(), ParseError> {
        if self.pos != self.buf.len() {
            return Err(self.err(self.pos, ParseErrorKind::TrailingBytes));
        }
        Ok(())
    }
}

pub fn deserialize_caches(bytes: &[u8]) -> Result<CacheArray, ParseError> {
    let mut r = Reader::new(bytes);
    let p = r.header(CACHE_MAGIC)?;
    let mut contents = Vec::with_capacity(p.users());
    for k in p.indices() {
        let mut block = Vec::with_capacity(p.per_cache());
        for want in cache_content_indices(k, &p) {
            let at = r.pos;
            let j = r.u16()? as usize;
            if j != want.get() {
                return Err(r.err(
                    at,
                    ParseErrorKind::Invalid(format!(
                        "cache {k} entry has position {j}, placement requires {want}"
                    )),
                ));
            }
            let payload = r.payload(p.subfile_bits())?;
            block.push(CodedFile {
                position: want,
                payload,
            });
        }
        contents.push(block);
    }
    r.finish()?;
    CacheArray::from_contents(p, contents).map_err(|e| r.err(0, ParseErrorKind::Invalid(e.to_string())))
}

pub fn deserialize_transcript(bytes: &[u8]) -> Result<Transcript, ParseError> {
    let mut r = Reader::new(bytes);
    let p = r.header(TRANSCRIPT_MAGIC)?;
    let mut demand = Vec::with_capacity(p.users());
    for _ in 0..p.users() {
        let at = r.pos;
        let v = r.u8()?;
        if v == 0 || v as usize > p.files() {
            return Err(r.err(at, ParseErrorKind::DemandOutOfRange(v)));
        }
        demand.push(v as usize);
    }
    let demand = DemandVector::new(demand, &p).expect("entries checked above");
    let count = r.u32()? as usize;
    let mut entries = Vec::new();
    for _ in 0..count {
        let at = r.pos;
        let file = r.u16()? as usize;
        let position = r.u16()? as usize;
        if file < 1 || file > p.files() || position < 1 || position > p.users() {
            return Err(r.err(
                at,
                ParseErrorKind::Invalid(format!("entry label W_{{{file},{position}}} out of range")),
            ));
        }
        let origin = match r.u8()? {
            0 => Origin::Forced,
            1 => Origin::Extra,
            o => {
                return Err(r.err(at + 4, ParseErrorKind::Invalid(format!("unknown origin tag {o}"))))
            }
        };
        let payload = r.payload(p.subfile_bits())?;
        entries.push(TranscriptEntry {
            label: SubfileLabel::new(file, position),
            payload,
            origin,
        });
    }
    r.finish()?;
    Transcript::new(p, demand, entries).map_err(|e| r.err(0, ParseErrorKind::Invalid(e.to_string())))
}

/// Fails unless the two artifacts describe the same system.
pub fn check_consistent(caches: &CacheArray, t: &Transcript) -> Result<(), SchemeError> {
    if caches.params() != t.params() {
        return Err(SchemeError::Parameter(format!(
            "cache image is for {} with {} bits/subfile, transcript for {} with {}",
            caches.params(),
            caches.params().subfile_bits(),
            t.params(),
            t.params().subfile_bits()
        )));
    }
    Ok(())
}

pub const SWEEP_HEADER: &str = "N,K,L,M_num,M_den,R_num,R_den,failures,status";

/// Sweep rows as CSV. Rationals are written as numerator/denominator pairs.
pub fn emit_sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(SWEEP_HEADER);
    out.push('\n');
    for row in rows {
        let frac = |r: &Option<crate::Rational>| match r {
            Some(r) => format!("{},{}", r.numer(), r.denom()),
            None => ",".to_string(),
        };
        let status = match &row.status {
            SweepStatus::Ok => "ok".to_string(),
            SweepStatus::Failed => "fail".to_string(),
            SweepStatus::Skipped(code) => format!("skipped:{code}"),
        };
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            row.files,
            row.users,
            row.span,
            frac(&row.memory),
            frac(&row.rate),
            row.failures,
            status
        );
    }
    out
}

/// `key: value` lines, then one `failure:` line per failure.
pub fn render_report(r: &VerificationReport) -> String {
    let p = &r.params;
    let coverage = match r.coverage {
        Coverage::Exhaustive => "exhaustive".to_string(),
        Coverage::Sampled { seed, count } => format!("sampled(seed={seed}, count={count})"),
    };
    let mut out = String::new();
    let _ = writeln!(out, "params: N={} K={} L={}", p.files(), p.users(), p.span());
    let _ = writeln!(out, "subfile_bits: {}", p.subfile_bits());
    let _ = writeln!(out, "seed: {}", r.seed);
    let _ = writeln!(out, "coverage: {coverage}");
    let _ = writeln!(out, "demands_checked: {}", r.demands_checked);
    let _ = writeln!(out, "pairs_checked: {}", r.pairs_checked);
    let _ = writeln!(out, "failures: {}", r.failures.len());
    let _ = writeln!(out, "measured_rate: {}", r.measured_rate);
    let _ = writeln!(out, "expected_rate: {}", r.expected_rate);
    let _ = writeln!(out, "measured_memory: {}", r.measured_memory);
    let _ = writeln!(out, "expected_memory: {}", r.expected_memory);
    let _ = writeln!(out, "oracle_agreements: {}", r.oracle_agreements);
    if p.exceeds_users() {
        let _ = writeln!(out, "warning: N > K, rate N-1 is not below the cache-free rate min(N,K)");
    }
    for f in &r.failures {
        let d = f
            .demand
            .iter()
            .map(ToString::to_string)
            .collect::<Vec<_>>()
            .join(",");
        let user = f.user.map_or("-".to_string(), |u| u.to_string());
        let _ = writeln!(out, "failure: d=({d}) user={user} {}", f.description);
    }
    let _ = writeln!(
        out,
        "summary: {coverage}, {} demands, {} failures, R = {} = N-1, M = {}",
        r.demands_checked,
        r.failures.len(),
        r.measured_rate,
        r.measured_memory
    );
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::delivery::deliver;
    use crate::placement::place;
    use crate::verify::sweep;

    #[test]
    fn store_is_deterministic_and_seed_sensitive() {
        let p = SystemParams::new(2, 5, 2, 8).unwrap();
        assert_eq!(generate_store(&p, 7), generate_store(&p, 7));
        assert_ne!(generate_store(&p, 7), generate_store(&p, 8));
        let j = p.index(3).unwrap();
        assert_eq!(&generate_subfile(&p, 7, 2, j), generate_store(&p, 7).subfile(2, j));
    }

    #[test]
    fn cache_image_layout() {
        let p = SystemParams::new(2, 3, 2, 12).unwrap();
        let store = generate_store(&p, 0);
        let bytes = serialize_caches(&place(&store)).unwrap();
        assert_eq!(&bytes[..5], b"MACC\x01");
        assert_eq!(&bytes[5..15], &[0, 2, 0, 3, 0, 2, 0, 0, 0, 12]);
        // 3 caches x 1 entry x (2 + 2) bytes
        assert_eq!(bytes.len(), 15 + 3 * 4);
        assert_eq!(&bytes[15..17], &[0, 1]);
        assert_eq!(bytes[18] & 0x0f, 0);
    }

    #[test]
    fn parse_errors_name_offsets() {
        let p = SystemParams::new(2, 5, 2, 8).unwrap();
        let store = generate_store(&p, 0);
        let caches = place(&store);
        let bytes = serialize_caches(&caches).unwrap();

        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert_eq!(deserialize_caches(&bad).unwrap_err().kind, ParseErrorKind::BadMagic);
        let mut bad = bytes.clone();
        bad[4] = 2;
        assert_eq!(
            deserialize_caches(&bad).unwrap_err(),
            ParseError { offset: 4, kind: ParseErrorKind::Version(2) }
        );
        let err = deserialize_caches(&bytes[..bytes.len() - 1]).unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::Truncated);
        let mut long = bytes.clone();
        long.push(0);
        assert_eq!(
            deserialize_caches(&long).unwrap_err(),
            ParseError { offset: bytes.len(), kind: ParseErrorKind::TrailingBytes }
        );
        let mut misplaced = bytes.clone();
        misplaced[16] = 2; // first entry of Z_1 should be position 1
        assert_eq!(deserialize_caches(&misplaced).unwrap_err().offset, 15);

        let d = DemandVector::new(vec![1, 2, 1, 2, 2], &p).unwrap();
        let t = serialize_transcript(&deliver(&d, &store)).unwrap();
        let mut bad = t.clone();
        bad[15] = 0;
        let err = deserialize_transcript(&bad).unwrap_err();
        assert_eq!(err.offset, 15);
        assert!(err.to_string().contains("demand out of range"));
        assert_eq!(deserialize_caches(&t).unwrap_err().kind, ParseErrorKind::BadMagic);
    }

    #[test]
    fn round_trips() {
        let p = SystemParams::new(3, 5, 2, 13).unwrap();
        let store = generate_store(&p, 4);
        let caches = place(&store);
        let bytes = serialize_caches(&caches).unwrap();
        let back = deserialize_caches(&bytes).unwrap();
        assert_eq!(back, caches);
        assert_eq!(serialize_caches(&back).unwrap(), bytes);

        let d = DemandVector::new(vec![3, 1, 2, 2, 1], &p).unwrap();
        let t = deliver(&d, &store);
        let bytes = serialize_transcript(&t).unwrap();
        let back = deserialize_transcript(&bytes).unwrap();
        assert_eq!(back, t);
        check_consistent(&caches, &back).unwrap();

        let other = place(&generate_store(&SystemParams::new(3, 5, 4, 13).unwrap(), 0));
        assert!(check_consistent(&other, &back).is_err());
    }

    #[test]
    fn sweep_csv_lines() {
        assert_eq!(emit_sweep_csv(&[]), format!("{SWEEP_HEADER}\n"));
        let rows = sweep(&[(2, 5, 2), (2, 6, 4)], 8, 0, 1000);
        let csv = emit_sweep_csv(&rows);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines, [SWEEP_HEADER, "2,5,2,2,5,1,1,0,ok", "2,6,4,,,,,0,skipped:KL"]);
    }

    #[test]
    fn report_text() {
        let p = SystemParams::new(2, 5, 2, 8).unwrap();
        let text = render_report(&crate::verify_all_demands(&p, 0, 100_000));
        assert!(text.contains("coverage: exhaustive\n"));
        assert!(text.contains("demands_checked: 32\n"));
        assert!(text.contains("failures: 0\n"));
        assert!(text.contains("summary: exhaustive, 32 demands, 0 failures, R = 1 = N-1, M = 2/5"));
    }
}

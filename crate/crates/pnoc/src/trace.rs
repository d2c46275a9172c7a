//! Packet traces: the JSONL interchange format, readers, writers, and a
//! seeded synthetic generator.
//!
//! One packet per line: `{"seq":0,"src":"cluster0","dst":"cluster1",
//! "kind":"float","approx":true,"payload":["3ff0000000000000"]}`. Payload
//! words are 64-bit patterns as 16-digit hex so floats survive bit-exactly.

use std::io::{BufRead, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fpapprox::FloatWord;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum PacketKind {
    #[serde(rename = "float")]
    Float,
    #[serde(rename = "int")]
    Integer,
    #[serde(rename = "ctl")]
    Control,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Packet {
    pub seq: u64,
    pub src: String,
    pub dst: String,
    pub kind: PacketKind,
    pub approximable: bool,
    pub payload: Vec<FloatWord>,
}

/// Wire form of one trace line.
#[derive(Serialize, Deserialize)]
struct PacketLine {
    seq: u64,
    src: String,
    dst: String,
    kind: PacketKind,
    approx: bool,
    payload: Vec<String>,
}

fn parse_hex_word(text: &str) -> Option<u64> {
    let digits = text
        .strip_prefix("0x")
        .or_else(|| text.strip_prefix("0X"))
        .unwrap_or(text);
    u64::from_str_radix(digits, 16).ok()
}

impl Packet {
    fn from_line(line: PacketLine, line_no: usize) -> Result<Self> {
        if line.approx && line.kind != PacketKind::Float {
            return Err(Error::TraceLine {
                line: line_no,
                reason: format!("packet {} is approximable but not a float packet", line.seq),
            });
        }
        let mut payload = Vec::with_capacity(line.payload.len());
        for word in &line.payload {
            let bits = parse_hex_word(word).ok_or_else(|| Error::TraceLine {
                line: line_no,
                reason: format!("payload word '{word}' is not a 64-bit hex pattern"),
            })?;
            payload.push(FloatWord::from_bits(bits));
        }
        Ok(Packet {
            seq: line.seq,
            src: line.src,
            dst: line.dst,
            kind: line.kind,
            approximable: line.approx,
            payload,
        })
    }

    fn to_line(&self) -> PacketLine {
        PacketLine {
            seq: self.seq,
            src: self.src.clone(),
            dst: self.dst.clone(),
            kind: self.kind,
            approx: self.approximable,
            payload: self
                .payload
                .iter()
                .map(|w| format!("{:016x}", w.bits()))
                .collect(),
        }
    }
}

pub fn read_trace<R: BufRead>(reader: R) -> Result<Vec<Packet>> {
    let mut packets = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let text = line?;
        if text.trim().is_empty() {
            continue;
        }
        let parsed: PacketLine = serde_json::from_str(&text).map_err(|e| Error::TraceLine {
            line: line_no,
            reason: e.to_string(),
        })?;
        packets.push(Packet::from_line(parsed, line_no)?);
    }
    Ok(packets)
}

pub fn write_trace<W: Write>(packets: &[Packet], mut writer: W) -> Result<()> {
    for packet in packets {
        let line = serde_json::to_string(&packet.to_line()).expect("trace line serializes");
        writeln!(writer, "{line}")?;
    }
    Ok(())
}

pub fn load_trace(path: &Path) -> Result<Vec<Packet>> {
    let file = std::fs::File::open(path)
        .map_err(|e| Error::InputData(format!("{}: {e}", path.display())))?;
    read_trace(std::io::BufReader::new(file))
}

pub fn save_trace(packets: &[Packet], path: &Path) -> Result<()> {
    let file = std::fs::File::create(path)
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    let mut writer = std::io::BufWriter::new(file);
    write_trace(packets, &mut writer)?;
    writer.flush()?;
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DestMode {
    /// Cycle through every ordered (source, destination) pair, giving exact
    /// per-destination counts over a full cycle.
    RoundRobin,
    /// Seeded uniform choice of source and destination.
    Random,
}

impl std::str::FromStr for DestMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "round-robin" => Ok(DestMode::RoundRobin),
            "random" => Ok(DestMode::Random),
            other => Err(Error::Config(format!("unknown destination mode '{other}'"))),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TraceGenSpec {
    pub packets: u64,
    /// Fraction of packets that carry floats; those are flagged approximable.
    pub float_fraction: f64,
    pub words_per_packet: usize,
    pub dest_mode: DestMode,
    pub seed: u64,
}

impl Default for TraceGenSpec {
    fn default() -> Self {
        TraceGenSpec {
            packets: 1000,
            float_fraction: 0.5,
            words_per_packet: 4,
            dest_mode: DestMode::RoundRobin,
            seed: 42,
        }
    }
}

/// Generates a synthetic trace over `nodes`. Float packets get finite
/// positive payloads; the float/int split follows `float_fraction` with
/// exact counts regardless of seed.
pub fn generate_trace(spec: &TraceGenSpec, nodes: &[String]) -> Result<Vec<Packet>> {
    if nodes.len() < 2 {
        return Err(Error::Config(
            "trace generation needs at least two nodes".into(),
        ));
    }
    if !(0.0..=1.0).contains(&spec.float_fraction) {
        return Err(Error::Config(format!(
            "float fraction {} outside [0, 1]",
            spec.float_fraction
        )));
    }
    let mut rng = ChaCha12Rng::seed_from_u64(spec.seed);
    let n = nodes.len();
    let pairs = n * (n - 1);
    let mut packets = Vec::with_capacity(spec.packets as usize);
    let mut non_float = 0u64;
    for i in 0..spec.packets {
        let (src_idx, dst_idx) = match spec.dest_mode {
            DestMode::RoundRobin => {
                let p = (i as usize) % pairs;
                let src = p / (n - 1);
                let dst = (src + 1 + p % (n - 1)) % n;
                (src, dst)
            }
            DestMode::Random => {
                let src = rng.gen_range(0..n);
                let dst = (src + rng.gen_range(1..n)) % n;
                (src, dst)
            }
        };
        // Interleaved float selection: exactly floor(N * fraction) float
        // packets over any run of N.
        let is_float = ((i + 1) as f64 * spec.float_fraction).floor()
            > (i as f64 * spec.float_fraction).floor();
        let (kind, approximable, payload) = if is_float {
            let words = (0..spec.words_per_packet)
                .map(|_| FloatWord::from_f64(rng.gen_range(0.5..2.0)))
                .collect();
            (PacketKind::Float, true, words)
        } else if non_float.is_multiple_of(2) {
            non_float += 1;
            let words = (0..spec.words_per_packet)
                .map(|_| FloatWord::from_bits(rng.gen::<u32>() as u64))
                .collect();
            (PacketKind::Integer, false, words)
        } else {
            non_float += 1;
            (
                PacketKind::Control,
                false,
                vec![FloatWord::from_bits(rng.gen_range(0..16))],
            )
        };
        packets.push(Packet {
            seq: i,
            src: nodes[src_idx].clone(),
            dst: nodes[dst_idx].clone(),
            kind,
            approximable,
            payload,
        });
    }
    Ok(packets)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    fn nodes(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("cluster{i}")).collect()
    }

    #[test]
    fn round_trips_through_jsonl() {
        let spec = TraceGenSpec {
            packets: 50,
            ..TraceGenSpec::default()
        };
        let trace = generate_trace(&spec, &nodes(8)).unwrap();
        let mut buf = Vec::new();
        write_trace(&trace, &mut buf).unwrap();
        let back = read_trace(buf.as_slice()).unwrap();
        assert_eq!(back, trace);
    }

    #[test]
    fn parses_hand_written_line() {
        let line = r#"{"seq":3,"src":"a","dst":"b","kind":"float","approx":true,"payload":["0x3ff0000000000000","4000000000000000"]}"#;
        let trace = read_trace(line.as_bytes()).unwrap();
        assert_eq!(trace.len(), 1);
        assert_eq!(trace[0].payload[0].to_f64(), 1.0);
        assert_eq!(trace[0].payload[1].to_f64(), 2.0);
        assert!(trace[0].approximable);
    }

    #[test]
    fn bad_lines_name_the_line_number() {
        let text = "{\"seq\":0,\"src\":\"a\",\"dst\":\"b\",\"kind\":\"float\",\"approx\":false,\"payload\":[]}\nnot json\n";
        match read_trace(text.as_bytes()) {
            Err(Error::TraceLine { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected trace line error, got {other:?}"),
        }

        let bad_word =
            r#"{"seq":0,"src":"a","dst":"b","kind":"float","approx":false,"payload":["zzz"]}"#;
        assert!(matches!(
            read_trace(bad_word.as_bytes()),
            Err(Error::TraceLine { line: 1, .. })
        ));
    }

    #[test]
    fn approximable_non_float_rejected() {
        let line = r#"{"seq":0,"src":"a","dst":"b","kind":"int","approx":true,"payload":[]}"#;
        assert!(matches!(
            read_trace(line.as_bytes()),
            Err(Error::TraceLine { line: 1, .. })
        ));
    }

    #[test]
    fn float_fraction_counts_are_exact() {
        for fraction in [0.0, 0.25, 0.5, 1.0] {
            let spec = TraceGenSpec {
                packets: 1000,
                float_fraction: fraction,
                ..TraceGenSpec::default()
            };
            let trace = generate_trace(&spec, &nodes(8)).unwrap();
            let floats = trace.iter().filter(|p| p.kind == PacketKind::Float).count();
            assert_eq!(floats, (1000.0 * fraction).floor() as usize);
            assert!(trace
                .iter()
                .all(|p| p.approximable == (p.kind == PacketKind::Float)));
        }
    }

    #[test]
    fn round_robin_covers_pairs_exactly() {
        // 8 nodes -> 56 ordered pairs; 112 packets hit each exactly twice.
        let spec = TraceGenSpec {
            packets: 112,
            ..TraceGenSpec::default()
        };
        let trace = generate_trace(&spec, &nodes(8)).unwrap();
        let mut hist: BTreeMap<(String, String), usize> = BTreeMap::new();
        for p in &trace {
            assert_ne!(p.src, p.dst);
            *hist.entry((p.src.clone(), p.dst.clone())).or_default() += 1;
        }
        assert_eq!(hist.len(), 56);
        assert!(hist.values().all(|&c| c == 2));
    }

    #[test]
    fn generation_is_reproducible() {
        let spec = TraceGenSpec {
            packets: 200,
            dest_mode: DestMode::Random,
            ..TraceGenSpec::default()
        };
        let a = generate_trace(&spec, &nodes(8)).unwrap();
        let b = generate_trace(&spec, &nodes(8)).unwrap();
        assert_eq!(a, b);
        let mut buf_a = Vec::new();
        let mut buf_b = Vec::new();
        write_trace(&a, &mut buf_a).unwrap();
        write_trace(&b, &mut buf_b).unwrap();
        assert_eq!(buf_a, buf_b);

        let other = TraceGenSpec { seed: 43, ..spec };
        assert_ne!(generate_trace(&other, &nodes(8)).unwrap(), a);
    }

    #[test]
    fn too_few_nodes_rejected() {
        assert!(generate_trace(&TraceGenSpec::default(), &nodes(1)).is_err());
    }
}

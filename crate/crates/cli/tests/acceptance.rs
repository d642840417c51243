//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! fails if any criterion fails.

use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use proptest::collection::vec;
use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};

use nfcsim_cli::{calibrate_tables, compare_protocols, offload_bench, simulate, Format, Overrides, Report, Scenario};
use nfcsim_core::roleswitch::{
    run_disabling_enabling, run_enabling_disabling, success_rate, transfer_message, DelayParameter, ProtocolConfig,
    ReadinessModel, Simulation,
};
use nfcsim_core::transfer::{assemble, decode_aid, encode_aid, fragment, ChunkIndex, MessageStorage, DEFAULT_BASE_AID};
use nfcsim_core::workloads::{nqueens_count, rsa_decrypt, rsa_encrypt, rsa_keygen};

type Check = Result<String, String>;
type Criterion = fn() -> Check;

fn scenario(name: &str) -> Scenario {
    let p: PathBuf = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name);
    Scenario::load(&p).expect("scenario loads")
}

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn value(r: &Report, metric: &str, size: u64) -> Result<f64, String> {
    r.value(metric, size).ok_or_else(|| format!("no {metric} row for size {size}"))
}

/// Default hardware constants in microseconds.
const T_APDU: u64 = 329_000;
const DETECT: u64 = 10_000;
const COMMAND: u64 = 60_000;
const ENABLE: u64 = 776_000;
const DISABLE: u64 = 1_179_000;

fn c1_timing_algebra() -> Check {
    let start = Instant::now();
    let sim = Simulation::deterministic();
    let s_de = DISABLE + 700_000 + ENABLE + DETECT;
    let enable_at = COMMAND + 310_000;
    let s_ed = (enable_at + ENABLE).max(enable_at + 100_000 + DISABLE) + DETECT - T_APDU;
    for n in [1u64, 2, 10, 50] {
        let de = run_disabling_enabling(&ProtocolConfig::disabling_enabling(700), &sim, n as u32, 2048)
            .map_err(|e| e.to_string())?;
        let ed = run_enabling_disabling(&ProtocolConfig::enabling_disabling(310, 100), &sim, n as u32, 2048)
            .map_err(|e| e.to_string())?;
        for (name, got, s) in [("DE", de.latency.as_micros(), s_de), ("ED", ed.latency.as_micros(), s_ed)] {
            let want = 2 * n * T_APDU + (2 * n - 1) * s;
            ensure(got == want, format!("{name} n={n}: {got} us != {want} us"))?;
        }
    }
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(1), format!("took {elapsed:?}"))?;
    Ok(format!("n in {{1,2,10,50}} exact for both variants in {elapsed:.2?}"))
}

fn rates_within(file: &str, expected: &[(u64, f64)], limit: Option<Duration>) -> Check {
    let start = Instant::now();
    let r = simulate(&scenario(file), Overrides::default()).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    let mut got = Vec::new();
    for &(delay, want) in expected {
        let v = value(&r, "success_rate", delay)?;
        ensure((v - want).abs() <= 0.03, format!("{delay} ms: {v:.4} vs {want}"))?;
        got.push(format!("{delay}:{v:.3}"));
    }
    if let Some(limit) = limit {
        ensure(elapsed < limit, format!("took {elapsed:?}"))?;
    }
    Ok(format!("{} in {elapsed:.1?}", got.join(" ")))
}

fn c2_sweep_t() -> Check {
    rates_within(
        "table2.toml",
        &[(680, 0.05), (690, 0.40), (700, 0.82), (710, 0.82)],
        Some(Duration::from_secs(30)),
    )
}

fn c3_sweep_t1_t2() -> Check {
    let a = rates_within(
        "table3.toml",
        &[(250, 0.0), (260, 0.0), (270, 0.30), (280, 0.55), (290, 0.60), (300, 0.65), (310, 0.95)],
        None,
    )?;
    let b = rates_within("table4.toml", &[(50, 0.0), (70, 0.0), (90, 0.0), (100, 0.85)], None)?;
    Ok(format!("t1 {a}; t2 {b}"))
}

fn c4_calibration() -> Check {
    let tables = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios/tables.toml");
    let m = calibrate_tables(Some(&tables), 0.80).map_err(|e| e.to_string())?;
    let got = [DelayParameter::T, DelayParameter::T1, DelayParameter::T2].map(|p| m.recommended(p));
    ensure(got == [Some(700), Some(310), Some(100)], format!("recommended {got:?}"))?;
    Ok("t = 700, t1 = 310, t2 = 100".into())
}

fn c5_protocol_comparison() -> Check {
    let r = compare_protocols(&scenario("compare.toml"), Overrides::default()).map_err(|e| e.to_string())?;
    let (mut lat, mut bw, mut sw) = (Vec::new(), Vec::new(), Vec::new());
    for kb in 1..=8u64 {
        let size = kb * 2048;
        let l = value(&r, "ratio.latency", size)?;
        let b = value(&r, "ratio.bandwidth", size)?;
        let s = value(&r, "ratio.t_switching_avg", size)?;
        ensure((0.4..=0.6).contains(&l), format!("{size} B latency ratio {l:.4}"))?;
        ensure((1.4..=1.8).contains(&b), format!("{size} B bandwidth ratio {b:.4}"))?;
        ensure(s < 0.5, format!("{size} B switching ratio {s:.4}"))?;
        lat.push(l);
        bw.push(b);
        sw.push(s);
    }
    let span = |v: &[f64]| {
        let lo = v.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        format!("{lo:.3}..{hi:.3}")
    };
    Ok(format!("latency {} bandwidth {} switching {}", span(&lat), span(&bw), span(&sw)))
}

fn c6_bandwidth() -> Check {
    let r = run_enabling_disabling(&ProtocolConfig::default(), &Simulation::deterministic(), 1, 2048)
        .map_err(|e| e.to_string())?;
    let kbps = 8.0 * r.bytes_transferred as f64 / r.total_time_ms();
    ensure((kbps - r.bandwidth_kbps).abs() < 1e-9, "reported bandwidth disagrees")?;
    ensure((15.0..=25.0).contains(&kbps), format!("{kbps:.2} kbps"))?;
    Ok(format!("{kbps:.2} kbps for a 2 KB round trip"))
}

fn permutations_oracle(n: usize) -> u64 {
    fn go(cols: &mut Vec<usize>, used: &mut [bool], n: usize) -> u64 {
        if cols.len() == n {
            let ok = (0..n).all(|a| (a + 1..n).all(|b| cols[a].abs_diff(cols[b]) != b - a));
            return ok as u64;
        }
        (0..n)
            .map(|c| {
                if used[c] {
                    return 0;
                }
                used[c] = true;
                cols.push(c);
                let k = go(cols, used, n);
                cols.pop();
                used[c] = false;
                k
            })
            .sum()
    }
    go(&mut Vec::new(), &mut vec![false; n], n)
}

fn c7_nqueens() -> Check {
    let start = Instant::now();
    for n in 1..=10u32 {
        let got = nqueens_count(n).map_err(|e| e.to_string())?;
        let want = permutations_oracle(n as usize);
        ensure(got == want, format!("n={n}: {got} != {want}"))?;
    }
    ensure(nqueens_count(2) == Ok(0) && nqueens_count(3) == Ok(0), "n=2 or n=3 not zero")?;
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(10), format!("took {elapsed:?}"))?;
    Ok(format!("n = 1..10 match in {elapsed:.1?}"))
}

fn c8_rsa() -> Check {
    let mut count = 0;
    for (bits, seeds) in [(512u32, 0..200u64), (2048, 0..5)] {
        for seed in seeds {
            let (public, private) = rsa_keygen(bits, seed).map_err(|e| e.to_string())?;
            let m: Vec<u8> = (0..(seed as usize % 40) + 1).map(|i| (i as u64 * 37 + seed) as u8).collect();
            let c = rsa_encrypt(&m, &public, seed ^ 0x5eed).map_err(|e| e.to_string())?;
            ensure(c.len() == bits as usize / 8, format!("{bits}-bit ciphertext is {} B", c.len()))?;
            if bits == 2048 {
                ensure(c.iter().map(|b| format!("{b:02x}")).collect::<String>().len() == 512, "hex ciphertext is not 512 B")?;
            }
            ensure(rsa_decrypt(&c, &private).map_err(|e| e.to_string())? == m, format!("{bits}-bit seed {seed}"))?;
            count += 1;
        }
    }
    Ok(format!("{count} identities, 2048-bit ciphertext 256 B raw, 512 B framed"))
}

fn c9_offload_trends() -> Check {
    let nq = offload_bench(&scenario("nqueens.toml"), Overrides::default()).map_err(|e| e.to_string())?;
    let crossover = nq.rows.iter().find(|r| r.metric == "crossover").map(|r| r.size);
    ensure(crossover == Some(12), format!("crossover {crossover:?}"))?;
    let r15 = value(&nq, "energy_ratio", 15)?;
    ensure(r15 >= 10.0, format!("N=15 energy ratio {r15:.2}"))?;
    let mut worst: f64 = 0.0;
    for n in 13..=15 {
        let q = value(&nq, "offloaded.wall_time_ms", n)? / value(&nq, "local_offloadee.wall_time_ms", n)?;
        ensure(q <= 1.3, format!("N={n} offloaded/offloadee-local {q:.3}"))?;
        worst = worst.max(q);
    }
    let rsa = offload_bench(&scenario("rsa.toml"), Overrides::default()).map_err(|e| e.to_string())?;
    let e = value(&rsa, "offloaded.main_energy_mj", 2048)? / value(&rsa, "local_main.energy_mj", 2048)?;
    ensure(e < 0.20, format!("RSA energy fraction {e:.3}"))?;
    let t = value(&rsa, "time_ratio", 2048)?;
    ensure(t <= 0.6, format!("RSA time ratio {t:.3}"))?;
    Ok(format!(
        "crossover N=12, N=15 ratio {r15:.2}, N>=13 time <= {worst:.3}x offloadee, RSA energy {:.1}% time {t:.3}x",
        e * 100.0
    ))
}

fn fail<T: std::fmt::Debug>(what: &str, e: proptest::test_runner::TestError<T>) -> String {
    format!("{what}: {e}")
}

fn c10_properties() -> Check {
    let mut runner = TestRunner::new(Config {
        cases: 48,
        failure_persistence: None,
        ..Config::default()
    });

    runner
        .run(&vec(any::<u8>(), 0..=204_800), |m| {
            prop_assert_eq!(assemble(&fragment(&m).unwrap()), m);
            Ok(())
        })
        .map_err(|e| fail("reassembly", e))?;

    runner
        .run(&(0usize..=99, vec(any::<u8>(), 3..=14)), |(i, base)| {
            let idx = ChunkIndex::new(i).unwrap();
            prop_assert_eq!(decode_aid(&encode_aid(&base, idx).unwrap()).unwrap(), idx);
            Ok(())
        })
        .map_err(|e| fail("AID codec", e))?;
    let aids: std::collections::HashSet<Vec<u8>> =
        (0..=99).map(|i| encode_aid(DEFAULT_BASE_AID, ChunkIndex::new(i).unwrap()).unwrap()).collect();
    ensure(aids.len() == 100, "AIDs collide")?;

    runner
        .run(&(vec(any::<u8>(), 1..=30_000), any::<bool>()), |(m, ed)| {
            let mut sender = MessageStorage::new();
            let n = sender.load_outgoing(&m).unwrap();
            let mut receiver = MessageStorage::new();
            let cfg = if ed { ProtocolConfig::default() } else { ProtocolConfig::disabling_enabling(700) };
            transfer_message(&cfg, &Simulation::deterministic(), &sender, &mut receiver, n).unwrap();
            prop_assert_eq!(receiver.received_message(n).unwrap(), m);
            Ok(())
        })
        .map_err(|e| fail("transfer integrity", e))?;

    let mut small = TestRunner::new(Config {
        cases: 6,
        failure_persistence: None,
        ..Config::default()
    });
    small
        .run(&(any::<u64>(), 0u32..3, 0u32..60, 0u32..40), |(seed, which, lo, step)| {
            let sim = Simulation::stochastic(ReadinessModel::calibrated(), seed);
            let cfg = |d: u32| match which {
                0 => ProtocolConfig::disabling_enabling(670 + d),
                1 => ProtocolConfig::enabling_disabling(250 + d, 1000),
                _ => ProtocolConfig::enabling_disabling(310, 50 + d),
            };
            let a = success_rate(&cfg(lo), &sim, 50, 2048, 150).unwrap();
            let b = success_rate(&cfg(lo + step), &sim, 50, 2048, 150).unwrap();
            prop_assert!(a <= b);
            Ok(())
        })
        .map_err(|e| fail("success-rate monotonicity", e))?;

    let s = scenario("experiment.toml");
    let o = Overrides {
        seed: Some(99),
        repeats: Some(3),
        trace: false,
    };
    let bytes = |fmt| simulate(&s, o).and_then(|r| r.to_string(fmt)).map_err(|e| e.to_string());
    for fmt in [Format::Csv, Format::Json] {
        ensure(bytes(fmt)? == bytes(fmt)?, "report bytes differ between identical runs")?;
    }
    Ok("reassembly, AID bijection, transfer integrity, monotonicity, report determinism".into())
}

fn main() {
    let criteria: [(&str, Criterion); 10] = [
        ("timing algebra", c1_timing_algebra),
        ("disabling-enabling sweep over t", c2_sweep_t),
        ("enabling-disabling sweeps over t1 and t2", c3_sweep_t1_t2),
        ("calibration selection", c4_calibration),
        ("protocol comparison", c5_protocol_comparison),
        ("bandwidth envelope", c6_bandwidth),
        ("N Queens oracle", c7_nqueens),
        ("RSA integrity", c8_rsa),
        ("offload trends", c9_offload_trends),
        ("property suites", c10_properties),
    ];
    let mut failed = Vec::new();
    for (i, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("criterion {}: PASS {name}: {detail}", i + 1),
            Err(why) => {
                println!("criterion {}: FAIL {name}: {why}", i + 1);
                failed.push(i + 1);
            }
        }
    }
    if !failed.is_empty() {
        eprintln!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}

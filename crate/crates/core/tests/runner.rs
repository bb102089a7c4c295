use std::collections::BTreeSet;
use std::path::PathBuf;

use lasercom::pat::Mode;
use lasercom::runner::{
    budget_at, csv_header, load_scenario, parse_scenario, run_scenario, write_csv, LinkStatus, RunOutput,
    Scenario,
};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("scenarios")
        .join(name)
}

fn load(name: &str) -> Scenario {
    load_scenario(&fixture(name)).unwrap()
}

const FIXTURES: [&str; 6] = [
    "geo_ground.toml",
    "leo_ground.toml",
    "leo_ground_pat.toml",
    "leo_geo.toml",
    "haps_ground.toml",
    "drone_ground.toml",
];

fn csv_bytes(out: &RunOutput) -> Vec<u8> {
    let mut buf = Vec::new();
    write_csv(out, &mut buf).unwrap();
    buf
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * (1.0 + b.abs())
}

/// Every aggregate in the summary, recomputed from the emitted CSV alone.
#[test]
fn summary_matches_csv_recomputation() {
    for name in FIXTURES {
        let s = load(name);
        let out = run_scenario(&s).unwrap();
        let bytes = csv_bytes(&out);
        let mut rdr = csv::Reader::from_reader(bytes.as_slice());
        let header: Vec<String> = rdr.headers().unwrap().iter().map(String::from).collect();
        assert_eq!(header, csv_header(out.has_edfa, out.has_pat), "{name}");
        let col = |n: &str| header.iter().position(|h| h == n);
        let rows: Vec<csv::StringRecord> = rdr.records().map(Result::unwrap).collect();
        let num = |r: &csv::StringRecord, n: &str| -> Option<f64> {
            col(n).and_then(|i| {
                let f = &r[i];
                (!f.is_empty()).then(|| f.parse().unwrap())
            })
        };
        let sum = &out.summary;
        assert_eq!(sum.steps, rows.len());

        let mut margins: Vec<f64> = rows.iter().filter_map(|r| num(r, "margin_db")).collect();
        margins.sort_by(f64::total_cmp);
        let avail = margins.len() as f64 / rows.len() as f64;
        assert!(close(sum.availability, avail), "{name}: availability");
        assert!((0.0..=1.0).contains(&sum.availability));
        match &sum.margin_db {
            Some(m) => {
                let n = margins.len();
                let med = if n % 2 == 1 {
                    margins[n / 2]
                } else {
                    (margins[n / 2 - 1] + margins[n / 2]) / 2.0
                };
                assert!(
                    close(m.min, margins[0]) && close(m.max, margins[n - 1]) && close(m.median, med),
                    "{name}"
                );
                assert!(m.min <= m.median && m.median <= m.max);
            }
            None => assert!(margins.is_empty()),
        }

        let edfa_min = rows.iter().filter_map(|r| num(r, "edfa_w")).reduce(f64::min);
        match (sum.edfa_min_w, edfa_min) {
            (Some(a), Some(b)) => assert!(close(a, b)),
            (None, None) => {}
            other => panic!("{name}: edfa {other:?}"),
        }

        if out.has_pat {
            let mi = col("mode").unwrap();
            let t0 = s.config.start_s;
            let linked = rows
                .iter()
                .find(|r| &r[mi] == "LINKED")
                .map(|r| r[0].parse::<f64>().unwrap() - t0);
            assert_eq!(sum.time_to_linked_s.is_some(), linked.is_some());
            if let (Some(a), Some(b)) = (sum.time_to_linked_s, linked) {
                assert!(close(a, b));
            }
            let fine: Vec<f64> = rows
                .iter()
                .filter(|r| matches!(&r[mi], "FINE_TRACK" | "LINKED"))
                .map(|r| num(r, "residual_rad").unwrap())
                .collect();
            let rms = (fine.iter().map(|x| x * x).sum::<f64>() / fine.len() as f64).sqrt();
            assert!(close(sum.residual_rms_rad.unwrap(), rms), "{name}: residual rms");
        } else {
            assert!(sum.time_to_linked_s.is_none() && sum.residual_rms_rad.is_none());
        }
    }
}

#[test]
fn feature_columns_are_gated() {
    let geo = run_scenario(&load("geo_ground.toml")).unwrap();
    assert_eq!(
        csv_header(geo.has_edfa, geo.has_pat),
        [
            "t_s",
            "range_m",
            "elevation_rad",
            "alpha_rad",
            "rx_dbm",
            "margin_db"
        ]
    );
    assert!(geo.records.iter().all(|r| r.pat.is_none() && r.edfa_w.is_none()));
    let pat = run_scenario(&load("leo_ground_pat.toml")).unwrap();
    assert_eq!(
        csv_header(pat.has_edfa, pat.has_pat),
        [
            "t_s",
            "range_m",
            "elevation_rad",
            "alpha_rad",
            "edfa_w",
            "residual_rad",
            "pointing_loss_db",
            "rx_dbm",
            "margin_db",
            "mode"
        ]
    );
}

#[test]
fn provenance_lists_each_default_once() {
    for name in FIXTURES {
        let s = load(name);
        let keys: Vec<_> = s.provenance.iter().map(|p| p.key.clone()).collect();
        let unique: BTreeSet<_> = keys.iter().collect();
        assert_eq!(unique.len(), keys.len(), "{name}");
        let out = run_scenario(&s).unwrap();
        let json: serde_json::Value = serde_json::to_value(&out.summary).unwrap();
        assert_eq!(json["provenance"].as_array().unwrap().len(), keys.len());
    }
    let geo = load("geo_ground.toml");
    let keys: Vec<_> = geo.provenance.iter().map(|p| p.key.as_str()).collect();
    assert!(keys.contains(&"terminal_a.aperture_m"));
    assert!(keys.contains(&"receiver.photons_per_bit"));
    assert!(!keys.contains(&"source.power_w"));
    assert!(!keys.contains(&"platform_b.latitude_deg"));
}

#[test]
fn leo_day_passes_are_short_and_bound_availability() {
    let s = load("leo_ground.toml");
    let out = run_scenario(&s).unwrap();
    let passes = out.summary.passes.as_ref().unwrap();
    assert!(passes.len() >= 3, "{passes:?}");
    for p in passes {
        assert!(p.duration_s > 0.0 && p.duration_s < 600.0, "{p:?}");
    }
    for r in &out.records {
        let inside = passes
            .iter()
            .any(|p| r.t_s >= p.rise_s - 1e-3 && r.t_s <= p.set_s + 1e-3);
        assert_eq!(r.status == LinkStatus::Available, inside, "t = {}", r.t_s);
    }
}

#[test]
fn runs_are_deterministic() {
    for name in ["leo_ground_pat.toml", "haps_ground.toml"] {
        let s = load(name);
        let a = csv_bytes(&run_scenario(&s).unwrap());
        let b = csv_bytes(&run_scenario(&s).unwrap());
        assert_eq!(a, b, "{name}");
        let mut other = s.clone();
        other.config.seed += 1;
        assert_ne!(
            a,
            csv_bytes(&run_scenario(&other).unwrap()),
            "{name}: seed ignored"
        );
    }
}

#[test]
fn pat_fixture_links_and_tracks() {
    let out = run_scenario(&load("leo_ground_pat.toml")).unwrap();
    let t = out.summary.time_to_linked_s.expect("links");
    assert!(t < 60.0);
    assert!(out.summary.residual_rms_rad.unwrap() < 5e-6);
    for r in &out.records {
        let p = r.pat.unwrap();
        if r.status == LinkStatus::Unpointed {
            assert!(!matches!(p.mode, Mode::FineTrack | Mode::Linked));
        }
        if r.status == LinkStatus::Available {
            assert!(matches!(p.mode, Mode::FineTrack | Mode::Linked));
        }
    }
}

#[test]
fn geo_steps_match_single_instant_budget() {
    let s = load("geo_ground.toml");
    let out = run_scenario(&s).unwrap();
    for r in out.records.iter().step_by(10) {
        let (_, o) = budget_at(&s.config, r.t_s).unwrap();
        assert_eq!(o.report().unwrap().margin_db, r.margin_db.unwrap());
    }
}

#[test]
fn runtime_error_names_module_and_step() {
    // The drone lands on the ground terminal at t = 20 s.
    let s = parse_scenario(
        "[scenario]\nkind = \"DRONE_GROUND\"\nduration_s = 40.0\nstep_s = 1.0\n\
         [platform_a]\nkind = \"DRONE\"\naltitude_m = 0.0\n\
         [[platform_a.waypoints]]\nt_s = 0.0\nlatitude_deg = 35.71\nlongitude_deg = 139.5\n\
         [[platform_a.waypoints]]\nt_s = 20.0\nlatitude_deg = 35.7\nlongitude_deg = 139.5\n\
         [platform_b]\nkind = \"GROUND_SITE\"\nlatitude_deg = 35.7\nlongitude_deg = 139.5\n",
    )
    .unwrap();
    let err = run_scenario(&s).unwrap_err();
    assert_eq!(err.module, "geometry");
    assert_eq!(err.step, Some(20));
    assert!(err.to_string().contains("step 20"));
}

//! Public-API run of the whole chain on the calcium preset: model curves,
//! photon streams, beam splitter, time-tag file and correlator.

use hom_core::config::Preset;
use hom_core::correlator::{correlate_tags, HistogramConfig, Mode};
use hom_core::detection::DetectorModel;
use hom_core::dynamics::{collection_operator, g1_g2, steady_state};
use hom_core::interference::hom_g2_tot;
use hom_core::ion_model::Liouvillian;
use hom_core::montecarlo::{mcwf_photon_stream, route_and_interfere, times, Origin, RouteConfig};
use hom_core::timetag::{read_timetags, write_timetags, RunMetadata, TimeTags};

#[test]
fn model_and_simulation_agree_at_zero_lag() {
    let doc = Preset::Calcium.document();
    let cfg = doc.system().unwrap();
    let weights = doc.detection.collection_weights;
    let l = Liouvillian::from_config(&cfg).unwrap();
    let rho = steady_state(&l).unwrap();
    let sigma = collection_operator(&cfg, &weights).unwrap();
    let (g1, g2) = g1_g2(&l, &rho, &sigma, &doc.tau_grid()).unwrap();

    let orth = hom_g2_tot(&g1, &g2, 90.0).unwrap();
    assert!((orth.real().unwrap()[0] - 0.5).abs() < 1e-9);
    assert!(hom_g2_tot(&g1, &g2, 0.0).unwrap().real().unwrap()[0] < 1e-9);

    let traj = doc.trajectory().unwrap().with_duration(0.05).unwrap();
    let s1 = mcwf_photon_stream(&cfg, &weights, &traj, Origin::Ion1).unwrap();
    let s2 = mcwf_photon_stream(&cfg, &weights, &traj, Origin::Ion2).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let hc = HistogramConfig::new(1.0, 50.0, Mode::Multistop).unwrap();

    let mut zero = Vec::new();
    for phi in [0.0, 90.0] {
        let routed = route_and_interfere(
            &s1,
            &s2,
            &g1,
            &DetectorModel::ideal(),
            &RouteConfig {
                phi_deg: phi,
                seed: traj.seed,
                duration_ps: traj.duration_ps(),
                background_rate: 0.0,
            },
        )
        .unwrap();
        let tags = TimeTags {
            i3: times(&routed.i3),
            i4: times(&routed.i4),
        };
        let meta = RunMetadata {
            duration_s: traj.duration_s,
            seed: traj.seed,
            config_hash: doc.hash(),
            phi_deg: Some(phi),
        };
        let path = dir.path().join(format!("phi{phi}.htag"));
        write_timetags(&path, &tags, Some(&meta)).unwrap();
        let (back, side) = read_timetags(&path).unwrap();
        assert!(back == tags);
        assert_eq!(side.unwrap(), meta);

        let h = correlate_tags(&back, &hc, traj.duration_s).unwrap();
        let z = h.zero_bin();
        zero.push((h.g2[z], h.stderr[z]));
    }
    // a few hundred coincidences per bin: loose statistical bounds
    let (par, orth) = (zero[0], zero[1]);
    assert!((orth.0 - 0.5).abs() < 4.0 * orth.1, "{orth:?}");
    assert!(par.0 < 0.2, "{par:?}");
}

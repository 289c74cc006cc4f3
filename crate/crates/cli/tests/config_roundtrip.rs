use bicfreeze_cli::config::{LaplacianChoice, LeakChoice};
use bicfreeze_cli::{ScenarioConfig, StateSelection};
use proptest::prelude::*;

fn base() -> ScenarioConfig {
    ScenarioConfig::from_toml("[model]\nsteps = [{ k = 1.0, omega = 1.0 }]\n[freeze]\nt_freeze = 0.2\n").unwrap()
}

prop_compose! {
    fn configs()(
        ks in prop::collection::vec(0.1f64..3.0, 1..4),
        omegas in prop::collection::vec(0.01f64..10.0, 3),
        c1 in 0.1f64..5.0,
        c2 in -3.0f64..3.0,
        t_freeze in 0.01f64..2.0,
        dt in 1e-5f64..1e-2,
        numerov in any::<bool>(),
        truncate in any::<bool>(),
        times in prop::collection::vec(0.0f64..3.0, 0..5),
        scattering in prop::option::of(10.0f64..20.0),
    ) -> ScenarioConfig {
        let mut cfg = base();
        let mut eps: Vec<f64> = Vec::new();
        cfg.model.steps.clear();
        for (i, k) in ks.into_iter().enumerate() {
            if eps.iter().all(|e| (e - k * k).abs() > 1e-6) {
                eps.push(k * k);
                let mut step = base().model.steps[0];
                step.k = k;
                step.omega = omegas[i];
                cfg.model.steps.push(step);
            }
        }
        cfg.point_map.c1 = c1;
        cfg.point_map.c2 = c2;
        cfg.freeze.t_freeze = t_freeze;
        cfg.propagator.dt = dt;
        cfg.propagator.laplacian = if numerov { LaplacianChoice::Numerov } else { LaplacianChoice::ThreePoint };
        cfg.propagator.leak_policy = if truncate { LeakChoice::Truncate } else { LeakChoice::Abort };
        cfg.output.times = times;
        cfg.states = vec![StateSelection::Bic { step: 0 }];
        if let Some(energy) = scattering {
            cfg.states.push(StateSelection::Scattering { energy });
            cfg.propagator.state = Some(StateSelection::Scattering { energy });
        }
        cfg
    }
}

proptest! {
    #[test]
    fn serialized_config_parses_back(cfg in configs()) {
        cfg.validate().unwrap();
        let text = cfg.to_toml();
        prop_assert_eq!(ScenarioConfig::from_toml(&text).unwrap(), cfg);
    }
}

#[test]
fn scenario_files_parse() {
    for name in ["single_bic.toml", "two_bic.toml"] {
        let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name);
        let cfg = ScenarioConfig::load(&path).unwrap();
        assert_eq!(ScenarioConfig::from_toml(&cfg.to_toml()).unwrap(), cfg);
    }
}

use std::path::PathBuf;

use cgnn_core::config::ConfigDocument;
use cgnn_core::experiments::{static_kernel, BuiltinName, StaticKernelParams};
use cgnn_core::model::build_model;

fn config_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

#[test]
fn shipped_builtins_match_their_constructors() {
    for b in BuiltinName::ALL {
        let path = config_dir().join(format!("{b}.toml"));
        let doc = ConfigDocument::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        assert_eq!(build_model(&doc).unwrap(), b.spec(), "{b}");
    }
}

#[test]
fn every_shipped_config_round_trips() {
    let mut seen = 0;
    for entry in std::fs::read_dir(config_dir()).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_none_or(|e| e != "toml") {
            continue;
        }
        seen += 1;
        let doc = ConfigDocument::load(&path).unwrap();
        let again = ConfigDocument::from_toml(&doc.to_toml().unwrap()).unwrap();
        assert_eq!(again, doc, "{}", path.display());
        let Ok(spec) = build_model(&doc) else {
            assert!(path.ends_with("bad_kernel_mass.toml"), "{}", path.display());
            continue;
        };
        assert_eq!(build_model(&spec.to_document()).unwrap(), spec, "{}", path.display());
    }
    assert!(seen >= 9);
}

#[test]
fn static_kernel_refuses_strong_coupling() {
    for amplitude in [0.5, 0.8] {
        let p = StaticKernelParams {
            amplitude,
            ..StaticKernelParams::default()
        };
        assert!(static_kernel(&p).is_err(), "{amplitude}");
    }
    assert!(static_kernel(&StaticKernelParams::default()).is_ok());
}

mod common;

use common::*;
use mlso_core::config::{parse_config, Endpoints};
use mlso_core::lifecycle::IntentState;

#[tokio::test]
async fn config_override_sets_the_install_delay() {
    let mut config = parse_config(
        "[simnet]\ntime_scale = 100.0\njitter = 0.0\n[simnet.profiles.macsec_ethernet]\ninstall_mean = 2.6\n",
    )
    .unwrap();
    config.endpoints = Endpoints::ephemeral();
    let (stack, client) = start(config).await;
    let mut observed = Vec::new();
    for _ in 0..3 {
        let rec = install(&client, &sample()).await;
        assert_eq!(rec.state, IntentState::Installed);
        observed.push(rec.install_duration_us().unwrap());
        withdraw(&client, &rec).await;
    }
    // 2.6 s at 1/100 is 26 ms; loopback HTTP adds a little on top
    let best = *observed.iter().min().unwrap();
    assert!((26_000..32_000).contains(&best), "{observed:?}");
    stack.stop().await;
}

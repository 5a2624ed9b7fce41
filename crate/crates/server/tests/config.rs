use framecue::providers::ProviderMode;
use framecue_server::{bind, build_state, ConfigError, ServeError, ServerConfig};

fn env(pairs: &[(&str, &str)]) -> Vec<(String, String)> {
    pairs
        .iter()
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect()
}

#[test]
fn toml_defaults_and_env_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("server.toml");
    std::fs::create_dir(dir.path().join("bundles")).unwrap();
    std::fs::write(
        &path,
        "bundle_dir = \"bundles\"\n[provider]\nmode = \"oracle\"\n",
    )
    .unwrap();
    let cfg = ServerConfig::load(&path).unwrap();
    assert_eq!(cfg.bind, "127.0.0.1:8080");
    assert_eq!(cfg.workers, 4);
    assert_eq!(cfg.bundle_dir, dir.path().join("bundles"));
    assert_eq!(cfg.provider.mode, ProviderMode::Oracle);
    assert_eq!(cfg.auth_token, None);

    let mut cfg = cfg;
    cfg.apply_env(env(&[
        ("FRAMECUE_BIND", "0.0.0.0:9000"),
        ("FRAMECUE_WORKERS", "2"),
        ("FRAMECUE_AUTH_TOKEN", "t"),
        ("FRAMECUE_PROVIDER_MODE", "replay"),
        ("FRAMECUE_REPLAY_CACHE", "/tmp/c.jsonl"),
        ("UNRELATED", "x"),
    ]))
    .unwrap();
    assert_eq!(
        (cfg.bind.as_str(), cfg.workers, cfg.auth_token.as_deref()),
        ("0.0.0.0:9000", 2, Some("t"))
    );
    assert_eq!(cfg.provider.mode, ProviderMode::Replay);

    assert!(matches!(
        cfg.apply_env(env(&[("FRAMECUE_WORKERS", "many")])),
        Err(ConfigError::Env { .. })
    ));
    assert!(matches!(
        cfg.apply_env(env(&[("FRAMECUE_PROVIDER_MODE", "magic")])),
        Err(ConfigError::Env { .. })
    ));
}

#[test]
fn bad_configs_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    assert!(matches!(
        ServerConfig::from_toml("bundle_dir = 3"),
        Err(ConfigError::Parse(_))
    ));
    assert!(matches!(
        ServerConfig::from_toml("bundle_dir = \"x\"\nport = 1\n[provider]\nmode = \"oracle\"\n"),
        Err(ConfigError::Parse(_))
    ));

    let mut cfg = ServerConfig::offline(dir.path());
    cfg.workers = 0;
    assert!(cfg.validate().is_err());
    let mut cfg = ServerConfig::offline(dir.path().join("absent"));
    assert!(cfg.validate().is_err());
    cfg.bundle_dir = dir.path().into();
    cfg.bind = "localhost".into();
    assert!(cfg.validate().is_err());
}

#[test]
fn bad_live_url_fails_at_startup() {
    let dir = tempfile::tempdir().unwrap();
    let toml = format!(
        "bundle_dir = {:?}\n[provider]\nmode = \"live\"\n[provider.live]\nchat_url = \"not a url\"\nchat_model = \"m\"\nembed_url = \"https://example.invalid/embed\"\nembed_model = \"e\"\n",
        dir.path()
    );
    let cfg = ServerConfig::from_toml(&toml).unwrap();
    let err = build_state(cfg).err().expect("startup must fail");
    assert!(matches!(err, ServeError::Config(_)), "{err}");
    assert!(err.to_string().contains("chat_url"), "{err}");
}

#[test]
fn replay_without_cache_fails_at_startup() {
    let dir = tempfile::tempdir().unwrap();
    let toml = format!(
        "bundle_dir = {:?}\n[provider]\nmode = \"replay\"\n",
        dir.path()
    );
    assert!(build_state(ServerConfig::from_toml(&toml).unwrap()).is_err());
}

#[tokio::test]
async fn busy_port_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let taken = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
    let mut cfg = ServerConfig::offline(dir.path());
    cfg.bind = taken.local_addr().unwrap().to_string();
    match bind(&cfg).await {
        Err(ServeError::Bind { addr, .. }) => assert_eq!(addr, cfg.bind),
        other => panic!("expected a bind error, got {other:?}"),
    }
}

#[tokio::test]
async fn serves_health_over_tcp() {
    let dir = tempfile::tempdir().unwrap();
    let probe = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = probe.local_addr().unwrap();
    drop(probe);
    let mut cfg = ServerConfig::offline(dir.path());
    cfg.bind = addr.to_string();
    let (tx, rx) = tokio::sync::oneshot::channel::<()>();
    let server = tokio::spawn(framecue_server::serve_with_shutdown(cfg, async {
        let _ = rx.await;
    }));
    let mut body = String::new();
    for _ in 0..50 {
        if let Ok(mut s) = tokio::net::TcpStream::connect(addr).await {
            use tokio::io::{AsyncReadExt, AsyncWriteExt};
            s.write_all(b"GET /health HTTP/1.1\r\nHost: x\r\nConnection: close\r\n\r\n")
                .await
                .unwrap();
            s.read_to_string(&mut body).await.unwrap();
            break;
        }
        tokio::time::sleep(std::time::Duration::from_millis(20)).await;
    }
    assert!(body.starts_with("HTTP/1.1 200"), "{body}");
    assert!(body.contains("\"status\":\"ok\""));
    tx.send(()).unwrap();
    server.await.unwrap().unwrap();
}

use std::io::Write;
use std::net::TcpStream;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::thread;
use std::time::{Duration, Instant};

use rwhil_bus::frame::HEADER_LEN;
use rwhil_bus::{encode_frame, Broker, BrokerEvent, BusClient, BusError, Envelope, Hello, PeriodStats, Role, Topic};

const WAIT: Duration = Duration::from_secs(5);

/// Runs the broker's pump loop on a thread until `stop` is set; returns the events seen.
fn pump_in_background(mut b: Broker, stop: Arc<AtomicBool>) -> thread::JoinHandle<(Broker, Vec<BrokerEvent>)> {
    thread::spawn(move || {
        let mut seen = Vec::new();
        while !stop.load(Ordering::Relaxed) {
            match b.pump(Duration::from_millis(20)) {
                Ok(ev) => seen.push(ev),
                Err(BusError::Timeout) => {}
                Err(e) => panic!("{e}"),
            }
        }
        (b, seen)
    })
}

#[test]
fn fan_out_preserves_publisher_order() {
    let mut broker = Broker::bind("127.0.0.1:0").unwrap();
    let addr = broker.local_addr().unwrap();
    let h = thread::spawn(move || {
        let pubr = BusClient::connect(addr, Role::Rw, &[]).unwrap();
        let a = BusClient::connect(addr, Role::Ctl, &[Topic::RwState]).unwrap();
        let b = BusClient::connect(addr, Role::Sim, &[Topic::RwState, Topic::EstState]).unwrap();
        (pubr, a, b)
    });
    broker.accept(3, WAIT).unwrap();
    let (mut pubr, mut a, mut b) = h.join().unwrap();
    let stop = Arc::new(AtomicBool::new(false));
    let bg = pump_in_background(broker, stop.clone());

    for k in 0..500u64 {
        pubr.publish(Topic::RwState, k * 50_000_000, &k.to_le_bytes()).unwrap();
    }
    for sub in [&mut a, &mut b] {
        for k in 0..500u64 {
            let env = sub.recv_timeout(WAIT).unwrap();
            assert_eq!(env.topic, Topic::RwState);
            assert_eq!(env.seq, k);
            assert_eq!(env.payload, k.to_le_bytes());
        }
        let s = sub.stats();
        assert_eq!((s.received, s.dropped, s.reordered, s.crc_errors), (500, 0, 0, 0));
    }
    stop.store(true, Ordering::Relaxed);
    let (broker, _) = bg.join().unwrap();
    assert_eq!(broker.forwarded(), 1000);
    assert_eq!(broker.crc_errors(), 0);
}

#[test]
fn corrupt_frame_is_dropped_and_counted() {
    let mut broker = Broker::bind("127.0.0.1:0").unwrap();
    let addr = broker.local_addr().unwrap();
    let h = thread::spawn(move || {
        let mut raw = TcpStream::connect(addr).unwrap();
        let hello = Hello { role: Role::Rw, subscriptions: vec![] };
        let env = Envelope { topic: Topic::Hello, seq: 0, timestamp_ns: 0, payload: hello.encode() };
        raw.write_all(&encode_frame(&env).unwrap()).unwrap();
        let sub = BusClient::connect(addr, Role::Ctl, &[Topic::RwState]).unwrap();
        (raw, sub)
    });
    broker.accept(2, WAIT).unwrap();
    let (mut raw, mut sub) = h.join().unwrap();
    for seq in 0..3u64 {
        let env = Envelope { topic: Topic::RwState, seq, timestamp_ns: seq, payload: vec![seq as u8; 16] };
        let mut bytes = encode_frame(&env).unwrap();
        if seq == 1 {
            bytes[HEADER_LEN + 10] ^= 0x01;
        }
        raw.write_all(&bytes).unwrap();
    }
    for want in [0u64, 2] {
        match broker.pump(WAIT).unwrap() {
            BrokerEvent::Frame { env, .. } => assert_eq!(env.seq, want),
            other => panic!("{other:?}"),
        }
    }
    assert_eq!(broker.crc_errors(), 1);
    assert_eq!(sub.recv_timeout(WAIT).unwrap().seq, 0);
    assert_eq!(sub.recv_timeout(WAIT).unwrap().seq, 2);
    assert_eq!(sub.stats().dropped, 1);
}

#[test]
fn dropped_connection_surfaces_node_down_quickly() {
    let mut broker = Broker::bind("127.0.0.1:0").unwrap();
    let addr = broker.local_addr().unwrap();
    let h = thread::spawn(move || BusClient::connect(addr, Role::Rw, &[]).unwrap());
    broker.accept(1, WAIT).unwrap();
    let client = h.join().unwrap();
    let t0 = Instant::now();
    client.close();
    match broker.pump(WAIT).unwrap() {
        BrokerEvent::NodeDown { role, .. } => assert_eq!(role, Role::Rw),
        other => panic!("{other:?}"),
    }
    assert!(t0.elapsed() < Duration::from_secs(1));
    assert!(matches!(broker.send_to(Role::Rw, Topic::Clock, 0, &[]), Err(BusError::NodeDown(Role::Rw))));
}

#[test]
fn loopback_latency_p99_under_5ms() {
    let mut broker = Broker::bind("127.0.0.1:0").unwrap();
    let addr = broker.local_addr().unwrap();
    let h = thread::spawn(move || {
        let p = BusClient::connect(addr, Role::Sim, &[]).unwrap();
        let s = BusClient::connect(addr, Role::Ctl, &[Topic::EstState]).unwrap();
        (p, s)
    });
    broker.accept(2, WAIT).unwrap();
    let (mut p, mut s) = h.join().unwrap();
    let stop = Arc::new(AtomicBool::new(false));
    let bg = pump_in_background(broker, stop.clone());

    let payload = vec![0u8; 128];
    let mut lat = Vec::new();
    for k in 0..2000u64 {
        let t0 = Instant::now();
        p.publish(Topic::EstState, k, &payload).unwrap();
        s.recv_timeout(WAIT).unwrap();
        lat.push(t0.elapsed().as_secs_f64());
    }
    stop.store(true, Ordering::Relaxed);
    bg.join().unwrap();
    let st = PeriodStats::of(&lat).unwrap();
    assert!(st.p99 < 5e-3, "p99 {:.3} ms", st.p99 * 1e3);
}

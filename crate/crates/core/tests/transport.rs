use mdswpir::protocol::{QueryFrame, TcpCluster, Transport};
use mdswpir::scheme::{SchemeInstance, SchemeKind};
use mdswpir::sim::{run_retrieval, run_retrieval_with, Deployment};
use mdswpir::Error;

#[test]
fn tcp_and_in_process_transcripts_agree() {
    for kind in SchemeKind::ALL {
        let scheme = SchemeInstance::new(kind, 2, 5, 3).unwrap();
        let size = scheme.alphabet().len();
        let dep = Deployment::random(scheme, None, 31).unwrap();
        let cluster = TcpCluster::spawn(dep.servers()).unwrap();
        let mut tcp = cluster.transport();
        for s in (0..size).step_by(7) {
            for t in 1..=5 {
                let a = run_retrieval(&dep, 1 + s % 2, s, t).unwrap();
                let b = run_retrieval_with(&dep, &mut tcp, 1 + s % 2, s, t).unwrap();
                assert!(a.success);
                assert_eq!(a, b);
            }
        }
    }
}

#[test]
fn misaddressed_query_is_a_protocol_error() {
    let scheme = SchemeInstance::new(SchemeKind::Ztsl, 2, 3, 2).unwrap();
    let dep = Deployment::random(scheme.clone(), None, 2).unwrap();
    let servers = dep.servers();
    let q = scheme.query(1, &scheme.alphabet().members()[0], 1).unwrap();
    let frame = QueryFrame::new(SchemeKind::Ztsl, 1, q.clone()).encode().unwrap();
    assert!(matches!(servers[1].handle(&frame), Err(Error::Protocol(_))));
    let wrong_kind = QueryFrame::new(SchemeKind::Olr, 1, q).encode().unwrap();
    assert!(matches!(servers[0].handle(&wrong_kind), Err(Error::Protocol(_))));
    // The in-process transport routes by the server byte and rejects unknown servers.
    let mut transport = dep.in_process();
    let mut bad = frame.clone();
    bad[6] = 9;
    assert!(transport.exchange(&[bad]).is_err());
}

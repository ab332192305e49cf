//! Wire format and transports between the client and the storage servers.
//!
//! Every message is a 4-byte big-endian payload length followed by the payload.
//!
//! ```text
//! query  payload: [version:1][kind:1][server:1][k*M query bytes, row-major]
//! answer payload: [server:1][len:1][len x 2-byte big-endian field elements]
//! ```

use std::io::{Read, Write};
use std::net::{SocketAddr, TcpListener, TcpStream};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::thread::JoinHandle;

use crate::error::{Error, Result};
use crate::field::{Fe, PrimeField};
use crate::scheme::{answer, QueryMatrix, SchemeKind};
use crate::storage::{EffectiveParams, EncodedStorage, ServerColumn};

pub const PROTOCOL_VERSION: u8 = 1;

/// Largest payload a reader accepts.
pub const MAX_PAYLOAD: usize = 1 << 20;

fn frame(payload: Vec<u8>) -> Vec<u8> {
    let mut out = Vec::with_capacity(4 + payload.len());
    out.extend_from_slice(&(payload.len() as u32).to_be_bytes());
    out.extend(payload);
    out
}

/// Splits a length-prefixed message into its payload, rejecting truncation
/// and trailing bytes.
pub fn unframe(bytes: &[u8]) -> Result<&[u8]> {
    if bytes.len() < 4 {
        return Err(Error::Protocol(format!("frame of {} bytes has no length prefix", bytes.len())));
    }
    let len = u32::from_be_bytes([bytes[0], bytes[1], bytes[2], bytes[3]]) as usize;
    if bytes.len() - 4 != len {
        return Err(Error::Protocol(format!(
            "length prefix says {len} bytes, frame carries {}",
            bytes.len() - 4
        )));
    }
    Ok(&bytes[4..])
}

fn small(what: &str, v: usize) -> Result<u8> {
    u8::try_from(v).map_err(|_| Error::Protocol(format!("{what} {v} does not fit in one byte")))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QueryFrame {
    pub version: u8,
    pub kind: SchemeKind,
    /// 1-based server index.
    pub server: usize,
    pub query: QueryMatrix,
}

impl QueryFrame {
    pub fn new(kind: SchemeKind, server: usize, query: QueryMatrix) -> Self {
        Self {
            version: PROTOCOL_VERSION,
            kind,
            server,
            query,
        }
    }

    pub fn encode(&self) -> Result<Vec<u8>> {
        let mut p = vec![self.version, self.kind.code(), small("server index", self.server)?];
        p.extend_from_slice(self.query.entries());
        Ok(frame(p))
    }

    /// Parses a query frame whose matrix is `rows x cols`.
    pub fn decode(bytes: &[u8], rows: usize, cols: usize) -> Result<Self> {
        let p = unframe(bytes)?;
        if p.len() != 3 + rows * cols {
            return Err(Error::Protocol(format!(
                "query payload has {} bytes, expected {}",
                p.len(),
                3 + rows * cols
            )));
        }
        if p[0] != PROTOCOL_VERSION {
            return Err(Error::Protocol(format!("unsupported protocol version {}", p[0])));
        }
        let kind = SchemeKind::from_code(p[1]).map_err(|e| Error::Protocol(e.to_string()))?;
        Ok(Self {
            version: p[0],
            kind,
            server: p[2] as usize,
            query: QueryMatrix::new(rows, cols, p[3..].to_vec())?,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AnswerFrame {
    /// 1-based server index.
    pub server: usize,
    /// Transmitted sub-responses only, in query-row order.
    pub symbols: Vec<Fe>,
}

impl AnswerFrame {
    pub fn encode(&self) -> Result<Vec<u8>> {
        let mut p = vec![
            small("server index", self.server)?,
            small("answer length", self.symbols.len())?,
        ];
        for s in &self.symbols {
            let v = u16::try_from(s.value())
                .map_err(|_| Error::Protocol(format!("symbol {} exceeds two bytes", s.value())))?;
            p.extend_from_slice(&v.to_be_bytes());
        }
        Ok(frame(p))
    }

    pub fn decode(bytes: &[u8], field: PrimeField) -> Result<Self> {
        let p = unframe(bytes)?;
        if p.len() < 2 {
            return Err(Error::Protocol("answer payload shorter than its header".into()));
        }
        let len = p[1] as usize;
        if p.len() != 2 + 2 * len {
            return Err(Error::Protocol(format!(
                "answer declares {len} symbols but carries {} bytes",
                p.len() - 2
            )));
        }
        let symbols = p[2..]
            .chunks_exact(2)
            .map(|c| {
                let v = u16::from_be_bytes([c[0], c[1]]) as u32;
                if v >= field.modulus() {
                    return Err(Error::Protocol(format!("{v} is not a residue mod {}", field.modulus())));
                }
                Ok(field.elem(v as u64))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            server: p[0] as usize,
            symbols,
        })
    }
}

/// A stateless storage server: the answer depends only on the query and
/// the stored column.
#[derive(Clone, Debug)]
pub struct Server {
    column: ServerColumn,
    params: EffectiveParams,
    kind: SchemeKind,
    field: PrimeField,
}

impl Server {
    pub fn new(column: ServerColumn, params: EffectiveParams, kind: SchemeKind, field: PrimeField) -> Self {
        Self {
            column,
            params,
            kind,
            field,
        }
    }

    /// One server per column of the storage.
    pub fn cluster(storage: &EncodedStorage, kind: SchemeKind) -> Vec<Server> {
        storage
            .columns()
            .iter()
            .map(|c| Server::new(c.clone(), storage.params(), kind, storage.code().field()))
            .collect()
    }

    pub fn index(&self) -> usize {
        self.column.server()
    }

    pub fn field(&self) -> PrimeField {
        self.field
    }

    /// Handles one query frame and returns the encoded answer frame.
    pub fn handle(&self, request: &[u8]) -> Result<Vec<u8>> {
        let q = QueryFrame::decode(request, self.params.k, self.column.files())?;
        if q.kind != self.kind {
            return Err(Error::Protocol(format!("server runs {}, query is {}", self.kind, q.kind)));
        }
        if q.server != self.index() {
            return Err(Error::Protocol(format!(
                "query addressed to server {} reached server {}",
                q.server,
                self.index()
            )));
        }
        let symbols = answer(&q.query, &self.column, &self.params)?
            .into_iter()
            .flatten()
            .collect();
        AnswerFrame {
            server: self.index(),
            symbols,
        }
        .encode()
    }
}

fn server_byte(frame: &[u8]) -> Result<usize> {
    unframe(frame)?
        .get(2)
        .map(|&b| b as usize)
        .ok_or_else(|| Error::Protocol("query payload too short".into()))
}

/// Carries query frames to servers and brings back answer frames, in any order.
pub trait Transport {
    fn exchange(&mut self, requests: &[Vec<u8>]) -> Result<Vec<Vec<u8>>>;
}

/// Direct in-process calls. Answers come back in reverse request order so
/// that clients cannot rely on ordering.
#[derive(Clone, Debug)]
pub struct InProcess {
    servers: Vec<Server>,
}

impl InProcess {
    pub fn new(servers: Vec<Server>) -> Self {
        Self { servers }
    }

    pub fn servers(&self) -> &[Server] {
        &self.servers
    }
}

impl Transport for InProcess {
    fn exchange(&mut self, requests: &[Vec<u8>]) -> Result<Vec<Vec<u8>>> {
        requests
            .iter()
            .rev()
            .map(|r| {
                let j = server_byte(r)?;
                let server = self
                    .servers
                    .iter()
                    .find(|s| s.index() == j)
                    .ok_or_else(|| Error::Protocol(format!("no server with index {j}")))?;
                server.handle(r)
            })
            .collect()
    }
}

/// Reads one length-prefixed message from a stream; `None` on clean EOF.
pub fn read_message(stream: &mut impl Read) -> Result<Option<Vec<u8>>> {
    let mut len = [0u8; 4];
    match stream.read_exact(&mut len) {
        Ok(()) => {}
        Err(e) if e.kind() == std::io::ErrorKind::UnexpectedEof => return Ok(None),
        Err(e) => return Err(e.into()),
    }
    let n = u32::from_be_bytes(len) as usize;
    if n > MAX_PAYLOAD {
        return Err(Error::Protocol(format!("payload of {n} bytes exceeds the limit")));
    }
    let mut out = len.to_vec();
    out.resize(4 + n, 0);
    stream.read_exact(&mut out[4..])?;
    Ok(Some(out))
}

/// Servers listening on loopback TCP ports, one thread each.
pub struct TcpCluster {
    addrs: Vec<(usize, SocketAddr)>,
    stop: Arc<AtomicBool>,
    handles: Vec<JoinHandle<()>>,
}

impl TcpCluster {
    pub fn spawn(servers: Vec<Server>) -> Result<Self> {
        let stop = Arc::new(AtomicBool::new(false));
        let mut addrs = Vec::new();
        let mut handles = Vec::new();
        for server in servers {
            let listener = TcpListener::bind("127.0.0.1:0")?;
            addrs.push((server.index(), listener.local_addr()?));
            let stop = Arc::clone(&stop);
            handles.push(std::thread::spawn(move || {
                for conn in listener.incoming() {
                    if stop.load(Ordering::SeqCst) {
                        break;
                    }
                    let Ok(mut conn) = conn else { continue };
                    while let Ok(Some(req)) = read_message(&mut conn) {
                        // A malformed request closes the connection.
                        let Ok(resp) = server.handle(&req) else { break };
                        if conn.write_all(&resp).is_err() {
                            break;
                        }
                    }
                }
            }));
        }
        Ok(Self { addrs, stop, handles })
    }

    pub fn transport(&self) -> TcpTransport {
        TcpTransport {
            addrs: self.addrs.clone(),
        }
    }
}

impl Drop for TcpCluster {
    fn drop(&mut self) {
        self.stop.store(true, Ordering::SeqCst);
        for (_, addr) in &self.addrs {
            // Wake each accept loop so it observes the stop flag.
            let _ = TcpStream::connect(addr);
        }
        for h in self.handles.drain(..) {
            let _ = h.join();
        }
    }
}

/// Client side of [`TcpCluster`]: one connection per request, all in flight at once.
#[derive(Clone, Debug)]
pub struct TcpTransport {
    addrs: Vec<(usize, SocketAddr)>,
}

impl Transport for TcpTransport {
    fn exchange(&mut self, requests: &[Vec<u8>]) -> Result<Vec<Vec<u8>>> {
        let addrs = &self.addrs;
        std::thread::scope(|scope| {
            let pending: Vec<_> = requests
                .iter()
                .map(|req| {
                    scope.spawn(move || -> Result<Vec<u8>> {
                        let j = server_byte(req)?;
                        let addr = addrs
                            .iter()
                            .find(|(i, _)| *i == j)
                            .map(|(_, a)| *a)
                            .ok_or_else(|| Error::Protocol(format!("no server with index {j}")))?;
                        let mut stream = TcpStream::connect(addr)?;
                        stream.write_all(req)?;
                        read_message(&mut stream)?
                            .ok_or_else(|| Error::Protocol(format!("server {j} closed the connection")))
                    })
                })
                .collect();
            pending
                .into_iter()
                .map(|h| h.join().unwrap_or_else(|_| Err(Error::Protocol("transport thread panicked".into()))))
                .collect()
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn query_frame_layout() {
        let q = QueryMatrix::from_rows(&[vec![2, 0], vec![0, 1]]).unwrap();
        let bytes = QueryFrame::new(SchemeKind::Olr, 3, q.clone()).encode().unwrap();
        assert_eq!(bytes, vec![0, 0, 0, 7, 1, 3, 3, 2, 0, 0, 1]);
        let back = QueryFrame::decode(&bytes, 2, 2).unwrap();
        assert_eq!(back.query, q);
        assert_eq!(back.server, 3);
        assert!(QueryFrame::decode(&bytes[..10], 2, 2).is_err());
        assert!(QueryFrame::decode(&bytes, 2, 3).is_err());
    }

    #[test]
    fn answer_frame_layout() {
        let f = PrimeField::new(65_521).unwrap();
        let a = AnswerFrame {
            server: 2,
            symbols: vec![f.elem(1), f.elem(65_520)],
        };
        let bytes = a.encode().unwrap();
        assert_eq!(bytes, vec![0, 0, 0, 6, 2, 2, 0, 1, 0xff, 0xf0]);
        assert_eq!(AnswerFrame::decode(&bytes, f).unwrap(), a);
        let empty = AnswerFrame { server: 1, symbols: vec![] }.encode().unwrap();
        assert_eq!(empty, vec![0, 0, 0, 2, 1, 0]);
        // A symbol outside the field is rejected.
        let f5 = PrimeField::new(5).unwrap();
        assert!(AnswerFrame::decode(&bytes, f5).is_err());
    }

    #[test]
    fn bad_version_and_kind() {
        let q = QueryMatrix::from_rows(&[vec![0]]).unwrap();
        let mut bytes = QueryFrame::new(SchemeKind::Zyqt, 1, q).encode().unwrap();
        bytes[4] = 9;
        assert!(QueryFrame::decode(&bytes, 1, 1).is_err());
        bytes[4] = PROTOCOL_VERSION;
        bytes[5] = 0;
        assert!(QueryFrame::decode(&bytes, 1, 1).is_err());
    }
}

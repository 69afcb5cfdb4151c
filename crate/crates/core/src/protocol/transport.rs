//! Request/response transports. Both implementations push every message
//! through its wire encoding.

use std::io::{BufReader, BufWriter};
use std::net::{Shutdown, SocketAddr, TcpListener, TcpStream};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex};
use std::thread::{self, JoinHandle};

use super::wire::{Request, Response, WireMessage};
use crate::error::{Error, Result};

/// Something that answers requests: a role's server side.
pub trait Service: Send + Sync {
    fn handle(&self, req: Request) -> Response;
}

/// The client side of a connection to a [`Service`].
pub trait Transport: Send + Sync {
    fn call(&self, req: &Request) -> Result<Response>;
}

/// Decodes a frame, dispatches it and encodes the reply. Undecodable input
/// gets a protocol error response.
pub fn serve_frame(service: &dyn Service, msg: &WireMessage) -> WireMessage {
    let resp = match Request::from_message(msg) {
        Ok(req) => service.handle(req),
        Err(e) => Response::from_error(&e),
    };
    resp.to_message()
}

/// Loopback transport for tests and single-process runs. It can be switched
/// off to simulate an unreachable service.
pub struct InProc {
    service: Arc<dyn Service>,
    down: AtomicBool,
}

impl InProc {
    pub fn new(service: Arc<dyn Service>) -> Self {
        InProc { service, down: AtomicBool::new(false) }
    }

    pub fn set_down(&self, down: bool) {
        self.down.store(down, Ordering::SeqCst);
    }
}

impl Transport for InProc {
    fn call(&self, req: &Request) -> Result<Response> {
        if self.down.load(Ordering::SeqCst) {
            return Err(Error::Unavailable("in-process service is down".into()));
        }
        let frame = req.to_message().to_frame();
        let reply = serve_frame(self.service.as_ref(), &WireMessage::from_frame(&frame)?);
        Response::from_message(&WireMessage::from_frame(&reply.to_frame())?)
    }
}

/// One TCP connection per call.
pub struct TcpClient {
    addr: SocketAddr,
}

impl TcpClient {
    pub fn new(addr: SocketAddr) -> Self {
        TcpClient { addr }
    }
}

impl Transport for TcpClient {
    fn call(&self, req: &Request) -> Result<Response> {
        let stream = TcpStream::connect(self.addr).map_err(|e| Error::Unavailable(format!("{}: {e}", self.addr)))?;
        let mut w = BufWriter::new(&stream);
        req.to_message().write_to(&mut w)?;
        drop(w);
        let mut r = BufReader::new(&stream);
        let msg = WireMessage::read_from(&mut r)?
            .ok_or_else(|| Error::Unavailable(format!("{} closed the connection", self.addr)))?;
        let _ = stream.shutdown(Shutdown::Both);
        Response::from_message(&msg)
    }
}

/// A thread-per-connection TCP server.
pub struct TcpServer {
    addr: SocketAddr,
    stop: Arc<AtomicBool>,
    accept: Option<JoinHandle<()>>,
    workers: Arc<Mutex<Vec<JoinHandle<()>>>>,
}

impl TcpServer {
    /// Binds `addr` (use port 0 for an ephemeral port) and starts serving.
    pub fn spawn(service: Arc<dyn Service>, addr: &str) -> Result<TcpServer> {
        let listener = TcpListener::bind(addr)?;
        let addr = listener.local_addr()?;
        let stop = Arc::new(AtomicBool::new(false));
        let workers: Arc<Mutex<Vec<JoinHandle<()>>>> = Arc::default();
        let accept = {
            let stop = stop.clone();
            let workers = workers.clone();
            thread::spawn(move || {
                for stream in listener.incoming() {
                    if stop.load(Ordering::SeqCst) {
                        break;
                    }
                    let Ok(stream) = stream else { continue };
                    let service = service.clone();
                    let handle = thread::spawn(move || {
                        if let Err(e) = serve_connection(service.as_ref(), stream) {
                            log::debug!("connection ended: {e}");
                        }
                    });
                    let mut ws = workers.lock().expect("worker list poisoned");
                    ws.retain(|h| !h.is_finished());
                    ws.push(handle);
                }
            })
        };
        Ok(TcpServer { addr, stop, accept: Some(accept), workers })
    }

    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn client(&self) -> TcpClient {
        TcpClient::new(self.addr)
    }

    /// Stops accepting and waits for open connections to finish.
    pub fn shutdown(&mut self) {
        if let Some(accept) = self.accept.take() {
            self.stop.store(true, Ordering::SeqCst);
            // Wake the accept loop.
            let _ = TcpStream::connect(self.addr);
            let _ = accept.join();
            let handles: Vec<_> = self.workers.lock().expect("worker list poisoned").drain(..).collect();
            for h in handles {
                let _ = h.join();
            }
        }
    }
}

impl Drop for TcpServer {
    fn drop(&mut self) {
        self.shutdown();
    }
}

fn serve_connection(service: &dyn Service, stream: TcpStream) -> Result<()> {
    let mut r = BufReader::new(&stream);
    loop {
        let reply = match WireMessage::read_from(&mut r) {
            Ok(Some(msg)) => serve_frame(service, &msg),
            Ok(None) => return Ok(()),
            // Framing is lost after a bad header; answer once and hang up.
            Err(e @ Error::Protocol(_)) => {
                Response::from_error(&e).to_message().write_to(&mut BufWriter::new(&stream))?;
                return Err(e);
            }
            Err(e) => return Err(e),
        };
        reply.write_to(&mut BufWriter::new(&stream))?;
    }
}

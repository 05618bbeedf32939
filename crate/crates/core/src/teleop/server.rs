use std::collections::VecDeque;
use std::io::ErrorKind;
use std::net::{SocketAddr, TcpListener, TcpStream};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;
use std::time::{Duration, Instant};

use tungstenite::{Message, WebSocket};

use super::protocol::ServerMessage;
use super::{Session, TeleopError, TICK_RATE_HZ};

/// Running teleop server. Dropping it stops the server.
pub struct ServerHandle {
    addr: SocketAddr,
    stop: Arc<AtomicBool>,
    session: Arc<Mutex<Session>>,
    thread: Option<JoinHandle<()>>,
}

impl ServerHandle {
    pub fn local_addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn session(&self) -> Arc<Mutex<Session>> {
        self.session.clone()
    }

    pub fn stop(&mut self) {
        self.stop.store(true, Ordering::SeqCst);
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }

    /// Blocks until the server stops.
    pub fn wait(mut self) {
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}

impl Drop for ServerHandle {
    fn drop(&mut self) {
        self.stop();
    }
}

/// Binds `endpoint` and serves `session` to one client at a time.
pub fn serve(session: Session, endpoint: &str) -> Result<ServerHandle, TeleopError> {
    let listener = TcpListener::bind(endpoint).map_err(|e| TeleopError::Bind(format!("{endpoint}: {e}")))?;
    let addr = listener.local_addr().map_err(|e| TeleopError::Bind(e.to_string()))?;
    listener.set_nonblocking(true).map_err(|e| TeleopError::Bind(e.to_string()))?;
    let stop = Arc::new(AtomicBool::new(false));
    let session = Arc::new(Mutex::new(session));
    let thread = {
        let (stop, session) = (stop.clone(), session.clone());
        std::thread::spawn(move || accept_loop(listener, session, stop))
    };
    log::info!("teleop listening on ws://{addr}");
    Ok(ServerHandle { addr, stop, session, thread: Some(thread) })
}

fn accept_loop(listener: TcpListener, session: Arc<Mutex<Session>>, stop: Arc<AtomicBool>) {
    let active = Arc::new(AtomicBool::new(false));
    let mut workers: Vec<JoinHandle<()>> = vec![];
    while !stop.load(Ordering::SeqCst) {
        match listener.accept() {
            Ok((stream, peer)) => {
                let _ = stream.set_nonblocking(false);
                if active.swap(true, Ordering::SeqCst) {
                    log::info!("rejecting {peer}: session busy");
                    workers.push(std::thread::spawn(move || reject(stream)));
                    continue;
                }
                let (session, stop, active) = (session.clone(), stop.clone(), active.clone());
                workers.push(std::thread::spawn(move || {
                    if let Err(e) = run_client(stream, &session, &stop) {
                        log::warn!("client {peer}: {e}");
                    }
                    if let Ok(mut s) = session.lock() {
                        if let Err(e) = s.finalize() {
                            log::warn!("finalizing demo: {e}");
                        }
                    }
                    active.store(false, Ordering::SeqCst);
                }));
            }
            Err(e) if e.kind() == ErrorKind::WouldBlock => std::thread::sleep(Duration::from_millis(5)),
            Err(e) => log::warn!("accept: {e}"),
        }
        workers.retain(|w| !w.is_finished());
    }
    for w in workers {
        let _ = w.join();
    }
}

fn reject(stream: TcpStream) {
    let _ = stream.set_read_timeout(Some(Duration::from_secs(2)));
    if let Ok(mut ws) = tungstenite::accept(stream) {
        let _ = ws.send(Message::text(ServerMessage::error("session_busy", "another client is connected").to_text()));
        let _ = ws.close(None);
        let _ = ws.flush();
    }
}

fn send(ws: &mut WebSocket<TcpStream>, msg: &ServerMessage) -> Result<(), tungstenite::Error> {
    ws.send(Message::text(msg.to_text()))
}

/// Receives into a queue until each tick deadline, then handles the queued
/// messages in arrival order, steps, and sends the frame.
fn run_client(stream: TcpStream, session: &Mutex<Session>, stop: &AtomicBool) -> Result<(), tungstenite::Error> {
    stream.set_read_timeout(Some(Duration::from_secs(5)))?;
    let mut ws = tungstenite::accept(stream).map_err(|e| match e {
        tungstenite::HandshakeError::Failure(e) => e,
        tungstenite::HandshakeError::Interrupted(_) => tungstenite::Error::ConnectionClosed,
    })?;
    let hello = session.lock().expect("session lock").hello();
    send(&mut ws, &hello)?;
    let period = Duration::from_secs(1) / TICK_RATE_HZ;
    let mut deadline = Instant::now() + period;
    let mut queue: VecDeque<String> = VecDeque::new();
    loop {
        if stop.load(Ordering::SeqCst) {
            let _ = ws.close(None);
            return Ok(());
        }
        loop {
            let now = Instant::now();
            if now >= deadline {
                break;
            }
            ws.get_ref().set_read_timeout(Some(deadline - now))?;
            match ws.read() {
                Ok(Message::Text(t)) => queue.push_back(t.to_string()),
                Ok(Message::Binary(_)) => queue.push_back(String::new()),
                Ok(Message::Close(_)) => return Ok(()),
                Ok(_) => {}
                Err(tungstenite::Error::Io(e)) if matches!(e.kind(), ErrorKind::WouldBlock | ErrorKind::TimedOut) => break,
                Err(tungstenite::Error::ConnectionClosed | tungstenite::Error::AlreadyClosed) => return Ok(()),
                Err(e) => return Err(e),
            }
        }
        deadline += period;
        // Pacing is best effort: after a long stall, do not try to catch up.
        let now = Instant::now();
        if deadline + period < now {
            deadline = now + period;
        }
        let mut s = session.lock().expect("session lock");
        for text in queue.drain(..) {
            let reply = s.handle_text(&text);
            send(&mut ws, &reply)?;
        }
        let frame = s.tick().unwrap_or_else(|e| ServerMessage::error(e.code(), e.to_string()));
        drop(s);
        send(&mut ws, &frame)?;
    }
}

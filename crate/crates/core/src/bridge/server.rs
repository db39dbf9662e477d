use std::io::{self, BufReader, BufWriter};
use std::net::TcpListener;
use std::sync::{mpsc, Arc, Mutex};
use std::thread;

use super::protocol::{to_line, ErrorCode, Request, Response, ResponseBody};
use super::transport::{LineSink, LineSource, ReadSource, WriteSink};

/// Stateless request handler behind a protocol endpoint.
pub trait BridgeService: Send + Sync {
    fn handle(&self, request: super::protocol::RequestBody) -> ResponseBody;
}

fn respond(service: &dyn BridgeService, line: &str) -> String {
    let response = match serde_json::from_str::<Request>(line) {
        Ok(req) => Response { id: req.id, body: service.handle(req.body) },
        Err(e) => {
            let id = serde_json::from_str::<serde_json::Value>(line)
                .ok()
                .and_then(|v| v.get("id").and_then(|id| id.as_u64()))
                .unwrap_or(0);
            Response { id, body: ResponseBody::error(ErrorCode::MalformedRequest, e.to_string()) }
        }
    };
    to_line(&response).unwrap_or_else(|e| {
        format!(r#"{{"id":{},"op":"error","code":"internal","message":"{}"}}"#, response.id, e.to_string().replace('"', "'"))
    })
}

/// Answers requests from `source` until it ends. With `workers > 1` requests
/// are handled concurrently and responses are written in completion order.
pub fn serve_lines(
    service: Arc<dyn BridgeService>,
    mut source: impl LineSource,
    mut sink: impl LineSink,
    workers: usize,
) -> io::Result<()> {
    if workers <= 1 {
        while let Some(line) = source.recv_line()? {
            if !line.trim().is_empty() {
                sink.send_line(&respond(service.as_ref(), &line))?;
            }
        }
        return Ok(());
    }
    let (job_tx, job_rx) = mpsc::channel::<String>();
    let job_rx = Arc::new(Mutex::new(job_rx));
    let (out_tx, out_rx) = mpsc::channel::<String>();
    thread::scope(|scope| {
        for _ in 0..workers {
            let jobs = Arc::clone(&job_rx);
            let out = out_tx.clone();
            let service = Arc::clone(&service);
            scope.spawn(move || loop {
                let next = jobs.lock().expect("job queue").recv();
                let Ok(line) = next else { break };
                if out.send(respond(service.as_ref(), &line)).is_err() {
                    break;
                }
            });
        }
        drop(out_tx);
        let writer = scope.spawn(move || -> io::Result<()> {
            for line in out_rx {
                sink.send_line(&line)?;
            }
            Ok(())
        });
        let read = (|| -> io::Result<()> {
            while let Some(line) = source.recv_line()? {
                if !line.trim().is_empty() && job_tx.send(line).is_err() {
                    break;
                }
            }
            Ok(())
        })();
        drop(job_tx);
        let written = writer.join().expect("writer thread");
        read.and(written)
    })
}

/// Serves each accepted connection on its own thread until the listener fails.
pub fn serve_tcp(listener: TcpListener, service: Arc<dyn BridgeService>, workers: usize) -> io::Result<()> {
    for stream in listener.incoming() {
        let stream = stream?;
        let service = Arc::clone(&service);
        thread::spawn(move || {
            let reader = match stream.try_clone() {
                Ok(s) => s,
                Err(e) => return log::warn!("bridge connection: {e}"),
            };
            let source = ReadSource(BufReader::new(reader));
            let sink = WriteSink(BufWriter::new(stream));
            if let Err(e) = serve_lines(service, source, sink, workers) {
                log::warn!("bridge connection ended: {e}");
            }
        });
    }
    Ok(())
}

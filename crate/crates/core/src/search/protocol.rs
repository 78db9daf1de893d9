//! NDJSON predictor protocol.
//!
//! The engine opens with `hello` (the theorem vocabulary), the predictor
//! answers `ready`, then each `predict` request gets a `scores` response
//! carrying the same id. Responses may arrive out of order.

use std::collections::HashMap;
use std::io::{BufRead, BufReader, Write};
use std::net::{TcpListener, TcpStream, ToSocketAddrs};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::predictor::{Predictor, PredictorError, Query};
use crate::hypergraph::SerializedGraph;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Message {
    Hello {
        theorems: Vec<String>,
    },
    Ready {
        m: usize,
    },
    Predict {
        id: u64,
        #[serde(flatten)]
        graph: SerializedGraph,
    },
    Scores {
        id: u64,
        scores: Vec<f64>,
    },
    Error {
        message: String,
    },
}

pub fn write_message(w: &mut impl Write, msg: &Message) -> std::io::Result<()> {
    let mut line = serde_json::to_string(msg).map_err(std::io::Error::other)?;
    line.push('\n');
    w.write_all(line.as_bytes())?;
    w.flush()
}

/// Next message, or `None` at end of stream.
pub fn read_message(r: &mut impl BufRead) -> Result<Option<Message>, PredictorError> {
    let mut line = String::new();
    loop {
        line.clear();
        if r.read_line(&mut line)? == 0 {
            return Ok(None);
        }
        if !line.trim().is_empty() {
            break;
        }
    }
    serde_json::from_str(&line).map(Some).map_err(|e| PredictorError::Protocol(e.to_string()))
}

/// Client side of the protocol over TCP.
pub struct RemotePredictor {
    reader: BufReader<TcpStream>,
    writer: TcpStream,
    m: usize,
    next_id: u64,
    pending: HashMap<u64, Vec<f64>>,
}

impl RemotePredictor {
    pub fn connect(addr: impl ToSocketAddrs, theorems: &[String]) -> Result<Self, PredictorError> {
        let stream = TcpStream::connect(addr)?;
        stream.set_read_timeout(Some(Duration::from_secs(60)))?;
        stream.set_nodelay(true)?;
        let mut client = Self {
            reader: BufReader::new(stream.try_clone()?),
            writer: stream,
            m: theorems.len(),
            next_id: 0,
            pending: HashMap::new(),
        };
        write_message(&mut client.writer, &Message::Hello { theorems: theorems.to_vec() })?;
        match read_message(&mut client.reader)? {
            Some(Message::Ready { m }) if m == client.m => Ok(client),
            Some(Message::Ready { m }) => Err(PredictorError::Length { expected: client.m, got: m }),
            Some(Message::Error { message }) => Err(PredictorError::Protocol(message)),
            other => Err(PredictorError::Protocol(format!("expected ready, got {other:?}"))),
        }
    }

    pub fn theorem_count(&self) -> usize {
        self.m
    }

    /// Sends a request without waiting; returns its id.
    pub fn send(&mut self, graph: &SerializedGraph) -> Result<u64, PredictorError> {
        let id = self.next_id;
        self.next_id += 1;
        write_message(&mut self.writer, &Message::Predict { id, graph: graph.clone() })?;
        Ok(id)
    }

    /// Waits for the response to `id`, buffering responses to other ids.
    pub fn receive(&mut self, id: u64) -> Result<Vec<f64>, PredictorError> {
        loop {
            if let Some(scores) = self.pending.remove(&id) {
                return self.check(scores);
            }
            match read_message(&mut self.reader)? {
                Some(Message::Scores { id: got, scores }) => {
                    self.pending.insert(got, scores);
                }
                Some(Message::Error { message }) => return Err(PredictorError::Protocol(message)),
                Some(other) => return Err(PredictorError::Protocol(format!("unexpected {other:?}"))),
                None => return Err(PredictorError::Io("connection closed".into())),
            }
        }
    }

    fn check(&self, scores: Vec<f64>) -> Result<Vec<f64>, PredictorError> {
        if scores.len() != self.m {
            return Err(PredictorError::Length { expected: self.m, got: scores.len() });
        }
        if scores.iter().any(|s| !s.is_finite() || *s < 0.0) {
            return Err(PredictorError::Protocol("scores must be finite and non-negative".into()));
        }
        Ok(scores)
    }
}

impl Predictor for RemotePredictor {
    fn score(&mut self, query: &Query<'_>) -> Result<Vec<f64>, PredictorError> {
        let id = self.send(query.graph)?;
        self.receive(id)
    }
}

/// Answers one connection until the peer closes it. `make` builds a
/// predictor for the announced vocabulary, or refuses it.
pub fn serve_connection<P: Predictor>(
    stream: TcpStream,
    make: &mut impl FnMut(&[String]) -> Result<P, String>,
) -> Result<(), PredictorError> {
    let mut reader = BufReader::new(stream.try_clone()?);
    let mut writer = stream;
    let theorems = match read_message(&mut reader)? {
        Some(Message::Hello { theorems }) => theorems,
        None => return Ok(()),
        Some(other) => {
            let message = format!("expected hello, got {other:?}");
            write_message(&mut writer, &Message::Error { message: message.clone() })?;
            return Err(PredictorError::Protocol(message));
        }
    };
    let mut predictor = match make(&theorems) {
        Ok(p) => p,
        Err(message) => {
            write_message(&mut writer, &Message::Error { message: message.clone() })?;
            return Err(PredictorError::Protocol(message));
        }
    };
    write_message(&mut writer, &Message::Ready { m: theorems.len() })?;
    while let Some(msg) = read_message(&mut reader)? {
        match msg {
            Message::Predict { id, graph } => {
                let scores = predictor.score(&Query { problem_id: None, graph: &graph })?;
                write_message(&mut writer, &Message::Scores { id, scores })?;
            }
            other => {
                let message = format!("expected predict, got {other:?}");
                write_message(&mut writer, &Message::Error { message })?;
            }
        }
    }
    Ok(())
}

/// Serves connections one at a time, forever.
pub fn serve<P: Predictor>(listener: TcpListener, mut make: impl FnMut(&[String]) -> Result<P, String>) -> std::io::Result<()> {
    for stream in listener.incoming() {
        if let Err(e) = serve_connection(stream?, &mut make) {
            eprintln!("connection ended: {e}");
        }
    }
    Ok(())
}

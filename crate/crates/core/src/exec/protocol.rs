//! Line-delimited JSON frames exchanged with worker processes.

use serde::{Deserialize, Serialize};

use crate::domain::{DistanceMatrix, Payload, Task};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "lowercase")]
pub enum Request {
    Load { id: u64, code: String },
    Eval { id: u64, task: Task, payload: WirePayload },
    Ping { id: u64 },
}

impl Request {
    pub fn id(&self) -> u64 {
        match self {
            Request::Load { id, .. } | Request::Eval { id, .. } | Request::Ping { id } => *id,
        }
    }
}

/// Instance fields as carried in `ProblemInstance` files. Distances are not
/// shipped; the receiver rebuilds them from the coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct WirePayload {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub capacity: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub items: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coords: Option<Vec<[f64; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub demands: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub depot: Option<usize>,
}

impl From<&Payload> for WirePayload {
    fn from(p: &Payload) -> Self {
        match p {
            Payload::Obp { capacity, items } => WirePayload {
                capacity: Some(*capacity),
                items: Some(items.clone()),
                ..Default::default()
            },
            Payload::Tsp { coords, .. } => WirePayload {
                coords: Some(coords.clone()),
                ..Default::default()
            },
            Payload::Cvrp {
                depot,
                coords,
                demands,
                capacity,
                ..
            } => WirePayload {
                capacity: Some(*capacity),
                coords: Some(coords.clone()),
                demands: Some(demands.clone()),
                depot: Some(*depot),
                ..Default::default()
            },
        }
    }
}

impl WirePayload {
    /// Rebuilds the payload for `task`; fails when a required field is
    /// missing.
    pub fn into_payload(self, task: Task) -> Result<Payload, String> {
        let missing = |f: &str| format!("payload for {task} lacks `{f}`");
        match task {
            Task::Obp => Ok(Payload::Obp {
                capacity: self.capacity.ok_or_else(|| missing("capacity"))?,
                items: self.items.ok_or_else(|| missing("items"))?,
            }),
            Task::Tsp => Ok(Payload::tsp(self.coords.ok_or_else(|| missing("coords"))?)),
            Task::Cvrp => {
                let coords = self.coords.ok_or_else(|| missing("coords"))?;
                let distances = DistanceMatrix::euclidean(&coords);
                Ok(Payload::Cvrp {
                    depot: self.depot.unwrap_or(0),
                    coords,
                    demands: self.demands.ok_or_else(|| missing("demands"))?,
                    capacity: self.capacity.ok_or_else(|| missing("capacity"))?,
                    distances,
                })
            }
        }
    }
}

/// A worker reply. `raw` and `trace` are present on successful evals;
/// `decisions` and `detours` are optional extras the host uses when given.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Response {
    /// Absent only when the request frame could not be read at all.
    #[serde(default)]
    pub id: Option<u64>,
    pub ok: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub raw: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decisions: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detours: Option<usize>,
}

impl Response {
    pub fn ok(id: u64) -> Self {
        Response {
            id: Some(id),
            ok: true,
            error: None,
            raw: None,
            trace: None,
            decisions: None,
            detours: None,
        }
    }

    pub fn err(id: Option<u64>, error: impl Into<String>) -> Self {
        Response {
            ok: false,
            error: Some(error.into()),
            ..Response::ok(0)
        }
        .with_id(id)
    }

    fn with_id(mut self, id: Option<u64>) -> Self {
        self.id = id;
        self
    }
}

/// Error strings with fixed meaning on the wire.
pub const BAD_FRAME: &str = "bad-frame";
pub const NO_HEURISTIC: &str = "no-heuristic";

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frames_use_exact_field_names() {
        let r = Request::Load {
            id: 3,
            code: "x".into(),
        };
        assert_eq!(serde_json::to_string(&r).unwrap(), r#"{"op":"load","id":3,"code":"x"}"#);
        let r: Request = serde_json::from_str(r#"{"id": 9, "op": "ping"}"#).unwrap();
        assert_eq!(r, Request::Ping { id: 9 });
        let r: Request =
            serde_json::from_str(r#"{"id":1,"op":"eval","task":"obp","payload":{"capacity":10,"items":[1,2]}}"#).unwrap();
        let Request::Eval { task, payload, .. } = r else {
            panic!("not an eval")
        };
        assert_eq!(payload.into_payload(task).unwrap(), Payload::obp(10.0, vec![1.0, 2.0]));
        assert!(serde_json::from_str::<Request>(r#"{"id":1,"op":"dance"}"#).is_err());
    }

    #[test]
    fn payload_round_trip() {
        let p = Payload::Cvrp {
            depot: 1,
            coords: vec![[0.0, 0.0], [0.5, 0.5], [1.0, 0.0]],
            demands: vec![2.0, 0.0, 3.0],
            capacity: 5.0,
            distances: DistanceMatrix::euclidean(&[[0.0, 0.0], [0.5, 0.5], [1.0, 0.0]]),
        };
        let wire = WirePayload::from(&p);
        let text = serde_json::to_string(&wire).unwrap();
        assert!(!text.contains("distances"));
        let back: WirePayload = serde_json::from_str(&text).unwrap();
        assert_eq!(back.into_payload(Task::Cvrp).unwrap(), p);
        assert!(WirePayload::default().into_payload(Task::Tsp).is_err());
    }

    #[test]
    fn error_response_shape() {
        let text = serde_json::to_string(&Response::err(Some(4), "no-heuristic")).unwrap();
        assert_eq!(text, r#"{"id":4,"ok":false,"error":"no-heuristic"}"#);
        let text = serde_json::to_string(&Response::ok(2)).unwrap();
        assert_eq!(text, r#"{"id":2,"ok":true}"#);
    }
}

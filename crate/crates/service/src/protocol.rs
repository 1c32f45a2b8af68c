//! JSON messages exchanged over the session websocket.

use crosswalk_core::engine::trace::StateMessage;
use crosswalk_core::engine::Outcome;
use crosswalk_core::pedestrian::PedestrianSource;
use serde::{Deserialize, Serialize};

/// Messages sent by a client.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ClientMessage {
    /// Live pedestrian speed and intention. `t` is the simulation time the
    /// client believes it is acting at; inputs older than one tick are dropped.
    Input {
        v_ped: f64,
        i_ped: f64,
        #[serde(default)]
        t: Option<f64>,
    },
    Control {
        action: ControlAction,
        #[serde(default)]
        value: Option<f64>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControlAction {
    Start,
    Pause,
    Reset,
    SetPace,
}

/// Sent once to each client right after it connects.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hello {
    #[serde(rename = "type")]
    pub kind: String,
    pub session: u64,
    pub scenario: String,
    pub model: PedestrianSource,
    /// True when the pedestrian is simulated and live inputs are ignored.
    pub spectator: bool,
    pub dt: f64,
    pub pace: f64,
}

/// How a received input was handled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InputStatus {
    /// Held and used from tick `tick` onwards.
    Applied,
    /// Older than one tick relative to the simulation clock.
    Stale,
    /// The session's pedestrian is simulated.
    Ignored,
    Invalid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ack {
    #[serde(rename = "type")]
    pub kind: String,
    pub status: InputStatus,
    /// Index of the next tick to be computed when the input was processed.
    pub tick: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Status {
    #[serde(rename = "type")]
    pub kind: String,
    pub t: f64,
    pub tick: u64,
    pub running: bool,
    pub finished: bool,
    pub outcome: Option<Outcome>,
    pub pace: f64,
}

/// Messages sent by the server, all tagged by `type`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ServerMessage {
    Hello(Hello),
    State(StateMessage),
    Ack(Ack),
    Status(Status),
    Error(ErrorMessage),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorMessage {
    #[serde(rename = "type")]
    pub kind: String,
    pub message: String,
}

impl ServerMessage {
    pub fn error(message: impl Into<String>) -> Self {
        Self::Error(ErrorMessage {
            kind: "error".into(),
            message: message.into(),
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("server message serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn client_messages_parse() {
        let m: ClientMessage = serde_json::from_str(r#"{"type":"input","v_ped":1.5,"i_ped":0.8}"#).unwrap();
        assert_eq!(
            m,
            ClientMessage::Input {
                v_ped: 1.5,
                i_ped: 0.8,
                t: None
            }
        );
        let m: ClientMessage =
            serde_json::from_str(r#"{"type":"control","action":"set_pace","value":0.5}"#).unwrap();
        assert_eq!(
            m,
            ClientMessage::Control {
                action: ControlAction::SetPace,
                value: Some(0.5)
            }
        );
        assert!(serde_json::from_str::<ClientMessage>(r#"{"type":"jump"}"#).is_err());
    }

    #[test]
    fn ack_is_tagged() {
        let ack = ServerMessage::Ack(Ack {
            kind: "ack".into(),
            status: InputStatus::Stale,
            tick: 4,
        });
        assert_eq!(ack.to_json(), r#"{"type":"ack","status":"stale","tick":4}"#);
    }
}

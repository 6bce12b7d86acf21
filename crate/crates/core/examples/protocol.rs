//! Drives the JSON protocol in memory, as a front end would over TCP.

use intentlang::service::{protocol, Engine};

fn main() {
    let engine = Engine::new();
    let requests = [
        r#"{"id": 1, "op": "new_session", "args": {"world": "move-take", "profile": "hypertext"}}"#,
        r#"{"id": 2, "op": "list_intents", "session": "s1"}"#,
        r#"{"id": 3, "op": "step", "session": "s1", "args": {"choice": "1"}}"#,
        r#"{"id": 4, "op": "step", "session": "s1", "args": {"choice": "9"}}"#,
        r#"{"id": 5, "op": "get_trace", "session": "s1"}"#,
        r#"{"id": 6, "op": "close_session", "session": "s1"}"#,
    ];
    for r in requests {
        println!("> {r}\n< {}", protocol::handle_line(&engine, r));
    }
}

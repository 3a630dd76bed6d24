//! Line-pipe protocol for an external corrector process.
//!
//! The child receives every input line UTF-8 newline-terminated on standard
//! input, in order, and must write exactly one output line per input line to
//! standard output, exiting 0. This keeps heavyweight correctors (e.g. a
//! neural model behind a Python script) pluggable without linking them in.

use std::io::Write;
use std::process::{Command, Stdio};

use super::PostCorrectError;

/// An external corrector invocation: program plus fixed arguments.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExternalCommand {
    pub program: String,
    pub args: Vec<String>,
}

impl ExternalCommand {
    pub fn new(program: impl Into<String>, args: Vec<String>) -> Self {
        ExternalCommand {
            program: program.into(),
            args,
        }
    }
}

/// Pipes `lines` through the external corrector, preserving order.
///
/// Input lines must not contain newlines (canonical line text never does).
/// A nonzero exit is a [`PostCorrectError::ProcessFailure`] carrying the
/// child's standard error; a wrong output line count is a
/// [`PostCorrectError::ProtocolError`].
pub fn correct_external(
    lines: &[String],
    command: &ExternalCommand,
) -> Result<Vec<String>, PostCorrectError> {
    let mut child = Command::new(&command.program)
        .args(&command.args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .map_err(|e| {
            PostCorrectError::ProcessFailure(format!("failed to start {:?}: {e}", command.program))
        })?;

    let mut stdin = child.stdin.take().expect("stdin was piped");
    let payload: String = lines.iter().flat_map(|l| [l.as_str(), "\n"]).collect();
    // Write from a thread so a child that reads nothing cannot deadlock us;
    // a broken pipe just ends the write early and the exit status decides.
    let writer = std::thread::spawn(move || {
        let _ = stdin.write_all(payload.as_bytes());
    });
    let output = child.wait_with_output().map_err(|e| {
        PostCorrectError::ProcessFailure(format!("failed to read corrector output: {e}"))
    })?;
    let _ = writer.join();

    if !output.status.success() {
        let stderr = String::from_utf8_lossy(&output.stderr);
        return Err(PostCorrectError::ProcessFailure(format!(
            "{:?} exited with {}: {}",
            command.program,
            output.status,
            stderr.trim()
        )));
    }
    let stdout = String::from_utf8(output.stdout)
        .map_err(|_| PostCorrectError::ProcessFailure("corrector wrote non-UTF-8 output".into()))?;
    let corrected: Vec<String> = stdout.lines().map(str::to_string).collect();
    if corrected.len() != lines.len() {
        return Err(PostCorrectError::ProtocolError {
            expected: lines.len(),
            got: corrected.len(),
        });
    }
    Ok(corrected)
}

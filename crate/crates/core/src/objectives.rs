//! Benchmark functions, the maximization wrapper, and external objectives.
//!
//! The optimizer always maximizes. [`Objective::as_internal_max`] negates
//! minimization problems; [`Objective::to_problem_units`] undoes it for
//! reporting.

use std::f64::consts::PI;
use std::fmt;
use std::io::{BufRead, BufReader, Read, Write};
use std::process::{Child, ChildStdin, Command, ExitStatus, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::sync::Arc;
use std::thread::{self, JoinHandle};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bounds::Bounds;

pub const DEFAULT_SUBPROCESS_TIMEOUT: Duration = Duration::from_secs(300);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    Minimize,
    Maximize,
}

impl Direction {
    pub fn name(self) -> &'static str {
        match self {
            Self::Minimize => "minimize",
            Self::Maximize => "maximize",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "minimize" | "min" => Some(Self::Minimize),
            "maximize" | "max" => Some(Self::Maximize),
            _ => None,
        }
    }

    /// True when `a` is strictly better than `b`.
    pub fn better(self, a: f64, b: f64) -> bool {
        match self {
            Self::Minimize => a < b,
            Self::Maximize => a > b,
        }
    }

    /// The better of two values.
    pub fn best(self, a: f64, b: f64) -> f64 {
        if self.better(b, a) {
            b
        } else {
            a
        }
    }
}

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("failed to start `{command}`: {source}")]
    Spawn {
        command: String,
        source: std::io::Error,
    },
    #[error("objective process exited with {status}: {stderr}")]
    Exited { status: String, stderr: String },
    #[error("malformed objective response {line:?}: {reason}")]
    Malformed { line: String, reason: String },
    #[error("objective did not answer within {0:?}")]
    Timeout(Duration),
    #[error("i/o error talking to objective: {0}")]
    Io(#[from] std::io::Error),
    #[error("objective returned non-finite value {0}")]
    NonFinite(f64),
    #[error("point has {found} coordinates, objective expects {expected}")]
    Dimension { expected: usize, found: usize },
}

/// How to launch an external objective. The command runs under `sh -c`.
#[derive(Debug, Clone, PartialEq)]
pub struct SubprocessSpec {
    pub command: String,
    pub timeout: Duration,
}

type EvalFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

#[derive(Clone)]
pub enum Evaluator {
    Function(EvalFn),
    Subprocess(SubprocessSpec),
}

impl fmt::Debug for Evaluator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Function(_) => f.write_str("Function(..)"),
            Self::Subprocess(s) => f.debug_tuple("Subprocess").field(s).finish(),
        }
    }
}

/// A known optimum used by the self-test.
#[derive(Debug, Clone, PartialEq)]
pub struct KnownOptimum {
    pub locations: Vec<Vec<f64>>,
    pub value: f64,
    pub tolerance: f64,
}

#[derive(Debug, Clone)]
pub struct Objective {
    name: String,
    bounds: Bounds,
    direction: Direction,
    evaluator: Evaluator,
    negated: bool,
    optimum: Option<KnownOptimum>,
}

const BRANIN_OPTIMUM: f64 = 0.397887;
const CAMELBACK_OPTIMUM: f64 = -1.0316;
const HARTMANN6_OPTIMUM: f64 = 3.32237;

const HARTMANN6_ALPHA: [f64; 4] = [1.0, 1.2, 3.0, 3.2];
const HARTMANN6_A: [[f64; 6]; 4] = [
    [10.0, 3.0, 17.0, 3.5, 1.7, 8.0],
    [0.05, 10.0, 17.0, 0.1, 8.0, 14.0],
    [3.0, 3.5, 1.7, 10.0, 17.0, 8.0],
    [17.0, 8.0, 0.05, 10.0, 0.1, 14.0],
];
const HARTMANN6_P: [[f64; 6]; 4] = [
    [0.1312, 0.1696, 0.5569, 0.0124, 0.8283, 0.5886],
    [0.2329, 0.4135, 0.8307, 0.3736, 0.1004, 0.9991],
    [0.2348, 0.1451, 0.3522, 0.2883, 0.3047, 0.6650],
    [0.4047, 0.8828, 0.8732, 0.5743, 0.1091, 0.0381],
];

/// Branin-Hoo on `[-5, 10] x [0, 15]`; global minimum 0.397887 at three points.
pub fn branin(x: &[f64]) -> f64 {
    let (x1, x2) = (x[0], x[1]);
    let b = 5.1 / (4.0 * PI * PI);
    let c = 5.0 / PI;
    let t = 1.0 / (8.0 * PI);
    (x2 - b * x1 * x1 + c * x1 - 6.0).powi(2) + 10.0 * (1.0 - t) * x1.cos() + 10.0
}

/// Six-hump camelback on `[-3, 3] x [-2, 2]`; global minimum about -1.0316.
pub fn camelback(x: &[f64]) -> f64 {
    let (x1, x2) = (x[0], x[1]);
    let x1s = x1 * x1;
    (4.0 - 2.1 * x1s + x1s * x1s / 3.0) * x1s + x1 * x2 + (-4.0 + 4.0 * x2 * x2) * x2 * x2
}

/// Hartmann-6 on `[0, 1]^6` in maximization form; global maximum about 3.32237.
pub fn hartmann6(x: &[f64]) -> f64 {
    HARTMANN6_ALPHA
        .iter()
        .zip(HARTMANN6_A.iter().zip(&HARTMANN6_P))
        .map(|(alpha, (a, p))| {
            let inner: f64 = (0..6).map(|j| a[j] * (x[j] - p[j]).powi(2)).sum();
            alpha * (-inner).exp()
        })
        .sum()
}

impl Objective {
    pub fn from_fn<F>(name: impl Into<String>, bounds: Bounds, direction: Direction, f: F) -> Self
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        Self {
            name: name.into(),
            bounds,
            direction,
            evaluator: Evaluator::Function(Arc::new(f)),
            negated: false,
            optimum: None,
        }
    }

    pub fn subprocess(
        name: impl Into<String>,
        command: impl Into<String>,
        bounds: Bounds,
        direction: Direction,
    ) -> Self {
        Self {
            name: name.into(),
            bounds,
            direction,
            evaluator: Evaluator::Subprocess(SubprocessSpec {
                command: command.into(),
                timeout: DEFAULT_SUBPROCESS_TIMEOUT,
            }),
            negated: false,
            optimum: None,
        }
    }

    /// Overrides the per-evaluation timeout of a subprocess objective.
    pub fn with_timeout(mut self, timeout: Duration) -> Self {
        if let Evaluator::Subprocess(spec) = &mut self.evaluator {
            spec.timeout = timeout;
        }
        self
    }

    pub fn with_known_optimum(mut self, optimum: KnownOptimum) -> Self {
        self.optimum = Some(optimum);
        self
    }

    pub fn branin() -> Self {
        Self::from_fn(
            "branin",
            Bounds::new(vec![(-5.0, 10.0), (0.0, 15.0)]).expect("valid"),
            Direction::Minimize,
            branin,
        )
        .with_known_optimum(KnownOptimum {
            locations: vec![
                vec![-PI, 12.275],
                vec![PI, 2.275],
                vec![9.42478, 2.475],
            ],
            value: BRANIN_OPTIMUM,
            tolerance: 1e-5,
        })
    }

    pub fn camelback() -> Self {
        Self::from_fn(
            "camelback",
            Bounds::new(vec![(-3.0, 3.0), (-2.0, 2.0)]).expect("valid"),
            Direction::Minimize,
            camelback,
        )
        .with_known_optimum(KnownOptimum {
            locations: vec![vec![0.0898, -0.7126], vec![-0.0898, 0.7126]],
            value: CAMELBACK_OPTIMUM,
            tolerance: 1e-3,
        })
    }

    pub fn hartmann6() -> Self {
        Self::from_fn("hartmann6", Bounds::unit(6), Direction::Maximize, hartmann6)
            .with_known_optimum(KnownOptimum {
                locations: vec![vec![
                    0.20169, 0.150011, 0.476874, 0.275332, 0.311652, 0.6573,
                ]],
                value: HARTMANN6_OPTIMUM,
                tolerance: 1e-4,
            })
    }

    /// Looks up a built-in benchmark by name.
    pub fn builtin(name: &str) -> Option<Self> {
        match name {
            "branin" => Some(Self::branin()),
            "camelback" => Some(Self::camelback()),
            "hartmann6" => Some(Self::hartmann6()),
            _ => None,
        }
    }

    pub fn builtin_names() -> &'static [&'static str] {
        &["branin", "camelback", "hartmann6"]
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.bounds.dim()
    }

    pub fn bounds(&self) -> &Bounds {
        &self.bounds
    }

    pub fn direction(&self) -> Direction {
        self.direction
    }

    pub fn evaluator(&self) -> &Evaluator {
        &self.evaluator
    }

    pub fn known_optimum(&self) -> Option<&KnownOptimum> {
        self.optimum.as_ref()
    }

    /// Whether values coming out of a session are negated problem values.
    pub fn is_negated(&self) -> bool {
        self.negated
    }

    /// Direction of the underlying problem, before any wrapping.
    pub fn problem_direction(&self) -> Direction {
        if self.negated {
            Direction::Minimize
        } else {
            self.direction
        }
    }

    /// Wraps a minimization problem so that larger is better. Maximization
    /// problems, including already-wrapped ones, pass through unchanged.
    pub fn as_internal_max(&self) -> Self {
        let mut o = self.clone();
        if self.direction == Direction::Minimize {
            o.direction = Direction::Maximize;
            o.negated = true;
        }
        o
    }

    /// Maps a value produced by this objective back to problem units.
    pub fn to_problem_units(&self, v: f64) -> f64 {
        if self.negated {
            -v
        } else {
            v
        }
    }

    /// Opens an evaluation session. Subprocess objectives spawn their child
    /// here and keep it alive for the session's lifetime.
    pub fn session(&self) -> Session {
        let backend = match &self.evaluator {
            Evaluator::Function(f) => Backend::Function(f.clone()),
            Evaluator::Subprocess(spec) => Backend::Subprocess(SubprocessSession::new(spec.clone())),
        };
        Session {
            backend,
            negated: self.negated,
            dim: self.dim(),
        }
    }

    /// Evaluates the known optima. `None` when the objective has none.
    pub fn self_test(&self) -> Option<Vec<SelfTestResult>> {
        let opt = self.optimum.as_ref()?;
        let f = match &self.evaluator {
            Evaluator::Function(f) => f.clone(),
            Evaluator::Subprocess(_) => return None,
        };
        Some(
            opt.locations
                .iter()
                .map(|x| {
                    let value = f(x);
                    SelfTestResult {
                        location: x.clone(),
                        value,
                        expected: opt.value,
                        passed: (value - opt.value).abs() <= opt.tolerance,
                    }
                })
                .collect(),
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelfTestResult {
    pub location: Vec<f64>,
    pub value: f64,
    pub expected: f64,
    pub passed: bool,
}

/// Evaluates an objective; values come back in the objective's own (possibly
/// negated) orientation.
pub struct Session {
    backend: Backend,
    negated: bool,
    dim: usize,
}

enum Backend {
    Function(EvalFn),
    Subprocess(SubprocessSession),
}

impl Session {
    pub fn evaluate(&mut self, x: &[f64]) -> Result<f64, EvalError> {
        if x.len() != self.dim {
            return Err(EvalError::Dimension {
                expected: self.dim,
                found: x.len(),
            });
        }
        let v = match &mut self.backend {
            Backend::Function(f) => f(x),
            Backend::Subprocess(s) => s.evaluate(x)?,
        };
        if !v.is_finite() {
            return Err(EvalError::NonFinite(v));
        }
        Ok(if self.negated { -v } else { v })
    }
}

#[derive(Serialize)]
struct Request<'a> {
    x: &'a [f64],
}

#[derive(Deserialize)]
struct Response {
    y: f64,
}

/// Encodes one request line, newline included.
pub fn encode_request(x: &[f64]) -> String {
    let mut s = serde_json::to_string(&Request { x }).expect("f64 slices serialize");
    s.push('\n');
    s
}

/// Decodes one response line. Unknown fields are ignored.
pub fn decode_response(line: &str) -> Result<f64, EvalError> {
    serde_json::from_str::<Response>(line.trim_end_matches(['\n', '\r']))
        .map(|r| r.y)
        .map_err(|e| EvalError::Malformed {
            line: line.to_string(),
            reason: e.to_string(),
        })
}

struct Running {
    child: Child,
    stdin: ChildStdin,
    lines: Receiver<std::io::Result<String>>,
    stderr: JoinHandle<String>,
}

struct SubprocessSession {
    spec: SubprocessSpec,
    running: Option<Running>,
}

impl SubprocessSession {
    fn new(spec: SubprocessSpec) -> Self {
        Self {
            spec,
            running: None,
        }
    }

    fn spawn(&self) -> Result<Running, EvalError> {
        let mut child = Command::new("sh")
            .arg("-c")
            .arg(&self.spec.command)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::piped())
            .spawn()
            .map_err(|source| EvalError::Spawn {
                command: self.spec.command.clone(),
                source,
            })?;
        let stdin = child.stdin.take().expect("stdin piped");
        let stdout = child.stdout.take().expect("stdout piped");
        let mut stderr_pipe = child.stderr.take().expect("stderr piped");

        let (tx, lines) = mpsc::channel();
        thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                if tx.send(line).is_err() {
                    break;
                }
            }
        });
        let stderr = thread::spawn(move || {
            let mut buf = Vec::new();
            let _ = stderr_pipe.read_to_end(&mut buf);
            String::from_utf8_lossy(&buf).into_owned()
        });
        Ok(Running {
            child,
            stdin,
            lines,
            stderr,
        })
    }

    fn exit_error(mut running: Running) -> EvalError {
        let status = running
            .child
            .wait()
            .map(|s: ExitStatus| s.to_string())
            .unwrap_or_else(|e| e.to_string());
        let stderr = running
            .stderr
            .join()
            .map(|s| s.trim().to_string())
            .unwrap_or_default();
        EvalError::Exited { status, stderr }
    }

    fn evaluate(&mut self, x: &[f64]) -> Result<f64, EvalError> {
        let mut running = match self.running.take() {
            Some(r) => r,
            None => self.spawn()?,
        };
        if running
            .stdin
            .write_all(encode_request(x).as_bytes())
            .and_then(|_| running.stdin.flush())
            .is_err()
        {
            return Err(Self::exit_error(running));
        }
        match running.lines.recv_timeout(self.spec.timeout) {
            Ok(Ok(line)) => {
                let y = decode_response(&line);
                if y.is_ok() {
                    self.running = Some(running);
                } else {
                    let _ = running.child.kill();
                    let _ = running.child.wait();
                }
                y
            }
            Ok(Err(e)) => {
                let _ = running.child.kill();
                let _ = running.child.wait();
                Err(EvalError::Io(e))
            }
            Err(RecvTimeoutError::Timeout) => {
                let _ = running.child.kill();
                let _ = running.child.wait();
                Err(EvalError::Timeout(self.spec.timeout))
            }
            Err(RecvTimeoutError::Disconnected) => Err(Self::exit_error(running)),
        }
    }
}

impl Drop for SubprocessSession {
    fn drop(&mut self) {
        if let Some(mut r) = self.running.take() {
            drop(r.stdin);
            // give a well-behaved child a moment to exit on EOF
            for _ in 0..10 {
                if let Ok(Some(_)) = r.child.try_wait() {
                    return;
                }
                thread::sleep(Duration::from_millis(5));
            }
            let _ = r.child.kill();
            let _ = r.child.wait();
        }
    }
}

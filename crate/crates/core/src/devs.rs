//! A small DEVS kernel.
//!
//! Atomic models expose a phase, a time advance `sigma`, an output function
//! and the internal, external and confluent transitions. [`coordinate`]
//! runs the classic cycle: find the imminent models, collect their outputs,
//! route them along the coupling, then apply the transitions. Transitions of
//! distinct models at one virtual time are independent, so they are handed
//! to an [`Executor`] as a batch; the event log does not depend on how the
//! batch is run.

use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

/// Virtual time; `f64::INFINITY` means passive.
pub type Time = f64;

pub trait AtomicModel: Send {
    type Message: Clone + Send;

    fn name(&self) -> String;
    fn phase(&self) -> &str;
    fn sigma(&self) -> Time;
    fn input_ports(&self) -> usize;
    fn output_ports(&self) -> usize;
    /// λ: messages emitted on output ports right before the internal transition.
    fn output(&self) -> Vec<(usize, Self::Message)>;
    fn delta_int(&mut self);
    /// `elapsed` is the time since the last transition.
    fn delta_ext(&mut self, elapsed: Time, inputs: Vec<(usize, Self::Message)>);
    fn delta_con(&mut self, inputs: Vec<(usize, Self::Message)>) {
        self.delta_int();
        self.delta_ext(0.0, inputs);
    }
}

/// `(model, port)`.
pub type Endpoint = (usize, usize);

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Coupling {
    pub connections: Vec<(Endpoint, Endpoint)>,
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum DevsError {
    #[error("connection {index}: model {model} does not exist")]
    NoModel { index: usize, model: usize },
    #[error("connection {index}: model {model} has no port {port}")]
    NoPort { index: usize, model: usize, port: usize },
    #[error("connection {index}: model {model} is connected to itself")]
    SelfLoop { index: usize, model: usize },
    #[error("model {model} ({name}) set sigma to {sigma}")]
    BadSigma { model: usize, name: String, sigma: Time },
    #[error("stopped after {0} steps with models still active")]
    StepLimit(usize),
}

impl Coupling {
    pub fn validate<A: AtomicModel>(&self, models: &[A]) -> Result<(), DevsError> {
        for (index, &((sm, sp), (dm, dp))) in self.connections.iter().enumerate() {
            for model in [sm, dm] {
                if model >= models.len() {
                    return Err(DevsError::NoModel { index, model });
                }
            }
            if sm == dm {
                return Err(DevsError::SelfLoop { index, model: sm });
            }
            if sp >= models[sm].output_ports() {
                return Err(DevsError::NoPort { index, model: sm, port: sp });
            }
            if dp >= models[dm].input_ports() {
                return Err(DevsError::NoPort { index, model: dm, port: dp });
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EventKind {
    Output,
    Internal,
    External,
    Confluent,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LogEntry {
    pub time: Time,
    pub model: usize,
    pub kind: EventKind,
}

/// Per step: outputs of imminent models by id, then their internal or
/// confluent transitions by id, then external transitions by id.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct EventLog {
    pub entries: Vec<LogEntry>,
}

pub type Task<'a> = Box<dyn FnOnce() + Send + 'a>;

/// Runs a batch of independent tasks and returns when all are done.
pub trait Executor {
    fn run_all<'a>(&self, tasks: Vec<Task<'a>>);
}

/// Runs tasks one after another on the calling thread.
#[derive(Clone, Copy, Debug, Default)]
pub struct Sequential;

impl Executor for Sequential {
    fn run_all<'a>(&self, tasks: Vec<Task<'a>>) {
        for task in tasks {
            task();
        }
    }
}

enum Transition<M> {
    Internal,
    External(Vec<(usize, M)>),
    Confluent(Vec<(usize, M)>),
}

fn check_sigma<A: AtomicModel>(model: &A, id: usize) -> Result<Time, DevsError> {
    let sigma = model.sigma();
    if sigma.is_nan() || sigma < 0.0 {
        return Err(DevsError::BadSigma { model: id, name: model.name(), sigma });
    }
    Ok(sigma)
}

/// Simulates until every model is passive, or fails after `max_steps`
/// virtual-time steps.
pub fn coordinate<A: AtomicModel>(
    models: &mut [A],
    coupling: &Coupling,
    executor: &dyn Executor,
    max_steps: usize,
) -> Result<EventLog, DevsError> {
    coupling.validate(models)?;
    let mut log = EventLog::default();
    let mut last = vec![0.0; models.len()];
    let mut next = Vec::with_capacity(models.len());
    for (id, m) in models.iter().enumerate() {
        next.push(check_sigma(m, id)?);
    }

    for _ in 0..max_steps {
        let now = next.iter().copied().fold(Time::INFINITY, Time::min);
        if now == Time::INFINITY {
            return Ok(log);
        }
        let imminent: Vec<bool> = next.iter().map(|&t| t == now).collect();

        let mut inbox: Vec<Vec<(usize, A::Message)>> = (0..models.len()).map(|_| Vec::new()).collect();
        for (id, m) in models.iter().enumerate().filter(|(id, _)| imminent[*id]) {
            log.entries.push(LogEntry { time: now, model: id, kind: EventKind::Output });
            for (port, msg) in m.output() {
                for &(_, (dm, dp)) in coupling.connections.iter().filter(|(src, _)| *src == (id, port)) {
                    inbox[dm].push((dp, msg.clone()));
                }
            }
        }

        let mut work: Vec<(usize, Transition<A::Message>)> = Vec::new();
        for (id, inputs) in inbox.into_iter().enumerate() {
            let t = match (imminent[id], inputs.is_empty()) {
                (true, true) => Transition::Internal,
                (true, false) => Transition::Confluent(inputs),
                (false, false) => Transition::External(inputs),
                (false, true) => continue,
            };
            work.push((id, t));
        }
        work.sort_by_key(|(id, t)| (matches!(t, Transition::External(_)), *id));
        for (id, t) in &work {
            let kind = match t {
                Transition::Internal => EventKind::Internal,
                Transition::External(_) => EventKind::External,
                Transition::Confluent(_) => EventKind::Confluent,
            };
            log.entries.push(LogEntry { time: now, model: *id, kind });
        }

        let touched: Vec<usize> = work.iter().map(|(id, _)| *id).collect();
        let mut slots: Vec<Option<Transition<A::Message>>> = (0..models.len()).map(|_| None).collect();
        for (id, t) in work {
            slots[id] = Some(t);
        }
        let tasks: Vec<Task<'_>> = models
            .iter_mut()
            .zip(slots)
            .enumerate()
            .filter_map(|(id, (m, t))| {
                let t = t?;
                let elapsed = now - last[id];
                Some(Box::new(move || match t {
                    Transition::Internal => m.delta_int(),
                    Transition::External(inputs) => m.delta_ext(elapsed, inputs),
                    Transition::Confluent(inputs) => m.delta_con(inputs),
                }) as Task<'_>)
            })
            .collect();
        executor.run_all(tasks);

        for id in touched {
            last[id] = now;
            next[id] = now + check_sigma(&models[id], id)?;
        }
    }
    if next.iter().all(|t| *t == Time::INFINITY) {
        Ok(log)
    } else {
        Err(DevsError::StepLimit(max_steps))
    }
}

//! Guidance sessions shared by the network front end.
//!
//! Each session owns a robot model, its base pose in the world, the guidance
//! state and a simulated controller. Every operation on a session holds that
//! session's lock for its whole duration, so state snapshots never show a
//! half-applied update.

use std::collections::HashMap;
use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex, RwLock};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cloud::PointCloud;
use crate::guidance::{session_step, GuidanceConfig, GuidanceError, GuidanceState, HandSample};
use crate::model::{load_model, to_document, ModelError, RigidTransform, RobotModel};
use crate::registration::{register_pipeline, Method, Preset, RegistrationError, RegistrationResult};
use crate::simcontrol::{
    controller_tick, ControllerState, MotionLimits, SimError, DEFAULT_MAX_ACCELERATION, DEFAULT_TICK,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SessionId(pub u64);

impl fmt::Display for SessionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("no session {0}")]
    NotFound(SessionId),
    #[error("base pose is not set")]
    BasePoseUnset,
    #[error("session {0} already has an active hand stream")]
    StreamBusy(SessionId),
    #[error("scene cloud is empty")]
    EmptyScene,
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Guidance(#[from] GuidanceError),
    #[error("registration failed: {0}")]
    Registration(#[from] RegistrationError),
    #[error(transparent)]
    Sim(#[from] SimError),
}

/// Coordinate frame of incoming hand samples.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Frame {
    #[default]
    World,
    Base,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PoseSource {
    Manual,
    Registered,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BasePose {
    pub transform: RigidTransform,
    pub source: PoseSource,
}

/// Robot state as sent to clients after every sample and on request.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateMessage {
    pub session: SessionId,
    /// Time of the last processed sample, seconds.
    pub t: Option<f64>,
    pub q: Vec<f64>,
    pub qdot: Vec<f64>,
    /// Commanded configuration the controller is moving toward.
    pub target: Vec<f64>,
    pub active_zone: Option<usize>,
    /// Residual left by the most recent guidance update, meters.
    pub residual: f64,
    pub sensitivity: f64,
    pub base_pose: Option<BasePose>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SessionSettings {
    pub guidance: GuidanceConfig,
    pub max_acceleration: f64,
    /// Controller tick used to catch up to each sample's timestamp.
    pub dt: f64,
}

impl Default for SessionSettings {
    fn default() -> Self {
        SessionSettings {
            guidance: GuidanceConfig::default(),
            max_acceleration: DEFAULT_MAX_ACCELERATION,
            dt: DEFAULT_TICK,
        }
    }
}

#[derive(Debug)]
struct Session {
    id: SessionId,
    model: RobotModel,
    base_pose: Option<BasePose>,
    guidance: GuidanceState,
    arm: ControllerState,
    limits: MotionLimits,
    settings: SessionSettings,
    residual: f64,
    streaming: bool,
}

impl Session {
    fn new(id: SessionId, model: RobotModel, settings: SessionSettings) -> Result<Self, ServiceError> {
        settings.guidance.validate()?;
        let limits = MotionLimits::from_model(&model, settings.max_acceleration);
        limits.validate()?;
        let q = model.zero_configuration();
        Ok(Session {
            id,
            guidance: GuidanceState::new(q.clone()),
            arm: ControllerState::at_rest(q.0),
            limits,
            model,
            base_pose: None,
            settings,
            residual: 0.0,
            streaming: false,
        })
    }

    fn state(&self) -> StateMessage {
        StateMessage {
            session: self.id,
            t: self.guidance.last_t,
            q: self.arm.position.clone(),
            qdot: self.arm.velocity.clone(),
            target: self.arm.target.clone(),
            active_zone: self.guidance.mode.zone(),
            residual: self.residual,
            sensitivity: self.settings.guidance.sensitivity,
            base_pose: self.base_pose,
        }
    }

    /// Runs the controller from the last sample time up to `t`.
    fn advance_to(&mut self, t: f64) {
        let Some(mut now) = self.guidance.last_t else {
            return;
        };
        let dt = self.settings.dt;
        while now < t {
            let step = dt.min(t - now);
            self.arm = controller_tick(&self.arm, &self.limits, step);
            now += step;
        }
    }

    fn hand(&mut self, sample: &HandSample, frame: Frame) -> Result<StateMessage, ServiceError> {
        let base = self.base_pose.ok_or(ServiceError::BasePoseUnset)?;
        let mut local = *sample;
        if frame == Frame::World {
            local.position = base.transform.inverse().transform_point(&sample.position);
        }
        // The sample's time order is checked here, before the controller moves.
        let (next, update) = session_step(&self.guidance, &self.model, &local, &self.settings.guidance)?;
        self.arm.target = next.q.0.clone();
        self.advance_to(sample.t);
        self.guidance = next;
        self.residual = update.map_or(0.0, |u| u.residual.norm());
        Ok(self.state())
    }
}

/// All live sessions.
#[derive(Debug, Default)]
pub struct SessionManager {
    sessions: RwLock<HashMap<SessionId, Arc<Mutex<Session>>>>,
    next_id: AtomicU64,
    settings: SessionSettings,
}

/// Marks a session's hand stream as taken until dropped.
#[derive(Debug)]
pub struct StreamLease {
    session: Arc<Mutex<Session>>,
    pub id: SessionId,
}

impl Drop for StreamLease {
    fn drop(&mut self) {
        lock(&self.session).streaming = false;
    }
}

fn lock(session: &Mutex<Session>) -> std::sync::MutexGuard<'_, Session> {
    session.lock().unwrap_or_else(|poisoned| poisoned.into_inner())
}

impl SessionManager {
    pub fn new(settings: SessionSettings) -> Self {
        SessionManager {
            settings,
            ..SessionManager::default()
        }
    }

    fn get(&self, id: SessionId) -> Result<Arc<Mutex<Session>>, ServiceError> {
        let sessions = self.sessions.read().unwrap_or_else(|p| p.into_inner());
        sessions.get(&id).cloned().ok_or(ServiceError::NotFound(id))
    }

    fn with<T>(&self, id: SessionId, f: impl FnOnce(&mut Session) -> Result<T, ServiceError>) -> Result<T, ServiceError> {
        let session = self.get(id)?;
        let mut guard = lock(&session);
        f(&mut guard)
    }

    /// Starts a session from a robot description document.
    pub fn create(&self, model_document: &str) -> Result<StateMessage, ServiceError> {
        let model = load_model(model_document)?;
        let id = SessionId(self.next_id.fetch_add(1, Ordering::Relaxed) + 1);
        let session = Session::new(id, model, self.settings.clone())?;
        let state = session.state();
        self.sessions
            .write()
            .unwrap_or_else(|p| p.into_inner())
            .insert(id, Arc::new(Mutex::new(session)));
        Ok(state)
    }

    pub fn remove(&self, id: SessionId) -> Result<(), ServiceError> {
        let mut sessions = self.sessions.write().unwrap_or_else(|p| p.into_inner());
        sessions.remove(&id).map(|_| ()).ok_or(ServiceError::NotFound(id))
    }

    pub fn ids(&self) -> Vec<SessionId> {
        let sessions = self.sessions.read().unwrap_or_else(|p| p.into_inner());
        let mut ids: Vec<SessionId> = sessions.keys().copied().collect();
        ids.sort();
        ids
    }

    /// Replaces the session's model; guidance and controller restart at zero.
    pub fn upload_model(&self, id: SessionId, model_document: &str) -> Result<StateMessage, ServiceError> {
        let model = load_model(model_document)?;
        self.with(id, |s| {
            let mut fresh = Session::new(id, model, s.settings.clone())?;
            fresh.base_pose = s.base_pose;
            fresh.streaming = s.streaming;
            *s = fresh;
            Ok(s.state())
        })
    }

    pub fn model_document(&self, id: SessionId) -> Result<String, ServiceError> {
        self.with(id, |s| Ok(to_document(&s.model)))
    }

    pub fn model(&self, id: SessionId) -> Result<RobotModel, ServiceError> {
        self.with(id, |s| Ok(s.model.clone()))
    }

    pub fn state(&self, id: SessionId) -> Result<StateMessage, ServiceError> {
        self.with(id, |s| Ok(s.state()))
    }

    pub fn set_base_pose(&self, id: SessionId, transform: RigidTransform) -> Result<StateMessage, ServiceError> {
        self.with(id, |s| {
            s.base_pose = Some(BasePose {
                transform,
                source: PoseSource::Manual,
            });
            Ok(s.state())
        })
    }

    /// Registers the robot, at its current configuration, into `scene` and
    /// adopts the result as the base pose.
    pub fn register(
        &self,
        id: SessionId,
        seed_pose: &RigidTransform,
        scene: &PointCloud,
        method: Method,
        preset: Preset,
    ) -> Result<RegistrationResult, ServiceError> {
        if scene.is_empty() {
            return Err(ServiceError::EmptyScene);
        }
        self.with(id, |s| {
            let result = register_pipeline(scene, &s.model, &s.arm.position, seed_pose, method, preset)?;
            s.base_pose = Some(BasePose {
                transform: result.transform,
                source: PoseSource::Registered,
            });
            Ok(result)
        })
    }

    pub fn set_sensitivity(&self, id: SessionId, sensitivity: f64) -> Result<GuidanceConfig, ServiceError> {
        self.with(id, |s| {
            let config = s.settings.guidance.with_sensitivity(sensitivity);
            config.validate()?;
            s.settings.guidance = config;
            Ok(config)
        })
    }

    pub fn set_guidance(&self, id: SessionId, config: GuidanceConfig) -> Result<GuidanceConfig, ServiceError> {
        config.validate()?;
        self.with(id, |s| {
            s.settings.guidance = config;
            Ok(config)
        })
    }

    pub fn guidance(&self, id: SessionId) -> Result<GuidanceConfig, ServiceError> {
        self.with(id, |s| Ok(s.settings.guidance))
    }

    /// Processes one hand sample: guidance first, then the controller is
    /// advanced to the sample's timestamp toward the new command.
    pub fn stream_hand(&self, id: SessionId, sample: &HandSample, frame: Frame) -> Result<StateMessage, ServiceError> {
        self.with(id, |s| s.hand(sample, frame))
    }

    /// Claims the session's single hand stream.
    pub fn open_stream(&self, id: SessionId) -> Result<StreamLease, ServiceError> {
        let session = self.get(id)?;
        {
            let mut guard = lock(&session);
            if guard.streaming {
                return Err(ServiceError::StreamBusy(id));
            }
            guard.streaming = true;
        }
        Ok(StreamLease { session, id })
    }
}

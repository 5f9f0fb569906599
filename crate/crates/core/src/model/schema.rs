//! JSON robot description: `name`, `links[]`, `joints[]`.

use std::collections::HashSet;

use nalgebra::{Unit, Vector3};
use serde::{Deserialize, Serialize};

use super::{Collision, JointLimits, JointSpec, LinkSpec, ModelError, Origin, RobotModel, Shape};

#[derive(Debug, Serialize, Deserialize)]
struct ModelDoc {
    name: String,
    links: Vec<LinkDoc>,
    joints: Vec<JointDoc>,
}

#[derive(Debug, Serialize, Deserialize)]
struct LinkDoc {
    name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    collision: Option<CollisionDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    visual: Option<String>,
}

#[derive(Debug, Serialize, Deserialize)]
struct CollisionDoc {
    #[serde(flatten)]
    shape: Shape,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    origin: Option<Origin>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct JointDoc {
    name: String,
    #[serde(default = "revolute", rename = "type")]
    kind: String,
    parent: String,
    child: String,
    #[serde(default)]
    origin: Origin,
    axis: [f64; 3],
    #[serde(default)]
    limits: JointLimits,
}

fn revolute() -> String {
    "revolute".into()
}

fn invalid(item: impl Into<String>, msg: impl Into<String>) -> ModelError {
    ModelError::Invalid {
        item: item.into(),
        msg: msg.into(),
    }
}

/// Parses and validates a robot description document.
pub fn load_model(text: &str) -> Result<RobotModel, ModelError> {
    let doc: ModelDoc = serde_json::from_str(text).map_err(|e| ModelError::Parse {
        line: e.line(),
        column: e.column(),
        msg: e.to_string(),
    })?;
    build(doc)
}

fn build(doc: ModelDoc) -> Result<RobotModel, ModelError> {
    if doc.joints.is_empty() {
        return Err(invalid("model", "needs at least one joint"));
    }
    let mut names = HashSet::new();
    for link in &doc.links {
        if !names.insert(link.name.as_str()) {
            return Err(invalid(format!("link '{}'", link.name), "duplicate link name"));
        }
    }
    let mut joint_names = HashSet::new();
    let mut parents = HashSet::new();
    let children: HashSet<&str> = doc.joints.iter().map(|j| j.child.as_str()).collect();
    for (k, j) in doc.joints.iter().enumerate() {
        let item = || format!("joint '{}'", j.name);
        if !joint_names.insert(j.name.as_str()) {
            return Err(invalid(item(), "duplicate joint name"));
        }
        if j.kind != "revolute" {
            return Err(invalid(item(), format!("unsupported joint type '{}'", j.kind)));
        }
        for link in [&j.parent, &j.child] {
            if !names.contains(link.as_str()) {
                return Err(invalid(item(), format!("references unknown link '{link}'")));
            }
        }
        if !parents.insert(j.parent.as_str()) {
            return Err(invalid(
                item(),
                format!("link '{}' already has a child joint (branching chains are not supported)", j.parent),
            ));
        }
        if k == 0 {
            if children.contains(j.parent.as_str()) {
                return Err(invalid(item(), "first joint's parent must be the base link"));
            }
        } else if j.parent != doc.joints[k - 1].child {
            return Err(invalid(
                item(),
                format!(
                    "parent '{}' is not the previous joint's child '{}'",
                    j.parent,
                    doc.joints[k - 1].child
                ),
            ));
        }
        let axis = Vector3::from(j.axis);
        if !axis.iter().all(|c| c.is_finite()) || axis.norm() < 1e-9 {
            return Err(invalid(item(), format!("axis {:?} has no direction", j.axis)));
        }
        let l = &j.limits;
        if !(l.lower.is_finite() && l.upper.is_finite() && l.lower <= l.upper) {
            return Err(invalid(item(), format!("limits [{}, {}] are not ordered", l.lower, l.upper)));
        }
        if !(l.max_velocity.is_finite() && l.max_velocity > 0.0) {
            return Err(invalid(item(), "velocity limit must be positive"));
        }
        if !j.origin.xyz.iter().chain(&j.origin.rpy).all(|c| c.is_finite()) {
            return Err(invalid(item(), "origin is not finite"));
        }
    }
    if doc.links.len() != doc.joints.len() + 1 {
        return Err(invalid(
            "model",
            format!(
                "{} links for {} joints; every link must lie on the single chain",
                doc.links.len(),
                doc.joints.len()
            ),
        ));
    }

    let find_link = |name: &str| doc.links.iter().find(|l| l.name == name).unwrap();
    let mut chain = vec![find_link(&doc.joints[0].parent)];
    chain.extend(doc.joints.iter().map(|j| find_link(&j.child)));

    let links = chain
        .into_iter()
        .map(|l| {
            let collision = match &l.collision {
                Some(c) => {
                    c.shape
                        .validate()
                        .map_err(|msg| invalid(format!("link '{}'", l.name), msg))?;
                    Some(Collision::new(c.shape.clone(), c.origin.unwrap_or_default()))
                }
                None => None,
            };
            Ok(LinkSpec {
                name: l.name.clone(),
                collision,
                visual: l.visual.clone(),
            })
        })
        .collect::<Result<Vec<_>, ModelError>>()?;

    let joints = doc
        .joints
        .into_iter()
        .map(|j| JointSpec {
            origin_transform: j.origin.transform(),
            axis: Unit::new_normalize(Vector3::from(j.axis)),
            name: j.name,
            parent_link: j.parent,
            child_link: j.child,
            origin: j.origin,
            limits: j.limits,
        })
        .collect();

    Ok(RobotModel {
        name: doc.name,
        joints,
        links,
    })
}

/// Serializes a model back into its description document.
pub fn to_document(model: &RobotModel) -> String {
    let doc = ModelDoc {
        name: model.name.clone(),
        links: model
            .links
            .iter()
            .map(|l| LinkDoc {
                name: l.name.clone(),
                collision: l.collision.as_ref().map(|c| CollisionDoc {
                    shape: c.shape.clone(),
                    origin: (!c.origin.is_identity()).then_some(c.origin),
                }),
                visual: l.visual.clone(),
            })
            .collect(),
        joints: model
            .joints
            .iter()
            .map(|j| JointDoc {
                name: j.name.clone(),
                kind: revolute(),
                parent: j.parent_link.clone(),
                child: j.child_link.clone(),
                origin: j.origin,
                axis: j.axis.into_inner().into(),
                limits: j.limits,
            })
            .collect(),
    };
    serde_json::to_string_pretty(&doc).expect("model documents always serialize")
}

/// Bundled sample robots.
pub mod samples {
    use std::f64::consts::PI;

    use nalgebra::{Unit, Vector3};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::load_model;
    use crate::model::{Collision, JointLimits, JointSpec, LinkSpec, Origin, RobotModel, Shape};

    pub const KR5_LIKE: &str = include_str!("../../data/kr5_like.json");
    pub const SEVEN_JOINT: &str = include_str!("../../data/seven_joint.json");
    pub const PLANAR_TWO_LINK: &str = include_str!("../../data/planar_two_link.json");

    /// Desk-scale six-joint industrial arm with a KR-5-like layout.
    pub fn kr5_like() -> RobotModel {
        load_model(KR5_LIKE).expect("bundled model is valid")
    }

    /// Seven-joint redundant arm.
    pub fn seven_joint() -> RobotModel {
        load_model(SEVEN_JOINT).expect("bundled model is valid")
    }

    /// Two z-axis joints at x = 0 and x = 1, links 1 m long.
    pub fn planar_two_link() -> RobotModel {
        load_model(PLANAR_TWO_LINK).expect("bundled model is valid")
    }

    /// Serial chain with random joint offsets, axes and limits, and a box on
    /// every link. Same seed, same chain.
    pub fn random_chain(joint_count: usize, seed: u64) -> RobotModel {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let unit = |rng: &mut ChaCha8Rng| loop {
            let v = Vector3::new(
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
            );
            let n = v.norm();
            if n > 0.1 && n <= 1.0 {
                break Unit::new_normalize(v);
            }
        };
        let mut links = Vec::with_capacity(joint_count + 1);
        let mut joints = Vec::with_capacity(joint_count);
        for k in 0..=joint_count {
            let half = [(); 3].map(|_| rng.random_range(0.03..0.12));
            let collision = Collision::new(
                Shape::Box { half_extents: half },
                Origin {
                    xyz: [0.0, 0.0, rng.random_range(0.05..0.15)],
                    rpy: [0.0; 3],
                },
            );
            links.push(LinkSpec {
                name: format!("link{k}"),
                collision: Some(collision),
                visual: None,
            });
        }
        for k in 0..joint_count {
            let origin = Origin {
                xyz: [
                    rng.random_range(-0.15..0.15),
                    rng.random_range(-0.15..0.15),
                    rng.random_range(0.1..0.3),
                ],
                rpy: [(); 3].map(|_| rng.random_range(-PI..PI)),
            };
            let limits = JointLimits {
                lower: rng.random_range(-3.0..-0.3),
                upper: rng.random_range(0.3..3.0),
                max_velocity: rng.random_range(0.5..3.0),
            };
            joints.push(JointSpec {
                name: format!("joint{k}"),
                parent_link: links[k].name.clone(),
                child_link: links[k + 1].name.clone(),
                origin_transform: origin.transform(),
                origin,
                axis: unit(&mut rng),
                limits,
            });
        }
        RobotModel {
            name: format!("random-{joint_count}-{seed}"),
            joints,
            links,
        }
    }
}

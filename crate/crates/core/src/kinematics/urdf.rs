use std::collections::HashMap;
use std::path::Path;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::KinematicsError;
use crate::geometry::RigidTransform;

use super::{ArmChain, Joint, JointKind, Link, LinkVisual, RobotModel};

/// Names tying the URDF to the trajectory layout: base link, per-arm mount
/// and end-effector links, and the ordered actuated joint lists.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RobotConfig {
    pub base_link: String,
    pub left: ArmConfig,
    pub right: ArmConfig,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ArmConfig {
    pub mount_link: String,
    pub ee_link: String,
    pub joints: Vec<String>,
    #[serde(default)]
    pub gripper_joints: Vec<String>,
}

impl RobotConfig {
    pub fn load(path: &Path) -> Result<Self, KinematicsError> {
        let text = std::fs::read_to_string(path).map_err(|e| KinematicsError::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        serde_json::from_str(&text)
            .map_err(|e| KinematicsError::Parse(format!("{}: {e}", path.display())))
    }

    pub fn save(&self, path: &Path) -> Result<(), KinematicsError> {
        let text = serde_json::to_string_pretty(self).expect("config serializes");
        std::fs::write(path, text).map_err(|e| KinematicsError::Io {
            path: path.to_path_buf(),
            source: e,
        })
    }
}

/// Parse a URDF-subset document and validate it against the robot config.
/// Mesh paths resolve relative to `base_dir`. Unsupported URDF elements
/// (transmission, gazebo, mimic) are skipped with a warning.
pub fn load_robot_model(
    urdf_xml: &str,
    config: &RobotConfig,
    base_dir: &Path,
) -> Result<RobotModel, KinematicsError> {
    let doc = roxmltree::Document::parse(urdf_xml)
        .map_err(|e| KinematicsError::Parse(format!("XML: {e}")))?;
    let robot = doc
        .root_element()
        .has_tag_name("robot")
        .then(|| doc.root_element())
        .ok_or_else(|| KinematicsError::Parse("root element is not <robot>".into()))?;

    let mut links: Vec<Link> = Vec::new();
    let mut joints: Vec<Joint> = Vec::new();
    let mut link_index: HashMap<String, usize> = HashMap::new();
    // joints parsed before links may reference them; two passes
    for node in robot.children().filter(|n| n.is_element()) {
        match node.tag_name().name() {
            "link" => {
                let name = req_attr(&node, "name")?.to_string();
                let visual = parse_visual(&node, base_dir)?;
                link_index.insert(name.clone(), links.len());
                links.push(Link { name, visual });
            }
            "joint" => {}
            other @ ("transmission" | "gazebo" | "mimic" | "material") => {
                log::warn!("ignoring unsupported URDF element <{other}>");
            }
            other => {
                log::warn!("ignoring unknown URDF element <{other}>");
            }
        }
    }
    for node in robot.children().filter(|n| n.is_element()) {
        if node.tag_name().name() != "joint" {
            continue;
        }
        joints.push(parse_joint(&node, &link_index)?);
    }

    let base_link = *link_index
        .get(&config.base_link)
        .ok_or_else(|| KinematicsError::UnknownLink(config.base_link.clone()))?;

    validate_tree(&links, &joints, base_link)?;

    let left = build_arm_chain(&links, &joints, &link_index, base_link, &config.left, "L")?;
    let right = build_arm_chain(&links, &joints, &link_index, base_link, &config.right, "R")?;

    Ok(RobotModel::build(links, joints, base_link, left, right))
}

fn req_attr<'a>(node: &'a roxmltree::Node, attr: &str) -> Result<&'a str, KinematicsError> {
    node.attribute(attr).ok_or_else(|| {
        KinematicsError::Parse(format!(
            "<{}> missing attribute '{attr}' (line {})",
            node.tag_name().name(),
            node.document().text_pos_at(node.range().start).row
        ))
    })
}

fn parse_vec3(s: &str, what: &str) -> Result<Vector3<f64>, KinematicsError> {
    let vals: Vec<f64> = s
        .split_whitespace()
        .map(|t| t.parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|e| KinematicsError::Parse(format!("bad {what} '{s}': {e}")))?;
    if vals.len() != 3 {
        return Err(KinematicsError::Parse(format!(
            "{what} must have 3 components, got '{s}'"
        )));
    }
    Ok(Vector3::new(vals[0], vals[1], vals[2]))
}

fn parse_origin(node: &roxmltree::Node) -> Result<RigidTransform, KinematicsError> {
    let Some(origin) = node.children().find(|n| n.has_tag_name("origin")) else {
        return Ok(RigidTransform::identity());
    };
    let xyz = match origin.attribute("xyz") {
        Some(s) => parse_vec3(s, "origin xyz")?,
        None => Vector3::zeros(),
    };
    let rpy = match origin.attribute("rpy") {
        Some(s) => parse_vec3(s, "origin rpy")?,
        None => Vector3::zeros(),
    };
    Ok(RigidTransform::from_rpy(rpy.x, rpy.y, rpy.z).with_translation(xyz))
}

fn parse_visual(
    node: &roxmltree::Node,
    base_dir: &Path,
) -> Result<Option<LinkVisual>, KinematicsError> {
    let Some(visual) = node.children().find(|n| n.has_tag_name("visual")) else {
        return Ok(None);
    };
    let origin = parse_origin(&visual)?;
    let Some(geometry) = visual.children().find(|n| n.has_tag_name("geometry")) else {
        return Ok(None);
    };
    let Some(mesh) = geometry.children().find(|n| n.has_tag_name("mesh")) else {
        log::warn!("ignoring non-mesh geometry on link {:?}", node.attribute("name"));
        return Ok(None);
    };
    let filename = req_attr(&mesh, "filename")?;
    let mesh_path = base_dir.join(filename);

    let mut color = [0.6, 0.6, 0.6];
    if let Some(material) = visual.children().find(|n| n.has_tag_name("material")) {
        if let Some(c) = material.children().find(|n| n.has_tag_name("color")) {
            if let Some(rgba) = c.attribute("rgba") {
                let vals: Vec<f64> = rgba
                    .split_whitespace()
                    .filter_map(|t| t.parse().ok())
                    .collect();
                if vals.len() >= 3 {
                    color = [vals[0], vals[1], vals[2]];
                }
            }
        }
    }
    Ok(Some(LinkVisual {
        mesh_path,
        origin,
        color,
    }))
}

fn parse_joint(
    node: &roxmltree::Node,
    link_index: &HashMap<String, usize>,
) -> Result<Joint, KinematicsError> {
    let name = req_attr(node, "name")?.to_string();
    let kind = match req_attr(node, "type")? {
        "revolute" | "continuous" => JointKind::Revolute,
        "prismatic" => JointKind::Prismatic,
        "fixed" => JointKind::Fixed,
        other => {
            return Err(KinematicsError::Parse(format!(
                "joint {name}: unsupported type '{other}'"
            )))
        }
    };
    let lookup = |tag: &str| -> Result<usize, KinematicsError> {
        let n = node
            .children()
            .find(|c| c.has_tag_name(tag))
            .ok_or_else(|| KinematicsError::Parse(format!("joint {name}: missing <{tag}>")))?;
        let link = req_attr(&n, "link")?;
        link_index
            .get(link)
            .copied()
            .ok_or_else(|| KinematicsError::DanglingLink {
                link: link.to_string(),
                joint: name.clone(),
            })
    };
    let parent = lookup("parent")?;
    let child = lookup("child")?;
    let origin = parse_origin(node)?;
    let axis = match node.children().find(|c| c.has_tag_name("axis")) {
        Some(a) => parse_vec3(req_attr(&a, "xyz")?, "axis xyz")?.normalize(),
        None => Vector3::z(),
    };
    let limits = node
        .children()
        .find(|c| c.has_tag_name("limit"))
        .and_then(|l| {
            let lo = l.attribute("lower")?.parse::<f64>().ok()?;
            let hi = l.attribute("upper")?.parse::<f64>().ok()?;
            Some((lo, hi))
        });
    if let Some((lo, hi)) = limits {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(KinematicsError::InvertedLimits {
                joint: name,
                lower: lo,
                upper: hi,
            });
        }
    }
    Ok(Joint {
        name,
        kind,
        parent,
        child,
        origin,
        axis,
        limits,
    })
}

/// Single parent per link, no cycles, everything reachable from the base.
fn validate_tree(
    links: &[Link],
    joints: &[Joint],
    base_link: usize,
) -> Result<(), KinematicsError> {
    let mut parent_of: Vec<Option<usize>> = vec![None; links.len()];
    for (ji, j) in joints.iter().enumerate() {
        if let Some(first) = parent_of[j.child] {
            return Err(KinematicsError::MultipleParents {
                child: links[j.child].name.clone(),
                first: joints[first].name.clone(),
                second: j.name.clone(),
            });
        }
        parent_of[j.child] = Some(ji);
    }
    if parent_of[base_link].is_some() {
        let ji = parent_of[base_link].unwrap();
        return Err(KinematicsError::Parse(format!(
            "base link {} has parent joint {}",
            links[base_link].name, joints[ji].name
        )));
    }
    // cycle / reachability check: walk up from every link
    for start in 0..links.len() {
        let mut seen_joints = Vec::new();
        let mut current = start;
        let mut steps = 0;
        while let Some(ji) = parent_of[current] {
            seen_joints.push(joints[ji].name.clone());
            current = joints[ji].parent;
            steps += 1;
            if steps > links.len() {
                return Err(KinematicsError::Cycle {
                    joints: seen_joints,
                });
            }
        }
        if current != base_link {
            return Err(KinematicsError::Parse(format!(
                "link {} is not connected to the base link {}",
                links[start].name, links[base_link].name
            )));
        }
    }
    Ok(())
}

fn build_arm_chain(
    links: &[Link],
    joints: &[Joint],
    link_index: &HashMap<String, usize>,
    base_link: usize,
    cfg: &ArmConfig,
    arm_label: &str,
) -> Result<ArmChain, KinematicsError> {
    let mount_link = *link_index
        .get(&cfg.mount_link)
        .ok_or_else(|| KinematicsError::UnknownLink(cfg.mount_link.clone()))?;
    let ee_link = *link_index
        .get(&cfg.ee_link)
        .ok_or_else(|| KinematicsError::UnknownLink(cfg.ee_link.clone()))?;
    let mut actuated = Vec::with_capacity(cfg.joints.len());
    for jname in &cfg.joints {
        let ji = joints
            .iter()
            .position(|j| &j.name == jname)
            .ok_or_else(|| KinematicsError::UnknownJoint(jname.clone()))?;
        if joints[ji].kind == JointKind::Fixed {
            return Err(KinematicsError::Parse(format!(
                "actuated joint {jname} is declared fixed in the URDF"
            )));
        }
        if joints[ji].limits.is_none() {
            return Err(KinematicsError::MissingLimit {
                joint: jname.clone(),
            });
        }
        actuated.push(ji);
    }
    let mut gripper = Vec::new();
    for jname in &cfg.gripper_joints {
        let ji = joints
            .iter()
            .position(|j| &j.name == jname)
            .ok_or_else(|| KinematicsError::UnknownJoint(jname.clone()))?;
        gripper.push(ji);
    }

    // the actuated joints must all sit on the base->ee path, in order,
    // at or below the mount link
    let mut path = Vec::new();
    let mut parent_of: Vec<Option<usize>> = vec![None; links.len()];
    for (ji, j) in joints.iter().enumerate() {
        parent_of[j.child] = Some(ji);
    }
    let mut current = ee_link;
    while current != base_link {
        let ji = parent_of[current].expect("validated tree");
        path.push(ji);
        current = joints[ji].parent;
    }
    path.reverse();
    for &ji in &actuated {
        if !path.contains(&ji) {
            return Err(KinematicsError::BrokenChain {
                arm: arm_label.to_string(),
                mount: cfg.mount_link.clone(),
                ee: cfg.ee_link.clone(),
                joint: joints[ji].name.clone(),
            });
        }
    }
    let ordered: Vec<usize> = path
        .iter()
        .copied()
        .filter(|ji| actuated.contains(ji))
        .collect();
    if ordered != actuated {
        return Err(KinematicsError::Parse(format!(
            "arm {arm_label}: actuated joint list is not in chain order"
        )));
    }

    Ok(ArmChain {
        mount_link,
        ee_link,
        joints: actuated,
        gripper_joints: gripper,
    })
}

"""Kinematics layer: chains, poses, loader validation."""

import json
import math

import numpy as np
import pytest

from tpo.robot import (
    BasePose,
    DescriptionError,
    GripperState,
    KinematicChain,
    chain_points,
    forward_kinematics,
    integrate_base,
    jacobian,
    load_robot_description,
    rotation_rpy,
    wrap_angle,
)
from tpo.defs import GripperTarget


def planar_two_link():
    # two unit links rotating about z, in the x-y plane
    return KinematicChain(
        name="planar",
        axes=np.array([[0.0, 0.0, 1.0], [0.0, 0.0, 1.0]]),
        offsets=np.array([[1.0, 0.0, 0.0], [1.0, 0.0, 0.0]]),
        base_rot=np.eye(3),
        base_pos=np.zeros(3),
    )


def test_planar_two_link_positions():
    ch = planar_two_link()
    assert np.allclose(forward_kinematics(ch, [0.0, 0.0]), [2.0, 0.0, 0.0])
    assert np.allclose(
        forward_kinematics(ch, [math.pi / 2, 0.0]), [0.0, 2.0, 0.0], atol=1e-15
    )
    assert np.allclose(
        forward_kinematics(ch, [math.pi / 2, -math.pi / 2]), [1.0, 1.0, 0.0],
        atol=1e-15,
    )


def test_planar_two_link_jacobian_at_zero():
    ch = planar_two_link()
    jac = jacobian(ch, [0.0, 0.0])
    assert np.allclose(jac[:, 0], [0.0, 2.0, 0.0], atol=1e-15)
    assert np.allclose(jac[:, 1], [0.0, 1.0, 0.0], atol=1e-15)


def test_single_link_jacobian():
    ch = KinematicChain(
        name="one",
        axes=np.array([[0.0, 0.0, 1.0]]),
        offsets=np.array([[1.0, 0.0, 0.0]]),
        base_rot=np.eye(3),
        base_pos=np.zeros(3),
    )
    assert np.allclose(jacobian(ch, [0.0])[:, 0], [0.0, 1.0, 0.0], atol=1e-15)


def test_chain_points_shape_and_endpoints():
    ch = planar_two_link()
    pts = chain_points(ch, [0.0, 0.0])
    assert pts.shape == (3, 3)
    assert np.allclose(pts[0], [0, 0, 0])
    assert np.allclose(pts[1], [1, 0, 0])
    assert np.allclose(pts[2], [2, 0, 0])


def test_chain_rejects_non_unit_axis():
    with pytest.raises(ValueError):
        KinematicChain(
            name="bad",
            axes=np.array([[0.0, 0.0, 2.0]]),
            offsets=np.array([[1.0, 0.0, 0.0]]),
            base_rot=np.eye(3),
            base_pos=np.zeros(3),
        )


def test_wrap_angle():
    assert wrap_angle(math.pi) == pytest.approx(math.pi)
    assert wrap_angle(-math.pi) == pytest.approx(math.pi)
    assert wrap_angle(3 * math.pi) == pytest.approx(math.pi)
    assert wrap_angle(0.5) == pytest.approx(0.5)


def test_rotation_rpy_matches_axis_composition():
    r = rotation_rpy(0.0, 0.0, math.pi / 2)
    assert np.allclose(r @ [1, 0, 0], [0, 1, 0], atol=1e-15)
    r = rotation_rpy(math.pi / 2, 0.0, 0.0)
    assert np.allclose(r @ [0, 1, 0], [0, 0, 1], atol=1e-15)


def test_base_pose_world_transform_and_integration():
    pose = BasePose(np.array([1.0, 2.0, 0.0]), heading=math.pi / 2)
    p = pose.to_world(np.array([1.0, 0.0, 0.5]))
    assert np.allclose(p, [1.0, 3.0, 0.5], atol=1e-15)
    moved = integrate_base(pose, np.array([0.5, 0.0, 0.0]), 0.1)
    assert np.allclose(moved.position, [1.05, 2.0, 0.0])
    assert moved.heading == pose.heading
    with pytest.raises(ValueError):
        integrate_base(pose, np.zeros(3), 0.0)


def test_gripper_state_validation():
    g = GripperState(aperture=0.1, target=GripperTarget.OPEN,
                     grasp_force=0.0, aperture_max=0.12)
    assert g.aperture == 0.1
    with pytest.raises(ValueError):
        GripperState(aperture=0.2, target=GripperTarget.OPEN,
                     grasp_force=0.0, aperture_max=0.12)
    with pytest.raises(ValueError):
        GripperState(aperture=0.1, target=GripperTarget.OPEN,
                     grasp_force=-1.0, aperture_max=0.12)


def minimal_description(**overrides):
    doc = {
        "arms": [
            {
                "name": "right",
                "links": [{"axis": [0, 0, 1], "offset": [0.2, 0, 0]}],
                "mount": {"position": [0, -0.1, 0.3], "rpy": [0, 0, 0]},
            },
            {
                "name": "left",
                "links": [{"axis": [0, 0, 1], "offset": [0.2, 0, 0]}],
                "mount": {"position": [0, 0.1, 0.3], "rpy": [0, 0, 0]},
            },
        ],
        "gripper": {"aperture_max": 0.1},
        "base": {"footprint_radius": 0.3},
    }
    doc.update(overrides)
    return doc


def test_load_robot_description_roundtrip():
    model = load_robot_description(json.dumps(minimal_description()))
    assert model.right.n == 1 and model.left.n == 1
    assert model.footprint_radius == 0.3
    ee = forward_kinematics(model.right, [0.0])
    assert np.allclose(ee, [0.2, -0.1, 0.3])


def test_load_robot_description_requires_both_arms():
    doc = minimal_description()
    doc["arms"] = doc["arms"][:1]
    with pytest.raises(DescriptionError):
        load_robot_description(json.dumps(doc))


def test_load_robot_description_rejects_bad_axis():
    doc = minimal_description()
    doc["arms"][0]["links"][0]["axis"] = [0, 0, 0]
    with pytest.raises(DescriptionError):
        load_robot_description(json.dumps(doc))


def test_packaged_robot_is_loadable_and_sane():
    from tpo.config import read_data_text

    model = load_robot_description(read_data_text("robots/centauro_surrogate.json"))
    assert model.right.n == 6 and model.left.n == 6
    home = model.home_q("right")
    ee = forward_kinematics(model.right, home)
    # folded home keeps the arm up and forward of the chest
    assert 0.3 < ee[0] < 0.6
    assert 0.5 < ee[2] < 0.8

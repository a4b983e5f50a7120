"""Grasp planning, conformance simulation, and three-grasp pose estimation."""

__version__ = "0.1.0"

from .conformance import (AdmittanceParams, ConformanceResult, ContactModel,
                          admittance_step, conform_grasp, reaction_wrench,
                          settle_flat_contact)
from .errors import (AngleNearPi, NoPairsFound, NotConverged, NoValidTriplet,
                     PlanNotFound, SingularTriplet, TrigraspError)
from .estimator import (ErrorParams, EstimationResult, GraspRecord,
                        allowed_translation_direction, estimate_pose,
                        ideal_pose_from_grasp, identify_rotation_error)
from .experiment import (TrialConfig, TrialReport, apply_pose_error,
                         inject_truth, recover_pose_error, run_experiment,
                         synthesize_conformed_grasps)
from .geometry import (Pose, Ray, TriMesh, compose, exp_so3, invert, log_so3,
                       ray_mesh_intersect, relative)
from .gripper import GripperModel
from .meshio import load_mesh
from .planner import (ContactPair, GraspCandidate, check_gripper_collision,
                      expand_pair_to_grasps, plan_grasps,
                      sample_antipodal_pairs)
from .sequencer import (ArmModel, RegraspPlan, check_handover_compatibility,
                        plan_sequence, validate_plan)
from .shapes import (make_box, make_diamond_prism, make_icosphere,
                     make_l_shape)
from .triplets import (GraspGroup, Triplet, enumerate_triplets, group_by_axis,
                       score_triplet)

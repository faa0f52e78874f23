#pragma once

#include <Eigen/Dense>

#include "common.hpp"

namespace viewmark {

// Pinhole intrinsics. `focal` is in pixels, derived from the dataset's
// camera_angle_x as 0.5*width / tan(0.5*angle).
struct CameraIntrinsics {
  int width = 0;
  int height = 0;
  double focal = 0.0;
};

CameraIntrinsics intrinsics_from_angle_x(int width, int height, double camera_angle_x);

// Camera-to-world transform, NeRF-synthetic convention: the camera looks
// along its -z axis, y up. The secret view key is one of these matrices.
struct CameraPose {
  Eigen::Matrix4d c2w = Eigen::Matrix4d::Identity();

  Eigen::Matrix3d rotation() const { return c2w.topLeftCorner<3, 3>(); }
  Eigen::Vector3d translation() const { return c2w.topRightCorner<3, 1>(); }
};

// Throws ValidationError unless the rotation block is orthonormal with
// det +1 (tolerance 1e-5) and the last row is (0,0,0,1).
void require_valid_pose(const CameraPose& pose, const char* what);

// Camera at `position` looking at `target`, world +z up.
CameraPose look_at_pose(const Eigen::Vector3d& position, const Eigen::Vector3d& target);

// One ray per pixel, row-major pixel order; directions are unit length.
struct RayBatch {
  Eigen::MatrixX3f origins;
  Eigen::MatrixX3f directions;
  float t_near = 2.0f;
  float t_far = 6.0f;

  Eigen::Index count() const { return origins.rows(); }
};

constexpr double kDefaultTNear = 2.0;
constexpr double kDefaultTFar = 6.0;

// Pinhole ray generation through pixel centers. The central pixel of an
// odd-sized image maps exactly to the pose's -z axis.
RayBatch rays_for_pose(const CameraIntrinsics& intr, const CameraPose& pose,
                       double t_near = kDefaultTNear, double t_far = kDefaultTFar);

// World-frame rotation of the pose about the vertical (z) axis. Preserves
// the camera-to-origin distance.
CameraPose rotate_about_z(const CameraPose& pose, double degrees);

// Geodesic rotation distance in degrees: acos((trace(Ra^T Rb) - 1)/2).
double pose_distance(const CameraPose& a, const CameraPose& b);

}  // namespace viewmark

#include "camera.hpp"

#include <cmath>

namespace viewmark {

CameraIntrinsics intrinsics_from_angle_x(int width, int height, double camera_angle_x) {
  if (width < 1 || height < 1) throw ValidationError("intrinsics: width, height must be >= 1");
  if (!(camera_angle_x > 0) || camera_angle_x >= M_PI) {
    throw ValidationError(strfmt("intrinsics: camera_angle_x %g out of range", camera_angle_x));
  }
  return {width, height, 0.5 * width / std::tan(0.5 * camera_angle_x)};
}

void require_valid_pose(const CameraPose& pose, const char* what) {
  if (!pose.c2w.allFinite()) throw ValidationError(strfmt("%s: non-finite pose", what));
  const Eigen::Matrix3d r = pose.rotation();
  const Eigen::Matrix3d err = r.transpose() * r - Eigen::Matrix3d::Identity();
  if (err.cwiseAbs().maxCoeff() > 1e-5) {
    throw ValidationError(strfmt("%s: rotation block not orthonormal (err %.3g)", what,
                                 err.cwiseAbs().maxCoeff()));
  }
  if (r.determinant() < 0) throw ValidationError(strfmt("%s: rotation has det -1", what));
  const Eigen::RowVector4d last = pose.c2w.row(3);
  if ((last - Eigen::RowVector4d(0, 0, 0, 1)).cwiseAbs().maxCoeff() > 1e-9) {
    throw ValidationError(strfmt("%s: last row is not (0,0,0,1)", what));
  }
}

CameraPose look_at_pose(const Eigen::Vector3d& position, const Eigen::Vector3d& target) {
  Eigen::Vector3d z = (position - target).normalized();  // camera z points away from target
  Eigen::Vector3d up(0, 0, 1);
  if (std::abs(z.dot(up)) > 1.0 - 1e-9) up = Eigen::Vector3d(0, 1, 0);
  Eigen::Vector3d x = up.cross(z).normalized();
  Eigen::Vector3d y = z.cross(x);
  CameraPose pose;
  pose.c2w.topLeftCorner<3, 1>() = x;
  pose.c2w.block<3, 1>(0, 1) = y;
  pose.c2w.block<3, 1>(0, 2) = z;
  pose.c2w.topRightCorner<3, 1>() = position;
  return pose;
}

RayBatch rays_for_pose(const CameraIntrinsics& intr, const CameraPose& pose, double t_near,
                       double t_far) {
  require_valid_pose(pose, "rays_for_pose");
  if (intr.width < 1 || intr.height < 1 || !(intr.focal > 0)) {
    throw ValidationError("rays_for_pose: invalid intrinsics");
  }
  if (!(0 <= t_near && t_near < t_far)) throw ValidationError("rays_for_pose: bad t bounds");

  const Eigen::Matrix3d r = pose.rotation();
  const Eigen::Vector3d origin = pose.translation();
  const Eigen::Index n = static_cast<Eigen::Index>(intr.width) * intr.height;

  RayBatch rays;
  rays.origins.resize(n, 3);
  rays.directions.resize(n, 3);
  rays.t_near = static_cast<float>(t_near);
  rays.t_far = static_cast<float>(t_far);
  rays.origins.rowwise() = origin.cast<float>().transpose();

  for (int y = 0; y < intr.height; ++y) {
    for (int x = 0; x < intr.width; ++x) {
      Eigen::Vector3d d_cam((x + 0.5 - 0.5 * intr.width) / intr.focal,
                            -(y + 0.5 - 0.5 * intr.height) / intr.focal, -1.0);
      Eigen::Vector3d d = (r * d_cam).normalized();
      rays.directions.row(static_cast<Eigen::Index>(y) * intr.width + x) =
          d.cast<float>().transpose();
    }
  }
  return rays;
}

CameraPose rotate_about_z(const CameraPose& pose, double degrees) {
  require_valid_pose(pose, "rotate_about_z");
  if (!std::isfinite(degrees)) throw ValidationError("rotate_about_z: non-finite angle");
  const double rad = degrees * M_PI / 180.0;
  Eigen::Matrix4d rz = Eigen::Matrix4d::Identity();
  rz(0, 0) = std::cos(rad);
  rz(0, 1) = -std::sin(rad);
  rz(1, 0) = std::sin(rad);
  rz(1, 1) = std::cos(rad);
  CameraPose out;
  out.c2w = rz * pose.c2w;
  return out;
}

double pose_distance(const CameraPose& a, const CameraPose& b) {
  require_valid_pose(a, "pose_distance");
  require_valid_pose(b, "pose_distance");
  const double tr = (a.rotation().transpose() * b.rotation()).trace();
  const double arg = std::clamp((tr - 1.0) / 2.0, -1.0, 1.0);
  return std::acos(arg) * 180.0 / M_PI;
}

}  // namespace viewmark

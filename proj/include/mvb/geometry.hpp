#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mvb/error.hpp"

namespace mvb {

template <typename Scalar>
using Vec2T = Eigen::Matrix<Scalar, 2, 1>;
template <typename Scalar>
using Vec3T = Eigen::Matrix<Scalar, 3, 1>;
template <typename Scalar>
using Mat3T = Eigen::Matrix<Scalar, 3, 3>;

using Vec2 = Vec2T<double>;
using Vec3 = Vec3T<double>;
using Mat3 = Mat3T<double>;

/// One calibrated pinhole view. Rotation maps world to camera coordinates,
/// translation is expressed in the camera frame, so x_cam = R * X + t.
/// World units are centimeters, pixel units are pixels.
template <typename Scalar>
struct CameraViewT {
  int id = 0;
  Mat3T<Scalar> intrinsics = Mat3T<Scalar>::Identity();
  Mat3T<Scalar> rotation = Mat3T<Scalar>::Identity();
  Vec3T<Scalar> translation = Vec3T<Scalar>::Zero();
  int image_width = 0;
  int image_height = 0;

  Vec3T<Scalar> center() const { return -(rotation.transpose() * translation); }

  /// Throws InvariantError unless K is upper-triangular with positive focal
  /// entries and R is orthonormal within tol.
  void validate(Scalar tol = Scalar(1e-9)) const {
    const Mat3T<Scalar>& K = intrinsics;
    if (!(K(0, 0) > Scalar(0)) || !(K(1, 1) > Scalar(0)) || !(K(2, 2) > Scalar(0)))
      throw InvariantError("camera " + std::to_string(id) + ": non-positive focal entry");
    if (K(1, 0) != Scalar(0) || K(2, 0) != Scalar(0) || K(2, 1) != Scalar(0))
      throw InvariantError("camera " + std::to_string(id) + ": intrinsics not upper-triangular");
    const Scalar err = (rotation.transpose() * rotation - Mat3T<Scalar>::Identity())
                           .cwiseAbs()
                           .maxCoeff();
    if (!(err <= tol))
      throw InvariantError("camera " + std::to_string(id) + ": rotation not orthonormal");
    if (image_width <= 0 || image_height <= 0)
      throw InvariantError("camera " + std::to_string(id) + ": empty image");
  }
};

using CameraView = CameraViewT<double>;

/// Projects a world point, or nullopt when the camera-frame depth is not
/// strictly positive. Accepts any 3-vector expression.
template <typename Scalar, typename Derived>
std::optional<Vec2T<Scalar>> try_project(const CameraViewT<Scalar>& cam,
                                         const Eigen::MatrixBase<Derived>& X) {
  const Vec3T<Scalar> xc = cam.rotation * X + cam.translation;
  if (!(xc.z() > Scalar(0))) return std::nullopt;
  return (cam.intrinsics * xc).hnormalized();
}

/// Projects a world point to pixels; throws NonPositiveDepth behind the camera.
template <typename Scalar, typename Derived>
Vec2T<Scalar> project(const CameraViewT<Scalar>& cam, const Eigen::MatrixBase<Derived>& X) {
  auto p = try_project(cam, X);
  if (!p)
    throw NonPositiveDepth("point has non-positive depth in camera " + std::to_string(cam.id));
  return *p;
}

/// 2x3 Jacobian of project() with respect to the world point.
template <typename Scalar, typename Derived>
Eigen::Matrix<Scalar, 2, 3> projection_jacobian(const CameraViewT<Scalar>& cam,
                                                const Eigen::MatrixBase<Derived>& X) {
  const Vec3T<Scalar> xc = cam.rotation * X + cam.translation;
  if (!(xc.z() > Scalar(0)))
    throw NonPositiveDepth("jacobian undefined at non-positive depth in camera " +
                           std::to_string(cam.id));
  const Vec3T<Scalar> h = cam.intrinsics * xc;
  const Vec2T<Scalar> uv = h.hnormalized();
  const Mat3T<Scalar> M = cam.intrinsics * cam.rotation;  // dh/dX
  Eigen::Matrix<Scalar, 2, 3> J;
  J.row(0) = (M.row(0) - uv.x() * M.row(2)) / h.z();
  J.row(1) = (M.row(1) - uv.y() * M.row(2)) / h.z();
  return J;
}

/// Euclidean pixel distance between the projection of X and an observation.
template <typename Scalar, typename DerivedX, typename DerivedP>
Scalar reprojection_error(const CameraViewT<Scalar>& cam, const Eigen::MatrixBase<DerivedX>& X,
                          const Eigen::MatrixBase<DerivedP>& pixel) {
  return (project(cam, X) - pixel).norm();
}

/// Homogeneous linear (DLT) triangulation from >= 2 views. Each observation
/// contributes two rows of A X = 0 built from normalized image coordinates;
/// the solution is the right singular vector of the smallest singular value.
/// Throws DegenerateGeometry when the observations do not determine a finite
/// point (rank-deficient system, zero baseline, or a point at infinity).
template <typename Scalar>
Vec3T<Scalar> triangulate_linear(std::span<const CameraViewT<Scalar>> cams,
                                 std::span<const Vec2T<Scalar>> pixels) {
  const int m = static_cast<int>(cams.size());
  if (m < 2 || pixels.size() != cams.size())
    throw DomainError("triangulate_linear: need >= 2 paired observations");

  Scalar scale = Scalar(0);
  for (int i = 0; i < m; ++i)
    for (int j = i + 1; j < m; ++j)
      scale = std::max(scale, (cams[i].center() - cams[j].center()).norm());
  if (!(scale > Scalar(0)))
    throw DegenerateGeometry("triangulate_linear: zero baseline between all views");

  Eigen::Matrix<Scalar, Eigen::Dynamic, 4> A(2 * m, 4);
  for (int i = 0; i < m; ++i) {
    Eigen::Matrix<Scalar, 3, 4> P;
    P.template leftCols<3>() = cams[i].rotation;
    P.col(3) = cams[i].translation;
    const Vec3T<Scalar> xn =
        cams[i].intrinsics.template triangularView<Eigen::Upper>().solve(
            pixels[i].homogeneous().eval());
    A.row(2 * i + 0) = xn.x() * P.row(2) - xn.z() * P.row(0);
    A.row(2 * i + 1) = xn.y() * P.row(2) - xn.z() * P.row(1);
  }

  Eigen::JacobiSVD<Eigen::Matrix<Scalar, Eigen::Dynamic, 4>> svd(A, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  if (!(sv(2) > Scalar(1e-9) * sv(0)))
    throw DegenerateGeometry("triangulate_linear: rank-deficient observation system");
  const Eigen::Matrix<Scalar, 4, 1> Xh = svd.matrixV().col(3);
  if (!(std::abs(Xh(3)) > Scalar(1e-12) * Xh.template head<3>().norm()))
    throw DegenerateGeometry("triangulate_linear: point at infinity");
  const Vec3T<Scalar> X = Xh.hnormalized();
  if (!X.allFinite()) throw DegenerateGeometry("triangulate_linear: non-finite solution");
  return X;
}

struct RefineOptions {
  double initial_lambda = 1e-3;
  double lambda_scale = 10.0;
  double max_lambda = 1e12;
  int max_iterations = 50;
  double relative_tolerance = 1e-10;
};

template <typename Scalar>
struct RefineResultT {
  Vec3T<Scalar> position = Vec3T<Scalar>::Zero();
  std::vector<Scalar> residuals;  // per-view pixel norms at the returned point
  Scalar initial_cost = Scalar(0);
  Scalar final_cost = Scalar(0);
  int iterations = 0;
  bool converged = false;
};

using RefineResult = RefineResultT<double>;

namespace detail {

template <typename Scalar>
std::optional<Scalar> squared_cost(const Vec3T<Scalar>& X,
                                   std::span<const CameraViewT<Scalar>> cams,
                                   std::span<const Vec2T<Scalar>> pixels) {
  Scalar c = Scalar(0);
  for (std::size_t i = 0; i < cams.size(); ++i) {
    const auto p = try_project(cams[i], X);
    if (!p) return std::nullopt;
    c += (*p - pixels[i]).squaredNorm();
  }
  return c;
}

}  // namespace detail

/// Levenberg-Marquardt refinement of a 3D point minimizing the total squared
/// pixel reprojection error over the given views. Only cost-decreasing steps
/// are accepted, so final_cost <= initial_cost always holds and the best
/// iterate is returned even when the schedule runs out of iterations
/// (converged = false in that case).
template <typename Scalar>
RefineResultT<Scalar> refine_triangulation(const Vec3T<Scalar>& X0,
                                           std::span<const CameraViewT<Scalar>> cams,
                                           std::span<const Vec2T<Scalar>> pixels,
                                           const RefineOptions& opts = {}) {
  if (cams.size() < 2 || pixels.size() != cams.size())
    throw DomainError("refine_triangulation: need >= 2 paired observations");
  if (!X0.allFinite()) throw DomainError("refine_triangulation: non-finite initial point");

  const int m = static_cast<int>(cams.size());
  Vec3T<Scalar> X = X0;
  auto cost0 = detail::squared_cost(X, cams, pixels);
  if (!cost0)
    throw NonPositiveDepth("refine_triangulation: initial point behind a camera");

  RefineResultT<Scalar> out;
  out.initial_cost = *cost0;
  Scalar cost = *cost0;
  Scalar lambda = Scalar(opts.initial_lambda);
  bool converged = false;
  int iter = 0;

  Eigen::Matrix<Scalar, Eigen::Dynamic, 3> J(2 * m, 3);
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> r(2 * m);
  bool rebuild = true;
  Mat3T<Scalar> H;
  Vec3T<Scalar> g;

  while (iter < opts.max_iterations) {
    ++iter;
    if (rebuild) {
      for (int i = 0; i < m; ++i) {
        const Vec2T<Scalar> uv = project(cams[i], X);
        r.template segment<2>(2 * i) = uv - pixels[i];
        J.template middleRows<2>(2 * i) = projection_jacobian(cams[i], X);
      }
      H = J.transpose() * J;
      g = J.transpose() * r;
      rebuild = false;
      if (g.cwiseAbs().maxCoeff() <= Scalar(1e-14) * (Scalar(1) + cost)) {
        converged = true;
        break;
      }
    }

    Mat3T<Scalar> Hd = H;
    for (int k = 0; k < 3; ++k)
      Hd(k, k) += lambda * std::max(H(k, k), Scalar(1e-12));
    const Vec3T<Scalar> delta = Hd.ldlt().solve(-g);

    bool accepted = false;
    if (delta.allFinite()) {
      const Vec3T<Scalar> Xc = X + delta;
      const auto new_cost = detail::squared_cost(Xc, cams, pixels);
      if (new_cost && *new_cost < cost) {
        const Scalar improvement = cost - *new_cost;
        X = Xc;
        cost = *new_cost;
        lambda = std::max(lambda / Scalar(opts.lambda_scale), Scalar(1e-12));
        rebuild = true;
        accepted = true;
        if (improvement <= Scalar(opts.relative_tolerance) * std::max(cost, Scalar(1e-300))) {
          converged = true;
          break;
        }
      }
    }
    if (!accepted) {
      if (delta.allFinite() && delta.norm() <= Scalar(1e-15) * (Scalar(1) + X.norm())) {
        converged = true;  // cannot move: stationary to machine precision
        break;
      }
      lambda *= Scalar(opts.lambda_scale);
      if (lambda > Scalar(opts.max_lambda)) break;
    }
  }

  out.position = X;
  out.final_cost = cost;
  out.iterations = iter;
  out.converged = converged;
  out.residuals.resize(cams.size());
  for (std::size_t i = 0; i < cams.size(); ++i)
    out.residuals[i] = reprojection_error(cams[i], X, pixels[i]);
  return out;
}

/// Solid capsule: all points within radius of the segment [a, b].
struct Capsule {
  Vec3 a = Vec3::Zero();
  Vec3 b = Vec3::Zero();
  double radius = 0.0;
};

/// Minimum distance between segments [p0, p1] and [q0, q1]; degenerate
/// (point-like) segments are handled.
inline double segment_segment_distance(const Vec3& p0, const Vec3& p1, const Vec3& q0,
                                       const Vec3& q1) {
  const Vec3 d1 = p1 - p0;
  const Vec3 d2 = q1 - q0;
  const Vec3 rr = p0 - q0;
  const double a = d1.squaredNorm();
  const double e = d2.squaredNorm();
  const double f = d2.dot(rr);
  double s = 0.0, t = 0.0;
  constexpr double kEps = 1e-30;

  if (a <= kEps && e <= kEps) {
    return rr.norm();
  } else if (a <= kEps) {
    t = std::clamp(f / e, 0.0, 1.0);
  } else {
    const double c = d1.dot(rr);
    if (e <= kEps) {
      s = std::clamp(-c / a, 0.0, 1.0);
    } else {
      const double b = d1.dot(d2);
      const double denom = a * e - b * b;
      if (denom > kEps) s = std::clamp((b * f - c * e) / denom, 0.0, 1.0);
      t = (b * s + f) / e;
      if (t < 0.0) {
        t = 0.0;
        s = std::clamp(-c / a, 0.0, 1.0);
      } else if (t > 1.0) {
        t = 1.0;
        s = std::clamp((b - c) / a, 0.0, 1.0);
      }
    }
  }
  return ((p0 + s * d1) - (q0 + t * d2)).norm();
}

/// True when the open segment [p0, p1] passes through the capsule volume.
inline bool segment_intersects_capsule(const Vec3& p0, const Vec3& p1, const Capsule& c) {
  return segment_segment_distance(p0, p1, c.a, c.b) < c.radius;
}

}  // namespace mvb

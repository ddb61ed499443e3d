#include "plm/geometry.hpp"

#include <Eigen/SVD>
#include <stdexcept>

namespace plm {

Pose compose(const Pose& a, const Pose& b) {
    Pose out;
    out.position = a.orientation * b.position + a.position;
    out.orientation = a.orientation * b.orientation;
    out.orientation.normalize();
    return out;
}

Pose inverse(const Pose& p) {
    Pose out;
    out.orientation = p.orientation.conjugate();
    out.position = -(out.orientation * p.position);
    return out;
}

Vec3 transform_point(const Pose& p, const Vec3& q) { return p.transform_point(q); }

Vec3 orientation_error(const Quat& to, const Quat& from) {
    Quat d = to * from.conjugate();
    if (d.w() < 0.0) d.coeffs() = -d.coeffs();  // shortest path
    d.normalize();
    const double sin_half = d.vec().norm();
    if (sin_half < 1e-12) return Vec3::Zero();
    const double angle = 2.0 * std::atan2(sin_half, d.w());
    return d.vec() * (angle / sin_half);
}

Quat quat_exp(const Vec3& rotvec) {
    const double angle = rotvec.norm();
    if (angle < 1e-12) {
        Quat q(1.0, 0.5 * rotvec.x(), 0.5 * rotvec.y(), 0.5 * rotvec.z());
        q.normalize();
        return q;
    }
    return Quat(Eigen::AngleAxisd(angle, rotvec / angle));
}

double constellation_distance(const Constellation& a, const Constellation& b) {
    if (a.points.empty() || a.points.size() != b.points.size())
        throw std::invalid_argument("constellation_distance: mismatched or empty landmark sets");
    double acc = 0.0;
    for (size_t i = 0; i < a.points.size(); ++i)
        acc += (a.points[i] - b.points[i]).squaredNorm();
    return acc / double(a.points.size());
}

static Constellation normal_line(const Pose& pose, AnchorFrame anchor) {
    Constellation c;
    c.anchor = anchor;
    c.points.reserve(kNormalLineOffsets.size());
    const Vec3 axis = pose.rotate(Vec3::UnitX());
    for (double s : kNormalLineOffsets) c.points.push_back(pose.position + s * axis);
    return c;
}

Constellation make_pad_constellation(const Pose& pad_pose) {
    return normal_line(pad_pose, AnchorFrame::pad);
}

Constellation make_cf_constellation(const Pose& cf_pose) {
    return normal_line(cf_pose, AnchorFrame::contact_frame);
}

Constellation make_base_constellation(const Pose& base_pose, AnchorFrame anchor) {
    Constellation c;
    c.anchor = anchor;
    c.points = {base_pose.transform_point({0.1, 0.0, 0.0}),
                base_pose.transform_point({0.0, 0.1, 0.0}),
                base_pose.transform_point({0.0, 0.0, 0.1})};
    return c;
}

Pose best_fit_transform(const Constellation& from, const Constellation& to) {
    const size_t k = from.points.size();
    if (k < 3 || to.points.size() != k)
        throw std::invalid_argument("best_fit_transform: need K >= 3 matched points");

    Vec3 cf = Vec3::Zero(), ct = Vec3::Zero();
    for (size_t i = 0; i < k; ++i) {
        cf += from.points[i];
        ct += to.points[i];
    }
    cf /= double(k);
    ct /= double(k);

    Mat3 h = Mat3::Zero();
    double spread = 0.0;
    for (size_t i = 0; i < k; ++i) {
        const Vec3 p = from.points[i] - cf;
        h += p * (to.points[i] - ct).transpose();
        spread += p.squaredNorm();
    }

    Eigen::JacobiSVD<Mat3> svd(h, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Vec3 sv = svd.singularValues();
    // Collinear sources leave the rotation about the line unconstrained:
    // second singular value collapses relative to the point spread.
    if (sv(1) <= 1e-9 * std::max(spread, 1e-30))
        throw std::invalid_argument("best_fit_transform: rank-deficient (collinear) points");

    Mat3 d = Mat3::Identity();
    d(2, 2) = (svd.matrixV() * svd.matrixU().transpose()).determinant() < 0.0 ? -1.0 : 1.0;
    const Mat3 r = svd.matrixV() * d * svd.matrixU().transpose();

    Pose out;
    out.orientation = Quat(r);
    out.orientation.normalize();
    out.position = ct - r * cf;
    return out;
}

}  // namespace plm

#pragma once

#include <cmath>
#include <string>

#include "adasin/errors.hpp"
#include "adasin/losses.hpp"

namespace adasin {

enum class Branch { Easy, Hard };

struct BoundaryParams {
    double m = 0.5;
    double t = 0.0;        // curriculum t (CurricularFace)
    double t_fixed = 0.2;  // MV-Arc-Softmax
    double phi = 1.0;      // AdaSin modulation coefficient
    Branch branch = Branch::Easy;
};

/// Negative cosine cos(theta_j) on the decision boundary of `method` for a
/// sample at positive angle theta_pos, i.e. the solution of T = N.
inline double decision_boundary(Method method, const BoundaryParams& p, double theta_pos) {
    check_angle(theta_pos);
    const double arc = cos_clamped(theta_pos + p.m);
    double c = 0.0;
    switch (method) {
        case Method::Softmax: c = std::cos(theta_pos); break;
        case Method::CosFace: c = std::cos(theta_pos) - p.m; break;
        case Method::SphereFace: c = cos_clamped(p.m * theta_pos); break;
        case Method::ArcFace: c = arc; break;
        case Method::MvArcSoftmax:
            c = p.branch == Branch::Easy ? arc : (arc - p.t_fixed) / (p.t_fixed + 1.0);
            break;
        case Method::CurricularFace: {
            if (p.branch == Branch::Easy) {
                c = arc;
                break;
            }
            // (t + c) c = arc, larger root of c^2 + t c - arc = 0
            const double disc = p.t * p.t + 4.0 * arc;
            if (disc < 0.0) throw NoRealRoot("curricular boundary has negative discriminant");
            c = (-p.t + std::sqrt(disc)) / 2.0;
            break;
        }
        case Method::AdaSinT:
            c = p.branch == Branch::Easy ? arc : cos_clamped(theta_pos + p.phi * p.m);
            break;
        case Method::AdaSin:
        case Method::AdaSinN:
            if (p.branch == Branch::Easy) {
                c = arc;
                break;
            }
            if (p.phi == 0.0) throw NoRealRoot("phi = 0 leaves no boundary");
            c = (method == Method::AdaSin ? cos_clamped(theta_pos + p.phi * p.m) : arc) / p.phi;
            break;
    }
    if (!(c >= -1.0 && c <= 1.0))
        throw NoRealRoot("boundary cosine " + std::to_string(c) + " outside [-1, 1]");
    return c;
}

}  // namespace adasin

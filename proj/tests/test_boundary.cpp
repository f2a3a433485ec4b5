#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "adasin/boundary.hpp"
#include "boundary_rows.hpp"

using namespace adasin;

using boundary_rows::Row;
using boundary_rows::table_rows;

TEST(DecisionBoundary, ReferenceValues) {
    EXPECT_DOUBLE_EQ(decision_boundary(Method::ArcFace, {0.5}, 0.4), std::cos(0.9));
    EXPECT_DOUBLE_EQ(decision_boundary(Method::Softmax, {}, 0.4), std::cos(0.4));
    const double phi = 1.3, theta = 0.7;
    EXPECT_DOUBLE_EQ(decision_boundary(Method::AdaSin, {0.5, 0, 0, phi, Branch::Hard}, theta),
                     std::cos(theta + phi * 0.5) / phi);
}

TEST(DecisionBoundary, SubstitutionResidualOnEveryRow) {
    for (const Row& row : table_rows()) {
        for (int k = 0; k < 20; ++k) {
            const double theta = 0.05 + (row.theta_max - 0.05) * k / 19.0;
            const double c = decision_boundary(row.method, row.params, theta);
            EXPECT_LT(std::abs(row.residual(theta, c)), 1e-10) << row.name << " at " << theta;
        }
    }
}

TEST(DecisionBoundary, CurricularTakesTheLargerRoot) {
    const BoundaryParams p{0.5, 0.4, 0, 1, Branch::Hard};
    const double c = decision_boundary(Method::CurricularFace, p, 0.3);
    const double arc = std::cos(0.8);
    const double other = (-0.4 - std::sqrt(0.16 + 4 * arc)) / 2;
    EXPECT_GT(c, other);
}

TEST(DecisionBoundary, NoRealRoot) {
    // (t + c) c = cos(theta + m) with cos(theta + m) < -t^2 / 4
    EXPECT_THROW(decision_boundary(Method::CurricularFace, {0.5, 0.2, 0, 1, Branch::Hard}, 2.5), NoRealRoot);
    EXPECT_THROW(decision_boundary(Method::AdaSin, {0.5, 0, 0, 0.0, Branch::Hard}, 0.5), NoRealRoot);
    EXPECT_THROW(decision_boundary(Method::CosFace, {0.5}, 3.0), NoRealRoot);
    EXPECT_THROW(decision_boundary(Method::ArcFace, {0.5}, -1.0), DomainError);
}

// Copyright 2026 The fairprep Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#include "fairprep/interior_point.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include "Eigen/Cholesky"

namespace fairprep {
namespace {

// Largest step in (0, 1] keeping v + alpha * dv >= 0, damped.
double StepToBoundary(const Eigen::VectorXd& v, const Eigen::VectorXd& dv) {
  double alpha = 1.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (dv[i] < 0) alpha = std::min(alpha, -v[i] / dv[i]);
  }
  return alpha;
}

class NormalSolver {
 public:
  NormalSolver(const RowSparse& a, bool parallel)
      : a_(a), a_cols_(a), parallel_(parallel) {}

  // Factors A D A^T, adding diagonal regularization when needed.
  bool Factor(const Eigen::VectorXd& d) {
    if (parallel_) {
      parallel::NormalMatrix(a_, a_cols_, d, &m_);
    } else {
      serial::NormalMatrix(a_, a_cols_, d, &m_);
    }
    const double scale = std::max(1.0, m_.diagonal().cwiseAbs().maxCoeff());
    double reg = 0;
    for (int attempt = 0; attempt < 8; ++attempt) {
      if (reg > 0) m_.diagonal().array() += reg;
      llt_.compute(m_);
      if (llt_.info() == Eigen::Success) return true;
      const double next = reg == 0 ? 1e-14 * scale : reg * 100;
      m_.diagonal().array() -= reg;
      reg = next;
    }
    return false;
  }

  Eigen::VectorXd Solve(const Eigen::VectorXd& rhs) const {
    return llt_.solve(rhs);
  }

 private:
  const RowSparse& a_;
  ColSparse a_cols_;
  bool parallel_;
  Eigen::MatrixXd m_;
  Eigen::LLT<Eigen::MatrixXd> llt_;
};

}  // namespace

IpmResult SolveSeparable(const SeparableProgram& p, const IpmOptions& options) {
  const Eigen::Index n = p.a.cols();
  IpmResult result;
  Eigen::VectorXd x = p.x0.size() == n ? p.x0 : Eigen::VectorXd::Ones(n);
  Eigen::VectorXd s = Eigen::VectorXd::Ones(n);
  Eigen::VectorXd y = Eigen::VectorXd::Zero(p.a.rows());
  NormalSolver normal(p.a, options.parallel);

  auto gradient = [&](const Eigen::VectorXd& v) {
    return Eigen::VectorXd(p.c.array() + p.q.array() * v.array() -
                           p.w.array() / v.array());
  };

  int stalled = 0;
  for (int iter = 0;; ++iter) {
    const Eigen::VectorXd g = gradient(x);
    const Eigen::VectorXd r_d = g - p.a.transpose() * y - s;
    const Eigen::VectorXd r_p = p.a * x - p.b;
    const double gap = x.dot(s);
    result.iterations = iter;
    result.primal_residual = r_p.size() ? r_p.cwiseAbs().maxCoeff() : 0.0;
    result.dual_residual = r_d.size() ? r_d.cwiseAbs().maxCoeff() : 0.0;
    result.gap = gap;
    result.x = x;
    result.y = y;
    result.s = s;
    if (result.primal_residual <= options.primal_tol &&
        result.dual_residual <= options.dual_tol && gap <= options.gap_tol) {
      result.status = IpmStatus::kConverged;
      return result;
    }
    if (iter >= options.max_iters) {
      result.status = IpmStatus::kIterationLimit;
      return result;
    }
    const double mu = gap / static_cast<double>(n);
    const Eigen::VectorXd hess =
        p.q.array() + p.w.array() / (x.array() * x.array());
    const Eigen::VectorXd d =
        (hess.array() + s.array() / x.array()).inverse().matrix();
    if (!normal.Factor(d)) {
      result.status = IpmStatus::kNumericalBreakdown;
      return result;
    }

    // Solves for a direction given the complementarity target t, where the
    // third Newton block reads s dx + x ds = t - x s.
    auto direction = [&](const Eigen::VectorXd& t, Eigen::VectorXd* dx,
                         Eigen::VectorXd* dy, Eigen::VectorXd* ds) {
      const Eigen::VectorXd r =
          -r_d.array() - s.array() + t.array() / x.array();
      const Eigen::VectorXd dr = d.cwiseProduct(r);
      *dy = normal.Solve(-r_p - p.a * dr);
      *dx = d.cwiseProduct(r + p.a.transpose() * *dy);
      *ds = (t.array() / x.array() - s.array() -
             s.array() / x.array() * dx->array())
                .matrix();
    };

    Eigen::VectorXd dx_aff, dy_aff, ds_aff;
    direction(Eigen::VectorXd::Zero(n), &dx_aff, &dy_aff, &ds_aff);
    const double a_aff =
        std::min(StepToBoundary(x, dx_aff), StepToBoundary(s, ds_aff));
    const double mu_aff =
        (x + a_aff * dx_aff).dot(s + a_aff * ds_aff) / static_cast<double>(n);
    const double sigma = std::pow(std::clamp(mu_aff / mu, 0.0, 1.0), 3);

    const Eigen::VectorXd t =
        (sigma * mu - dx_aff.array() * ds_aff.array()).matrix();
    Eigen::VectorXd dx, dy, ds;
    direction(t, &dx, &dy, &ds);
    if (!dx.allFinite() || !dy.allFinite() || !ds.allFinite()) {
      result.status = IpmStatus::kNumericalBreakdown;
      return result;
    }
    const double alpha = std::min(
        1.0, 0.995 * std::min(StepToBoundary(x, dx), StepToBoundary(s, ds)));
    stalled = alpha < 1e-10 ? stalled + 1 : 0;
    if (stalled >= 5) {
      result.status = IpmStatus::kNumericalBreakdown;
      return result;
    }
    x += alpha * dx;
    y += alpha * dy;
    s += alpha * ds;
    // Keep strictly inside the cone.
    const double floor = std::numeric_limits<double>::min();
    x = x.cwiseMax(floor);
    s = s.cwiseMax(floor);
  }
}

}  // namespace fairprep

#include "gmc/mollifier.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace gmc {

namespace {
constexpr double kSquareLogEnergy = 0.8050867219494344;
}

MollifierSpec make_uniform_circle(int node_count) {
  if (node_count < 8) throw std::invalid_argument("make_uniform_circle: need at least 8 nodes");
  MollifierSpec theta;
  theta.kind = MollifierSpec::Kind::UniformCircle;
  theta.dimension = 2;
  theta.nodes.resize(2, node_count);
  for (int i = 0; i < node_count; ++i) {
    const double a = 2.0 * M_PI * i / node_count;
    theta.nodes(0, i) = std::cos(a);
    theta.nodes(1, i) = std::sin(a);
  }
  theta.weights = Eigen::VectorXd::Constant(node_count, 1.0 / node_count);
  theta.node_floor = 1.0 / node_count;
  theta.min_spacing = 2.0 * std::sin(M_PI / node_count);
  return theta;
}

MollifierSpec make_density(
    const std::function<double(const Eigen::VectorXd&)>& profile,
    double grid_step, int dimension) {
  if (!(grid_step > 0 && grid_step < 1)) throw std::invalid_argument("make_density: grid_step must lie in (0,1)");
  if (dimension != 1 && dimension != 2)
    throw std::invalid_argument("make_density: dimension must be 1 or 2");

  std::vector<Eigen::VectorXd> pts;
  std::vector<double> wts;
  const int half = static_cast<int>(std::floor(1.0 / grid_step + 0.5));
  auto visit = [&](const Eigen::VectorXd& u) {
    if (u.norm() > 1.0 + 1e-12) return;
    const double p = profile(u);
    if (p < 0) throw std::invalid_argument("make_density: negative profile value");
    if (p > 0) {
      pts.push_back(u);
      wts.push_back(p);
    }
  };
  if (dimension == 1) {
    Eigen::VectorXd u(1);
    for (int i = -half; i < half; ++i) {
      u[0] = (i + 0.5) * grid_step;
      visit(u);
    }
  } else {
    Eigen::VectorXd u(2);
    for (int i = -half; i < half; ++i)
      for (int j = -half; j < half; ++j) {
        u[0] = (i + 0.5) * grid_step;
        u[1] = (j + 0.5) * grid_step;
        visit(u);
      }
  }
  if (pts.empty()) throw std::invalid_argument("make_density: profile is identically zero");

  MollifierSpec theta;
  theta.kind = MollifierSpec::Kind::Density;
  theta.dimension = dimension;
  theta.nodes.resize(dimension, static_cast<Eigen::Index>(pts.size()));
  theta.weights.resize(static_cast<Eigen::Index>(pts.size()));
  double total = 0;
  for (std::size_t i = 0; i < pts.size(); ++i) total += wts[i];
  for (std::size_t i = 0; i < pts.size(); ++i) {
    theta.nodes.col(static_cast<Eigen::Index>(i)) = pts[i];
    theta.weights[static_cast<Eigen::Index>(i)] = wts[i] / total;
  }
  theta.node_floor = dimension == 1 ? grid_step * std::exp(-1.5)
                                    : grid_step * std::exp(-kSquareLogEnergy);
  theta.min_spacing = grid_step;
  return theta;
}

MollifierSpec cosine_bump_mollifier(double grid_step, int dimension) {
  auto profile = [](const Eigen::VectorXd& u) {
    const double r = u.norm();
    return r <= 1.0 ? 0.5 * (1.0 + std::cos(M_PI * r)) : 0.0;
  };
  return make_density(profile, grid_step, dimension);
}

double check_cond_theta(const MollifierSpec& theta, const Eigen::MatrixXd& v_grid) {
  if (v_grid.cols() == 0) throw std::invalid_argument("check_cond_theta: empty v grid");
  if (v_grid.rows() != theta.nodes.rows())
    throw std::invalid_argument("check_cond_theta: dimension mismatch");
  const double clamp = 0.5 * theta.min_spacing;
  double sup = 0;
  for (Eigen::Index v = 0; v < v_grid.cols(); ++v) {
    double s = 0;
    for (Eigen::Index i = 0; i < theta.nodes.cols(); ++i) {
      const double d = std::max((theta.nodes.col(i) - v_grid.col(v)).norm(), clamp);
      s += theta.weights[i] / std::sqrt(d);
    }
    sup = std::max(sup, s);
  }
  return sup;
}

double cond_theta_supremum(const MollifierSpec& theta, double ball_radius,
                           double grid_spacing) {
  std::vector<Eigen::VectorXd> vs;
  const int half = static_cast<int>(std::floor(ball_radius / grid_spacing)) + 1;
  if (theta.dimension == 1) {
    Eigen::VectorXd v(1);
    for (int i = -half; i <= half; ++i) {
      v[0] = i * grid_spacing;
      if (std::abs(v[0]) <= ball_radius) vs.push_back(v);
    }
  } else {
    Eigen::VectorXd v(2);
    for (int i = -half; i <= half; ++i)
      for (int j = -half; j <= half; ++j) {
        v[0] = i * grid_spacing;
        v[1] = j * grid_spacing;
        if (v.norm() <= ball_radius) vs.push_back(v);
      }
  }
  Eigen::MatrixXd grid(theta.dimension, static_cast<Eigen::Index>(vs.size()));
  for (std::size_t i = 0; i < vs.size(); ++i)
    grid.col(static_cast<Eigen::Index>(i)) = vs[i];
  return check_cond_theta(theta, grid);
}

bool mollifier_admissible(const MollifierSpec& theta, double ball_radius,
                          double grid_spacing, double threshold) {
  return cond_theta_supremum(theta, ball_radius, grid_spacing) <= threshold;
}

std::pair<Eigen::MatrixXd, Eigen::VectorXd> scaled_weights(
    const MollifierSpec& theta, double eps, const Eigen::VectorXd& x) {
  if (!(eps > 0)) throw std::invalid_argument("scaled_weights: eps must be positive");
  Eigen::MatrixXd nodes = (theta.nodes * eps).colwise() + x;
  return {std::move(nodes), theta.weights};
}

}  // namespace gmc

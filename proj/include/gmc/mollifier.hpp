#pragma once

#include <Eigen/Dense>

#include <functional>
#include <utility>

namespace gmc {

// Unit-mass positive measure on the closed unit ball, represented by
// quadrature nodes. node_floor is the radius below which pairwise log
// distances are clamped in covariance assembly; it is calibrated so the
// discrete double sums reproduce the continuum self-energies:
//   circle with m nodes   -> 1/m      (exact, roots-of-unity identity)
//   d=1 cell of width s   -> s e^{-3/2}
//   d=2 square cell side s -> s e^{-c2}, c2 = 0.8050867219494344
struct MollifierSpec {
  enum class Kind { UniformCircle, Density };
  Kind kind = Kind::UniformCircle;
  int dimension = 2;
  Eigen::MatrixXd nodes;    // dimension x m
  Eigen::VectorXd weights;  // sums to 1
  double node_floor = 0;
  double min_spacing = 0;
};

MollifierSpec make_uniform_circle(int node_count);

// Tensor-grid quadrature of a nonnegative density on the unit ball,
// renormalized to unit mass. Throws for negative or identically zero
// profiles. In d=1 the profile is evaluated at signed coordinates.
MollifierSpec make_density(const std::function<double(const Eigen::VectorXd&)>& profile,
                           double grid_step, int dimension);

// Stock density: (1 + cos(pi |u|))/2 on the unit ball.
MollifierSpec cosine_bump_mollifier(double grid_step, int dimension);

// sup over v of sum_i w_i |u_i - v|^{-1/2}, with |u_i - v| clamped below at
// half the minimal node spacing (the continuum condition has no atoms).
double check_cond_theta(const MollifierSpec& theta, const Eigen::MatrixXd& v_grid);

// Scan of check_cond_theta over a grid covering B(0, ball_radius).
double cond_theta_supremum(const MollifierSpec& theta, double ball_radius = 5.0,
                           double grid_spacing = 0.1);
bool mollifier_admissible(const MollifierSpec& theta, double ball_radius = 5.0,
                          double grid_spacing = 0.1, double threshold = 100.0);

// Nodes mapped to x + eps * u_i; weights unchanged.
std::pair<Eigen::MatrixXd, Eigen::VectorXd> scaled_weights(
    const MollifierSpec& theta, double eps, const Eigen::VectorXd& x);

}  // namespace gmc

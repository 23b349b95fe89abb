#pragma once

#include <Eigen/Dense>

#include <functional>
#include <string>
#include <vector>

namespace gpfunnel {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Vector field x -> f(x).
using Dynamics = std::function<Vector(const Vector&)>;
/// Input map x -> g(x), n x m.
using InputMap = std::function<Matrix(const Vector&)>;

struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  bool contains(double v) const { return lo <= v && v <= hi; }
  double width() const { return hi - lo; }
};

/// Axis-aligned closed box. Degenerate sides (lower == upper) are representable so that
/// callers can diagnose them; operations that sample or grid a box require an interior.
class StateBox {
 public:
  StateBox() = default;
  StateBox(Vector lower, Vector upper);

  static StateBox cube(Index dim, double lo, double hi);

  Index dim() const { return lower_.size(); }
  const Vector& lower() const { return lower_; }
  const Vector& upper() const { return upper_; }
  Interval side(Index i) const { return {lower_[i], upper_[i]}; }

  bool has_interior() const;
  bool contains(const Vector& x) const;
  bool contains_interior(const Vector& x) const;
  bool contains(const StateBox& other) const;

  Vector center() const { return 0.5 * (lower_ + upper_); }
  Vector width() const { return upper_ - lower_; }

  /// Maps u in [0,1]^n affinely onto the box.
  Vector from_unit(const Vector& u) const;

  bool operator==(const StateBox& other) const;

 private:
  Vector lower_;
  Vector upper_;
};

/// Uniform tensor grid including the corners, `per_dim` >= 2 points per axis.
std::vector<Vector> grid_points(const StateBox& box, int per_dim);

std::string format_vector(const Vector& v, int precision = 6);

}  // namespace gpfunnel

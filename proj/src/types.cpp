#include "gpfunnel/types.hpp"

#include "gpfunnel/errors.hpp"

#include <cmath>
#include <sstream>

namespace gpfunnel {

NegativeRadicand::NegativeRadicand(std::size_t dim, double radicand, double min_bound)
    : Error("negative radicand " + std::to_string(radicand) + " in deterministic bound for dim " +
            std::to_string(dim + 1) + "; the RKHS norm bound B is too small for this data (increase B_" +
            std::to_string(dim + 1) + " above " + std::to_string(min_bound) + ")"),
      dim_(dim),
      radicand_(radicand),
      min_bound_(min_bound) {}

DegenerateDim::DegenerateDim(std::size_t dim)
    : Error("funnel ratios c and d both vanish in dim " + std::to_string(dim + 1) +
            " (start and goal boxes collapse onto the attractor)"),
      dim_(dim) {}

OutsideFunnel::OutsideFunnel(std::size_t dim, bool upper, double modulated)
    : Error("state outside funnel in dim " + std::to_string(dim + 1) + " at the " +
            (upper ? "upper" : "lower") + " boundary (modulated error " +
            std::to_string(modulated) + ")"),
      dim_(dim),
      upper_(upper),
      modulated_(modulated) {}

StateBox::StateBox(Vector lower, Vector upper) : lower_(std::move(lower)), upper_(std::move(upper)) {
  if (lower_.size() != upper_.size() || lower_.size() == 0) {
    throw DomainError("box bounds must have equal nonzero dimension");
  }
  for (Index i = 0; i < lower_.size(); ++i) {
    if (!std::isfinite(lower_[i]) || !std::isfinite(upper_[i])) {
      throw DomainError("box bounds must be finite");
    }
    if (lower_[i] > upper_[i]) {
      throw DomainError("box lower bound exceeds upper bound in dim " + std::to_string(i + 1));
    }
  }
}

StateBox StateBox::cube(Index dim, double lo, double hi) {
  return {Vector::Constant(dim, lo), Vector::Constant(dim, hi)};
}

bool StateBox::has_interior() const { return dim() > 0 && (upper_.array() > lower_.array()).all(); }

bool StateBox::contains(const Vector& x) const {
  return x.size() == dim() && (x.array() >= lower_.array()).all() &&
         (x.array() <= upper_.array()).all();
}

bool StateBox::contains_interior(const Vector& x) const {
  return x.size() == dim() && (x.array() > lower_.array()).all() &&
         (x.array() < upper_.array()).all();
}

bool StateBox::contains(const StateBox& other) const {
  return other.dim() == dim() && (other.lower_.array() >= lower_.array()).all() &&
         (other.upper_.array() <= upper_.array()).all();
}

Vector StateBox::from_unit(const Vector& u) const {
  return lower_ + (upper_ - lower_).cwiseProduct(u);
}

bool StateBox::operator==(const StateBox& other) const {
  return dim() == other.dim() && lower_ == other.lower_ && upper_ == other.upper_;
}

std::vector<Vector> grid_points(const StateBox& box, int per_dim) {
  if (per_dim < 2) {
    throw DomainError("grid needs at least 2 points per dimension");
  }
  const Index n = box.dim();
  std::size_t total = 1;
  for (Index i = 0; i < n; ++i) {
    total *= static_cast<std::size_t>(per_dim);
  }
  std::vector<Vector> points;
  points.reserve(total);
  std::vector<int> idx(static_cast<std::size_t>(n), 0);
  const Vector step = box.width() / static_cast<double>(per_dim - 1);
  for (std::size_t k = 0; k < total; ++k) {
    Vector p(n);
    for (Index i = 0; i < n; ++i) {
      const int j = idx[static_cast<std::size_t>(i)];
      // Hit the far corner exactly instead of accumulating round-off.
      p[i] = j == per_dim - 1 ? box.upper()[i] : box.lower()[i] + j * step[i];
    }
    points.push_back(std::move(p));
    for (std::size_t i = 0; i < idx.size(); ++i) {
      if (++idx[i] < per_dim) break;
      idx[i] = 0;
    }
  }
  return points;
}

std::string format_vector(const Vector& v, int precision) {
  std::ostringstream os;
  os.precision(precision);
  os << '(';
  for (Index i = 0; i < v.size(); ++i) {
    if (i) os << ", ";
    os << v[i];
  }
  os << ')';
  return os.str();
}

}  // namespace gpfunnel

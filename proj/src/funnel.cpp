#include "gpfunnel/funnel.hpp"

#include "gpfunnel/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace gpfunnel {

double FunnelSpec::width(Index i, double t) const {
  return width0[i] * std::exp(-decay[i] * t) + width_inf[i];
}

double FunnelSpec::width_rate(Index i, double t) const {
  return -decay[i] * width0[i] * std::exp(-decay[i] * t);
}

Interval FunnelSpec::interval(Index i, double t) const {
  const double w = width(i, t);
  return {attractor[i] - lower_ratio[i] * w, attractor[i] + upper_ratio[i] * w};
}

StateBox FunnelSpec::box(double t) const {
  Vector lo(dim()), hi(dim());
  for (Index i = 0; i < dim(); ++i) {
    const auto iv = interval(i, t);
    lo[i] = iv.lo;
    hi[i] = iv.hi;
  }
  return {lo, hi};
}

StateBox FunnelSpec::terminal_box() const {
  return {attractor - lower_ratio.cwiseProduct(width_inf), attractor + upper_ratio.cwiseProduct(width_inf)};
}

void FunnelSpec::validate() const {
  const Index n = dim();
  if (n == 0 || width0.size() != n || width_inf.size() != n || decay.size() != n ||
      lower_ratio.size() != n || upper_ratio.size() != n) {
    throw DomainError("funnel parameters must all have the state dimension");
  }
  for (Index i = 0; i < n; ++i) {
    if (!(width0[i] > 0.0) || !(width_inf[i] > 0.0) || !(decay[i] > 0.0)) {
      throw DomainError("funnel widths and decay rates must be > 0");
    }
    if (!(lower_ratio[i] >= 0.0) || !(upper_ratio[i] >= 0.0)) {
      throw DomainError("funnel ratios must be >= 0");
    }
    if (lower_ratio[i] + upper_ratio[i] <= 0.0) throw DegenerateDim(static_cast<std::size_t>(i));
  }
  if (!attractor.allFinite()) throw DomainError("funnel attractor must be finite");
}

namespace {

struct DimChoice {
  double eta = 0.0;
  double width0 = 0.0;
  double lower = 0.0;
  double upper = 0.0;
};

// Ratios for a given attractor over the covered range [lo, hi] that must fit at t = 0.
DimChoice ratios_for(double eta, double lo, double hi) {
  DimChoice d;
  d.eta = eta;
  d.width0 = std::max(std::abs(eta - lo), std::abs(eta - hi));
  if (d.width0 > 0.0) {
    d.lower = std::abs(eta - lo) / d.width0;
    d.upper = std::abs(eta - hi) / d.width0;
  }
  return d;
}

// Moves eta towards the center of [lo, hi] until min(c, d) >= min_ratio, staying inside
// the admissible interval [adm_lo, adm_hi].
double nudge(double eta, double lo, double hi, double min_ratio, double adm_lo, double adm_hi) {
  if (eta - lo < hi - eta) {
    // c = (eta - lo) / (hi - eta) >= r
    eta = std::max(eta, (lo + min_ratio * hi) / (1.0 + min_ratio));
  } else {
    eta = std::min(eta, (hi + min_ratio * lo) / (1.0 + min_ratio));
  }
  return std::clamp(eta, adm_lo, adm_hi);
}

}  // namespace

Synthesis synthesize(const StateBox& start, const StateBox& goal, const StateBox& space,
                     const SynthesisOptions& options) {
  const Index n = space.dim();
  if (start.dim() != n || goal.dim() != n) throw DomainError("boxes must share one dimension");
  if (!goal.has_interior()) throw InfeasibleGoal("goal box has an empty interior");
  if (!space.contains(start) || !space.contains(goal)) {
    throw DomainError("start and goal boxes must lie inside the state box");
  }
  if (options.decay.size() != n || !(options.decay.array() > 0.0).all()) {
    throw DomainError("need one decay rate > 0 per dimension");
  }
  if (!(options.shrink > 0.0 && options.shrink <= 1.0)) {
    throw DomainError("width shrink factor must lie in (0, 1]");
  }
  if (options.attractor && options.attractor->size() != n) {
    throw DomainError("attractor override has the wrong dimension");
  }

  Synthesis out;
  FunnelSpec& spec = out.spec;
  spec.attractor.resize(n);
  spec.width0.resize(n);
  spec.width_inf.resize(n);
  spec.lower_ratio.resize(n);
  spec.upper_ratio.resize(n);
  spec.decay = options.decay;
  out.overlapping.assign(static_cast<std::size_t>(n), false);

  for (Index i = 0; i < n; ++i) {
    const Interval a = start.side(i);
    const Interval b = goal.side(i);
    const double margin = options.interior_margin * b.width();
    const double in_lo = b.lo + margin;
    const double in_hi = b.hi - margin;
    const std::string dim = std::to_string(i + 1);

    // Overlap branch: eta in [a] ∩ [b] ∩ Int(b), covered range is the start side.
    const double ov_lo = std::max({a.lo, b.lo});
    const double ov_hi = std::min({a.hi, b.hi});
    bool overlap = ov_lo <= ov_hi;
    double adm_lo = 0.0;
    double adm_hi = 0.0;
    if (overlap) {
      adm_lo = std::max(ov_lo, in_lo);
      adm_hi = std::min(ov_hi, in_hi);
      if (adm_lo > adm_hi) {
        // Overlap touches the goal only on its boundary.
        out.warnings.push_back("dim " + dim +
                               ": start/goal overlap misses the goal interior; using the "
                               "disjoint construction");
        overlap = false;
      }
    }
    double lo = 0.0;
    double hi = 0.0;
    if (overlap) {
      lo = a.lo;
      hi = a.hi;
    } else {
      adm_lo = in_lo;
      adm_hi = in_hi;
      lo = std::min(a.lo, b.lo);
      hi = std::max(a.hi, b.hi);
    }
    out.overlapping[static_cast<std::size_t>(i)] = overlap;

    double eta = 0.5 * (adm_lo + adm_hi);
    if (options.attractor) {
      eta = (*options.attractor)[i];
      const double open_lo = overlap ? std::max(ov_lo, b.lo) : b.lo;
      const double open_hi = overlap ? std::min(ov_hi, b.hi) : b.hi;
      const bool admissible = eta > b.lo && eta < b.hi && eta >= open_lo && eta <= open_hi;
      if (!admissible) {
        throw InfeasibleGoal("attractor override " + std::to_string(eta) + " is not admissible in dim " + dim);
      }
    }

    DimChoice choice = ratios_for(eta, lo, hi);
    if (choice.width0 <= 0.0) throw DegenerateDim(static_cast<std::size_t>(i));
    if (std::min(choice.lower, choice.upper) < options.min_ratio) {
      const double moved = nudge(eta, lo, hi, options.min_ratio, std::nextafter(b.lo, b.hi),
                                 std::nextafter(b.hi, b.lo));
      choice = ratios_for(moved, lo, hi);
      if (choice.lower + choice.upper <= 0.0 || std::min(choice.lower, choice.upper) <= 0.0) {
        throw DegenerateDim(static_cast<std::size_t>(i));
      }
      out.warnings.push_back("dim " + dim + ": attractor moved from " + std::to_string(eta) +
                             " to " + std::to_string(moved) + " to keep both funnel ratios positive");
    }

    const double clearance = std::min(choice.eta - b.lo, b.hi - choice.eta);
    if (!(clearance > 0.0)) {
      throw InfeasibleGoal("attractor is not in the goal interior in dim " + dim);
    }
    double winf = options.shrink * clearance / std::max(choice.lower, choice.upper);
    // Strict containment of the terminal interval in the goal.
    while (choice.eta - choice.lower * winf < b.lo || choice.eta + choice.upper * winf > b.hi) {
      winf = std::nextafter(winf, 0.0);
    }

    spec.attractor[i] = choice.eta;
    spec.width0[i] = choice.width0;
    spec.lower_ratio[i] = choice.lower;
    spec.upper_ratio[i] = choice.upper;
    spec.width_inf[i] = winf;
  }
  spec.validate();
  return out;
}

double transform_scalar(double m, double c, double d) {
  // ln(d (c + m)) - ln(c (d - m)) = log1p(m / c) - log1p(-m / d)
  return std::log1p(m / c) - std::log1p(-m / d);
}

double inverse_transform_scalar(double xi, double c, double d) {
  // m = c d (e^xi - 1) / (d + c e^xi), evaluated without overflow.
  double m = 0.0;
  if (xi >= 0.0) {
    const double em = std::exp(-xi);
    m = c * d * (-std::expm1(-xi)) / (d * em + c);
  } else {
    m = c * d * std::expm1(xi) / (d + c * std::exp(xi));
  }
  return std::clamp(m, std::nextafter(-c, 0.0), std::nextafter(d, 0.0));
}

TransformedError transform(const FunnelSpec& spec, const Vector& x, double t) {
  const Index n = spec.dim();
  if (x.size() != n) throw DomainError("state dimension does not match the funnel");
  TransformedError e{Vector(n), Vector(n), Vector(n), Vector(n)};
  for (Index i = 0; i < n; ++i) {
    const double c = spec.lower_ratio[i];
    const double d = spec.upper_ratio[i];
    const double w = spec.width(i, t);
    const double m = (x[i] - spec.attractor[i]) / w;
    if (!(m > -c)) throw OutsideFunnel(static_cast<std::size_t>(i), false, m);
    if (!(m < d)) throw OutsideFunnel(static_cast<std::size_t>(i), true, m);
    e.modulated[i] = m;
    e.xi[i] = transform_scalar(m, c, d);
    e.phi[i] = (c + d) / ((c + m) * (d - m)) / w;
    e.alpha[i] = -spec.width_rate(i, t) / w;
  }
  return e;
}

Vector inverse_transform(const FunnelSpec& spec, const Vector& xi) {
  if (xi.size() != spec.dim()) throw DomainError("dimension does not match the funnel");
  Vector m(xi.size());
  for (Index i = 0; i < xi.size(); ++i) {
    m[i] = inverse_transform_scalar(xi[i], spec.lower_ratio[i], spec.upper_ratio[i]);
  }
  return m;
}

}  // namespace gpfunnel

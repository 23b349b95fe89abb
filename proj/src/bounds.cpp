#include "gpfunnel/bounds.hpp"

#include "gpfunnel/errors.hpp"

#include <boost/math/special_functions/beta.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numbers>
#include <random>
#include <thread>

namespace gpfunnel {

std::string to_string(BoundKind kind) {
  switch (kind) {
    case BoundKind::probabilistic: return "probabilistic";
    case BoundKind::deterministic: return "deterministic";
    case BoundKind::monte_carlo: return "monte_carlo";
  }
  return "unknown";
}

BoundKind bound_kind_from_string(const std::string& name) {
  if (name == "probabilistic") return BoundKind::probabilistic;
  if (name == "deterministic") return BoundKind::deterministic;
  if (name == "monte_carlo") return BoundKind::monte_carlo;
  throw InputError("unknown bound method '" + name +
                   "' (expected probabilistic, deterministic or monte_carlo)");
}

void BoundSet::validate() const {
  for (Index i = 0; i < scale.size(); ++i) {
    if (!(scale[i] >= 0.0) || !std::isfinite(scale[i])) {
      throw DomainError("bound scale must be finite and >= 0");
    }
  }
  if (!(confidence.lo >= 0.0 && confidence.lo <= confidence.hi && confidence.hi <= 1.0)) {
    throw DomainError("bound confidence must be a sub-interval of [0, 1]");
  }
  if (kind == BoundKind::deterministic && confidence.lo != 1.0) {
    throw DomainError("deterministic bounds hold with confidence 1");
  }
}

double beta_probabilistic(double rkhs_norm, double gamma, Index samples, double epsilon) {
  if (!(epsilon > 0.0 && epsilon < 1.0)) {
    throw DomainError("epsilon must lie in (0, 1)");
  }
  if (!(gamma >= 0.0)) throw DomainError("information gain must be >= 0");
  if (!(rkhs_norm >= 0.0)) throw DomainError("RKHS norm bound must be >= 0");
  if (samples < 1) throw DomainError("sample count must be >= 1");
  const double l = std::log((static_cast<double>(samples) + 1.0) / epsilon);
  return std::sqrt(2.0 * rkhs_norm * rkhs_norm + 300.0 * gamma * l * l * l);
}

BoundSet probabilistic_bound_set(const Vector& rkhs_norm, const Vector& gamma, Index samples,
                                 double epsilon) {
  if (rkhs_norm.size() != gamma.size()) {
    throw DomainError("need one RKHS norm bound and one information gain per dimension");
  }
  BoundSet b;
  b.kind = BoundKind::probabilistic;
  b.scale.resize(gamma.size());
  for (Index i = 0; i < gamma.size(); ++i) {
    b.scale[i] = beta_probabilistic(rkhs_norm[i], gamma[i], samples, epsilon);
  }
  b.epsilon = epsilon;
  b.confidence = {std::pow(1.0 - epsilon, static_cast<double>(gamma.size())), 1.0};
  return b;
}

GreedyInfoGain info_gain_greedy(const GPModel& model, const StateBox& box, Index budget, Index i,
                                Index candidates) {
  const double noise = model.data().noise_std();
  if (!(noise > 0.0)) throw DomainError("information gain needs noise_std > 0");
  if (budget < 1) throw DomainError("information gain budget must be >= 1");
  if (candidates < 1) throw DomainError("need at least one candidate point");

  const auto per_dim = std::max<int>(
      2, static_cast<int>(std::ceil(std::pow(static_cast<double>(candidates),
                                             1.0 / static_cast<double>(box.dim())) - 1e-9)));
  const auto points = grid_points(box, per_dim);
  const auto m = static_cast<Index>(points.size());
  const SeKernel& kernel = model.params()[i];
  const double noise2 = noise * noise;

  // Posterior covariance after t noisy picks: k(a, b) - sum_t v_t[a] v_t[b].
  Vector var = Vector::Constant(m, kernel.signal_std * kernel.signal_std);
  Matrix factors(m, budget);
  GreedyInfoGain out;
  for (Index t = 0; t < budget; ++t) {
    Index best = 0;
    var.maxCoeff(&best);
    const double vb = std::max(var[best], 0.0);
    out.greedy_value += 0.5 * std::log1p(vb / noise2);
    const double denom = std::sqrt(vb + noise2);
    for (Index c = 0; c < m; ++c) {
      double cov = kernel(points[static_cast<std::size_t>(c)], points[static_cast<std::size_t>(best)]);
      for (Index s = 0; s < t; ++s) cov -= factors(c, s) * factors(best, s);
      factors(c, t) = cov / denom;
    }
    var -= factors.col(t).cwiseAbs2();
    ++out.selected;
  }
  out.gamma = out.greedy_value / (1.0 - std::exp(-1.0));
  return out;
}

double kernel_grad_sup(const SeKernel& kernel) {
  // |d/dr s^2 exp(-r^2 / 2l^2)| peaks at r = l.
  return kernel.signal_std * kernel.signal_std * std::exp(-0.5) / kernel.lengthscales.minCoeff();
}

double rkhs_bound(double lipschitz, const KernelParams& params, Index i) {
  if (!(lipschitz > 0.0) || !std::isfinite(lipschitz)) {
    throw DomainError("Lipschitz constant must be finite and > 0");
  }
  return lipschitz / std::sqrt(2.0 * kernel_grad_sup(params[i]));
}

RkhsBound rkhs_bounds(const Vector& lipschitz, const KernelParams& params) {
  if (lipschitz.size() != params.size()) {
    throw DomainError("need one Lipschitz constant per output dimension");
  }
  RkhsBound r{Vector(lipschitz.size()), lipschitz, Vector(lipschitz.size())};
  for (Index i = 0; i < lipschitz.size(); ++i) {
    r.kernel_grad_sup[i] = kernel_grad_sup(params[i]);
    r.bound[i] = rkhs_bound(lipschitz[i], params, i);
  }
  return r;
}

double estimate_lipschitz_sqrt(const Dataset& data, Index i) {
  const Matrix& x = data.inputs();
  const Matrix& y = data.targets();
  double best = 0.0;
  bool any_pair = false;
  for (Index a = 0; a < data.size(); ++a) {
    for (Index b = a + 1; b < data.size(); ++b) {
      const double dist = (x.row(a) - x.row(b)).lpNorm<Eigen::Infinity>();
      if (dist == 0.0) continue;
      any_pair = true;
      best = std::max(best, std::abs(y(a, i) - y(b, i)) / std::sqrt(dist));
    }
  }
  if (!any_pair) {
    throw DomainError("Lipschitz estimate needs at least two distinct inputs");
  }
  return best;
}

double beta_deterministic(double rkhs_bound, const GPModel& model, Index i) {
  const double excess = model.quadratic_form(i) - static_cast<double>(model.data().size());
  const double radicand = rkhs_bound * rkhs_bound - excess;
  if (radicand < 0.0) throw NegativeRadicand(static_cast<std::size_t>(i), radicand, std::sqrt(excess));
  return std::sqrt(radicand);
}

BoundSet deterministic_bound_set(const Vector& rkhs_bound, const GPModel& model) {
  if (rkhs_bound.size() != model.dim()) {
    throw DomainError("need one RKHS norm bound per output dimension");
  }
  BoundSet b;
  b.kind = BoundKind::deterministic;
  b.scale.resize(model.dim());
  for (Index i = 0; i < model.dim(); ++i) b.scale[i] = beta_deterministic(rkhs_bound[i], model, i);
  b.confidence = {1.0, 1.0};
  return b;
}

Interval clopper_pearson(std::uint64_t hits, std::uint64_t trials, double confidence_level) {
  if (trials == 0 || hits > trials) throw DomainError("need 0 <= hits <= trials and trials >= 1");
  if (!(confidence_level > 0.0 && confidence_level < 1.0)) {
    throw DomainError("confidence level must lie in (0, 1)");
  }
  const double tail = 0.5 * (1.0 - confidence_level);
  const auto k = static_cast<double>(hits);
  const auto n = static_cast<double>(trials);
  Interval iv;
  iv.lo = hits == 0 ? 0.0 : boost::math::ibeta_inv(k, n - k + 1.0, tail);
  iv.hi = hits == trials ? 1.0 : boost::math::ibetac_inv(k + 1.0, n - k, tail);
  return iv;
}

namespace {

constexpr std::uint64_t kChunk = 1u << 15;

std::mt19937_64 chunk_stream(std::uint64_t seed, std::uint64_t chunk) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(chunk), static_cast<std::uint32_t>(chunk >> 32)};
  return std::mt19937_64(seq);
}

// Runs body(chunk, rng, begin, end) over fixed chunks of the trial range, in parallel.
// Each chunk owns its RNG stream, so results do not depend on the thread count.
template <typename Body>
void for_each_chunk(const CoverageOptions& options, Body&& body) {
  const std::uint64_t chunks = (options.trials + kChunk - 1) / kChunk;
  unsigned threads = options.threads ? options.threads : std::thread::hardware_concurrency();
  threads = static_cast<unsigned>(std::clamp<std::uint64_t>(threads, 1, std::max<std::uint64_t>(chunks, 1)));
  std::atomic<std::uint64_t> next{0};
  auto worker = [&] {
    for (std::uint64_t c = next++; c < chunks; c = next++) {
      auto rng = chunk_stream(options.seed, c);
      const std::uint64_t begin = c * kChunk;
      body(c, rng, begin, std::min(options.trials, begin + kChunk));
    }
  };
  if (threads == 1) {
    worker();
    return;
  }
  std::vector<std::jthread> pool;
  for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
}

Vector sample_state(const StateBox& box, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Vector u(box.dim());
  for (Index j = 0; j < u.size(); ++j) u[j] = unit(rng);
  return box.from_unit(u);
}

}  // namespace

CoverageReport monte_carlo_coverage(const GPModel& model, const Dynamics& truth,
                                    const StateBox& box, const Envelope& envelope,
                                    const CoverageOptions& options) {
  if (options.trials < 1) throw DomainError("need at least one Monte-Carlo trial");
  if (envelope.values.size() != model.dim() || box.dim() != model.dim()) {
    throw DomainError("envelope and box must match the model dimension");
  }
  const std::uint64_t chunks = (options.trials + kChunk - 1) / kChunk;
  std::vector<std::uint64_t> hits(chunks, 0);
  for_each_chunk(options, [&](std::uint64_t c, std::mt19937_64& rng, std::uint64_t begin,
                              std::uint64_t end) {
    std::uint64_t h = 0;
    for (std::uint64_t t = begin; t < end; ++t) {
      const Vector x = sample_state(box, rng);
      const Vector err = (truth(x) - model.mean(x)).cwiseAbs();
      const Vector limit = envelope.mode == EnvelopeMode::constant
                               ? envelope.values
                               : Vector(envelope.values.cwiseProduct(model.stddev(x)));
      if ((err.array() <= limit.array()).all()) ++h;
    }
    hits[c] = h;
  });

  CoverageReport report;
  report.envelope = envelope;
  report.trials = options.trials;
  for (auto h : hits) report.hits += h;
  report.confidence_level = options.confidence_level;
  report.seed = options.seed;
  report.interval = clopper_pearson(report.hits, report.trials, options.confidence_level);
  return report;
}

double calibrate_common_scale(const GPModel& model, const Dynamics& truth, const StateBox& box,
                              const Vector& reference, double target,
                              const CoverageOptions& options) {
  if (!(target > 0.0 && target <= 1.0)) throw DomainError("target coverage must lie in (0, 1]");
  if (options.trials < 1) throw DomainError("need at least one Monte-Carlo trial");
  if (reference.size() != model.dim() || !(reference.array() > 0.0).all()) {
    throw DomainError("reference envelope must be positive, one entry per dimension");
  }
  std::vector<double> ratio(options.trials);
  for_each_chunk(options, [&](std::uint64_t, std::mt19937_64& rng, std::uint64_t begin,
                              std::uint64_t end) {
    for (std::uint64_t t = begin; t < end; ++t) {
      const Vector x = sample_state(box, rng);
      ratio[t] = (truth(x) - model.mean(x)).cwiseAbs().cwiseQuotient(reference).maxCoeff();
    }
  });
  const auto need = static_cast<std::uint64_t>(std::ceil(target * static_cast<double>(options.trials) - 1e-9));
  const auto k = static_cast<std::ptrdiff_t>(std::clamp<std::uint64_t>(need, 1, options.trials) - 1);
  std::nth_element(ratio.begin(), ratio.begin() + k, ratio.end());
  return ratio[static_cast<std::size_t>(k)];
}

BoundSet monte_carlo_bound_set(const CoverageReport& report, const Vector& sigma_bar) {
  BoundSet b;
  b.kind = BoundKind::monte_carlo;
  if (report.envelope.mode == EnvelopeMode::pointwise) {
    b.scale = report.envelope.values;
  } else {
    if (sigma_bar.size() != report.envelope.values.size() || !(sigma_bar.array() > 0.0).all()) {
      throw DomainError("constant envelopes need a positive max std per dimension");
    }
    b.scale = report.envelope.values.cwiseQuotient(sigma_bar);
  }
  b.confidence = report.interval;
  return b;
}

}  // namespace gpfunnel

#include "gpfunnel/io.hpp"

#include "ini.hpp"

#include <fmt/format.h>

#include <charconv>
#include <fstream>
#include <sstream>

namespace gpfunnel {

namespace {

using ini::format_number;

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) {
    const auto b = cell.find_first_not_of(" \t");
    const auto e = cell.find_last_not_of(" \t\r");
    out.push_back(b == std::string::npos ? std::string() : cell.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

CsvTable read_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open '" + path.string() + "'");
  CsvTable table;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (lineno == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto cells = split_csv(line);
    if (table.header.empty()) {
      table.header = std::move(cells);
      continue;
    }
    if (cells.size() != table.header.size()) {
      throw InputError(fmt::format("{}:{}: expected {} columns, found {}", path.string(), lineno,
                                   table.header.size(), cells.size()));
    }
    std::vector<double> row(cells.size());
    for (std::size_t k = 0; k < cells.size(); ++k) {
      const std::string& c = cells[k];
      auto [ptr, ec] = std::from_chars(c.data(), c.data() + c.size(), row[k]);
      if (c.empty() || ec != std::errc() || ptr != c.data() + c.size()) {
        throw InputError(fmt::format("{}:{}: column '{}' is not a number: '{}'", path.string(), lineno,
                                     table.header[k], c));
      }
    }
    table.rows.push_back(std::move(row));
  }
  if (table.header.empty()) throw InputError("'" + path.string() + "' is empty");
  return table;
}

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write '" + path.string() + "'");
  return out;
}

void append_row(std::string& line, double v) {
  line += ',';
  line += format_number(v);
}

}  // namespace

Dataset read_dataset_csv(const fs::path& path, double noise_std) {
  const CsvTable table = read_csv(path);
  const auto cols = table.header.size();
  if (cols < 2 || cols % 2) {
    throw InputError("'" + path.string() + "': header needs columns x_1..x_n, y_1..y_n");
  }
  const Index n = static_cast<Index>(cols / 2);
  for (Index i = 0; i < n; ++i) {
    const auto xi = "x_" + std::to_string(i + 1);
    const auto yi = "y_" + std::to_string(i + 1);
    if (table.header[static_cast<std::size_t>(i)] != xi || table.header[static_cast<std::size_t>(n + i)] != yi) {
      throw InputError("'" + path.string() + "': header needs columns x_1..x_n, y_1..y_n in order");
    }
  }
  if (table.rows.empty()) throw InputError("'" + path.string() + "' has no samples");
  Matrix inputs(static_cast<Index>(table.rows.size()), n);
  Matrix targets(inputs.rows(), n);
  for (std::size_t k = 0; k < table.rows.size(); ++k) {
    for (Index i = 0; i < n; ++i) {
      inputs(static_cast<Index>(k), i) = table.rows[k][static_cast<std::size_t>(i)];
      targets(static_cast<Index>(k), i) = table.rows[k][static_cast<std::size_t>(n + i)];
    }
  }
  try {
    return {inputs, targets, noise_std};
  } catch (const DomainError& e) {
    throw InputError("'" + path.string() + "': " + e.what());
  }
}

void write_dataset_csv(const fs::path& path, const Dataset& data) {
  auto out = open_out(path);
  const Index n = data.dim();
  std::string line;
  for (Index i = 0; i < n; ++i) line += (i ? ",x_" : "x_") + std::to_string(i + 1);
  for (Index i = 0; i < n; ++i) line += ",y_" + std::to_string(i + 1);
  out << line << '\n';
  for (Index k = 0; k < data.size(); ++k) {
    line = format_number(data.inputs()(k, 0));
    for (Index i = 1; i < n; ++i) append_row(line, data.inputs()(k, i));
    for (Index i = 0; i < n; ++i) append_row(line, data.targets()(k, i));
    out << line << '\n';
  }
}

void write_trajectory_csv(const fs::path& path, const Trajectory& traj) {
  if (traj.size() == 0) throw DomainError("empty trajectory");
  auto out = open_out(path);
  const Index n = traj.states.front().size();
  const Index m = traj.inputs.front().size();
  std::string line = "t";
  for (Index i = 0; i < n; ++i) line += ",x_" + std::to_string(i + 1);
  for (Index j = 0; j < m; ++j) line += ",u_" + std::to_string(j + 1);
  for (Index i = 0; i < n; ++i) line += ",xi_" + std::to_string(i + 1);
  line += ",V";
  for (Index i = 0; i < n; ++i) line += fmt::format(",lb_{0},ub_{0}", i + 1);
  out << line << '\n';
  for (std::size_t k = 0; k < traj.size(); ++k) {
    line = format_number(traj.times[k]);
    for (Index i = 0; i < n; ++i) append_row(line, traj.states[k][i]);
    for (Index j = 0; j < m; ++j) append_row(line, traj.inputs[k][j]);
    for (Index i = 0; i < n; ++i) append_row(line, traj.xi[k][i]);
    append_row(line, traj.lyapunov[k]);
    for (Index i = 0; i < n; ++i) {
      append_row(line, traj.lower[k][i]);
      append_row(line, traj.upper[k][i]);
    }
    out << line << '\n';
  }
}

Trajectory read_trajectory_csv(const fs::path& path) {
  const CsvTable table = read_csv(path);
  const auto& h = table.header;
  auto count_prefix = [&](const std::string& prefix) {
    Index c = 0;
    while (std::find(h.begin(), h.end(), prefix + std::to_string(c + 1)) != h.end()) ++c;
    return c;
  };
  const Index n = count_prefix("x_");
  const Index m = count_prefix("u_");
  const auto expected = static_cast<std::size_t>(1 + n + m + n + 1 + 2 * n);
  if (n == 0 || h.size() != expected || h[0] != "t" || count_prefix("xi_") != n ||
      h[static_cast<std::size_t>(1 + 2 * n + m)] != "V") {
    throw InputError("'" + path.string() + "' does not have the trajectory columns t, x_*, u_*, xi_*, V, lb_*/ub_*");
  }
  Trajectory traj;
  for (const auto& row : table.rows) {
    std::size_t c = 0;
    auto take = [&](Index count) {
      Vector v(count);
      for (Index i = 0; i < count; ++i) v[i] = row[c++];
      return v;
    };
    traj.times.push_back(row[c++]);
    traj.states.push_back(take(n));
    traj.inputs.push_back(take(m));
    traj.xi.push_back(take(n));
    traj.lyapunov.push_back(row[c++]);
    Vector lo(n), hi(n);
    for (Index i = 0; i < n; ++i) {
      lo[i] = row[c++];
      hi[i] = row[c++];
    }
    traj.lower.push_back(lo);
    traj.upper.push_back(hi);
  }
  return traj;
}

void write_funnel_bounds_csv(const fs::path& path, const FunnelSpec& spec, double t_max, double dt) {
  if (!(dt > 0.0) || !(t_max >= 0.0)) throw DomainError("funnel bounds need dt > 0 and t_max >= 0");
  auto out = open_out(path);
  const Index n = spec.dim();
  std::string line = "t";
  for (Index i = 0; i < n; ++i) line += ",lb_" + std::to_string(i + 1);
  for (Index i = 0; i < n; ++i) line += ",ub_" + std::to_string(i + 1);
  out << line << '\n';
  const auto steps = static_cast<long long>(std::llround(std::ceil(t_max / dt - 1e-9)));
  for (long long k = 0; k <= steps; ++k) {
    const double t = std::min(t_max, static_cast<double>(k) * dt);
    line = format_number(t);
    for (Index i = 0; i < n; ++i) append_row(line, spec.interval(i, t).lo);
    for (Index i = 0; i < n; ++i) append_row(line, spec.interval(i, t).hi);
    out << line << '\n';
  }
}

std::string coverage_csv_header(Index dim) {
  std::string h = "mode";
  for (Index i = 0; i < dim; ++i) h += ",value_" + std::to_string(i + 1);
  return h + ",hits,trials,empirical,lower,upper,confidence_level,seed";
}

std::string coverage_csv_row(const CoverageReport& r) {
  std::string line = r.envelope.mode == EnvelopeMode::constant ? "constant" : "pointwise";
  for (Index i = 0; i < r.envelope.values.size(); ++i) append_row(line, r.envelope.values[i]);
  line += fmt::format(",{},{}", r.hits, r.trials);
  append_row(line, r.empirical());
  append_row(line, r.interval.lo);
  append_row(line, r.interval.hi);
  append_row(line, r.confidence_level);
  return line + "," + std::to_string(r.seed);
}

std::string format_coverage(const CoverageReport& r) {
  const bool constant = r.envelope.mode == EnvelopeMode::constant;
  std::string s;
  s += fmt::format("envelope        {} {}\n", constant ? "|f - mu| <=" : "|f - mu| <= sigma *",
                   format_vector(r.envelope.values));
  s += fmt::format("hits / trials   {} / {} = {:.6f}\n", r.hits, r.trials, r.empirical());
  s += fmt::format("interval        [{:.6f}, {:.6f}] at confidence 1 - {:.3g}\n", r.interval.lo,
                   r.interval.hi, 1.0 - r.confidence_level);
  s += fmt::format("seed            {}\n", r.seed);
  s += "states were sampled uniformly; the for-all-x event is estimated, not proven\n";
  return s;
}

void save_model(const fs::path& path, const GPModel& model, const fs::path& dataset_csv) {
  ini::Writer w;
  w.format("model", kFileFormatVersion);
  const fs::path base = path.has_parent_path() ? path.parent_path() : fs::path(".");
  w.set("data", "path", fs::proximate(dataset_csv, base).generic_string());
  w.set("data", "noise_std", model.data().noise_std());
  w.set("data", "samples", static_cast<double>(model.data().size()));
  w.set("box", "lower", model.box().lower());
  w.set("box", "upper", model.box().upper());
  w.set("fit", "jitter", model.options().jitter);
  for (Index i = 0; i < model.dim(); ++i) {
    const auto section = "kernel_" + std::to_string(i + 1);
    w.set(section, "signal_std", model.params()[i].signal_std);
    w.set(section, "lengthscales", model.params()[i].lengthscales);
  }
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  w.save(path);
}

GPModel load_model(const fs::path& path) {
  auto r = ini::Reader::from_file(path);
  r.expect_format("model", kFileFormatVersion);
  fs::path data_path = r.require_text("data", "path");
  if (data_path.is_relative() && path.has_parent_path()) data_path = path.parent_path() / data_path;
  const double noise = r.require_number("data", "noise_std");
  const auto samples = r.integer("data", "samples");
  const StateBox box(r.require_numbers("box", "lower"), r.require_numbers("box", "upper"));
  FitOptions fit;
  fit.jitter = r.number("fit", "jitter").value_or(0.0);
  KernelParams params;
  for (Index i = 0; r.has_section("kernel_" + std::to_string(i + 1)); ++i) {
    const auto section = "kernel_" + std::to_string(i + 1);
    params.dims.push_back({r.require_number(section, "signal_std"), r.require_numbers(section, "lengthscales")});
  }
  r.reject_unknown();
  Dataset data = read_dataset_csv(data_path, noise);
  if (samples && *samples != data.size()) {
    throw InputError(fmt::format("{}: expects {} samples but '{}' has {}", path.string(), *samples,
                                 data_path.string(), data.size()));
  }
  try {
    return GPModel(std::move(data), std::move(params), box, fit);
  } catch (const DomainError& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

void save_bounds(const fs::path& path, const BoundSet& b) {
  b.validate();
  ini::Writer w;
  w.format("bounds", kFileFormatVersion);
  w.set("bounds", "kind", to_string(b.kind));
  w.set("bounds", "scale", b.scale);
  w.set("bounds", "confidence_lower", b.confidence.lo);
  w.set("bounds", "confidence_upper", b.confidence.hi);
  if (!std::isnan(b.epsilon)) w.set("bounds", "epsilon", b.epsilon);
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  w.save(path);
}

BoundSet load_bounds(const fs::path& path) {
  auto r = ini::Reader::from_file(path);
  r.expect_format("bounds", kFileFormatVersion);
  BoundSet b;
  try {
    b.kind = bound_kind_from_string(r.require_text("bounds", "kind"));
  } catch (const Error& e) {
    throw InputError(path.string() + ": " + e.what());
  }
  b.scale = r.require_numbers("bounds", "scale");
  b.confidence = {r.require_number("bounds", "confidence_lower"), r.require_number("bounds", "confidence_upper")};
  b.epsilon = r.number("bounds", "epsilon").value_or(std::numeric_limits<double>::quiet_NaN());
  r.reject_unknown();
  try {
    b.validate();
  } catch (const DomainError& e) {
    throw InputError(path.string() + ": " + e.what());
  }
  return b;
}

void save_funnel(const fs::path& path, const FunnelSpec& spec) {
  spec.validate();
  ini::Writer w;
  w.format("funnel", kFileFormatVersion);
  w.set("funnel", "attractor", spec.attractor);
  w.set("funnel", "width0", spec.width0);
  w.set("funnel", "width_inf", spec.width_inf);
  w.set("funnel", "decay", spec.decay);
  w.set("funnel", "lower_ratio", spec.lower_ratio);
  w.set("funnel", "upper_ratio", spec.upper_ratio);
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  w.save(path);
}

FunnelSpec load_funnel(const fs::path& path) {
  auto r = ini::Reader::from_file(path);
  r.expect_format("funnel", kFileFormatVersion);
  FunnelSpec spec;
  spec.attractor = r.require_numbers("funnel", "attractor");
  spec.width0 = r.require_numbers("funnel", "width0");
  spec.width_inf = r.require_numbers("funnel", "width_inf");
  spec.decay = r.require_numbers("funnel", "decay");
  spec.lower_ratio = r.require_numbers("funnel", "lower_ratio");
  spec.upper_ratio = r.require_numbers("funnel", "upper_ratio");
  r.reject_unknown();
  try {
    spec.validate();
  } catch (const DomainError& e) {
    throw InputError(path.string() + ": " + e.what());
  }
  return spec;
}

void write_text(const fs::path& path, const std::string& text) {
  auto out = open_out(path);
  out << text;
}

}  // namespace gpfunnel

#pragma once

// File formats. CSVs are plain comma-separated with a header row; the model, bounds and
// funnel files are sectioned key = value text with a [format] kind/version header.

#include "gpfunnel/bounds.hpp"
#include "gpfunnel/funnel.hpp"
#include "gpfunnel/gp.hpp"
#include "gpfunnel/sim.hpp"

#include <filesystem>
#include <string>

namespace gpfunnel {

namespace fs = std::filesystem;

inline constexpr int kFileFormatVersion = 1;

/// Columns x_1..x_n, y_1..y_n. The noise level is not part of the file.
Dataset read_dataset_csv(const fs::path& path, double noise_std);
void write_dataset_csv(const fs::path& path, const Dataset& data);

/// Columns t, x_1..x_n, u_1..u_m, xi_1..xi_n, V, lb_1, ub_1, ..., lb_n, ub_n.
void write_trajectory_csv(const fs::path& path, const Trajectory& traj);
/// State and input dimensions are recovered from the header. lyapunov_bound is not stored
/// and comes back empty.
Trajectory read_trajectory_csv(const fs::path& path);

/// Columns t, lb_1..lb_n, ub_1..ub_n sampled every `dt` on [0, t_max].
void write_funnel_bounds_csv(const fs::path& path, const FunnelSpec& spec, double t_max, double dt);

std::string coverage_csv_header(Index dim);
std::string coverage_csv_row(const CoverageReport& report);
std::string format_coverage(const CoverageReport& report);

/// The model file refers to the dataset CSV by a path relative to the model file.
void save_model(const fs::path& path, const GPModel& model, const fs::path& dataset_csv);
GPModel load_model(const fs::path& path);

void save_bounds(const fs::path& path, const BoundSet& bounds);
BoundSet load_bounds(const fs::path& path);

void save_funnel(const fs::path& path, const FunnelSpec& spec);
FunnelSpec load_funnel(const fs::path& path);

/// Writes `text` verbatim, creating parent directories.
void write_text(const fs::path& path, const std::string& text);

}  // namespace gpfunnel

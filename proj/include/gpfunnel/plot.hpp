#pragma once

// Self-contained SVG figures. The data behind each figure is also written as CSV, so
// these are a convenience, not the record.

#include "gpfunnel/funnel.hpp"
#include "gpfunnel/sim.hpp"

#include <string>
#include <vector>

namespace gpfunnel {

/// Trajectories projected on coordinates (0, 1) with the start and goal boxes drawn in.
std::string plot_state_space(const std::vector<Trajectory>& runs, const StateBox& start, const StateBox& goal,
                             const StateBox& view);

/// One panel per coordinate: x_i(t) of every run between the funnel bounds.
std::string plot_funnel_time(const std::vector<Trajectory>& runs, const FunnelSpec& spec, double t_max);

}  // namespace gpfunnel

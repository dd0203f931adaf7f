#pragma once

#include <span>
#include <string>

#include "emfi/analysis.hpp"
#include "emfi/io.hpp"
#include "emfi/record.hpp"

namespace emfi {

// Self-contained SVG plots; no timestamps or external references, so
// identical inputs produce identical bytes.

// Per-trial top-1 histogram with baseline and theta_major markers.
std::string histogram_svg(const HistogramReport& report, double baseline_top1, double theta_major,
                          const std::string& title);

// Lateral outcome scatter. Points are layered C0, C1, C3, C2 so rare
// persistent events stay visible on top of the dense background.
std::string spatial_scatter_svg(std::span<const TrialRecord> records, const std::string& title);

// r_persist vs r_fail plane, one point per (model, timing, mode) group.
std::string rate_plane_svg(std::span<const GroupedRates> groups, const std::string& title);

}  // namespace emfi

#pragma once

#include <string>
#include <string_view>

#include "emfi/surface.hpp"
#include "emfi/workload.hpp"

namespace emfi {

// A parsed calibration file: the fault surface plus any model-profile
// overrides it carries.
struct Calibration {
    FaultSurface surface;
    ProfileTable profiles;
    std::string text;
    uint64_t text_hash = 0;
};

Calibration parse_calibration(std::string_view text, std::string origin);
Calibration load_calibration(const std::string& path);

// The calibration shipped with the tool (identical to data/default-surface.emfi).
const Calibration& default_calibration();
std::string_view default_calibration_text();

}  // namespace emfi

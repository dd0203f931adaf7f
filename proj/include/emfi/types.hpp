#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace emfi {

// Pulse timing relative to inference start: During = pulse after the
// workload has begun (delay > 0), Before = pulse into the idle loaded
// device (delay < 0).
enum class Timing { During, Before };

// Inference dispatch mode of the workload.
enum class Mode { Sync, Async };

enum class Orientation { CW, CCW };

// Ground-truth event produced by a pulse, as distinct from the class
// later assigned by trial analysis.
enum class OutcomeKind { NoFault, TransientFlip, PersistentCorruption, Hang };

// The two persistent-corruption phenomenologies.
enum class Subregime { PartialCollapse, SaturatedSingleClass };

// Trial outcome classes: C0 unchanged, C1 minor perturbation, C2 major
// persistent degradation, C3 device failure.
enum class OutcomeClass { C0, C1, C2, C3 };

struct PhysicalOutcome {
    OutcomeKind kind = OutcomeKind::NoFault;
    int flip_count = 0;                                  // TransientFlip only, >= 1
    Subregime subregime = Subregime::PartialCollapse;    // PersistentCorruption only

    bool operator==(const PhysicalOutcome&) const = default;
};

// Error families. The CLI maps ConfigError -> exit 2 and DataError -> exit 3.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Device did not respond; drives the watchdog recovery path.
struct LivenessError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Operation attempted in an invalid device state (e.g. no model loaded).
struct StateError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string_view to_string(Timing t);
std::string_view to_string(Mode m);
std::string_view to_string(Orientation o);
std::string_view to_string(OutcomeKind k);
std::string_view to_string(Subregime s);
std::string_view to_string(OutcomeClass c);

Timing timing_from_string(std::string_view s);
Mode mode_from_string(std::string_view s);
Orientation orientation_from_string(std::string_view s);
OutcomeClass outcome_class_from_string(std::string_view s);

}  // namespace emfi

#include "emfi/types.hpp"

namespace emfi {

std::string_view to_string(Timing t) { return t == Timing::During ? "During" : "Before"; }
std::string_view to_string(Mode m) { return m == Mode::Sync ? "Sync" : "Async"; }
std::string_view to_string(Orientation o) { return o == Orientation::CW ? "CW" : "CCW"; }

std::string_view to_string(OutcomeKind k) {
    switch (k) {
        case OutcomeKind::NoFault: return "NoFault";
        case OutcomeKind::TransientFlip: return "TransientFlip";
        case OutcomeKind::PersistentCorruption: return "PersistentCorruption";
        case OutcomeKind::Hang: return "Hang";
    }
    return "?";
}

std::string_view to_string(Subregime s) {
    return s == Subregime::PartialCollapse ? "PartialCollapse" : "SaturatedSingleClass";
}

std::string_view to_string(OutcomeClass c) {
    switch (c) {
        case OutcomeClass::C0: return "C0";
        case OutcomeClass::C1: return "C1";
        case OutcomeClass::C2: return "C2";
        case OutcomeClass::C3: return "C3";
    }
    return "?";
}

Timing timing_from_string(std::string_view s) {
    if (s == "During") return Timing::During;
    if (s == "Before") return Timing::Before;
    throw ConfigError("unknown timing '" + std::string(s) + "' (expected During or Before)");
}

Mode mode_from_string(std::string_view s) {
    if (s == "Sync") return Mode::Sync;
    if (s == "Async") return Mode::Async;
    throw ConfigError("unknown mode '" + std::string(s) + "' (expected Sync or Async)");
}

Orientation orientation_from_string(std::string_view s) {
    if (s == "CW") return Orientation::CW;
    if (s == "CCW") return Orientation::CCW;
    throw ConfigError("unknown orientation '" + std::string(s) + "'");
}

OutcomeClass outcome_class_from_string(std::string_view s) {
    if (s == "C0") return OutcomeClass::C0;
    if (s == "C1") return OutcomeClass::C1;
    if (s == "C2") return OutcomeClass::C2;
    if (s == "C3") return OutcomeClass::C3;
    throw DataError("unknown outcome class '" + std::string(s) + "'");
}

}  // namespace emfi

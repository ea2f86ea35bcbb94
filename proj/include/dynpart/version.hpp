#pragma once

namespace dynpart {

inline constexpr const char* kVersion = "1.0.0";

// Format tags embedded in file headers so readers can reject
// incompatible files.
inline constexpr const char* kCsvFormatVersion = "dynpart-csv v1";
inline constexpr const char* kCheckpointFormatVersion = "dynpart-checkpoint v1";
inline constexpr int kSummaryFormatVersion = 1;

}  // namespace dynpart

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace dsac {

enum class ShiftKind { Speckle, Streak, Blur };

/// Test-time observation corruption. Magnitude 0 is a bit-exact identity.
struct ShiftSpec {
    ShiftKind kind = ShiftKind::Speckle;
    double magnitude = 0.0;
    std::uint64_t seed = 0;
};

const char* to_string(ShiftKind kind);

/// Parses "speckle:0.3:seed=7" (seed part optional).
ShiftSpec parse_shift(const std::string& text);

std::string to_string(const ShiftSpec& spec);

/// Speckle: seeded replacement of a magnitude-fraction of coordinates with the
/// observation's max value. Streak: additive stripes of amplitude magnitude.
/// Blur: convex mix of each coordinate with its neighborhood average.
std::vector<double> apply_shift(std::span<const double> obs, const ShiftSpec& spec);

}  // namespace dsac

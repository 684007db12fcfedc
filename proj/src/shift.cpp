#include "dsac/shift.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "dsac/errors.hpp"
#include "dsac/rng.hpp"

namespace dsac {

const char* to_string(ShiftKind kind) {
    switch (kind) {
        case ShiftKind::Speckle: return "speckle";
        case ShiftKind::Streak: return "streak";
        case ShiftKind::Blur: return "blur";
    }
    return "unknown";
}

ShiftSpec parse_shift(const std::string& text) {
    std::vector<std::string> parts;
    std::stringstream stream(text);
    std::string piece;
    while (std::getline(stream, piece, ':')) parts.push_back(piece);
    if (parts.size() < 2 || parts.size() > 3) {
        throw UsageError("shift spec must be kind:magnitude[:seed=N], got \"" + text + "\"");
    }
    ShiftSpec spec;
    if (parts[0] == "speckle") spec.kind = ShiftKind::Speckle;
    else if (parts[0] == "streak") spec.kind = ShiftKind::Streak;
    else if (parts[0] == "blur") spec.kind = ShiftKind::Blur;
    else throw UsageError("unknown shift kind \"" + parts[0] + "\"");
    try {
        std::size_t used = 0;
        spec.magnitude = std::stod(parts[1], &used);
        if (used != parts[1].size()) throw std::invalid_argument(parts[1]);
    } catch (const std::exception&) {
        throw UsageError("shift magnitude is not a number: \"" + parts[1] + "\"");
    }
    if (!(spec.magnitude >= 0.0)) throw UsageError("shift magnitude must be >= 0");
    if (parts.size() == 3) {
        if (parts[2].rfind("seed=", 0) != 0) {
            throw UsageError("third shift field must be seed=N, got \"" + parts[2] + "\"");
        }
        try {
            spec.seed = std::stoull(parts[2].substr(5));
        } catch (const std::exception&) {
            throw UsageError("shift seed is not an integer: \"" + parts[2] + "\"");
        }
    }
    return spec;
}

std::string to_string(const ShiftSpec& spec) {
    std::ostringstream out;
    out << to_string(spec.kind) << ":" << spec.magnitude << ":seed=" << spec.seed;
    return out.str();
}

std::vector<double> apply_shift(std::span<const double> obs, const ShiftSpec& spec) {
    if (!(spec.magnitude >= 0.0)) throw UsageError("apply_shift: magnitude must be >= 0");
    for (double v : obs) {
        if (!std::isfinite(v)) throw UsageError("apply_shift: non-finite observation");
    }
    std::vector<double> out(obs.begin(), obs.end());
    if (spec.magnitude == 0.0 || obs.empty()) return out;  // identity, bit-exact

    const std::size_t n = obs.size();
    Rng rng(mix_seed(spec.seed, 0x736869667421ull));
    switch (spec.kind) {
        case ShiftKind::Speckle: {
            double top = *std::max_element(obs.begin(), obs.end());
            for (std::size_t i = 0; i < n; ++i) {
                if (rng.uniform() < spec.magnitude) out[i] = top;
            }
            break;
        }
        case ShiftKind::Streak: {
            const int period = 3;
            const int phase = rng.uniform_int(period);
            for (std::size_t i = 0; i < n; ++i) {
                if (static_cast<int>(i % period) == phase) out[i] += spec.magnitude;
            }
            break;
        }
        case ShiftKind::Blur: {
            const double m = std::min(spec.magnitude, 1.0);
            for (std::size_t i = 0; i < n; ++i) {
                std::size_t lo = (i == 0) ? 0 : i - 1;
                std::size_t hi = (i + 1 < n) ? i + 1 : n - 1;
                double acc = 0.0;
                int count = 0;
                for (std::size_t j = lo; j <= hi; ++j) {
                    acc += obs[j];
                    ++count;
                }
                out[i] = (1.0 - m) * obs[i] + m * (acc / count);
            }
            break;
        }
    }
    return out;
}

}  // namespace dsac
